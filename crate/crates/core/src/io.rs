//! Graph interchange files (JSON) and DOT export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constructions::LabeledInstance;
use crate::error::{Error, Result};
use crate::graph::{ExcitationSet, Graph, VertexId};

/// On-disk form of a walk instance. Unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default)]
    pub excited: Vec<usize>,
    pub source: usize,
    pub target: usize,
}

impl GraphFile {
    pub fn from_instance(inst: &LabeledInstance) -> Self {
        let g = &inst.graph;
        GraphFile {
            n: g.n(),
            edges: g.edges().map(|(u, v)| [u.0, v.0]).collect(),
            labels: g.labels().iter().map(|(v, l)| (v.to_string(), l.clone())).collect(),
            excited: inst.excited.iter().map(|v| v.0).collect(),
            source: inst.a.0,
            target: inst.b.0,
        }
    }

    pub fn into_instance(self) -> Result<LabeledInstance> {
        let labels = self
            .labels
            .into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|id| (VertexId(id), v))
                    .map_err(|_| Error::InvalidInput(format!("label key {k:?} is not a vertex id")))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = Graph::build(self.n, &edges, labels)?;
        for v in [self.source, self.target] {
            if v >= self.n {
                return Err(Error::EndpointOutOfRange { vertex: v, n: self.n });
            }
        }
        let excited = ExcitationSet::new(&graph, self.excited.into_iter().map(VertexId))?;
        Ok(LabeledInstance {
            graph,
            a: VertexId(self.source),
            b: VertexId(self.target),
            excited,
            params: BTreeMap::new(),
        })
    }
}

pub fn to_json(inst: &LabeledInstance) -> String {
    // Emit labels in numeric id order rather than string order.
    let file = GraphFile::from_instance(inst);
    let mut labels = serde_json::Map::new();
    let mut keyed: Vec<(usize, &String)> = file.labels.iter().map(|(k, v)| (k.parse().unwrap(), v)).collect();
    keyed.sort();
    for (k, v) in keyed {
        labels.insert(k.to_string(), serde_json::Value::String(v.clone()));
    }
    let value = serde_json::json!({
        "n": file.n,
        "edges": file.edges,
        "labels": labels,
        "excited": file.excited,
        "source": file.source,
        "target": file.target,
    });
    let mut out = serde_json::to_string_pretty(&value).expect("json serialization");
    out.push('\n');
    out
}

pub fn from_json(text: &str) -> Result<LabeledInstance> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("graph file: {e}")))?;
    file.into_instance()
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering: excited vertices filled, source boxed, target double-circled.
pub fn to_dot(inst: &LabeledInstance) -> String {
    let g = &inst.graph;
    let mut out = String::from("graph geowalk {\n  node [shape=circle];\n");
    for v in g.vertices() {
        let mut attrs = vec![format!("label=\"{}\"", dot_escape(&g.display_name(v)))];
        if inst.excited.contains(v) {
            attrs.push("excited=true".into());
            attrs.push("style=filled".into());
            attrs.push("fillcolor=orange".into());
        }
        if v == inst.a {
            attrs.push("role=source".into());
            attrs.push("shape=box".into());
        }
        if v == inst.b {
            attrs.push("role=target".into());
            attrs.push("shape=doublecircle".into());
        }
        let _ = writeln!(out, "  {} [{}];", v, attrs.join(", "));
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "  {u} -- {v};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{bounded_construction, path_construction};

    #[test]
    fn round_trip_bounded() {
        let inst = bounded_construction(3).unwrap();
        let back = from_json(&to_json(&inst)).unwrap();
        assert_eq!(back.graph, inst.graph);
        assert_eq!(back.excited, inst.excited);
        assert_eq!((back.a, back.b), (inst.a, inst.b));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"n":2,"edges":[[0,1]],"source":0,"target":1,"colour":"red"}"#;
        assert!(matches!(from_json(text), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn minimal_file_and_field_order() {
        let text = r#"{"target":1,"edges":[[1,0]],"source":0,"n":2}"#;
        let inst = from_json(text).unwrap();
        assert_eq!(inst.graph.edge_count(), 1);
        assert!(inst.excited.is_empty());
    }

    #[test]
    fn bad_files() {
        assert!(from_json(r#"{"n":2,"edges":[[0,0]],"source":0,"target":1}"#).is_err());
        assert!(from_json(r#"{"n":2,"edges":[[0,1]],"source":0,"target":2}"#).is_err());
        assert!(from_json(r#"{"n":2,"edges":[[0,1]],"labels":{"x":"a"},"source":0,"target":1}"#).is_err());
        assert!(from_json(r#"{"n":2,"edges":[[0,1]],"excited":[5],"source":0,"target":1}"#).is_err());
    }

    #[test]
    fn dot_marks_roles() {
        let inst = bounded_construction(1).unwrap();
        let dot = to_dot(&inst);
        assert!(dot.contains("0 [label=\"a\", excited=true, style=filled, fillcolor=orange, role=source, shape=box];"));
        assert!(dot.contains("role=target"));
        assert_eq!(dot.matches(" -- ").count(), inst.graph.edge_count());
        let p = to_dot(&path_construction(2).unwrap());
        assert!(!p.contains("excited"));
    }
}
