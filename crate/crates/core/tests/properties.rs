use std::collections::BTreeSet;

use geowalk_core::geodesic::{compute_bias, TieBreak};
use geowalk_core::linalg::rational_to_f64;
use geowalk_core::markov::GeodesicWalk;
use geowalk_core::{io, ExcitationSet, Graph, LabeledInstance, VertexId};
use proptest::prelude::*;

/// Edge list on `n` vertices, optionally forced connected by a random tree.
fn edge_list(max_n: usize, connected: bool) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_n).prop_flat_map(move |n| {
        let tree = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n), 0..2 * n);
        (Just(n), tree, extra).prop_map(move |(n, tree, extra)| {
            let mut set = BTreeSet::new();
            if connected {
                for (i, p) in tree.iter().enumerate() {
                    let child = i + 1;
                    set.insert((p.index(child), child));
                }
            }
            for (u, v) in extra {
                if u != v {
                    set.insert((u.min(v), u.max(v)));
                }
            }
            (n, set.into_iter().collect())
        })
    })
}

fn instance(max_n: usize) -> impl Strategy<Value = LabeledInstance> {
    edge_list(max_n, true).prop_flat_map(|(n, edges)| {
        let mask = proptest::collection::vec(any::<bool>(), n);
        (Just(n), Just(edges), mask, 0..n, 0..n).prop_map(|(n, edges, mask, a, b)| {
            let graph = Graph::build(n, &edges, Default::default()).unwrap();
            let excited = ExcitationSet::new(&graph, (0..n).filter(|&i| mask[i]).map(VertexId)).unwrap();
            LabeledInstance {
                graph,
                a: VertexId(a),
                b: VertexId(b),
                excited,
                params: Default::default(),
            }
        })
    })
}

fn union_find_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v) in edges {
        let (ru, rv) = (root(&mut parent, u), root(&mut parent, v));
        parent[ru] = rv;
    }
    let r0 = root(&mut parent, 0);
    (0..n).all(|x| root(&mut parent, x) == r0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn json_round_trip(inst in instance(12)) {
        let back = io::from_json(&io::to_json(&inst)).unwrap();
        prop_assert_eq!(&back.graph, &inst.graph);
        prop_assert_eq!(&back.excited, &inst.excited);
        prop_assert_eq!((back.a, back.b), (inst.a, inst.b));
    }

    #[test]
    fn connectivity_matches_union_find((n, edges) in edge_list(12, false)) {
        let g = Graph::build(n, &edges, Default::default()).unwrap();
        prop_assert_eq!(g.validate().connected, union_find_connected(n, &edges));
    }

    #[test]
    fn handshake(inst in instance(14)) {
        let g = &inst.graph;
        let sum: usize = g.vertices().map(|v| g.degree(v)).sum();
        prop_assert_eq!(sum, 2 * g.edge_count());
        let hist = g.validate().degree_histogram;
        prop_assert_eq!(hist.iter().sum::<usize>(), g.n());
    }

    #[test]
    fn forced_steps_strictly_progress(inst in instance(14), largest in any::<bool>()) {
        let rule = if largest { TieBreak::LargestId } else { TieBreak::SmallestId };
        let (field, bias) = compute_bias(&inst.graph, inst.b, &inst.excited, rule).unwrap();
        for x in inst.graph.vertices() {
            match bias.forced_step(x) {
                Some(y) => {
                    prop_assert!(inst.excited.contains(x) && x != inst.b);
                    prop_assert!(inst.graph.has_edge(x, y));
                    prop_assert_eq!(field.get(y) + 1, field.get(x));
                }
                None => prop_assert!(!inst.excited.contains(x) || x == inst.b),
            }
        }
        // Following forced steps never cycles: at most dist(x) of them.
        for x in inst.excited.iter() {
            let mut cur = x;
            let mut hops = 0;
            while let Some(y) = bias.forced_step(cur) {
                cur = y;
                hops += 1;
                prop_assert!(hops <= field.get(x));
            }
        }
    }

    #[test]
    fn rows_are_stochastic(inst in instance(14)) {
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).unwrap();
        for tm in [walk.free_matrix(), walk.transition_matrix()] {
            for x in inst.graph.vertices() {
                prop_assert_eq!(tm.row_sum(x), 1.into());
            }
        }
    }

    #[test]
    fn hitting_times_satisfy_first_step(inst in instance(14)) {
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).unwrap();
        let t = walk.hitting_times(1e-9).unwrap();
        let tm = walk.transition_matrix();
        prop_assert_eq!(t.time(inst.b), 0.0);
        for x in inst.graph.vertices().filter(|&x| x != inst.b) {
            let rhs: f64 = 1.0 + tm.row_f64(x).iter().map(|&(y, p)| p * t.time(y)).sum::<f64>();
            prop_assert!((t.time(x) - rhs).abs() <= 1e-9 * rhs, "x={} T={} rhs={}", x, t.time(x), rhs);
        }
    }

    #[test]
    fn float_matches_rational(inst in instance(12)) {
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).unwrap();
        let f = walk.hitting_times(1e-9).unwrap().times;
        let e = walk.hitting_times_exact(inst.b).unwrap();
        for (x, q) in f.iter().zip(&e) {
            let q = rational_to_f64(q);
            prop_assert!((x - q).abs() <= 1e-9 * q.max(1.0));
        }
    }

    #[test]
    fn induced_chain_preserves_absorption(inst in instance(12), keep in proptest::collection::vec(any::<bool>(), 12)) {
        let n = inst.graph.n();
        prop_assume!(n >= 3);
        let (avoid, b) = (inst.a, inst.b);
        prop_assume!(avoid != b);
        let walk = GeodesicWalk::new(&inst.graph, b, &inst.excited).unwrap();
        let full = walk.absorption(&[avoid], &[b], 1e-9).unwrap();
        let start = (0..n).map(VertexId).find(|&v| v != avoid && v != b).unwrap();
        let states: Vec<VertexId> = (0..n)
            .map(VertexId)
            .filter(|&v| v == avoid || v == b || v == start || keep[v.0])
            .collect();
        let chain = walk.induce_chain(&states, &[avoid, b], 1e-9).unwrap();
        let p = chain.absorption(start, &[b]).unwrap();
        prop_assert!((p - full.prob(start)).abs() <= 1e-9, "chain {} full {}", p, full.prob(start));
    }
}
