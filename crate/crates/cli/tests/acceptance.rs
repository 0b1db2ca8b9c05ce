//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use geowalk_core::bounds::{excursion_bounds, lemma1_lower_bound, lemma1_step_ratio};
use geowalk_core::constructions::{
    bounded_construction, isqrt, path_construction, trap_construction, unbounded_construction,
};
use geowalk_core::linalg::rational_to_f64;
use geowalk_core::markov::{retrace_probability_exact, GeodesicWalk};
use geowalk_core::sweep::{chernoff_step_failures, relaxation_failures};
use geowalk_core::{io, ExcitationSet, LabeledInstance, Simulator, VertexId};

type Check = Result<String, String>;

const TOL: f64 = 1e-9;

fn close(x: f64, want: f64, rel: f64) -> bool {
    (x - want).abs() <= rel * want.abs().max(1.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(budget: Duration, started: Instant) -> Result<(), String> {
    let t = started.elapsed();
    ensure(t < budget, || format!("took {t:.2?}, budget {budget:?}"))
}

fn err(e: geowalk_core::Error) -> String {
    e.to_string()
}

fn spine(inst: &LabeledInstance, m: u64) -> Vec<VertexId> {
    (1..=m).map(|j| inst.vertex(&format!("v{j}"))).collect()
}

fn hitting(inst: &LabeledInstance, excited: &ExcitationSet) -> Result<(f64, Vec<f64>), String> {
    let walk = GeodesicWalk::new(&inst.graph, inst.b, excited).map_err(err)?;
    let t = walk.hitting_times(TOL).map_err(err)?;
    Ok((t.time(inst.a), t.times))
}

fn gamblers_ruin() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=100u64 {
        let inst = path_construction(n).map_err(err)?;
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).map_err(err)?;
        let q = walk.absorption(&[inst.a], &[inst.b], TOL).map_err(err)?.prob(VertexId(1));
        let d = (q - 1.0 / n as f64).abs();
        worst = worst.max(d);
        ensure(d <= 1e-12, || format!("n={n}: got {q}"))?;
    }
    within(Duration::from_secs(1), started)?;
    Ok(format!("n=2..100, max |q - 1/n| = {worst:.1e}, {:.2?}", started.elapsed()))
}

fn epsilon_retrace() -> Check {
    let started = Instant::now();
    for m in 1..=12u64 {
        let inst = bounded_construction(m).map_err(err)?;
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).map_err(err)?;
        let vs = spine(&inst, m);
        let states: Vec<VertexId> = std::iter::once(inst.a).chain(vs.iter().copied()).chain([inst.b]).collect();
        let chain = walk.induce_chain(&states, &[inst.a, inst.b], TOL).map_err(err)?;
        let eps = 1.0 / (4 * m + 5) as f64;
        let side = (1.0 - eps) / 2.0;
        for (idx, &v) in vs.iter().enumerate() {
            let left = states[idx];
            let right = states[idx + 2];
            // From v_1 the left neighbour is a itself, so the two masses add.
            let (want_a, want_left) = if left == inst.a { (eps + side, eps + side) } else { (eps, side) };
            let (got_a, got_l, got_r) = (chain.entry(v, inst.a), chain.entry(v, left), chain.entry(v, right));
            ensure(
                (got_a - want_a).abs() <= TOL && (got_l - want_left).abs() <= TOL && (got_r - side).abs() <= TOL,
                || format!("m={m} v{}: a={got_a} left={got_l} right={got_r}, want eps={eps}", idx + 1),
            )?;
        }
    }
    within(Duration::from_secs(10), started)?;
    Ok(format!("m=1..12, {:.2?}", started.elapsed()))
}

fn lemma1() -> Check {
    let started = Instant::now();
    let mut summary = Vec::new();
    for k in [4u64, 9, 16, 25] {
        let inst = unbounded_construction(k).map_err(err)?;
        let m = isqrt(k);
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).map_err(err)?;
        let targets: Vec<VertexId> = spine(&inst, m).into_iter().chain([inst.b]).collect();
        let mut t = Vec::new();
        for &v in &targets {
            t.push(walk.hitting_times_to(v, TOL).map_err(err)?.time(inst.a));
        }
        for (idx, &tj) in t.iter().enumerate() {
            let j = idx as u64 + 1;
            let bound = lemma1_lower_bound(k, j).map_err(err)?.linear.ok_or("bound overflow")?;
            ensure(tj >= bound * (1.0 - TOL), || format!("k={k} j={j}: T={tj} < {bound}"))?;
        }
        for j in 1..=m {
            let (tj, tj1) = (t[j as usize - 1], t[j as usize]);
            let need = lemma1_step_ratio(k, j) * tj;
            ensure(tj1 >= need * (1.0 - TOL), || format!("k={k} j={j}: T(v_j+1)={tj1} < {need}"))?;
        }
        summary.push(format!("k={k}: T(a,b)={:.6e}", t[m as usize]));
    }
    within(Duration::from_secs(30), started)?;
    Ok(format!("{}, {:.2?}", summary.join("; "), started.elapsed()))
}

fn lemma2() -> Check {
    let started = Instant::now();
    let mut summary = Vec::new();
    for m in [4u64, 9, 16] {
        let inst = bounded_construction(m).map_err(err)?;
        let v1 = inst.vertex("v1");
        let (t_ab, times) = hitting(&inst, &inst.excited)?;
        let t_v1 = times[v1.0];
        let ex = excursion_bounds(m).map_err(err)?;
        let bound = ex.ln_t_bound_simplified.exp();
        ensure(t_v1 >= bound * (1.0 - TOL), || format!("m={m}: T(v1,b)={t_v1} < {bound}"))?;
        ensure(close(t_ab, 1.0 + t_v1, TOL), || format!("m={m}: T(a,b)={t_ab} vs 1+T(v1,b)={}", 1.0 + t_v1))?;
        summary.push(format!("m={m} n={}: T(v1,b)={t_v1:.6e}", inst.n()));
    }
    within(Duration::from_secs(60), started)?;
    Ok(format!("{}, {:.2?}", summary.join("; "), started.elapsed()))
}

fn trap_gap(c: u64) -> Result<(f64, f64), String> {
    let inst = trap_construction(c).map_err(err)?;
    let (excited, _) = hitting(&inst, &inst.excited)?;
    let (plain, _) = hitting(&inst, &ExcitationSet::empty())?;
    Ok((excited, plain))
}

fn trap() -> Check {
    let mut prev_gap = f64::NEG_INFINITY;
    let mut summary = Vec::new();
    for c in [5u64, 20, 50] {
        let (excited, plain) = trap_gap(c)?;
        let gap = excited - plain;
        ensure(gap > 0.0, || format!("c={c}: excited {excited} <= plain {plain}"))?;
        ensure(gap > prev_gap, || format!("c={c}: gap {gap} not above {prev_gap}"))?;
        prev_gap = gap;
        summary.push(format!("c={c}: gap={gap:.4}"));
    }
    Ok(summary.join("; "))
}

fn exact_vs_mc() -> Check {
    const TRIALS: u64 = 100_000;
    const CAP: u64 = 1_000_000;
    let instances = [
        ("path(2)", path_construction(2).map_err(err)?),
        ("trap(5)", trap_construction(5).map_err(err)?),
        ("unbounded(4)", unbounded_construction(4).map_err(err)?),
    ];
    let mut summary = Vec::new();
    for (name, inst) in &instances {
        let (exact, _) = hitting(inst, &inst.excited)?;
        if *name == "path(2)" {
            ensure(close(exact, 4.0, TOL), || format!("path(2): T={exact}, want 4"))?;
        }
        let sim = Simulator::new(&inst.graph, inst.b, &inst.excited).map_err(err)?;
        let mut worst: f64 = 0.0;
        for seed in [1u64, 2, 3] {
            let r = sim.estimate(inst.a, TRIALS, CAP, seed).map_err(err)?;
            ensure(r.censoring_fraction < 1e-3, || format!("{name} seed {seed}: censoring {}", r.censoring_fraction))?;
            let z = (r.mean_hit_time - exact).abs() / r.standard_error;
            worst = worst.max(z);
            ensure(z <= 4.0, || {
                format!("{name} seed {seed}: mc {} +- {} vs exact {exact}", r.mean_hit_time, r.standard_error)
            })?;
        }
        summary.push(format!("{name}: T={exact:.4}, max z={worst:.2}"));
    }
    Ok(summary.join("; "))
}

fn rel_diff(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)
}

fn compare(label: &str, float: &[f64], exact: &[f64], worst: &mut f64) -> Result<(), String> {
    for (v, (&f, &e)) in float.iter().zip(exact).enumerate() {
        let d = if e == 0.0 { f.abs() } else { rel_diff(f, e) };
        *worst = worst.max(d);
        ensure(d <= TOL, || format!("{label} vertex {v}: float {f} vs exact {e}"))?;
    }
    Ok(())
}

fn to_f64(xs: &[num_rational::BigRational]) -> Vec<f64> {
    xs.iter().map(rational_to_f64).collect()
}

fn oracle_equivalence() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 2..=100u64 {
        let inst = path_construction(n).map_err(err)?;
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).map_err(err)?;
        let f = walk.absorption(&[inst.a], &[inst.b], TOL).map_err(err)?.q;
        let e = to_f64(&walk.absorption_exact(&[inst.a], &[inst.b]).map_err(err)?);
        compare(&format!("path({n}) absorption"), &f, &e, &mut worst)?;
        count += 1;
    }
    for m in 1..=12u64 {
        let f = geowalk_core::markov::retrace_probability(m, TOL).map_err(err)?.per_vertex;
        let e = retrace_probability_exact(m).map_err(err)?;
        let want = format!("1/{}", 4 * m + 5);
        ensure(e.iter().all(|q| q.to_string() == want), || format!("bounded({m}): exact retrace {e:?}"))?;
        compare(&format!("bounded({m}) retrace"), &f, &to_f64(&e), &mut worst)?;
        count += 1;
    }
    let mut hitting_cases: Vec<(String, LabeledInstance, Vec<VertexId>)> = Vec::new();
    for k in [4u64, 9, 16, 25] {
        let inst = unbounded_construction(k).map_err(err)?;
        let goals = spine(&inst, isqrt(k)).into_iter().chain([inst.b]).collect();
        hitting_cases.push((format!("unbounded({k})"), inst, goals));
    }
    for m in [4u64, 9, 16] {
        let inst = bounded_construction(m).map_err(err)?;
        let goals = vec![inst.b];
        hitting_cases.push((format!("bounded({m})"), inst, goals));
    }
    for c in [5u64, 20, 50] {
        let inst = trap_construction(c).map_err(err)?;
        let plain = inst.with_excited(ExcitationSet::empty());
        let goals = vec![inst.b];
        hitting_cases.push((format!("trap({c})"), inst, goals.clone()));
        hitting_cases.push((format!("trap({c}) unexcited"), plain, goals));
    }
    for (name, inst, goals) in &hitting_cases {
        if inst.n() > 2000 {
            continue;
        }
        let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).map_err(err)?;
        for &g in goals {
            let f = walk.hitting_times_to(g, TOL).map_err(err)?.times;
            let e = to_f64(&walk.hitting_times_exact(g).map_err(err)?);
            compare(&format!("{name} goal {g}"), &f, &e, &mut worst)?;
            count += 1;
        }
    }
    Ok(format!("{count} systems, max rel diff {worst:.1e}, {:.2?}", started.elapsed()))
}

fn structural_goldens() -> Check {
    for m in 1..=100u64 {
        let inst = bounded_construction(m).map_err(err)?;
        let n = 2 + m * (2 * m + 3);
        ensure(inst.n() as u64 == n, || format!("bounded({m}): n={} want {n}", inst.n()))?;
        let d = inst.graph.validate().max_degree;
        ensure(d == 3, || format!("bounded({m}): max degree {d}"))?;
    }
    for k in 1..=100u64 {
        let inst = unbounded_construction(k).map_err(err)?;
        let m = isqrt(k);
        let n = 2 + m + k * m * (m + 1) / 2;
        ensure(inst.n() as u64 == n, || format!("unbounded({k}): n={} want {n}", inst.n()))?;
        for v in spine(&inst, m) {
            let d = inst.graph.degree(v) as u64;
            ensure(d == k + 2, || format!("unbounded({k}): deg({v})={d}"))?;
        }
    }
    Ok("bounded m=1..100, unbounded k=1..100".into())
}

fn inequality_sweeps() -> Check {
    let started = Instant::now();
    let relax = relaxation_failures(10_000);
    ensure(relax.is_empty(), || format!("relaxation fails at m={:?}", &relax[..relax.len().min(5)]))?;
    let chern = chernoff_step_failures(1_000);
    ensure(chern.is_empty(), || format!("chernoff step fails at {:?}", &chern[..chern.len().min(5)]))?;
    within(Duration::from_secs(10), started)?;
    Ok(format!("relaxation m<=1e4, chernoff step m<=1e3, {:.2?}", started.elapsed()))
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geowalk-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn geowalk(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_geowalk"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("geowalk {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn reproducibility() -> Check {
    let dir = scratch_dir();
    let graph = dir.join("unbounded4.json");
    fs::write(&graph, io::to_json(&unbounded_construction(4).map_err(err)?)).map_err(|e| e.to_string())?;
    let graph = graph.to_str().unwrap();
    let mut runs = Vec::new();
    for (i, threads) in ["1", "4", "1", "8"].iter().enumerate() {
        let csv = dir.join(format!("run{i}.csv"));
        let traj = dir.join(format!("run{i}.traj"));
        geowalk(&[
            "simulate", "--input", graph, "--trials", "20000", "--max-steps", "100000", "--seed", "42",
            "--threads", threads, "--record", "--trajectories", traj.to_str().unwrap(),
            "--out", csv.to_str().unwrap(),
        ])?;
        let bytes = (fs::read(&csv).map_err(|e| e.to_string())?, fs::read(&traj).map_err(|e| e.to_string())?);
        runs.push((threads.to_string(), bytes));
    }
    let _ = fs::remove_dir_all(&dir);
    let (_, first) = &runs[0];
    for (threads, bytes) in &runs[1..] {
        ensure(bytes.0 == first.0, || format!("CSV differs with --threads {threads}"))?;
        ensure(bytes.1 == first.1, || format!("trajectories differ with --threads {threads}"))?;
    }
    Ok(format!("{} runs over threads 1/4/8, CSV {} bytes", runs.len(), first.0.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("gambler's ruin exactness", gamblers_ruin),
        ("retrace probability", epsilon_retrace),
        ("single-excitation lower bound", lemma1),
        ("bounded-degree lower bound", lemma2),
        ("trap slowdown", trap),
        ("exact vs Monte Carlo", exact_vs_mc),
        ("float vs rational oracle", oracle_equivalence),
        ("structural goldens", structural_goldens),
        ("inequality sweeps", inequality_sweeps),
        ("thread-count reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = run();
        let t = started.elapsed();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{t:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
