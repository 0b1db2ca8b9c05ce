use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use geowalk_core::constructions::{unbounded_construction_with_m, Construction};
use geowalk_core::sweep::{self, Analysis, ExactOptions, SweepOptions};
use geowalk_core::{io, report, simulate, Error, LabeledInstance, Simulator, TieBreak};
use serde::Serialize;
use sha2::{Digest, Sha256};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "geowalk", version, about = "Geodesic-biased random walks on finite graphs")]
struct Cli {
    /// Where to write the run manifest (default: next to --out, else stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a construction and write it as a graph file.
    Gen(GenArgs),
    /// Print the forced-step table of the excited vertices.
    Bias(BiasArgs),
    /// Solve for expected hitting times of the target.
    Exact(ExactArgs),
    /// Estimate the hitting time by Monte Carlo.
    Simulate(SimulateArgs),
    /// Check the bounds attached to a construction against exact values.
    Verify(RangeArgs),
    /// Run analyses over a parameter range.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    construction: String,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    clique: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "tie-break", default_value = "min")]
    tie_break: String,
}

#[derive(Args, Debug)]
struct BiasArgs {
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long)]
    rational: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long)]
    trials: u64,
    #[arg(long = "max-steps")]
    max_steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write one trajectory per line.
    #[arg(long)]
    record: bool,
    /// Trajectory file (default: trajectories.txt, or <out>.trajectories).
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct RangeArgs {
    #[arg(long)]
    construction: String,
    #[arg(long)]
    param: u64,
    #[arg(long = "max-param")]
    max_param: Option<u64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    range: RangeArgs,
    /// Comma-separated subset of exact,simulate,verify.
    #[arg(long, default_value = "exact")]
    analyses: String,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long = "max-steps", default_value_t = 100_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

/// Record of one invocation. Everything except the wall time is a pure
/// function of the command line and the input file.
#[derive(Serialize, Debug)]
struct RunManifest {
    command_line: Vec<String>,
    input_sha256: Option<String>,
    seed: Option<u64>,
    tool_version: &'static str,
    wall_time_seconds: f64,
    outputs: Vec<String>,
}

enum Failure {
    Usage(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            other => Failure::Analysis(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Default)]
struct Run {
    input_sha256: Option<String>,
    seed: Option<u64>,
    outputs: Vec<String>,
    /// Set when the command finished but its analysis did not succeed.
    failed: bool,
}

impl Run {
    fn load(&mut self, path: &Path) -> CmdResult<LabeledInstance> {
        let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        self.input_sha256 = Some(format!("{:x}", Sha256::digest(&bytes)));
        let text = String::from_utf8(bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Ok(io::from_json(&text)?)
    }

    fn emit(&mut self, out: Option<&Path>, text: &str) -> CmdResult<()> {
        match out {
            Some(p) => {
                fs::write(p, text)?;
                self.outputs.push(p.display().to_string());
            }
            None => {
                print!("{text}");
                self.outputs.push("stdout".into());
            }
        }
        Ok(())
    }
}

fn tie_break(s: &str) -> CmdResult<TieBreak> {
    Ok(s.parse::<TieBreak>()?)
}

fn construction(s: &str) -> CmdResult<Construction> {
    Ok(s.parse::<Construction>()?)
}

fn cmd_gen(run: &mut Run, a: &GenArgs) -> CmdResult<()> {
    let c = construction(&a.construction)?;
    let need = |v: Option<u64>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("--construction {} needs --{flag}", c.name())));
    let inst = match c {
        Construction::Unbounded => match a.m {
            // Expert override: spine length independent of k.
            Some(m) => unbounded_construction_with_m(need(a.k, "k")?, m)?,
            None => c.build(need(a.k, "k")?)?,
        },
        Construction::Bounded => c.build(need(a.m, "m")?)?,
        Construction::Trap => c.build(need(a.clique, "clique")?)?,
        Construction::Path => c.build(need(a.n, "n")?)?,
    };
    run.emit(Some(&a.out), &io::to_json(&inst))?;
    if let Some(dot) = &a.dot {
        run.emit(Some(dot), &io::to_dot(&inst))?;
    }
    Ok(())
}

fn cmd_bias(run: &mut Run, a: &BiasArgs) -> CmdResult<()> {
    let inst = run.load(&a.io.input)?;
    let csv = sweep::bias_csv(&inst, tie_break(&a.io.tie_break)?)?;
    run.emit(a.io.out.as_deref(), &csv)
}

fn cmd_exact(run: &mut Run, a: &ExactArgs) -> CmdResult<()> {
    let inst = run.load(&a.io.input)?;
    let opts = ExactOptions {
        rational: a.rational,
        tol: a.tol,
        tie_break: tie_break(&a.io.tie_break)?,
    };
    let csv = sweep::exact_csv(&inst, &opts)?;
    run.emit(a.io.out.as_deref(), &csv)
}

fn cmd_simulate(run: &mut Run, a: &SimulateArgs) -> CmdResult<()> {
    let inst = run.load(&a.io.input)?;
    run.seed = Some(a.seed);
    let sim = Simulator::with_tie_break(&inst.graph, inst.b, &inst.excited, tie_break(&a.io.tie_break)?)?;
    let (est, paths) = simulate::with_threads(a.threads, || {
        if a.record {
            sim.estimate_recorded(inst.a, a.trials, a.max_steps, a.seed)
                .map(|(r, p)| (r, Some(p)))
        } else {
            sim.estimate(inst.a, a.trials, a.max_steps, a.seed).map(|r| (r, None))
        }
    })??;
    run.emit(a.io.out.as_deref(), &report::estimate_csv(&est))?;
    if let Some(paths) = paths {
        let file = a.trajectories.clone().unwrap_or_else(|| match &a.io.out {
            Some(o) => PathBuf::from(format!("{}.trajectories", o.display())),
            None => PathBuf::from("trajectories.txt"),
        });
        let mut text = String::new();
        for p in paths {
            let ids: Vec<String> = p.iter().map(ToString::to_string).collect();
            text += &ids.join(" ");
            text.push('\n');
        }
        run.emit(Some(&file), &text)?;
    }
    Ok(())
}

fn param_range(a: &RangeArgs) -> CmdResult<Vec<u64>> {
    let hi = a.max_param.unwrap_or(a.param);
    if hi < a.param {
        return Err(Failure::Usage(format!("empty parameter range {}..={hi}", a.param)));
    }
    Ok((a.param..=hi).collect())
}

fn cmd_verify(run: &mut Run, a: &RangeArgs) -> CmdResult<()> {
    let c = construction(&a.construction)?;
    let reports = sweep::verify(c, &param_range(a)?, a.tol)?;
    run.failed = reports.iter().any(|r| !r.satisfied);
    run.emit(a.out.as_deref(), &report::bound_reports_csv(&reports))
}

fn cmd_sweep(run: &mut Run, a: &SweepArgs) -> CmdResult<()> {
    let c = construction(&a.range.construction)?;
    let params = param_range(&a.range)?;
    let analyses = a
        .analyses
        .split(',')
        .map(|s| s.trim().parse::<Analysis>())
        .collect::<Result<_, _>>()?;
    let opts = SweepOptions {
        analyses,
        trials: a.trials,
        max_steps: a.max_steps,
        seed: a.seed,
        tol: a.range.tol,
    };
    if opts.analyses.contains(&Analysis::Simulate) {
        run.seed = Some(a.seed);
    }
    let rows = simulate::with_threads(a.threads, || sweep::sweep(c, &params, &opts))??;
    run.failed = rows.iter().all(|r| r.failed());
    run.emit(a.range.out.as_deref(), &sweep::sweep_csv(c, &rows))
}

fn manifest_path(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.manifest {
        return Some(p.clone());
    }
    let out = match &cli.command {
        Command::Gen(a) => Some(&a.out),
        Command::Bias(a) => a.io.out.as_ref(),
        Command::Exact(a) => a.io.out.as_ref(),
        Command::Simulate(a) => a.io.out.as_ref(),
        Command::Verify(a) => a.out.as_ref(),
        Command::Sweep(a) => a.range.out.as_ref(),
    }?;
    Some(PathBuf::from(format!("{}.manifest.json", out.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut run = Run::default();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(&mut run, a),
        Command::Bias(a) => cmd_bias(&mut run, a),
        Command::Exact(a) => cmd_exact(&mut run, a),
        Command::Simulate(a) => cmd_simulate(&mut run, a),
        Command::Verify(a) => cmd_verify(&mut run, a),
        Command::Sweep(a) => cmd_sweep(&mut run, a),
    };

    let manifest = RunManifest {
        command_line: std::env::args().collect(),
        input_sha256: run.input_sha256.clone(),
        seed: run.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: run.outputs.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    match manifest_path(&cli) {
        Some(p) => {
            if let Err(e) = fs::write(&p, json + "\n") {
                eprintln!("geowalk: cannot write manifest {}: {e}", p.display());
            }
        }
        None => eprintln!("{json}"),
    }

    match result {
        Ok(()) if run.failed => ExitCode::from(EXIT_FAILURE),
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("geowalk: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Analysis(msg)) => {
            eprintln!("geowalk: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
