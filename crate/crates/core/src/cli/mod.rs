//! Command-line harness: `solve`, `verify`, `sweep` and `gen`.
//!
//! Exit codes: 0 success, 1 a property check failed or a manipulation was
//! found, 2 bad input, 3 the mechanism does not apply to the instance.
//! `ALLOC_EPS` overrides the numeric tolerance.

pub mod harness;
pub mod io;
pub mod sweep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{ingest_trace, GeneratorKind, GeneratorSpec};
use crate::mechanisms::{Mechanism, ScoreSpec};
use crate::model::{partition, social_welfare, utilization, Instance, EPS};
use crate::properties::{sp_probe, verify, DemandGrid, ManipulationFinding, PropertyReport};
use harness::{needs_relabel, run_canonical};
use io::{fmt_num, read_instance, write_instance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ARITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fairalloc", version, about = "Fair multi-resource allocation for Leontief agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a mechanism and print the allocation and its metrics.
    Solve(SolveArgs),
    /// Run a mechanism and check SI, EF, PO and non-wastefulness.
    Verify(VerifyArgs),
    /// Run a seeded experiment sweep described by a config file.
    Sweep(SweepArgs),
    /// Generate an instance file.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct MechanismArgs {
    /// Instance CSV (header r1,...,rm; one row per agent).
    pub instance: PathBuf,
    /// drf, f1, f2, f2star, fg, gf1, hybrid-sw, hybrid-util (fg:SCORE and gf1:R also accepted).
    pub mechanism: String,
    /// Score for `fg`: coord:R, linear:W1,W2,..., max or sqrt.
    #[arg(long)]
    pub score: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub target: MechanismArgs,
    /// Emit a JSON record instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub target: MechanismArgs,
    /// Probe misreports on a grid with K levels per free coordinate.
    #[arg(long, value_name = "K")]
    pub sp_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Config file of key = value lines.
    pub config: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace CSV for `--kind trace`.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::WrongArity { .. } | Error::OutOfDomain(_) => EXIT_ARITY,
        Error::Manipulation { source, .. } => exit_code(source),
        _ => EXIT_INPUT,
    }
}

/// Tolerance from `ALLOC_EPS`, falling back to the library default.
pub fn eps_from_env() -> Result<f64> {
    match std::env::var("ALLOC_EPS") {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(e) if e.is_finite() && e >= 0.0 => Ok(e),
            _ => Err(Error::Config(format!("ALLOC_EPS={v} is not a non-negative number"))),
        },
        Err(_) => Ok(EPS),
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let eps = eps_from_env()?;
    match cli.command {
        Command::Solve(args) => cmd_solve(&args, eps, out),
        Command::Verify(args) => cmd_verify(&args, eps, out),
        Command::Sweep(args) => cmd_sweep(&args, eps, out),
        Command::Gen(args) => cmd_gen(&args, out),
    }
}

fn load(target: &MechanismArgs) -> Result<(Instance, Mechanism)> {
    let mut mechanism: Mechanism = target.mechanism.parse()?;
    if let Some(score) = &target.score {
        match mechanism {
            Mechanism::Fg(_) => mechanism = Mechanism::Fg(score.parse::<ScoreSpec>()?),
            _ => return Err(Error::Config("--score only applies to fg".into())),
        }
    }
    Ok((read_instance(&target.instance)?, mechanism))
}

#[derive(Serialize)]
struct SolveRecord<'a> {
    mechanism: String,
    dispatched: Option<String>,
    relabeled: bool,
    shares: &'a [f64],
    allocation: &'a [Vec<f64>],
    social_welfare: f64,
    utilization: f64,
    exhausted: &'a [usize],
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(",")
}

pub fn cmd_solve(args: &SolveArgs, eps: f64, out: &mut dyn Write) -> Result<i32> {
    let (instance, mechanism) = load(&args.target)?;
    let result = run_canonical(&mechanism, &instance, eps)?;
    let alloc = &result.allocation;
    let record = SolveRecord {
        mechanism: mechanism.tag(),
        dispatched: result.dispatched.as_ref().map(Mechanism::tag),
        relabeled: needs_relabel(&mechanism, &instance),
        shares: &alloc.shares,
        allocation: &alloc.matrix,
        social_welfare: social_welfare(alloc, &instance),
        utilization: utilization(alloc),
        exhausted: &result.exhausted,
    };
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &record).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(out)?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "mechanism: {}", record.mechanism)?;
    if let Some(branch) = &record.dispatched {
        writeln!(out, "dispatched: {branch}")?;
    }
    if record.relabeled {
        writeln!(out, "relabeled: resources swapped for the run")?;
    }
    writeln!(out, "shares: {}", join(record.shares))?;
    writeln!(out, "allocation:")?;
    for row in record.allocation {
        writeln!(out, "  {}", join(row))?;
    }
    writeln!(out, "social_welfare: {}", fmt_num(record.social_welfare))?;
    writeln!(out, "utilization: {}", fmt_num(record.utilization))?;
    let exhausted: Vec<String> = record.exhausted.iter().map(|r| format!("r{}", r + 1)).collect();
    writeln!(out, "exhausted: {}", exhausted.join(","))?;
    Ok(EXIT_OK)
}

fn print_report(out: &mut dyn Write, report: &PropertyReport) -> Result<()> {
    let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
    let si = &report.si;
    writeln!(out, "si: {} (worst agent {}, shortfall {})", mark(si.pass), si.worst_agent, fmt_num(si.shortfall))?;
    writeln!(out, "ef: {} ({} envy pairs)", mark(report.ef.pass), report.ef.envy.len())?;
    for e in report.ef.envy.iter().take(10) {
        writeln!(out, "  agent {} envies agent {} by {}", e.envious, e.envied, fmt_num(e.magnitude))?;
    }
    match &report.po {
        Some(po) => writeln!(out, "po: {} (max column sum {})", mark(po.pass), fmt_num(po.max_column_sum))?,
        None => writeln!(out, "po: FAIL (allocation is wasteful)")?,
    }
    let nw = &report.non_wasteful;
    writeln!(out, "non_wasteful: {} (worst deviation {:e})", mark(nw.pass), nw.worst_deviation)?;
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs, eps: f64, out: &mut dyn Write) -> Result<i32> {
    let (instance, mechanism) = load(&args.target)?;
    let result = run_canonical(&mechanism, &instance, eps)?;
    let report = verify(&result.allocation, &instance, eps)?;
    print_report(out, &report)?;
    let mut finding: Option<ManipulationFinding> = None;
    if let Some(k) = args.sp_grid {
        if k == 0 {
            return Err(Error::Config("--sp-grid needs at least one level".into()));
        }
        // the probe runs the mechanism on the labels given
        let grid = DemandGrid::pinned(instance.resources(), k);
        for agent in 0..instance.agents() {
            if let Some(f) = sp_probe(&mechanism, &instance, agent, &grid)? {
                if finding.as_ref().map_or(true, |b| f.gain > b.gain) {
                    finding = Some(f);
                }
            }
        }
        match &finding {
            Some(f) => writeln!(
                out,
                "sp: FAIL agent {} reports ({}) and gets {} instead of {} (gain {})",
                f.agent,
                join(&f.report),
                fmt_num(f.manipulated_utility),
                fmt_num(f.truthful_utility),
                fmt_num(f.gain)
            )?,
            None => writeln!(out, "sp: pass ({} reports per agent)", grid.len())?,
        }
    }
    Ok(if report.all_pass() && finding.is_none() { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn cmd_sweep(args: &SweepArgs, eps: f64, out: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)?;
    let config = sweep::SweepConfig::parse(&text)?;
    match &args.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            sweep::run_sweep(&config, eps, &mut file)?;
            file.flush()?;
        }
        None => {
            sweep::run_sweep(&config, eps, out)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let kind: GeneratorKind = args.kind.parse()?;
    let spec = GeneratorSpec {
        kind,
        n: args.n,
        m: args.m,
        alpha: args.alpha,
        beta: args.beta,
        seed: args.seed,
        trace_path: args.path.clone(),
    };
    let mut note = String::new();
    let instance = if kind == GeneratorKind::Trace {
        let path = args.path.as_deref().ok_or_else(|| Error::Config("--kind trace needs --path".into()))?;
        let sample = ingest_trace(path, args.n, args.seed)?;
        note = format!(", {} trace rows skipped of {}", sample.skipped, sample.skipped + sample.pool);
        sample.instance
    } else {
        spec.generate()?
    };
    let groups = partition(&instance);
    let sizes: Vec<String> = groups.groups.iter().map(|g| g.len().to_string()).collect();
    let beta = groups.beta.map(|b| format!(", beta = {}", fmt_num(b))).unwrap_or_default();
    let summary = format!(
        "{} agents, {} resources, groups {}, alpha = {}{beta}{note}",
        instance.agents(),
        instance.resources(),
        sizes.join("/"),
        fmt_num(groups.alpha)
    );
    match &args.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_instance(&mut file, &instance)?;
            file.flush()?;
            writeln!(out, "wrote {}: {summary}", path.display())?;
        }
        None => {
            write_instance(out, &instance)?;
            eprintln!("{summary}");
        }
    }
    Ok(EXIT_OK)
}
