//! Seeded experiment sweeps.
//!
//! A config is a flat list of `key = value` lines (`#` starts a comment):
//!
//! ```text
//! generator  = alpha            # any generator kind tag
//! n          = 100
//! m          = 2
//! alpha      = 0.05, 0.10, 0.15 # one point per value (times each beta)
//! beta       = 0.2, 0.4         # alpha-beta and adv-thm6 kinds only
//! trials     = 1000
//! seed       = 7
//! mechanisms = drf, f1, f2star
//! benchmark  = both             # both | sw | util
//! trace      = data/trace_sample.csv
//! ```
//!
//! Trial `t` of point `p` draws its instance with seed
//! `seed + (p << 32 | t)` (wrapping), so any trial can be replayed alone.
//!
//! Output is one CSV row per trial in (point, trial) order, then a blank
//! line, a `# aggregate` marker and one row per (point, mechanism).

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::harness::run_canonical;
use super::io::fmt_num;
use crate::error::{Error, Result};
use crate::fairopt::{fair_ratio, max_fair_sw, max_fair_util, theoretical_ratios, FairBenchmark};
use crate::instances::{GeneratorKind, GeneratorSpec, TracePool};
use crate::mechanisms::Mechanism;
use crate::model::{partition, partition_with_special, utilization, GroupPartition, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkTarget {
    Both,
    Welfare,
    Utilization,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub generator: GeneratorKind,
    pub n: usize,
    pub m: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub mechanisms: Vec<Mechanism>,
    pub benchmark: BenchmarkTarget,
    pub trace: Option<PathBuf>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut generator = None;
        let (mut n, mut m, mut trials, mut seed) = (None, 2, 1, 0);
        let (mut alphas, mut betas) = (Vec::new(), Vec::new());
        let mut mechanisms = Vec::new();
        let mut benchmark = BenchmarkTarget::Both;
        let mut trace = None;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Config(format!("line {}: {msg}", k + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("`{v}` is not a number")));
            let count = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("`{v}` is not a count")));
            let list = |v: &str| v.split(',').map(|x| number(x.trim())).collect::<Result<Vec<f64>>>();
            match key {
                "generator" => generator = Some(value.parse::<GeneratorKind>().map_err(|e| bad(e.to_string()))?),
                "n" => n = Some(count(value)?),
                "m" => m = count(value)?,
                "alpha" => alphas = list(value)?,
                "beta" => betas = list(value)?,
                "trials" => trials = count(value)?,
                "seed" => seed = value.parse().map_err(|_| bad(format!("`{value}` is not a seed")))?,
                "mechanisms" => {
                    mechanisms = value
                        .split(',')
                        .map(|t| t.trim().parse::<Mechanism>().map_err(|e| bad(e.to_string())))
                        .collect::<Result<_>>()?
                }
                "benchmark" => {
                    benchmark = match value {
                        "both" => BenchmarkTarget::Both,
                        "sw" => BenchmarkTarget::Welfare,
                        "util" => BenchmarkTarget::Utilization,
                        other => return Err(bad(format!("unknown benchmark `{other}`"))),
                    }
                }
                "trace" => trace = Some(PathBuf::from(value)),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let generator = generator.ok_or_else(|| Error::Config("missing `generator`".into()))?;
        let n = n.ok_or_else(|| Error::Config("missing `n`".into()))?;
        if mechanisms.is_empty() {
            return Err(Error::Config("missing `mechanisms`".into()));
        }
        if trials == 0 {
            return Err(Error::Config("`trials` must be positive".into()));
        }
        if generator == GeneratorKind::Trace && trace.is_none() {
            return Err(Error::Config("trace generator needs `trace`".into()));
        }
        Ok(Self { generator, n, m, alphas, betas, trials, seed, mechanisms, benchmark, trace })
    }

    /// Parameter points: the Cartesian product of alphas and betas.
    pub fn points(&self) -> Vec<(Option<f64>, Option<f64>)> {
        let alphas: Vec<Option<f64>> =
            if self.alphas.is_empty() { vec![None] } else { self.alphas.iter().copied().map(Some).collect() };
        let betas: Vec<Option<f64>> =
            if self.betas.is_empty() { vec![None] } else { self.betas.iter().copied().map(Some).collect() };
        alphas.iter().flat_map(|&a| betas.iter().map(move |&b| (a, b))).collect()
    }
}

pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    master.wrapping_add(((point as u64) << 32) | trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismOutcome {
    pub mechanism: Mechanism,
    /// Branch taken by a hybrid.
    pub branch: Option<Mechanism>,
    pub sw: f64,
    pub util: f64,
    pub sw_ratio: Option<f64>,
    pub util_ratio: Option<f64>,
    pub sw_bound: Option<f64>,
    pub util_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub point: usize,
    pub trial: usize,
    pub generator: GeneratorKind,
    pub n: usize,
    pub m: usize,
    pub alpha_requested: Option<f64>,
    pub beta_requested: Option<f64>,
    pub seed: u64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub sw_opt: Option<f64>,
    pub util_opt: Option<f64>,
    pub outcomes: Vec<MechanismOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub alpha_requested: Option<f64>,
    pub beta_requested: Option<f64>,
    pub mechanism: Mechanism,
    pub trials: usize,
    pub mean_sw: f64,
    pub mean_util: f64,
    pub mean_sw_ratio: Option<f64>,
    pub max_sw_ratio: Option<f64>,
    pub mean_util_ratio: Option<f64>,
    pub max_util_ratio: Option<f64>,
}

/// Evaluates every mechanism on one instance against the fair benchmark.
pub fn evaluate(
    instance: &Instance,
    mechanisms: &[Mechanism],
    target: BenchmarkTarget,
    eps: f64,
) -> Result<(Option<f64>, Option<f64>, Vec<MechanismOutcome>)> {
    let sw_opt = match target {
        BenchmarkTarget::Utilization => None,
        _ => Some(max_fair_sw(instance)?.0),
    };
    let util_opt = match target {
        BenchmarkTarget::Welfare => None,
        _ => Some(max_fair_util(instance)?.0),
    };
    let bench = FairBenchmark {
        sw_opt: sw_opt.unwrap_or(f64::NAN),
        util_opt: util_opt.unwrap_or(f64::NAN),
        y_sw: Vec::new(),
        y_util: Vec::new(),
    };
    let groups = partition(instance);
    let mut outcomes = Vec::with_capacity(mechanisms.len());
    for mechanism in mechanisms {
        let result = run_canonical(mechanism, instance, eps)?;
        let (sw_ratio, util_ratio) = fair_ratio(&result, &bench)?;
        let own;
        let params = match mechanism {
            Mechanism::GeneralizedF1(special) if instance.resources() > 2 => {
                own = special_partition(instance, *special);
                &own
            }
            _ => &groups,
        };
        let bounds =
            theoretical_ratios(mechanism, params.alpha, params.beta, instance.agents(), instance.resources()).ok();
        outcomes.push(MechanismOutcome {
            mechanism: mechanism.clone(),
            branch: result.dispatched.clone(),
            sw: result.allocation.shares.iter().sum(),
            util: utilization(&result.allocation),
            sw_ratio: sw_opt.map(|_| sw_ratio),
            util_ratio: util_opt.map(|_| util_ratio),
            sw_bound: bounds.map(|b| b.sw),
            util_bound: bounds.map(|b| b.util),
        });
    }
    Ok((sw_opt, util_opt, outcomes))
}

/// Partition around the group generalized F1 treats as special, so that its
/// bound is evaluated at the alpha and beta it actually faces.
fn special_partition(instance: &Instance, special: Option<usize>) -> GroupPartition {
    let special = special.unwrap_or_else(|| partition(instance).largest_group());
    partition_with_special(instance, special)
}

/// Runs the sweep, streaming trial rows and the aggregate block to `out`.
pub fn run_sweep(config: &SweepConfig, eps: f64, out: &mut dyn Write) -> Result<Vec<PointSummary>> {
    let pool = match (&config.generator, &config.trace) {
        (GeneratorKind::Trace, Some(path)) => Some(TracePool::load(path)?),
        _ => None,
    };
    emit(out, &header(&config.mechanisms))?;

    let mut summaries = Vec::new();
    for (point, &(alpha, beta)) in config.points().iter().enumerate() {
        let records: Vec<Result<ExperimentRecord>> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(config.seed, point, trial);
                let instance = match &pool {
                    Some(pool) => pool.sample(config.n, seed)?,
                    None => GeneratorSpec {
                        kind: config.generator,
                        n: config.n,
                        m: config.m,
                        alpha: alpha.unwrap_or(f64::NAN),
                        beta,
                        seed,
                        trace_path: None,
                    }
                    .generate()?,
                };
                let groups = partition(&instance);
                let (sw_opt, util_opt, outcomes) = evaluate(&instance, &config.mechanisms, config.benchmark, eps)?;
                Ok(ExperimentRecord {
                    point,
                    trial,
                    generator: config.generator,
                    n: instance.agents(),
                    m: instance.resources(),
                    alpha_requested: alpha,
                    beta_requested: beta,
                    seed,
                    alpha: groups.alpha,
                    beta: groups.beta,
                    sw_opt,
                    util_opt,
                    outcomes,
                })
            })
            .collect();
        let mut done = Vec::with_capacity(records.len());
        for record in records {
            let record = record?;
            emit(out, &row(&record))?;
            done.push(record);
        }
        summaries.extend(summarize(point, alpha, beta, &config.mechanisms, &done));
    }

    writeln!(out)?;
    writeln!(out, "# aggregate")?;
    emit(out, &AGGREGATE_HEADER)?;
    for s in &summaries {
        emit(out, &aggregate_row(s))?;
    }
    Ok(summaries)
}

const AGGREGATE_HEADER: [&str; 11] = [
    "point",
    "alpha_requested",
    "beta_requested",
    "mechanism",
    "trials",
    "mean_sw",
    "mean_util",
    "mean_sw_ratio",
    "max_sw_ratio",
    "mean_util_ratio",
    "max_util_ratio",
];

/// Column order of trial rows.
pub fn header(mechanisms: &[Mechanism]) -> Vec<String> {
    let mut cols: Vec<String> = [
        "point",
        "trial",
        "generator",
        "n",
        "m",
        "alpha_requested",
        "beta_requested",
        "seed",
        "alpha",
        "beta",
        "sw_opt",
        "util_opt",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for mech in mechanisms {
        for field in ["branch", "sw", "util", "sw_ratio", "util_ratio", "sw_bound", "util_bound"] {
            cols.push(format!("{mech}.{field}"));
        }
    }
    cols
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_full).unwrap_or_default()
}

/// Shortest round-trip representation, so ratios can be recomputed exactly.
fn fmt_full(v: f64) -> String {
    if v.is_infinite() { if v > 0.0 { "inf".into() } else { "-inf".into() } } else { v.to_string() }
}

fn row(r: &ExperimentRecord) -> Vec<String> {
    let mut cols = vec![
        r.point.to_string(),
        r.trial.to_string(),
        r.generator.to_string(),
        r.n.to_string(),
        r.m.to_string(),
        opt(r.alpha_requested),
        opt(r.beta_requested),
        r.seed.to_string(),
        fmt_full(r.alpha),
        opt(r.beta),
        opt(r.sw_opt),
        opt(r.util_opt),
    ];
    for o in &r.outcomes {
        cols.push(o.branch.as_ref().map(Mechanism::tag).unwrap_or_default());
        cols.push(fmt_full(o.sw));
        cols.push(fmt_full(o.util));
        cols.push(opt(o.sw_ratio));
        cols.push(opt(o.util_ratio));
        cols.push(opt(o.sw_bound));
        cols.push(opt(o.util_bound));
    }
    cols
}

fn aggregate_row(s: &PointSummary) -> Vec<String> {
    vec![
        s.point.to_string(),
        opt(s.alpha_requested),
        opt(s.beta_requested),
        s.mechanism.tag(),
        s.trials.to_string(),
        fmt_num(s.mean_sw),
        fmt_num(s.mean_util),
        s.mean_sw_ratio.map(fmt_num).unwrap_or_default(),
        s.max_sw_ratio.map(fmt_num).unwrap_or_default(),
        s.mean_util_ratio.map(fmt_num).unwrap_or_default(),
        s.max_util_ratio.map(fmt_num).unwrap_or_default(),
    ]
}

/// Mean-of-ratios and max ratio per mechanism at one point.
pub fn summarize(
    point: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    mechanisms: &[Mechanism],
    records: &[ExperimentRecord],
) -> Vec<PointSummary> {
    let trials = records.len();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mechanisms
        .iter()
        .enumerate()
        .map(|(k, mechanism)| {
            let pick = |f: fn(&MechanismOutcome) -> Option<f64>| -> Vec<f64> {
                records.iter().filter_map(|r| f(&r.outcomes[k])).collect()
            };
            let sw = pick(|o| Some(o.sw));
            let util = pick(|o| Some(o.util));
            let sw_ratio = pick(|o| o.sw_ratio);
            let util_ratio = pick(|o| o.util_ratio);
            let stat = |xs: &[f64], f: &dyn Fn(&[f64]) -> f64| if xs.is_empty() { None } else { Some(f(xs)) };
            PointSummary {
                point,
                alpha_requested: alpha,
                beta_requested: beta,
                mechanism: mechanism.clone(),
                trials,
                mean_sw: mean(&sw),
                mean_util: mean(&util),
                mean_sw_ratio: stat(&sw_ratio, &mean),
                max_sw_ratio: stat(&sw_ratio, &max),
                mean_util_ratio: stat(&util_ratio, &mean),
                max_util_ratio: stat(&util_ratio, &max),
            }
        })
        .collect()
}

/// Writes one CSV record and flushes it.
fn emit<S: AsRef<str>>(out: &mut dyn Write, fields: &[S]) -> Result<()> {
    let mut line = csv::Writer::from_writer(Vec::new());
    line.write_record(fields.iter().map(|f| f.as_ref())).map_err(|e| Error::Config(format!("csv output: {e}")))?;
    let bytes = line.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}
