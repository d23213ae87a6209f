//! Instance generators: seeded random families, adversarial constructions
//! that push each mechanism toward its worst ratio, and trace sampling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Alpha,
    AlphaBeta,
    AdvDrf,
    AdvF1,
    AdvF2,
    AdvThm6Case1,
    AdvThm6Case2,
    Trace,
}

impl GeneratorKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::AlphaBeta => "alpha-beta",
            Self::AdvDrf => "adv-drf",
            Self::AdvF1 => "adv-f1",
            Self::AdvF2 => "adv-f2",
            Self::AdvThm6Case1 => "adv-thm6-1",
            Self::AdvThm6Case2 => "adv-thm6-2",
            Self::Trace => "trace",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Self::Alpha,
            Self::AlphaBeta,
            Self::AdvDrf,
            Self::AdvF1,
            Self::AdvF2,
            Self::AdvThm6Case1,
            Self::AdvThm6Case2,
            Self::Trace,
        ];
        all.into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown generator kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub seed: u64,
    pub trace_path: Option<PathBuf>,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, alpha: f64) -> Self {
        Self { kind, n, m: 2, alpha, beta: None, seed: 0, trace_path: None }
    }

    pub fn generate(&self) -> Result<Instance> {
        let beta = || self.beta.ok_or_else(|| Error::BadParams(format!("{} needs beta", self.kind)));
        match self.kind {
            GeneratorKind::Alpha => gen_alpha(self.n, self.alpha, self.seed),
            GeneratorKind::AlphaBeta => gen_alpha_beta(self.n, self.m, self.alpha, beta()?, self.seed),
            GeneratorKind::AdvDrf => adv_drf(self.n, self.alpha),
            GeneratorKind::AdvF1 => adv_f1(self.n, self.alpha),
            GeneratorKind::AdvF2 => adv_f2(self.n, self.alpha),
            GeneratorKind::AdvThm6Case1 => adv_thm6(self.n, self.m, self.alpha, beta()?, Thm6Case::SecondResource),
            GeneratorKind::AdvThm6Case2 => adv_thm6(self.n, self.m, self.alpha, beta()?, Thm6Case::FirstResource),
            GeneratorKind::Trace => {
                let path = self
                    .trace_path
                    .as_deref()
                    .ok_or_else(|| Error::BadParams("trace generator needs a path".into()))?;
                Ok(ingest_trace(path, self.n, self.seed)?.instance)
            }
        }
    }
}

/// `round(n * fraction)` with halves rounded up.
pub fn group_size(n: usize, fraction: f64) -> usize {
    let exact = n as f64 * fraction;
    // strip float noise such as 100 * 0.29 = 28.999999999999996
    let cleaned = (exact * 1e9).round() / 1e9;
    (cleaned + 0.5).floor() as usize
}

fn grid_value(k: u32) -> f64 {
    f64::from(k) / 100.0
}

/// Two resources, `round(n * alpha)` agents dominant on the second one.
/// Non-dominant demands are uniform on `{0.01, ..., 1.00}`; second-group agents
/// never draw 1.00 so that they cannot tie into the first group.
pub fn gen_alpha(n: usize, alpha: f64, seed: u64) -> Result<Instance> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::BadAlpha { alpha, reason: "must lie in (0, 1/2]".into() });
    }
    let minor = group_size(n, alpha);
    if minor == 0 {
        return Err(Error::BadAlpha { alpha, reason: format!("n * alpha rounds to zero for n = {n}") });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n - minor {
        rows.push(vec![1.0, grid_value(rng.gen_range(1..=100))]);
    }
    for _ in 0..minor {
        rows.push(vec![grid_value(rng.gen_range(1..=99)), 1.0]);
    }
    Instance::new(rows)
}

/// Draw from `(1 - beta) * U[grid ∩ (0, beta]] + beta * U[grid ∩ (beta, 1]]`.
fn mixed_draw(rng: &mut ChaCha8Rng, beta: f64, allow_one: bool) -> f64 {
    let split = (beta * 100.0 + 1e-9).floor() as u32;
    loop {
        let k = if rng.gen::<f64>() < 1.0 - beta { rng.gen_range(1..=split) } else { rng.gen_range(split + 1..=100) };
        if allow_one || k < 100 {
            return grid_value(k);
        }
    }
}

/// `m >= 3` resources, `n - round(n * alpha)` agents dominant on resource 0
/// and the rest dominant on a uniformly chosen other resource.
pub fn gen_alpha_beta(n: usize, m: usize, alpha: f64, beta: f64, seed: u64) -> Result<Instance> {
    if m < 3 {
        return Err(Error::BadParams(format!("alpha-beta generator needs m >= 3, got {m}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadParams(format!("alpha {alpha} outside (0, 1)")));
    }
    if !(0.01..=0.98).contains(&beta) {
        return Err(Error::BadParams(format!("beta {beta} outside [0.01, 0.98]")));
    }
    let outside = group_size(n, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let dominant = if i < n - outside { 0 } else { rng.gen_range(1..m) };
        let row = (0..m)
            .map(|r| if r == dominant { 1.0 } else { mixed_draw(&mut rng, beta, dominant == 0) })
            .collect();
        rows.push(row);
    }
    Instance::new(rows)
}

fn adversarial_sizes(n: usize, alpha: f64, min_first: usize, min_second: usize) -> Result<(usize, usize)> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::BadAlpha { alpha, reason: "must lie in (0, 1/2]".into() });
    }
    let second = group_size(n, alpha);
    let first = n - second;
    if first < min_first || second < min_second {
        return Err(Error::TooSmall(format!(
            "n = {n}, alpha = {alpha} gives groups of {first} and {second}; need at least {min_first} and {min_second}"
        )));
    }
    Ok((first, second))
}

/// Worst case for DRF: one second-group agent barely needs resource 0.
pub fn adv_drf(n: usize, alpha: f64) -> Result<Instance> {
    let (first, second) = adversarial_sizes(n, alpha, 1, 2)?;
    let eps = 1.0 / n as f64;
    let mut rows = vec![vec![1.0, eps]; first];
    rows.push(vec![eps / 2.0, 1.0]);
    rows.extend(std::iter::repeat(vec![1.0 - eps, 1.0]).take(second - 1));
    Instance::new(rows)
}

/// Worst case for F1: one first-group agent barely needs resource 1.
pub fn adv_f1(n: usize, alpha: f64) -> Result<Instance> {
    let (first, second) = adversarial_sizes(n, alpha, 2, 1)?;
    let eps = 1.0 / n as f64;
    let mut rows = vec![vec![1.0, eps]];
    rows.extend(std::iter::repeat(vec![1.0, 1.0 - eps]).take(first - 1));
    rows.extend(std::iter::repeat(vec![eps, 1.0]).take(second));
    Instance::new(rows)
}

/// Worst case for F2 and F2*.
pub fn adv_f2(n: usize, alpha: f64) -> Result<Instance> {
    let (first, second) = adversarial_sizes(n, alpha, 1, 1)?;
    let eps = 1.0 / (n as f64 * n as f64);
    let mut rows = vec![vec![1.0, eps]; first];
    rows.push(vec![1.0 / first as f64, 1.0]);
    rows.extend(std::iter::repeat(vec![1.0 - eps, 1.0]).take(second - 1));
    Instance::new(rows)
}

/// Which resource runs out first under generalized F1 in the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Thm6Case {
    /// Resource 1 exhausts while resource 0 is nearly untouched.
    SecondResource,
    /// Resource 0 exhausts.
    FirstResource,
}

/// Lower-bound constructions for generalized F1 and DRF with `m >= 3`.
/// Resource 0 is the special resource; `beta` is the average resource-0
/// demand of agents outside its group.
pub fn adv_thm6(n: usize, m: usize, alpha: f64, beta: f64, case: Thm6Case) -> Result<Instance> {
    if m < 3 {
        return Err(Error::BadParams(format!("needs m >= 3, got {m}")));
    }
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
        return Err(Error::BadParams(format!("alpha {alpha}, beta {beta} must lie in (0, 1)")));
    }
    let nf = n as f64;
    let outside = group_size(n, alpha);
    let first = n - outside;
    let of = outside as f64;
    let mut rows = Vec::with_capacity(n);
    match case {
        Thm6Case::SecondResource => {
            let eps = 1.0 / (nf * nf);
            if first < 2 || outside < m {
                return Err(Error::BadParams(format!("groups of {first} and {outside} too small for m = {m}")));
            }
            let shared = (beta * of - eps * eps - (m - 2) as f64 * eps) / (of - (m - 1) as f64);
            check_level(shared)?;
            let filled = |lead: &[f64]| {
                let mut row = vec![eps; m];
                row[..lead.len()].copy_from_slice(lead);
                row
            };
            rows.push(filled(&[1.0]));
            rows.extend(std::iter::repeat(filled(&[1.0, 1.0 - eps])).take(first - 1));
            rows.push(filled(&[eps * eps, 1.0]));
            rows.extend(std::iter::repeat(filled(&[shared, 1.0])).take(outside - (m - 2) - 1));
            for r in 2..m {
                let mut row = vec![eps; m];
                row[r] = 1.0;
                rows.push(row);
            }
        }
        Thm6Case::FirstResource => {
            let eps = 1.0 / nf;
            let groups = m - 1;
            if outside % groups != 0 || outside / groups < 2 || first == 0 {
                return Err(Error::BadParams(format!(
                    "{outside} agents outside the first group do not split into {groups} groups of at least 2"
                )));
            }
            let per = outside / groups;
            // beta = (shared / sqrt(n) + shared * (per - 1)) / per
            let shared = beta * per as f64 / (1.0 / nf.sqrt() + (per - 1) as f64);
            check_level(shared)?;
            let mut row = vec![eps; m];
            row[0] = 1.0;
            rows.extend(std::iter::repeat(row).take(first));
            for j in 1..m {
                let mut special = vec![eps * eps; m];
                special[0] = shared / nf.sqrt();
                special[j] = 1.0;
                rows.push(special);
                let mut regular = vec![eps; m];
                regular[0] = shared;
                regular[j] = 1.0;
                rows.extend(std::iter::repeat(regular).take(per - 1));
            }
        }
    }
    Instance::new(rows)
}

fn check_level(shared: f64) -> Result<()> {
    if shared > 0.0 && shared < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParams(format!("solved demand level {shared} outside (0, 1)")))
    }
}

#[derive(Clone, Debug)]
pub struct TraceSample {
    pub instance: Instance,
    /// Rows dropped for zero, negative or non-finite values.
    pub skipped: usize,
    pub pool: usize,
}

/// Usable `(cpu, mem)` rows of a trace file.
#[derive(Clone, Debug)]
pub struct TracePool {
    rows: Vec<[f64; 2]>,
    skipped: usize,
}

impl TracePool {
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let column = |name: &str| {
            headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("missing `{name}` column"),
            })
        };
        let (cpu, mem) = (column("cpu")?, column("mem")?);
        let mut rows = Vec::new();
        let mut skipped = 0;
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let parse = |k: usize| record.get(k).and_then(|v| v.parse::<f64>().ok());
            match (parse(cpu), parse(mem)) {
                (Some(c), Some(m)) if c.is_finite() && m.is_finite() && c > 0.0 && m > 0.0 => rows.push([c, m]),
                _ => skipped += 1,
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptyPool { path: path.to_path_buf(), skipped });
        }
        Ok(Self { rows, skipped })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Draws `n` rows uniformly with replacement and normalizes them.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Instance> {
        if n == 0 {
            return Err(Error::BadParams("cannot sample zero agents".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n).map(|_| self.rows.choose(&mut rng).expect("pool is non-empty").to_vec()).collect();
        Instance::new(rows)
    }
}

/// Samples `n` tasks (with replacement) from a `cpu,mem` CSV and normalizes each row.
pub fn ingest_trace(path: &Path, n: usize, seed: u64) -> Result<TraceSample> {
    let pool = TracePool::load(path)?;
    Ok(TraceSample { instance: pool.sample(n, seed)?, skipped: pool.skipped(), pool: pool.len() })
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { path: path.to_path_buf(), line, msg: format!("{other:?}") },
    }
}
