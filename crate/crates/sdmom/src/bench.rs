//! Monte Carlo experiments over a grid of sample sizes.
//!
//! Every cell `(N, trial)` draws its own seeds from the master seed, so a
//! cell can be rerun alone and the rows do not depend on scheduling.

use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sdmom_core::contamination::{apply_attack, generate_clean, AttackKind, AttackSpec, DataModel, ModelKind};
use sdmom_core::estimators::{mom_sde_weighted, LepskiConfig, SolverConfig};
use sdmom_core::seed::{self, Stage};
use sdmom_core::theory::EllipticalRadial;
use sdmom_core::{baselines, lepski_select, median, sdo_median_gaussian_case, sdo_mom_median, Dataset, DirectionConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    SdoMom,
    SdoGaussian,
    Lepski,
    MomSde,
    Mean,
    CoordMedian,
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sdo-mom" => Self::SdoMom,
            "sdo-gaussian" => Self::SdoGaussian,
            "lepski" => Self::Lepski,
            "mom-sde" => Self::MomSde,
            "mean" => Self::Mean,
            "coord-median" => Self::CoordMedian,
            _ => return Err(Error::Config(format!("unknown estimator {s:?}"))),
        })
    }
}

/// How the block count is chosen for a sample of size N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    Fixed(usize),
    /// `K = max(1, ⌊r·N⌋)`.
    Ratio(f64),
    /// `K = N`.
    All,
    Lepski,
}

impl KRule {
    pub fn resolve(&self, n: usize) -> Option<usize> {
        match *self {
            KRule::Fixed(k) => Some(k),
            KRule::Ratio(r) => Some(((r * n as f64).floor() as usize).max(1)),
            KRule::All => Some(n),
            KRule::Lepski => None,
        }
    }
}

impl FromStr for KRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("k: expected an integer, \"n\", \"ratio:<r>\" or \"lepski\", found {s:?}"));
        match s {
            "n" => Ok(KRule::All),
            "lepski" => Ok(KRule::Lepski),
            _ => match s.strip_prefix("ratio:") {
                Some(r) => {
                    let r: f64 = r.parse().map_err(|_| bad())?;
                    if r > 0.0 && r <= 1.0 {
                        Ok(KRule::Ratio(r))
                    } else {
                        Err(bad())
                    }
                }
                None => s.parse::<usize>().ok().filter(|&k| k > 0).map(KRule::Fixed).ok_or_else(bad),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// `‖Σ^{-1/2}(μ̂ − μ)‖₂`.
    Mahalanobis,
    Euclidean,
}

impl FromStr for ErrorMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mahalanobis" => Ok(Self::Mahalanobis),
            "euclidean" => Ok(Self::Euclidean),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

/// Attack kinds nameable in configs; block poisoning learns its partition
/// from the estimator at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackName {
    RelocateFar,
    LargestNormReplace,
    ClusterShift,
    BlockPoison,
}

impl FromStr for AttackName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "relocate-far" => Self::RelocateFar,
            "largest-norm-replace" => Self::LargestNormReplace,
            "cluster-shift" => Self::ClusterShift,
            "block-poison" => Self::BlockPoison,
            _ => return Err(Error::Config(format!("unknown attack {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackPlan {
    pub name: AttackName,
    pub n_out: usize,
    pub magnitude: f64,
}

impl AttackPlan {
    /// Concrete attack. Block poisoning needs the block count and partition
    /// seed the estimator will use.
    pub fn spec(&self, seed: u64, partition: Option<(usize, u64, bool)>) -> Result<AttackSpec> {
        let kind = match self.name {
            AttackName::RelocateFar => AttackKind::RelocateFar,
            AttackName::LargestNormReplace => AttackKind::LargestNormReplace,
            AttackName::ClusterShift => AttackKind::ClusterShift,
            AttackName::BlockPoison => {
                let (k, partition_seed, shuffle) =
                    partition.ok_or_else(|| Error::Config("block-poison needs a fixed block count".into()))?;
                AttackKind::BlockPoison { k, partition_seed, shuffle }
            }
        };
        Ok(AttackSpec { kind, n_out: self.n_out, magnitude: self.magnitude, seed })
    }
}

/// Keys shared by every config that describes a data model.
pub const MODEL_KEYS: &[&str] = &["model", "d", "dof", "mu", "sigma"];
pub const ATTACK_KEYS: &[&str] = &["attack", "outliers", "magnitude"];

/// `model` (gaussian | elliptical | student-t), `d`, `dof` (student-t,
/// default 3), `mu` (default 0) and `sigma`: `identity` (default),
/// `toeplitz:<rho>` for entries `rho^|i-j|`, or d² row-major values.
pub fn model_from_settings(s: &Settings) -> Result<DataModel> {
    let d: usize = s.require("d")?;
    if d == 0 {
        return Err(Error::Config("d must be positive".into()));
    }
    let kind = match s.raw("model").unwrap_or("gaussian") {
        "gaussian" => ModelKind::Gaussian,
        "student-t" => ModelKind::StudentT { dof: s.get_or("dof", 3.0)? },
        "elliptical" => ModelKind::EllipticalDiscrete(EllipticalRadial::standard(d)?),
        other => return Err(Error::Config(format!("unknown model {other:?}"))),
    };
    let mu = s.list::<f64>("mu")?.unwrap_or_else(|| vec![0.0; d]);
    if mu.len() != d {
        return Err(Error::Config(format!("mu has {} entries, expected {d}", mu.len())));
    }
    let sigma = parse_sigma(s.raw("sigma").unwrap_or("identity"), d)?;
    Ok(DataModel::new(kind, mu, sigma)?)
}

pub fn parse_sigma(text: &str, d: usize) -> Result<DMatrix<f64>> {
    if text == "identity" {
        return Ok(DMatrix::identity(d, d));
    }
    if let Some(r) = text.strip_prefix("toeplitz:") {
        let rho: f64 = r.parse().map_err(|_| Error::Config(format!("sigma: bad toeplitz parameter {r:?}")))?;
        return Ok(DMatrix::from_fn(d, d, |i, j| rho.powi(i.abs_diff(j) as i32)));
    }
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("sigma: cannot parse {t:?}"))))
        .collect::<Result<_>>()?;
    if v.len() != d * d {
        return Err(Error::Config(format!("sigma has {} entries, expected {}", v.len(), d * d)));
    }
    Ok(DMatrix::from_row_slice(d, d, &v))
}

/// `attack` (none by default), `outliers`, `magnitude` (default 1e6).
pub fn attack_from_settings(s: &Settings) -> Result<Option<AttackPlan>> {
    match s.raw("attack") {
        None | Some("none") => Ok(None),
        Some(name) => Ok(Some(AttackPlan {
            name: name.parse()?,
            n_out: s.require("outliers")?,
            magnitude: s.get_or("magnitude", 1e6)?,
        })),
    }
}

/// Generate `n` clean rows and apply `attack`, with stage seeds derived
/// from `seed`. A block-poison attack targets the shuffled `k_hint`-block
/// partition that `sdo_mom_median` draws from the same seed.
pub fn simulate(model: &DataModel, n: usize, attack: Option<&AttackPlan>, k_hint: Option<usize>, seed: u64) -> Result<Dataset> {
    let data = generate_clean(model, n, seed::derive(seed, &[Stage::Generate as u64]))?;
    match attack {
        None => Ok(data),
        Some(a) => {
            let part = k_hint.map(|k| (k, seed::derive(seed, &[Stage::Partition as u64]), true));
            Ok(apply_attack(&data, &a.spec(seed::derive(seed, &[Stage::Attack as u64]), part)?)?)
        }
    }
}

pub const BENCH_KEYS: &[&str] = &[
    "estimator",
    "n_values",
    "k",
    "trials",
    "seed",
    "metric",
    "directions_random",
    "directions_hyperplane",
    "max_iters",
    "tol",
    "lepski_epsilon",
    "lepski_k_min",
];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: DataModel,
    pub attack: Option<AttackPlan>,
    pub estimator: EstimatorKind,
    pub n_values: Vec<usize>,
    pub k_rule: KRule,
    pub trials: usize,
    pub seed: u64,
    pub directions: DirectionConfig,
    pub solver: SolverConfig,
    pub metric: ErrorMetric,
    pub lepski_epsilon: f64,
    pub lepski_k_min: Option<usize>,
    /// Short hash of the canonical settings text.
    pub hash: String,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let known: Vec<&str> = MODEL_KEYS.iter().chain(ATTACK_KEYS).chain(BENCH_KEYS).copied().collect();
        s.check_known(&known)?;
        let estimator: EstimatorKind = s.get_or("estimator", EstimatorKind::SdoMom)?;
        let k_rule = match (estimator, s.raw("k")) {
            (EstimatorKind::Lepski, None | Some("lepski")) => KRule::Lepski,
            (EstimatorKind::Lepski, Some(other)) => {
                return Err(Error::Config(format!("the lepski estimator chooses K itself; found k={other}")))
            }
            (EstimatorKind::SdoGaussian | EstimatorKind::Mean | EstimatorKind::CoordMedian, None) => KRule::All,
            (_, None) => return Err(Error::Config("missing key \"k\"".into())),
            (_, Some(text)) => text.parse()?,
        };
        if k_rule == KRule::Lepski && estimator != EstimatorKind::Lepski {
            return Err(Error::Config("k=lepski requires estimator=lepski".into()));
        }
        let n_values = s.list::<usize>("n_values")?.ok_or_else(|| Error::Config("missing key \"n_values\"".into()))?;
        if n_values.is_empty() || n_values.contains(&0) {
            return Err(Error::Config("n_values must be positive".into()));
        }
        let trials: usize = s.get_or("trials", 1)?;
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let mut solver = SolverConfig::default();
        solver.max_iters = s.get_or("max_iters", solver.max_iters)?;
        solver.tol = s.get_or("tol", solver.tol)?;
        let directions = DirectionConfig {
            n_random: s.get("directions_random")?,
            n_hyperplane: s.get("directions_hyperplane")?,
            ..DirectionConfig::default()
        };
        let model = model_from_settings(s)?;
        let hash = {
            let digest = Sha256::digest(s.canonical().as_bytes());
            digest[..8].iter().map(|b| format!("{b:02x}")).collect()
        };
        Ok(Self {
            model,
            attack: attack_from_settings(s)?,
            estimator,
            n_values,
            k_rule,
            trials,
            seed: s.get_or("seed", 0)?,
            directions,
            solver,
            metric: s.get_or("metric", ErrorMetric::Mahalanobis)?,
            lepski_epsilon: s.get_or("lepski_epsilon", 0.1)?,
            lepski_k_min: s.get("lepski_k_min")?,
            hash,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub config_hash: String,
    pub n: usize,
    pub k: Option<usize>,
    pub trial: usize,
    pub error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    pub attained_outlyingness: Option<f64>,
    pub flags: Vec<String>,
    /// Why the cell produced no estimate.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeAggregate {
    pub n: usize,
    pub completed: usize,
    pub skipped: usize,
    pub median_error: Option<f64>,
    pub q90_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config_hash: String,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<SizeAggregate>,
    /// Least-squares slope of log median error against log N.
    pub slope: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Line {
    Row(BenchRow),
    Summary { config_hash: String, aggregates: Vec<SizeAggregate>, slope: Option<f64> },
}

/// Order statistic of rank `⌈q·m⌉` (1-based) of the sorted values.
pub fn upper_quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two distinct x.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if points.len() < 2 || sxx <= 0.0 {
        return None;
    }
    Some(points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

impl BenchReport {
    /// Sort rows by `(N, trial)` and compute the aggregates.
    pub fn from_rows(config_hash: String, mut rows: Vec<BenchRow>) -> Self {
        rows.sort_by_key(|r| (r.n, r.trial));
        let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        ns.dedup();
        let aggregates: Vec<SizeAggregate> = ns
            .iter()
            .map(|&n| {
                let errs: Vec<f64> = rows.iter().filter(|r| r.n == n).filter_map(|r| r.error).collect();
                let total = rows.iter().filter(|r| r.n == n).count();
                SizeAggregate {
                    n,
                    completed: errs.len(),
                    skipped: total - errs.len(),
                    median_error: median(&errs).ok(),
                    q90_error: upper_quantile(&errs, 0.9),
                }
            })
            .collect();
        let pts: Vec<(f64, f64)> = aggregates
            .iter()
            .filter_map(|a| a.median_error.filter(|&e| e > 0.0).map(|e| ((a.n as f64).ln(), e.ln())))
            .collect();
        let slope = ls_slope(&pts);
        Self { config_hash, rows, aggregates, slope }
    }

    pub fn aggregate(&self, n: usize) -> Option<&SizeAggregate> {
        self.aggregates.iter().find(|a| a.n == n)
    }

    /// One line per row, then a summary line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(&Line::Row(r.clone()))?);
            out.push('\n');
        }
        let summary = Line::Summary {
            config_hash: self.config_hash.clone(),
            aggregates: self.aggregates.clone(),
            slope: self.slope,
        };
        out.push_str(&serde_json::to_string(&summary)?);
        out.push('\n');
        Ok(out)
    }

    /// Rows of a JSONL report, ignoring the summary line.
    pub fn rows_from_jsonl(text: &str) -> Result<Vec<BenchRow>> {
        let mut rows = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if let Line::Row(r) = serde_json::from_str(line)? {
                rows.push(r);
            }
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock runtime per cell (makes output nondeterministic).
    pub timings: bool,
}

/// Distance from `mu_hat` to `mu`; the Mahalanobis metric needs `sigma`.
pub fn estimation_error(metric: ErrorMetric, mu_hat: &[f64], mu: &[f64], sigma: Option<&DMatrix<f64>>) -> Result<f64> {
    if mu_hat.len() != mu.len() {
        return Err(Error::Config("estimate and oracle differ in dimension".into()));
    }
    let diff = DVector::from_iterator(mu_hat.len(), mu_hat.iter().zip(mu).map(|(a, b)| a - b));
    match metric {
        ErrorMetric::Euclidean => Ok(diff.norm()),
        ErrorMetric::Mahalanobis => {
            let sigma = sigma.ok_or_else(|| Error::Config("the mahalanobis metric needs the oracle sigma".into()))?;
            let chol = sigma.clone().cholesky().ok_or_else(|| Error::Config("sigma is not positive definite".into()))?;
            // ‖L⁻¹x‖ = ‖Σ^{-1/2}x‖ for Σ = LLᵀ
            let y = chol.l().solve_lower_triangular(&diff).ok_or_else(|| Error::Config("singular sigma".into()))?;
            Ok(y.norm())
        }
    }
}

/// Run one `(N, trial)` cell.
pub fn run_cell(cfg: &ExperimentConfig, n: usize, trial: usize, opts: RunOptions) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        config_hash: cfg.hash.clone(),
        n,
        k: cfg.k_rule.resolve(n),
        trial,
        error: None,
        runtime_seconds: None,
        attained_outlyingness: None,
        flags: Vec::new(),
        skipped: None,
    };
    if let Err(e) = fill_cell(cfg, &mut row) {
        row.skipped = Some(e.to_string());
        row.error = None;
    }
    if opts.timings {
        row.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    row
}

fn fill_cell(cfg: &ExperimentConfig, row: &mut BenchRow) -> Result<()> {
    let (n, trial) = (row.n, row.trial);
    let est_seed = seed::cell_seed(cfg.seed, n, trial, Stage::Partition);
    let clean = generate_clean(&cfg.model, n, seed::cell_seed(cfg.seed, n, trial, Stage::Generate))?;
    let data = match &cfg.attack {
        None => clean,
        Some(plan) => {
            // the adversary knows the partition the estimator will draw
            let partition = row.k.map(|k| (k, seed::derive(est_seed, &[Stage::Partition as u64]), cfg.solver.shuffle));
            let spec = plan.spec(seed::cell_seed(cfg.seed, n, trial, Stage::Attack), partition)?;
            apply_attack(&clean, &spec)?
        }
    };
    let k = row.k;
    let need_k = || k.ok_or_else(|| Error::Config("no block count".into()));
    let mu_hat = match cfg.estimator {
        EstimatorKind::Mean => baselines(&data).empirical_mean,
        EstimatorKind::CoordMedian => baselines(&data).coordinatewise_median,
        EstimatorKind::SdoMom | EstimatorKind::SdoGaussian => {
            let r = if cfg.estimator == EstimatorKind::SdoGaussian {
                row.k = Some(n);
                sdo_median_gaussian_case(&data, &cfg.directions, &cfg.solver, est_seed)?
            } else {
                sdo_mom_median(&data, need_k()?, &cfg.directions, &cfg.solver, est_seed)?
            };
            row.attained_outlyingness = Some(r.attained_outlyingness);
            if !r.converged {
                row.flags.push("not-converged".into());
            }
            if r.degenerate_directions > 0 {
                row.flags.push("degenerate-directions".into());
            }
            r.mu_hat
        }
        EstimatorKind::MomSde => mom_sde_weighted(&data, need_k()?, &cfg.directions, &cfg.solver, est_seed)?.mu,
        EstimatorKind::Lepski => {
            let mut lc = LepskiConfig::gaussian(n, cfg.model.dim(), cfg.lepski_epsilon)?;
            if let Some(k_min) = cfg.lepski_k_min {
                lc.k_grid = sdmom_core::estimators::geometric_grid(n, k_min);
            }
            let out = lepski_select(&data, &lc, &cfg.directions, &cfg.solver, est_seed)?;
            row.k = Some(out.k_hat);
            row.attained_outlyingness = Some(out.report.attained_outlyingness);
            if !out.selected {
                row.flags.push("lepski-fallback".into());
            }
            out.report.mu_hat
        }
    };
    row.error = Some(estimation_error(cfg.metric, &mu_hat, &cfg.model.mu, Some(&cfg.model.sigma))?);
    Ok(())
}

/// All cells on the rayon pool, assembled in `(N, trial)` order.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> BenchReport {
    let cells: Vec<(usize, usize)> =
        cfg.n_values.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let rows: Vec<BenchRow> = cells.par_iter().map(|&(n, t)| run_cell(cfg, n, t, opts)).collect();
    BenchReport::from_rows(cfg.hash.clone(), rows)
}
