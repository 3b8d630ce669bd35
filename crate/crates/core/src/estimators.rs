//! Location estimators: the SDO median of means, Lepski's choice of K, the
//! weighted MOM-SDE, and the naive baselines.
//!
//! The SDO median minimizes the convex piecewise-linear function
//! `μ ↦ max_v |⟨μ,v⟩ − m_v| / s_v` over a finite direction set. Directions
//! with `s_v = 0` contribute 0 on the affine set `⟨μ,v⟩ = m_v` and +∞ off it,
//! so they are treated as equality constraints and the remaining directions
//! are minimized by projected subgradient descent on that affine set.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::ToString;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::seq::index;

use crate::data::{bucket_means, median, partition_blocks, BucketedMeans, Dataset, MedianConvention};
use crate::depth::{hyperplane_normal, DepthProfile, DirectionConfig, DirectionSet, Provenance, ZERO_NUMERATOR_TOL};
use crate::error::{Error, Result};
use crate::math::{dot, norm, pairwise_sum, PHI0_GAUSSIAN};
use crate::seed::{self, Stage};

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    /// Relative improvement of the best value below which a window counts as stalled.
    pub tol: f64,
    pub window: usize,
    pub max_iters: usize,
    /// Iterations between direction-augmentation rounds (0 disables).
    pub augment_every: usize,
    pub augment_rounds: usize,
    /// Hyperplane normals added per round; `None` means `max(100, 10d)`.
    pub augment_directions: Option<usize>,
    /// Shuffle rows before splitting into blocks.
    pub shuffle: bool,
    pub convention: MedianConvention,
    /// Finish with an exact linear-programming solve over the final directions.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            window: 25,
            max_iters: 5000,
            augment_every: 250,
            augment_rounds: 2,
            augment_directions: None,
            shuffle: true,
            convention: MedianConvention::LowerMiddle,
            polish: true,
        }
    }
}

/// Wall-clock duration of one phase, filled in by callers that have a clock.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseTiming {
    pub phase: alloc::string::String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub mu_hat: Vec<f64>,
    /// SDO_K of `mu_hat` over the final direction set.
    pub attained_outlyingness: f64,
    pub k_used: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub dropped_rows: usize,
    pub n_directions: usize,
    /// Directions with zero MOMAD, enforced as equality constraints.
    pub degenerate_directions: usize,
    pub timings: Vec<PhaseTiming>,
}

/// Orthonormalized equality constraints `⟨μ, q_j⟩ = β_j`.
struct Constraints {
    q: Vec<Vec<f64>>,
    beta: Vec<f64>,
}

impl Constraints {
    fn new(profile: &DepthProfile) -> Result<Self> {
        let mut c = Constraints { q: Vec::new(), beta: Vec::new() };
        for i in profile.degenerate() {
            let mut v = profile.dirs.get(i).to_vec();
            let mut b = profile.stats[i].median;
            let scale = b.abs().max(1.0);
            for _ in 0..2 {
                for (q, beta) in c.q.iter().zip(&c.beta) {
                    let t = dot(&v, q);
                    v.iter_mut().zip(q).for_each(|(x, y)| *x -= t * y);
                    b -= t * beta;
                }
            }
            let r = norm(&v);
            if r <= 1e-9 {
                if b.abs() > 1e-9 * scale {
                    return Err(Error::RankDeficient(alloc::format!(
                        "directions with zero MOMAD impose inconsistent constraints (K = {}, d = {}); increase K to at least d",
                        profile.k,
                        profile.dim()
                    )));
                }
                continue;
            }
            v.iter_mut().for_each(|x| *x /= r);
            c.q.push(v);
            c.beta.push(b / r);
        }
        Ok(c)
    }

    fn project_point(&self, mu: &mut [f64]) {
        for _ in 0..2 {
            for (q, beta) in self.q.iter().zip(&self.beta) {
                let t = beta - dot(mu, q);
                mu.iter_mut().zip(q).for_each(|(x, y)| *x += t * y);
            }
        }
    }

    fn project_direction(&self, g: &mut [f64]) {
        for _ in 0..2 {
            for q in &self.q {
                let t = dot(g, q);
                g.iter_mut().zip(q).for_each(|(x, y)| *x -= t * y);
            }
        }
    }
}

/// Objective over the non-degenerate directions, with the active index.
fn objective(profile: &DepthProfile, mu: &[f64]) -> (f64, Option<usize>) {
    let mut best = 0.0;
    let mut arg = None;
    for (i, s) in profile.stats.iter().enumerate() {
        if s.momad > 0.0 {
            let r = (dot(mu, profile.dirs.get(i)) - s.median).abs() / s.momad;
            if r > best || arg.is_none() {
                best = r;
                arg = Some(i);
            }
        }
    }
    (best, arg)
}

/// Result of minimizing SDO_K over a direction set.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mu: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub profile: DepthProfile,
}

/// Minimize SDO_K over the directions of `profile`, starting from the
/// coordinatewise median of the means.
///
/// Steps are `μ ← μ − (R/√t)·P(±v*)/‖P(±v*)‖` with `v*` the active direction and
/// `P` the projection onto the constraint set. A cycle ends when the best value
/// improves by less than `tol` (relative) over `window` steps; the next cycle
/// restarts from the best point with `R` divided by 4. The solve stops once `R`
/// has shrunk by a factor `tol` from its initial value `f(μ₀)·max_v s_v`.
/// Augmentation rounds append hyperplane normals through the current best
/// point and `d − 1` random block means, then restart with a fresh `R`.
pub fn minimize_sdo(means: &BucketedMeans, mut profile: DepthProfile, cfg: &SolverConfig, seed: u64) -> Result<Solution> {
    let d = means.dim();
    if profile.is_empty() {
        return Err(Error::Config("empty direction set".to_string()));
    }
    if !(cfg.tol >= 0.0) || cfg.window == 0 {
        return Err(Error::Config("tol must be nonnegative and window positive".to_string()));
    }
    let constraints = Constraints::new(&profile)?;
    let mut best = means.coordinatewise_median();
    if profile.sdo(&best) == f64::INFINITY {
        constraints.project_point(&mut best);
    }
    let mut best_val = objective(&profile, &best).0;
    let mut scale0 = best_val * profile.max_momad();
    let mut radius = scale0;
    let mut rounds_left = if cfg.augment_every > 0 && d > 1 && means.k() >= d { cfg.augment_rounds } else { 0 };
    let mut aug_rng = seed::rng(seed::derive(seed, &[Stage::Augment as u64]));
    let min_radius = cfg.tol.max(f64::EPSILON);
    let mut converged = false;
    let mut total = 0usize;
    let mut mu = best.clone();
    let mut g = alloc::vec![0.0; d];
    let mut history: Vec<f64> = Vec::with_capacity(cfg.window + 1);
    'outer: loop {
        mu.copy_from_slice(&best);
        let mut arg = objective(&profile, &mu).1;
        history.clear();
        history.push(best_val);
        let mut t = 0usize;
        let mut augment_now = false;
        loop {
            if best_val == 0.0 || arg.is_none() {
                converged = true;
                break 'outer;
            }
            if total >= cfg.max_iters {
                break 'outer;
            }
            let i = arg.unwrap();
            let v = profile.dirs.get(i);
            let sign = if dot(&mu, v) >= profile.stats[i].median { 1.0 } else { -1.0 };
            g.iter_mut().zip(v).for_each(|(x, y)| *x = sign * y);
            constraints.project_direction(&mut g);
            let gn = norm(&g);
            if gn <= 1e-12 {
                // the active direction is pinned by the constraints
                converged = true;
                break 'outer;
            }
            t += 1;
            total += 1;
            let h = radius / (t as f64).sqrt();
            mu.iter_mut().zip(&g).for_each(|(x, y)| *x -= h * y / gn);
            let (val, next) = objective(&profile, &mu);
            arg = next;
            if val < best_val {
                best_val = val;
                best.copy_from_slice(&mu);
            }
            history.push(best_val);
            if cfg.augment_every > 0 && total % cfg.augment_every == 0 && rounds_left > 0 {
                augment_now = true;
                break;
            }
            if history.len() > cfg.window {
                let past = history[history.len() - 1 - cfg.window];
                if past - best_val <= cfg.tol * best_val {
                    break;
                }
            }
        }
        if !augment_now && radius > min_radius * scale0 {
            radius *= 0.25;
            continue;
        }
        if rounds_left == 0 {
            converged = true;
            break;
        }
        rounds_left -= 1;
        if cfg.polish {
            // augment through the exact optimum so the new directions do not
            // depend on where the subgradient iterates happened to stop
            polish(&profile, &constraints, &mut best, &mut best_val);
        }
        let n_aug = cfg.augment_directions.unwrap_or((10 * d).max(100));
        let extra = augment(means, &best, n_aug, &mut aug_rng);
        if !extra.is_empty() {
            profile.extend(means, &extra);
            drop_degenerate_tail(&mut profile, extra.len());
            best_val = objective(&profile, &best).0;
        }
        scale0 = best_val * profile.max_momad();
        radius = scale0;
    }
    if cfg.polish {
        polish(&profile, &constraints, &mut best, &mut best_val);
    }
    let value = profile.sdo(&best);
    if value == f64::INFINITY {
        return Err(Error::RankDeficient(alloc::format!(
            "no point has finite outlyingness (K = {}, d = {d}); increase K to at least d",
            means.k()
        )));
    }
    Ok(Solution { mu: best, value, iterations: total, converged, profile })
}

fn polish(profile: &DepthProfile, constraints: &Constraints, best: &mut Vec<f64>, best_val: &mut f64) {
    if let Some(mut mu) = chebyshev_polish(profile, constraints) {
        constraints.project_point(&mut mu);
        let val = objective(profile, &mu).0;
        if val <= *best_val {
            *best = mu;
            *best_val = val;
        }
    }
}

/// Exact minimizer of the objective as a Chebyshev fit: minimize `t` subject
/// to `|⟨μ,v⟩ − m_v| ≤ t·momad(v)` and the equality constraints, solved through
/// its dual. `None` when the directions leave the minimizer undetermined.
fn chebyshev_polish(profile: &DepthProfile, constraints: &Constraints) -> Option<Vec<f64>> {
    let d = profile.dim();
    // one primal row per dual column: (coefficients on (μ, t), right-hand side)
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (i, s) in profile.stats.iter().enumerate() {
        if s.momad == 0.0 {
            continue;
        }
        let v = profile.dirs.get(i);
        let c = s.median / s.momad;
        let mut lo: Vec<f64> = v.iter().map(|x| -x / s.momad).collect();
        lo.push(1.0);
        let mut hi: Vec<f64> = v.iter().map(|x| x / s.momad).collect();
        hi.push(1.0);
        rows.push((lo, -c));
        rows.push((hi, c));
    }
    for (q, beta) in constraints.q.iter().zip(&constraints.beta) {
        let mut plus = q.clone();
        plus.push(0.0);
        let minus: Vec<f64> = plus.iter().map(|x| -x).collect();
        rows.push((plus, *beta));
        rows.push((minus, -beta));
    }
    let cost: Vec<f64> = rows.iter().map(|r| -r.1).collect();
    let cols: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let mut rhs = alloc::vec![0.0; d + 1];
    rhs[d] = 1.0;
    let basis = crate::lp::simplex(&cols, &rhs, &cost)?;
    let a = nalgebra::DMatrix::from_fn(d + 1, d + 1, |r, c| rows[basis[r]].0[c]);
    let b = nalgebra::DVector::from_fn(d + 1, |r, _| rows[basis[r]].1);
    let x = a.lu().solve(&b)?;
    let mu: Vec<f64> = x.iter().take(d).copied().collect();
    mu.iter().all(|x| x.is_finite()).then_some(mu)
}

/// Remove zero-MOMAD directions among the last `added` entries so that
/// augmentation never introduces new equality constraints.
fn drop_degenerate_tail(profile: &mut DepthProfile, added: usize) {
    let start = profile.len() - added;
    if profile.stats[start..].iter().all(|s| s.momad > 0.0) {
        return;
    }
    let mut dirs = DirectionSet::empty(profile.dim());
    let mut stats = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        if i < start || profile.stats[i].momad > 0.0 {
            dirs.push_unchecked(profile.dirs.get(i), profile.dirs.provenance(i));
            stats.push(profile.stats[i]);
        }
    }
    dirs.skipped_hyperplanes = profile.dirs.skipped_hyperplanes;
    profile.dirs = dirs;
    profile.stats = stats;
}

fn augment(means: &BucketedMeans, at: &[f64], n: usize, rng: &mut seed::Rng) -> DirectionSet {
    let d = means.dim();
    let mut set = DirectionSet::empty(d);
    let mut pts: Vec<&[f64]> = Vec::with_capacity(d);
    for _ in 0..n {
        pts.clear();
        pts.push(at);
        pts.extend(index::sample(rng, means.k(), d - 1).into_iter().map(|i| means.mean(i)));
        if let Some(v) = hyperplane_normal(&pts) {
            // normals are unit vectors; push only fixes the sign
            let _ = set.push(&v, Provenance::Augmented);
        }
    }
    set
}

fn split(data: &Dataset, k: usize, cfg: &SolverConfig, seed: u64) -> Result<BucketedMeans> {
    let part = partition_blocks(data.n_rows(), k, seed::derive(seed, &[Stage::Partition as u64]), cfg.shuffle)?;
    bucket_means(data, &part)
}

/// SDO median of the `k` block means of `data`.
pub fn sdo_mom_median(
    data: &Dataset,
    k: usize,
    dirs_config: &DirectionConfig,
    opt_config: &SolverConfig,
    seed: u64,
) -> Result<EstimateReport> {
    let means = split(data, k, opt_config, seed)?;
    sdo_mom_median_from_means(&means, dirs_config, opt_config, seed)
}

/// As [`sdo_mom_median`] for precomputed block means.
pub fn sdo_mom_median_from_means(
    means: &BucketedMeans,
    dirs_config: &DirectionConfig,
    opt_config: &SolverConfig,
    seed: u64,
) -> Result<EstimateReport> {
    solve_means(means, dirs_config, opt_config, seed).map(|(r, _)| r)
}

fn solve_means(
    means: &BucketedMeans,
    dirs_config: &DirectionConfig,
    opt_config: &SolverConfig,
    seed: u64,
) -> Result<(EstimateReport, DepthProfile)> {
    let d = means.dim();
    if dirs_config.resolved_hyperplane(d, means.k()) > 0 && means.k() < d {
        return Err(Error::RankDeficient(alloc::format!(
            "K = {} block means cannot span d = {d} dimensions; use K >= d",
            means.k()
        )));
    }
    let dirs = dirs_config.generate(means, seed::derive(seed, &[Stage::Directions as u64]))?;
    let profile = DepthProfile::build(means, dirs, opt_config.convention)?;
    let degenerate = profile.degenerate().len();
    let sol = minimize_sdo(means, profile, opt_config, seed)?;
    let report = EstimateReport {
        mu_hat: sol.mu,
        attained_outlyingness: sol.value,
        k_used: means.k(),
        iterations: sol.iterations,
        converged: sol.converged,
        seed,
        dropped_rows: means.partition.dropped.len(),
        n_directions: sol.profile.len(),
        degenerate_directions: degenerate,
        timings: Vec::new(),
    };
    Ok((report, sol.profile))
}

/// The SDO median itself: one observation per block.
pub fn sdo_median_gaussian_case(
    data: &Dataset,
    dirs_config: &DirectionConfig,
    opt_config: &SolverConfig,
    seed: u64,
) -> Result<EstimateReport> {
    sdo_mom_median(data, data.n_rows(), dirs_config, opt_config, seed)
}

/// Lepski settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LepskiConfig {
    pub phi_l: f64,
    pub phi_u: f64,
    /// Candidate block counts in decreasing order.
    pub k_grid: Vec<usize>,
    pub epsilon: f64,
}

impl LepskiConfig {
    /// Gaussian constants `Φ⁻¹(3/4) ∓ 4ε` and the geometric grid
    /// `N, ⌈N/2⌉, …` down to `max(d·⌈ε⁻²⌉, 2)`.
    pub fn gaussian(n: usize, d: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.125) {
            return Err(Error::Domain(alloc::format!("epsilon {epsilon} outside (0, 1/8)")));
        }
        Ok(Self {
            phi_l: PHI0_GAUSSIAN - 4.0 * epsilon,
            phi_u: PHI0_GAUSSIAN + 4.0 * epsilon,
            k_grid: geometric_grid(n, (d * (1.0 / (epsilon * epsilon)).ceil() as usize).max(2)),
            epsilon,
        })
    }

    /// `max(9/φ_l, (6φ_u/φ_l²)(1 + √(K/k)))`.
    pub fn threshold(&self, big_k: usize, k: usize) -> f64 {
        let a = 9.0 / self.phi_l;
        let b = 6.0 * self.phi_u / (self.phi_l * self.phi_l) * (1.0 + (big_k as f64 / k as f64).sqrt());
        a.max(b)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.phi_l > 0.0 && self.phi_u >= self.phi_l) {
            return Err(Error::Config("need 0 < phi_l <= phi_u".to_string()));
        }
        if self.k_grid.is_empty() || self.k_grid.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("k_grid must be nonempty and strictly decreasing".to_string()));
        }
        if self.k_grid[0] > n || *self.k_grid.last().unwrap() == 0 {
            return Err(Error::Config(alloc::format!("k_grid must lie in [1, {n}]")));
        }
        Ok(())
    }
}

/// `N, ⌈N/2⌉, ⌈N/4⌉, …` while at least `k_min` (always keeps N).
pub fn geometric_grid(n: usize, k_min: usize) -> Vec<usize> {
    let mut out = alloc::vec![n];
    let mut k = n;
    while k > 1 {
        k = k.div_ceil(2);
        if k < k_min || Some(&k) == out.last() {
            break;
        }
        out.push(k);
    }
    out
}

/// One Lepski candidate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LepskiCandidate {
    pub k: usize,
    pub report: EstimateReport,
    /// Largest ratio distance / threshold against the larger grid values.
    pub worst_ratio: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LepskiOutcome {
    pub k_hat: usize,
    pub report: EstimateReport,
    /// False when no candidate passed and the largest K was returned.
    pub selected: bool,
    pub candidates: Vec<LepskiCandidate>,
}

/// Distance `max_v |⟨a − b, v⟩| / MOMAD_k(v)` in the geometry of a profile.
pub fn profile_distance(profile: &DepthProfile, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut worst = 0.0f64;
    for (i, s) in profile.stats.iter().enumerate() {
        let num = dot(&diff, profile.dirs.get(i)).abs();
        let r = if s.momad > 0.0 {
            num / s.momad
        } else if num <= ZERO_NUMERATOR_TOL * norm(a).max(norm(b)).max(1.0) {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(r);
    }
    worst
}

/// Smallest K in the grid whose estimate stays within the Lepski threshold
/// of the estimate at every larger grid value.
pub fn lepski_select(
    data: &Dataset,
    cfg: &LepskiConfig,
    dirs_config: &DirectionConfig,
    opt_config: &SolverConfig,
    seed: u64,
) -> Result<LepskiOutcome> {
    cfg.validate(data.n_rows())?;
    let mut fits: Vec<(usize, EstimateReport, DepthProfile)> = Vec::with_capacity(cfg.k_grid.len());
    for &k in &cfg.k_grid {
        let s = seed::derive(seed, &[Stage::Lepski as u64, k as u64]);
        let means = split(data, k, opt_config, s)?;
        let (report, profile) = solve_means(&means, dirs_config, opt_config, s)?;
        fits.push((k, report, profile));
    }
    let candidates: Vec<LepskiCandidate> = fits
        .iter()
        .enumerate()
        .map(|(j, (big_k, report, _))| {
            // grid is decreasing: entries before j are the larger k
            let worst_ratio = fits[..j]
                .iter()
                .map(|(k, other, profile)| {
                    profile_distance(profile, &report.mu_hat, &other.mu_hat) / cfg.threshold(*big_k, *k)
                })
                .fold(0.0, f64::max);
            LepskiCandidate { k: *big_k, report: report.clone(), worst_ratio, admissible: worst_ratio <= 1.0 }
        })
        .collect();
    let chosen = candidates.iter().rposition(|c| c.admissible);
    let (idx, selected) = match chosen {
        Some(i) => (i, true),
        None => (0, false),
    };
    Ok(LepskiOutcome { k_hat: candidates[idx].k, report: candidates[idx].report.clone(), selected, candidates })
}

/// Weighted MOM-SDE with hard-threshold weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MomSde {
    pub mu: Vec<f64>,
    pub scatter: DMatrix<f64>,
    /// Median block-mean outlyingness.
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub depths: Vec<f64>,
}

pub fn mom_sde_weighted(data: &Dataset, k: usize, dirs_config: &DirectionConfig, opt_config: &SolverConfig, seed: u64) -> Result<MomSde> {
    if k < 2 {
        return Err(Error::InvalidPartition { n: data.n_rows(), k });
    }
    let means = split(data, k, opt_config, seed)?;
    mom_sde_from_means(&means, dirs_config, opt_config.convention, seed)
}

pub fn mom_sde_from_means(means: &BucketedMeans, dirs_config: &DirectionConfig, conv: MedianConvention, seed: u64) -> Result<MomSde> {
    let d = means.dim();
    let k = means.k();
    let dirs = dirs_config.generate(means, seed::derive(seed, &[Stage::Directions as u64]))?;
    let profile = DepthProfile::build(means, dirs, conv)?;
    let depths: Vec<f64> = means.iter().map(|m| profile.sdo(m)).collect();
    let alpha = median(&depths)?;
    let weights: Vec<f64> = depths.iter().map(|&s| if s <= alpha { 1.0 } else { 0.0 }).collect();
    let total: f64 = weights.iter().sum();
    let mut mu = alloc::vec![0.0; d];
    let mut buf = Vec::with_capacity(k);
    for (j, m) in mu.iter_mut().enumerate() {
        buf.clear();
        buf.extend(means.iter().zip(&weights).filter(|(_, &w)| w > 0.0).map(|(x, _)| x[j]));
        *m = pairwise_sum(&buf) / total;
    }
    let mut scatter = DMatrix::zeros(d, d);
    for (x, &w) in means.iter().zip(&weights) {
        if w > 0.0 {
            let c = nalgebra::DVector::from_iterator(d, x.iter().zip(&mu).map(|(a, b)| a - b));
            scatter += &c * c.transpose();
        }
    }
    scatter *= 2.0 / k as f64;
    Ok(MomSde { mu, scatter, alpha, weights, depths })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Baselines {
    pub empirical_mean: Vec<f64>,
    pub coordinatewise_median: Vec<f64>,
}

pub fn baselines(data: &Dataset) -> Baselines {
    let n = data.n_rows() as f64;
    let mut empirical_mean = Vec::with_capacity(data.dim());
    let mut coordinatewise_median = Vec::with_capacity(data.dim());
    for j in 0..data.dim() {
        let col = data.column(j);
        empirical_mean.push(pairwise_sum(&col) / n);
        coordinatewise_median.push(median(&col).expect("datasets are nonempty"));
    }
    Baselines { empirical_mean, coordinatewise_median }
}
