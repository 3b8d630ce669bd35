//! Outlyingness kernel: MAD, MOMAD, direction sets and the Stahel-Donoho
//! outlyingness evaluated over a finite set of directions.
//!
//! For a direction v with projected median m_v and scale s_v = MOMAD_K(v),
//! the per-direction outlyingness of μ is |⟨μ,v⟩ − m_v| / s_v. When s_v = 0
//! the ratio is 0 if the numerator vanishes and +∞ otherwise. The maximum
//! over a finite direction set is a lower bound on the supremum over the
//! sphere.

use alloc::vec::Vec;
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{median_in_place, BucketedMeans, MedianConvention};
use crate::error::{Error, Result};
use crate::math::{dot, norm};
use crate::seed;

/// Relative size below which a numerator counts as zero when the scale is zero.
pub const ZERO_NUMERATOR_TOL: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;
const HYPERPLANE_RETRIES: usize = 10;

/// Where a direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    UniformSphere,
    StahelHyperplane,
    Canonical,
    CanonicalPairSum,
    CanonicalPairDiff,
    Augmented,
}

/// Unit vectors in ℝ^d, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    vectors: Vec<f64>,
    provenance: Vec<Provenance>,
    /// Hyperplane draws abandoned after exhausting their retries.
    pub skipped_hyperplanes: usize,
}

impl DirectionSet {
    pub fn empty(dim: usize) -> Self {
        Self { dim, vectors: Vec::new(), provenance: Vec::new(), skipped_hyperplanes: 0 }
    }

    /// e_i, and when `pairs` is set, (e_i ± e_j)/√2 for i < j.
    pub fn canonical(dim: usize, pairs: bool) -> Self {
        let mut set = Self::empty(dim);
        set.push_canonical(pairs);
        set
    }

    fn push_canonical(&mut self, pairs: bool) {
        let d = self.dim;
        let mut v = alloc::vec![0.0; d];
        for i in 0..d {
            v.fill(0.0);
            v[i] = 1.0;
            self.push_unchecked(&v, Provenance::Canonical);
        }
        if !pairs {
            return;
        }
        let h = core::f64::consts::FRAC_1_SQRT_2;
        for i in 0..d {
            for j in i + 1..d {
                v.fill(0.0);
                v[i] = h;
                v[j] = h;
                self.push_unchecked(&v, Provenance::CanonicalPairSum);
                v[j] = -h;
                self.push_unchecked(&v, Provenance::CanonicalPairDiff);
            }
        }
    }

    /// Normalizes `v` and fixes its sign (first non-negligible entry positive).
    pub fn push(&mut self, v: &[f64], provenance: Provenance) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Contract("direction has wrong dimension".into()));
        }
        let n = norm(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("zero or non-finite direction".into()));
        }
        let lead = v.iter().copied().find(|x| x.abs() > UNIT_TOL * n).unwrap_or(1.0);
        let s = if lead < 0.0 { -1.0 / n } else { 1.0 / n };
        self.vectors.extend(v.iter().map(|x| x * s));
        self.provenance.push(provenance);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, v: &[f64], provenance: Provenance) {
        self.vectors.extend_from_slice(v);
        self.provenance.push(provenance);
    }

    pub fn from_vectors<R: AsRef<[f64]>>(dim: usize, vs: &[R], provenance: Provenance) -> Result<Self> {
        let mut set = Self::empty(dim);
        for v in vs {
            set.push(v.as_ref(), provenance)?;
        }
        Ok(set)
    }

    pub fn extend(&mut self, other: &DirectionSet) {
        assert_eq!(self.dim, other.dim);
        self.vectors.extend_from_slice(&other.vectors);
        self.provenance.extend_from_slice(&other.provenance);
        self.skipped_hyperplanes += other.skipped_hyperplanes;
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn provenance(&self, i: usize) -> Provenance {
        self.provenance[i]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.vectors.chunks_exact(self.dim)
    }
}

/// Direction budgets. `None` selects the data-dependent default.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionConfig {
    pub n_random: Option<usize>,
    pub n_hyperplane: Option<usize>,
    pub include_canonical: bool,
}

impl Default for DirectionConfig {
    fn default() -> Self {
        Self { n_random: None, n_hyperplane: None, include_canonical: true }
    }
}

impl DirectionConfig {
    /// Hyperplane normals only: the affine-equivariant generator.
    pub fn hyperplanes_only(n: usize) -> Self {
        Self { n_random: Some(0), n_hyperplane: Some(n), include_canonical: false }
    }

    pub fn resolved_random(&self, d: usize) -> usize {
        self.n_random.unwrap_or_else(|| (50 * d).max(500))
    }

    pub fn resolved_hyperplane(&self, d: usize, k: usize) -> usize {
        self.n_hyperplane.unwrap_or_else(|| binomial_capped(k, d, 500) as usize)
    }

    pub fn generate(&self, means: &BucketedMeans, seed: u64) -> Result<DirectionSet> {
        let d = means.dim();
        generate_directions(
            means,
            self.resolved_random(d),
            self.resolved_hyperplane(d, means.k()),
            self.include_canonical,
            seed,
        )
    }
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc >= cap as u128 {
            return cap;
        }
    }
    (acc as u64).min(cap)
}

/// Uniform directions, Stahel hyperplane normals through `d` sampled block
/// means, and optionally the canonical basis with its normalized pair sums
/// and differences.
pub fn generate_directions(
    means: &BucketedMeans,
    n_random: usize,
    n_hyperplane: usize,
    include_canonical: bool,
    seed: u64,
) -> Result<DirectionSet> {
    let d = means.dim();
    if d == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    if means.k() == 0 {
        return Err(Error::EmptyInput);
    }
    if n_hyperplane > 0 && means.k() < d {
        return Err(Error::Config(alloc::format!(
            "hyperplane directions need at least d = {d} block means, got K = {}",
            means.k()
        )));
    }
    if d == 1 {
        // every generator yields ±1
        let mut set = DirectionSet::empty(1);
        set.push_unchecked(&[1.0], Provenance::Canonical);
        return Ok(set);
    }
    let mut rng = seed::rng(seed);
    let mut set = DirectionSet::empty(d);
    let mut v = alloc::vec![0.0; d];
    for _ in 0..n_random {
        loop {
            for x in v.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            if norm(&v) > 1e-8 {
                break;
            }
        }
        set.push(&v, Provenance::UniformSphere)?;
    }
    let mut points: Vec<&[f64]> = Vec::with_capacity(d);
    for _ in 0..n_hyperplane {
        let mut found = false;
        for _ in 0..HYPERPLANE_RETRIES {
            points.clear();
            points.extend(index::sample(&mut rng, means.k(), d).into_iter().map(|i| means.mean(i)));
            if let Some(n) = hyperplane_normal(&points) {
                set.push(&n, Provenance::StahelHyperplane)?;
                found = true;
                break;
            }
        }
        if !found {
            set.skipped_hyperplanes += 1;
        }
    }
    if include_canonical {
        set.push_canonical(true);
    }
    if set.is_empty() {
        return Err(Error::Config("direction budget produced no directions".into()));
    }
    Ok(set)
}

/// Unit normal of the affine hyperplane through `points` (d points in ℝ^d),
/// or `None` when they are affinely dependent.
pub fn hyperplane_normal(points: &[&[f64]]) -> Option<Vec<f64>> {
    let d = points.first()?.len();
    if points.len() != d {
        return None;
    }
    let base = points[0];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for p in &points[1..] {
        let mut u: Vec<f64> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        let scale = norm(&u);
        if !(scale > 0.0) {
            return None;
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&u, q);
                u.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = norm(&u);
        if r <= RANK_TOL * scale {
            return None;
        }
        u.iter_mut().for_each(|x| *x /= r);
        basis.push(u);
    }
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for j in 0..d {
        let mut e = alloc::vec![0.0; d];
        e[j] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&e, q);
                e.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = norm(&e);
        if r > best_norm {
            best_norm = r;
            best = Some(e);
        }
    }
    let mut n = best?;
    n.iter_mut().for_each(|x| *x /= best_norm);
    Some(n)
}

/// Median absolute deviation about the median.
pub fn mad_1d(values: &[f64]) -> Result<f64> {
    mad_with(values, MedianConvention::LowerMiddle)
}

pub fn mad_with(values: &[f64], conv: MedianConvention) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buf = values.to_vec();
    Ok(median_and_mad(&mut buf, conv).1)
}

/// (median, MAD) of a scratch buffer, which is overwritten.
fn median_and_mad(buf: &mut [f64], conv: MedianConvention) -> (f64, f64) {
    let med = median_in_place(buf, conv);
    for x in buf.iter_mut() {
        *x = (*x - med).abs();
    }
    (med, median_in_place(buf, conv))
}

/// MOMAD_K(v) = Med_k |⟨X̄_k,v⟩ − Med_k⟨X̄_k,v⟩|. `v` need not be normalized.
pub fn momad(means: &BucketedMeans, v: &[f64]) -> Result<f64> {
    momad_with(means, v, MedianConvention::LowerMiddle)
}

pub fn momad_with(means: &BucketedMeans, v: &[f64], conv: MedianConvention) -> Result<f64> {
    if v.len() != means.dim() {
        return Err(Error::Contract("direction has wrong dimension".into()));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain("MOMAD of the zero vector".into()));
    }
    // Evaluate on the sign-canonical representative so that momad(-v) == momad(v)
    // even when an even block count makes the median one-sided.
    let n = norm(v);
    let lead = v.iter().copied().find(|x| x.abs() > UNIT_TOL * n).unwrap_or(1.0);
    let mut proj = means.project(v);
    if lead < 0.0 {
        proj.iter_mut().for_each(|p| *p = -*p);
    }
    Ok(median_and_mad(&mut proj, conv).1)
}

/// Cached projected median and scale for one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionStat {
    pub median: f64,
    pub momad: f64,
}

/// Projected medians and MOMADs for every direction of a set.
#[derive(Debug, Clone)]
pub struct DepthProfile {
    pub dirs: DirectionSet,
    pub stats: Vec<DirectionStat>,
    pub k: usize,
    pub block_size: usize,
    pub convention: MedianConvention,
}

impl DepthProfile {
    pub fn build(means: &BucketedMeans, dirs: DirectionSet, convention: MedianConvention) -> Result<Self> {
        if dirs.dim() != means.dim() {
            return Err(Error::Contract("direction set and means disagree on dimension".into()));
        }
        let mut buf = Vec::with_capacity(means.k());
        let stats = dirs
            .iter()
            .map(|v| {
                buf.clear();
                buf.extend(means.iter().map(|m| dot(m, v)));
                let (median, momad) = median_and_mad(&mut buf, convention);
                DirectionStat { median, momad }
            })
            .collect();
        Ok(Self { dirs, stats, k: means.k(), block_size: means.block_size(), convention })
    }

    /// Append directions, computing their statistics.
    pub fn extend(&mut self, means: &BucketedMeans, extra: &DirectionSet) {
        let other = DepthProfile::build(means, extra.clone(), self.convention).expect("dimension checked by caller");
        self.dirs.extend(&other.dirs);
        self.stats.extend(other.stats);
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dirs.dim()
    }

    /// Outlyingness of μ along direction `i`.
    #[inline]
    pub fn ratio(&self, mu: &[f64], i: usize) -> f64 {
        let proj = dot(mu, self.dirs.get(i));
        let DirectionStat { median, momad } = self.stats[i];
        outlyingness_ratio(proj, median, momad)
    }

    /// Maximum ratio and the first direction attaining it.
    pub fn sdo_argmax(&self, mu: &[f64]) -> (f64, Option<usize>) {
        let mut best = 0.0;
        let mut arg = None;
        for i in 0..self.len() {
            let r = self.ratio(mu, i);
            if r > best || arg.is_none() {
                best = r;
                arg = Some(i);
            }
        }
        (best, arg)
    }

    pub fn sdo(&self, mu: &[f64]) -> f64 {
        self.sdo_argmax(mu).0
    }

    /// Directions whose MOMAD vanishes.
    pub fn degenerate(&self) -> Vec<usize> {
        self.stats.iter().enumerate().filter(|(_, s)| s.momad == 0.0).map(|(i, _)| i).collect()
    }

    pub fn max_momad(&self) -> f64 {
        self.stats.iter().map(|s| s.momad).fold(0.0, f64::max)
    }
}

#[inline]
pub fn outlyingness_ratio(proj: f64, median: f64, scale: f64) -> f64 {
    let num = (proj - median).abs();
    if scale > 0.0 {
        num / scale
    } else if num <= ZERO_NUMERATOR_TOL * proj.abs().max(median.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// SDO_K(μ) over a finite direction set.
pub fn sdo_eval(mu: &[f64], means: &BucketedMeans, dirs: &DirectionSet) -> Result<f64> {
    if dirs.is_empty() {
        return Err(Error::Config("empty direction set".into()));
    }
    if mu.len() != means.dim() {
        return Err(Error::Contract("point has wrong dimension".into()));
    }
    Ok(DepthProfile::build(means, dirs.clone(), MedianConvention::LowerMiddle)?.sdo(mu))
}
