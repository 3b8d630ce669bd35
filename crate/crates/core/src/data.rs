//! Data containers, block partitioning and the order statistics every other
//! module is built on.
//!
//! Medians use the lower-middle order statistic (rank ⌈m/2⌉) unless the
//! caller asks for [`MedianConvention::Midpoint`], so a median is always a
//! sample value.

// Inherent float methods live in std; the trait supplies them under no_std.
#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::math::pairwise_sum;
use crate::seed;

/// Ground truth attached to simulated data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Oracle {
    pub true_mu: Option<Vec<f64>>,
    /// Row-major d×d SPD matrix (covariance, or scale when no second moment exists).
    pub true_sigma: Option<DMatrix<f64>>,
    /// Zero-based indices of rows touched by the adversary, ascending.
    pub outlier_indices: Vec<usize>,
}

/// N observations in ℝ^d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_rows: usize,
    dim: usize,
    pub oracle: Option<Oracle>,
}

impl Dataset {
    /// Build from a flat row-major buffer.
    pub fn from_flat(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.len() % dim != 0 {
            return Err(Error::Contract(alloc::format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(alloc::format!(
                "non-finite entry at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let n_rows = values.len() / dim;
        Ok(Self { values, n_rows, dim, oracle: None })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(Error::EmptyInput)?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Contract(alloc::format!(
                    "row {i} has {} entries, expected {dim}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::from_flat(values, dim)
    }

    pub fn with_oracle(mut self, oracle: Oracle) -> Result<Self> {
        if let Some(&bad) = oracle.outlier_indices.iter().find(|&&i| i >= self.n_rows) {
            return Err(Error::Contract(alloc::format!(
                "outlier index {bad} out of range for {} rows",
                self.n_rows
            )));
        }
        if let Some(mu) = &oracle.true_mu {
            if mu.len() != self.dim {
                return Err(Error::Contract("oracle mu has wrong dimension".into()));
            }
        }
        if let Some(s) = &oracle.true_sigma {
            if s.nrows() != self.dim || s.ncols() != self.dim {
                return Err(Error::Contract("oracle sigma has wrong shape".into()));
            }
        }
        self.oracle = Some(oracle);
        Ok(self)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn true_mu(&self) -> Option<&[f64]> {
        self.oracle.as_ref()?.true_mu.as_deref()
    }

    pub fn true_sigma(&self) -> Option<&DMatrix<f64>> {
        self.oracle.as_ref()?.true_sigma.as_ref()
    }

    /// Apply `x ↦ a·x + b` to every row (used by equivariance checks).
    pub fn map_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        if a.nrows() != self.dim || a.ncols() != self.dim || b.len() != self.dim {
            return Err(Error::Contract("affine map has wrong shape".into()));
        }
        let mut out = Vec::with_capacity(self.values.len());
        for r in self.rows() {
            for i in 0..self.dim {
                let mut acc = b[i];
                for j in 0..self.dim {
                    acc += a[(i, j)] * r[j];
                }
                out.push(acc);
            }
        }
        Self::from_flat(out, self.dim)
    }
}

/// K disjoint equal-size blocks covering a prefix of the (possibly shuffled) row order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    pub k: usize,
    pub block_size: usize,
    pub blocks: Vec<Vec<usize>>,
    /// Rows left out because N is not a multiple of K.
    pub dropped: Vec<usize>,
}

impl BlockPartition {
    pub fn n_rows(&self) -> usize {
        self.k * self.block_size + self.dropped.len()
    }

    /// Block containing each row, `None` for dropped rows.
    pub fn block_of(&self) -> Vec<Option<usize>> {
        let mut out = alloc::vec![None; self.n_rows()];
        for (b, idx) in self.blocks.iter().enumerate() {
            for &i in idx {
                out[i] = Some(b);
            }
        }
        out
    }
}

/// Split `0..n` into `k` blocks of size ⌊n/k⌋, optionally after a seeded shuffle.
pub fn partition_blocks(n: usize, k: usize, seed: u64, shuffle: bool) -> Result<BlockPartition> {
    if k == 0 || k > n {
        return Err(Error::InvalidPartition { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut seed::rng(seed));
    }
    let block_size = n / k;
    let used = block_size * k;
    let blocks = order[..used].chunks(block_size).map(|c| c.to_vec()).collect();
    let mut dropped = order[used..].to_vec();
    dropped.sort_unstable();
    Ok(BlockPartition { k, block_size, blocks, dropped })
}

/// The K block means.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketedMeans {
    means: Vec<f64>,
    dim: usize,
    pub partition: BlockPartition,
}

impl BucketedMeans {
    /// Means given directly (no source data), each block of size one.
    pub fn from_points<R: AsRef<[f64]>>(points: &[R]) -> Result<Self> {
        let ds = Dataset::from_rows(points)?;
        let part = partition_blocks(ds.n_rows(), ds.n_rows(), 0, false)?;
        bucket_means(&ds, &part)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.partition.k
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rows per block, the N/K factor of the scale formulas.
    #[inline]
    pub fn block_size(&self) -> usize {
        self.partition.block_size
    }

    #[inline]
    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.means.chunks_exact(self.dim)
    }

    /// ⟨X̄_k, v⟩ for every block.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.iter().map(|m| crate::math::dot(m, v)).collect()
    }

    /// Coordinatewise lower-middle median of the block means.
    pub fn coordinatewise_median(&self) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.k());
        (0..self.dim)
            .map(|j| {
                buf.clear();
                buf.extend(self.iter().map(|m| m[j]));
                median_in_place(&mut buf, MedianConvention::LowerMiddle)
            })
            .collect()
    }
}

/// Block means, each accumulated in ascending row order with pairwise
/// summation of deviations from the block's first row.
pub fn bucket_means(data: &Dataset, part: &BlockPartition) -> Result<BucketedMeans> {
    if part.n_rows() != data.n_rows() {
        return Err(Error::Contract(alloc::format!(
            "partition covers {} rows but dataset has {}",
            part.n_rows(),
            data.n_rows()
        )));
    }
    let d = data.dim();
    let mut means = Vec::with_capacity(part.k * d);
    let mut scratch = Vec::with_capacity(part.block_size);
    for block in &part.blocks {
        if block.is_empty() {
            return Err(Error::InvalidPartition { n: data.n_rows(), k: part.k });
        }
        let mut idx = block.clone();
        idx.sort_unstable();
        let pivot = data.row(idx[0]);
        let inv = 1.0 / idx.len() as f64;
        for j in 0..d {
            scratch.clear();
            scratch.extend(idx.iter().map(|&i| data.row(i)[j] - pivot[j]));
            means.push(pivot[j] + pairwise_sum(&scratch) * inv);
        }
    }
    Ok(BucketedMeans { means, dim: d, partition: part.clone() })
}

/// How to resolve the median of an even number of values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MedianConvention {
    /// Order statistic of rank ⌈m/2⌉.
    #[default]
    LowerMiddle,
    /// Average of the two central order statistics.
    Midpoint,
}

/// Median of a scratch buffer, reordering it. Panics on an empty slice.
pub fn median_in_place(values: &mut [f64], conv: MedianConvention) -> f64 {
    let m = values.len();
    assert!(m > 0, "median of empty slice");
    let lo = (m - 1) / 2;
    let (_, &mut lower, upper) = values.select_nth_unstable_by(lo, f64::total_cmp);
    match conv {
        MedianConvention::LowerMiddle => lower,
        MedianConvention::Midpoint if m % 2 == 0 => {
            let next = upper.iter().copied().fold(f64::INFINITY, f64::min);
            0.5 * (lower + next)
        }
        MedianConvention::Midpoint => lower,
    }
}

pub fn median_with(values: &[f64], conv: MedianConvention) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buf = values.to_vec();
    Ok(median_in_place(&mut buf, conv))
}

/// Lower-middle median.
pub fn median(values: &[f64]) -> Result<f64> {
    median_with(values, MedianConvention::LowerMiddle)
}

/// Empirical tail function H(r) = #{values ≥ r}/m and its generalized inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    sorted: Vec<f64>,
}

impl EmpiricalTail {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN in tail sample".into()));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of stored values ≥ r.
    pub fn h(&self, r: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x < r);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }

    /// W(p) = max{r : H(r) ≥ p}, which is always a sample value.
    pub fn w(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(alloc::format!("probability {p} outside (0,1)")));
        }
        let m = self.sorted.len();
        let mf = m as f64;
        // smallest count c with c/m >= p
        let mut c = ((p * mf).ceil() as usize).clamp(1, m);
        while c > 1 && (c - 1) as f64 / mf >= p {
            c -= 1;
        }
        while c < m && (c as f64) / mf < p {
            c += 1;
        }
        Ok(self.sorted[m - c])
    }
}

pub fn empirical_h(tail: &EmpiricalTail, r: f64) -> f64 {
    tail.h(r)
}

pub fn quantile_w(tail: &EmpiricalTail, p: f64) -> Result<f64> {
    tail.w(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    }

    #[test]
    fn contiguous_partition() {
        let p = partition_blocks(6, 3, 0, false).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert!(p.dropped.is_empty());
        let p = partition_blocks(7, 3, 0, false).unwrap();
        assert_eq!(p.block_size, 2);
        assert_eq!(p.dropped, vec![6]);
        let p = partition_blocks(6, 6, 0, false).unwrap();
        assert!(p.blocks.iter().all(|b| b.len() == 1));
    }

    #[test]
    fn partition_errors() {
        assert_eq!(partition_blocks(3, 0, 0, false), Err(Error::InvalidPartition { n: 3, k: 0 }));
        assert_eq!(partition_blocks(3, 4, 0, true), Err(Error::InvalidPartition { n: 3, k: 4 }));
    }

    #[test]
    fn shuffled_partition_is_deterministic_and_disjoint() {
        let a = partition_blocks(101, 10, 42, true).unwrap();
        let b = partition_blocks(101, 10, 42, true).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.blocks.iter().flatten().copied().chain(a.dropped.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_ne!(a, partition_blocks(101, 10, 43, true).unwrap());
    }

    #[test]
    fn means_small_cases() {
        let ds = Dataset::from_rows(&[[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]]).unwrap();
        let m = bucket_means(&ds, &partition_blocks(6, 3, 0, false).unwrap()).unwrap();
        assert_eq!(m.project(&[1.0]), vec![1.5, 3.5, 5.5]);
        let m = bucket_means(&ds, &partition_blocks(6, 6, 0, false).unwrap()).unwrap();
        assert_eq!(m.project(&[1.0]), ds.column(0));
        let c = Dataset::from_rows(&vec![[0.1, -7.3]; 9]).unwrap();
        let m = bucket_means(&c, &partition_blocks(9, 3, 5, true).unwrap()).unwrap();
        assert!(m.iter().all(|r| r == [0.1, -7.3]));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), sorted(&[1.0, 2.0, 3.0, 4.0])[1]);
        assert_eq!(median(&[5.0, 5.0, 5.0]).unwrap(), 5.0);
        assert_eq!(median_with(&[1.0, 2.0, 3.0, 4.0], MedianConvention::Midpoint).unwrap(), 2.5);
        assert_eq!(median(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn tail_examples() {
        let t = EmpiricalTail::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.w(0.5).unwrap(), 3.0);
        let t = EmpiricalTail::new(vec![2.5; 5]).unwrap();
        assert_eq!(t.w(0.3).unwrap(), 2.5);
        assert_eq!(t.w(0.99).unwrap(), 2.5);
        let t = EmpiricalTail::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(t.w(0.9).unwrap(), 1.0);
        assert!(t.w(0.0).is_err() && t.w(1.0).is_err());

        let t = EmpiricalTail::new(vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.h(0.0), 2.0 / 3.0);
        assert_eq!(t.h(-5.0), 1.0);
        assert_eq!(t.h(5.0), 0.0);
        let sym = EmpiricalTail::new(vec![-2.0, -1.0, 0.0, 1.0, 2.0, -0.5, 0.5, 0.0]).unwrap();
        let just_above = f64::from_bits(0.0f64.to_bits() + 1);
        assert!(sym.h(just_above) <= 0.5);
    }

    proptest! {
        #[test]
        fn bucket_means_are_affine(
            rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 12),
            a in -5.0f64..5.0,
            b in proptest::collection::vec(-50.0f64..50.0, 3),
        ) {
            let ds = Dataset::from_rows(&rows).unwrap();
            let part = partition_blocks(12, 4, 0, false).unwrap();
            let m = bucket_means(&ds, &part).unwrap();
            let mapped: Vec<Vec<f64>> = rows.iter()
                .map(|r| r.iter().zip(&b).map(|(x, bb)| a * x + bb).collect())
                .collect();
            let m2 = bucket_means(&Dataset::from_rows(&mapped).unwrap(), &part).unwrap();
            for (u, v) in m.iter().zip(m2.iter()) {
                for j in 0..3 {
                    prop_assert!((a * u[j] + b[j] - v[j]).abs() <= 1e-9 * (1.0 + v[j].abs() + a.abs() * 100.0));
                }
            }
        }

        #[test]
        fn median_equivariance(v in proptest::collection::vec(-1e3f64..1e3, 1..20), c in -1e3f64..1e3, a in 0.0f64..10.0) {
            let m = median(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            prop_assert_eq!(median(&shifted).unwrap(), sorted(&shifted)[(v.len() - 1) / 2]);
            prop_assert!((median(&shifted).unwrap() - (m + c)).abs() <= 1e-9 * (1.0 + c.abs() + m.abs()));
            let scaled: Vec<f64> = v.iter().map(|x| a * x).collect();
            prop_assert_eq!(median(&scaled).unwrap(), a * m);
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let upper = sorted(&v)[v.len() / 2];
            prop_assert_eq!(median(&neg).unwrap(), -upper);
        }

        #[test]
        fn tail_inverse_properties(v in proptest::collection::vec(-10i32..10, 1..30), p1 in 0.001f64..0.999, p2 in 0.001f64..0.999) {
            let vals: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
            let t = EmpiricalTail::new(vals.clone()).unwrap();
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(t.w(lo).unwrap() >= t.w(hi).unwrap());
            prop_assert!(t.h(t.w(lo).unwrap()) >= lo);
            let s = sorted(&vals);
            let mut distinct = s.clone();
            distinct.dedup();
            let jumps = distinct.windows(2).filter(|w| t.h(w[1]) < t.h(w[0])).count() + 1;
            prop_assert_eq!(jumps, distinct.len());
        }
    }
}
