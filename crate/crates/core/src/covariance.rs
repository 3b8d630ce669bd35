//! Scatter estimation from MOMAD by polarization.
//!
//! With block size `n = N/K`, MOMAD_K(v) is close to `φ₀·‖Σ^{1/2}v‖/√n`, so
//! `n·MOMAD²(v)` estimates `φ₀²·vᵀΣv` and the polarization identity
//! `4Σ_ij = (e_i+e_j)ᵀΣ(e_i+e_j) − (e_i−e_j)ᵀΣ(e_i−e_j)` recovers the entries.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::{bucket_means, partition_blocks, BucketedMeans, Dataset, MedianConvention};
use crate::depth::momad_with;
use crate::error::{Error, Result};
use crate::math::PHI0_GAUSSIAN;

/// Eigenvalues above `-PSD_TOL·max(1, |λ|max)` count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

/// Estimate of φ₀²Σ.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterEstimate {
    pub matrix: DMatrix<f64>,
    pub phi0: f64,
    pub projected: bool,
    pub negative_eigenvalue_mass: f64,
    /// Pair directions `(i, j)` whose MOMAD vanished.
    pub degenerate: Vec<(usize, usize)>,
}

impl ScatterEstimate {
    /// The implied estimate of Σ itself.
    pub fn sigma(&self) -> DMatrix<f64> {
        &self.matrix / (self.phi0 * self.phi0)
    }
}

/// Scatter from `k` contiguous blocks of `data`.
pub fn estimate_scatter(data: &Dataset, k: usize) -> Result<ScatterEstimate> {
    let part = partition_blocks(data.n_rows(), k, 0, false)?;
    let means = bucket_means(data, &part)?;
    estimate_scatter_from_means(&means, MedianConvention::LowerMiddle)
}

/// Scatter from precomputed block means; the block size plays the role of N/K.
pub fn estimate_scatter_from_means(means: &BucketedMeans, conv: MedianConvention) -> Result<ScatterEstimate> {
    if means.k() < 2 {
        return Err(Error::InvalidPartition { n: means.partition.n_rows(), k: means.k() });
    }
    let d = means.dim();
    let n = means.block_size() as f64;
    let mut matrix = DMatrix::zeros(d, d);
    let mut degenerate = Vec::new();
    let mut v = alloc::vec![0.0; d];
    for i in 0..d {
        v.fill(0.0);
        v[i] = 1.0;
        let m = momad_with(means, &v, conv)?;
        if m == 0.0 {
            degenerate.push((i, i));
        }
        matrix[(i, i)] = n * m * m;
        for j in i + 1..d {
            v.fill(0.0);
            v[i] = 1.0;
            v[j] = 1.0;
            let plus = momad_with(means, &v, conv)?;
            v[j] = -1.0;
            let minus = momad_with(means, &v, conv)?;
            if plus == 0.0 || minus == 0.0 {
                degenerate.push((i, j));
            }
            let s = 0.25 * n * (plus * plus - minus * minus);
            matrix[(i, j)] = s;
            matrix[(j, i)] = s;
        }
    }
    Ok(ScatterEstimate { matrix, phi0: PHI0_GAUSSIAN, projected: false, negative_eigenvalue_mass: 0.0, degenerate })
}

/// Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.
pub fn psd_project(est: &ScatterEstimate) -> Result<ScatterEstimate> {
    let m = &est.matrix;
    if !m.is_square() {
        return Err(Error::Contract("scatter matrix is not square".into()));
    }
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Contract("scatter matrix is not symmetric".into()));
            }
        }
    }
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let mut out = est.clone();
    out.projected = true;
    if eig.eigenvalues.iter().all(|&l| l >= -PSD_TOL * top) {
        return Ok(out);
    }
    let clipped: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&lam) * v.transpose();
    out.matrix = (&rebuilt + rebuilt.transpose()) * 0.5;
    out.negative_eigenvalue_mass += clipped;
    Ok(out)
}

/// `max_ij |φ₀²Σ_ij − Σ̂_ij| / (Σ_ii + Σ_jj)`.
pub fn scatter_error(est: &DMatrix<f64>, true_sigma: &DMatrix<f64>, phi0: f64) -> Result<f64> {
    if est.shape() != true_sigma.shape() || !est.is_square() {
        return Err(Error::Contract("estimate and true sigma differ in shape".into()));
    }
    let d = est.nrows();
    if (0..d).any(|i| !(true_sigma[(i, i)] > 0.0)) {
        return Err(Error::Domain("true sigma has a nonpositive diagonal entry".into()));
    }
    let p2 = phi0 * phi0;
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let e = (p2 * true_sigma[(i, j)] - est[(i, j)]).abs() / (true_sigma[(i, i)] + true_sigma[(j, j)]);
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::momad;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn est(m: DMatrix<f64>) -> ScatterEstimate {
        ScatterEstimate { matrix: m, phi0: PHI0_GAUSSIAN, projected: false, negative_eigenvalue_mass: 0.0, degenerate: Vec::new() }
    }

    #[test]
    fn polarization_identity() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let q = |v: [f64; 2]| {
            let x = nalgebra::DVector::from_column_slice(&v);
            (x.transpose() * &s * &x)[(0, 0)]
        };
        assert_eq!(q([1.0, 1.0]), 7.0);
        assert_eq!(q([1.0, -1.0]), 3.0);
        assert_eq!((q([1.0, 1.0]) - q([1.0, -1.0])) / 4.0, s[(0, 1)]);
    }

    #[test]
    fn constant_data_gives_zero() {
        let data = Dataset::from_rows(&alloc::vec![alloc::vec![1.0, -2.0, 0.5]; 12]).unwrap();
        let e = estimate_scatter(&data, 4).unwrap();
        assert_eq!(e.matrix, DMatrix::zeros(3, 3));
        assert_eq!(e.degenerate.len(), 6);
        assert!(matches!(estimate_scatter(&data, 1), Err(Error::InvalidPartition { .. })));
    }

    #[test]
    fn psd_examples() {
        let p = est(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        let out = psd_project(&p).unwrap();
        assert_eq!(out.matrix, p.matrix);
        assert_eq!(out.negative_eigenvalue_mass, 0.0);
        assert!(out.projected);

        let n = est(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]));
        let out = psd_project(&n).unwrap();
        assert_relative_eq!(out.matrix, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), epsilon = 1e-15);
        assert_relative_eq!(out.negative_eigenvalue_mass, 0.5, epsilon = 1e-15);
        let again = psd_project(&out).unwrap();
        assert_eq!(again.matrix, out.matrix);

        let asym = est(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]));
        assert!(matches!(psd_project(&asym), Err(Error::Contract(_))));
    }

    #[test]
    fn error_metric_examples() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let exact = &s * (PHI0_GAUSSIAN * PHI0_GAUSSIAN);
        assert_eq!(scatter_error(&exact, &s, PHI0_GAUSSIAN).unwrap(), 0.0);
        let mut bumped = exact.clone();
        bumped[(0, 0)] += 0.1;
        assert_relative_eq!(scatter_error(&bumped, &s, PHI0_GAUSSIAN).unwrap(), 0.1 / 4.0, epsilon = 1e-15);
        assert!(scatter_error(&DMatrix::zeros(3, 3), &s, 1.0).is_err());
    }

    fn arb_data() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
        (2usize..5, 4usize..8, 2usize..6).prop_flat_map(|(d, k, bs)| {
            (proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, d), k * bs), Just(k))
        })
    }

    proptest! {
        #[test]
        fn diagonal_consistency_symmetry_and_scaling((rows, k) in arb_data(), lam in 0.1f64..10.0) {
            let data = Dataset::from_rows(&rows).unwrap();
            let e = estimate_scatter(&data, k).unwrap();
            let part = partition_blocks(data.n_rows(), k, 0, false).unwrap();
            let means = bucket_means(&data, &part).unwrap();
            let d = data.dim();
            for i in 0..d {
                let mut ei = alloc::vec![0.0; d];
                ei[i] = 1.0;
                let m = momad(&means, &ei).unwrap();
                prop_assert_eq!(e.matrix[(i, i)], means.block_size() as f64 * m * m);
                for j in 0..d {
                    prop_assert_eq!(e.matrix[(i, j)], e.matrix[(j, i)]);
                }
            }
            let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| lam * x).collect()).collect();
            let es = estimate_scatter(&Dataset::from_rows(&scaled).unwrap(), k).unwrap();
            for (a, b) in es.matrix.iter().zip(e.matrix.iter()) {
                prop_assert!((a - lam * lam * b).abs() <= 1e-9 * (1.0 + lam * lam * b.abs()));
            }
        }

        #[test]
        fn projection_is_nearest_psd(entries in proptest::collection::vec(-3.0f64..3.0, 9), seeds in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 9), 100)) {
            let a = DMatrix::from_row_slice(3, 3, &entries);
            let m = (&a + a.transpose()) * 0.5;
            let out = psd_project(&est(m.clone())).unwrap();
            let dist = (&out.matrix - &m).norm();
            for b in &seeds {
                let b = DMatrix::from_row_slice(3, 3, b);
                let p = &b * b.transpose();
                prop_assert!(dist <= (&p - &m).norm() + 1e-9);
            }
            let eig = SymmetricEigen::new(out.matrix.clone());
            prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
        }
    }
}
