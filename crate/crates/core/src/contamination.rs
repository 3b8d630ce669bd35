//! Clean-data generators and adversarial attacks.
//!
//! Generation draws row `i` from its own counter stream of the seed, so a row
//! does not depend on how many rows come before it. Attacks see the whole
//! clean dataset, including the oracle, before choosing what to overwrite.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::ToString;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::data::{partition_blocks, Dataset, Oracle};
use crate::error::{Error, Result};
use crate::math::norm;
use crate::seed::{self, Rng};
use crate::theory::EllipticalRadial;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Gaussian,
    /// `μ + Σ^{1/2}·R·U` with a discrete radius law.
    EllipticalDiscrete(EllipticalRadial),
    /// Multivariate t with `dof > 2` degrees of freedom, scaled so that
    /// `sigma` is its covariance.
    StudentT { dof: f64 },
}

/// A clean sampling model. `sigma` is the covariance for the Gaussian and
/// Student-t kinds and the scatter matrix for the elliptical kind, which has
/// no second moment.
#[derive(Debug, Clone, PartialEq)]
pub struct DataModel {
    pub kind: ModelKind,
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
}

impl DataModel {
    pub fn new(kind: ModelKind, mu: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let m = Self { kind, mu, sigma };
        m.factor()?;
        Ok(m)
    }

    /// Standard model: μ = 0, Σ = I.
    pub fn standard(kind: ModelKind, dim: usize) -> Result<Self> {
        Self::new(kind, alloc::vec![0.0; dim], DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn factor(&self) -> Result<DMatrix<f64>> {
        let d = self.mu.len();
        if d == 0 {
            return Err(Error::Model("dimension must be positive".to_string()));
        }
        if self.sigma.nrows() != d || self.sigma.ncols() != d {
            return Err(Error::Model("sigma shape does not match mu".to_string()));
        }
        if self.sigma != self.sigma.transpose() {
            return Err(Error::Model("sigma is not symmetric".to_string()));
        }
        if self.mu.iter().chain(self.sigma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Model("non-finite model parameter".to_string()));
        }
        match &self.kind {
            ModelKind::StudentT { dof } if !(*dof > 2.0) => {
                return Err(Error::Model("student-t needs dof > 2 for sigma to be its covariance".to_string()))
            }
            ModelKind::EllipticalDiscrete(e) if e.dim != d => {
                return Err(Error::Model("radial law built for a different dimension".to_string()))
            }
            _ => {}
        }
        Cholesky::new(self.sigma.clone())
            .map(|c| c.l())
            .ok_or_else(|| Error::Model("sigma is not positive definite".to_string()))
    }
}

fn standard_normal_vec(rng: &mut Rng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}

/// Uniform point on the unit sphere.
pub fn unit_vector(rng: &mut Rng, dim: usize) -> Vec<f64> {
    let mut v = alloc::vec![0.0; dim];
    loop {
        standard_normal_vec(rng, &mut v);
        let n = norm(&v);
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

fn sample_radius(rng: &mut Rng, e: &EllipticalRadial) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (&r, &a) in e.radii.iter().zip(&e.masses) {
        acc += a;
        if u < acc {
            return r;
        }
    }
    *e.radii.last().unwrap()
}

/// `n` i.i.d. draws with the oracle set to (μ, Σ) and no outliers.
pub fn generate_clean(model: &DataModel, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let l = model.factor()?;
    let d = model.dim();
    let mut values = Vec::with_capacity(n * d);
    let mut z = alloc::vec![0.0; d];
    for i in 0..n {
        let mut rng = seed::stream(seed, i as u64);
        let scale = match &model.kind {
            ModelKind::Gaussian => {
                standard_normal_vec(&mut rng, &mut z);
                1.0
            }
            ModelKind::StudentT { dof } => {
                standard_normal_vec(&mut rng, &mut z);
                let w: f64 = ChiSquared::new(*dof).map_err(|e| Error::Model(e.to_string()))?.sample(&mut rng);
                ((dof - 2.0) / w).sqrt()
            }
            ModelKind::EllipticalDiscrete(e) => {
                z.copy_from_slice(&unit_vector(&mut rng, d));
                sample_radius(&mut rng, e)
            }
        };
        for a in 0..d {
            let mut acc = 0.0;
            for b in 0..=a {
                acc += l[(a, b)] * z[b];
            }
            values.push(model.mu[a] + scale * acc);
        }
    }
    Dataset::from_flat(values, d)?.with_oracle(Oracle {
        true_mu: Some(model.mu.clone()),
        true_sigma: Some(model.sigma.clone()),
        outlier_indices: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AttackKind {
    /// Random rows moved to `μ̂ + magnitude·u` for one random unit `u`.
    RelocateFar,
    /// The largest-norm rows moved to `μ̂ + magnitude·u`.
    LargestNormReplace,
    /// Random rows collapsed onto `μ̂ + magnitude·v`, `v` the least-variance
    /// eigenvector of the sample covariance.
    ClusterShift,
    /// Whole blocks of the partition `(k, seed, shuffle)` filled in order and
    /// moved to `μ̂ + magnitude·u`.
    BlockPoison { k: usize, partition_seed: u64, shuffle: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub n_out: usize,
    pub magnitude: f64,
    pub seed: u64,
}

/// A user-defined adversary. It returns the rows it replaces and their new
/// values; indices must be distinct and in range.
pub trait Attack {
    fn corrupt(&self, clean: &Dataset) -> Result<Vec<(usize, Vec<f64>)>>;
}

fn empirical_mean(data: &Dataset) -> Vec<f64> {
    let inv = 1.0 / data.n_rows() as f64;
    (0..data.dim()).map(|j| crate::math::pairwise_sum(&data.column(j)) * inv).collect()
}

fn least_variance_direction(data: &Dataset, mean: &[f64]) -> Vec<f64> {
    let d = data.dim();
    let mut cov = DMatrix::zeros(d, d);
    for r in data.rows() {
        let x = DVector::from_iterator(d, r.iter().zip(mean).map(|(a, m)| a - m));
        cov += &x * x.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (imin, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &l)| if l < b.1 { (i, l) } else { b });
    eig.eigenvectors.column(imin).iter().copied().collect()
}

impl Attack for AttackSpec {
    fn corrupt(&self, clean: &Dataset) -> Result<Vec<(usize, Vec<f64>)>> {
        let n = clean.n_rows();
        if self.n_out > n {
            return Err(Error::Contract(alloc::format!("{} outliers requested for {n} rows", self.n_out)));
        }
        if !self.magnitude.is_finite() {
            return Err(Error::Domain("attack magnitude must be finite".to_string()));
        }
        if self.n_out == 0 {
            return Ok(Vec::new());
        }
        let d = clean.dim();
        let mut rng = seed::rng(self.seed);
        let mean = empirical_mean(clean);
        let dir = match self.kind {
            AttackKind::ClusterShift => least_variance_direction(clean, &mean),
            _ => unit_vector(&mut rng, d),
        };
        let target: Vec<f64> = mean.iter().zip(&dir).map(|(m, u)| m + self.magnitude * u).collect();
        let rows: Vec<usize> = match self.kind {
            AttackKind::RelocateFar | AttackKind::ClusterShift => index::sample(&mut rng, n, self.n_out).into_vec(),
            AttackKind::LargestNormReplace => {
                let mut order: Vec<usize> = (0..n).collect();
                // ties broken by index so the choice is deterministic
                order.sort_by(|&a, &b| norm(clean.row(b)).total_cmp(&norm(clean.row(a))).then(a.cmp(&b)));
                order.truncate(self.n_out);
                order
            }
            AttackKind::BlockPoison { k, partition_seed, shuffle } => {
                let part = partition_blocks(n, k, partition_seed, shuffle)?;
                part.blocks.iter().flatten().chain(part.dropped.iter()).copied().take(self.n_out).collect()
            }
        };
        Ok(rows.into_iter().map(|i| (i, target.clone())).collect())
    }
}

/// Overwrite the rows chosen by `attack` and add them to the oracle's
/// outlier set.
pub fn apply_custom_attack<A: Attack + ?Sized>(data: &Dataset, attack: &A) -> Result<Dataset> {
    let edits = attack.corrupt(data)?;
    let mut seen = alloc::vec![false; data.n_rows()];
    let mut out = data.clone();
    for (i, row) in &edits {
        if *i >= data.n_rows() || seen[*i] {
            return Err(Error::Contract(alloc::format!("attack returned invalid or repeated row {i}")));
        }
        if row.len() != data.dim() || row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract(alloc::format!("attack returned a malformed row for index {i}")));
        }
        seen[*i] = true;
        out.row_mut(*i).copy_from_slice(row);
    }
    let mut oracle = data.oracle.clone().unwrap_or_default();
    oracle.outlier_indices.extend(edits.iter().map(|(i, _)| *i));
    oracle.outlier_indices.sort_unstable();
    oracle.outlier_indices.dedup();
    out.oracle = Some(oracle);
    Ok(out)
}

pub fn apply_attack(data: &Dataset, spec: &AttackSpec) -> Result<Dataset> {
    apply_custom_attack(data, spec)
}
