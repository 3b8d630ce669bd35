//! Diagnostics against the oracle: the MOMAD isometry band, the tail
//! condition near the origin, and estimated quartile-gap constants.

use nalgebra::DVector;
use sdmom_core::contamination::{unit_vector, DataModel, ModelKind};
use sdmom_core::data::{bucket_means, partition_blocks};
use sdmom_core::math::dot;
use sdmom_core::seed::{self, Stage};
use sdmom_core::theory::{check_origin_behaviour, standardized_projections, OriginCheck};
use sdmom_core::{estimate_phis, estimate_phis_model, momad, BucketedMeans, Dataset, DirectionSet, EmpiricalTail, PhiEstimate, Provenance, TailModel};
use serde::Serialize;

use crate::bench::{attack_from_settings, model_from_settings, simulate, KRule, ATTACK_KEYS, MODEL_KEYS};
use crate::config::Settings;
use crate::error::{Error, Result};

/// Keys read by every check: model and attack keys plus
/// `n`, `k` (integer or `n`), `n_directions`, `seed`, `epsilon` and `scale`.
pub const CHECK_KEYS: &[&str] = &["n", "k", "n_directions", "seed", "epsilon", "scale", "r_min", "r_max", "n_grid"];

/// Data, model and block means shared by the checks.
pub struct CheckSetup {
    pub model: DataModel,
    pub data: Dataset,
    pub means: BucketedMeans,
    pub dirs: DirectionSet,
    pub epsilon: f64,
    pub seed: u64,
}

impl CheckSetup {
    pub fn from_settings(s: &Settings, default_directions: usize) -> Result<Self> {
        let known: Vec<&str> = MODEL_KEYS.iter().chain(ATTACK_KEYS).chain(CHECK_KEYS).copied().collect();
        s.check_known(&known)?;
        let model = model_from_settings(s)?;
        let n: usize = s.require("n")?;
        let k = match s.get_or("k", KRule::All)? {
            KRule::Fixed(k) => k,
            KRule::All => n,
            _ => return Err(Error::Config("k must be an integer or \"n\" for checks".into())),
        };
        let seed: u64 = s.get_or("seed", 0)?;
        let scale: f64 = s.get_or("scale", 1.0)?;
        let attack = attack_from_settings(s)?;
        let mut data = simulate(&model, n, attack.as_ref(), Some(k), seed)?;
        if scale != 1.0 {
            let d = model.dim();
            data = data.map_affine(&(nalgebra::DMatrix::identity(d, d) * scale), &vec![0.0; d])?;
        }
        let part = partition_blocks(n, k, seed::derive(seed, &[Stage::Partition as u64]), true)?;
        let means = bucket_means(&data, &part)?;
        let n_dirs: usize = s.get_or("n_directions", default_directions)?;
        let mut rng = seed::rng(seed::derive(seed, &[Stage::Isometry as u64]));
        let vs: Vec<Vec<f64>> = (0..n_dirs).map(|_| unit_vector(&mut rng, model.dim())).collect();
        let dirs = DirectionSet::from_vectors(model.dim(), &vs, Provenance::UniformSphere)?;
        Ok(Self { model, data, means, dirs, epsilon: s.get_or("epsilon", 0.02)?, seed })
    }

    /// Tail model matching the block means: the elliptical law itself for
    /// singleton blocks, Gaussian otherwise.
    pub fn tail_model(&self) -> Result<TailModel> {
        match &self.model.kind {
            ModelKind::EllipticalDiscrete(_) if self.means.block_size() == 1 => Ok(TailModel::elliptical(self.model.dim())?),
            _ => Ok(TailModel::Gaussian),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryReport {
    pub n: usize,
    pub k: usize,
    pub n_directions: usize,
    pub phi0: f64,
    pub phi_l: f64,
    pub phi_u: f64,
    pub epsilon: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub fraction_in_band: f64,
    /// `momad(v)·√(N/K)/‖Σ^{1/2}v‖` for each sampled direction.
    pub ratios: Vec<f64>,
}

/// MOMAD ratios along the sampled directions and the band from the tail
/// model at `epsilon`.
pub fn isometry(setup: &CheckSetup) -> Result<IsometryReport> {
    let sigma = setup.data.true_sigma().unwrap_or(&setup.model.sigma);
    let root_n = (setup.means.block_size() as f64).sqrt();
    let mut ratios = Vec::with_capacity(setup.dirs.len());
    for v in setup.dirs.iter() {
        let sv = sigma * DVector::from_column_slice(v);
        let scale = dot(v, sv.as_slice()).sqrt();
        ratios.push(momad(&setup.means, v)? * root_n / scale);
    }
    let tm = setup.tail_model()?;
    let phis = estimate_phis_model(&tm, setup.epsilon)?;
    let inside = ratios.iter().filter(|&&r| r >= phis.phi_l && r <= phis.phi_u).count();
    Ok(IsometryReport {
        n: setup.data.n_rows(),
        k: setup.means.k(),
        n_directions: ratios.len(),
        phi0: tm.w(0.25)? - tm.w(0.5)?,
        phi_l: phis.phi_l,
        phi_u: phis.phi_u,
        epsilon: setup.epsilon,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fraction_in_band: inside as f64 / ratios.len().max(1) as f64,
        ratios,
    })
}

/// Origin condition `H(r) ≤ 1/2 − c·r` on the standardized, centered
/// projections of the block means; `r_min`, `r_max`, `n_grid` set the grid.
pub fn assumption_h0(setup: &CheckSetup, s: &Settings) -> Result<OriginCheck> {
    let mu = setup.data.true_mu().unwrap_or(&setup.model.mu).to_vec();
    let sigma = setup.data.true_sigma().unwrap_or(&setup.model.sigma).clone();
    let tails: Vec<EmpiricalTail> = setup
        .dirs
        .iter()
        .map(|v| Ok(EmpiricalTail::new(standardized_projections(&setup.means, v, Some(&mu), Some(&sigma))?)?))
        .collect::<Result<_>>()?;
    Ok(check_origin_behaviour(&tails, s.get_or("r_min", 0.05)?, s.get_or("r_max", 0.5)?, s.get_or("n_grid", 10)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhisReport {
    /// From the empirical tails of the standardized block means.
    pub empirical: PhiEstimate,
    /// From the tail model of the data-generating law.
    pub model: PhiEstimate,
}

pub fn phis(setup: &CheckSetup) -> Result<PhisReport> {
    let sigma = setup.data.true_sigma().unwrap_or(&setup.model.sigma).clone();
    Ok(PhisReport {
        empirical: estimate_phis(&setup.means, &setup.dirs, Some(&sigma), setup.epsilon)?,
        model: estimate_phis_model(&setup.tail_model()?, setup.epsilon)?,
    })
}
