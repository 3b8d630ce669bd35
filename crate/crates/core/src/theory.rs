//! Reference tail functions H, the r* fixed-point solver, and estimation of
//! the quantile-gap constants φ_l(ε), φ_u(ε).
//!
//! Every H here describes a standardized one-dimensional projection
//! `√(N/K)·⟨Σ^{-1/2}(X̄_k − μ), v⟩` and W is its generalized inverse
//! `W(p) = max{r : H(r) ≥ p}`.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::ToString;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::data::{BucketedMeans, EmpiricalTail};
use crate::depth::DirectionSet;
use crate::error::{Error, Result};
use crate::math::{bisect_threshold, dot, gamma, integrate, normal_quantile, normal_sf};

/// Quadrature tolerance for the elliptical tail.
const QUAD_TOL: f64 = 1e-10;
/// Number of radii kept in the elliptical mixture; the remaining mass is
/// below 2^-60 and is folded into the last radius.
const ELLIPTICAL_TERMS: usize = 60;

/// Discrete-radius elliptical law `X = μ + Σ^{1/2}·R·U`, with `R = r_j` with
/// probability `α_j` and `U` uniform on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalRadial {
    pub dim: usize,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    /// Density normaliser of ⟨U, v⟩ on [−1, 1].
    norm: f64,
}

impl EllipticalRadial {
    /// Radii `2^j·C_d` with masses `2^-j`, `j ≥ 1`, where
    /// `C_d = 2Γ(d/2)/(Γ((d−1)/2)√π)`.
    pub fn standard(dim: usize) -> Result<Self> {
        let cd = 2.0 * projection_normaliser(dim);
        let radii = (1..=ELLIPTICAL_TERMS).map(|j| (j as f64).exp2() * cd).collect();
        let mut masses: Vec<f64> = (1..=ELLIPTICAL_TERMS).map(|j| (-(j as f64)).exp2()).collect();
        *masses.last_mut().unwrap() *= 2.0;
        Self::new(dim, radii, masses)
    }

    pub fn new(dim: usize, radii: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if dim < 4 {
            return Err(Error::UnsupportedDimension { dim, min: 4 });
        }
        if radii.is_empty() || radii.len() != masses.len() {
            return Err(Error::Config("radii and masses must be nonempty and of equal length".into()));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
            return Err(Error::Config("radii must be positive and strictly increasing".into()));
        }
        if masses.iter().any(|&a| !(a >= 0.0)) || (masses.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("masses must be nonnegative and sum to 1".into()));
        }
        Ok(Self { dim, radii, masses, norm: projection_normaliser(dim) })
    }

    /// Density of `⟨U, v⟩` for a unit `v`.
    pub fn projection_density(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        self.norm * (1.0 - x * x).powf(0.5 * (self.dim as f64 - 3.0))
    }

    /// Density of `R·⟨U, v⟩`.
    pub fn density(&self, r: f64) -> f64 {
        self.radii
            .iter()
            .zip(&self.masses)
            .map(|(&rj, &a)| a / rj * self.projection_density(r / rj))
            .sum()
    }

    /// `P(R·⟨U, v⟩ ≥ r)`.
    pub fn tail(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 1.0 - self.tail(-r);
        }
        let f = |x: f64| self.projection_density(x);
        let mut total = 0.0;
        for (&rj, &a) in self.radii.iter().zip(&self.masses) {
            if r >= rj {
                continue;
            }
            // P(⟨U,v⟩ ≥ t) = 1/2 − ∫_0^t f
            let t = r / rj;
            total += a * (0.5 - integrate(&f, 0.0, t, QUAD_TOL)).max(0.0);
        }
        total.clamp(0.0, 1.0)
    }
}

/// `Γ(d/2)/(Γ((d−1)/2)√π)`, the normaliser of `(1 − x²)^{(d−3)/2}` on [−1, 1].
pub fn projection_normaliser(dim: usize) -> f64 {
    let d = dim as f64;
    gamma(0.5 * d) / (gamma(0.5 * (d - 1.0)) * core::f64::consts::PI.sqrt())
}

/// Tail function of a standardized projection.
#[derive(Debug, Clone, PartialEq)]
pub enum TailModel {
    /// `1 − Φ(r)`.
    Gaussian,
    /// `1/(1 + r²)` for `r > 0`, and 1 otherwise.
    MarkovBound,
    EllipticalDiscrete(EllipticalRadial),
    Empirical(EmpiricalTail),
}

impl TailModel {
    pub fn elliptical(dim: usize) -> Result<Self> {
        Ok(TailModel::EllipticalDiscrete(EllipticalRadial::standard(dim)?))
    }

    pub fn h(&self, r: f64) -> f64 {
        match self {
            TailModel::Gaussian => normal_sf(r),
            TailModel::MarkovBound => {
                if r > 0.0 {
                    1.0 / (1.0 + r * r)
                } else {
                    1.0
                }
            }
            TailModel::EllipticalDiscrete(e) => e.tail(r),
            TailModel::Empirical(t) => t.h(r),
        }
    }

    /// Generalized inverse `max{r : H(r) ≥ p}`.
    pub fn w(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain("probability must lie in (0, 1)".to_string()));
        }
        match self {
            TailModel::Gaussian => Ok(normal_quantile(1.0 - p)),
            TailModel::MarkovBound => Ok((1.0 / p - 1.0).sqrt()),
            TailModel::EllipticalDiscrete(e) => Ok(invert_tail(|r| e.tail(r), p)),
            TailModel::Empirical(t) => t.w(p),
        }
    }
}

/// Numeric inverse of a continuous nonincreasing tail.
fn invert_tail<H: Fn(f64) -> f64>(h: H, p: f64) -> f64 {
    let mut lo = -1.0;
    while h(lo) < p {
        lo *= 2.0;
    }
    bisect_threshold(|r| h(r) < p, lo, lo + 1.0, 1e-12).unwrap_or(f64::INFINITY)
}

pub fn tail_h(model: &TailModel, r: f64) -> f64 {
    model.h(r)
}

/// Budgets entering the fixed-point inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RstarBudget {
    pub d: usize,
    pub k: usize,
    /// Deviation parameter.
    pub u: f64,
    pub n_out: usize,
    /// Concentration constant.
    pub c0: f64,
}

impl RstarBudget {
    pub fn complexity_term(&self) -> f64 {
        self.c0 * ((self.d as f64 + 1.0) / self.k as f64).sqrt()
    }

    pub fn deviation_term(&self) -> f64 {
        self.c0 * (self.u / self.k as f64).sqrt()
    }

    pub fn contamination_term(&self) -> f64 {
        self.n_out as f64 / self.k as f64
    }

    /// Everything but the tail.
    pub fn constant_part(&self) -> f64 {
        self.complexity_term() + self.deviation_term() + self.contamination_term()
    }

    /// Left-hand side of the inequality at radius `r`.
    pub fn lhs<H: Fn(f64) -> f64>(&self, hsup: &H, r: f64) -> f64 {
        self.constant_part() + hsup(r)
    }
}

/// Smallest `r ≥ 0` (to 1e-9) such that
/// `C₀(√((d+1)/K) + √(u/K)) + sup_v H(r) + |𝒪|/K < 1/2`.
pub fn solve_rstar<H: Fn(f64) -> f64>(hsup: H, budget: &RstarBudget) -> Result<f64> {
    if budget.k == 0 {
        return Err(Error::Domain("K must be positive".to_string()));
    }
    if !(budget.u >= 0.0 && budget.c0 >= 0.0) {
        return Err(Error::Domain("u and C0 must be nonnegative".to_string()));
    }
    let c = budget.constant_part();
    if c >= 0.5 {
        let terms = [
            ("complexity C0*sqrt((d+1)/K)", budget.complexity_term()),
            ("deviation C0*sqrt(u/K)", budget.deviation_term()),
            ("contamination |O|/K", budget.contamination_term()),
        ];
        let (name, value) = terms.iter().copied().fold(terms[0], |a, b| if b.1 > a.1 { b } else { a });
        return Err(Error::Infeasible(alloc::format!(
            "constant part {c:.6} >= 1/2; largest budget is {name} = {value:.6}"
        )));
    }
    bisect_threshold(|r| c + hsup(r) < 0.5, 0.0, 1.0, 1e-9)
        .ok_or_else(|| Error::Infeasible(alloc::format!("tail never drops below {:.6}", 0.5 - c)))
}

/// Quartile gaps of one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapRecord {
    /// `max(W(1/4−2ε) − W(1/2+2ε), W(1/2−2ε) − W(3/4+2ε))`.
    pub upper: f64,
    /// `min(W(1/4+2ε) − W(1/2−2ε), W(1/2+2ε) − W(3/4−2ε))`.
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhiEstimate {
    pub epsilon: f64,
    pub phi_l: f64,
    pub phi_u: f64,
    pub per_direction: Vec<GapRecord>,
    /// Set when φ_l ≤ 0, i.e. a quartile plateau.
    pub assumption_violated: bool,
}

/// Gap pair for a single quantile function.
pub fn quartile_gaps<W: Fn(f64) -> Result<f64>>(w: W, eps: f64) -> Result<GapRecord> {
    check_epsilon(eps)?;
    let e = 2.0 * eps;
    let upper = (w(0.25 - e)? - w(0.5 + e)?).max(w(0.5 - e)? - w(0.75 + e)?);
    let lower = (w(0.25 + e)? - w(0.5 - e)?).min(w(0.5 + e)? - w(0.75 - e)?);
    Ok(GapRecord { upper, lower })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.125 {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("epsilon {eps} outside (0, 1/8)")))
    }
}

fn combine(eps: f64, per_direction: Vec<GapRecord>) -> Result<PhiEstimate> {
    if per_direction.is_empty() {
        return Err(Error::EmptyInput);
    }
    let phi_u = per_direction.iter().map(|g| g.upper).fold(f64::NEG_INFINITY, f64::max);
    let phi_l = per_direction.iter().map(|g| g.lower).fold(f64::INFINITY, f64::min);
    Ok(PhiEstimate { epsilon: eps, phi_l, phi_u, per_direction, assumption_violated: !(phi_l > 0.0) })
}

/// φ estimates for an analytic (rotation-invariant) model.
pub fn estimate_phis_model(model: &TailModel, eps: f64) -> Result<PhiEstimate> {
    let g = quartile_gaps(|p| model.w(p), eps)?;
    combine(eps, alloc::vec![g])
}

/// Standardized projections `√(N/K)·⟨X̄_k − μ, v⟩ / ‖Σ^{1/2}v‖` of the block
/// means. Without `sigma` the scale is `‖v‖`; without `mu` no centering is
/// applied (quartile gaps do not depend on it).
pub fn standardized_projections(
    means: &BucketedMeans,
    v: &[f64],
    mu: Option<&[f64]>,
    sigma: Option<&DMatrix<f64>>,
) -> Result<Vec<f64>> {
    let d = means.dim();
    if v.len() != d || mu.is_some_and(|m| m.len() != d) || sigma.is_some_and(|s| s.nrows() != d || s.ncols() != d) {
        return Err(Error::Contract("dimension mismatch".to_string()));
    }
    let scale = match sigma {
        Some(s) => {
            let sv = s * nalgebra::DVector::from_column_slice(v);
            dot(v, sv.as_slice()).sqrt()
        }
        None => dot(v, v).sqrt(),
    };
    if !(scale > 0.0) {
        return Err(Error::Domain("direction has zero scale".to_string()));
    }
    let shift = mu.map_or(0.0, |m| dot(m, v));
    let factor = (means.block_size() as f64).sqrt() / scale;
    Ok(means.project(v).into_iter().map(|p| (p - shift) * factor).collect())
}

/// φ estimates from the empirical tails of the bucketed means along `dirs`.
pub fn estimate_phis(
    means: &BucketedMeans,
    dirs: &DirectionSet,
    sigma: Option<&DMatrix<f64>>,
    eps: f64,
) -> Result<PhiEstimate> {
    check_epsilon(eps)?;
    let mut gaps = Vec::with_capacity(dirs.len());
    for v in dirs.iter() {
        let tail = EmpiricalTail::new(standardized_projections(means, v, None, sigma)?)?;
        gaps.push(quartile_gaps(|p| tail.w(p), eps)?);
    }
    combine(eps, gaps)
}

/// Empirical check of `H(r) ≤ 1/2 − c·r` near the origin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OriginCheck {
    pub grid: Vec<f64>,
    /// Worst (largest) H over the tails at each grid point.
    pub h_max: Vec<f64>,
    /// Least-squares slope of `1/2 − H(r)` against `r` through the origin.
    pub c_hat: f64,
    /// `min_r (1/2 − H(r))/r`; the assumption holds on the grid iff positive.
    pub c_min: f64,
    pub holds: bool,
}

/// Evaluate the origin condition on `n_grid` evenly spaced radii in
/// `[r_min, r_max]`, taking the worst tail at each radius.
pub fn check_origin_behaviour(tails: &[EmpiricalTail], r_min: f64, r_max: f64, n_grid: usize) -> Result<OriginCheck> {
    if tails.is_empty() || n_grid == 0 {
        return Err(Error::EmptyInput);
    }
    if !(r_min > 0.0 && r_max >= r_min) {
        return Err(Error::Domain("grid must satisfy 0 < r_min <= r_max".to_string()));
    }
    let grid: Vec<f64> = if n_grid == 1 {
        alloc::vec![r_min]
    } else {
        (0..n_grid).map(|i| r_min + (r_max - r_min) * i as f64 / (n_grid - 1) as f64).collect()
    };
    let h_max: Vec<f64> =
        grid.iter().map(|&r| tails.iter().map(|t| t.h(r)).fold(0.0, f64::max)).collect();
    let (sxy, sxx) = grid
        .iter()
        .zip(&h_max)
        .fold((0.0, 0.0), |(a, b), (&r, &h)| (a + r * (0.5 - h), b + r * r));
    let c_hat = sxy / sxx;
    let c_min = grid.iter().zip(&h_max).map(|(&r, &h)| (0.5 - h) / r).fold(f64::INFINITY, f64::min);
    Ok(OriginCheck { grid, h_max, c_hat, c_min, holds: c_min > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{normal_pdf, PHI0_GAUSSIAN};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tail_examples() {
        assert_eq!(TailModel::Gaussian.h(0.0), 0.5);
        assert_eq!(TailModel::MarkovBound.h(2.0), 0.2);
        let e = TailModel::elliptical(4).unwrap();
        assert_relative_eq!(e.h(0.0), 0.5, epsilon = 1e-12);
        assert!(matches!(TailModel::elliptical(3), Err(Error::UnsupportedDimension { dim: 3, min: 4 })));
    }

    #[test]
    fn elliptical_projection_density_integrates_to_one() {
        for d in [4, 5, 10, 30] {
            let e = EllipticalRadial::standard(d).unwrap();
            let total = integrate(&|x| e.projection_density(x), -1.0, 1.0, 1e-12);
            assert_relative_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn elliptical_tail_matches_density_integral() {
        let e = EllipticalRadial::standard(6).unwrap();
        for &r in &[0.3, 1.0, 2.5, 7.0] {
            let direct = 0.5 - integrate(&|x| e.density(x), 0.0, r, 1e-12);
            assert_relative_eq!(e.tail(r), direct, epsilon = 1e-8);
            assert_relative_eq!(e.tail(-r), 1.0 - e.tail(r), epsilon = 1e-14);
        }
    }

    #[test]
    fn elliptical_density_floor_true_value() {
        // the positive floor the construction actually achieves on [0, 1]
        for d in [4, 8, 20] {
            let e = EllipticalRadial::standard(d).unwrap();
            let min = (0..=100).map(|i| e.density(f64::from(i) / 100.0)).fold(f64::INFINITY, f64::min);
            assert!(min > 0.1, "d={d}: min density {min}");
        }
    }

    #[test]
    fn elliptical_density_floor_one_third() {
        for d in [4, 8, 20] {
            let e = EllipticalRadial::standard(d).unwrap();
            for i in 0..=100 {
                assert!(e.density(f64::from(i) / 100.0) >= 1.0 / 3.0);
            }
        }
    }

    #[test]
    fn inverse_tails() {
        assert_relative_eq!(TailModel::Gaussian.w(0.25).unwrap(), PHI0_GAUSSIAN, epsilon = 1e-14);
        assert_relative_eq!(TailModel::MarkovBound.w(0.2).unwrap(), 2.0, epsilon = 1e-14);
        let e = TailModel::elliptical(5).unwrap();
        for &p in &[0.1, 0.3, 0.5, 0.8] {
            let r = e.w(p).unwrap();
            assert_relative_eq!(e.h(r), p, epsilon = 1e-9);
        }
        assert!(TailModel::Gaussian.w(1.0).is_err());
    }

    #[test]
    fn rstar_examples() {
        let b = RstarBudget { d: 3, k: 100_000, u: 10.0, n_out: 1000, c0: 1.0 };
        assert!(b.constant_part() < 0.3);
        let r = solve_rstar(|r| TailModel::MarkovBound.h(r), &b).unwrap();
        assert!(r <= 2.0);
        assert!(b.lhs(&|r| TailModel::MarkovBound.h(r), r) < 0.5);

        let zero = RstarBudget { d: 0, k: 1, u: 0.0, n_out: 0, c0: 0.0 };
        assert_eq!(solve_rstar(|_| 0.0, &zero).unwrap(), 0.0);

        let b = RstarBudget { d: 1, k: 10_000, u: 10.0, n_out: 0, c0: 1.0 };
        let c = b.constant_part();
        let r = solve_rstar(normal_sf, &b).unwrap();
        // 1 − Φ(r) = 1/2 − c  ⇔  r = Φ⁻¹(1/2 + c)
        assert_relative_eq!(r, normal_quantile(0.5 + c), epsilon = 1e-8);
        assert!(c + normal_sf(r) < 0.5);

        let bad = RstarBudget { d: 1, k: 8, u: 0.0, n_out: 4, c0: 0.0 };
        match solve_rstar(normal_sf, &bad) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("contamination")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gaussian_phis_match_quantile_oracle() {
        let est = estimate_phis_model(&TailModel::Gaussian, 0.05).unwrap();
        let q = |p: f64| normal_quantile(p);
        // W(p) = Φ⁻¹(1 − p)
        assert_relative_eq!(est.phi_u, q(0.85) - q(0.4), epsilon = 1e-12);
        assert_relative_eq!(est.phi_l, q(0.65) - q(0.6), epsilon = 1e-12);
        let slope = 4.0 * 0.05 * (1.0 / normal_pdf(PHI0_GAUSSIAN) + 1.0 / normal_pdf(0.0));
        assert!(est.phi_u - est.phi_l <= slope + 0.05);

        let mut prev = f64::INFINITY;
        for &eps in &[0.06, 0.01, 0.001, 1e-5] {
            let e = estimate_phis_model(&TailModel::Gaussian, eps).unwrap();
            assert!(e.phi_l <= PHI0_GAUSSIAN && PHI0_GAUSSIAN <= e.phi_u);
            let ratio = e.phi_u / e.phi_l;
            assert!(ratio < prev);
            prev = ratio;
        }
        assert!(prev < 1.001);
        // past ε = 1/16 the levels 1/4 + 2ε and 1/2 − 2ε cross and φ_l turns negative
        assert!(estimate_phis_model(&TailModel::Gaussian, 0.07).unwrap().assumption_violated);
        assert!(estimate_phis_model(&TailModel::Gaussian, 0.2).is_err());
    }

    #[test]
    fn plateau_flags_violation() {
        let tail = EmpiricalTail::new(alloc::vec![-1.0, -1.0, 1.0, 1.0]).unwrap();
        for &eps in &[0.1, 0.01, 0.001] {
            let est = estimate_phis_model(&TailModel::Empirical(tail.clone()), eps).unwrap();
            assert_eq!(est.phi_l, 0.0);
            assert_eq!(est.phi_u, 2.0);
            assert!(est.assumption_violated);
        }
    }

    #[test]
    fn origin_check_on_symmetric_grid() {
        let vals: Vec<f64> = (-500..=500).map(|i| f64::from(i) / 500.0).collect();
        let tail = EmpiricalTail::new(vals).unwrap();
        let rep = check_origin_behaviour(&[tail], 0.05, 0.5, 10).unwrap();
        assert!(rep.holds);
        // uniform on [−1, 1]: H(r) ≈ 1/2 − r/2
        assert_relative_eq!(rep.c_hat, 0.5, epsilon = 0.01);
        let flat = EmpiricalTail::new(alloc::vec![-1.0, 1.0]).unwrap();
        assert!(!check_origin_behaviour(&[flat], 0.05, 0.5, 10).unwrap().holds);
    }

    proptest! {
        #[test]
        fn tails_are_monotone_probabilities(a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let models = [TailModel::Gaussian, TailModel::MarkovBound, TailModel::elliptical(4).unwrap()];
            for m in &models {
                let (hl, hh) = (m.h(lo), m.h(hi));
                prop_assert!((0.0..=1.0).contains(&hl) && (0.0..=1.0).contains(&hh));
                prop_assert!(hh <= hl + 1e-12);
            }
            prop_assert!((TailModel::Gaussian.h(-a) - (1.0 - TailModel::Gaussian.h(a))).abs() < 1e-15);
        }

        #[test]
        fn rstar_resubstitutes(d in 1usize..20, k in 50usize..100_000, u in 0.0f64..20.0, frac in 0.0f64..0.2, c0 in 0.0f64..1.0) {
            let b = RstarBudget { d, k, u, n_out: (frac * k as f64) as usize, c0 };
            let h = |r: f64| TailModel::MarkovBound.h(r);
            match solve_rstar(h, &b) {
                Ok(r) => {
                    prop_assert!(b.lhs(&h, r) < 0.5);
                    prop_assert!(r == 0.0 || b.lhs(&h, r - 1e-6 * (1.0 + r)) >= 0.5 - 1e-12);
                    let bigger = RstarBudget { k: k * 2, ..b };
                    prop_assert!(solve_rstar(h, &bigger).unwrap() <= r + 1e-8);
                }
                Err(Error::Infeasible(_)) => prop_assert!(b.constant_part() >= 0.5),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
