//! Birkhoff sums of the skew-shift, ergodic integrals of smooth observables,
//! renormalized (Bufetov-type) estimators and the identities they satisfy.

mod ergodic;
mod weyl;

pub use ergodic::{ergodic_integral, flow_long, flow_y, flow_z, ErgodicIntegral, Trajectory};
pub(crate) use weyl::cis as cis_phase;
pub use weyl::{
    weyl_grid_inner, weyl_grid_moments, weyl_partial_sums, weyl_sum, weyl_sum_direct, weyl_sum_l2_over_y, GridMoments,
    QuadraticPhase, WeylSumSpec, BLOCK, CHUNK,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{Frame, GroupElement};
use crate::moduli::{dc_integral, renorm};
use crate::par;
use crate::rng;
use crate::spectral::{sobolev_surrogate, Observable};

/// Constants of the `C·(1 + L)·|f|_{a,s}` error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetModel {
    /// Calibrated multiplicative constant.
    pub constant: f64,
    /// Sobolev order of the surrogate norm (must exceed 7/2).
    pub sobolev_index: f64,
    /// Horizon of the Diophantine integral used for `L`.
    pub dc_horizon: f64,
}

impl Default for BudgetModel {
    fn default() -> Self {
        BudgetModel { constant: 1.0, sobolev_index: 4.0, dc_horizon: 40.0 }
    }
}

impl BudgetModel {
    pub fn budget(&self, f: &Observable, a: &Frame) -> Result<f64> {
        let l = dc_integral(a, self.dc_horizon, crate::moduli::DEFAULT_STEP)?.value;
        Ok(self.constant * (1.0 + l) * sobolev_surrogate(f, a, self.sobolev_index)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufetovEstimate {
    pub value: Complex64,
    /// Renormalization scale `T_ref`.
    pub scale: f64,
    pub t: f64,
    /// `log T_ref`.
    pub depth: f64,
    /// Unnormalized budget; the estimate itself is accurate to
    /// `error_budget · T_ref^{-1/2}`.
    pub error_budget: f64,
}

/// Renormalized integral at depth `log T_ref`:
/// `(t_{a'}/T_ref)^{1/2} · ∫₀^{T_ref·t} f(φ^{X'}_s x) ds` with
/// `a' = renorm(a, −log T_ref)` and `f` lifted along `a'`.
pub fn bufetov_estimate(f: &Observable, a: &Frame, x: GroupElement, t: f64, t_ref: f64) -> Result<BufetovEstimate> {
    bufetov_estimate_with(f, a, x, t, t_ref, &BudgetModel::default())
}

pub fn bufetov_estimate_with(
    f: &Observable,
    a: &Frame,
    x: GroupElement,
    t: f64,
    t_ref: f64,
    model: &BudgetModel,
) -> Result<BufetovEstimate> {
    if !(t > 0.0) || !(t_ref >= 1.0) {
        return Err(Error::InvalidArgument(format!("need t > 0 and T_ref ≥ 1 (t={t}, T_ref={t_ref})")));
    }
    let deep = renorm(a, -t_ref.ln());
    let integral = ergodic_integral(f, &deep, x, t_ref * t)?.value;
    let norm = (deep.return_time()? / t_ref).sqrt();
    Ok(BufetovEstimate {
        value: integral * norm,
        scale: t_ref,
        t,
        depth: t_ref.ln(),
        error_budget: model.budget(f, a)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingResidual {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub relative: f64,
    pub budget: f64,
}

/// `|β̂(a, x, T·t) − T^{1/2} β̂(renorm(a, log T), x, t)|`, both at total
/// renormalization depth `log T_ref` below `a`.
pub fn scaling_check(
    f: &Observable,
    a: &Frame,
    x: GroupElement,
    t: f64,
    big_t: f64,
    t_ref: f64,
) -> Result<ScalingResidual> {
    let lhs = bufetov_estimate(f, a, x, big_t * t, t_ref)?;
    let up = renorm(a, big_t.ln());
    let rhs = bufetov_estimate(f, &up, x, t, t_ref * big_t)?;
    let rhs_value = rhs.value * big_t.sqrt();
    let residual = (lhs.value - rhs_value).norm();
    Ok(ScalingResidual {
        lhs: lhs.value,
        rhs: rhs_value,
        residual,
        relative: residual / lhs.value.norm().max(f64::MIN_POSITIVE),
        budget: (lhs.error_budget + rhs.error_budget) / t_ref.sqrt(),
    })
}

/// `|I_{T₁+T₂}(x) − I_{T₁}(x) − I_{T₂}(φ_{T₁}x)|`.
pub fn cocycle_residual(f: &Observable, a: &Frame, x: GroupElement, t1: f64, t2: f64) -> Result<f64> {
    let whole = ergodic_integral(f, a, x, t1 + t2)?.value;
    let first = ergodic_integral(f, a, x, t1)?.value;
    let moved = flow_long(a, x, t1)?;
    let second = ergodic_integral(f, a, moved, t2)?.value;
    Ok((whole - first - second).norm())
}

/// `|I_T(f)(φ^Z_{t_z} x) − Σ_comp e^{2πiKn t_z} I_T(f_comp)(x)|`.
pub fn z_equivariance_check(f: &Observable, a: &Frame, x: GroupElement, time: f64, t_z: f64) -> Result<f64> {
    let moved = ergodic_integral(f, a, flow_z(a, x, t_z), time)?.value;
    let k = f.lattice.k() as f64;
    let mut twisted = Complex64::new(0.0, 0.0);
    for &(label, c) in &f.coeffs {
        let single = Observable { coeffs: vec![(label, c)], ..f.clone() };
        let phase = crate::phase::Phase::from_cycles(t_z).times((label.n as f64 * k) as i128);
        twisted += ergodic_integral(&single, a, x, time)?.value * weyl::cis(phase);
    }
    Ok((moved - twisted).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YTwist {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// Sub-samples per return interval for trajectory quadrature.
pub const TRAJECTORY_SUBSAMPLES: usize = 8;

/// Both sides of the Y-twist identity with the functional replaced by ergodic
/// integrals: `I_T(φ^Y_t x)` against
/// `e^{−iθT} I_T(x) + iθ ∫₀^T e^{−iθs} I_s(x) ds`, `θ = 2π·n·K·t`.
pub fn ytwist_residual(f: &Observable, a: &Frame, x: GroupElement, time: f64, t_y: f64) -> Result<YTwist> {
    ytwist_residual_sub(f, a, x, time, t_y, TRAJECTORY_SUBSAMPLES)
}

pub fn ytwist_residual_sub(
    f: &Observable,
    a: &Frame,
    x: GroupElement,
    time: f64,
    t_y: f64,
    sub: usize,
) -> Result<YTwist> {
    let traj = Trajectory::new(f, a, x, time)?;
    let nk = traj
        .central_parameter()
        .ok_or_else(|| Error::InvalidArgument("Y-twist needs all components to share the central parameter".into()))?;
    if t_y == 0.0 {
        // φ^Y_0 is the identity and the twist term vanishes
        let v = traj.end_value();
        return Ok(YTwist { lhs: v, rhs: v, residual: 0.0 });
    }
    let lhs = ergodic_integral(f, a, flow_y(a, x, t_y), time)?.value;
    let rhs = {
        let theta = std::f64::consts::TAU * nk * t_y;
        let i = Complex64::new(0.0, 1.0);
        (-i * theta * time).exp() * traj.end_value()
            + i * theta * traj.twisted_integral(Complex64::new(theta, 0.0), sub)
    };
    Ok(YTwist { lhs, rhs, residual: (lhs - rhs).norm() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPoint {
    pub time: f64,
    pub max_ratio: f64,
}

/// For `samples` uniform points, `max_x |I_T(f)(x)| / T^{1/2}` at each `T`.
pub fn holder_ratio_scan(
    f: &Observable,
    a: &Frame,
    samples: usize,
    times: &[f64],
    seed: u64,
) -> Result<Vec<HolderPoint>> {
    a.return_time()?;
    let per_sample: Vec<Result<Vec<f64>>> = par::map_indexed(samples, |i| {
        let x = rng::uniform_point(&mut rng::stream(seed, i as u64), a.lattice);
        times.iter().map(|&t| Ok(ergodic_integral(f, a, x, t)?.value.norm() / t.sqrt())).collect()
    });
    let mut best = vec![0.0f64; times.len()];
    for row in per_sample {
        for (b, r) in best.iter_mut().zip(row?) {
            *b = b.max(r);
        }
    }
    Ok(times.iter().zip(best).map(|(&time, max_ratio)| HolderPoint { time, max_ratio }).collect())
}
