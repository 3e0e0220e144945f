//! Holomorphic extension of `I_T` in the transverse coordinates `(y, z)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{Trajectory, TRAJECTORY_SUBSAMPLES};
use crate::error::{Error, Result};
use crate::heis::{Frame, GroupElement};
use crate::spectral::Observable;

/// Default bound on `2π|nK|(|Im z| + |Im y|·T)`, the log of the largest
/// exponential factor the extension may pick up.
pub const DEFAULT_MAX_LOG_GROWTH: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionDomain {
    pub max_log_growth: f64,
    /// Trapezoid sub-samples per return interval.
    pub subsamples: usize,
}

impl Default for ExtensionDomain {
    fn default() -> Self {
        ExtensionDomain { max_log_growth: DEFAULT_MAX_LOG_GROWTH, subsamples: TRAJECTORY_SUBSAMPLES }
    }
}

/// `e^{2πi(z−yT)nK} I_T + 2πinK·y·e^{2πiznK} ∫₀^T e^{−2πiynKs} I_s ds` for
/// complex `(y, z)`; at real `(y, z)` this is `I_T(φ^Z_z φ^Y_y x)`.
pub fn complex_extension_eval(
    f: &Observable,
    a: &Frame,
    x: GroupElement,
    time: f64,
    y: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    let traj = Trajectory::new(f, a, x, time)?;
    complex_extension_with(&traj, y, z, &ExtensionDomain::default())
}

/// [`complex_extension_eval`] on a stored trajectory.
pub fn complex_extension_with(
    traj: &Trajectory,
    y: Complex64,
    z: Complex64,
    domain: &ExtensionDomain,
) -> Result<Complex64> {
    let nk = traj.central_parameter().ok_or_else(|| {
        Error::InvalidArgument("complex extension needs all components to share the central parameter".into())
    })?;
    let time = traj.time;
    let growth = TAU * nk.abs() * (z.im.abs() + y.im.abs() * time);
    if growth > domain.max_log_growth {
        return Err(Error::DomainExceeded(format!("log growth {growth:.3} exceeds {}", domain.max_log_growth)));
    }
    let i = Complex64::new(0.0, 1.0);
    let z_factor = (i * TAU * nk * z).exp();
    if y == Complex64::new(0.0, 0.0) {
        return Ok(z_factor * traj.end_value());
    }
    let theta = TAU * nk * y;
    let twisted = traj.twisted_integral(theta, domain.subsamples);
    Ok(z_factor * ((-i * theta * time).exp() * traj.end_value() + i * theta * twisted))
}

/// The extension restricted to a transverse leaf through `x`:
/// `ζ ↦ F(y = ℓζ, z = z₀)`, with the leaf scale `ℓ` chosen so that
/// `|ζ| ≤ r` costs at most a log growth of `log_budget`.
#[derive(Debug, Clone)]
pub struct LeafFunction {
    traj: Trajectory,
    pub scale: f64,
    pub z0: f64,
    domain: ExtensionDomain,
}

impl LeafFunction {
    pub fn eval(&self, zeta: Complex64) -> Result<Complex64> {
        complex_extension_with(&self.traj, zeta * self.scale, Complex64::new(self.z0, 0.0), &self.domain)
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }
}

#[allow(clippy::too_many_arguments)]
pub fn leaf_function(
    f: &Observable,
    a: &Frame,
    x: GroupElement,
    time: f64,
    z0: f64,
    radius: f64,
    log_budget: f64,
) -> Result<LeafFunction> {
    let traj = Trajectory::new(f, a, x, time)?;
    let nk = traj.central_parameter().ok_or_else(|| {
        Error::InvalidArgument("leaf functions need all components to share the central parameter".into())
    })?;
    if nk == 0.0 {
        return Err(Error::InvalidArgument("leaf functions need n ≠ 0".into()));
    }
    let scale = log_budget / (TAU * nk.abs() * time * radius);
    Ok(LeafFunction { traj, scale, z0, domain: ExtensionDomain::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birkhoff::{ergodic_integral, flow_y, flow_z};
    use crate::heis::Lattice;
    use crate::moduli::golden_frame;
    use crate::spectral::CharLabel;

    fn setup() -> (Observable, Frame, GroupElement) {
        (
            Observable::single(Lattice::UNIT, CharLabel::new(0, 1).unwrap()),
            golden_frame(Lattice::UNIT),
            GroupElement::new(0.3, 0.6, 0.1),
        )
    }

    #[test]
    fn origin_is_the_plain_integral() {
        let (f, a, x) = setup();
        let v = complex_extension_eval(&f, &a, x, 300.0, 0.0.into(), 0.0.into()).unwrap();
        let direct = ergodic_integral(&f, &a, x, 300.0).unwrap().value;
        assert!((v - direct).norm() < 1e-12);
    }

    #[test]
    fn real_shift_matches_translated_point() {
        let (f, a, x) = setup();
        let time = 500.0;
        let (y, z) = (0.3 / time, 0.27);
        let v = complex_extension_eval(&f, &a, x, time, y.into(), z.into()).unwrap();
        let direct = ergodic_integral(&f, &a, flow_z(&a, flow_y(&a, x, y), z), time).unwrap().value;
        assert!((v - direct).norm() / time.sqrt() < 0.05, "{v} vs {direct}");
    }

    #[test]
    fn domain_guard() {
        let (f, a, x) = setup();
        let r = complex_extension_eval(&f, &a, x, 100.0, Complex64::new(0.0, 1.0), 0.0.into());
        assert!(matches!(r, Err(Error::DomainExceeded(_))));
    }

    #[test]
    fn imaginary_shift_obeys_growth_bound() {
        let (f, a, x) = setup();
        let time = 400.0;
        let traj = Trajectory::new(&f, &a, x, time).unwrap();
        let im_y = 1.0 / (TAU * time);
        let v =
            complex_extension_with(&traj, Complex64::new(0.0, im_y), 0.0.into(), &ExtensionDomain::default()).unwrap();
        let sup = (0..=4000).map(|i| traj.at(time * i as f64 / 4000.0).norm()).fold(0.0, f64::max);
        assert!(v.norm() <= std::f64::consts::E * 2.0 * sup);
    }
}
