//! Characters of the transverse torus, invariant distributions on character
//! ladders, and smooth observables on M obtained by spreading torus data along
//! the flow with the bump `χ`.

mod bump;

pub use bump::{BumpProfile, DEFAULT_CELLS};

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{Frame, GroupElement, Lattice, SkewShiftParams};
use crate::phase::Phase;
use crate::sum::ComplexSum;

/// Character label `(m, n)` with `n ≠ 0`: `e_{m,n}(y, z) = exp 2πi(m·y + n·K·z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharLabel {
    pub m: i64,
    pub n: i64,
}

impl CharLabel {
    pub fn new(m: i64, n: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("central parameter n must be non-zero".into()));
        }
        Ok(CharLabel { m, n })
    }

    /// Width `K·|n|` of the ladder through this character.
    pub fn ladder_step(self, lattice: Lattice) -> i64 {
        lattice.k() as i64 * self.n.abs()
    }

    /// Canonical representative of the irreducible component: `m mod K|n|`.
    pub fn component(self, lattice: Lattice) -> CharLabel {
        CharLabel { m: self.m.rem_euclid(self.ladder_step(lattice)), n: self.n }
    }

    /// Phase of `e_{m,n}(y, z)` in cycles.
    pub fn phase(self, lattice: Lattice, y: f64, z: f64) -> Phase {
        let nk = self.n as i128 * lattice.k() as i128;
        Phase::from_cycles(y).times(self.m as i128) + Phase::from_cycles(z).times(nk)
    }
}

pub fn eval_character(label: CharLabel, lattice: Lattice, y: f64, z: f64) -> Complex64 {
    Complex64::from_polar(1.0, label.phase(lattice, y, z).radians())
}

/// Finitely supported `F = Σ_j F_j · e_{m + j·K·n, n}` on the ladder through `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderFunction {
    pub label: CharLabel,
    pub coeffs: Vec<(i64, Complex64)>,
}

impl LadderFunction {
    pub fn single(label: CharLabel, j: i64) -> Self {
        LadderFunction { label, coeffs: vec![(j, Complex64::new(1.0, 0.0))] }
    }

    pub fn character(&self, j: i64, lattice: Lattice) -> CharLabel {
        CharLabel { m: self.label.m + j * lattice.k() as i64 * self.label.n, n: self.label.n }
    }

    pub fn eval(&self, lattice: Lattice, y: f64, z: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|&(j, c)| c * eval_character(self.character(j, lattice), lattice, y, z))
            .collect::<ComplexSum>()
            .value()
    }

    /// The pull-back `F ∘ T`, which stays on the same ladder.
    pub fn compose_return_map(&self, ssp: &SkewShiftParams) -> LadderFunction {
        let lattice = ssp.lattice;
        let s = ssp.y_sign as i64;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&(j, c)| {
                let ch = self.character(j, lattice);
                // e_{m',n}(y+ρ, z + s·y + σ) = e^{2πi(m'ρ + nKσ)} e_{m' + s·nK, n}(y, z)
                let phase = ch.phase(lattice, ssp.rho, ssp.sigma);
                (j + s, c * Complex64::from_polar(1.0, phase.radians()))
            })
            .collect();
        LadderFunction { label: self.label, coeffs }
    }
}

/// The invariant distribution `D_{(m,n)}` of the return map on the ladder
/// through `label`, normalised by `D(e_{m,n}) = 1`.
pub fn invariant_distribution(label: CharLabel, ssp: &SkewShiftParams, f: &LadderFunction) -> Result<Complex64> {
    let lattice = ssp.lattice;
    if f.label.component(lattice) != label.component(lattice) {
        return Err(Error::LabelMismatch { expected: (label.m, label.n), found: (f.label.m, f.label.n) });
    }
    let nk = label.n as i128 * lattice.k() as i128;
    let step = label.ladder_step(lattice) as i128;
    let s = ssp.y_sign as i128;
    let rho = Phase::from_cycles(ssp.rho);
    let sigma = Phase::from_cycles(ssp.sigma);
    let linear = rho.times(label.m as i128) + sigma.times(nk);
    let quadratic = rho.times(s * nk);
    let mut acc = ComplexSum::new();
    for &(j, c) in &f.coeffs {
        let mode = f.label.m as i128 + j as i128 * nk;
        let offset = mode - label.m as i128;
        if offset % step != 0 {
            return Err(Error::LabelMismatch { expected: (label.m, label.n), found: (f.label.m, f.label.n) });
        }
        // position along the orbit of T: mode = m + i·s·nK
        let i = offset / (s * nk);
        let tri = i * (i - 1) / 2;
        let phase = linear.times(i) + quadratic.times(tri);
        acc.add(c * Complex64::from_polar(1.0, -phase.radians()));
    }
    Ok(acc.value())
}

/// Smooth observable `f = Σ c_{m,n} · R^χ(e_{m,n})` on Γ_K\Heis. The lift is
/// taken with respect to whichever frame the observable is evaluated or
/// integrated along.
#[derive(Debug, Clone)]
pub struct Observable {
    pub lattice: Lattice,
    pub bump: Arc<BumpProfile>,
    pub coeffs: Vec<(CharLabel, Complex64)>,
}

impl Observable {
    pub fn new(lattice: Lattice, coeffs: Vec<(CharLabel, Complex64)>) -> Self {
        Observable { lattice, bump: BumpProfile::standard(), coeffs }
    }

    pub fn zero(lattice: Lattice) -> Self {
        Observable::new(lattice, Vec::new())
    }

    pub fn single(lattice: Lattice, label: CharLabel) -> Self {
        Observable::new(lattice, vec![(label, Complex64::new(1.0, 0.0))])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|(_, c)| *c == Complex64::new(0.0, 0.0))
    }

    /// The torus function `F(y, z) = Σ c_{m,n} e_{m,n}(y, z)`.
    pub fn transverse(&self, y: f64, z: f64) -> Complex64 {
        self.coeffs.iter().map(|&(l, c)| c * eval_character(l, self.lattice, y, z)).collect::<ComplexSum>().value()
    }

    /// `R^χ_a(F)(p) = t_a^{-1} χ(τ/t_a) F(ξ)` where `p = φ^X_τ(ξ)`.
    pub fn eval(&self, frame: &Frame, p: GroupElement) -> Result<Complex64> {
        let t_a = frame.return_time()?;
        let (tau, y, z) = frame.decompose(p)?;
        let weight = self.bump.pdf(tau / t_a) / t_a;
        if weight == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.transverse(y, z) * weight)
    }

    /// Central derivative `Zf`: each coefficient picks up `2πi·n·K`.
    pub fn central_derivative(&self) -> Observable {
        let k = self.lattice.k() as f64;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&(l, c)| (l, c * Complex64::new(0.0, std::f64::consts::TAU * l.n as f64 * k)))
            .collect();
        Observable { lattice: self.lattice, bump: self.bump.clone(), coeffs }
    }

    pub fn scaled(&self, s: Complex64) -> Observable {
        Observable {
            lattice: self.lattice,
            bump: self.bump.clone(),
            coeffs: self.coeffs.iter().map(|&(l, c)| (l, c * s)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffNorms {
    pub s: f64,
    pub radius: f64,
    pub sobolev: f64,
    pub analytic: f64,
}

/// `|c|_s = (Σ (1 + K²n²)^s |c|²)^{1/2}` and `‖c‖_{ω,R} = Σ e^{|n|R} |c|`.
pub fn coeff_norms(coeffs: &[(CharLabel, Complex64)], lattice: Lattice, s: f64, radius: f64) -> CoeffNorms {
    let k = lattice.k() as f64;
    let mut sob = crate::sum::NeumaierSum::new();
    let mut ana = crate::sum::NeumaierSum::new();
    for &(l, c) in coeffs {
        let n = l.n.abs() as f64;
        sob.add((1.0 + k * k * n * n).powf(s) * c.norm_sqr());
        ana.add((n * radius).exp() * c.norm());
    }
    CoeffNorms { s, radius, sobolev: sob.value().sqrt(), analytic: ana.value() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaEtaReport {
    pub eta: f64,
    /// Smallest `C_η` with `Σ |n||c| e^{|n|R} ≤ C_η e^{R^{2−η}}` on the grid.
    pub c_eta: f64,
    /// Ratio at each grid radius.
    pub ratios: Vec<(f64, f64)>,
    /// Ratio at the largest radius is below its maximum (growth has been beaten).
    pub tail_decreasing: bool,
    pub pass: bool,
}

pub fn omega_eta_check(coeffs: &[(CharLabel, Complex64)], eta: f64, radii: &[f64]) -> Result<OmegaEtaReport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("η must lie in (0,1), got {eta}")));
    }
    let ratios: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let lhs: f64 = coeffs
                .iter()
                .map(|&(l, c)| {
                    let n = l.n.abs() as f64;
                    // combine exponents before exponentiating to avoid overflow
                    n * c.norm() * (n * r - r.abs().powf(2.0 - eta)).exp()
                })
                .sum();
            (r, lhs)
        })
        .collect();
    let c_eta = ratios.iter().map(|&(_, q)| q).fold(0.0, f64::max);
    let tail_decreasing = match ratios.last() {
        Some(&(_, last)) => last <= c_eta,
        None => true,
    };
    Ok(OmegaEtaReport { eta, c_eta, pass: c_eta.is_finite(), tail_decreasing, ratios })
}

/// Upper bound for the transverse Sobolev norm of `f` at frame `a`:
/// `Σ |c| · t_a^{-1} (1 + t_a^{-1}‖Y‖)^s (1 + K²n²)^{s/2} · sup|χ^{(⌈s⌉)}|`.
pub fn sobolev_surrogate(obs: &Observable, frame: &Frame, s: f64) -> Result<f64> {
    let t_a = frame.return_time()?;
    let y_norm = (frame.c * frame.c + frame.d * frame.d + frame.w * frame.w).sqrt();
    let k = obs.lattice.k() as f64;
    let order = s.max(0.0).ceil() as usize;
    let bump_bound = (0..=order).map(|j| obs.bump.derivative_sup(j)).fold(0.0, f64::max);
    let geometry = (1.0 + y_norm / t_a).powf(s) / t_a;
    Ok(obs
        .coeffs
        .iter()
        .map(|&(l, c)| {
            let n = l.n.abs() as f64;
            c.norm() * geometry * (1.0 + k * k * n * n).powf(s / 2.0) * bump_bound
        })
        .sum())
}

/// Text configuration of an observable: `K`, bump resolution and a list of
/// `(m, n, re, im)` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_cells")]
    pub bump_cells: usize,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub m: i64,
    pub n: i64,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn default_k() -> u32 {
    1
}

fn default_cells() -> usize {
    DEFAULT_CELLS
}

fn one() -> f64 {
    1.0
}

impl ObservableSpec {
    pub fn build(&self) -> Result<Observable> {
        let lattice = Lattice::new(self.k)?;
        let coeffs = self
            .components
            .iter()
            .map(|c| Ok((CharLabel::new(c.m, c.n)?, Complex64::new(c.re, c.im))))
            .collect::<Result<Vec<_>>>()?;
        let bump = if self.bump_cells == DEFAULT_CELLS {
            BumpProfile::standard()
        } else {
            Arc::new(BumpProfile::new(self.bump_cells))
        };
        Ok(Observable { lattice, bump, coeffs })
    }

    pub fn of(obs: &Observable) -> Self {
        ObservableSpec {
            k: obs.lattice.k(),
            bump_cells: obs.bump.cells(),
            components: obs.coeffs.iter().map(|&(l, c)| ComponentSpec { m: l.m, n: l.n, re: c.re, im: c.im }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::golden_frame;

    fn label(m: i64, n: i64) -> CharLabel {
        CharLabel::new(m, n).unwrap()
    }

    #[test]
    fn character_examples() {
        let k1 = Lattice::UNIT;
        let k2 = Lattice::new(2).unwrap();
        assert!((eval_character(label(0, 1), k1, 0.0, 0.0) - 1.0).norm() < 1e-15);
        assert!((eval_character(label(0, 1), k1, 0.0, 0.5) + 1.0).norm() < 1e-15);
        // m·y + n·K·z = 1/4 + 1/4 = 1/2 cycles
        let v = eval_character(label(1, 1), k2, 0.25, 0.125);
        assert!((v + 1.0).norm() < 1e-15);
        assert!(CharLabel::new(3, 0).is_err());
        assert_eq!(label(-1, 2).component(k2), label(3, 2));
    }

    #[test]
    fn distribution_examples() {
        let ssp = SkewShiftParams { rho: 0.3, sigma: 0.15, return_time: 1.0, y_sign: 1, lattice: Lattice::UNIT };
        let l = label(2, 1);
        let d0 = invariant_distribution(l, &ssp, &LadderFunction::single(l, 0)).unwrap();
        assert!((d0 - 1.0).norm() < 1e-15);
        let d1 = invariant_distribution(l, &ssp, &LadderFunction::single(l, 1)).unwrap();
        let want = Complex64::from_polar(1.0, -std::f64::consts::TAU * (0.3 * 2.0 + 0.15));
        assert!((d1 - want).norm() < 1e-14);
        let wrong = LadderFunction::single(label(0, 2), 0);
        assert!(matches!(invariant_distribution(l, &ssp, &wrong), Err(Error::LabelMismatch { .. })));
    }

    #[test]
    fn distribution_is_invariant_under_return_map() {
        let ssp = golden_frame(Lattice::new(2).unwrap()).return_params().unwrap();
        let l = label(1, -1);
        let f = LadderFunction {
            label: l,
            coeffs: vec![
                (-2, Complex64::new(0.3, 0.1)),
                (0, Complex64::new(1.0, -0.5)),
                (3, Complex64::new(-0.2, 0.7)),
            ],
        };
        let d = invariant_distribution(l, &ssp, &f).unwrap();
        let dt = invariant_distribution(l, &ssp, &f.compose_return_map(&ssp)).unwrap();
        assert!((d - dt).norm() < 1e-12, "{d} vs {dt}");
    }

    #[test]
    fn pullback_matches_pointwise_composition() {
        let ssp = golden_frame(Lattice::UNIT).return_params().unwrap();
        let f = LadderFunction::single(label(0, 1), 1);
        let g = f.compose_return_map(&ssp);
        let (y, z) = (0.3, 0.7);
        let (ty, tz) = ssp.apply(y, z);
        assert!((f.eval(ssp.lattice, ty, tz) - g.eval(ssp.lattice, y, z)).norm() < 1e-13);
    }

    #[test]
    fn norms_examples() {
        let c = vec![(label(0, 1), Complex64::new(1.0, 0.0))];
        let n = coeff_norms(&c, Lattice::UNIT, 4.0, 1.5);
        assert!((n.sobolev - 4.0).abs() < 1e-14);
        assert!((n.analytic - 1.5f64.exp()).abs() < 1e-14);
        let z = coeff_norms(&[], Lattice::UNIT, 4.0, 1.5);
        assert_eq!((z.sobolev, z.analytic), (0.0, 0.0));
    }

    #[test]
    fn omega_eta_examples() {
        let radii: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let zero = omega_eta_check(&[], 0.5, &radii).unwrap();
        assert_eq!(zero.c_eta, 0.0);
        let finite = vec![(label(0, 3), Complex64::new(2.0, 0.0))];
        assert!(omega_eta_check(&finite, 0.9, &radii).unwrap().pass);
        assert!(omega_eta_check(&finite, 1.5, &radii).is_err());
    }

    #[test]
    fn surrogate_examples() {
        let frame = golden_frame(Lattice::UNIT);
        let obs = Observable::single(Lattice::UNIT, label(0, 1));
        let s0 = sobolev_surrogate(&obs, &frame, 0.0).unwrap();
        assert!((s0 - obs.bump.sup()).abs() < 1e-15);
        assert_eq!(sobolev_surrogate(&Observable::zero(Lattice::UNIT), &frame, 3.0).unwrap(), 0.0);
        let fast = crate::moduli::renorm(&frame, 2f64.ln());
        assert!(sobolev_surrogate(&obs, &fast, 2.0).unwrap() > sobolev_surrogate(&obs, &frame, 2.0).unwrap());
    }

    #[test]
    fn observable_is_lattice_invariant() {
        let lattice = Lattice::new(2).unwrap();
        let frame = golden_frame(lattice);
        let obs = Observable::new(
            lattice,
            vec![(label(1, 1), Complex64::new(0.5, 0.2)), (label(0, -2), Complex64::new(0.1, 0.0))],
        );
        let g = GroupElement::new(0.41, 0.73, 0.2);
        let gamma = GroupElement::new(2.0, -1.0, 1.5);
        let a = obs.eval(&frame, g).unwrap();
        let b = obs.eval(&frame, gamma * g).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{"k":2,"components":[{"m":1,"n":1,"re":0.5}]}"#;
        let spec: ObservableSpec = serde_json::from_str(text).unwrap();
        let obs = spec.build().unwrap();
        assert_eq!(ObservableSpec::of(&obs), spec);
        assert!(serde_json::from_str::<ObservableSpec>(r#"{"components":[],"x":1}"#).is_err());
    }
}
