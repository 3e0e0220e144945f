//! Smooth time changes `V = αX` of the nilflow with `α = 1 + ε·Re(p)`, `p` a
//! bump-lifted character combination.
//!
//! Along one return interval the lifted observable is `F(T^j ξ)·χ(u)/t_a`, so
//! `α = 1 + κ_j χ(u)` with a single real parameter `κ_j`. The per-interval
//! integrals of `1/α` and `χ/α²` are therefore functions of `κ` alone and are
//! tabulated once as Chebyshev series; only the two partial intervals at the
//! ends of an orbit piece are integrated adaptively.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{flow_long, QuadraticPhase};
use crate::error::{Error, Result};
use crate::heis::{Frame, GroupElement, SkewShiftParams};
use crate::par;
use crate::quad::{adaptive_simpson, gauss10_composite};
use crate::rng;
use crate::spectral::{invariant_distribution, BumpProfile, CharLabel, LadderFunction, Observable};
use crate::stats::{self, LineFit};
use crate::sum::{ComplexSum, NeumaierSum};

/// Absolute tolerance of the adaptive quadrature on partial intervals.
const PARTIAL_TOL: f64 = 1e-12;

/// Relative tolerance of the root finder.
const ROOT_TOL: f64 = 1e-10;

/// Positivity grid resolution per axis.
pub const POSITIVITY_GRID: usize = 64;

/// Chebyshev series on `[lo, hi]`.
#[derive(Debug, Clone)]
struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    fn fit(lo: f64, hi: f64, degree: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = degree + 1;
        let nodes: Vec<f64> = (0..n).map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos()).collect();
        let values: Vec<f64> = nodes.iter().map(|&x| f(0.5 * (hi + lo) + 0.5 * (hi - lo) * x)).collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = (0..n)
                    .map(|k| values[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                s * 2.0 / n as f64
            })
            .collect();
        Chebyshev { lo, hi, coeffs }
    }

    fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + 0.5 * self.coeffs[0]
    }
}

/// `G(κ) = ∫₀¹ du/(1 + κχ)` and `G₂(κ) = ∫₀¹ χ du/(1 + κχ)²`.
#[derive(Debug, Clone)]
struct IntervalTables {
    bump: Arc<BumpProfile>,
    g: Chebyshev,
    g2: Chebyshev,
}

impl IntervalTables {
    const DEGREE: usize = 160;
    const PANELS: usize = 256;
    /// Fraction of the positivity limit `1/sup χ` covered by the tables.
    const REACH: f64 = 0.9;

    fn new(bump: Arc<BumpProfile>) -> Self {
        let k = Self::REACH / bump.sup();
        let g = {
            let b = bump.clone();
            Chebyshev::fit(-k, k, Self::DEGREE, move |kappa| Self::direct_g(&b, kappa))
        };
        let g2 = {
            let b = bump.clone();
            Chebyshev::fit(-k, k, Self::DEGREE, move |kappa| Self::direct_g2(&b, kappa))
        };
        IntervalTables { bump, g, g2 }
    }

    fn direct_g(b: &BumpProfile, kappa: f64) -> f64 {
        gauss10_composite(|u| 1.0 / (1.0 + kappa * b.pdf(u)), 0.0, 1.0, Self::PANELS)
    }

    fn direct_g2(b: &BumpProfile, kappa: f64) -> f64 {
        gauss10_composite(
            |u| {
                let c = b.pdf(u);
                c / (1.0 + kappa * c).powi(2)
            },
            0.0,
            1.0,
            Self::PANELS,
        )
    }

    fn g(&self, kappa: f64) -> f64 {
        if self.g.contains(kappa) {
            self.g.eval(kappa)
        } else {
            Self::direct_g(&self.bump, kappa)
        }
    }

    fn g2(&self, kappa: f64) -> f64 {
        if self.g2.contains(kappa) {
            self.g2.eval(kappa)
        } else {
            Self::direct_g2(&self.bump, kappa)
        }
    }
}

/// `α = 1 + ε·Re(p)` with `p` lifted along `frame`.
#[derive(Debug, Clone)]
pub struct TimeChange {
    pub base: Observable,
    pub amplitude: f64,
    pub frame: Frame,
    /// Certified lower bound of `α` (grid minimum minus the largest grid step).
    pub alpha_min: f64,
    pub alpha_max: f64,
    ssp: SkewShiftParams,
    tables: IntervalTables,
}

impl TimeChange {
    pub fn new(base: Observable, amplitude: f64, frame: &Frame) -> Result<Self> {
        if base.coeffs.iter().any(|(l, _)| l.n == 0) {
            return Err(Error::InvalidArgument("time-change base must have no n = 0 part".into()));
        }
        let ssp = frame.return_params()?;
        let tables = IntervalTables::new(base.bump.clone());
        let mut tc = TimeChange { base, amplitude, frame: *frame, alpha_min: 1.0, alpha_max: 1.0, ssp, tables };
        tc.certify()?;
        Ok(tc)
    }

    /// `α ≡ 1`.
    pub fn trivial(frame: &Frame) -> Result<Self> {
        TimeChange::new(Observable::zero(frame.lattice), 0.0, frame)
    }

    pub fn is_trivial(&self) -> bool {
        self.amplitude == 0.0 || self.base.is_zero()
    }

    /// Positivity on a 64³ grid of `(u, y, z)`, with the largest difference
    /// between grid neighbours as margin for the values in between.
    fn certify(&mut self) -> Result<()> {
        if self.is_trivial() {
            return Ok(());
        }
        let n = POSITIVITY_GRID;
        let k = self.frame.lattice.k() as f64;
        let t_a = self.ssp.return_time;
        let bump: Vec<f64> = (0..=n).map(|i| self.base.bump.pdf(i as f64 / n as f64) / t_a).collect();
        let slabs = par::map_indexed(n, |iy| {
            let y = iy as f64 / n as f64;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut step = 0.0f64;
            for iz in 0..n {
                let z = iz as f64 / (n as f64 * k);
                let f = self.amplitude * self.base.transverse(y, z).re;
                let dz = (self.amplitude * self.base.transverse(y, z + 1.0 / (n as f64 * k)).re - f).abs();
                let dy = (self.amplitude * self.base.transverse(y + 1.0 / n as f64, z).re - f).abs();
                for iu in 0..=n {
                    let a = 1.0 + f * bump[iu];
                    lo = lo.min(a);
                    hi = hi.max(a);
                    if iu < n {
                        step = step.max((f * (bump[iu + 1] - bump[iu])).abs());
                    }
                    step = step.max((dz + dy) * bump[iu]);
                }
            }
            (lo, hi, step)
        });
        let lo = slabs.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = slabs.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let step = slabs.iter().map(|s| s.2).fold(0.0, f64::max);
        self.alpha_min = lo - step;
        self.alpha_max = hi + step;
        if self.alpha_min <= 0.0 {
            return Err(Error::NonPositiveAlpha(self.alpha_min));
        }
        Ok(())
    }

    /// `α(p)`.
    pub fn alpha(&self, p: GroupElement) -> Result<f64> {
        if self.is_trivial() {
            return Ok(1.0);
        }
        Ok(1.0 + self.amplitude * self.base.eval(&self.frame, p)?.re)
    }

    /// `Zα(p)`.
    pub fn z_alpha(&self, p: GroupElement) -> Result<f64> {
        if self.is_trivial() {
            return Ok(0.0);
        }
        Ok(self.amplitude * self.base.central_derivative().eval(&self.frame, p)?.re)
    }
}

/// Walk along the X-orbit of a point, one return interval at a time.
struct OrbitWalk<'a> {
    tc: &'a TimeChange,
    phases: Vec<(Complex64, CharLabel, QuadraticPhase)>,
    u0: f64,
    j: u64,
}

/// `(κ, λ)` on a return interval: `α = 1 + κχ(u)`, `Zα = λχ(u)`.
#[derive(Debug, Clone, Copy)]
struct IntervalCoeffs {
    kappa: f64,
    lambda: f64,
}

impl<'a> OrbitWalk<'a> {
    fn new(tc: &'a TimeChange, x: GroupElement) -> Result<Self> {
        let (tau, y, z) = tc.frame.decompose(x)?;
        let phases = tc.base.coeffs.iter().map(|&(l, c)| (c, l, QuadraticPhase::new(l, &tc.ssp, y, z))).collect();
        let u0 = (tau / tc.ssp.return_time).min(1.0 - f64::EPSILON);
        Ok(OrbitWalk { tc, phases, u0, j: 0 })
    }

    fn coeffs(&self, j: u64) -> IntervalCoeffs {
        let tc = self.tc;
        let k = tc.frame.lattice.k() as f64;
        let t_a = tc.ssp.return_time;
        let mut f = ComplexSum::new();
        let mut zf = ComplexSum::new();
        for (c, l, qp) in &self.phases {
            let e = *c * crate::birkhoff::cis_phase(qp.at(j));
            f.add(e);
            zf.add(e * Complex64::new(0.0, TAU * l.n as f64 * k));
        }
        IntervalCoeffs { kappa: tc.amplitude * f.value().re / t_a, lambda: tc.amplitude * zf.value().re / t_a }
    }

    /// `∫_{u_lo}^{u_hi} t_a/(1 + κχ) du`.
    fn v_time(&self, ic: IntervalCoeffs, lo: f64, hi: f64) -> f64 {
        let t_a = self.tc.ssp.return_time;
        if lo == 0.0 && hi == 1.0 {
            return t_a * self.tc.tables.g(ic.kappa);
        }
        let b = &self.tc.base.bump;
        t_a * adaptive_simpson(|u| 1.0 / (1.0 + ic.kappa * b.pdf(u)), lo, hi, PARTIAL_TOL)
    }

    /// `∫_{u_lo}^{u_hi} t_a·Zα/α² du`.
    fn stretch(&self, ic: IntervalCoeffs, lo: f64, hi: f64) -> f64 {
        let t_a = self.tc.ssp.return_time;
        if ic.lambda == 0.0 {
            return 0.0;
        }
        if lo == 0.0 && hi == 1.0 {
            return t_a * ic.lambda * self.tc.tables.g2(ic.kappa);
        }
        let b = &self.tc.base.bump;
        t_a * ic.lambda
            * adaptive_simpson(
                |u| {
                    let c = b.pdf(u);
                    c / (1.0 + ic.kappa * c).powi(2)
                },
                lo,
                hi,
                PARTIAL_TOL,
            )
    }

    /// Inverts `u ↦ ∫_{lo}^{u} t_a/(1 + κχ)` on one interval.
    fn solve_in_interval(&self, ic: IntervalCoeffs, lo: f64, target: f64) -> f64 {
        let t_a = self.tc.ssp.return_time;
        let b = &self.tc.base.bump;
        let rate = |u: f64| t_a / (1.0 + ic.kappa * b.pdf(u));
        let (mut a, mut c) = (lo, 1.0);
        let mut u = (lo + target / t_a).clamp(lo, 1.0);
        for _ in 0..100 {
            let g = self.v_time(ic, lo, u) - target;
            if g.abs() <= ROOT_TOL * (1.0 + target) {
                break;
            }
            if g > 0.0 {
                c = u;
            } else {
                a = u;
            }
            let newton = u - g / rate(u);
            u = if newton > a && newton < c { newton } else { 0.5 * (a + c) };
            if c - a < 1e-15 {
                break;
            }
        }
        u
    }
}

/// Result of following `φ^V` for V-time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VFlow {
    pub point: GroupElement,
    /// Elapsed X-time `s = τ_X(x, t)`.
    pub x_time: f64,
    /// `D_t(x)`.
    pub stretch: f64,
}

/// Follows `φ^V` from `x` through each of the (ascending, non-negative)
/// `times`, computing the X-time and stretch at each.
pub fn flow_v_many(tc: &TimeChange, x: GroupElement, times: &[f64]) -> Result<Vec<VFlow>> {
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("V-times must be finite and ≥ 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("V-times must be ascending".into()));
    }
    if tc.alpha_min <= 0.0 {
        return Err(Error::NonPositiveAlpha(tc.alpha_min));
    }
    let a = &tc.frame;
    if tc.is_trivial() {
        return times.iter().map(|&t| Ok(VFlow { point: flow_long(a, x, t)?, x_time: t, stretch: 0.0 })).collect();
    }
    let t_a = tc.ssp.return_time;
    let mut walk = OrbitWalk::new(tc, x)?;
    let mut out = Vec::with_capacity(times.len());
    // V-time and stretch accumulated up to the start of the current interval
    let mut v_acc = NeumaierSum::new();
    let mut d_acc = NeumaierSum::new();
    let mut lo = walk.u0;
    let mut ic = walk.coeffs(0);
    let mut whole = walk.v_time(ic, lo, 1.0);
    for &t in times {
        while v_acc.value() + whole < t {
            v_acc.add(whole);
            d_acc.add(walk.stretch(ic, lo, 1.0));
            walk.j += 1;
            lo = 0.0;
            ic = walk.coeffs(walk.j);
            whole = walk.v_time(ic, 0.0, 1.0);
        }
        let u = walk.solve_in_interval(ic, lo, t - v_acc.value());
        let x_time = (walk.j as f64 + u - walk.u0) * t_a;
        let stretch = d_acc.value() + walk.stretch(ic, lo, u);
        out.push(VFlow { point: flow_long(a, x, x_time)?, x_time, stretch });
    }
    Ok(out)
}

/// `φ^V_t(x)` for `t ≥ 0`.
pub fn flow_v(tc: &TimeChange, x: GroupElement, t: f64) -> Result<GroupElement> {
    Ok(flow_v_many(tc, x, &[t])?[0].point)
}

/// `D_t(x) = ∫₀^t (Zα/α)∘φ^V_τ dτ = ∫₀^s (Zα/α²)∘φ^X_r dr`.
pub fn stretch_d(tc: &TimeChange, x: GroupElement, t: f64) -> Result<f64> {
    Ok(flow_v_many(tc, x, &[t])?[0].stretch)
}

/// `τ_V(x, s) = ∫₀^s α^{−1}(φ^X_r x) dr`: the V-time needed to cover X-time `s`.
pub fn v_time(tc: &TimeChange, x: GroupElement, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("X-time must be ≥ 0, got {s}")));
    }
    if tc.is_trivial() {
        return Ok(s);
    }
    let t_a = tc.ssp.return_time;
    let walk = OrbitWalk::new(tc, x)?;
    let end = walk.u0 + s / t_a;
    let last = end.floor() as u64;
    let mut acc = NeumaierSum::new();
    let mut lo = walk.u0;
    for j in 0..=last {
        let hi = if j == last { end - last as f64 } else { 1.0 };
        if hi > lo {
            acc.add(walk.v_time(walk.coeffs(j), lo, hi));
        }
        lo = 0.0;
    }
    Ok(acc.value())
}

/// For each component in the support of `f`, the invariant distribution of the
/// return map applied to the transverse data of `f` (normalised at the first
/// label seen in that component). All zeros flag a coboundary.
pub fn coboundary_obstructions(f: &Observable, ssp: &SkewShiftParams) -> Result<Vec<(CharLabel, Complex64)>> {
    let lattice = ssp.lattice;
    let mut ladders: Vec<LadderFunction> = Vec::new();
    for &(l, c) in &f.coeffs {
        if l.n == 0 {
            return Err(Error::InvalidArgument("n = 0 components carry no obstruction".into()));
        }
        let step = l.n * lattice.k() as i64;
        match ladders.iter_mut().find(|lf| lf.label.component(lattice) == l.component(lattice)) {
            Some(lf) => {
                let j = (l.m - lf.label.m) / step;
                match lf.coeffs.iter_mut().find(|(i, _)| *i == j) {
                    Some(entry) => entry.1 += c,
                    None => lf.coeffs.push((j, c)),
                }
            }
            None => ladders.push(LadderFunction { label: l, coeffs: vec![(0, c)] }),
        }
    }
    ladders.into_iter().map(|lf| Ok((lf.label, invariant_distribution(lf.label, ssp, &lf)?))).collect()
}

/// Observable with transverse data `F∘T − F` for a ladder function `F`.
pub fn coboundary_of(lattice: crate::heis::Lattice, f: &LadderFunction, ssp: &SkewShiftParams) -> Observable {
    let composed = f.compose_return_map(ssp);
    let mut coeffs: Vec<(CharLabel, Complex64)> = Vec::new();
    let mut push = |l: CharLabel, c: Complex64| match coeffs.iter_mut().find(|(m, _)| *m == l) {
        Some(e) => e.1 += c,
        None => coeffs.push((l, c)),
    };
    for &(j, c) in &composed.coeffs {
        push(composed.character(j, lattice), c);
    }
    for &(j, c) in &f.coeffs {
        push(f.character(j, lattice), -c);
    }
    Observable::new(lattice, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub t: f64,
    pub value: Complex64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub points: Vec<CorrelationPoint>,
    pub samples: usize,
    pub seed: u64,
    pub h_id: String,
    pub g_id: String,
}

/// Per-sample ingredients of the ratio estimator.
struct CorrSample {
    weight: f64,
    g0: Complex64,
    h0: Complex64,
    h_t: Vec<Complex64>,
}

/// `⟨h∘φ^V_t, g⟩` in `L²(ω_V)`, `ω_V = α^{−1} dvol`, at each `t` in `times`
/// (ascending, ≥ 0): self-normalized Monte-Carlo over `n` Haar points with
/// the weighted means of `h` and `g` removed.
#[allow(clippy::too_many_arguments)]
pub fn correlation_series(
    h: &Observable,
    g: &Observable,
    tc: &TimeChange,
    times: &[f64],
    n: usize,
    seed: u64,
) -> Result<CorrelationSeries> {
    if n < 2 {
        return Err(Error::InsufficientSamples { found: n, needed: 2 });
    }
    let a = &tc.frame;
    let samples: Vec<Result<CorrSample>> = par::map_indexed(n, |i| {
        let x = rng::uniform_point(&mut rng::stream(seed, i as u64), a.lattice);
        let weight = 1.0 / tc.alpha(x)?;
        let flows = flow_v_many(tc, x, times)?;
        let h_t = flows.iter().map(|v| h.eval(a, v.point)).collect::<Result<_>>()?;
        Ok(CorrSample { weight, g0: g.eval(a, x)?, h0: h.eval(a, x)?, h_t })
    });
    let samples: Vec<CorrSample> = samples.into_iter().collect::<Result<_>>()?;

    let w_sum: f64 = samples.iter().map(|s| s.weight).collect::<NeumaierSum>().value();
    let mean_of = |f: &dyn Fn(&CorrSample) -> Complex64| {
        samples.iter().map(|s| f(s) * s.weight).collect::<ComplexSum>().value() / w_sum
    };
    let mean_h = mean_of(&|s| s.h0);
    let mean_g = mean_of(&|s| s.g0);
    let w_bar = w_sum / n as f64;

    let points = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let terms: Vec<Complex64> =
                samples.iter().map(|s| (s.h_t[k] - mean_h) * (s.g0 - mean_g).conj() * s.weight).collect();
            let value = terms.iter().copied().collect::<ComplexSum>().value() / w_sum;
            // delta-method variance of the ratio Σa/Σw
            let resid: Vec<Complex64> = terms.iter().zip(&samples).map(|(a, s)| a - value * s.weight).collect();
            let var = resid.iter().map(|r| r.norm_sqr()).sum::<f64>() / (n - 1) as f64;
            CorrelationPoint { t, value, stderr: (var / n as f64).sqrt() / w_bar }
        })
        .collect();
    Ok(CorrelationSeries { points, samples: n, seed, h_id: observable_id(h), g_id: observable_id(g) })
}

/// Single correlation value and its standard error.
pub fn correlation(
    h: &Observable,
    g: &Observable,
    tc: &TimeChange,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<CorrelationPoint> {
    Ok(correlation_series(h, g, tc, &[t], n, seed)?.points[0])
}

/// Compact text id `K:(m,n,re,im);…` of an observable.
pub fn observable_id(f: &Observable) -> String {
    let parts: Vec<String> = f.coeffs.iter().map(|(l, c)| format!("({},{},{},{})", l.m, l.n, c.re, c.im)).collect();
    format!("{}:{}", f.lattice.k(), parts.join(";"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateFit {
    pub amplitude: f64,
    pub delta: f64,
    /// Sum of squared residuals of `log|corr|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `−slope` of the Theil–Sen fit of `log|corr|` against `log t`.
    pub delta_hat: f64,
    pub slope: LineFit,
    /// 95% bootstrap interval of the slope.
    pub slope_ci: (f64, f64),
    /// `C/(1 + t)^δ`.
    pub power: TemplateFit,
    /// `C·(1 + t)^{−1/(1 + log^δ(1 + t))}`.
    pub log_corrected: TemplateFit,
    pub used_points: usize,
}

/// Bootstrap replicates for the slope interval.
pub const BOOTSTRAP_REPLICATES: usize = 2000;

/// Fits the decay of `|corr(t)|` from the points at `t > 0` with `|corr|` above
/// three standard errors.
pub fn decay_fit(series: &CorrelationSeries) -> Result<DecayFit> {
    let pts: Vec<&CorrelationPoint> =
        series.points.iter().filter(|p| p.t > 0.0 && p.value.norm() > 3.0 * p.stderr).collect();
    const NEEDED: usize = 8;
    if pts.len() < NEEDED {
        return Err(Error::InsufficientSignal(format!(
            "{} of {} points exceed three standard errors (need {NEEDED})",
            pts.len(),
            series.points.len()
        )));
    }
    let lt: Vec<f64> = pts.iter().map(|p| p.t.ln()).collect();
    let lc: Vec<f64> = pts.iter().map(|p| p.value.norm().ln()).collect();
    let slope = stats::theil_sen(&lt, &lc).ok_or_else(|| Error::InsufficientSignal("degenerate t grid".into()))?;

    // pair bootstrap over points, with a counter-based stream
    use rand::Rng;
    let mut boot: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .filter_map(|b| {
            let mut r = rng::stream(series.seed ^ 0x5eed_b007, b as u64);
            let idx: Vec<usize> = (0..lt.len()).map(|_| r.gen_range(0..lt.len())).collect();
            let x: Vec<f64> = idx.iter().map(|&i| lt[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| lc[i]).collect();
            stats::theil_sen(&x, &y).map(|f| f.slope)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let slope_ci = (stats::quantile_sorted(&boot, 0.025), stats::quantile_sorted(&boot, 0.975));

    let ts: Vec<f64> = pts.iter().map(|p| p.t).collect();
    let power = fit_template(&ts, &lc, |t, d| -d * (1.0 + t).ln());
    let log_corrected = fit_template(&ts, &lc, |t, d| {
        let l = (1.0 + t).ln();
        -l / (1.0 + l.powf(d))
    });
    Ok(DecayFit { delta_hat: -slope.slope, slope, slope_ci, power, log_corrected, used_points: pts.len() })
}

/// Least squares of `log|c| ≈ log C + shape(t, δ)` over `δ` (golden-section on
/// a bracket) with `log C` profiled out.
fn fit_template(ts: &[f64], logs: &[f64], shape: impl Fn(f64, f64) -> f64) -> TemplateFit {
    let profile = |d: f64| {
        let s: Vec<f64> = ts.iter().map(|&t| shape(t, d)).collect();
        let c = stats::mean(&logs.iter().zip(&s).map(|(l, s)| l - s).collect::<Vec<_>>());
        let r: f64 = logs.iter().zip(&s).map(|(l, s)| (l - c - s).powi(2)).sum();
        (r, c)
    };
    // coarse scan, then golden-section refinement around the best cell
    let grid: Vec<f64> = (0..=400).map(|i| -2.0 + 6.0 * i as f64 / 400.0).collect();
    let best = grid.iter().copied().min_by(|a, b| profile(*a).0.total_cmp(&profile(*b).0)).unwrap_or(0.0);
    let (mut lo, mut hi) = (best - 0.015, best + 0.015);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if profile(m1).0 < profile(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let delta = 0.5 * (lo + hi);
    let (residual, c) = profile(delta);
    TemplateFit { amplitude: c.exp(), delta, residual }
}
