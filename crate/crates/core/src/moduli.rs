//! Renormalization on frames, the projection to the modular surface, and the
//! excursion functionals built from the distance to the base point.
//!
//! A frame's SL(2,R) part `[[a, b], [c, d]]` is sent to the upper half-plane by
//! the transposed matrix `A = [[a, c], [b, d]]`, `z = A·i = (a·i + c)/(b·i + d)`.
//! Renormalization scales the rows of the frame, i.e. `A ↦ A·diag(e^t, e^{−t})`,
//! and the lattice symmetries act on `A` from the left, so the orbit of a frame
//! projects onto a geodesic travelled at speed 2 on SL(2,Z)\H.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{Frame, Lattice};
use crate::sum::NeumaierSum;

/// Default quadrature step in renormalization time.
pub const DEFAULT_STEP: f64 = 1.0 / 64.0;

const MAX_REDUCTION_STEPS: usize = 10_000;

pub fn renorm(a: &Frame, t: f64) -> Frame {
    let (up, down) = (t.exp(), (-t).exp());
    Frame { a: a.a * up, b: a.b * up, v: a.v * up, c: a.c * down, d: a.d * down, w: a.w * down, ..*a }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularPoint {
    pub re: f64,
    pub im: f64,
}

impl ModularPoint {
    pub const I: ModularPoint = ModularPoint { re: 0.0, im: 1.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if im > 0.0 && re.is_finite() && im.is_finite() {
            Ok(ModularPoint { re, im })
        } else {
            Err(Error::InvalidArgument(format!("{re}+{im}i is not in the upper half-plane")))
        }
    }

    fn complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn from_complex(z: Complex64) -> Self {
        ModularPoint { re: z.re, im: z.im }
    }

    pub fn in_fundamental_domain(self, tol: f64) -> bool {
        self.re.abs() <= 0.5 + tol && self.re * self.re + self.im * self.im >= 1.0 - tol
    }
}

pub fn to_modular_point(a: &Frame) -> Result<ModularPoint> {
    let den = Complex64::new(a.d, a.b);
    if den.norm() < 1e-300 {
        return Err(Error::DegenerateFrame);
    }
    let z = Complex64::new(a.c, a.a) / den;
    ModularPoint::new(z.re, z.im).map_err(|_| Error::DegenerateFrame)
}

/// Gauss reduction into |Re z| ≤ 1/2, |z| ≥ 1.
pub fn reduce_fundamental(z: ModularPoint) -> ModularPoint {
    let mut w = z.complex();
    for _ in 0..MAX_REDUCTION_STEPS {
        w.re -= w.re.round();
        if w.norm_sqr() < 1.0 - 1e-15 {
            w = -w.inv();
        } else {
            break;
        }
    }
    ModularPoint::from_complex(w)
}

pub fn hyp_dist(z: ModularPoint, w: ModularPoint) -> f64 {
    let chord = (z.complex() - w.complex()).norm();
    2.0 * (chord / (2.0 * (z.im * w.im).sqrt())).asinh()
}

/// Distance from the base point `i` on the modular surface.
pub fn delta_m(a: &Frame) -> Result<f64> {
    Ok(hyp_dist(ModularPoint::I, reduce_fundamental(to_modular_point(a)?)))
}

/// Möbius matrix `[[p, q], [r, s]]` acting by `z ↦ (pz + q)/(rz + s)`.
#[derive(Debug, Clone, Copy)]
struct Mobius([f64; 4]);

impl Mobius {
    fn of_frame(a: &Frame) -> Self {
        Mobius([a.a, a.c, a.b, a.d])
    }

    fn at_i(&self) -> Complex64 {
        let [p, q, r, s] = self.0;
        Complex64::new(q, p) / Complex64::new(s, r)
    }

    fn flow(&mut self, h: f64) {
        let (up, down) = (h.exp(), (-h).exp());
        self.0[0] *= up;
        self.0[2] *= up;
        self.0[1] *= down;
        self.0[3] *= down;
    }

    /// Left-multiplies by SL(2,Z) until `A·i` is in the fundamental domain.
    fn reduce(&mut self) {
        for _ in 0..MAX_REDUCTION_STEPS {
            let n = self.at_i().re.round();
            if n != 0.0 {
                self.0[0] -= n * self.0[2];
                self.0[1] -= n * self.0[3];
            }
            if self.at_i().norm_sqr() < 1.0 - 1e-15 {
                let [p, q, r, s] = self.0;
                self.0 = [-r, -s, p, q];
            } else {
                break;
            }
        }
    }
}

/// `δ_M(renorm(a, k·t_end/n))` for `k = 0..=n`.
///
/// Frames tagged with a period are evaluated directly at `t mod period`;
/// otherwise the reduced Möbius matrix is walked step by step, which keeps the
/// working matrix bounded however far the orbit travels.
pub fn delta_orbit(a: &Frame, t_end: f64, n: usize) -> Result<Vec<f64>> {
    let n = n.max(1);
    let h = t_end / n as f64;
    if let Some(period) = a.period {
        return (0..=n).map(|k| delta_m(&renorm(a, (k as f64 * h).rem_euclid(period)))).collect();
    }
    to_modular_point(a)?;
    let mut walker = Mobius::of_frame(a);
    walker.reduce();
    let mut out = Vec::with_capacity(n + 1);
    out.push(hyp_dist(ModularPoint::I, ModularPoint::from_complex(walker.at_i())));
    for _ in 0..n {
        walker.flow(h);
        walker.reduce();
        let z = walker.at_i();
        if !(z.im > 0.0 && z.re.is_finite()) {
            return Err(Error::DegenerateFrame);
        }
        out.push(hyp_dist(ModularPoint::I, ModularPoint::from_complex(z)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSample {
    pub t: f64,
    pub delta: f64,
    pub integrand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub frame: Frame,
    pub horizon: f64,
    pub step: f64,
    pub samples: Vec<ExcursionSample>,
    pub value: f64,
}

fn grid(horizon: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || horizon < 0.0 || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need step > 0 and horizon ≥ 0 (got step {step}, horizon {horizon})"
        )));
    }
    Ok((horizon / step).ceil().max(1.0) as usize)
}

fn trapezoid(samples: &[ExcursionSample], h: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = NeumaierSum::new();
    acc.add(0.5 * samples[0].integrand);
    for s in &samples[1..n - 1] {
        acc.add(s.integrand);
    }
    acc.add(0.5 * samples[n - 1].integrand);
    acc.value() * h
}

/// `∫₀^horizon exp(δ_M(g_{−t}(a))/4 − t/2) dt` by the composite trapezoid rule.
pub fn dc_integral(a: &Frame, horizon: f64, step: f64) -> Result<ExcursionRecord> {
    let n = grid(horizon, step)?;
    let h = horizon / n as f64;
    let deltas = delta_orbit(a, -horizon, n)?;
    let samples: Vec<ExcursionSample> = deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let t = k as f64 * h;
            ExcursionSample { t, delta, integrand: (delta / 4.0 - t / 2.0).exp() }
        })
        .collect();
    let value = trapezoid(&samples, h);
    Ok(ExcursionRecord { frame: *a, horizon, step: h, samples, value })
}

/// `E_M(a, T) = ∫₀^{log T} exp(δ_M(g_{log T − t}(a))/4 − t/2) dt`.
pub fn excursion_e(a: &Frame, big_t: f64, step: f64) -> Result<f64> {
    if !(big_t >= 1.0) {
        return Err(Error::InvalidArgument(format!("excursion needs T ≥ 1, got {big_t}")));
    }
    let horizon = big_t.ln();
    if horizon == 0.0 {
        return Ok(0.0);
    }
    let n = grid(horizon, step)?;
    let h = horizon / n as f64;
    let forward = delta_orbit(a, horizon, n)?;
    let samples: Vec<ExcursionSample> = (0..=n)
        .map(|k| {
            let t = k as f64 * h;
            let delta = forward[n - k];
            ExcursionSample { t, delta, integrand: (delta / 4.0 - t / 2.0).exp() }
        })
        .collect();
    Ok(trapezoid(&samples, h))
}

/// Partial quotients `[a₁, a₂, …]` of `frac(ρ)`, at most `k` of them.
///
/// Stops early on rationals, and also as soon as the propagated rounding
/// error of the double-precision input swamps the remainder.
pub fn cf_partial_quotients(rho: f64, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = rho - rho.floor();
    let mut err = 0.5 * f64::EPSILON * rho.abs().max(1.0);
    while out.len() < k {
        if x <= err {
            break;
        }
        let y = 1.0 / x;
        let err_y = err / (x * x) + f64::EPSILON * y;
        let up = y.ceil();
        if up - y <= err_y {
            out.push(up as u64);
            break;
        }
        let q = y.floor();
        out.push(q as u64);
        x = y - q;
        err = err_y + f64::EPSILON * y;
        if err >= 0.5 {
            break;
        }
    }
    out
}

/// The quadratic irrational `(p + √disc)/q`, for exact continued fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub p: i128,
    pub disc: i128,
    pub q: i128,
}

impl QuadraticSurd {
    pub fn new(p: i128, disc: i128, q: i128) -> Result<Self> {
        let r = isqrt(disc);
        if disc <= 0 || r * r == disc || q == 0 {
            return Err(Error::InvalidArgument("need a positive non-square discriminant and q ≠ 0".into()));
        }
        // Normalise so that q divides disc − p², which keeps every complete
        // quotient in the same form with integer coefficients.
        if (disc - p * p) % q != 0 {
            return Ok(QuadraticSurd { p: p * q.abs(), disc: disc * q * q, q: q * q.abs() });
        }
        Ok(QuadraticSurd { p, disc, q })
    }

    pub fn to_f64(self) -> f64 {
        (self.p as f64 + (self.disc as f64).sqrt()) / self.q as f64
    }

    /// `true` iff `a ≤ (p + √disc)/q`.
    fn at_least(self, a: i128) -> bool {
        let lhs = a * self.q - self.p;
        if self.q > 0 {
            lhs <= 0 || lhs * lhs <= self.disc
        } else {
            lhs >= 0 && lhs * lhs >= self.disc
        }
    }

    fn floor(self) -> i128 {
        let mut a = self.to_f64().floor() as i128;
        while !self.at_least(a) {
            a -= 1;
        }
        while self.at_least(a + 1) {
            a += 1;
        }
        a
    }

    /// Partial quotients of the fractional part, exact.
    pub fn partial_quotients(self, k: usize) -> Vec<u64> {
        let mut s = self;
        let a0 = s.floor();
        // complete quotient x₁ = 1/(x − a₀)
        let mut out = Vec::with_capacity(k);
        let (mut p, mut q) = (a0 * s.q - s.p, (s.disc - (a0 * s.q - s.p).pow(2)) / s.q);
        for _ in 0..k {
            s = QuadraticSurd { p, disc: s.disc, q };
            let a = s.floor();
            out.push(a as u64);
            p = a * q - p;
            q = (s.disc - p * p) / q;
        }
        out
    }
}

fn isqrt(n: i128) -> i128 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn golden_rho() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

pub fn sqrt2_rho() -> f64 {
    2f64.sqrt() - 1.0
}

/// Frame `X = X₀ + ρY₀`, `Y = (−ρX₀ + Y₀)/(1 + ρ²)`: its projection is the
/// geodesic joining `−ρ` to `1/ρ`.
pub fn geodesic_frame(rho: f64, lattice: Lattice) -> Frame {
    let d = 1.0 / (1.0 + rho * rho);
    Frame { a: 1.0, b: rho, c: -d * rho, d, v: 0.0, w: 0.0, lattice, period: None }
}

/// Golden-mean frame on the closed geodesic of period `2·ln φ`.
pub fn golden_frame(lattice: Lattice) -> Frame {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    geodesic_frame(golden_rho(), lattice).with_period(2.0 * phi.ln())
}

/// Silver-mean frame on the closed geodesic of period `2·ln(1 + √2)`.
pub fn sqrt2_frame(lattice: Lattice) -> Frame {
    geodesic_frame(sqrt2_rho(), lattice).with_period(2.0 * (1.0 + 2f64.sqrt()).ln())
}

/// Frame with rotation number `p/q`; divergent under renormalization.
pub fn rational_frame(p: i64, q: i64, lattice: Lattice) -> Result<Frame> {
    if q <= 0 {
        return Err(Error::InvalidArgument(format!("rational frame needs q > 0, got {q}")));
    }
    Ok(geodesic_frame(p as f64 / q as f64, lattice))
}

/// Frame whose return map has rotation `ρ` and translation `σ` (with `a = 1`).
pub fn rotation_frame(rho: f64, sigma: f64, lattice: Lattice) -> Frame {
    Frame { a: 1.0, b: rho, c: 0.0, d: 1.0, v: sigma + rho / 2.0, w: 0.0, lattice, period: None }
}

/// Resolves `"golden"`, `"sqrt2"` and `"rational:p/q"`.
pub fn named_frame(name: &str, lattice: Lattice) -> Result<Frame> {
    match name {
        "golden" => Ok(golden_frame(lattice)),
        "sqrt2" => Ok(sqrt2_frame(lattice)),
        other => {
            let spec = other
                .strip_prefix("rational:")
                .ok_or_else(|| Error::InvalidArgument(format!("unknown frame name {other:?}")))?;
            let (p, q) = spec
                .split_once('/')
                .ok_or_else(|| Error::InvalidArgument(format!("expected rational:p/q, got {other:?}")))?;
            let parse =
                |s: &str| s.trim().parse::<i64>().map_err(|e| Error::InvalidArgument(format!("{other:?}: {e}")));
            rational_frame(parse(p)?, parse(q)?, lattice)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K1: Lattice = Lattice::UNIT;

    #[test]
    fn renorm_identity_doubles_x() {
        let f = renorm(&Frame::identity(K1), 2f64.ln());
        assert!((f.a - 2.0).abs() < 1e-15 && (f.d - 0.5).abs() < 1e-15);
        let g = renorm(&renorm(&golden_frame(K1), 0.3), 0.4);
        let h = renorm(&golden_frame(K1), 0.7);
        assert!((g.a - h.a).abs() < 1e-12 && (g.c - h.c).abs() < 1e-12);
        assert!((g.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let z = to_modular_point(&Frame::identity(K1)).unwrap();
        assert_eq!((z.re, z.im), (0.0, 1.0));
        let z = to_modular_point(&renorm(&Frame::identity(K1), 0.5)).unwrap();
        assert!((z.im - 1f64.exp()).abs() < 1e-14 && z.re.abs() < 1e-15);
        let shear = Frame::new(1.0, 1.0, 0.0, 1.0, 0.0, 0.0, K1).unwrap();
        let z = to_modular_point(&shear).unwrap();
        assert!((z.re - 0.5).abs() < 1e-15 && (z.im - 0.5).abs() < 1e-15);
        assert!(delta_m(&shear).unwrap() < 1e-12);
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_fundamental(ModularPoint::new(1.0, 1.0).unwrap());
        assert!(r.re.abs() < 1e-15 && (r.im - 1.0).abs() < 1e-15);
        let r = reduce_fundamental(ModularPoint::new(0.1, 0.1).unwrap());
        assert!(r.in_fundamental_domain(1e-12));
        // −1/(0.1+0.1i) = −5+5i → 5i
        assert!(r.re.abs() < 1e-12 && (r.im - 5.0).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let i = ModularPoint::I;
        let two_i = ModularPoint::new(0.0, 2.0).unwrap();
        assert!((hyp_dist(i, two_i) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(hyp_dist(two_i, two_i), 0.0);
    }

    #[test]
    fn delta_along_cusp_is_twice_time() {
        for t in [0.0, 0.5, 3.0, 10.0] {
            let d = delta_m(&renorm(&Frame::identity(K1), t)).unwrap();
            assert!((d - 2.0 * t).abs() < 1e-9, "{t}: {d}");
        }
    }

    #[test]
    fn golden_period_closes_orbit() {
        let f = golden_frame(K1);
        let p = f.period.unwrap();
        for t in [0.0, 0.1, 0.37] {
            let a = delta_m(&renorm(&f, t)).unwrap();
            let b = delta_m(&renorm(&f, t + p)).unwrap();
            assert!((a - b).abs() < 1e-10);
            let c = delta_m(&renorm(&f, t - p)).unwrap();
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn walker_matches_direct_evaluation_short_range() {
        let f = geodesic_frame(0.3127, K1);
        let walked = delta_orbit(&f, 4.0, 256).unwrap();
        for (k, w) in walked.iter().enumerate() {
            let direct = delta_m(&renorm(&f, 4.0 * k as f64 / 256.0)).unwrap();
            assert!((w - direct).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn dc_trivial_and_rational_growth() {
        assert_eq!(dc_integral(&golden_frame(K1), 0.0, DEFAULT_STEP).unwrap().value, 0.0);
        let rat = Frame::identity(K1);
        let a = dc_integral(&rat, 10.0, DEFAULT_STEP).unwrap().value;
        let b = dc_integral(&rat, 20.0, DEFAULT_STEP).unwrap().value;
        assert!(b > a + 1.0);
        assert_eq!(excursion_e(&golden_frame(K1), 1.0, DEFAULT_STEP).unwrap(), 0.0);
    }

    #[test]
    fn cf_examples() {
        assert_eq!(cf_partial_quotients(1.0 / 3.0, 10), vec![3]);
        let g = cf_partial_quotients(golden_rho(), 30);
        assert_eq!(g, vec![1; 30]);
        assert_eq!(cf_partial_quotients(sqrt2_rho(), 15), vec![2; 15]);
        assert_eq!(cf_partial_quotients(0.0, 5), Vec::<u64>::new());
        assert_eq!(cf_partial_quotients(0.75, 5), vec![1, 3]);
    }

    #[test]
    fn exact_surd_quotients() {
        let golden = QuadraticSurd::new(-1, 5, 2).unwrap();
        assert_eq!(golden.partial_quotients(50), vec![1; 50]);
        let silver = QuadraticSurd::new(-1, 2, 1).unwrap();
        assert_eq!(silver.partial_quotients(50), vec![2; 50]);
        let s7 = QuadraticSurd::new(0, 7, 1).unwrap();
        assert_eq!(s7.partial_quotients(8), vec![1, 1, 1, 4, 1, 1, 1, 4]);
        assert!(QuadraticSurd::new(0, 4, 1).is_err());
    }

    #[test]
    fn named_frames_parse() {
        assert!(named_frame("golden", K1).unwrap().period.is_some());
        let r = named_frame("rational:1/3", K1).unwrap();
        assert!((r.b - 1.0 / 3.0).abs() < 1e-15);
        assert!(named_frame("rational:1/0", K1).is_err());
        assert!(named_frame("bronze", K1).is_err());
    }
}
