//! Ergodic integrals of bump-lifted observables along the nilflow, computed
//! exactly from character sums over complete returns plus bump-CDF boundary
//! terms, and stored trajectories of the partial integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weyl::{cis, QuadraticPhase};
use crate::error::{Error, Result};
use crate::heis::{exp_lie, Frame, GroupElement, SkewShiftParams};
use crate::par;
use crate::phase::{triangular, Phase};
use crate::spectral::Observable;
use crate::sum::ComplexSum;

/// Position along a return interval: the flow has covered the fraction `u`
/// of the interval starting at the torus point `(0, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment {
    pub u: f64,
    pub y: f64,
    pub z: f64,
}

/// An orbit piece of length `time` from `x`: starts at fraction `u0` of the
/// interval above `(y, z)`, passes `returns` torus hits, and ends at fraction
/// `tail` of the last interval.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OrbitPiece {
    pub ssp: SkewShiftParams,
    pub start: Segment,
    pub returns: u64,
    pub tail: f64,
}

impl OrbitPiece {
    pub fn new(a: &Frame, x: GroupElement, time: f64) -> Result<Self> {
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::InvalidArgument(format!("integration time must be ≥ 0, got {time}")));
        }
        let ssp = a.return_params()?;
        let (tau, y, z) = a.decompose(x)?;
        let u0 = (tau / ssp.return_time).min(1.0 - f64::EPSILON);
        let q = time * a.a.abs();
        let whole = q.floor();
        let u = u0 + (q - whole);
        let carry = u.floor();
        let returns = whole as u64 + carry as u64;
        Ok(OrbitPiece { ssp, start: Segment { u: u0, y, z }, returns, tail: u - carry })
    }

    /// Torus point `T^j(y, z)` from exact phase arithmetic.
    pub fn torus_iterate(&self, j: u64) -> (f64, f64) {
        let ssp = &self.ssp;
        let k = ssp.lattice.k() as i128;
        let y = Phase::from_cycles(self.start.y);
        let rho = Phase::from_cycles(ssp.rho);
        let s = ssp.y_sign as i128;
        let y_new = y + rho * j as u128;
        // central coordinate measured in units of 1/K
        let w = Phase::from_cycles(self.start.z).times(k)
            + Phase::from_cycles(ssp.sigma).times(k) * j as u128
            + (y.times(k) * j as u128 + rho.times(k) * triangular(j)).times(s);
        (y_new.cycles(), w.cycles() / k as f64)
    }
}

/// Long-time nilflow through the return map: exact in the number of returns,
/// with only a short flow segment done in the group.
pub fn flow_long(a: &Frame, x: GroupElement, time: f64) -> Result<GroupElement> {
    if time < 0.0 {
        let back = Frame { a: -a.a, b: -a.b, v: -a.v, c: -a.c, d: -a.d, w: -a.w, ..*a };
        return flow_long(&back, x, -time);
    }
    let piece = OrbitPiece::new(a, x, time)?;
    let (y, z) = piece.torus_iterate(piece.returns);
    Ok(a.from_torus(piece.tail * piece.ssp.return_time, y, z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicIntegral {
    pub value: Complex64,
    pub time: f64,
    pub frame: Frame,
    pub x: GroupElement,
}

/// `∫₀^T f(φ^X_t x) dt` with `f` lifted along the frame's own flow.
pub fn ergodic_integral(f: &Observable, a: &Frame, x: GroupElement, time: f64) -> Result<ErgodicIntegral> {
    let piece = OrbitPiece::new(a, x, time)?;
    let value = integrate_piece(f, &piece);
    Ok(ErgodicIntegral { value, time, frame: *a, x })
}

pub(crate) fn integrate_piece(f: &Observable, piece: &OrbitPiece) -> Complex64 {
    let bump = &f.bump;
    let head = bump.cdf(piece.start.u);
    let tail = bump.cdf(piece.tail);
    let n = piece.returns;
    let mut acc = ComplexSum::new();
    for &(label, c) in &f.coeffs {
        let qp = QuadraticPhase::new(label, &piece.ssp, piece.start.y, piece.start.z);
        let full = par::reduce_chunks(
            n as usize,
            super::weyl::CHUNK,
            ComplexSum::new(),
            |r| qp.sum_range(r.start as u64, r.end as u64),
            ComplexSum::merge,
        );
        let mut part = full;
        part.add(-cis(qp.start) * head);
        part.add(cis(qp.at(n)) * tail);
        acc.add(c * part.value());
    }
    acc.value()
}

/// Partial integrals `s ↦ I_s(f)(x)` on `[0, T]`, stored through the torus
/// values `F(T^j ξ)` and their running sums.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub time: f64,
    return_time: f64,
    u0: f64,
    tail: f64,
    /// `F(T^j ξ)` for `j = 0..=N`.
    hits: Vec<Complex64>,
    /// `I` at the start of interval `j`: `Σ_{i<j} F_i − F_0·B(u0)`.
    offsets: Vec<Complex64>,
    head_mass: f64,
    bump: std::sync::Arc<crate::spectral::BumpProfile>,
    central: f64,
}

impl Trajectory {
    pub fn new(f: &Observable, a: &Frame, x: GroupElement, time: f64) -> Result<Self> {
        let piece = OrbitPiece::new(a, x, time)?;
        let n = piece.returns;
        let phases: Vec<(Complex64, QuadraticPhase)> = f
            .coeffs
            .iter()
            .map(|&(l, c)| (c, QuadraticPhase::new(l, &piece.ssp, piece.start.y, piece.start.z)))
            .collect();
        let hits = par::map_indexed(n as usize + 1, |j| {
            phases.iter().map(|(c, qp)| c * cis(qp.at(j as u64))).collect::<ComplexSum>().value()
        });
        let head_mass = f.bump.cdf(piece.start.u);
        let mut offsets = Vec::with_capacity(hits.len());
        let mut run = ComplexSum::new();
        run.add(-hits[0] * head_mass);
        for h in &hits {
            offsets.push(run.value());
            run.add(*h);
        }
        let k = f.lattice.k() as f64;
        let central = match f.coeffs.first() {
            Some(&(l, _)) if f.coeffs.iter().all(|(m, _)| m.n == l.n) => l.n as f64 * k,
            _ => f64::NAN,
        };
        Ok(Trajectory {
            time,
            return_time: piece.ssp.return_time,
            u0: piece.start.u,
            tail: piece.tail,
            hits,
            offsets,
            head_mass,
            bump: f.bump.clone(),
            central,
        })
    }

    pub fn returns(&self) -> usize {
        self.hits.len() - 1
    }

    /// `n·K` shared by all components, if there is one.
    pub fn central_parameter(&self) -> Option<f64> {
        self.central.is_finite().then_some(self.central)
    }

    fn value_in(&self, j: usize, u: f64) -> Complex64 {
        self.offsets[j] + self.hits[j] * self.bump.cdf(u)
    }

    /// `I_T`.
    pub fn end_value(&self) -> Complex64 {
        self.value_in(self.returns(), self.tail)
    }

    /// `I_s` for `0 ≤ s ≤ T`.
    pub fn at(&self, s: f64) -> Complex64 {
        let s = s.clamp(0.0, self.time);
        let q = s / self.return_time + self.u0;
        let j = (q.floor() as usize).min(self.returns());
        self.value_in(j, q - j as f64)
    }

    /// Trapezoid approximation of `∫₀^T e^{−iθs} I_s ds` with `sub` samples
    /// per return interval (aligned to the interval ends). Interior intervals
    /// share one set of weights, so the sum over intervals is a geometric
    /// series evaluated by a re-seeded recurrence.
    pub fn twisted_integral(&self, theta: Complex64, sub: usize) -> Complex64 {
        let sub = sub.max(1);
        let t_a = self.return_time;
        let n = self.returns();
        let kern = |s: f64| (Complex64::new(0.0, -1.0) * theta * s).exp();
        let mut acc = ComplexSum::new();

        // Trapezoid over the samples u in [lo, hi] of interval j.
        let partial = |j: usize, lo: f64, hi: f64, acc: &mut ComplexSum| {
            if hi <= lo {
                return;
            }
            let mut pts = vec![lo];
            for i in 1..sub {
                let u = i as f64 / sub as f64;
                if u > lo && u < hi {
                    pts.push(u);
                }
            }
            pts.push(hi);
            for w in pts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let sa = (j as f64 + a - self.u0) * t_a;
                let sb = (j as f64 + b - self.u0) * t_a;
                let ga = kern(sa) * self.value_in(j, a);
                let gb = kern(sb) * self.value_in(j, b);
                acc.add((ga + gb) * (0.5 * (sb - sa)));
            }
        };

        if n == 0 {
            partial(0, self.u0, self.tail, &mut acc);
            return acc.value();
        }
        partial(0, self.u0, 1.0, &mut acc);
        partial(n, 0.0, self.tail, &mut acc);

        // Full intervals 1..n: Σ_j e^{−iθ t_a (j − u0)} [C_j·P + F_j·Q].
        let h = t_a / sub as f64;
        let (mut p_w, mut q_w) = (ComplexSum::new(), ComplexSum::new());
        for i in 0..=sub {
            let u = i as f64 / sub as f64;
            let w = if i == 0 || i == sub { 0.5 * h } else { h };
            let e = kern(u * t_a) * w;
            p_w.add(e);
            q_w.add(e * self.bump.cdf(u));
        }
        let (p_w, q_w) = (p_w.value(), q_w.value());
        let ratio = kern(t_a);
        const RESEED: usize = 256;
        let mut phase = Complex64::new(0.0, 0.0);
        for j in 1..n {
            if (j - 1) % RESEED == 0 {
                phase = kern((j as f64 - self.u0) * t_a);
            }
            acc.add(phase * (self.offsets[j] * p_w + self.hits[j] * q_w));
            phase *= ratio;
        }
        acc.value()
    }

    pub fn head_mass(&self) -> f64 {
        self.head_mass
    }
}

/// `φ^Y_t(x) = x · exp(tY)` for the frame's second generator.
pub fn flow_y(a: &Frame, x: GroupElement, t: f64) -> GroupElement {
    crate::heis::reduce(x * exp_lie(a.c, a.d, a.w, t), a.lattice)
}

/// `φ^Z_t(x)`, translation along the centre.
pub fn flow_z(a: &Frame, x: GroupElement, t: f64) -> GroupElement {
    crate::heis::reduce(GroupElement::new(x.x, x.y, x.z + t), a.lattice)
}
