//! Quadratic Weyl sums `S_J = Σ_{j<J} e_{m,n}(T^j(y, z))`.
//!
//! The phase of the j-th term is the quadratic polynomial
//! `φ_j = φ₀ + j·ψ₀ + δ·j(j−1)/2` (mod 1), held exactly in 128-bit fixed point.
//! The hot loop advances unit phasors by the second-order recurrence
//! `w ← w·r, r ← r·e^{2πiδ}` and re-seeds both from the exact phase every
//! [`BLOCK`] terms, so rounding never accumulates beyond one block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::SkewShiftParams;
use crate::par;
use crate::phase::{triangular, Phase};
use crate::spectral::CharLabel;
use crate::sum::ComplexSum;

/// Terms between exact re-seeds of the phasor recurrence.
pub const BLOCK: u64 = 32;

/// Terms per parallel work item. Fixed, so results do not depend on threads.
pub const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylSumSpec {
    pub label: CharLabel,
    pub ssp: SkewShiftParams,
    pub y: f64,
    pub z: f64,
    pub terms: u64,
}

#[inline]
pub(crate) fn cis(p: Phase) -> Complex64 {
    let (s, c) = p.radians().sin_cos();
    Complex64::new(c, s)
}

/// Exact quadratic phase of the character sum along an orbit of the skew-shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticPhase {
    pub start: Phase,
    pub rate: Phase,
    pub accel: Phase,
}

impl QuadraticPhase {
    pub fn new(label: CharLabel, ssp: &SkewShiftParams, y: f64, z: f64) -> Self {
        let nk = label.n as i128 * ssp.lattice.k() as i128;
        let s = ssp.y_sign as i128;
        let y_ph = Phase::from_cycles(y);
        let rho = Phase::from_cycles(ssp.rho);
        let start = y_ph.times(label.m as i128) + Phase::from_cycles(z).times(nk);
        let rate = rho.times(label.m as i128) + y_ph.times(s * nk) + Phase::from_cycles(ssp.sigma).times(nk);
        let accel = rho.times(s * nk);
        QuadraticPhase { start, rate, accel }
    }

    #[inline]
    pub fn at(&self, j: u64) -> Phase {
        self.start + self.rate * j as u128 + self.accel * triangular(j)
    }

    /// `φ_{j+1} − φ_j`.
    #[inline]
    pub fn increment(&self, j: u64) -> Phase {
        self.rate + self.accel * j as u128
    }

    /// `Σ_{j0 ≤ j < j1} e^{2πiφ_j}` with compensated accumulation of block sums.
    pub fn sum_range(&self, j0: u64, j1: u64) -> ComplexSum {
        let step = cis(self.accel);
        let (sr_step, si_step) = (step.re, step.im);
        let mut acc = ComplexSum::new();
        let mut b = j0;
        while b < j1 {
            let e = (b + BLOCK).min(j1);
            let w0 = cis(self.at(b));
            let r0 = cis(self.increment(b));
            let (mut wr, mut wi) = (w0.re, w0.im);
            let (mut rr, mut ri) = (r0.re, r0.im);
            let (mut sr, mut si) = (0.0, 0.0);
            for _ in b..e {
                sr += wr;
                si += wi;
                let nwr = wr * rr - wi * ri;
                let nwi = wr * ri + wi * rr;
                let nrr = rr * sr_step - ri * si_step;
                let nri = rr * si_step + ri * sr_step;
                wr = nwr;
                wi = nwi;
                rr = nrr;
                ri = nri;
            }
            acc.add(Complex64::new(sr, si));
            b = e;
        }
        acc
    }

    /// Reference evaluation: every term from its exact phase.
    pub fn sum_range_direct(&self, j0: u64, j1: u64) -> ComplexSum {
        (j0..j1).map(|j| cis(self.at(j))).collect()
    }
}

fn chunked(qp: &QuadraticPhase, terms: u64, direct: bool) -> Complex64 {
    let n = terms as usize;
    par::reduce_chunks(
        n,
        CHUNK,
        ComplexSum::new(),
        |r| {
            if direct {
                qp.sum_range_direct(r.start as u64, r.end as u64)
            } else {
                qp.sum_range(r.start as u64, r.end as u64)
            }
        },
        ComplexSum::merge,
    )
    .value()
}

pub fn weyl_sum(spec: &WeylSumSpec) -> Complex64 {
    let qp = QuadraticPhase::new(spec.label, &spec.ssp, spec.y, spec.z);
    chunked(&qp, spec.terms, false)
}

/// The same sum evaluated term by term from the exact phase (slow reference).
pub fn weyl_sum_direct(spec: &WeylSumSpec) -> Complex64 {
    let qp = QuadraticPhase::new(spec.label, &spec.ssp, spec.y, spec.z);
    chunked(&qp, spec.terms, true)
}

/// Partial sums `S_j` at `j = stride, 2·stride, …` (and at `terms`).
pub fn weyl_partial_sums(spec: &WeylSumSpec, stride: u64) -> Vec<(u64, Complex64)> {
    let qp = QuadraticPhase::new(spec.label, &spec.ssp, spec.y, spec.z);
    let stride = stride.max(1) as usize;
    let pieces =
        par::map_chunks(spec.terms as usize, stride, |r| (r.end as u64, qp.sum_range(r.start as u64, r.end as u64)));
    let mut running = ComplexSum::new();
    pieces
        .into_iter()
        .map(|(j, s)| {
            running = running.merge(s);
            (j, running.value())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMoments {
    /// `(1/Q) Σ_q |S_J(q/Q, z)|²`.
    pub l2: f64,
    /// `(1/Q) Σ_q S_J(q/Q, z)`.
    pub mean: Complex64,
}

/// L² norm and mean over the `y`-circle of the Weyl sum on a `Q`-point grid.
pub fn weyl_grid_moments(
    label: CharLabel,
    ssp: &SkewShiftParams,
    z: f64,
    terms: u64,
    grid: usize,
) -> Result<GridMoments> {
    let required = 2 * label.ladder_step(ssp.lattice) as usize * terms as usize;
    if grid <= required {
        return Err(Error::GridTooCoarse { q: grid, required });
    }
    let sums = par::map_indexed(grid, |q| {
        let qp = QuadraticPhase::new(label, ssp, q as f64 / grid as f64, z);
        qp.sum_range(0, terms).value()
    });
    let l2 = par::tree_reduce(sums.iter().map(|s| s.norm_sqr()).collect(), 0.0, |a, b| a + b) / grid as f64;
    let mean = par::tree_reduce(sums, Complex64::new(0.0, 0.0), |a, b| a + b) / grid as f64;
    Ok(GridMoments { l2, mean })
}

pub fn weyl_sum_l2_over_y(label: CharLabel, ssp: &SkewShiftParams, z: f64, terms: u64, grid: usize) -> Result<f64> {
    weyl_grid_moments(label, ssp, z, terms, grid).map(|m| m.l2)
}

/// Grid inner product `(1/Q) Σ_q S_J(q/Q, z) · conj(S'_J(q/Q, z))` of two
/// Birkhoff sums.
pub fn weyl_grid_inner(
    first: CharLabel,
    second: CharLabel,
    ssp: &SkewShiftParams,
    z: f64,
    terms: u64,
    grid: usize,
) -> Complex64 {
    let prods = par::map_indexed(grid, |q| {
        let y = q as f64 / grid as f64;
        let a = QuadraticPhase::new(first, ssp, y, z).sum_range(0, terms).value();
        let b = QuadraticPhase::new(second, ssp, y, z).sum_range(0, terms).value();
        a * b.conj()
    });
    par::tree_reduce(prods, Complex64::new(0.0, 0.0), |a, b| a + b) / grid as f64
}
