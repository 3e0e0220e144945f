//! Remez-type inequalities and valency bounds for functions of one variable.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Boundary samples for maxima and winding numbers.
pub const BOUNDARY_SAMPLES: usize = 1 << 12;

/// Minimum number of samples on `D` for a Remez check.
pub const MIN_REMEZ_SAMPLES: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemezReport {
    pub sup_d: f64,
    pub sup_omega: f64,
    pub leb_d: f64,
    pub leb_omega: f64,
    /// Smallest exponent for which `sup_D ≤ (4·Leb D/Leb ω)^d · sup_ω`.
    pub d_min: f64,
    pub d: f64,
    pub holds: bool,
    /// `d − d_min`.
    pub margin: f64,
}

fn exponent(sup_d: f64, sup_omega: f64, leb_ratio: f64) -> f64 {
    if sup_d <= sup_omega {
        return 0.0;
    }
    if sup_omega == 0.0 {
        return f64::INFINITY;
    }
    (sup_d / sup_omega).ln() / (4.0 * leb_ratio).ln()
}

fn merged_length(intervals: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut v: Vec<(f64, f64)> =
        intervals.iter().map(|&(a, b)| (a.max(lo), b.min(hi))).filter(|(a, b)| b > a).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in v {
        cur = match cur {
            Some((c0, c1)) if a <= c1 => Some((c0, c1.max(b))),
            Some((c0, c1)) => {
                total += c1 - c0;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    total + cur.map_or(0.0, |(a, b)| b - a)
}

/// Checks `sup_D |f| ≤ (4·Leb D/Leb ω)^d · sup_ω |f|` (one variable) from
/// samples `(position, |f|)` on the interval `D`, with `ω` a finite union of
/// intervals.
pub fn remez_check(domain: (f64, f64), samples: &[(f64, f64)], omega: &[(f64, f64)], d: f64) -> Result<RemezReport> {
    let (lo, hi) = domain;
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!("empty domain [{lo}, {hi}]")));
    }
    if samples.len() < MIN_REMEZ_SAMPLES {
        return Err(Error::InsufficientSamples { found: samples.len(), needed: MIN_REMEZ_SAMPLES });
    }
    let leb_d = hi - lo;
    let leb_omega = merged_length(omega, lo, hi);
    if leb_omega <= 0.0 {
        return Err(Error::InvalidArgument("ω has zero length inside D".into()));
    }
    let in_omega = |u: f64| omega.iter().any(|&(a, b)| a <= u && u <= b);
    let mut sup_d = 0.0f64;
    let mut sup_omega = 0.0f64;
    for &(u, v) in samples.iter().filter(|(u, _)| (lo..=hi).contains(u)) {
        sup_d = sup_d.max(v);
        if in_omega(u) {
            sup_omega = sup_omega.max(v);
        }
    }
    let d_min = exponent(sup_d, sup_omega, leb_d / leb_omega);
    Ok(RemezReport { sup_d, sup_omega, leb_d, leb_omega, d_min, d, holds: d >= d_min, margin: d - d_min })
}

/// Empirical Chebyshev degree of `|f|` sampled uniformly on `D`: the largest
/// Remez exponent over the sublevel sets `ω_q = {|f| ≤ q-quantile}` for
/// `q = 1/2, 1/4, …, 1/64`.
pub fn chebyshev_degree(moduli: &[f64]) -> Result<f64> {
    if moduli.len() < MIN_REMEZ_SAMPLES {
        return Err(Error::InsufficientSamples { found: moduli.len(), needed: MIN_REMEZ_SAMPLES });
    }
    let mut sorted = moduli.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let sup = sorted[n - 1];
    Ok((1..=6)
        .map(|k| {
            let count = n >> k;
            let level = sorted[count - 1];
            exponent(sup, level, n as f64 / count as f64)
        })
        .fold(0.0, f64::max))
}

/// Radii `r > 3t > 3` of the valency lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValencyRadii {
    pub r: f64,
    pub t: f64,
}

impl Default for ValencyRadii {
    fn default() -> Self {
        ValencyRadii { r: 10.0, t: 1.25 }
    }
}

impl ValencyRadii {
    /// `C_{r,t} = 1/log((r − t)/(3t) − 1)`, finite and positive only when
    /// `(r − t)/(3t) > 2`.
    pub fn constant(&self) -> Result<f64> {
        let ValencyRadii { r, t } = *self;
        if !(r > 3.0 * t && 3.0 * t > 3.0) {
            return Err(Error::InvalidArgument(format!("need r > 3t > 3 (r={r}, t={t})")));
        }
        let arg = (r - t) / (3.0 * t) - 1.0;
        if arg <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "(r − t)/(3t) − 1 = {arg:.4} must exceed 1 for a positive constant"
            )));
        }
        Ok(1.0 / arg.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValencyReport {
    pub r: f64,
    pub t: f64,
    /// `max_{|ζ|=r} |f|`.
    pub m_r: f64,
    /// Diameter of `f([−t, t])`.
    pub o_t: f64,
    pub constant: f64,
    /// `C_{r,t} log(4 M_f(r)/O_f(t))`, or 0 for a constant function.
    pub bound: f64,
    /// Largest number of solutions of `f = w` in `|ζ| < t` over the probe levels.
    pub observed: u32,
}

fn circle(f: &(impl Fn(Complex64) -> Result<Complex64> + Sync), radius: f64, n: usize) -> Result<Vec<Complex64>> {
    par::map_indexed(n, |k| f(Complex64::from_polar(radius, TAU * k as f64 / n as f64)))
        .into_iter()
        .map(|v| match v {
            Ok(z) if z.re.is_finite() && z.im.is_finite() => Ok(z),
            Ok(_) => Err(Error::NonAnalytic(format!("non-finite value on |ζ| = {radius}"))),
            Err(e) => Err(e),
        })
        .collect()
}

/// Winding number of a closed sampled curve around `w`.
pub fn winding_number(curve: &[Complex64], w: Complex64) -> i64 {
    let mut total = 0.0;
    for k in 0..curve.len() {
        let a = curve[k] - w;
        let b = curve[(k + 1) % curve.len()] - w;
        total += (b / a).arg();
    }
    (total / TAU).round() as i64
}

/// Valency bound for `f` on the disc `|ζ| ≤ r` against the observed number of
/// solutions of `f(ζ) = w` in `|ζ| < t`, with `w` probing values of `f` on the
/// real diameter.
pub fn valency_bound(f: impl Fn(Complex64) -> Result<Complex64> + Sync, radii: ValencyRadii) -> Result<ValencyReport> {
    let constant = radii.constant()?;
    let ValencyRadii { r, t } = radii;
    let outer = circle(&f, r, BOUNDARY_SAMPLES)?;
    let m_r = outer.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // an analytic function cannot gain many orders of magnitude between r and 1.1r
    let wider = circle(&f, 1.1 * r, BOUNDARY_SAMPLES / 4)?;
    let m_wide = wider.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m_wide > 1e6 * m_r.max(f64::MIN_POSITIVE) {
        return Err(Error::NonAnalytic(format!("max modulus jumps from {m_r:e} to {m_wide:e} at 1.1r")));
    }

    const REAL_SAMPLES: usize = 1024;
    let real: Vec<Complex64> =
        par::map_indexed(REAL_SAMPLES, |k| f(Complex64::new(-t + 2.0 * t * k as f64 / (REAL_SAMPLES - 1) as f64, 0.0)))
            .into_iter()
            .collect::<Result<_>>()?;
    let o_t = real.iter().flat_map(|a| real.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
    if o_t == 0.0 {
        return Ok(ValencyReport { r, t, m_r, o_t, constant, bound: 0.0, observed: 0 });
    }
    let bound = constant * (4.0 * m_r / o_t).ln();

    let inner = circle(&f, t, BOUNDARY_SAMPLES)?;
    const PROBES: usize = 33;
    let observed = (0..PROBES)
        .map(|k| real[(k * (REAL_SAMPLES - 1) * 9 / 10) / (PROBES - 1) + REAL_SAMPLES / 20])
        .map(|w| winding_number(&inner, w).max(0) as u32)
        .max()
        .unwrap_or(0);
    Ok(ValencyReport { r, t, m_r, o_t, constant, bound, observed })
}
