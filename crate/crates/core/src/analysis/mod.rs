//! Monte-Carlo experiments on normalized ergodic integrals: empirical limit
//! distributions, second moments, sublevel-set measures, and the holomorphic
//! extension of the partial integrals along transverse leaves with its
//! Remez/valency diagnostics.

mod extension;
mod remez;

pub use extension::{
    complex_extension_eval, complex_extension_with, leaf_function, ExtensionDomain, LeafFunction,
    DEFAULT_MAX_LOG_GROWTH,
};
pub use remez::{
    chebyshev_degree, remez_check, valency_bound, winding_number, RemezReport, ValencyRadii, ValencyReport,
    BOUNDARY_SAMPLES,
};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{ergodic_integral, BudgetModel};
use crate::error::{Error, Result};
use crate::heis::{Frame, GroupElement};
use crate::par;
use crate::rng;
use crate::spectral::Observable;
use crate::stats::{self, LineFit};

/// How sample points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Haar volume on M.
    Volume,
    /// Haar volume with the central coordinate stratified over the samples.
    Stratified,
    /// Uniform on the transverse torus `{x = 0}`.
    Torus,
}

/// Sample point `i` of `n` for an experiment seeded with `seed`.
pub fn sample_point(sampling: Sampling, seed: u64, i: usize, n: usize, a: &Frame) -> GroupElement {
    let mut r = rng::stream(seed, i as u64);
    match sampling {
        Sampling::Volume => rng::uniform_point(&mut r, a.lattice),
        Sampling::Torus => rng::uniform_torus_point(&mut r, a.lattice),
        Sampling::Stratified => {
            let mut p = rng::uniform_point(&mut r, a.lattice);
            let k = a.lattice.k() as f64;
            p.z = (i as f64 + r.gen::<f64>()) / (n.max(1) as f64 * k);
            p
        }
    }
}

/// `T^{−1/2} I_T(f)(x_i)` for `n` sample points.
pub fn normalized_integrals(
    f: &Observable,
    a: &Frame,
    time: f64,
    n: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<Vec<Complex64>> {
    a.return_time()?;
    let norm = time.sqrt().recip();
    par::map_indexed(n, |i| {
        let x = sample_point(sampling, seed, i, n, a);
        ergodic_integral(f, a, x, time).map(|e| e.value * norm)
    })
    .into_iter()
    .collect()
}

/// Empirical distribution function of a real sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
    pub seed: u64,
}

impl Ecdf {
    pub const MIN_SAMPLES: usize = 100;

    pub fn new(mut values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.len() < Self::MIN_SAMPLES {
            return Err(Error::InsufficientSamples { found: values.len(), needed: Self::MIN_SAMPLES });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in sample".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: values, seed })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `≤ v`.
    pub fn eval(&self, v: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= v) as f64 / self.len() as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        stats::quantile_sorted(&self.sorted, q)
    }

    /// `(value, rank/N)` pairs.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.len() as f64;
        self.sorted.iter().enumerate().map(move |(i, &v)| (v, (i + 1) as f64 / n))
    }
}

/// Two-sample Kolmogorov–Smirnov statistic: sup-distance of the step functions.
pub fn ks_distance(e1: &Ecdf, e2: &Ecdf) -> f64 {
    let (a, b) = (e1.sorted(), e2.sorted());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub time: f64,
    pub real: Ecdf,
    pub modulus: Ecdf,
    /// `E|T^{−1/2} I_T|²`.
    pub second_moment: f64,
}

/// Distribution of `T^{−1/2} I_T(f)(x)` over `n` Haar-random points.
pub fn empirical_distribution(
    f: &Observable,
    a: &Frame,
    time: f64,
    n: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    empirical_distribution_with(f, a, time, n, seed, Sampling::Volume)
}

pub fn empirical_distribution_with(
    f: &Observable,
    a: &Frame,
    time: f64,
    n: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<EmpiricalDistribution> {
    if n < Ecdf::MIN_SAMPLES {
        return Err(Error::InsufficientSamples { found: n, needed: Ecdf::MIN_SAMPLES });
    }
    let values = normalized_integrals(f, a, time, n, seed, sampling)?;
    let second_moment = stats::mean(&values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>());
    Ok(EmpiricalDistribution {
        time,
        real: Ecdf::new(values.iter().map(|v| v.re).collect(), seed)?,
        modulus: Ecdf::new(values.iter().map(|v| v.norm()).collect(), seed)?,
        second_moment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub time: f64,
    pub second_moment: f64,
    pub stderr: f64,
}

/// `E|T^{−1/2} I_T|²` along a grid of times, from the same sample points.
pub fn second_moment_track(
    f: &Observable,
    a: &Frame,
    times: &[f64],
    n: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<Vec<MomentPoint>> {
    times
        .iter()
        .map(|&t| {
            let sq: Vec<f64> = normalized_integrals(f, a, t, n, seed, sampling)?.iter().map(|v| v.norm_sqr()).collect();
            let (m, se) = stats::mean_stderr(&sq);
            Ok(MomentPoint { time: t, second_moment: m, stderr: se })
        })
        .collect()
}

/// `max/min` of the second moments over the last `k` points of a track.
pub fn track_spread(track: &[MomentPoint], k: usize) -> f64 {
    let tail = &track[track.len().saturating_sub(k)..];
    let hi = tail.iter().map(|p| p.second_moment).fold(f64::MIN, f64::max);
    let lo = tail.iter().map(|p| p.second_moment).fold(f64::MAX, f64::min);
    hi / lo
}

/// Threshold family for sublevel sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regime {
    /// `|I_T| ≤ ε T^{1/2}` (bounded-type frames).
    Compact,
    /// `|I_T| ≤ ε T^{1/2} / (C log^{1/4+ζ} T)`.
    Generic { zeta: f64, constant: f64 },
}

impl Regime {
    fn threshold_scale(&self, time: f64) -> f64 {
        match *self {
            Regime::Compact => 1.0,
            Regime::Generic { zeta, constant } => 1.0 / (constant * time.ln().max(1.0).powf(0.25 + zeta)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelPoint {
    pub epsilon: f64,
    pub measure: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Whether the substitution budget is below `ε·T^{1/2}/10`.
    pub budget_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelReport {
    pub time: f64,
    pub samples: usize,
    pub seed: u64,
    pub regime: Regime,
    pub points: Vec<SublevelPoint>,
    pub delta_hat: f64,
    pub delta_ci: (f64, f64),
    pub r2: f64,
    /// Points inside the fittable band `(10/N, 0.5)`.
    pub fitted: usize,
    pub error_budget: f64,
}

impl SublevelReport {
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[0].measure <= w[1].measure)
    }
}

/// Least-squares slope of `log y` on `log x` with a 95% interval.
fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<(LineFit, (f64, f64))> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = stats::least_squares(&lx, &ly).or_else(|| stats::theil_sen(&lx, &ly))?;
    let n = lx.len() as f64;
    if n <= 2.0 {
        return Some((fit, (f64::NEG_INFINITY, f64::INFINITY)));
    }
    let mx = stats::mean(&lx);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    Some((fit, (fit.slope - stats::Z95 * se, fit.slope + stats::Z95 * se)))
}

/// Monte-Carlo measure of `{x : |I_T(f)(x)| ≤ ε T^{1/2}·scale}` on a grid of `ε`
/// and the fitted exponent of `measure ~ ε^δ`.
pub fn sublevel_measure(
    f: &Observable,
    a: &Frame,
    time: f64,
    epsilons: &[f64],
    n: usize,
    seed: u64,
    regime: Regime,
) -> Result<SublevelReport> {
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidArgument("ε grid must lie in (0, 1)".into()));
    }
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    let values = normalized_integrals(f, a, time, n, seed, Sampling::Volume)?;
    let mut moduli: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let scale = regime.threshold_scale(time);
    let error_budget = BudgetModel::default().budget(f, a)?;
    let points: Vec<SublevelPoint> = eps
        .iter()
        .map(|&e| {
            let k = moduli.partition_point(|&m| m <= e * scale);
            let (ci_lo, ci_hi) = stats::wilson_interval(k, n, stats::Z95);
            SublevelPoint {
                epsilon: e,
                measure: k as f64 / n as f64,
                ci_lo,
                ci_hi,
                budget_ok: error_budget <= e * scale * time.sqrt() / 10.0,
            }
        })
        .collect();
    let floor = 10.0 / n as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.measure > floor && p.measure < 0.5).map(|p| (p.epsilon, p.measure)).unzip();
    const NEEDED: usize = 3;
    if xs.len() < NEEDED {
        return Err(Error::InsufficientSamples { found: xs.len(), needed: NEEDED });
    }
    let (fit, ci) = loglog_fit(&xs, &ys).ok_or_else(|| Error::InsufficientSignal("degenerate ε grid".into()))?;
    Ok(SublevelReport {
        time,
        samples: n,
        seed,
        regime,
        points,
        delta_hat: fit.slope,
        delta_ci: ci,
        r2: fit.r2,
        fitted: xs.len(),
        error_budget,
    })
}

/// `k` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heis::Lattice;
    use crate::moduli::golden_frame;
    use crate::spectral::CharLabel;

    #[test]
    fn ecdf_basics() {
        let e = Ecdf::new((0..100).map(f64::from).collect(), 0).unwrap();
        assert_eq!(e.eval(-1.0), 0.0);
        assert_eq!(e.eval(49.0), 0.5);
        assert_eq!(e.eval(1e9), 1.0);
        assert!(matches!(Ecdf::new(vec![1.0; 10], 0), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn ks_extremes() {
        let a = Ecdf::new((0..200).map(f64::from).collect(), 0).unwrap();
        let b = Ecdf::new((0..200).map(|i| 1000.0 + i as f64).collect(), 0).unwrap();
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &b), 1.0);
        assert_eq!(ks_distance(&b, &a), 1.0);
    }

    #[test]
    fn zero_observable_is_point_mass() {
        let a = golden_frame(Lattice::UNIT);
        let d = empirical_distribution(&Observable::zero(Lattice::UNIT), &a, 100.0, 100, 3).unwrap();
        assert!(d.modulus.sorted().iter().all(|&v| v == 0.0));
        assert_eq!(d.second_moment, 0.0);
        let track =
            second_moment_track(&Observable::zero(Lattice::UNIT), &a, &[10.0, 20.0], 100, 3, Sampling::Volume).unwrap();
        assert!(track.iter().all(|p| p.second_moment == 0.0));
    }

    #[test]
    fn torus_second_moment_at_return_times() {
        let a = golden_frame(Lattice::UNIT);
        let f = Observable::single(Lattice::UNIT, CharLabel::new(0, 1).unwrap());
        let t_a = a.return_time().unwrap();
        let t = 200.0 * t_a;
        let track = second_moment_track(&f, &a, &[t], 4000, 11, Sampling::Torus).unwrap();
        let p = track[0];
        assert!((p.second_moment - 1.0 / t_a).abs() < 4.0 * p.stderr, "{p:?}");
    }

    #[test]
    fn sublevel_is_monotone_and_saturates() {
        let a = golden_frame(Lattice::UNIT);
        let f = Observable::single(Lattice::UNIT, CharLabel::new(0, 1).unwrap());
        let eps = log_grid(0.02, 0.9, 8);
        let r = sublevel_measure(&f, &a, 100.0, &eps, 2000, 5, Regime::Compact).unwrap();
        assert!(r.is_monotone());
        assert!(r.delta_hat > 0.0);
        let generic =
            sublevel_measure(&f, &a, 100.0, &eps, 2000, 5, Regime::Generic { zeta: 0.1, constant: 1.0 }).unwrap();
        for (p, q) in generic.points.iter().zip(&r.points) {
            assert!(p.measure <= q.measure);
        }
    }

    #[test]
    fn stratified_points_cover_centre() {
        let a = golden_frame(Lattice::UNIT);
        let zs: Vec<f64> = (0..10).map(|i| sample_point(Sampling::Stratified, 1, i, 10, &a).z).collect();
        for (i, z) in zs.iter().enumerate() {
            assert!((i as f64 / 10.0..(i + 1) as f64 / 10.0).contains(z));
        }
    }
}
