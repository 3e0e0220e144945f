//! Translation flow on the real line, the function `χ(û) = (e^{iû} − 1)/(iû)`
//! and the scaled theta function `T^{1/2}·χ(T·)` it generates.
//!
//! Fourier convention: `f̂(ω) = (2π)^{-1/2} ∫ f(u) e^{−iωu} du`, so that
//! `‖f‖₂ = ‖f̂‖₂`. On a grid of `N` points over `[−W, W)` the frequencies are
//! spaced by `π/W`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss10_composite;
use crate::sum::NeumaierSum;

/// Below this `|û|` the removable singularity is handled by a Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Magnitude treated as zero at grid edges.
pub const EDGE_DECAY: f64 = 1e-12;

pub fn chi(u: f64) -> Complex64 {
    let iu = Complex64::new(0.0, u);
    if u.abs() < SERIES_CUTOFF {
        // Σ_{k<6} (iu)^k/(k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for k in 1..6 {
            term = term * iu / (k + 1) as f64;
            acc += term;
        }
        acc
    } else {
        (iu.exp() - 1.0) / iu
    }
}

/// `∫_{-L}^{L} |χ|²` by Gauss–Legendre panels of one period each, plus the
/// `4/L` tail of `2/û²` outside.
pub fn c_constant_with_range(half_range: f64) -> f64 {
    let panels = (half_range / TAU).ceil().max(1.0) as usize;
    let integrand = |u: f64| {
        if u.abs() < SERIES_CUTOFF {
            chi(u).norm_sqr()
        } else {
            // 4 sin²(u/2)/u², free of the cancellation in 2 − 2cos u
            let s = (0.5 * u).sin();
            4.0 * s * s / (u * u)
        }
    };
    let half = gauss10_composite(integrand, 0.0, half_range, panels);
    (2.0 * half + 4.0 / half_range).sqrt()
}

/// `C = ‖χ‖_{L²(R)}`.
pub fn c_constant() -> f64 {
    c_constant_with_range(TAU * 1e4)
}

/// `T^{1/2}·χ(T·û)`.
pub fn theta_hat_scaled(t: f64, u: f64) -> Complex64 {
    t.sqrt() * chi(t * u)
}

/// Uniform grid of `n` points `u_k = −W + k·(2W/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    n: usize,
    half_width: f64,
}

impl LineGrid {
    pub const MIN_POINTS: usize = 1 << 8;

    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < Self::MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two ≥ {} (got {n})",
                Self::MIN_POINTS
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!("half-width must be positive (got {half_width})")));
        }
        Ok(LineGrid { n, half_width })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.point(k))
    }

    /// Frequency spacing `π/W`.
    pub fn frequency_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Frequency of DFT bin `k` (negative for the upper half).
    pub fn frequency(&self, k: usize) -> f64 {
        let k = k as i64;
        let n = self.n as i64;
        let signed = if k < n / 2 { k } else { k - n };
        signed as f64 * self.frequency_spacing()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFunction {
    pub grid: LineGrid,
    pub samples: Vec<Complex64>,
}

impl LineFunction {
    pub fn new(grid: LineGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("{} samples for a grid of {}", samples.len(), grid.len())));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(LineFunction { grid, samples })
    }

    pub fn from_fn(grid: LineGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = grid.points().map(f).collect();
        LineFunction { grid, samples }
    }

    /// `exp(−2u²)`.
    pub fn gaussian(grid: LineGrid) -> Self {
        Self::from_fn(grid, |u| Complex64::new((-2.0 * u * u).exp(), 0.0))
    }

    pub fn zero(grid: LineGrid) -> Self {
        LineFunction { grid, samples: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn l2_norm(&self) -> f64 {
        let s: NeumaierSum = self.samples.iter().map(|z| z.norm_sqr()).collect();
        (s.value() * self.grid.spacing()).sqrt()
    }

    /// `∫ f du`.
    pub fn leb(&self) -> Complex64 {
        let h = self.grid.spacing();
        let re: NeumaierSum = self.samples.iter().map(|z| z.re).collect();
        let im: NeumaierSum = self.samples.iter().map(|z| z.im).collect();
        Complex64::new(re.value(), im.value()) * h
    }

    /// Largest sample magnitude within `margin` of either edge.
    pub fn edge_magnitude(&self, margin: f64) -> f64 {
        let w = self.grid.half_width();
        self.grid
            .points()
            .zip(&self.samples)
            .filter(|(u, _)| u.abs() >= w - margin)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    /// `f̂` at the DFT frequencies (unitary convention).
    pub fn fourier(&self) -> Vec<Complex64> {
        let n = self.grid.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let h = self.grid.spacing();
        let w = self.grid.half_width();
        let scale = h / TAU.sqrt();
        buf.iter_mut().enumerate().for_each(|(k, v)| {
            // the grid starts at −W, not 0
            *v *= Complex64::from_polar(scale, self.grid.frequency(k) * w);
        });
        buf
    }

    /// Inverse of [`LineFunction::fourier`].
    pub fn from_fourier(grid: LineGrid, spectrum: &[Complex64]) -> Result<Self> {
        let n = grid.len();
        if spectrum.len() != n {
            return Err(Error::InvalidArgument(format!("{} bins for a grid of {n}", spectrum.len())));
        }
        let h = grid.spacing();
        let w = grid.half_width();
        let scale = TAU.sqrt() / (h * n as f64);
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(scale, -grid.frequency(k) * w))
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        Ok(LineFunction { grid, samples: buf })
    }

    /// Max sample error of a forward/inverse transform round trip.
    pub fn round_trip_error(&self) -> f64 {
        let back = Self::from_fourier(self.grid, &self.fourier()).expect("same grid");
        self.samples.iter().zip(&back.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Sample value at an arbitrary `u` by 8-point Lagrange interpolation;
    /// zero beyond the grid.
    pub fn interpolate(&self, u: f64) -> Complex64 {
        const STENCIL: usize = 8;
        let h = self.grid.spacing();
        let s = (u + self.grid.half_width()) / h;
        let n = self.grid.len();
        if s < 0.0 || s > (n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = s.floor() as i64;
        let start = (k - (STENCIL as i64 / 2 - 1)).clamp(0, (n - STENCIL) as i64) as usize;
        let frac = s - start as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..STENCIL {
            let mut w = 1.0;
            for j in 0..STENCIL {
                if j != i {
                    w *= (frac - j as f64) / (i as f64 - j as f64);
                }
            }
            acc += self.samples[start + i] * w;
        }
        acc
    }

    /// `U_t f(u) = e^{t/2} f(e^t u)`.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        let w = self.grid.half_width();
        let stretch = t.exp();
        if stretch < 1.0 {
            // samples of f beyond e^t·W would be needed but are not stored
            let lost = self.edge_magnitude(w - stretch * w);
            if lost > EDGE_DECAY {
                return Err(Error::GridOverflow(format!("dilation by e^{t} pushes |f| = {lost:e} off the grid")));
            }
        }
        let amp = (0.5 * t).exp();
        let samples = self.grid.points().map(|u| self.interpolate(stretch * u) * amp).collect();
        Ok(LineFunction { grid: self.grid, samples })
    }
}

/// `‖T^{1/2}χ(Tû)·(f̂(û) − f̂(0))‖_{L²(dû)}`: the distance between the normalized
/// translation average `T^{−1/2}∫₀^T f(·+t)dt` and its theta-function limit.
pub fn l2_convergence_residual(f: &LineFunction, t: f64) -> Result<f64> {
    let w = f.grid.half_width();
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("T must be positive (got {t})")));
    }
    if t > w / 4.0 {
        return Err(Error::GridOverflow(format!("translation by T = {t} exceeds W/4 = {}", w / 4.0)));
    }
    let edge = f.edge_magnitude(t);
    if edge > EDGE_DECAY {
        return Err(Error::GridOverflow(format!("|f| = {edge:e} within T of the grid edge")));
    }
    let spectrum = f.fourier();
    let at_zero = spectrum[0];
    let acc: NeumaierSum = spectrum
        .iter()
        .enumerate()
        .map(|(k, v)| (theta_hat_scaled(t, f.grid.frequency(k)) * (v - at_zero)).norm_sqr())
        .collect();
    Ok((acc.value() * f.grid.frequency_spacing()).sqrt())
}

/// Max of the unitarity residual `|‖U_t f‖ − ‖f‖|` and the scaling residual
/// `|Leb(U_t f) − e^{−t/2} Leb(f)|`.
pub fn intertwine_check(f: &LineFunction, t: f64) -> Result<f64> {
    let g = f.dilate(t)?;
    if t > 0.0 {
        // the dilated function must still decay inside the grid
        let edge = g.edge_magnitude(f.grid.spacing());
        if edge > EDGE_DECAY {
            return Err(Error::GridOverflow(format!("dilated |f| = {edge:e} at the grid edge")));
        }
    }
    let unitarity = (g.l2_norm() - f.l2_norm()).abs();
    let scaling = (g.leb() - f.leb() * (-0.5 * t).exp()).norm();
    Ok(unitarity.max(scaling))
}

/// `‖T^{1/2}χ(T·)‖_{L²}` by direct quadrature over `|û| ≤ L` (panels of one
/// oscillation period `2π/T`) plus the `4/(T·L)` tail.
pub fn theta_norm(t: f64, half_range: f64) -> f64 {
    let panels = (half_range * t / TAU).ceil().max(1.0) as usize;
    let half = gauss10_composite(|u| theta_hat_scaled(t, u).norm_sqr(), 0.0, half_range, panels);
    (2.0 * half + 4.0 / (t * half_range)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_special_values() {
        assert_eq!(chi(0.0), Complex64::new(1.0, 0.0));
        assert!(chi(TAU).norm() < 1e-15);
        for &u in &[1e-6, 5e-5, 0.3, 2.0, 17.0] {
            let lhs = chi(u).norm_sqr();
            let rhs = 4.0 * (0.5 * u).sin().powi(2) / (u * u);
            assert!((lhs - rhs).abs() < 1e-14, "{u}");
        }
        // series and closed form agree at the cutoff
        let a = chi(SERIES_CUTOFF * 0.999_999);
        let b = chi(SERIES_CUTOFF * 1.000_001);
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn c_constant_is_sqrt_two_pi() {
        let c = c_constant();
        assert!((c - TAU.sqrt()).abs() < 1e-6);
        assert!((c_constant_with_range(2.0 * TAU * 1e4) - c).abs() < 1e-8);
    }

    #[test]
    fn theta_norm_is_constant() {
        for t in [1.0, 4.0, 16.0] {
            assert!((theta_norm(t, 2e4) - TAU.sqrt()).abs() < 1e-6, "{t}");
        }
    }

    #[test]
    fn theta_hat_trivial_cases() {
        assert_eq!(theta_hat_scaled(1.0, 0.7), chi(0.7));
        assert!((theta_hat_scaled(9.0, 0.0) - 3.0).norm() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(LineGrid::new(100, 1.0).is_err());
        assert!(LineGrid::new(128, 1.0).is_err());
        assert!(LineGrid::new(256, -1.0).is_err());
        let g = LineGrid::new(256, 8.0).unwrap();
        assert_eq!(g.point(0), -8.0);
        assert_eq!(g.frequency(255), -g.frequency_spacing());
    }

    #[test]
    fn plancherel_and_round_trip() {
        let g = LineGrid::new(1 << 12, 16.0).unwrap();
        let f = LineFunction::from_fn(g, |u| Complex64::new((-u * u).exp() * (1.0 + u), 0.3 * u * (-u * u).exp()));
        let spec = f.fourier();
        let norm_hat = (spec.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.frequency_spacing()).sqrt();
        assert!((norm_hat - f.l2_norm()).abs() < 1e-10);
        assert!(f.round_trip_error() < 1e-10);
    }

    #[test]
    fn gaussian_transform_is_analytic() {
        let g = LineGrid::new(1 << 12, 16.0).unwrap();
        let spec = LineFunction::gaussian(g).fourier();
        for k in [0usize, 3, 40, 4000] {
            let w = g.frequency(k);
            let exact = 0.5 * (-w * w / 8.0).exp();
            assert!((spec[k] - exact).norm() < 1e-12, "{k}");
        }
    }

    #[test]
    fn residual_of_zero_and_guards() {
        let g = LineGrid::new(1 << 12, 16.0).unwrap();
        assert_eq!(l2_convergence_residual(&LineFunction::zero(g), 2.0).unwrap(), 0.0);
        assert!(matches!(l2_convergence_residual(&LineFunction::gaussian(g), 5.0), Err(Error::GridOverflow(_))));
    }

    #[test]
    fn intertwining_at_zero_and_log_two() {
        let g = LineGrid::new(1 << 14, 32.0).unwrap();
        let f = LineFunction::gaussian(g);
        assert!(intertwine_check(&f, 0.0).unwrap() < 1e-14);
        assert!(intertwine_check(&f, 2f64.ln()).unwrap() < 1e-8);
        assert!(intertwine_check(&f, -2f64.ln()).unwrap() < 1e-8);
    }

    #[test]
    fn dilation_overflow() {
        let g = LineGrid::new(1 << 10, 4.0).unwrap();
        let wide = LineFunction::from_fn(g, |u| Complex64::new((-0.1 * u * u).exp(), 0.0));
        assert!(matches!(wide.dilate(-1.0), Err(Error::GridOverflow(_))));
    }
}
