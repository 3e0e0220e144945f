//! The bump `χ(u) ∝ exp(−1/(u(1−u)))` on (0,1) and its cumulative integral.

use std::sync::{Arc, OnceLock};

use crate::quad::gauss5;
use crate::sum::NeumaierSum;

pub const DEFAULT_CELLS: usize = 1 << 14;

/// Highest derivative order with a tabulated sup bound.
pub const MAX_DERIVATIVE: usize = 12;

#[inline]
fn raw(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

#[derive(Debug, Clone)]
pub struct BumpProfile {
    cells: usize,
    inv_norm: f64,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    derivative_sup: Vec<f64>,
}

impl BumpProfile {
    pub fn new(cells: usize) -> Self {
        let cells = cells.max(16);
        let h = 1.0 / cells as f64;
        let cell_mass: Vec<f64> = (0..cells).map(|k| gauss5(raw, k as f64 * h, (k + 1) as f64 * h)).collect();
        let total = cell_mass.iter().copied().collect::<NeumaierSum>().value();
        let inv_norm = 1.0 / total;

        let mut cdf = Vec::with_capacity(cells + 1);
        let mut acc = NeumaierSum::new();
        cdf.push(0.0);
        for m in &cell_mass {
            acc.add(*m);
            cdf.push(acc.value() * inv_norm);
        }
        cdf[cells] = 1.0;

        let mut slopes: Vec<f64> = (0..=cells).map(|k| raw(k as f64 * h) * inv_norm).collect();
        // Fritsch–Carlson: keep every cell's cubic monotone.
        for k in 0..cells {
            let secant = (cdf[k + 1] - cdf[k]) / h;
            if secant <= 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let (al, be) = (slopes[k] / secant, slopes[k + 1] / secant);
            let r2 = al * al + be * be;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                slopes[k] = tau * al * secant;
                slopes[k + 1] = tau * be * secant;
            }
        }

        let derivative_sup = derivative_bounds(inv_norm);
        BumpProfile { cells, inv_norm, cdf, slopes, derivative_sup }
    }

    /// Process-wide profile at the default resolution.
    pub fn standard() -> Arc<BumpProfile> {
        static CELL: OnceLock<Arc<BumpProfile>> = OnceLock::new();
        CELL.get_or_init(|| Arc::new(BumpProfile::new(DEFAULT_CELLS))).clone()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// `χ(u)`, zero outside (0,1).
    #[inline]
    pub fn pdf(&self, u: f64) -> f64 {
        raw(u) * self.inv_norm
    }

    /// `∫₀ᵘ χ`, clamped to [0, 1].
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let s = u * self.cells as f64;
        let k = (s as usize).min(self.cells - 1);
        let t = s - k as f64;
        let h = 1.0 / self.cells as f64;
        let (y0, y1) = (self.cdf[k], self.cdf[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1).clamp(0.0, 1.0)
    }

    /// `∫_{u0}^{u1} χ` for `u0 ≤ u1`.
    pub fn mass(&self, u0: f64, u1: f64) -> f64 {
        self.cdf(u1) - self.cdf(u0)
    }

    /// `sup |χ^{(k)}|` (k = 0 is the sup of χ itself).
    pub fn derivative_sup(&self, k: usize) -> f64 {
        self.derivative_sup[k.min(MAX_DERIVATIVE)]
    }

    pub fn sup(&self) -> f64 {
        self.derivative_sup[0]
    }
}

/// Sup of the first derivatives of `exp(g)/Z`, `g(u) = −1/u − 1/(1−u)`, via
/// Taylor coefficients of `exp(g)` on a dense grid, padded by 10%.
fn derivative_bounds(inv_norm: f64) -> Vec<f64> {
    let n = MAX_DERIVATIVE + 1;
    let mut sup = vec![0.0f64; n];
    let samples = 8192;
    let mut g = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in 1..samples {
        let u = i as f64 / samples as f64;
        // Taylor coefficients of g at u.
        for (k, gk) in g.iter_mut().enumerate() {
            let left = (-1.0f64).powi(k as i32) / u.powi(k as i32 + 1);
            let right = 1.0 / (1.0 - u).powi(k as i32 + 1);
            *gk = -(left + right);
        }
        e[0] = g[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * g[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        let mut fact = 1.0;
        for k in 0..n {
            if k > 0 {
                fact *= k as f64;
            }
            sup[k] = sup[k].max((e[k] * fact).abs() * inv_norm);
        }
    }
    sup.iter().map(|s| 1.1 * s).collect()
}
