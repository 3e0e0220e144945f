//! The Heisenberg group in matrix coordinates, the lattice Γ_K, the nilflow,
//! and the linear skew-shift obtained as the first-return map to the
//! transverse torus {x = 0}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from an integer below which a coordinate is snapped onto it.
const SNAP: f64 = 1e-14;

/// Point `(x, y, z)` of Heis, the upper-triangular matrix
/// `[[1, x, z], [0, 1, y], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn inverse(self) -> GroupElement {
        GroupElement::new(-self.x, -self.y, self.x * self.y - self.z)
    }

    pub fn max_abs_diff(self, o: GroupElement) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs()).max((self.z - o.z).abs())
    }
}

impl std::ops::Mul for GroupElement {
    type Output = GroupElement;
    #[inline]
    fn mul(self, o: GroupElement) -> GroupElement {
        GroupElement::new(self.x + o.x, self.y + o.y, self.z + o.z + self.x * o.y)
    }
}

/// `exp(t(p·X₀ + q·Y₀ + r·Z₀))`.
#[inline]
pub fn exp_lie(p: f64, q: f64, r: f64, t: f64) -> GroupElement {
    GroupElement::new(t * p, t * q, t * r + 0.5 * t * t * p * q)
}

/// The lattice Γ_K = {(m, n, p/K)}; `K ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Lattice(u32);

impl Lattice {
    pub const UNIT: Lattice = Lattice(1);

    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("lattice refinement K must be ≥ 1".into()));
        }
        Ok(Lattice(k))
    }

    pub fn k(self) -> u32 {
        self.0
    }

    /// Period of the central coordinate, `1/K`.
    pub fn center_period(self) -> f64 {
        1.0 / self.0 as f64
    }
}

impl TryFrom<u32> for Lattice {
    type Error = Error;
    fn try_from(k: u32) -> Result<Self> {
        Lattice::new(k)
    }
}

impl From<Lattice> for u32 {
    fn from(l: Lattice) -> u32 {
        l.0
    }
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice::UNIT
    }
}

/// Splits `x` into an integer and a fractional part in `{0} ∪ [SNAP, 1 − SNAP]`.
#[inline]
fn split_unit(x: f64) -> (f64, f64) {
    let m = x.floor();
    let f = x - m;
    if f >= 1.0 - SNAP {
        (m + 1.0, 0.0)
    } else if f < SNAP {
        (m, 0.0)
    } else {
        (m, f)
    }
}

/// `x` mod 1 with the boundary snap.
#[inline]
pub fn frac(x: f64) -> f64 {
    split_unit(x).1
}

/// `z` mod 1/K with the boundary snap.
#[inline]
pub fn frac_center(z: f64, lattice: Lattice) -> f64 {
    let k = lattice.k() as f64;
    let q = (z * k).floor();
    let mut r = if q == 0.0 { z } else { z - q / k };
    let period = 1.0 / k;
    if r < 0.0 {
        r += period;
    }
    if r >= period - SNAP * period || r < SNAP * period {
        0.0
    } else {
        r
    }
}

/// Canonical representative of `Γ_K · g` in [0,1)×[0,1)×[0,1/K).
pub fn reduce(g: GroupElement, lattice: Lattice) -> GroupElement {
    let (m, x) = split_unit(g.x);
    let z = g.z - m * g.y;
    let (_, y) = split_unit(g.y);
    GroupElement::new(x, y, frac_center(z, lattice))
}

/// A Heisenberg frame `X = a·X₀ + b·Y₀ + v·Z₀`, `Y = c·X₀ + d·Y₀ + w·Z₀`,
/// `Z = Z₀`, on the nilmanifold Γ_K \ Heis.
///
/// `period` tags frames known to lie on a closed orbit of the renormalization
/// flow (the projection of `renorm(frame, period)` equals that of `frame`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub v: f64,
    pub w: f64,
    pub lattice: Lattice,
    pub period: Option<f64>,
}

impl Frame {
    pub fn new(a: f64, b: f64, c: f64, d: f64, v: f64, w: f64, lattice: Lattice) -> Result<Self> {
        let det = a * d - b * c;
        let scale = 1.0f64.max((a * d).abs() + (b * c).abs());
        if !det.is_finite() || (det - 1.0).abs() > 1e-12 * scale {
            return Err(Error::NotUnimodular(det));
        }
        Ok(Frame { a, b, c, d, v, w, lattice, period: None })
    }

    pub fn identity(lattice: Lattice) -> Self {
        Frame { a: 1.0, b: 0.0, c: 0.0, d: 1.0, v: 0.0, w: 0.0, lattice, period: None }
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Flow direction sign `s = sign(⟨X, X₀⟩)`.
    fn orientation(&self) -> Result<f64> {
        if self.a == 0.0 || !self.a.is_finite() {
            Err(Error::NonTransversal)
        } else {
            Ok(self.a.signum())
        }
    }

    /// Return time to the transverse torus, `1/|a|`.
    pub fn return_time(&self) -> Result<f64> {
        self.orientation().map(|_| 1.0 / self.a.abs())
    }

    pub fn return_params(&self) -> Result<SkewShiftParams> {
        let s = self.orientation()?;
        let abs_a = self.a.abs();
        let rho = frac(self.b / abs_a);
        let sigma = frac_center((self.v - 0.5 * s * self.b) / abs_a, self.lattice);
        Ok(SkewShiftParams {
            rho,
            sigma,
            return_time: 1.0 / abs_a,
            y_sign: if s > 0.0 { -1 } else { 1 },
            lattice: self.lattice,
        })
    }

    /// `g · exp(tX)` in the group, without reduction.
    #[inline]
    pub fn flow_raw(&self, g: GroupElement, t: f64) -> GroupElement {
        g * exp_lie(self.a, self.b, self.v, t)
    }

    /// Nilflow `φ^X_t` on M. Exact for moderate `t`; long times should go
    /// through [`Frame::decompose`] and the return map.
    pub fn nilflow(&self, g: GroupElement, t: f64) -> GroupElement {
        reduce(self.flow_raw(g, t), self.lattice)
    }

    /// Writes a point `p ∈ M` as `φ^X_τ(ξ)` with `ξ` on the transverse torus and
    /// `τ ∈ [0, t_a)`. Returns `(τ, y, z)` of `ξ = (0, y, z)`.
    pub fn decompose(&self, p: GroupElement) -> Result<(f64, f64, f64)> {
        let s = self.orientation()?;
        let t_a = 1.0 / self.a.abs();
        let p = reduce(p, self.lattice);
        let u = if s > 0.0 { p.x } else { frac(1.0 - p.x) };
        let tau = u * t_a;
        let xi = self.flow_raw(p, -tau);
        let k = xi.x.round();
        let z = xi.z - k * xi.y;
        Ok((tau, frac(xi.y), frac_center(z, self.lattice)))
    }

    /// The point `φ^X_τ(0, y, z)` for `0 ≤ τ < t_a`.
    pub fn from_torus(&self, tau: f64, y: f64, z: f64) -> GroupElement {
        self.nilflow(GroupElement::new(0.0, y, z), tau)
    }
}

/// Orientation of the `y`-term in the skew-shift.
pub type YSign = i8;

/// The return map `T(y, z) = (y + ρ, z + y_sign·y + σ)` on R/Z × R/(K⁻¹Z),
/// with return time `t_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewShiftParams {
    pub rho: f64,
    pub sigma: f64,
    pub return_time: f64,
    pub y_sign: YSign,
    pub lattice: Lattice,
}

impl SkewShiftParams {
    pub fn apply(&self, y: f64, z: f64) -> (f64, f64) {
        (frac(y + self.rho), frac_center(z + self.y_sign as f64 * y + self.sigma, self.lattice))
    }

    pub fn iterate(&self, mut y: f64, mut z: f64, j: u64) -> (f64, f64) {
        for _ in 0..j {
            (y, z) = self.apply(y, z);
        }
        (y, z)
    }

    /// `T^j(y, z)` from the closed form, without stepping.
    pub fn iterate_closed(&self, y: f64, z: f64, j: u64) -> (f64, f64) {
        let jf = j as f64;
        let tri = crate::phase::triangular(j) as f64;
        let s = self.y_sign as f64;
        (
            frac(y + frac(jf * self.rho)),
            frac_center(z + jf * self.sigma + s * (jf * y + frac(self.rho * tri)), self.lattice),
        )
    }
}
