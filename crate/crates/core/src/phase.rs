//! Fixed-point phases measured in cycles.
//!
//! A [`Phase`] stores an element of R/Z as a `u128` where 2^128 is one full
//! turn. Addition and multiplication by integers wrap, which is exactly
//! reduction mod 1, so quadratic phases `φ0 + jψ + δ·j(j−1)/2` stay exact for
//! any index that fits in 64 bits.

use std::ops::{Add, Mul, Neg, Sub};

const TWO64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(pub u128);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    /// Reduces a real number of cycles mod 1. The integer part is discarded
    /// exactly; the first 128 fractional bits are kept.
    pub fn from_cycles(x: f64) -> Phase {
        if !x.is_finite() {
            return Phase::ZERO;
        }
        let a = x.abs();
        let f = a - a.floor();
        let hi_f = (f * TWO64).floor();
        let lo_f = (f * TWO64 - hi_f) * TWO64;
        let p = ((hi_f as u64 as u128) << 64) | (lo_f as u64 as u128);
        if x < 0.0 {
            Phase(p.wrapping_neg())
        } else {
            Phase(p)
        }
    }

    /// Representative in [0, 1).
    pub fn cycles(self) -> f64 {
        (self.0 >> 75) as f64 / (1u64 << 53) as f64
    }

    /// Representative in [−1/2, 1/2).
    pub fn signed_cycles(self) -> f64 {
        (self.0 as i128) as f64 * 2f64.powi(-128)
    }

    /// Angle in radians in [−π, π).
    pub fn radians(self) -> f64 {
        std::f64::consts::TAU * self.signed_cycles()
    }

    /// `self · k` mod 1 for a signed integer `k`.
    #[inline]
    pub fn times(self, k: i128) -> Phase {
        Phase(self.0.wrapping_mul(k as u128))
    }
}

impl Add for Phase {
    type Output = Phase;
    #[inline]
    fn add(self, o: Phase) -> Phase {
        Phase(self.0.wrapping_add(o.0))
    }
}

impl Sub for Phase {
    type Output = Phase;
    #[inline]
    fn sub(self, o: Phase) -> Phase {
        Phase(self.0.wrapping_sub(o.0))
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase(self.0.wrapping_neg())
    }
}

impl Mul<u128> for Phase {
    type Output = Phase;
    #[inline]
    fn mul(self, k: u128) -> Phase {
        Phase(self.0.wrapping_mul(k))
    }
}

/// `j(j−1)/2` as a wrapping integer, valid for every `j < 2^64`.
#[inline]
pub fn triangular(j: u64) -> u128 {
    let j = j as u128;
    if j == 0 {
        0
    } else {
        j * (j - 1) / 2
    }
}
