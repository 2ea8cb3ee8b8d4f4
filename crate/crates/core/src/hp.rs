//! High-precision re-decision of floating-point comparisons.
//!
//! Comparisons that land within the guard band of their boundary are
//! recomputed here with a 192-bit mantissa, treating every `f64` input as
//! the exact dyadic rational it represents.

use astro_float::{BigFloat, Consts, RoundingMode};

pub(crate) const PRECISION: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

/// Relative width of the band around a boundary inside which a float
/// comparison is not trusted.
pub const GUARD_BAND: f64 = 1e-9;

pub(crate) struct Hp {
    cc: Consts,
}

impl Hp {
    pub fn new() -> Self {
        Hp {
            cc: Consts::new().expect("allocate constants cache"),
        }
    }

    pub fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PRECISION)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, PRECISION, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, PRECISION, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, PRECISION, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, PRECISION, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(PRECISION, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(PRECISION, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(PRECISION, RM, &mut self.cc)
    }

    /// `a^e` for `a > 0`.
    pub fn powf(&mut self, a: &BigFloat, e: f64) -> BigFloat {
        if e == 0.0 {
            return self.f(1.0);
        }
        let l = self.ln(a);
        let scaled = self.mul(&l, &self.f(e));
        self.exp(&scaled)
    }

    pub fn sum_sq(&self, xs: &[BigFloat]) -> BigFloat {
        xs.iter()
            .fold(self.f(0.0), |acc, x| self.add(&acc, &self.mul(x, x)))
    }

    pub fn lt(&self, a: &BigFloat, b: &BigFloat) -> bool {
        matches!(a.cmp(b), Some(c) if c < 0)
    }

    pub fn le(&self, a: &BigFloat, b: &BigFloat) -> bool {
        matches!(a.cmp(b), Some(c) if c <= 0)
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        // formatting through decimal keeps this independent of the crate's
        // internal word layout
        let s = format!("{a}");
        s.parse().unwrap_or(f64::NAN)
    }
}

/// True if `a` and `b` are too close for an `f64` verdict on `a < b`.
pub(crate) fn in_guard_band(a: f64, b: f64) -> bool {
    (a - b).abs() <= GUARD_BAND * a.abs().max(b.abs())
}
