//! The chart `x = a_t u(s) w₀` with `w₀ = f₁ + (m/2) f_{d+1}`.

use nalgebra::{DMatrix, DVector};
use num_traits::One;

use crate::error::{Error, Result};
use crate::forms::{HyperbolicBasis, QuadraticForm, Rational};

/// `e^t` is never formed beyond this bound.
pub const MAX_ABS_T: f64 = 500.0;

/// Coordinates `(t, s)` of a point of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct TsCoordinates {
    pub t: f64,
    pub s: Vec<f64>,
}

/// A form with its hyperbolic basis, in floating point.
#[derive(Clone, Debug)]
pub struct Chart {
    f: DMatrix<f64>,
    f_inv: DMatrix<f64>,
    gram: DMatrix<f64>,
    basis: HyperbolicBasis,
    m: Rational,
    m_f64: f64,
    p: usize,
}

impl Chart {
    pub fn new(form: &QuadraticForm, basis: &HyperbolicBasis) -> Result<Self> {
        basis.verify(form)?;
        let f = basis.matrix_f64();
        let f_inv = f
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("basis matrix is singular".into()))?;
        Ok(Chart {
            f,
            f_inv,
            gram: form.gram_f64(),
            basis: basis.clone(),
            m: form.m().clone(),
            m_f64: form.m_f64(),
            p: basis.p(),
        })
    }

    /// `d + 1`.
    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn d(&self) -> usize {
        self.dim() - 1
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> f64 {
        self.m_f64
    }

    pub fn m_exact(&self) -> &Rational {
        &self.m
    }

    /// Columns are `f₁, …, f_{d+1}`.
    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn f_inv(&self) -> &DMatrix<f64> {
        &self.f_inv
    }

    pub fn basis(&self) -> &HyperbolicBasis {
        &self.basis
    }

    pub fn f1_norm(&self) -> f64 {
        self.f.column(0).norm()
    }

    /// `w₀` in f-coordinates: `(1, 0, …, 0, m/2)`.
    pub fn w0_f(&self) -> DVector<f64> {
        let n = self.dim();
        let mut w = DVector::zeros(n);
        w[0] = 1.0;
        w[n - 1] = self.m_f64 / 2.0;
        w
    }

    /// `w₀` in standard coordinates, exactly.
    pub fn w0_exact(&self) -> Vec<Rational> {
        let n = self.dim();
        let mut c = vec![Rational::from_integer(0.into()); n];
        c[0] = Rational::one();
        c[n - 1] = &self.m / Rational::from_integer(2.into());
        self.basis.combine(&c)
    }

    fn check(&self, c: &TsCoordinates) -> Result<()> {
        if c.s.len() != self.d() - 1 {
            return Err(Error::DimensionMismatch { expected: self.d() - 1, found: c.s.len() });
        }
        if !(c.t.abs() <= MAX_ABS_T) {
            return Err(Error::OutsideDomain(format!("|t| = {} exceeds {MAX_ABS_T}", c.t.abs())));
        }
        Ok(())
    }

    /// f-coordinates of `a_t u(s) w₀`:
    /// `(e^t, s, e^{−t}(m − ‖s₁‖² + ‖s₂‖²)/2)`.
    pub fn f_coords(&self, c: &TsCoordinates) -> Result<DVector<f64>> {
        self.check(c)?;
        let n = self.dim();
        let k1 = self.p - 1;
        let a: f64 = c.s[..k1].iter().map(|x| x * x).sum();
        let b: f64 = c.s[k1..].iter().map(|x| x * x).sum();
        let mut y = DVector::zeros(n);
        y[0] = c.t.exp();
        for (i, &si) in c.s.iter().enumerate() {
            y[i + 1] = si;
        }
        y[n - 1] = (-c.t).exp() * (self.m_f64 - a + b) / 2.0;
        Ok(y)
    }

    /// Standard coordinates of `a_t u(s) w₀`.
    pub fn parametrize(&self, c: &TsCoordinates) -> Result<Vec<f64>> {
        Ok((&self.f * self.f_coords(c)?).iter().copied().collect())
    }

    /// Exact chart with `e^t` replaced by a positive rational `e`.
    pub fn parametrize_exact(&self, e: &Rational, s: &[Rational]) -> Result<Vec<Rational>> {
        if s.len() != self.d() - 1 {
            return Err(Error::DimensionMismatch { expected: self.d() - 1, found: s.len() });
        }
        let n = self.dim();
        let k1 = self.p - 1;
        let mut q = self.m.clone();
        for (i, si) in s.iter().enumerate() {
            if i < k1 {
                q -= si * si;
            } else {
                q += si * si;
            }
        }
        let mut c = Vec::with_capacity(n);
        c.push(e.clone());
        c.extend(s.iter().cloned());
        c.push(q / (e * Rational::from_integer(2.into())));
        Ok(self.basis.combine(&c))
    }

    /// f-coordinates `F⁻¹x`.
    pub fn to_f(&self, x: &[f64]) -> DVector<f64> {
        &self.f_inv * DVector::from_column_slice(x)
    }

    /// `(t, s)` with `a_t u(s) w₀ = x`, for `x ∈ X` with positive
    /// `f₁`-coefficient.
    pub fn invert(&self, x: &[f64]) -> Result<TsCoordinates> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        let xv = DVector::from_column_slice(x);
        let q = (xv.transpose() * &self.gram * &xv)[(0, 0)];
        let scale = xv.norm_squared() + self.m_f64.abs();
        if (q - self.m_f64).abs() > 1e-9 * scale {
            return Err(Error::InvalidArgument(format!("Q(x) = {q}, expected {}", self.m_f64)));
        }
        let c = &self.f_inv * xv;
        if !(c[0] > 0.0) {
            return Err(Error::OutsideDomain(format!("f₁-coefficient {} is not positive", c[0])));
        }
        Ok(TsCoordinates { t: c[0].ln(), s: (1..n - 1).map(|i| c[i]).collect() })
    }

    /// The first row of `F⁻¹` (f₁-coefficient functional).
    pub fn f1_row(&self) -> Vec<f64> {
        self.f_inv.row(0).iter().copied().collect()
    }
}
