//! Directions on the sphere and cusp membership.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::approx::psi::PsiSpec;
use crate::error::{Error, Result};
use crate::forms::{HyperbolicBasis, QuadraticForm};
use crate::hp::{in_guard_band, Hp};

pub const UNIT_TOL: f64 = 1e-12;
pub const BOUNDARY_TOL: f64 = 1e-10;

/// A unit vector; `on_boundary` marks membership in `∂X = {Q = 0} ∩ S^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    v: Vec<f64>,
    #[serde(default)]
    on_boundary: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl Direction {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !((n - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::InvalidArgument(format!("direction has norm {n}, not 1")));
        }
        Ok(Direction { v, on_boundary: false })
    }

    /// A unit vector checked to satisfy `|Q(v)| ≤ 1e-10`.
    pub fn boundary(v: Vec<f64>, form: &QuadraticForm) -> Result<Self> {
        if v.len() != form.dim() {
            return Err(Error::DimensionMismatch { expected: form.dim(), found: v.len() });
        }
        let mut d = Self::new(v)?;
        let q = form.evaluate_f64(&d.v);
        if q.abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary { q_value: q.abs() });
        }
        d.on_boundary = true;
        Ok(d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn on_boundary(&self) -> bool {
        self.on_boundary
    }
}

/// `π(x) = x/‖x‖`.
pub fn radial_project(x: &[f64]) -> Result<Direction> {
    let n = norm(x);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidArgument("cannot project the zero vector".into()));
    }
    Direction::new(x.iter().map(|a| a / n).collect())
}

/// Outcome of a cone test `‖x/ρ − v‖ (<|≤) ψ(ρ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeTest {
    pub error: f64,
    pub psi: f64,
    pub member: bool,
    /// Whether the verdict came from the high-precision path.
    pub refined: bool,
}

/// Tests `‖x/ρ − v‖ < ψ(ρ)` (or `≤` when `strict` is false), with `ρ`
/// chosen by `rho`. Within the guard band the comparison is redone at 192
/// bits.
pub(crate) fn cone_test(
    x: &[f64],
    v: &[f64],
    psi: &PsiSpec,
    rho: Rho<'_>,
    strict: bool,
) -> ConeTest {
    let r = rho.value(x);
    let error = x.iter().zip(v).map(|(a, b)| (a / r - b).powi(2)).sum::<f64>().sqrt();
    let bound = psi.value(r);
    let mut member = if strict { error < bound } else { error <= bound };
    let mut refined = false;
    if in_guard_band(error, bound) {
        refined = true;
        let mut hp = Hp::new();
        let rh = rho.value_hp(&hp, x);
        let diffs: Vec<_> = x
            .iter()
            .zip(v)
            .map(|(a, b)| hp.sub(&hp.div(&hp.f(*a), &rh), &hp.f(*b)))
            .collect();
        let e2 = hp.sum_sq(&diffs);
        let p = psi.value_hp(&mut hp, &rh);
        let p2 = hp.mul(&p, &p);
        member = if strict { hp.lt(&e2, &p2) } else { hp.le(&e2, &p2) };
    }
    ConeTest { error, psi: bound, member, refined }
}

/// The radius used to normalize `x`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Rho<'a> {
    /// `‖x‖`
    Euclid,
    /// `|⟨row, x⟩| · scale`: the norm of the `f₁`-component of `x`, given
    /// the first row of `F⁻¹` and `‖f₁‖`.
    Component { row: &'a [f64], scale: f64 },
}

impl Rho<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Rho::Euclid => norm(x),
            Rho::Component { row, scale } => {
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs() * scale
            }
        }
    }

    fn value_hp(&self, hp: &Hp, x: &[f64]) -> astro_float::BigFloat {
        match self {
            Rho::Euclid => {
                let xs: Vec<_> = x.iter().map(|a| hp.f(*a)).collect();
                hp.sqrt(&hp.sum_sq(&xs))
            }
            Rho::Component { row, scale } => {
                let dot = row
                    .iter()
                    .zip(x)
                    .fold(hp.f(0.0), |acc, (a, b)| hp.add(&acc, &hp.mul(&hp.f(*a), &hp.f(*b))));
                hp.mul(&dot.abs(), &hp.f(*scale))
            }
        }
    }
}

/// The three cusp shapes: `C(v,ψ)` (strict), `C_T(v,ψ)` and `D_T(f̄₁,ψ)`
/// (both non-strict, with a lower cut at `T`).
#[derive(Clone, Debug, PartialEq)]
pub enum CuspVariant {
    Open,
    Truncated { t: f64 },
    FlowWindow { t: f64, f_inv_row: Vec<f64>, f1_norm: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CuspSpec {
    pub v: Direction,
    pub psi: PsiSpec,
    pub variant: CuspVariant,
}

impl CuspSpec {
    pub fn open(v: Direction, psi: PsiSpec) -> Self {
        CuspSpec { v, psi, variant: CuspVariant::Open }
    }

    pub fn truncated(v: Direction, psi: PsiSpec, t: f64) -> Self {
        CuspSpec { v, psi, variant: CuspVariant::Truncated { t } }
    }

    /// `D_T(f̄₁, ψ)` for the given basis; `v` is set to `f̄₁ = π(f₁)`.
    pub fn flow_window(basis: &HyperbolicBasis, psi: PsiSpec, t: f64) -> Result<Self> {
        let f = basis.matrix_f64();
        let f_inv = f
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("basis matrix is singular".into()))?;
        let f1: Vec<f64> = f.column(0).iter().copied().collect();
        let v = radial_project(&f1)?;
        Ok(CuspSpec {
            v,
            psi,
            variant: CuspVariant::FlowWindow {
                t,
                f_inv_row: f_inv.row(0).iter().copied().collect(),
                f1_norm: norm(&f1),
            },
        })
    }

    /// `p(x)`: norm of the `f₁`-component (flow-window cusps only).
    pub fn p_of(&self, x: &[f64]) -> Option<f64> {
        match &self.variant {
            CuspVariant::FlowWindow { f_inv_row, f1_norm, .. } => {
                Some(Rho::Component { row: f_inv_row, scale: *f1_norm }.value(x))
            }
            _ => None,
        }
    }
}

/// Membership of `x` (standard coordinates) in the cusp.
pub fn cusp_member(spec: &CuspSpec, x: &[f64]) -> Result<bool> {
    Ok(cusp_test(spec, x)?.member)
}

pub fn cusp_test(spec: &CuspSpec, x: &[f64]) -> Result<ConeTest> {
    if x.len() != spec.v.dim() {
        return Err(Error::DimensionMismatch { expected: spec.v.dim(), found: x.len() });
    }
    if x.iter().all(|a| *a == 0.0) {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    let v = spec.v.as_slice();
    match &spec.variant {
        CuspVariant::Open => Ok(cone_test(x, v, &spec.psi, Rho::Euclid, true)),
        CuspVariant::Truncated { t } => {
            let mut c = cone_test(x, v, &spec.psi, Rho::Euclid, false);
            c.member &= norm(x) >= *t;
            Ok(c)
        }
        CuspVariant::FlowWindow { t, f_inv_row, f1_norm } => {
            let rho = Rho::Component { row: f_inv_row, scale: *f1_norm };
            let p = rho.value(x);
            if p == 0.0 {
                return Err(Error::InvalidArgument("p(x) = 0: x has no f₁-component".into()));
            }
            if p < *t {
                let error = f64::NAN;
                return Ok(ConeTest { error, psi: spec.psi.value(p), member: false, refined: false });
            }
            Ok(cone_test(x, v, &spec.psi, rho, false))
        }
    }
}

/// Operator 2-norm of a square matrix.
pub(crate) fn op_norm(g: &DMatrix<f64>) -> f64 {
    g.clone().svd(false, false).singular_values.max()
}

/// `‖w₁/‖w₁‖ − w₂/‖w₂‖‖ ≤ (2/‖w₂‖)‖w₁ − w₂‖`, the step behind the
/// change-of-base-point bound for cusps: returns `(lhs, rhs)` for
/// `w₁ = gπ(x)`, `w₂ = gv`.
pub fn translated_cone_bound(g: &DMatrix<f64>, x: &[f64], v: &[f64]) -> (f64, f64) {
    let px = DVector::from_iterator(x.len(), radial_project(x).unwrap().v);
    let vv = DVector::from_column_slice(v);
    let w1 = g * &px;
    let w2 = g * &vv;
    let lhs = (&w1 / w1.norm() - &w2 / w2.norm()).norm();
    let rhs = 2.0 * op_norm(g) / w2.norm() * (px - vv).norm();
    (lhs, rhs)
}
