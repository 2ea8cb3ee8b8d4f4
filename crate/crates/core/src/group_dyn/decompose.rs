//! The factorizations `g = u⁻ z u⁺` and `g = v b h`.

use nalgebra::{DMatrix, DVector};

use super::{expm, GroupElement, OrthogonalGroup};
use crate::error::{Error, Result};
use crate::geometry::{FlowElement, HorosphericalElement};

/// Round-trip tolerance of `u⁻zu⁺`, relative to `max(1, ‖g‖_F)`.
pub const UZU_TOL: f64 = 1e-10;

/// Residual bound for `vbh`.
pub const VBH_TOL: f64 = 1e-8;

const VBH_MAX_ITER: usize = 50;

/// `g = u⁻ z u⁺` with `u⁻ = u(s)`, `z ∈ Z`, `u⁺ = σ(u(s⁺))`.
#[derive(Clone, Debug)]
pub struct DecompositionUZU {
    pub u_minus: HorosphericalElement,
    pub z: GroupElement,
    pub u_plus: GroupElement,
    /// `s⁺` with `u⁺ = σ(u(s⁺))`.
    pub s_plus: Vec<f64>,
    pub residual: f64,
}

impl DecompositionUZU {
    pub fn product(&self) -> DMatrix<f64> {
        self.u_minus.matrix() * &self.z.matrix * &self.u_plus.matrix
    }
}

/// `g = v b h` with `v ∈ U⁻`, `b = a_r ∈ A`, `h = exp(ξ) ∈ H`.
#[derive(Clone, Debug)]
pub struct DecompositionVBH {
    pub v: HorosphericalElement,
    pub b: FlowElement,
    pub h: GroupElement,
    /// Coordinates of `log h` in the orthonormal basis of `𝔥`.
    pub xi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl OrthogonalGroup {
    /// Sequential extraction: `z e₁ = λe₁` and `u⁺e₁ = e₁` give `λ` and `s`
    /// from the first column, then `h = u(−s)g = zu⁺` gives the middle
    /// block of `z`, and `u⁺ = z⁻¹h`. Defined wherever `g₁₁ > 0`; the
    /// round trip is verified.
    pub fn decompose_uzu(&self, g: &GroupElement) -> Result<DecompositionUZU> {
        let n = self.dim();
        let x = &g.matrix;
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.nrows() });
        }
        let lam = x[(0, 0)];
        if !(lam > 0.0) {
            return Err(Error::OutsideDomain(format!("g₁₁ = {lam} is not positive")));
        }
        let s: Vec<f64> = (1..n - 1).map(|i| x[(i, 0)] / lam).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let h = HorosphericalElement::new(neg, self.p()).matrix() * x;
        let mut z = DMatrix::zeros(n, n);
        z[(0, 0)] = lam;
        z[(n - 1, n - 1)] = 1.0 / lam;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                z[(i, j)] = h[(i, j)];
            }
        }
        let z = GroupElement::new(z);
        let up = self.inverse(&z).matrix * &h;
        let s_plus: Vec<f64> = (1..n - 1).map(|i| -self.m() / 2.0 * up[(i, n - 1)]).collect();
        let u_plus = self.u_plus(&s_plus);
        let dec = DecompositionUZU {
            u_minus: HorosphericalElement::new(s, self.p()),
            z,
            u_plus,
            s_plus,
            residual: 0.0,
        };
        let residual = (dec.product() - x).norm() / x.norm().max(1.0);
        if !(residual <= UZU_TOL) {
            return Err(Error::ChartViolation { residual });
        }
        Ok(DecompositionUZU { residual, ..dec })
    }

    /// `u⁻ z u⁺` as a group element.
    pub fn compose_uzu(&self, s: &[f64], z: &GroupElement, s_plus: &[f64]) -> GroupElement {
        self.horospherical(s).mul(z).mul(&self.u_plus(s_plus))
    }

    /// Gauss–Newton on `(s, r, ξ)` for `‖u(s) a_r exp(ξ) − g‖_F`, seeded at
    /// zero, with a central-difference Jacobian.
    pub fn decompose_vbh(&self, g: &GroupElement) -> Result<DecompositionVBH> {
        let n = self.dim();
        let k1 = self.d() - 1;
        let hb = self.h_algebra();
        let k = k1 + 1 + hb.dim();
        let eval = |th: &[f64]| -> DMatrix<f64> {
            let u = HorosphericalElement::new(th[..k1].to_vec(), self.p()).matrix();
            let a = FlowElement::new(th[k1]).matrix(n);
            u * a * expm(&hb.combine(&th[k1 + 1..]))
        };
        let target = &g.matrix;
        let resid = |th: &[f64]| -> DVector<f64> {
            let r = eval(th) - target;
            DVector::from_column_slice(r.as_slice())
        };
        let mut th = vec![0.0; k];
        let mut r = resid(&th);
        let mut iterations = 0;
        let step = 1e-7;
        for it in 0..VBH_MAX_ITER {
            iterations = it;
            if r.norm() <= 1e-15 * target.norm() {
                break;
            }
            let mut jac = DMatrix::zeros(n * n, k);
            for c in 0..k {
                let mut tp = th.clone();
                let mut tm = th.clone();
                tp[c] += step;
                tm[c] -= step;
                let col = (resid(&tp) - resid(&tm)) / (2.0 * step);
                jac.set_column(c, &col);
            }
            let delta = jac
                .svd(true, true)
                .solve(&r, 1e-14)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let trial: Vec<f64> = th.iter().zip(delta.iter()).map(|(a, b)| a - b).collect();
            let rt = resid(&trial);
            if !(rt.norm() < r.norm()) {
                break;
            }
            th = trial;
            r = rt;
            iterations = it + 1;
        }
        let residual = r.norm();
        if !(residual <= VBH_TOL) {
            return Err(Error::NoConvergence { iterations, residual });
        }
        Ok(DecompositionVBH {
            v: HorosphericalElement::new(th[..k1].to_vec(), self.p()),
            b: FlowElement::new(th[k1]),
            h: GroupElement::new(expm(&hb.combine(&th[k1 + 1..]))),
            xi: th[k1 + 1..].to_vec(),
            residual,
            iterations,
        })
    }
}
