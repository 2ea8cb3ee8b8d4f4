//! `D(Φ∘p⁻¹)` at `(e, e, e)` by central differences.
//!
//! Coordinates: `s` on `U⁻` via `u(s)`, exponential coordinates on `Z` in
//! the orthonormal basis of `𝔷`, and `s⁺` on `U⁺` via `σ(u(s⁺))`. The map
//! is `(u⁻, z, u⁺) ↦ (u⁻ z v(u⁺) z⁻¹, z b(u⁺), u⁻)`. In these coordinates
//! `σ: 𝔲⁺ → 𝔲⁻` is the identity matrix.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{expm, logm, OrthogonalGroup};
use crate::error::{Error, Result};

const STEP: f64 = 1e-5;

/// Result of the transversality check.
#[derive(Clone, Debug, Serialize)]
pub struct TransversalityReport {
    pub det_phi: f64,
    /// `|det J_R − det J_{h/2}|` between the extrapolated and plain
    /// differences.
    pub det_error: f64,
    /// `max |(∂v/∂u⁺)_e + σ|`, entrywise.
    pub dv_du_plus_error: f64,
    /// `max |∂φ/∂u⁻ − I|` together with the zero blocks of the `φ` row.
    pub dphi_du_minus_error: f64,
    /// `max |∂b/∂u⁺|`, entrywise.
    pub db_du_plus: f64,
    pub jacobian: Vec<Vec<f64>>,
}

impl TransversalityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

struct PhiMap<'a> {
    group: &'a OrthogonalGroup,
    k1: usize,
    kz: usize,
    zb: super::LieBasis,
}

impl PhiMap<'_> {
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.group;
        let (k1, kz) = (self.k1, self.kz);
        let um = g.horospherical(&x[..k1]);
        let z = super::GroupElement::new(expm(&self.zb.combine(&x[k1..k1 + kz])));
        let up = g.u_plus(&x[k1 + kz..]);
        let vbh = g.decompose_vbh(&up)?;
        let v = super::GroupElement::new(vbh.v.matrix());
        let psi = um.mul(&z).mul(&v).mul(&g.inverse(&z));
        let n = g.dim();
        let lam = psi.matrix[(0, 0)];
        let mut out: Vec<f64> = (1..n - 1).map(|i| psi.matrix[(i, 0)] / lam).collect();
        let eta = &z.matrix * vbh.b.matrix(n);
        let log_eta =
            logm(&eta).ok_or_else(|| Error::OutsideDomain("z·b has no logarithm".into()))?;
        out.extend(self.zb.coords(&log_eta));
        out.extend_from_slice(&x[..k1]);
        Ok(out)
    }

    fn jacobian(&self, h: f64) -> Result<DMatrix<f64>> {
        let k = 2 * self.k1 + self.kz;
        let mut jac = DMatrix::zeros(k, k);
        for c in 0..k {
            let mut xp = vec![0.0; k];
            let mut xm = vec![0.0; k];
            xp[c] = h;
            xm[c] = -h;
            let fp = self.eval(&xp)?;
            let fm = self.eval(&xm)?;
            for r in 0..k {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// Assembles `D(Φ∘p⁻¹)` at the identity with step `10⁻⁵`, extrapolated
/// once, and reports `|det|` and the block deviations.
pub fn transversality_checks(group: &OrthogonalGroup) -> Result<TransversalityReport> {
    let zb = group.z_algebra();
    let map = PhiMap { group, k1: group.d() - 1, kz: zb.dim(), zb };
    let j1 = map.jacobian(STEP)?;
    let j2 = map.jacobian(STEP / 2.0)?;
    let jr = (&j2 * 4.0 - &j1) / 3.0;
    let det = jr.determinant();
    let det_error = (det - j2.determinant()).abs();
    if !(det_error <= 1e-3) {
        return Err(Error::NoConvergence { iterations: 2, residual: det_error });
    }
    let (k1, kz) = (map.k1, map.kz);
    let k = 2 * k1 + kz;
    let mut dv = 0f64;
    let mut db = 0f64;
    for c in k1 + kz..k {
        for r in 0..k1 {
            let target = if r == c - k1 - kz { -1.0 } else { 0.0 };
            dv = dv.max((jr[(r, c)] - target).abs());
        }
        for r in k1..k1 + kz {
            db = db.max(jr[(r, c)].abs());
        }
    }
    let mut dphi = 0f64;
    for r in k1 + kz..k {
        for c in 0..k {
            let target = if c == r - k1 - kz { 1.0 } else { 0.0 };
            dphi = dphi.max((jr[(r, c)] - target).abs());
        }
    }
    Ok(TransversalityReport {
        det_phi: det.abs(),
        det_error,
        dv_du_plus_error: dv,
        dphi_du_minus_error: dphi,
        db_du_plus: db,
        jacobian: (0..k).map(|r| (0..k).map(|c| jr[(r, c)]).collect()).collect(),
    })
}
