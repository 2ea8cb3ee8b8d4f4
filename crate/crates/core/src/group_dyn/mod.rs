//! The group `G = O(Q)` in f-coordinates: the involution `σ`, the
//! subgroups `A`, `U^±`, `Z` and `H = Stab(w₀)`, the `U⁻ZU⁺` and `U⁻BH`
//! factorizations, the transversality check at the identity, and counting
//! of `Γ = G(ℤ)` in the sets `U⁻_{r₁} Z_{r₂} a_t U⁺_{r₃}`.
//!
//! Here `B = A`: the `−1` eigenspace of `σ` inside the centralizer algebra
//! of `A` is spanned by the generator of `A`.

mod decompose;
mod gamma;
mod matfun;
mod transversality;

pub use decompose::{DecompositionUZU, DecompositionVBH, UZU_TOL, VBH_TOL};
pub use gamma::{
    box_member, gamma_in_box, lambda_r, lemma_uzav_fit, required_entry_bounds, BoxSpec,
    GammaCount, LambdaEstimate, UzavFit,
};
pub use matfun::{expm, log_unipotent, logm};
pub use transversality::{transversality_checks, TransversalityReport};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::approx::uniform_sphere;
use crate::error::{Error, Result};
use crate::geometry::{normal_gram_f64, Chart, FlowElement, HorosphericalElement};

/// Tolerance of the membership test, relative to `max(1, ‖g‖²)`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A matrix acting on f-coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: DMatrix<f64>,
}

impl GroupElement {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        GroupElement { matrix }
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { matrix: &self.matrix * &other.matrix }
    }

    /// `‖g − I‖_F`.
    pub fn distance_to_identity(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix - DMatrix::<f64>::identity(n, n)).norm()
    }
}

/// An orthonormal (Frobenius) basis of a matrix subspace.
#[derive(Clone, Debug)]
pub struct LieBasis {
    elems: Vec<DMatrix<f64>>,
}

impl LieBasis {
    /// Gram–Schmidt on the candidates, dropping dependent ones.
    fn orthonormal<I: IntoIterator<Item = DMatrix<f64>>>(cands: I) -> Self {
        let mut elems: Vec<DMatrix<f64>> = Vec::new();
        for mut x in cands {
            for _ in 0..2 {
                for e in &elems {
                    let c = x.dot(e);
                    x -= e * c;
                }
            }
            let nrm = x.norm();
            if nrm > 1e-9 {
                elems.push(x / nrm);
            }
        }
        LieBasis { elems }
    }

    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elems
    }

    /// Coordinates of the orthogonal projection of `x`.
    pub fn coords(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.elems.iter().map(|e| x.dot(e)).collect()
    }

    pub fn combine(&self, c: &[f64]) -> DMatrix<f64> {
        let n = self.elems.first().map_or(0, |e| e.nrows());
        let mut x = DMatrix::zeros(n, n);
        for (e, &ci) in self.elems.iter().zip(c) {
            x += e * ci;
        }
        x
    }
}

/// `O(Q)` for the normal form in `d + 1` variables with `p` plus signs,
/// together with the target value `m` that fixes `σ` and `w₀`.
#[derive(Clone, Debug)]
pub struct OrthogonalGroup {
    n: usize,
    p: usize,
    m: f64,
    gram: DMatrix<f64>,
}

impl OrthogonalGroup {
    pub fn new(d: usize, p: usize, m: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("d = {d} is too small for O(Q)")));
        }
        if !(1..=d).contains(&p) {
            return Err(Error::InvalidArgument(format!("p = {p} out of range for d = {d}")));
        }
        if m == 0.0 {
            return Err(Error::ZeroTarget);
        }
        if !m.is_finite() {
            return Err(Error::InvalidArgument(format!("m = {m} is not finite")));
        }
        let n = d + 1;
        Ok(OrthogonalGroup { n, p, m, gram: normal_gram_f64(n, p) })
    }

    pub fn for_chart(chart: &Chart) -> Result<Self> {
        Self::new(chart.d(), chart.p(), chart.m())
    }

    /// `d + 1`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.n - 1
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `G_f`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `‖gᵀG_f g − G_f‖₂ / max(1, ‖g‖²_F)`.
    pub fn membership_residual(&self, g: &DMatrix<f64>) -> f64 {
        let r = g.transpose() * &self.gram * g - &self.gram;
        let op = r.svd(false, false).singular_values.max();
        op / g.norm_squared().max(1.0)
    }

    pub fn contains(&self, g: &DMatrix<f64>) -> bool {
        g.nrows() == self.n && g.ncols() == self.n && self.membership_residual(g) <= MEMBERSHIP_TOL
    }

    pub fn element(&self, matrix: DMatrix<f64>) -> Result<GroupElement> {
        if matrix.nrows() != self.n || matrix.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: matrix.nrows() });
        }
        let residual = self.membership_residual(&matrix);
        if !(residual <= MEMBERSHIP_TOL) {
            return Err(Error::NotInGroup { residual });
        }
        Ok(GroupElement { matrix })
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::new(DMatrix::identity(self.n, self.n))
    }

    pub fn flow(&self, t: f64) -> GroupElement {
        GroupElement::new(FlowElement::new(t).matrix(self.n))
    }

    pub fn horospherical(&self, s: &[f64]) -> GroupElement {
        GroupElement::new(HorosphericalElement::new(s.to_vec(), self.p).matrix())
    }

    /// `σ(u(s))`, an element of `U⁺`.
    pub fn u_plus(&self, s: &[f64]) -> GroupElement {
        GroupElement::new(self.sigma_matrix(&HorosphericalElement::new(s.to_vec(), self.p).matrix()))
    }

    /// `g⁻¹ = G_f gᵀ G_f`.
    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        GroupElement::new(&self.gram * g.matrix.transpose() * &self.gram)
    }

    /// Diagonal of `D` in `s₀ = D·P`, where `P` swaps the first and last
    /// coordinates.
    fn s0_diag(&self, i: usize) -> f64 {
        if i == 0 {
            -2.0 / self.m
        } else if i == self.n - 1 {
            -self.m / 2.0
        } else {
            1.0
        }
    }

    fn swap(&self, i: usize) -> usize {
        if i == 0 {
            self.n - 1
        } else if i == self.n - 1 {
            0
        } else {
            i
        }
    }

    /// `s₀`: `f₁ ↦ −(m/2)f_{d+1}`, `f_{d+1} ↦ −(2/m)f₁`, `fᵢ ↦ fᵢ`.
    pub fn s0(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let i = self.swap(j);
            s[(i, j)] = if j == 0 {
                -self.m / 2.0
            } else if j == self.n - 1 {
                -2.0 / self.m
            } else {
                1.0
            };
        }
        s
    }

    /// `s₀ X s₀` entrywise, so that diagonal matrices map exactly.
    pub fn sigma_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            let v = x[(self.swap(i), self.swap(j))];
            if i == j {
                v
            } else {
                v * self.s0_diag(i) / self.s0_diag(j)
            }
        })
    }

    /// `σ(g) = s₀ g s₀`.
    pub fn involution(&self, g: &GroupElement) -> GroupElement {
        GroupElement::new(self.sigma_matrix(&g.matrix))
    }

    /// `w₀ = f₁ + (m/2) f_{d+1}` in f-coordinates.
    pub fn w0(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.n);
        w[0] = 1.0;
        w[self.n - 1] = self.m / 2.0;
        w
    }

    /// `‖g w₀ − w₀‖ ≤ 10⁻¹⁰ ‖w₀‖`.
    pub fn is_stabilizer(&self, g: &GroupElement) -> bool {
        let w = self.w0();
        (&g.matrix * &w - &w).norm() <= 1e-10 * w.norm()
    }

    /// The Lie algebra `{X : XᵀG_f + G_f X = 0}`.
    pub fn lie_algebra(&self) -> LieBasis {
        let n = self.n;
        let mut cands = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut a = DMatrix::zeros(n, n);
                a[(i, j)] = 1.0;
                a[(j, i)] = -1.0;
                cands.push(&self.gram * a);
            }
        }
        LieBasis::orthonormal(cands)
    }

    /// Generator `diag(1, 0, …, 0, −1)` of `A`.
    pub fn a_generator(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.n, self.n);
        e[(0, 0)] = 1.0;
        e[(self.n - 1, self.n - 1)] = -1.0;
        e
    }

    /// `𝔲⁻`, spanned by `∂u(s)/∂sᵢ` at `s = 0`.
    pub fn u_minus_algebra(&self) -> LieBasis {
        let n = self.n;
        LieBasis::orthonormal((0..n - 2).map(|i| {
            let mut x = DMatrix::zeros(n, n);
            x[(i + 1, 0)] = 1.0;
            x[(n - 1, i + 1)] = if i + 1 < self.p { -1.0 } else { 1.0 };
            x
        }))
    }

    /// `𝔲⁺ = σ(𝔲⁻)`.
    pub fn u_plus_algebra(&self) -> LieBasis {
        LieBasis::orthonormal(self.u_minus_algebra().elements().iter().map(|x| self.sigma_matrix(x)))
    }

    /// `𝔷`: the generator of `A` and the middle-block algebra.
    pub fn z_algebra(&self) -> LieBasis {
        let n = self.n;
        let mut cands = vec![self.a_generator()];
        for i in 1..n - 1 {
            for j in i + 1..n - 1 {
                let mut x = DMatrix::zeros(n, n);
                x[(i, j)] = 1.0;
                x[(j, i)] = -1.0;
                cands.push(&self.gram * x);
            }
        }
        LieBasis::orthonormal(cands)
    }

    /// `𝔥`, the fixed space of `σ` in the Lie algebra.
    pub fn h_algebra(&self) -> LieBasis {
        LieBasis::orthonormal(
            self.lie_algebra().elements().iter().map(|x| (x + self.sigma_matrix(x)) * 0.5),
        )
    }

    /// `exp(X)` for `X` uniform in the Frobenius ball of radius `r` in the
    /// Lie algebra.
    pub fn random_near_identity<R: Rng + ?Sized>(&self, rng: &mut R, r: f64) -> GroupElement {
        let basis = self.lie_algebra();
        let k = basis.dim();
        let dir = uniform_sphere(rng, k);
        let rad = r * rng.random::<f64>().powf(1.0 / k as f64);
        let c: Vec<f64> = dir.iter().map(|x| x * rad).collect();
        GroupElement::new(expm(&basis.combine(&c)))
    }
}

/// `σ(g)` for the involution fixed by `m`.
pub fn involution(g: &GroupElement, m: f64) -> Result<GroupElement> {
    let n = g.matrix.nrows();
    let group = OrthogonalGroup::new(n - 1, 1, m)?;
    Ok(group.involution(g))
}

/// `‖g w₀ − w₀‖ ≤ 10⁻¹⁰ ‖w₀‖`.
pub fn is_stabilizer(g: &GroupElement, w0: &DVector<f64>) -> bool {
    (&g.matrix * w0 - w0).norm() <= 1e-10 * w0.norm()
}

/// `‖log u‖_F` for a unipotent element of `U^±`.
pub fn unipotent_distance(u: &GroupElement) -> f64 {
    log_unipotent(&u.matrix).norm()
}

/// `‖log z‖_F`, or `∞` off the identity component of `Z`.
pub fn centralizer_distance(z: &GroupElement) -> f64 {
    logm(&z.matrix).map_or(f64::INFINITY, |l| l.norm())
}

/// `|det(Ad z|_{𝔲⁺})|`.
pub fn rho(group: &OrthogonalGroup, z: &GroupElement) -> f64 {
    let basis = group.u_plus_algebra();
    let zi = group.inverse(z);
    let k = basis.dim();
    let mut ad = DMatrix::zeros(k, k);
    for (j, e) in basis.elements().iter().enumerate() {
        let c = basis.coords(&(&z.matrix * e * &zi.matrix));
        for (i, ci) in c.into_iter().enumerate() {
            ad[(i, j)] = ci;
        }
    }
    ad.determinant().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn groups() -> Vec<OrthogonalGroup> {
        vec![
            OrthogonalGroup::new(3, 3, 1.0).unwrap(),
            OrthogonalGroup::new(3, 2, -2.0).unwrap(),
            OrthogonalGroup::new(2, 2, 1.0).unwrap(),
            OrthogonalGroup::new(4, 3, 3.0).unwrap(),
        ]
    }

    #[test]
    fn algebra_dimensions() {
        for g in groups() {
            let (n, d) = (g.dim(), g.d());
            assert_eq!(g.lie_algebra().dim(), n * (n - 1) / 2);
            assert_eq!(g.h_algebra().dim(), d * (d - 1) / 2);
            assert_eq!(g.u_minus_algebra().dim(), d - 1);
            assert_eq!(g.z_algebra().dim(), 1 + (d - 1) * (d - 2) / 2);
            for x in g.lie_algebra().elements() {
                let r = x.transpose() * g.gram() + g.gram() * x;
                assert!(r.norm() < 1e-14);
            }
            let w = g.w0();
            for x in g.h_algebra().elements() {
                assert!((x * &w).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn involution_identities() {
        for g in groups() {
            let s0 = g.s0();
            assert!(g.contains(&s0));
            assert!((&s0 * &s0 - DMatrix::identity(g.dim(), g.dim())).norm() < 1e-14);
            for t in [0.3, -1.7, 4.0] {
                assert_eq!(g.involution(&g.flow(t)), g.flow(-t));
            }
            let mut r = rng::stream(11, 0);
            let a = g.random_near_identity(&mut r, 0.4);
            let b = g.random_near_identity(&mut r, 0.4);
            assert!(g.contains(&a.matrix));
            let sa = g.involution(&a);
            assert!((&s0 * &a.matrix * &s0 - &sa.matrix).norm() < 1e-13);
            assert!((g.involution(&sa).matrix - &a.matrix).norm() < 1e-12);
            let lhs = g.involution(&a.mul(&b));
            let rhs = sa.mul(&g.involution(&b));
            assert!((lhs.matrix - rhs.matrix).norm() < 1e-12);
            let up = g.u_plus(&vec![0.3; g.d() - 1]);
            assert!(g.contains(&up.matrix));
            let mut e1 = DVector::zeros(g.dim());
            e1[0] = 1.0;
            assert_eq!(&up.matrix * &e1, e1);
        }
        assert!(involution(&OrthogonalGroup::new(3, 3, 1.0).unwrap().identity(), 0.0).is_err());
    }

    #[test]
    fn stabilizer() {
        let g = OrthogonalGroup::new(3, 3, 1.0).unwrap();
        assert!(g.is_stabilizer(&g.identity()));
        assert!(!g.is_stabilizer(&g.flow(0.2)));
        let mut rot = DMatrix::identity(4, 4);
        let (c, s) = (0.6f64, 0.8f64);
        rot[(1, 1)] = c;
        rot[(1, 2)] = -s;
        rot[(2, 1)] = s;
        rot[(2, 2)] = c;
        let rot = g.element(rot).unwrap();
        assert!(g.is_stabilizer(&rot));
        assert!(is_stabilizer(&rot, &g.w0()));
        assert!(g.is_stabilizer(&g.involution(&rot)));
        for x in g.h_algebra().elements() {
            assert!(g.is_stabilizer(&GroupElement::new(expm(&(x * 0.7)))));
        }
    }

    #[test]
    fn membership_and_inverse() {
        let g = OrthogonalGroup::new(3, 2, 1.0).unwrap();
        let u = g.horospherical(&[0.4, -1.2]);
        let a = g.flow(2.5);
        let x = u.mul(&a);
        assert!(g.contains(&x.matrix));
        let inv = g.inverse(&x);
        assert!((x.mul(&inv).matrix - DMatrix::identity(4, 4)).norm() < 1e-12);
        let mut bad = x.matrix.clone();
        bad[(1, 2)] += 1e-3;
        assert!(matches!(g.element(bad), Err(Error::NotInGroup { .. })));
    }

    #[test]
    fn rho_matches_block_formula() {
        for g in groups() {
            let d = g.d() as f64;
            for h in [-0.8, 0.0, 0.5] {
                assert!((rho(&g, &g.flow(h)) - (d - 1.0).mul_add(h, 0.0).exp()).abs() < 1e-12);
            }
            // λ^{d−1} |det M| for a general element of Z
            let z = GroupElement::new(expm(&g.z_algebra().combine(&vec![0.3; g.z_algebra().dim()])));
            let lam = z.matrix[(0, 0)];
            let n = g.dim();
            let mid = z.matrix.view((1, 1), (n - 2, n - 2)).into_owned().determinant().abs();
            assert!((rho(&g, &z) - lam.powf(d - 1.0) * mid).abs() < 1e-12);
        }
    }
}
