//! The `(t, s)` coordinates on `X`: the diagonal flow `a_t`, the
//! horospherical elements `u(s)`, the chart `x = a_t u(s) w₀`, the regions
//! `𝒰_t(ψ)` with their volumes, and the divergence classifier.
//!
//! Matrices act on f-coordinates, where the form is
//! `2x₁x_{d+1} + x₂² + … + x_p² − x_{p+1}² − … − x_d²`.

mod chart;
mod classify;
mod region;

pub use chart::{Chart, TsCoordinates, MAX_ABS_T};
pub use classify::{
    classify_numeric, divergence_classifier, partial_integral, Classification, Verdict,
};
pub use region::{
    cusp_volume, exceptional_tail, in_exceptional_set, omega, region_volume_radial,
    sandwich_constant, CoordinateRegion, McEstimate, Predicate, TailCheck, VolumeMethod,
};

use nalgebra::DMatrix;

/// Normal-form Gram matrix `G_f` for `n = d + 1` coordinates, `p` plus
/// signs (counting the hyperbolic pair as one).
pub fn normal_gram_f64(n: usize, p: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    g[(0, n - 1)] = 1.0;
    g[(n - 1, 0)] = 1.0;
    for i in 1..n - 1 {
        g[(i, i)] = if i < p { 1.0 } else { -1.0 };
    }
    g
}

/// `a_t = diag(e^t, 1, …, 1, e^{−t})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowElement {
    pub t: f64,
}

impl FlowElement {
    pub fn new(t: f64) -> Self {
        FlowElement { t }
    }

    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut a = DMatrix::identity(n, n);
        a[(0, 0)] = self.t.exp();
        a[(n - 1, n - 1)] = (-self.t).exp();
        a
    }

    pub fn compose(&self, other: &FlowElement) -> FlowElement {
        FlowElement { t: self.t + other.t }
    }
}

/// `u(s)` for `s = (s₁, s₂) ∈ ℝ^{p−1} × ℝ^{d−p}`:
///
/// ```text
/// ⎛ 1                          ⎞
/// ⎜ s₁ᵀ        I               ⎟
/// ⎜ s₂ᵀ              I         ⎟
/// ⎝ (−‖s₁‖²+‖s₂‖²)/2  −s₁  s₂  1 ⎠
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct HorosphericalElement {
    pub s: Vec<f64>,
    /// Number of plus signs of the normal form; `s₁` has `p − 1` entries.
    pub p: usize,
}

impl HorosphericalElement {
    pub fn new(s: Vec<f64>, p: usize) -> Self {
        assert!(p >= 1 && p - 1 <= s.len(), "p out of range for s");
        HorosphericalElement { s, p }
    }

    /// `(‖s₁‖², ‖s₂‖²)`.
    pub fn split_norms(&self) -> (f64, f64) {
        let k1 = self.p - 1;
        let a = self.s[..k1].iter().map(|x| x * x).sum();
        let b = self.s[k1..].iter().map(|x| x * x).sum();
        (a, b)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.s.len() + 2;
        let k1 = self.p - 1;
        let mut u = DMatrix::identity(n, n);
        let (a, b) = self.split_norms();
        for (i, &si) in self.s.iter().enumerate() {
            u[(i + 1, 0)] = si;
            u[(n - 1, i + 1)] = if i < k1 { -si } else { si };
        }
        u[(n - 1, 0)] = (-a + b) / 2.0;
        u
    }

    pub fn compose(&self, other: &HorosphericalElement) -> HorosphericalElement {
        let s = self.s.iter().zip(&other.s).map(|(a, b)| a + b).collect();
        HorosphericalElement { s, p: self.p }
    }

    /// `s` read back from the first column of a matrix of the form `u(s)`.
    pub fn from_matrix(u: &DMatrix<f64>, p: usize) -> Self {
        let n = u.nrows();
        HorosphericalElement { s: (1..n - 1).map(|i| u[(i, 0)]).collect(), p }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(m: &DMatrix<f64>) -> f64 {
        m.clone().svd(false, false).singular_values.max()
    }

    #[test]
    fn flow_and_horosphere_preserve_the_form() {
        for (n, p) in [(4, 3), (4, 2), (5, 3), (3, 2)] {
            let g = normal_gram_f64(n, p);
            let a = FlowElement::new(0.7).matrix(n);
            assert!(op(&(a.transpose() * &g * &a - &g)) < 1e-12);
            let s: Vec<f64> = (0..n - 2).map(|i| 0.3 * i as f64 - 0.2).collect();
            let u = HorosphericalElement::new(s.clone(), p).matrix();
            assert!(op(&(u.transpose() * &g * &u - &g)) < 1e-12);
            let neg = HorosphericalElement::new(s.iter().map(|x| -x).collect(), p).matrix();
            assert!(op(&(&u * &neg - DMatrix::identity(n, n))) < 1e-12);
            let t = 1.3;
            let conj = FlowElement::new(t).matrix(n) * &u * FlowElement::new(-t).matrix(n);
            let shrunk =
                HorosphericalElement::new(s.iter().map(|x| x * (-t).exp()).collect(), p).matrix();
            assert!(op(&(conj - shrunk)) < 1e-12);
        }
    }

    #[test]
    fn group_laws() {
        let a = FlowElement::new(0.4);
        let b = FlowElement::new(-1.1);
        let prod = a.matrix(4) * b.matrix(4);
        assert!(op(&(prod - a.compose(&b).matrix(4))) < 1e-12);
        let u = HorosphericalElement::new(vec![0.1, -0.5], 2);
        let v = HorosphericalElement::new(vec![0.7, 0.2], 2);
        assert!(op(&(u.matrix() * v.matrix() - u.compose(&v).matrix())) < 1e-12);
        assert_eq!(HorosphericalElement::from_matrix(&u.matrix(), 2), u);
        let m = u.matrix();
        assert_eq!(m[(3, 0)], (-0.01 + 0.25) / 2.0);
    }
}
