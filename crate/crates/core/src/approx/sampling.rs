//! Sampling of boundary directions.
//!
//! For `Q = diag(±1)` with `p` plus and `q` minus axes, `∂X` is the product
//! `S^{p−1} × S^{q−1}` scaled by `1/√2`. The pushforward of the product of
//! uniform sphere measures is invariant under `SO(p) × SO(q)`, which acts
//! transitively on `∂X`, so it is the unique invariant probability measure
//! there.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::approx::cusp::Direction;
use crate::error::{Error, Result};
use crate::forms::QuadraticForm;

/// Uniform point on `S^{k−1}` by Gaussian normalization. For `k = 1` this
/// is a fair sign.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-150 {
            return g.into_iter().map(|a| a / n).collect();
        }
    }
}

fn axes(form: &QuadraticForm) -> Result<(Vec<usize>, Vec<usize>)> {
    let signs = form.unit_diagonal().ok_or_else(|| {
        Error::Unsupported("boundary sampling needs a diag(±1) form".into())
    })?;
    let plus = (0..signs.len()).filter(|&i| signs[i] > 0).collect();
    let minus = (0..signs.len()).filter(|&i| signs[i] < 0).collect();
    Ok((plus, minus))
}

/// Assembles `v = (u, w)/√2` on the plus/minus axes of the form.
pub fn boundary_from_parts(form: &QuadraticForm, u: &[f64], w: &[f64]) -> Result<Direction> {
    let (plus, minus) = axes(form)?;
    if u.len() != plus.len() || w.len() != minus.len() {
        return Err(Error::DimensionMismatch { expected: plus.len() + minus.len(), found: u.len() + w.len() });
    }
    let mut v = vec![0.0; form.dim()];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (&i, &a) in plus.iter().zip(u) {
        v[i] = a * h;
    }
    for (&i, &a) in minus.iter().zip(w) {
        v[i] = a * h;
    }
    Direction::boundary(v, form)
}

pub fn sample_boundary<R: Rng + ?Sized>(form: &QuadraticForm, rng: &mut R) -> Result<Direction> {
    let (p, q) = form.signature();
    let u = uniform_sphere(rng, p);
    let w = uniform_sphere(rng, q);
    boundary_from_parts(form, &u, &w)
}
