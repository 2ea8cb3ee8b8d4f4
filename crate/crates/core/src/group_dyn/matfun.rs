//! Matrix exponential and logarithm.

use nalgebra::DMatrix;

/// `exp(X)` by scaling and squaring.
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().exp()
}

/// Principal square root by the Denman–Beavers iteration, or `None` when
/// the iteration does not settle (an eigenvalue on the closed negative
/// real axis).
fn sqrtm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..80 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let step = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if !step.is_finite() {
            return None;
        }
        if step <= 1e-15 * y.norm() {
            break;
        }
    }
    if (&y * &y - a).norm() > 1e-10 * a.norm().max(1.0) {
        return None;
    }
    Some(y)
}

/// Principal logarithm by inverse scaling and squaring, or `None` when the
/// principal logarithm does not exist.
pub fn logm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut y = a.clone();
    let mut k = 0u32;
    while (&y - &id).norm() > 0.2 {
        if k >= 48 {
            return None;
        }
        y = sqrtm(&y)?;
        k += 1;
    }
    let x = &y - &id;
    let mut term = x.clone();
    let mut acc = x.clone();
    for j in 2..200 {
        term = &term * &x;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        acc += &term * (sign / j as f64);
        if term.norm() / (j as f64) < 1e-18 {
            break;
        }
    }
    Some(acc * 2f64.powi(k as i32))
}

/// `log U = N − N²/2` for `U = I + N` with `N³ = 0`.
pub fn log_unipotent(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let nil = u - DMatrix::<f64>::identity(n, n);
    &nil - (&nil * &nil) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_log_round_trip() {
        let x = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.2, 0.3, 0.0, -0.7, 0.05, 0.6, -0.2]);
        let back = logm(&expm(&x)).unwrap();
        assert!((back - &x).norm() < 1e-13);
        let big = &x * 3.0;
        assert!((logm(&expm(&big)).unwrap() - &big).norm() < 1e-11);
    }

    #[test]
    fn log_of_reflection_does_not_exist() {
        let r = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        assert!(logm(&r).is_none());
    }

    #[test]
    fn unipotent_log() {
        let mut u = DMatrix::<f64>::identity(3, 3);
        u[(1, 0)] = 0.5;
        u[(2, 1)] = -0.5;
        u[(2, 0)] = -0.125;
        let l = log_unipotent(&u);
        assert!((expm(&l) - &u).norm() < 1e-15);
        assert!((logm(&u).unwrap() - &l).norm() < 1e-13);
    }
}
