//! One-dimensional quadrature and root bracketing.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol || (b - a) <= 1e-13 * (a.abs() + b.abs()).max(1.0) {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::NoConvergence { iterations: MAX_DEPTH as usize, residual: diff.abs() });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}

/// Integrates `f` over `[a, b]` split at `breaks`, to relative tolerance
/// `rel` of a coarse estimate of the whole integral.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel: f64,
) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // coarse scale estimate for the absolute tolerance
    let coarse: f64 = pts
        .windows(2)
        .map(|w| {
            let n = 16;
            let h = (w[1] - w[0]) / n as f64;
            (0..=n).map(|i| f(w[0] + i as f64 * h).abs()).sum::<f64>() * h
        })
        .sum();
    let tol = (rel * coarse).max(f64::MIN_POSITIVE);
    let share = tol / (pts.len() - 1) as f64;
    pts.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], share)).sum()
}

/// Sign changes of `g` on `[a, b]`, located by a scan with `n` steps and
/// refined by bisection.
pub fn sign_changes<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if !(b > a) {
        return out;
    }
    let h = (b - a) / n as f64;
    let mut x0 = a;
    let mut g0 = g(a);
    for i in 1..=n {
        let x1 = if i == n { b } else { a + i as f64 * h };
        let g1 = g(x1);
        if (g0 <= 0.0) != (g1 <= 0.0) {
            let (mut lo, mut hi) = (x0, x1);
            let lo_sign = g0 <= 0.0;
            for _ in 0..200 {
                let mid = (lo + hi) / 2.0;
                if mid <= lo || mid >= hi {
                    break;
                }
                if (g(mid) <= 0.0) == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((lo + hi) / 2.0);
        }
        x0 = x1;
        g0 = g1;
    }
    out
}
