//! The two explicit constructions showing the dichotomy only holds almost
//! everywhere: a rational direction that is badly approximable by the
//! surface `Q₀(x) − y² = −1`, and a direction built from Pell solutions
//! that is approximable at the `s = 2` rate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{common_denominator, inertia, rat, ratio, Rational};

/// Fundamental solution of `k² − 7l² = 1`.
pub const PELL_FUNDAMENTAL: (i64, i64) = (8, 3);

/// The first `count` positive solutions of `k² − 7l² = 1`, generated by
/// `(k, l) ↦ (8k + 21l, 3k + 8l)`. Each is checked exactly.
pub fn pell_solutions(count: usize) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::with_capacity(count);
    let (mut k, mut l) = (BigInt::from(PELL_FUNDAMENTAL.0), BigInt::from(PELL_FUNDAMENTAL.1));
    for _ in 0..count {
        assert!(&k * &k - 7 * &l * &l == BigInt::one(), "Pell identity failed");
        out.push((k.clone(), l.clone()));
        let nk = 8 * &k + 21 * &l;
        let nl = 3 * &k + 8 * &l;
        k = nk;
        l = nl;
    }
    out
}

/// One witness `(x, y)` for the direction `v = (√7/4, 3/4, 0, …, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Example2Witness {
    /// Pell index, starting at 1.
    pub index: usize,
    pub x: Vec<BigInt>,
    pub y: BigInt,
    /// `|y| · ‖x − yv‖`, in floating point for reporting.
    pub scaled_error: f64,
    /// `y² Σ(xᵢ − yvᵢ)² < ε²`, decided exactly.
    pub approximation_ok: bool,
    /// `Σ(xᵢ² − y²vᵢ²) = 1`, decided exactly.
    pub surface_ok: bool,
}

impl Example2Witness {
    pub fn passes(&self) -> bool {
        self.approximation_ok && self.surface_ok
    }
}

fn rational_from_f64(x: f64) -> Result<Rational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("not finite: {x}")))
}

/// Witnesses `x₁ = k_j`, `x₂ = 3l_j`, `y = 4l_j`, `xᵢ = 0` for `i > 2`.
///
/// Only `v₁ = √7/4` is irrational; with `A = y²(k² + 7l²)`, `B = 2y²kl`,
/// the first condition reads `A − B√7 < ε²`, which is decided by squaring
/// with exact rationals.
pub fn example2_witnesses(epsilon: f64, count: usize, d: usize) -> Result<Vec<Example2Witness>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    if d < 2 {
        return Err(Error::InvalidArgument("d must be at least 2".into()));
    }
    let eps = rational_from_f64(epsilon)?;
    let eps2 = &eps * &eps;
    let v_sq: Vec<Rational> = (0..d)
        .map(|i| match i {
            0 => ratio(7, 16),
            1 => ratio(9, 16),
            _ => Rational::zero(),
        })
        .collect();
    let sqrt7 = 7f64.sqrt();
    let mut out = Vec::with_capacity(count);
    for (j, (k, l)) in pell_solutions(count).into_iter().enumerate() {
        let y = BigInt::from(4) * &l;
        let mut x = vec![BigInt::zero(); d];
        x[0] = k.clone();
        x[1] = BigInt::from(3) * &l;

        // y v₂ = 3l = x₂ exactly, so only the first coordinate contributes
        let y2 = Rational::from_integer(&y * &y);
        let a = &y2 * Rational::from_integer(&k * &k + 7 * &l * &l);
        let b = &y2 * Rational::from_integer(BigInt::from(2) * &k * &l);
        let lhs = &a - &eps2;
        let approximation_ok = if !lhs.is_positive() {
            true
        } else {
            &lhs * &lhs < rat(7) * &b * &b
        };

        let mut surface = Rational::zero();
        for (xi, vi2) in x.iter().zip(&v_sq) {
            surface += Rational::from_integer(xi * xi) - &y2 * vi2;
        }
        let surface_ok = surface == Rational::one();

        // y (k − √7 l) = 4l / (k + √7 l)
        let (kf, lf) = (k.to_f64().unwrap_or(f64::INFINITY), l.to_f64().unwrap_or(f64::INFINITY));
        let scaled_error = 4.0 * lf / (kf + sqrt7 * lf);

        out.push(Example2Witness { index: j + 1, x, y, scaled_error, approximation_ok, surface_ok });
    }
    Ok(out)
}

/// Summary over a witness run: the first index from which every remaining
/// witness passes, and the first index from which every remaining witness
/// fails.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSummary {
    pub all_pass_from: Option<usize>,
    pub all_fail_from: Option<usize>,
}

pub fn summarize_witnesses(ws: &[Example2Witness]) -> WitnessSummary {
    let tail_from = |pred: &dyn Fn(&Example2Witness) -> bool| -> Option<usize> {
        let mut from = None;
        for w in ws.iter().rev() {
            if pred(w) {
                from = Some(w.index);
            } else {
                break;
            }
        }
        from
    };
    WitnessSummary {
        all_pass_from: tail_from(&|w| w.passes()),
        all_fail_from: tail_from(&|w| !w.passes()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example1Report {
    /// `k`: least common denominator of `v`.
    pub k: BigInt,
    /// `ε* = 1/k`, the least norm of a nonzero vector of `(1/k)ℤ^d`.
    pub epsilon: Rational,
    pub y_max: i64,
    /// Integer `x` examined over all `|y| ≤ y_max`.
    pub candidates: u64,
    /// Solutions `(x, y)` of `‖yv − x‖ < ε*`, `Q₀(x) − y² = −1` found.
    pub solutions: Vec<(Vec<i64>, i64)>,
    /// Candidates with `‖yv − x‖ < ε*` (all of which have `x = yv`).
    pub near_hits: u64,
}

/// Exhaustively checks that no `(x, y)` with `|y| ≤ y_max`,
/// `‖yv − x‖ < 1/k` solves `Q₀(x) − y² = −1`, for a positive-definite
/// integral `Q₀` and rational `v` with `Q₀(v) = 1`.
pub fn example1_certificate(
    q0: &[Vec<i64>],
    v: &[Rational],
    y_max: i64,
    exec: Execution,
) -> Result<Example1Report> {
    let d = q0.len();
    if v.len() != d || q0.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: v.len() });
    }
    let gram: Vec<Vec<Rational>> =
        q0.iter().map(|r| r.iter().map(|&g| rat(g)).collect()).collect();
    for i in 0..d {
        for j in 0..i {
            if q0[i][j] != q0[j][i] {
                return Err(Error::Asymmetric { row: i, col: j });
            }
        }
    }
    if inertia(&gram) != (d, 0, 0) {
        return Err(Error::InvalidArgument("Q₀ must be positive definite".into()));
    }
    let mut qv = Rational::zero();
    for i in 0..d {
        for j in 0..d {
            qv += &gram[i][j] * &v[i] * &v[j];
        }
    }
    if qv != Rational::one() {
        return Err(Error::InvalidArgument(format!("Q₀(v) = {qv}, expected 1")));
    }
    let k = common_denominator(v);
    let k_i = k.to_i64().ok_or_else(|| Error::Unsupported("denominator too large".into()))?;
    // v = a/k with integer a
    let a: Vec<i64> = v
        .iter()
        .map(|r| (r * Rational::from_integer(k.clone())).to_integer().to_i64().unwrap())
        .collect();
    let epsilon = Rational::new(BigInt::one(), k.clone());

    let ys: Vec<i64> = (-y_max..=y_max).collect();
    let chunks: Vec<&[i64]> = ys.chunks(1024).collect();
    let per_chunk = exec.map(&chunks, |chunk| {
        let mut cands = 0u64;
        let mut near = 0u64;
        let mut sols = Vec::new();
        for &y in chunk.iter() {
            // candidate x_i lie within 1/k of y a_i / k: k x_i ∈ (y a_i − 1, y a_i + 1)
            let ranges: Vec<(i64, i64)> = a
                .iter()
                .map(|&ai| {
                    let c = y as i128 * ai as i128;
                    let lo = Integer::div_floor(&(c - 1), &(k_i as i128)) + 1;
                    let hi = Integer::div_ceil(&(c + 1), &(k_i as i128)) - 1;
                    (lo as i64, hi as i64)
                })
                .collect();
            let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            if ranges.iter().any(|r| r.0 > r.1) {
                continue;
            }
            loop {
                cands += 1;
                // k²‖yv − x‖² = Σ(y aᵢ − k xᵢ)² < 1
                let dist: i128 = a
                    .iter()
                    .zip(&x)
                    .map(|(&ai, &xi)| {
                        let t = y as i128 * ai as i128 - k_i as i128 * xi as i128;
                        t * t
                    })
                    .sum();
                if dist < 1 {
                    near += 1;
                    let mut q = 0i128;
                    for i in 0..d {
                        for j in 0..d {
                            q += q0[i][j] as i128 * x[i] as i128 * x[j] as i128;
                        }
                    }
                    if q - (y as i128) * (y as i128) == -1 {
                        sols.push((x.clone(), y));
                    }
                }
                if !advance(&mut x, &ranges) {
                    break;
                }
            }
        }
        (cands, near, sols)
    });
    let mut report = Example1Report {
        k,
        epsilon,
        y_max,
        candidates: 0,
        solutions: Vec::new(),
        near_hits: 0,
    };
    for (c, n, s) in per_chunk {
        report.candidates += c;
        report.near_hits += n;
        report.solutions.extend(s);
    }
    Ok(report)
}

/// Odometer step over the box `ranges`; false once the box is exhausted.
fn advance(x: &mut [i64], ranges: &[(i64, i64)]) -> bool {
    for i in (0..x.len()).rev() {
        if x[i] < ranges[i].1 {
            x[i] += 1;
            return true;
        }
        x[i] = ranges[i].0;
    }
    false
}
