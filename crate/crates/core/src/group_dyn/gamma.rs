//! `Γ = G(ℤ)` in the sets `E_t(r) = U⁻_{r₁} Z_{r₂} a_t U⁺_{r₃}`, the measure
//! `λ(r)`, and the empirical constant of `G_r a_t G_r ⊂ U⁻_{lr}Z_{lr}a_tU⁺_{lr}`.
//!
//! Balls are taken in the right-invariant metric that is Frobenius on the
//! Lie algebra, through the logarithm: `g ∈ S_r` iff `‖log g‖_F ≤ r`.

use nalgebra::DMatrix;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use super::{centralizer_distance, expm, rho, unipotent_distance, GroupElement, OrthogonalGroup};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{HyperbolicBasis, QuadraticForm, Rational};
use crate::geometry::Chart;
use crate::rng;

/// Largest `r₂` for which exponential coordinates on the compact part of
/// `Z` stay injective on the ball.
pub const MAX_Z_RADIUS: f64 = 4.0;

/// Radii of the `U⁻`, `Z`, `U⁺` balls and the flow time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxSpec {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub t: f64,
}

impl BoxSpec {
    pub fn new(r1: f64, r2: f64, r3: f64, t: f64) -> Result<Self> {
        for (name, r) in [("r1", r1), ("r2", r2), ("r3", r3)] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {r} must be positive")));
            }
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("t = {t} is not finite")));
        }
        Ok(BoxSpec { r1, r2, r3, t })
    }

    pub fn with_t(&self, t: f64) -> Self {
        BoxSpec { t, ..*self }
    }
}

/// `g ∈ U⁻_{r₁} Z_{r₂} a_t U⁺_{r₃}`, read off from the `u⁻zu⁺` factors of
/// `g` with `z` shifted by `a_{−t}`.
pub fn box_member(group: &OrthogonalGroup, g: &GroupElement, bx: &BoxSpec) -> bool {
    let Ok(dec) = group.decompose_uzu(g) else {
        return false;
    };
    let um = group.horospherical(&dec.u_minus.s);
    if unipotent_distance(&um) > bx.r1 || unipotent_distance(&dec.u_plus) > bx.r3 {
        return false;
    }
    centralizer_distance(&dec.z.mul(&group.flow(-bx.t))) <= bx.r2
}

fn abs_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.abs() * b.abs()
}

/// Entrywise upper bounds for `|γᵢⱼ|` over `γ = F g F⁻¹`, `g ∈ E_t(r)`.
pub fn required_entry_bounds(chart: &Chart, bx: &BoxSpec) -> Vec<Vec<f64>> {
    let n = chart.dim();
    let (r1, r3) = (bx.r1 / 2f64.sqrt(), bx.r3 / 2f64.sqrt());
    let mut um = DMatrix::<f64>::identity(n, n);
    let mut up = DMatrix::<f64>::identity(n, n);
    for i in 1..n - 1 {
        um[(i, 0)] = r1;
        um[(n - 1, i)] = r1;
        up[(0, i)] = r3;
        up[(i, n - 1)] = r3;
    }
    um[(n - 1, 0)] = r1 * r1 / 2.0;
    up[(0, n - 1)] = r3 * r3 / 2.0;
    let mut z = DMatrix::<f64>::zeros(n, n);
    let lam = (bx.r2 / 2f64.sqrt()).exp();
    z[(0, 0)] = lam;
    z[(n - 1, n - 1)] = lam;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            z[(i, j)] = bx.r2.exp();
        }
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    a[(0, 0)] = bx.t.exp();
    a[(n - 1, n - 1)] = (-bx.t).exp();
    let g = abs_product(&abs_product(&abs_product(&um, &z), &a), &up);
    let gamma = abs_product(&abs_product(chart.f(), &g), chart.f_inv());
    (0..n).map(|i| (0..n).map(|j| gamma[(i, j)] * (1.0 + 1e-9)).collect()).collect()
}

/// Result of a box count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaCount {
    pub t: f64,
    pub count: u64,
    /// The entry bound was below the box-derived bound, so `count` is only
    /// a lower bound.
    pub lower_bound: bool,
    /// Integer automorphisms within the entry bounds.
    pub automorphisms: u64,
    /// Free-variable assignments visited by the backtracking.
    pub evaluations: u64,
}

impl GammaCount {
    pub const CSV_HEADER: &'static str = "t,count,lower_bound_flag";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.t, self.count, self.lower_bound)
    }
}

/// Affine parametrization of the solutions of the linear constraints on a
/// column: `δx_p = α_p + Σ_f β_{p,f} x_f` for pivots `p`.
struct LinearSlice {
    delta: i128,
    free: Vec<usize>,
    /// `y = δx` as `offset + Σ_f x_f dir_f`.
    offset: Vec<i128>,
    dirs: Vec<Vec<i128>>,
}

fn solve_linear(rows: &[Vec<i128>], rhs: &[i128], n: usize) -> Option<LinearSlice> {
    let rat = |v: i128| Rational::from_integer(v.into());
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| r.iter().map(|&v| rat(v)).chain(std::iter::once(rat(b))).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pr) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pr);
        let inv = m[row][col].recip();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let src = m[row].clone();
                for (dst, s) in m[r].iter_mut().zip(&src) {
                    *dst = &*dst - &f * s;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if m[row..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut delta = num_bigint::BigInt::one();
    for r in m.iter().take(pivots.len()) {
        for v in r {
            delta = delta.lcm(v.denom());
        }
    }
    let dr = Rational::from_integer(delta.clone());
    let to_i = |v: &Rational| (v * &dr).to_integer().to_i128().expect("coefficient fits in i128");
    let delta = delta.to_i128().expect("denominator fits in i128");
    let mut offset = vec![0i128; n];
    let mut dirs = vec![vec![0i128; n]; free.len()];
    for (r, &p) in pivots.iter().enumerate() {
        offset[p] = to_i(&m[r][n]);
        for (k, &f) in free.iter().enumerate() {
            dirs[k][p] = -to_i(&m[r][f]);
        }
    }
    for (k, &f) in free.iter().enumerate() {
        dirs[k][f] = delta;
    }
    Some(LinearSlice { delta, free, offset, dirs })
}

struct Enumerator<'a> {
    gram: Vec<Vec<i128>>,
    bounds: &'a [Vec<i64>],
    order: Vec<usize>,
}

fn quad(gram: &[Vec<i128>], x: &[i128], y: &[i128]) -> i128 {
    let mut acc = 0i128;
    for (i, row) in gram.iter().enumerate() {
        if x[i] == 0 {
            continue;
        }
        let r: i128 = row.iter().zip(y).map(|(g, v)| g * v).sum();
        acc += x[i] * r;
    }
    acc
}

impl Enumerator<'_> {
    fn n(&self) -> usize {
        self.gram.len()
    }

    /// All admissible columns for position `depth` given the columns
    /// already chosen; the first free variable is restricted to `first`
    /// when given.
    fn columns(&self, chosen: &[Vec<i64>], depth: usize, first: Option<i64>, evals: &mut u64) -> Vec<Vec<i64>> {
        let n = self.n();
        let j = self.order[depth];
        let rows: Vec<Vec<i128>> = chosen
            .iter()
            .map(|c| (0..n).map(|i| (0..n).map(|k| self.gram[i][k] * c[k] as i128).sum()).collect())
            .collect();
        let rhs: Vec<i128> = (0..depth).map(|k| self.gram[j][self.order[k]]).collect();
        let Some(ls) = solve_linear(&rows, &rhs, n) else {
            return Vec::new();
        };
        let target = self.gram[j][j] * ls.delta * ls.delta;
        let bound = |i: usize| self.bounds[i][j];
        // the root variable: solved from the quadratic, widest range first
        let root = (0..ls.free.len())
            .filter(|&k| quad(&self.gram, &ls.dirs[k], &ls.dirs[k]) != 0)
            .max_by_key(|&k| (bound(ls.free[k]), std::cmp::Reverse(k)));
        let loop_vars: Vec<usize> = (0..ls.free.len()).filter(|&k| Some(k) != root).collect();
        let mut out = Vec::new();
        let mut vals: Vec<i64> = loop_vars.iter().map(|&k| -bound(ls.free[k])).collect();
        if let (Some(f), false) = (first, loop_vars.is_empty()) {
            vals[0] = f;
        }
        let done = |vals: &mut Vec<i64>| -> bool {
            for (pos, &k) in loop_vars.iter().enumerate().rev() {
                if pos == 0 && first.is_some() {
                    return true;
                }
                if vals[pos] < bound(ls.free[k]) {
                    vals[pos] += 1;
                    return false;
                }
                vals[pos] = -bound(ls.free[k]);
            }
            true
        };
        loop {
            *evals += 1;
            let mut y = ls.offset.clone();
            for (pos, &k) in loop_vars.iter().enumerate() {
                for (yi, di) in y.iter_mut().zip(&ls.dirs[k]) {
                    *yi += vals[pos] as i128 * di;
                }
            }
            let push = |y: &[i128], out: &mut Vec<Vec<i64>>| {
                if y.iter().any(|v| v % ls.delta != 0) {
                    return;
                }
                let x: Vec<i64> = y.iter().map(|v| (v / ls.delta) as i64).collect();
                if x.iter().enumerate().all(|(i, v)| v.abs() <= bound(i)) {
                    out.push(x);
                }
            };
            match root {
                None => {
                    if quad(&self.gram, &y, &y) == target {
                        push(&y, &mut out);
                    }
                }
                Some(k) => {
                    let e = &ls.dirs[k];
                    let a = quad(&self.gram, e, e);
                    let b = quad(&self.gram, e, &y);
                    let c = quad(&self.gram, &y, &y) - target;
                    for w in int_roots(a, b, c) {
                        let yw: Vec<i128> = y.iter().zip(e).map(|(yi, ei)| yi + w * ei).collect();
                        push(&yw, &mut out);
                    }
                }
            }
            if loop_vars.is_empty() || done(&mut vals) {
                break;
            }
        }
        out
    }

    fn count_subtree(&self, chosen: &mut Vec<Vec<i64>>, evals: &mut u64, accept: &dyn Fn(&[Vec<i64>]) -> bool) -> (u64, u64) {
        let depth = chosen.len();
        if depth == self.n() {
            return (1, accept(chosen) as u64);
        }
        let mut autos = 0;
        let mut hits = 0;
        for c in self.columns(chosen, depth, None, evals) {
            chosen.push(c);
            let (a, h) = self.count_subtree(chosen, evals, accept);
            chosen.pop();
            autos += a;
            hits += h;
        }
        (autos, hits)
    }
}

/// Integer roots of `a w² + 2b w + c = 0`.
fn int_roots(a: i128, b: i128, c: i128) -> Vec<i128> {
    if a == 0 {
        if b == 0 {
            return Vec::new();
        }
        return if c % (2 * b) == 0 { vec![-c / (2 * b)] } else { Vec::new() };
    }
    let disc = b * b - a * c;
    if disc < 0 {
        return Vec::new();
    }
    let s = num_integer::Roots::sqrt(&disc);
    if s * s != disc {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(2);
    for num in [-b - s, -b + s] {
        if num % a == 0 && !out.contains(&(num / a)) {
            out.push(num / a);
        }
    }
    out
}

/// Counts `γ ∈ Γ` with `F⁻¹γF ∈ U⁻_{r₁} Z_{r₂} a_t U⁺_{r₃}` by column-wise
/// backtracking over integer automorphisms of the Gram matrix, columns in
/// the order `d+1, 1, …, d`. Entries are capped at `entry_bound`; when the
/// cap is below the box-derived bound the count is flagged as a lower
/// bound.
pub fn gamma_in_box(
    form: &QuadraticForm,
    basis: &HyperbolicBasis,
    bx: &BoxSpec,
    entry_bound: i64,
    exec: Execution,
) -> Result<GammaCount> {
    let n = form.dim();
    if n > 4 {
        return Err(Error::Unsupported(format!("Γ enumeration needs d + 1 ≤ 4, got {n}")));
    }
    let iform = form.integral()?;
    let chart = Chart::new(form, basis)?;
    let group = OrthogonalGroup::for_chart(&chart)?;
    let required = required_entry_bounds(&chart, bx);
    let mut lower_bound = false;
    let bounds: Vec<Vec<i64>> = required
        .iter()
        .map(|row| {
            row.iter()
                .map(|&b| {
                    let need = b.floor().min(i64::MAX as f64 / 4.0) as i64;
                    if need > entry_bound {
                        lower_bound = true;
                    }
                    need.min(entry_bound)
                })
                .collect()
        })
        .collect();
    let gram: Vec<Vec<i128>> =
        iform.gram.iter().map(|r| r.iter().map(|&g| g as i128).collect()).collect();
    let mut order = vec![n - 1];
    order.extend(0..n - 1);
    let en = Enumerator { gram, bounds: &bounds, order: order.clone() };
    let (f, f_inv) = (chart.f().clone(), chart.f_inv().clone());
    let lam_lo = bx.t - bx.r2 / 2f64.sqrt();
    let lam_hi = bx.t + bx.r2 / 2f64.sqrt();
    let accept = |cols: &[Vec<i64>]| -> bool {
        let mut gm = DMatrix::<f64>::zeros(n, n);
        for (pos, &j) in order.iter().enumerate() {
            for i in 0..n {
                gm[(i, j)] = cols[pos][i] as f64;
            }
        }
        let g = &f_inv * gm * &f;
        let g00 = g[(0, 0)];
        if !(g00 > 0.0) || g00.ln() < lam_lo - 1e-9 || g00.ln() > lam_hi + 1e-9 {
            return false;
        }
        box_member(&group, &GroupElement::new(g), bx)
    };
    // fork on the first free variable of the first column
    let b0 = (0..n).map(|i| bounds[i][n - 1]).collect::<Vec<_>>();
    let first_var_range: Vec<i64> = {
        let root_axis = (0..n)
            .filter(|&i| en.gram[i][i] != 0)
            .max_by_key(|&i| (b0[i], std::cmp::Reverse(i)));
        let first_loop = (0..n).find(|&i| Some(i) != root_axis).unwrap_or(0);
        (-b0[first_loop]..=b0[first_loop]).collect()
    };
    let firsts: Vec<(Vec<Vec<Vec<i64>>>, u64)> = exec.map(&first_var_range, |&v| {
        let mut evals = 0;
        let cols = en.columns(&[], 0, Some(v), &mut evals);
        (cols.into_iter().map(|c| vec![c]).collect(), evals)
    });
    let mut evaluations: u64 = firsts.iter().map(|(_, e)| e).sum();
    let starts: Vec<Vec<Vec<i64>>> = firsts.into_iter().flat_map(|(c, _)| c).collect();
    let parts = exec.map(&starts, |start| {
        let mut chosen = start.clone();
        let mut evals = 0;
        let (a, h) = en.count_subtree(&mut chosen, &mut evals, &accept);
        (a, h, evals)
    });
    let mut automorphisms = 0;
    let mut count = 0;
    for (a, h, e) in parts {
        automorphisms += a;
        count += h;
        evaluations += e;
    }
    Ok(GammaCount { t: bx.t, count, lower_bound, automorphisms, evaluations })
}

/// Factors of `λ(r) = vol(U⁻_{r₁}) vol(U⁺_{r₃}) ∫_{Z_{r₂}} ρ(z) dz`, each
/// estimated by Monte Carlo in orthonormal exponential coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub u_minus_volume: f64,
    pub u_plus_volume: f64,
    pub z_integral: f64,
    pub value: f64,
    /// Standard error of `value`, propagated from the three factors.
    pub std_err: f64,
}

const MC_CHUNK: u64 = 4096;

/// `∫_{cube} 1_{accept}·weight` over `[−r, r]^k` with its standard error.
fn mc_integral<F>(k: usize, r: f64, n: u64, seed: u64, tag: u64, exec: Execution, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> Option<f64> + Sync + Send,
{
    let chunks: Vec<u64> = (0..n.div_ceil(MC_CHUNK)).collect();
    let sums = exec.map(&chunks, |&c| {
        let mut r_ = rng::stream(seed, tag.wrapping_mul(1 << 32).wrapping_add(c));
        let len = MC_CHUNK.min(n - c * MC_CHUNK);
        let mut x = vec![0.0; k];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            for xi in x.iter_mut() {
                *xi = r * (2.0 * r_.random::<f64>() - 1.0);
            }
            if let Some(w) = f(&x) {
                s1 += w;
                s2 += w * w;
            }
        }
        (s1, s2)
    });
    let s1: f64 = sums.iter().map(|s| s.0).sum();
    let s2: f64 = sums.iter().map(|s| s.1).sum();
    let nf = n as f64;
    let vol = (2.0 * r).powi(k as i32);
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    (vol * mean, vol * (var / nf).sqrt())
}

pub fn lambda_r(group: &OrthogonalGroup, bx: &BoxSpec, n: u64, seed: u64, exec: Execution) -> Result<LambdaEstimate> {
    if bx.r2 > MAX_Z_RADIUS {
        return Err(Error::ChartViolation { residual: bx.r2 });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let ub = group.u_minus_algebra();
    let pb = group.u_plus_algebra();
    let zb = group.z_algebra();
    let ball = |basis: &super::LieBasis, r: f64, tag: u64| {
        mc_integral(basis.dim(), r, n, seed, tag, exec, |c| {
            let u = GroupElement::new(expm(&basis.combine(c)));
            (unipotent_distance(&u) <= r).then_some(1.0)
        })
    };
    let (um, um_e) = ball(&ub, bx.r1, 1);
    let (up, up_e) = ball(&pb, bx.r3, 2);
    let (zi, zi_e) = mc_integral(zb.dim(), bx.r2, n, seed, 3, exec, |c| {
        let z = GroupElement::new(expm(&zb.combine(c)));
        (centralizer_distance(&z) <= bx.r2).then(|| rho(group, &z))
    });
    let value = um * up * zi;
    let rel = ((um_e / um).powi(2) + (up_e / up).powi(2) + (zi_e / zi).powi(2)).sqrt();
    Ok(LambdaEstimate { u_minus_volume: um, u_plus_volume: up, z_integral: zi, value, std_err: value * rel })
}

/// Largest observed `dist/r` over the three factors of `a_{−t}`-normalized
/// products `g₁ a_t g₂`, `gᵢ ∈ G_r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UzavFit {
    pub fitted_l: f64,
    pub samples: usize,
    pub max_u_minus: f64,
    pub max_z: f64,
    pub max_u_plus: f64,
}

pub fn lemma_uzav_fit(group: &OrthogonalGroup, r: f64, t_max: f64, samples: usize, seed: u64) -> Result<UzavFit> {
    if !(r > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("need r > 0 and t_max ≥ 0, got {r}, {t_max}")));
    }
    let (mut mu, mut mz, mut mp) = (0f64, 0f64, 0f64);
    for i in 0..samples {
        let mut s = rng::stream(seed, i as u64);
        let g1 = group.random_near_identity(&mut s, r);
        let g2 = group.random_near_identity(&mut s, r);
        let t = t_max * s.random::<f64>();
        let x = g1.mul(&group.flow(t)).mul(&g2);
        let dec = group.decompose_uzu(&x)?;
        mu = mu.max(unipotent_distance(&group.horospherical(&dec.u_minus.s)) / r);
        mz = mz.max(centralizer_distance(&dec.z.mul(&group.flow(-t))) / r);
        mp = mp.max(unipotent_distance(&dec.u_plus) / r);
    }
    Ok(UzavFit { fitted_l: mu.max(mz).max(mp), samples, max_u_minus: mu, max_z: mz, max_u_plus: mp })
}
