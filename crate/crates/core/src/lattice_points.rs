//! Exact enumeration of integer points on `X = {Q = m}`, either in a norm
//! ball or restricted to a cusp `C(v, ψ)`.
//!
//! All but one coordinate are enumerated; the last one is solved from the
//! quadratic equation by an exact integer square root, so every reported
//! point satisfies `Q(x) = m` exactly. Norm windows are compared exactly
//! against the rational value of the `f64` bound.

use num_integer::Roots;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::approx::{cusp_test, CuspSpec, Direction, PsiSpec, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{IntegerForm, QuadraticForm};

/// Default number of candidate evaluations allowed per call.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;
/// Default widening factor applied to the cusp search box.
pub const DEFAULT_MARGIN: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnumConfig {
    pub budget: u64,
    pub margin: f64,
    pub exec: Execution,
    /// Reject cusp directions with `|Q(v)|` above the boundary tolerance.
    pub require_boundary: bool,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            budget: DEFAULT_BUDGET,
            margin: DEFAULT_MARGIN,
            exec: Execution::default(),
            require_boundary: true,
        }
    }
}

impl EnumConfig {
    pub fn with_exec(exec: Execution) -> Self {
        EnumConfig { exec, ..Self::default() }
    }
}

/// An integer point of `X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub norm: f64,
}

impl LatticePoint {
    fn new(coords: Vec<i64>) -> Self {
        let n2: i128 = coords.iter().map(|&c| c as i128 * c as i128).sum();
        LatticePoint { coords, norm: (n2 as f64).sqrt() }
    }

    pub fn norm_sq(&self) -> i128 {
        self.coords.iter().map(|&c| c as i128 * c as i128).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| c as f64).collect()
    }
}

/// A cusp member together with its membership data.
#[derive(Clone, Debug, PartialEq)]
pub struct HitRecord {
    pub point: LatticePoint,
    /// `‖π(x) − v‖`
    pub direction_error: f64,
    /// `ψ(‖x‖)`
    pub psi_value: f64,
}

impl HitRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "x": self.point.coords,
            "norm": self.point.norm,
            "err": self.direction_error,
            "psi": self.psi_value,
        })
        .to_string()
    }
}

/// `⌊b²⌋` for `b ≥ 0`, exact.
fn floor_sq(b: f64) -> i128 {
    let r = BigRational::from_float(b).expect("finite bound");
    (&r * &r).floor().to_integer().to_i128().expect("bound fits in i128")
}

/// `⌈b²⌉` for `b ≥ 0`, exact.
fn ceil_sq(b: f64) -> i128 {
    let r = BigRational::from_float(b).expect("finite bound");
    (&r * &r).ceil().to_integer().to_i128().expect("bound fits in i128")
}

fn isqrt(n: i128) -> i128 {
    if n <= 0 {
        0
    } else {
        n.sqrt()
    }
}

/// Solutions `w` of `Q(x) = m` in the coordinate `axis`, all other
/// coordinates of `x` held fixed.
#[derive(Clone, Debug)]
struct AxisSolver {
    gram: Vec<Vec<i128>>,
    m: i128,
    axis: usize,
}

enum Roots2 {
    Some([Option<i64>; 2]),
    /// Every `w` solves the equation.
    All,
}

impl AxisSolver {
    fn new(form: &IntegerForm, axis: usize) -> Self {
        let gram = form
            .gram
            .iter()
            .map(|r| r.iter().map(|&g| g as i128).collect())
            .collect();
        AxisSolver { gram, m: form.m as i128, axis }
    }

    /// Picks the highest axis with a nonzero diagonal entry, avoiding `skip`.
    fn choose_axis(form: &IntegerForm, skip: Option<usize>, prefer: &[usize]) -> usize {
        let n = form.dim();
        prefer
            .iter()
            .copied()
            .chain((0..n).rev())
            .find(|&k| Some(k) != skip && form.gram[k][k] != 0)
            .or_else(|| (0..n).rev().find(|&k| Some(k) != skip))
            .unwrap_or(0)
    }

    /// `a w² + 2bw + (c − m) = 0`.
    fn roots(&self, x: &[i64]) -> Roots2 {
        let k = self.axis;
        let a = self.gram[k][k];
        let mut b = 0i128;
        let mut c = 0i128;
        for (i, row) in self.gram.iter().enumerate() {
            if i == k || x[i] == 0 {
                continue;
            }
            let xi = x[i] as i128;
            b += row[k] * xi;
            let mut ri = 0i128;
            for (j, &g) in row.iter().enumerate() {
                if j != k {
                    ri += g * x[j] as i128;
                }
            }
            c += xi * ri;
        }
        let c = c - self.m;
        let to64 = |w: i128| i64::try_from(w).ok();
        if a == 0 {
            if b == 0 {
                return if c == 0 { Roots2::All } else { Roots2::Some([None, None]) };
            }
            let num = -c;
            let den = 2 * b;
            return if num % den == 0 {
                Roots2::Some([to64(num / den), None])
            } else {
                Roots2::Some([None, None])
            };
        }
        let disc = b * b - a * c;
        if disc < 0 {
            return Roots2::Some([None, None]);
        }
        let s = disc.sqrt();
        if s * s != disc {
            return Roots2::Some([None, None]);
        }
        let pick = |num: i128| if num % a == 0 { to64(num / a) } else { None };
        let r1 = pick(-b - s);
        let r2 = if s == 0 { None } else { pick(-b + s) };
        Roots2::Some([r1, r2])
    }
}

fn check_window(t_min: f64, t_max: f64) -> Result<()> {
    if !(t_min >= 0.0 && t_max.is_finite() && t_min <= t_max) {
        return Err(Error::InvalidArgument(format!("bad norm window [{t_min}, {t_max}]")));
    }
    Ok(())
}

/// Every `x ∈ ℤ^{d+1}` with `Q(x) = m` and `‖x‖ ≤ t`, in lexicographic
/// order.
pub fn enumerate_all(form: &QuadraticForm, t: f64, cfg: &EnumConfig) -> Result<Vec<LatticePoint>> {
    enumerate_ball(form, 0.0, t, cfg)
}

/// Every `x` with `Q(x) = m` and `t_min ≤ ‖x‖ ≤ t_max`, in lexicographic
/// order.
pub fn enumerate_ball(
    form: &QuadraticForm,
    t_min: f64,
    t_max: f64,
    cfg: &EnumConfig,
) -> Result<Vec<LatticePoint>> {
    check_window(t_min, t_max)?;
    let iform = form.integral()?;
    let n = iform.dim();
    let box_side = 2.0 * t_max.floor() + 1.0;
    if box_side.powi(n as i32 - 1) > cfg.budget as f64 {
        return Err(Error::BudgetExceeded { budget: cfg.budget });
    }
    let hi2 = floor_sq(t_max);
    let lo2 = ceil_sq(t_min);
    let solver = AxisSolver::new(&iform, AxisSolver::choose_axis(&iform, None, &[]));
    let free: Vec<usize> = (0..n).filter(|&i| i != solver.axis).collect();
    let r = isqrt(hi2) as i64;
    let first: Vec<i64> = (-r..=r).collect();
    let slices = cfg.exec.map(&first, |&x0| {
        let mut out = Vec::new();
        let mut x = vec![0i64; n];
        x[free[0]] = x0;
        let rem = hi2 - x0 as i128 * x0 as i128;
        ball_walk(&solver, &free, 1, &mut x, rem, hi2, lo2, &mut out);
        out
    });
    let mut pts: Vec<Vec<i64>> = slices.into_iter().flatten().collect();
    pts.sort_unstable();
    Ok(pts.into_iter().map(LatticePoint::new).collect())
}

#[allow(clippy::too_many_arguments)]
fn ball_walk(
    solver: &AxisSolver,
    free: &[usize],
    idx: usize,
    x: &mut Vec<i64>,
    rem: i128,
    hi2: i128,
    lo2: i128,
    out: &mut Vec<Vec<i64>>,
) {
    if idx == free.len() {
        let k = solver.axis;
        let mut push = |w: i64, x: &mut Vec<i64>| {
            let w2 = w as i128 * w as i128;
            if w2 <= rem && hi2 - rem + w2 >= lo2 {
                x[k] = w;
                out.push(x.clone());
                x[k] = 0;
            }
        };
        match solver.roots(x) {
            Roots2::Some(ws) => ws.into_iter().flatten().for_each(|w| push(w, x)),
            Roots2::All => {
                let r = isqrt(rem) as i64;
                (-r..=r).for_each(|w| push(w, x));
            }
        }
        return;
    }
    let i = free[idx];
    let r = isqrt(rem) as i64;
    for xi in -r..=r {
        x[i] = xi;
        ball_walk(solver, free, idx + 1, x, rem - xi as i128 * xi as i128, hi2, lo2, out);
    }
    x[i] = 0;
}

/// The slab of the cusp search belonging to one value of the pivot
/// coordinate.
#[derive(Clone, Debug)]
struct Slice {
    n: i64,
    /// Exact window for `‖x‖²`.
    lo2: i128,
    hi2: i128,
    /// Inclusive integer ranges for each free (enumerated) axis.
    ranges: Vec<(usize, i64, i64)>,
}

impl Slice {
    fn size(&self) -> f64 {
        self.ranges.iter().map(|&(_, lo, hi)| (hi - lo + 1).max(0) as f64).product()
    }
}

/// Dyadic norm shells covering `[t_min, t_max]`, each with its real range
/// and its disjoint exact window for `‖x‖²`.
fn shells(t_min: f64, t_max: f64) -> Vec<(f64, f64, i128, i128)> {
    let mut out = Vec::new();
    // nonzero integer vectors have norm at least 1
    let mut lo = t_min.max(0.5);
    let mut lo2 = ceil_sq(t_min);
    let top2 = floor_sq(t_max);
    if lo > t_max {
        return out;
    }
    loop {
        let hi = (2.0 * lo).min(t_max);
        let hi2 = if hi >= t_max { top2 } else { floor_sq(hi) };
        if hi2 >= lo2 {
            out.push((lo, hi, lo2, hi2));
        }
        if hi >= t_max {
            return out;
        }
        lo2 = lo2.max(hi2 + 1);
        lo = hi;
    }
}

/// Plan for a cusp search: pivot axis, solve axis and per-slice boxes.
#[derive(Clone, Debug)]
struct CuspPlan {
    pivot: usize,
    solve: usize,
    slices: Vec<Slice>,
}

impl CuspPlan {
    fn new(
        iform: &IntegerForm,
        v: &[f64],
        psi: &PsiSpec,
        t_min: f64,
        t_max: f64,
        margin: f64,
    ) -> CuspPlan {
        let n = v.len();
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let mut by_size: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();
        by_size.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
        let solve = AxisSolver::choose_axis(iform, Some(pivot), &by_size);
        let free: Vec<usize> = (0..n).filter(|&i| i != pivot && i != solve).collect();

        let vj = v[pivot];
        let a = vj.abs();
        let cap = t_max.floor() as i64;
        let mut slices = Vec::new();
        for (rho_lo, rho_hi, lo2, hi2) in shells(t_min, t_max) {
            let delta_k = psi.sup_on(rho_lo, rho_hi);
            let n_max = (rho_hi * (a + delta_k)).ceil() as i64 + 1;
            let n_min = if a > delta_k { ((rho_lo * (a - delta_k)).floor() as i64 - 1).max(0) } else { 0 };
            let values = (n_min..=n_max).flat_map(|k| if k == 0 { vec![0] } else { vec![-k, k] });
            for nn in values {
                let abs_n = (nn as f64).abs();
                let mut r_lo = rho_lo;
                let mut r_hi = rho_hi;
                let mut delta = delta_k;
                let mut empty = false;
                for _ in 0..3 {
                    if a > delta {
                        if nn == 0 || (nn > 0) != (vj > 0.0) {
                            empty = true;
                            break;
                        }
                        r_lo = r_lo.max(abs_n / (a + delta));
                        r_hi = r_hi.min(abs_n / (a - delta));
                    } else {
                        r_lo = r_lo.max(abs_n / (a + delta));
                    }
                    if r_lo > r_hi {
                        empty = true;
                        break;
                    }
                    delta = psi.sup_on(r_lo, r_hi);
                }
                if empty {
                    continue;
                }
                // the box must hold every x with ‖x‖ ∈ [r_lo, r_hi]; widen
                // the r-range by a relative step against rounding
                let r_lo = r_lo * (1.0 - 1e-12);
                let r_hi = r_hi * (1.0 + 1e-12);
                let width = r_hi * delta * margin;
                let ranges = free
                    .iter()
                    .map(|&i| {
                        let (p, q) = (r_lo * v[i], r_hi * v[i]);
                        let lo = (p.min(q) - width).floor() as i64;
                        let hi = (p.max(q) + width).ceil() as i64;
                        // no coordinate can exceed the norm
                        (i, lo.max(-cap), hi.min(cap))
                    })
                    .collect();
                slices.push(Slice { n: nn, lo2, hi2, ranges });
            }
        }
        CuspPlan { pivot, solve, slices }
    }

    fn candidates(&self) -> f64 {
        self.slices.iter().map(Slice::size).sum()
    }
}

fn check_direction(form: &QuadraticForm, v: &Direction, require_boundary: bool) -> Result<()> {
    if v.dim() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), found: v.dim() });
    }
    let q = form.evaluate_f64(v.as_slice());
    if require_boundary && q.abs() > BOUNDARY_TOL {
        return Err(Error::NotOnBoundary { q_value: q });
    }
    Ok(())
}

/// The integer points `x` of `X` with `t_min ≤ ‖x‖ ≤ t_max` and
/// `‖π(x) − v‖ < ψ(‖x‖)`, in lexicographic order.
///
/// Each pivot slice `x_j = n` determines an interval of possible norms and
/// hence a box for the free coordinates that contains the cusp's
/// cross-section; the box is widened by `cfg.margin` and every candidate
/// passes through the exact membership test.
pub fn enumerate_in_cusp(
    form: &QuadraticForm,
    v: &Direction,
    psi: &PsiSpec,
    t_min: f64,
    t_max: f64,
    cfg: &EnumConfig,
) -> Result<Vec<HitRecord>> {
    check_window(t_min, t_max)?;
    check_direction(form, v, cfg.require_boundary)?;
    let iform = form.integral()?;
    let plan = CuspPlan::new(&iform, v.as_slice(), psi, t_min, t_max, cfg.margin);
    if plan.candidates() > cfg.budget as f64 {
        return Err(Error::BudgetExceeded { budget: cfg.budget });
    }
    let solver = AxisSolver::new(&iform, plan.solve);
    let spec = CuspSpec::open(v.clone(), psi.clone());
    let n = form.dim();
    let slices = cfg.exec.try_map(&plan.slices, |slice| -> Result<Vec<HitRecord>> {
        let mut out = Vec::new();
        let mut x = vec![0i64; n];
        x[plan.pivot] = slice.n;
        let mut pts = Vec::new();
        let rem = slice.hi2 - slice.n as i128 * slice.n as i128;
        if rem < 0 {
            return Ok(out);
        }
        box_walk(&solver, &slice.ranges, 0, &mut x, rem, slice.hi2, slice.lo2, &mut pts);
        for p in pts {
            let lp = LatticePoint::new(p);
            let t = cusp_test(&spec, &lp.as_f64())?;
            if t.member {
                out.push(HitRecord { point: lp, direction_error: t.error, psi_value: t.psi });
            }
        }
        Ok(out)
    })?;
    let mut hits: Vec<HitRecord> = slices.into_iter().flatten().collect();
    hits.sort_unstable_by(|a, b| a.point.coords.cmp(&b.point.coords));
    Ok(hits)
}

#[allow(clippy::too_many_arguments)]
fn box_walk(
    solver: &AxisSolver,
    ranges: &[(usize, i64, i64)],
    idx: usize,
    x: &mut Vec<i64>,
    rem: i128,
    hi2: i128,
    lo2: i128,
    out: &mut Vec<Vec<i64>>,
) {
    if idx == ranges.len() {
        let k = solver.axis;
        let mut push = |w: i64, x: &mut Vec<i64>| {
            let w2 = w as i128 * w as i128;
            if w2 <= rem && hi2 - rem + w2 >= lo2 {
                x[k] = w;
                out.push(x.clone());
                x[k] = 0;
            }
        };
        match solver.roots(x) {
            Roots2::Some(ws) => ws.into_iter().flatten().for_each(|w| push(w, x)),
            Roots2::All => {
                let r = isqrt(rem) as i64;
                (-r..=r).for_each(|w| push(w, x));
            }
        }
        return;
    }
    let (i, lo, hi) = ranges[idx];
    let r = isqrt(rem) as i64;
    for xi in lo.max(-r)..=hi.min(r) {
        x[i] = xi;
        box_walk(solver, ranges, idx + 1, x, rem - xi as i128 * xi as i128, hi2, lo2, out);
    }
    x[i] = 0;
}

/// Count and norm statistics of a hit stream.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct HitSummary {
    pub count: usize,
    pub min_norm: Option<f64>,
    pub max_norm: Option<f64>,
    pub log_norms: Vec<f64>,
}

impl HitSummary {
    pub const CSV_HEADER: &'static str = "count,min_norm,max_norm";

    pub fn csv_row(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!("{},{},{}", self.count, f(self.min_norm), f(self.max_norm))
    }
}

pub fn count_hits<'a, I>(hits: I) -> HitSummary
where
    I: IntoIterator<Item = &'a HitRecord>,
{
    let mut s = HitSummary::default();
    for h in hits {
        let r = h.point.norm;
        s.count += 1;
        s.min_norm = Some(s.min_norm.map_or(r, |m| m.min(r)));
        s.max_norm = Some(s.max_norm.map_or(r, |m| m.max(r)));
        s.log_norms.push(r.ln());
    }
    s
}

/// Number of records with `‖x‖ ≤ t` for each checkpoint `t`.
pub fn counts_at(hits: &[HitRecord], checkpoints: &[f64]) -> Vec<usize> {
    let his: Vec<i128> = checkpoints.iter().map(|&t| floor_sq(t.max(0.0))).collect();
    his.iter()
        .map(|&h| hits.iter().filter(|r| r.point.norm_sq() <= h).count())
        .collect()
}

/// Whether `x` lies on `X`, checked exactly.
pub fn on_variety(form: &IntegerForm, x: &[i64]) -> bool {
    form.eval(x) == form.m as i128
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::rat;

    fn lorentz() -> QuadraticForm {
        QuadraticForm::from_diag(&[1, 1, 1, -1], rat(1)).unwrap()
    }

    fn seq() -> EnumConfig {
        EnumConfig::with_exec(Execution::Sequential)
    }

    fn brute(form: &QuadraticForm, t: f64) -> Vec<Vec<i64>> {
        let f = form.integral().unwrap();
        let r = t.floor() as i64;
        let n = form.dim();
        let mut out = Vec::new();
        let mut x = vec![-r; n];
        loop {
            let n2: i64 = x.iter().map(|c| c * c).sum();
            if (n2 as f64) <= t * t && on_variety(&f, &x) {
                out.push(x.clone());
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if x[i] < r {
                    x[i] += 1;
                    break;
                }
                x[i] = -r;
            }
        }
    }

    #[test]
    fn small_counts() {
        let q = lorentz();
        assert_eq!(enumerate_all(&q, 1.5, &seq()).unwrap().len(), 6);
        assert_eq!(enumerate_all(&q, 2.0, &seq()).unwrap().len(), 30);
        assert!(enumerate_all(&q, 0.0, &seq()).unwrap().is_empty());
    }

    #[test]
    fn agrees_with_box_search() {
        let forms = [
            lorentz(),
            QuadraticForm::from_diag(&[1, 1, -1, -1], rat(3)).unwrap(),
            QuadraticForm::from_diag(&[2, 1, -3], rat(-1)).unwrap(),
            QuadraticForm::from_gram(
                vec![
                    vec![rat(0), rat(1), rat(0)],
                    vec![rat(1), rat(0), rat(0)],
                    vec![rat(0), rat(0), rat(1)],
                ],
                rat(1),
            )
            .unwrap(),
        ];
        for q in &forms {
            let got: Vec<Vec<i64>> =
                enumerate_all(q, 7.5, &seq()).unwrap().into_iter().map(|p| p.coords).collect();
            assert_eq!(got, brute(q, 7.5), "{q}");
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let q = lorentz();
        let a = enumerate_all(&q, 25.0, &seq()).unwrap();
        let b = enumerate_all(&q, 25.0, &EnumConfig::with_exec(Execution::Parallel)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refuses_bad_input() {
        let q = lorentz();
        let tiny = EnumConfig { budget: 100, ..seq() };
        assert_eq!(enumerate_all(&q, 50.0, &tiny), Err(Error::BudgetExceeded { budget: 100 }));
        let half = QuadraticForm::from_diag(&[1, 1, 1, -1], crate::forms::ratio(1, 2)).unwrap();
        assert!(matches!(enumerate_all(&half, 3.0, &seq()), Err(Error::NonIntegral)));
        let v = Direction::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let psi = PsiSpec::constant(0.1).unwrap();
        assert!(matches!(
            enumerate_in_cusp(&q, &v, &psi, 1.0, 10.0, &seq()),
            Err(Error::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn ray_point_is_a_hit() {
        let q = lorentz();
        let s = 1.0 / 3f64.sqrt();
        let v = Direction::new(vec![s, s, 0.0, s]).unwrap();
        let psi = PsiSpec::constant(0.1).unwrap();
        let cfg = EnumConfig { require_boundary: false, ..seq() };
        let hits = enumerate_in_cusp(&q, &v, &psi, 1.0, 2.0, &cfg).unwrap();
        let h = hits.iter().find(|h| h.point.coords == vec![1, 1, 0, 1]).unwrap();
        assert!(h.direction_error < 1e-15);
    }

    #[test]
    fn excluded_point() {
        let q = lorentz();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = Direction::new(vec![h, 0.0, 0.0, h]).unwrap();
        let psi = PsiSpec::power_law(1.0, 1.0).unwrap();
        let hits = enumerate_in_cusp(&q, &v, &psi, 1.0, 2.0, &seq()).unwrap();
        assert!(hits.iter().all(|h| h.point.coords != vec![1, 1, 0, 1]));
    }

    #[test]
    fn cusp_matches_filtered_ball() {
        let q = lorentz();
        let all = enumerate_all(&q, 60.0, &seq()).unwrap();
        let dirs = [
            [0.6, 0.0, 0.8, 1.0],
            [1.0, 2.0, 2.0, -3.0],
            [0.3, -0.4, 0.0, 0.5],
            [0.0, 0.0, -1.0, -1.0],
            [0.28, 0.96, 0.0, 1.0],
        ];
        let psis = [
            PsiSpec::power_law(1.0, 0.5).unwrap(),
            PsiSpec::power_law(2.0, 1.0).unwrap(),
            PsiSpec::constant(0.3).unwrap(),
        ];
        for d in dirs {
            let n = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            let v = Direction::new(d.iter().map(|a| a / n).collect()).unwrap();
            let v = Direction::boundary(v.as_slice().to_vec(), &q).unwrap();
            for psi in &psis {
                let spec = CuspSpec::open(v.clone(), psi.clone());
                let want: Vec<Vec<i64>> = all
                    .iter()
                    .filter(|p| p.norm >= 1.0)
                    .filter(|p| crate::approx::cusp_member(&spec, &p.as_f64()).unwrap())
                    .map(|p| p.coords.clone())
                    .collect();
                let got: Vec<Vec<i64>> = enumerate_in_cusp(&q, &v, psi, 1.0, 60.0, &seq())
                    .unwrap()
                    .into_iter()
                    .map(|h| h.point.coords)
                    .collect();
                assert_eq!(got, want, "v = {d:?}, ψ = {psi}");
            }
        }
    }

    #[test]
    fn summaries() {
        assert_eq!(count_hits(&[]).count, 0);
        let q = lorentz();
        let v = Direction::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let spec = CuspSpec::open(v, PsiSpec::constant(10.0).unwrap());
        let hits: Vec<HitRecord> = enumerate_all(&q, 1.5, &seq())
            .unwrap()
            .into_iter()
            .map(|p| {
                let t = cusp_test(&spec, &p.as_f64()).unwrap();
                assert!(t.member);
                HitRecord { point: p, direction_error: t.error, psi_value: t.psi }
            })
            .collect();
        let s = count_hits(&hits);
        assert_eq!(s.count, 6);
        assert_eq!(s.min_norm, Some(1.0));
        assert_eq!(s.csv_row(), "6,1,1");
        assert_eq!(counts_at(&hits, &[0.5, 1.0]), vec![0, 6]);
        let line = hits[0].to_json_line();
        let parsed: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(parsed["x"], serde_json::json!([-1, 0, 0, 0]));
    }

    #[test]
    fn exact_window_edges() {
        assert_eq!(floor_sq(2f64.sqrt()), 2);
        assert_eq!(ceil_sq(1.5), 3);
        assert_eq!(floor_sq(1.5), 2);
    }
}
