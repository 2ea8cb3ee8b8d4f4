//! The regions `𝒰_t(ψ)` and their volumes.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::approx::PsiSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::chart::{Chart, MAX_ABS_T};
use crate::hp::{in_guard_band, Hp};
use crate::quadrature::{adaptive_simpson, integrate_pieces, sign_changes};
use crate::rng;

/// Volume of the unit ball in `ℝ^k`.
pub fn omega(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * omega(k - 2),
    }
}

/// `ln(e^{2t}ψ(e^t))`.
fn ln_k(psi: &PsiSpec, t: f64) -> f64 {
    2.0 * t + psi.ln_value_at_exp(t)
}

/// `t ∈ 𝒯`, i.e. `t > 0` and `e^{2t}ψ(e^t) ≤ |m|`.
pub fn in_exceptional_set(t: f64, psi: &PsiSpec, m: f64) -> bool {
    t > 0.0 && ln_k(psi, t) <= m.abs().ln()
}

/// Which inequalities define the region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// Both constraints of `𝒰_t(ψ)`.
    Full,
    /// Only `‖s‖ ≤ e^tψ(e^t)` (the region `𝒰̃_t(ψ)`).
    Ball,
}

/// `𝒰_t(ψ) = {s : |m − ‖s₁‖² + ‖s₂‖²|/2 ≤ e^{2t}ψ(e^t), ‖s‖ ≤ e^tψ(e^t)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateRegion {
    pub t: f64,
    pub psi: PsiSpec,
    pub d: usize,
    pub p: usize,
    pub m: f64,
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

const MC_CHUNK: u64 = 1 << 16;

impl CoordinateRegion {
    pub fn new(t: f64, psi: PsiSpec, d: usize, p: usize, m: f64) -> Result<Self> {
        if d < 2 || p < 1 || p > d {
            return Err(Error::InvalidArgument(format!("need 1 ≤ p ≤ d, d ≥ 2; got d={d}, p={p}")));
        }
        if !(t.abs() <= MAX_ABS_T) {
            return Err(Error::OutsideDomain(format!("|t| = {} exceeds {MAX_ABS_T}", t.abs())));
        }
        if m == 0.0 {
            return Err(Error::ZeroTarget);
        }
        Ok(CoordinateRegion { t, psi, d, p, m })
    }

    pub fn for_chart(chart: &Chart, t: f64, psi: PsiSpec) -> Result<Self> {
        Self::new(t, psi, chart.d(), chart.p(), chart.m())
    }

    /// `R = e^tψ(e^t)`.
    pub fn radius(&self) -> f64 {
        (self.t + self.psi.ln_value_at_exp(self.t)).exp()
    }

    /// `K = e^{2t}ψ(e^t)`.
    pub fn k(&self) -> f64 {
        ln_k(&self.psi, self.t).exp()
    }

    pub fn in_exceptional_set(&self) -> bool {
        in_exceptional_set(self.t, &self.psi, self.m)
    }

    /// Whether `vol = ω_{d−1}R^{d−1}` is known to hold: `e^{2t}ψ(e^t) > |m|`
    /// and `ψ(e^t) ≤ 1`.
    pub fn exact_formula_valid(&self) -> bool {
        ln_k(&self.psi, self.t) > self.m.abs().ln() && self.psi.ln_value_at_exp(self.t) <= 0.0
    }

    fn split(&self, s: &[f64]) -> (f64, f64) {
        let k1 = self.p - 1;
        (s[..k1].iter().map(|x| x * x).sum(), s[k1..].iter().map(|x| x * x).sum())
    }

    pub fn member(&self, s: &[f64]) -> Result<bool> {
        self.member_with(s, Predicate::Full)
    }

    pub fn member_with(&self, s: &[f64], pred: Predicate) -> Result<bool> {
        if s.len() != self.d - 1 {
            return Err(Error::DimensionMismatch { expected: self.d - 1, found: s.len() });
        }
        let (a, b) = self.split(s);
        let (r, k) = (self.radius(), self.k());
        let lhs1 = (self.m - a + b).abs() / 2.0;
        let lhs2 = a + b;
        let r2 = r * r;
        let need1 = pred == Predicate::Full;
        let band = (need1 && in_guard_band(lhs1, k)) || in_guard_band(lhs2, r2);
        if !band {
            return Ok((!need1 || lhs1 <= k) && lhs2 <= r2);
        }
        let mut hp = Hp::new();
        let et = hp.exp(&hp.f(self.t));
        let psi = self.psi.value_hp(&mut hp, &et);
        let rh = hp.mul(&et, &psi);
        let kh = hp.mul(&rh, &et);
        let k1 = self.p - 1;
        let sh: Vec<_> = s.iter().map(|x| hp.f(*x)).collect();
        let ah = hp.sum_sq(&sh[..k1]);
        let bh = hp.sum_sq(&sh[k1..]);
        let q = hp.add(&hp.sub(&hp.f(self.m), &ah), &bh);
        let q = q.abs();
        let twice_k = hp.add(&kh, &kh);
        let ok1 = !need1 || hp.le(&q, &twice_k);
        let ok2 = hp.le(&hp.add(&ah, &bh), &hp.mul(&rh, &rh));
        Ok(ok1 && ok2)
    }

    /// `ω_{d−1}(e^tψ(e^t))^{d−1}`, only inside its validity domain.
    pub fn exact_volume(&self) -> Result<f64> {
        if !self.exact_formula_valid() {
            return Err(Error::OutsideDomain(format!(
                "closed form needs e^{{2t}}ψ(e^t) > |m| and ψ(e^t) ≤ 1 (t = {})",
                self.t
            )));
        }
        Ok(omega(self.d - 1) * self.radius().powi(self.d as i32 - 1))
    }

    /// Monte-Carlo volume over the box `[−R, R]^{d−1}`. Samples are drawn in
    /// fixed-size chunks, each from its own seeded stream.
    pub fn mc_volume(&self, seed: u64, n: u64, pred: Predicate, exec: Execution) -> Result<McEstimate> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let r = self.radius();
        let k = self.d - 1;
        let chunks: Vec<u64> = (0..n.div_ceil(MC_CHUNK)).collect();
        let hits = exec.try_map(&chunks, |&c| -> Result<u64> {
            let mut g = rng::stream(seed, c);
            let count = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut s = vec![0.0; k];
            let mut h = 0u64;
            for _ in 0..count {
                for x in s.iter_mut() {
                    *x = g.random_range(-r..=r);
                }
                if self.member_with(&s, pred)? {
                    h += 1;
                }
            }
            Ok(h)
        })?;
        let hits: u64 = hits.into_iter().sum();
        let frac = hits as f64 / n as f64;
        let box_vol = (2.0 * r).powi(k as i32);
        Ok(McEstimate {
            value: box_vol * frac,
            stderr: box_vol * (frac * (1.0 - frac) / n as f64).sqrt(),
            samples: n,
        })
    }

    /// Volume of the full region by reduction to a one-dimensional integral
    /// over `ρ = ‖s₁‖`; the inner integral over `s₂` is in closed form.
    pub fn radial_volume(&self) -> Result<f64> {
        let k1 = self.p - 1;
        let k2 = self.d - self.p;
        let r = self.radius();
        let r2 = r * r;
        let kk = self.k();
        let m = self.m;
        let inner = |a: f64| -> f64 {
            let lo = (a - m - 2.0 * kk).max(0.0);
            let hi = (r2 - a).min(a - m + 2.0 * kk);
            if k2 == 0 {
                if lo == 0.0 && hi >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else if hi > lo {
                let h = k2 as f64 / 2.0;
                omega(k2) * (hi.powf(h) - lo.powf(h))
            } else {
                0.0
            }
        };
        if k1 == 0 {
            return Ok(inner(0.0));
        }
        let area = k1 as f64 * omega(k1);
        let f = |rho: f64| area * rho.powi(k1 as i32 - 1) * inner(rho * rho);
        let breaks: Vec<f64> = [
            m + 2.0 * kk,
            m - 2.0 * kk,
            (r2 + m - 2.0 * kk) / 2.0,
            (r2 + m + 2.0 * kk) / 2.0,
        ]
        .iter()
        .filter(|&&a| a > 0.0 && a < r2)
        .map(|a| a.sqrt())
        .collect();
        integrate_pieces(&f, 0.0, r, &breaks, 1e-11)
    }

    /// The exact formula where it is valid, the radial reduction elsewhere.
    pub fn volume(&self) -> Result<(f64, VolumeMethod)> {
        if self.exact_formula_valid() {
            Ok((self.exact_volume()?, VolumeMethod::Exact))
        } else {
            Ok((self.radial_volume()?, VolumeMethod::Radial))
        }
    }
}

/// How a region volume was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMethod {
    Exact,
    Radial,
    MonteCarlo,
}

impl std::fmt::Display for VolumeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VolumeMethod::Exact => "exact",
            VolumeMethod::Radial => "radial",
            VolumeMethod::MonteCarlo => "montecarlo",
        })
    }
}

/// `vol(𝒰_t(ψ))` as a free function.
pub fn region_volume_radial(t: f64, psi: &PsiSpec, d: usize, p: usize, m: f64) -> Result<f64> {
    CoordinateRegion::new(t, psi.clone(), d, p, m)?.radial_volume()
}

/// `∫_{t₀}^{t₁} vol(𝒰_t(ψ)) dt`, split where the integrand has kinks.
pub fn cusp_volume(psi: &PsiSpec, t0: f64, t1: f64, d: usize, p: usize, m: f64) -> Result<f64> {
    if t0 == t1 {
        return Ok(0.0);
    }
    if !(t0 < t1) {
        return Err(Error::InvalidArgument(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    if t0.abs() > MAX_ABS_T || t1.abs() > MAX_ABS_T {
        return Err(Error::OutsideDomain(format!("|t| exceeds {MAX_ABS_T}")));
    }
    CoordinateRegion::new(t0, psi.clone(), d, p, m)?;
    let vol = |t: f64| -> f64 {
        CoordinateRegion::new(t, psi.clone(), d, p, m)
            .and_then(|r| r.volume())
            .map(|v| v.0)
            .unwrap_or(f64::NAN)
    };
    let rk = |t: f64| {
        let r = (t + psi.ln_value_at_exp(t)).exp();
        (r * r, ln_k(psi, t).exp())
    };
    let kinks: Vec<Box<dyn Fn(f64) -> f64>> = vec![
        Box::new(|t| ln_k(psi, t) - m.abs().ln()),
        Box::new(|t| psi.ln_value_at_exp(t)),
        Box::new(|t| {
            let (r2, k) = rk(t);
            m + 2.0 * k - r2
        }),
        Box::new(|t| m - 2.0 * rk(t).1),
        Box::new(|t| m + 2.0 * rk(t).1),
        Box::new(|t| {
            let (r2, k) = rk(t);
            r2 + m - 2.0 * k
        }),
        Box::new(|t| {
            let (r2, k) = rk(t);
            m - 2.0 * k - r2
        }),
        Box::new(|t| {
            let (r2, k) = rk(t);
            m - 2.0 * k + r2
        }),
    ];
    let mut breaks = Vec::new();
    for g in &kinks {
        breaks.extend(sign_changes(g, t0, t1, 2000));
    }
    let v = integrate_pieces(&vol, t0, t1, &breaks, 1e-8)?;
    if !v.is_finite() {
        return Err(Error::NoConvergence { iterations: 0, residual: f64::NAN });
    }
    Ok(v)
}

/// The bound on the exceptional part: `∫_{𝒯} (e^tψ(e^t))^{d−1} dt` against
/// `|m|^{d−1} ∫_{𝒯} e^{−(d−1)t} dt`, both over `𝒯 ∩ (0, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailCheck {
    pub integral: f64,
    pub bound: f64,
    /// `|m|^{d−1}/(d−1)`, the bound over all of `(0, ∞)`.
    pub total_bound: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.integral <= self.bound * (1.0 + 1e-9) && self.bound <= self.total_bound * (1.0 + 1e-9)
    }
}

pub fn exceptional_tail(psi: &PsiSpec, d: usize, m: f64, t_max: f64) -> Result<TailCheck> {
    if !(t_max > 0.0 && t_max <= MAX_ABS_T) {
        return Err(Error::InvalidArgument(format!("bad t_max {t_max}")));
    }
    let k = (d - 1) as f64;
    let g = |t: f64| ln_k(psi, t) - m.abs().ln();
    let mut pts = vec![0.0];
    pts.extend(sign_changes(&g, 0.0, t_max, 20_000));
    pts.push(t_max);
    let mut integral = 0.0;
    let mut exp_part = 0.0;
    for w in pts.windows(2) {
        let mid = (w[0] + w[1]) / 2.0;
        if g(mid) > 0.0 {
            continue;
        }
        let f = |t: f64| (k * (t + psi.ln_value_at_exp(t))).exp();
        let scale = f(w[0]).max(f(w[1])).max(f(mid)).max(f64::MIN_POSITIVE);
        integral += adaptive_simpson(&f, w[0], w[1], 1e-12 * scale)?;
        exp_part += ((-k * w[0]).exp() - (-k * w[1]).exp()) / k;
    }
    let mk = m.abs().powf(k);
    Ok(TailCheck { integral, bound: mk * exp_part, total_bound: mk / k })
}

/// The constant `c` with
/// `⋃ a_t u(𝒰_t(c⁻¹ψ)) w₀ ⊂ D_T(f̄₁, ψ) ⊂ ⋃ a_t u(𝒰_t(cψ)) w₀`:
/// the norm-equivalence constant of `f₂, …, f_{d+1}` times the cost of
/// rescaling `ψ` by `‖f₁‖`.
pub fn sandwich_constant(chart: &Chart, psi: &PsiSpec) -> f64 {
    let n = chart.dim();
    let f = chart.f();
    let tail: DMatrix<f64> = f.columns(1, n - 1).into_owned();
    let sv = tail.svd(false, false).singular_values;
    let c2 = (2f64.sqrt() * sv.max()).max(1.0 / sv.min());
    let h = chart.f1_norm();
    let steps = h.log2().abs().ceil().max(1.0);
    let ch = psi.qc_constant().powf(steps);
    c2 * ch * h.max(1.0 / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn region(t: f64, psi: PsiSpec, d: usize, p: usize) -> CoordinateRegion {
        CoordinateRegion::new(t, psi, d, p, 1.0).unwrap()
    }

    #[test]
    fn unit_balls() {
        assert_eq!(omega(2), PI);
        assert!((omega(3) - 4.0 / 3.0 * PI).abs() < 1e-15);
        assert!((omega(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn membership_examples() {
        // t = ln 10, ψ ≡ 0.1: R = 1, K = 10
        let r = region(10f64.ln(), PsiSpec::constant(0.1).unwrap(), 3, 3);
        assert!((r.k() - 10.0).abs() < 1e-12);
        assert!(r.member(&[0.0, 0.0]).unwrap());
        let big = r.radius() * (1.0 + 1e-6);
        assert!(!r.member(&[big, 0.0]).unwrap());
        assert!(r.exact_formula_valid());
        for s in [[0.3, 0.2], [0.9, -0.1], [0.0, 0.99]] {
            assert_eq!(r.member(&s).unwrap(), r.member_with(&s, Predicate::Ball).unwrap());
        }
    }

    #[test]
    fn exact_volume_examples() {
        // ψ(t) = ε/t: R = ε
        let r = region(3.0, PsiSpec::power_law(0.5, 1.0).unwrap(), 3, 3);
        assert!((r.exact_volume().unwrap() - PI * 0.25).abs() < 1e-14);
        let r = region(3.0, PsiSpec::power_law(1.0, 1.0).unwrap(), 4, 3);
        assert!((r.exact_volume().unwrap() - 4.0 / 3.0 * PI).abs() < 1e-13);
        let deep = region(0.1, PsiSpec::power_law(0.01, 1.0).unwrap(), 3, 3);
        assert!(deep.in_exceptional_set());
        assert!(deep.exact_volume().is_err());
    }

    #[test]
    fn radial_matches_exact_in_domain() {
        for (d, p) in [(3, 3), (3, 2), (4, 3), (4, 2), (5, 3)] {
            let r = region(2.5, PsiSpec::power_law(0.7, 1.2).unwrap(), d, p);
            let e = r.exact_volume().unwrap();
            let q = r.radial_volume().unwrap();
            assert!((e - q).abs() < 1e-9 * e, "d={d} p={p}: {e} vs {q}");
        }
    }

    #[test]
    fn radial_matches_monte_carlo_outside_domain() {
        for (t, d, p) in [(0.2, 3, 3), (0.2, 3, 2), (0.1, 4, 2), (0.0, 4, 3)] {
            let r = CoordinateRegion::new(t, PsiSpec::constant(0.6).unwrap(), d, p, 1.0).unwrap();
            assert!(!r.exact_formula_valid());
            let q = r.radial_volume().unwrap();
            let mc = r.mc_volume(11, 200_000, Predicate::Full, Execution::Parallel).unwrap();
            assert!((q - mc.value).abs() < 4.0 * mc.stderr + 1e-12, "{q} vs {mc:?}");
        }
    }

    #[test]
    fn monte_carlo_cases() {
        let r = region(2.0, PsiSpec::power_law(0.8, 1.0).unwrap(), 3, 3);
        let mc = r.mc_volume(3, 100_000, Predicate::Ball, Execution::Sequential).unwrap();
        assert!((mc.value - PI * 0.64).abs() < 3.0 * mc.stderr);
        let again = r.mc_volume(3, 100_000, Predicate::Ball, Execution::Parallel).unwrap();
        assert_eq!(mc, again);
        let deep = CoordinateRegion::new(0.5, PsiSpec::power_law(0.01, 1.0).unwrap(), 3, 3, 1.0)
            .unwrap();
        let z = deep.mc_volume(5, 10_000, Predicate::Full, Execution::Sequential).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn cusp_volume_examples() {
        let eps: f64 = 0.5;
        let v = cusp_volume(&PsiSpec::power_law(eps, 1.0).unwrap(), 2.0, 6.0, 3, 3, 1.0).unwrap();
        assert!((v - PI * eps * eps * 4.0).abs() < 1e-8 * v);
        let c = cusp_volume(&PsiSpec::constant(eps).unwrap(), 1.0, 3.0, 3, 3, 1.0).unwrap();
        let want = PI * eps * eps / 2.0 * ((6f64).exp() - (2f64).exp());
        assert!((c - want).abs() < 1e-8 * want);
        assert_eq!(cusp_volume(&PsiSpec::constant(eps).unwrap(), 1.0, 1.0, 3, 3, 1.0).unwrap(), 0.0);
        assert!(cusp_volume(&PsiSpec::constant(eps).unwrap(), 2.0, 1.0, 3, 3, 1.0).is_err());
        // through the exceptional set and the ψ = 1 crossing
        let w = cusp_volume(&PsiSpec::power_law(2.0, 1.5).unwrap(), 0.0, 4.0, 3, 2, 1.0).unwrap();
        assert!(w.is_finite() && w > 0.0);
    }

    #[test]
    fn tail_bound() {
        for psi in [
            PsiSpec::power_law(0.5, 1.5).unwrap(),
            PsiSpec::power_law(0.1, 3.0).unwrap(),
            PsiSpec::log_power(0.2, 2.0).unwrap(),
            PsiSpec::constant(0.01).unwrap(),
        ] {
            let c = exceptional_tail(&psi, 3, 1.0, 60.0).unwrap();
            assert!(c.holds(), "{psi}: {c:?}");
        }
    }
}
