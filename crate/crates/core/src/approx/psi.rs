//! Approximation functions ψ: (0, ∞) → (0, ∞).

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::str::FromStr;

use astro_float::BigFloat;

use crate::error::{Error, Result};
use crate::hp::Hp;

/// Log-log piecewise-linear ψ through user-supplied knots, extended
/// linearly (in log-log) beyond the first and last knot.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedPsi {
    ln_t: Vec<f64>,
    ln_psi: Vec<f64>,
}

impl TabulatedPsi {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("tabulated ψ needs at least two knots".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
            }
        }
        if points.iter().any(|&(t, v)| t <= 0.0 || v <= 0.0 || !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidArgument("knots must be positive and finite".into()));
        }
        Ok(TabulatedPsi {
            ln_t: points.iter().map(|p| p.0.ln()).collect(),
            ln_psi: points.iter().map(|p| p.1.ln()).collect(),
        })
    }

    fn segment(&self, u: f64) -> usize {
        let n = self.ln_t.len();
        match self.ln_t.iter().position(|&k| k > u) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        }
    }

    fn slope(&self, i: usize) -> f64 {
        (self.ln_psi[i + 1] - self.ln_psi[i]) / (self.ln_t[i + 1] - self.ln_t[i])
    }

    fn ln_value(&self, u: f64) -> f64 {
        let i = self.segment(u);
        self.ln_psi[i] + self.slope(i) * (u - self.ln_t[i])
    }

    fn max_abs_slope(&self) -> f64 {
        (0..self.ln_t.len() - 1).map(|i| self.slope(i).abs()).fold(0.0, f64::max)
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.ln_t.iter().zip(&self.ln_psi).map(|(a, b)| (a.exp(), b.exp())).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsiFamily {
    /// `ε t^{−s}`
    PowerLaw { eps: f64, s: f64 },
    /// `ε t^{−1} (log(e + t))^{−a}`
    LogPower { eps: f64, a: f64 },
    /// `ε`
    Constant { eps: f64 },
    Tabulated(TabulatedPsi),
}

/// A ψ family together with its quasi-conformality constant `c`:
/// `ψ(ht) ≤ c ψ(t)` for every `h ∈ [1/2, 2]` and `t > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiSpec {
    family: PsiFamily,
    qc_constant: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")))
    }
}

/// `ln(log(e + e^u))` without forming `e^u` for large `u`.
fn ln_log_e_plus_exp(u: f64) -> f64 {
    let l = if u > 1.0 { u + (1.0 - u).exp().ln_1p() } else { (E + u.exp()).ln() };
    l.ln()
}

impl PsiSpec {
    pub fn power_law(eps: f64, s: f64) -> Result<Self> {
        check_eps(eps)?;
        if !s.is_finite() {
            return Err(Error::InvalidArgument("s must be finite".into()));
        }
        Ok(PsiSpec { family: PsiFamily::PowerLaw { eps, s }, qc_constant: 2f64.powf(s.abs()) })
    }

    /// Requires `a ≥ 0`; `c = 2 (1 + log 2)^a` since
    /// `log(e + t) / log(e + t/2) ≤ 1 + log 2 / log(e + t/2) ≤ 1 + log 2`.
    pub fn log_power(eps: f64, a: f64) -> Result<Self> {
        check_eps(eps)?;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("a must be ≥ 0, got {a}")));
        }
        Ok(PsiSpec {
            family: PsiFamily::LogPower { eps, a },
            qc_constant: 2.0 * (1.0 + LN_2).powf(a),
        })
    }

    pub fn constant(eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(PsiSpec { family: PsiFamily::Constant { eps }, qc_constant: 1.0 })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        let t = TabulatedPsi::new(points)?;
        let c = 2f64.powf(t.max_abs_slope());
        Ok(PsiSpec { family: PsiFamily::Tabulated(t), qc_constant: c })
    }

    pub fn family(&self) -> &PsiFamily {
        &self.family
    }

    pub fn qc_constant(&self) -> f64 {
        self.qc_constant
    }

    /// The same family with `ε` multiplied by `k` (used for `κψ`, `cψ`).
    pub fn scaled(&self, k: f64) -> Result<Self> {
        match &self.family {
            PsiFamily::PowerLaw { eps, s } => Self::power_law(eps * k, *s),
            PsiFamily::LogPower { eps, a } => Self::log_power(eps * k, *a),
            PsiFamily::Constant { eps } => Self::constant(eps * k),
            PsiFamily::Tabulated(t) => {
                check_eps(k)?;
                let pts: Vec<(f64, f64)> = t.knots().into_iter().map(|(a, b)| (a, b * k)).collect();
                Self::tabulated(&pts)
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("ψ is defined on t > 0, got {t}")));
        }
        Ok(self.value(t))
    }

    /// ψ(t) for `t > 0` (unchecked).
    pub fn value(&self, t: f64) -> f64 {
        match &self.family {
            PsiFamily::PowerLaw { eps, s } => eps * t.powf(-s),
            PsiFamily::LogPower { eps, a } => eps / t * (E + t).ln().powf(-a),
            PsiFamily::Constant { eps } => *eps,
            PsiFamily::Tabulated(tab) => tab.ln_value(t.ln()).exp(),
        }
    }

    /// `ln ψ(e^u)`, stable for any finite `u`.
    pub fn ln_value_at_exp(&self, u: f64) -> f64 {
        match &self.family {
            PsiFamily::PowerLaw { eps, s } => eps.ln() - s * u,
            PsiFamily::LogPower { eps, a } => eps.ln() - u - a * ln_log_e_plus_exp(u),
            PsiFamily::Constant { eps } => eps.ln(),
            PsiFamily::Tabulated(tab) => tab.ln_value(u),
        }
    }

    /// Supremum of ψ over `[lo, hi]` (`0 < lo ≤ hi`).
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        match &self.family {
            PsiFamily::PowerLaw { s, .. } => {
                if *s >= 0.0 {
                    self.value(lo)
                } else {
                    self.value(hi)
                }
            }
            PsiFamily::LogPower { .. } => self.value(lo),
            PsiFamily::Constant { eps } => *eps,
            PsiFamily::Tabulated(tab) => {
                let (ul, uh) = (lo.ln(), hi.ln());
                tab.ln_t
                    .iter()
                    .filter(|&&k| k > ul && k < uh)
                    .map(|&k| tab.ln_value(k))
                    .chain([tab.ln_value(ul), tab.ln_value(uh)])
                    .fold(f64::NEG_INFINITY, f64::max)
                    .exp()
            }
        }
    }

    /// Whether ψ is nonincreasing (then `sup_on(lo, hi) = ψ(lo)`).
    pub fn is_nonincreasing(&self) -> bool {
        match &self.family {
            PsiFamily::PowerLaw { s, .. } => *s >= 0.0,
            PsiFamily::LogPower { .. } | PsiFamily::Constant { .. } => true,
            PsiFamily::Tabulated(tab) => tab.ln_psi.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    pub(crate) fn value_hp(&self, hp: &mut Hp, t: &BigFloat) -> BigFloat {
        match &self.family {
            PsiFamily::PowerLaw { eps, s } => {
                let p = hp.powf(t, -s);
                hp.mul(&hp.f(*eps), &p)
            }
            PsiFamily::LogPower { eps, a } => {
                let e = hp.exp(&hp.f(1.0));
                let l = hp.ln(&hp.add(&e, t));
                let p = hp.powf(&l, -a);
                hp.div(&hp.mul(&hp.f(*eps), &p), t)
            }
            PsiFamily::Constant { eps } => hp.f(*eps),
            PsiFamily::Tabulated(tab) => {
                let u = hp.ln(t);
                let i = tab.segment(hp.to_f64(&u));
                let du = hp.sub(&u, &hp.f(tab.ln_t[i]));
                let lv = hp.add(&hp.f(tab.ln_psi[i]), &hp.mul(&hp.f(tab.slope(i)), &du));
                hp.exp(&lv)
            }
        }
    }
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            PsiFamily::PowerLaw { eps, s } => write!(f, "powerlaw:eps={eps},s={s}"),
            PsiFamily::LogPower { eps, a } => write!(f, "logpower:eps={eps},a={a}"),
            PsiFamily::Constant { eps } => write!(f, "const:eps={eps}"),
            PsiFamily::Tabulated(t) => {
                write!(f, "table:")?;
                for (i, (a, b)) in t.knots().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}={b}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for PsiSpec {
    type Err = Error;

    /// `powerlaw:eps=0.5,s=1`, `logpower:eps=1,a=0.5`, `const:eps=0.1`, or
    /// `table:1=0.5,10=0.05,...` (knots `t=ψ(t)`).
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("ψ spec needs a family prefix: {s:?}")))?;
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {v:?}")))
        };
        let get = |key: &str| -> Result<f64> {
            let v = pairs
                .iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| Error::Parse(format!("missing {key} in {s:?}")))?;
            num(&v.1)
        };
        match kind.trim() {
            "powerlaw" => PsiSpec::power_law(get("eps")?, get("s")?),
            "logpower" => PsiSpec::log_power(get("eps")?, get("a")?),
            "const" | "constant" => PsiSpec::constant(get("eps")?),
            "table" => {
                let pts = pairs
                    .iter()
                    .map(|(k, v)| Ok((num(k)?, num(v)?)))
                    .collect::<Result<Vec<_>>>()?;
                PsiSpec::tabulated(&pts)
            }
            other => Err(Error::Parse(format!("unknown ψ family {other:?}"))),
        }
    }
}

/// Sampling plan for [`quasiconformal_check`]: `t` log-spaced over
/// `[t_min, t_max]`, `h` uniform over `[1/2, 2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QcGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub h_points: usize,
}

impl Default for QcGrid {
    fn default() -> Self {
        QcGrid { t_min: 1e-3, t_max: 1e9, t_points: 400, h_points: 61 }
    }
}

/// Largest sampled `ψ(ht)/ψ(t)`; errors if it exceeds the stored constant.
pub fn quasiconformal_check(psi: &PsiSpec, grid: &QcGrid) -> Result<f64> {
    let (lt0, lt1) = (grid.t_min.ln(), grid.t_max.ln());
    let tn = grid.t_points.max(2);
    let hn = grid.h_points.max(2);
    let mut worst: f64 = 0.0;
    for i in 0..tn {
        let t = (lt0 + (lt1 - lt0) * i as f64 / (tn - 1) as f64).exp();
        let base = psi.value(t);
        for j in 0..hn {
            let h = 0.5 + 1.5 * j as f64 / (hn - 1) as f64;
            worst = worst.max(psi.value(h * t) / base);
        }
    }
    if worst > psi.qc_constant() * (1.0 + 1e-12) {
        return Err(Error::QuasiConformalViolation { observed: worst, constant: psi.qc_constant() });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(PsiSpec::power_law(1.0, 1.0).unwrap().eval(2.0).unwrap(), 0.5);
        assert_eq!(PsiSpec::constant(0.3).unwrap().eval(1e6).unwrap(), 0.3);
        assert_eq!(PsiSpec::power_law(2.0, 0.0).unwrap().eval(7.0).unwrap(), 2.0);
        assert!(PsiSpec::constant(0.3).unwrap().eval(0.0).is_err());
        assert!(PsiSpec::constant(0.3).unwrap().eval(-1.0).is_err());
        assert!(PsiSpec::constant(0.0).is_err());
        assert!(PsiSpec::log_power(1.0, -0.5).is_err());
    }

    #[test]
    fn qc_examples() {
        let r = quasiconformal_check(&PsiSpec::power_law(1.0, 1.0).unwrap(), &QcGrid::default())
            .unwrap();
        assert!(r <= 2.0 && r > 1.99);
        let r = quasiconformal_check(&PsiSpec::constant(0.7).unwrap(), &QcGrid::default()).unwrap();
        assert_eq!(r, 1.0);
        let p = PsiSpec::power_law(1.0, 1.5).unwrap();
        let r = quasiconformal_check(&p, &QcGrid::default()).unwrap();
        assert!(r <= 2f64.powf(1.5) * (1.0 + 1e-12));
        for a in [0.25, 0.5, 1.0, 3.0] {
            let p = PsiSpec::log_power(1.0, a).unwrap();
            quasiconformal_check(&p, &QcGrid::default()).unwrap();
        }
        let t = PsiSpec::tabulated(&[(1.0, 1.0), (10.0, 0.1), (100.0, 0.05)]).unwrap();
        quasiconformal_check(&t, &QcGrid::default()).unwrap();
    }

    #[test]
    fn misconfigured_constant_is_reported() {
        let mut p = PsiSpec::power_law(1.0, 2.0).unwrap();
        p.qc_constant = 2.0;
        assert!(matches!(
            quasiconformal_check(&p, &QcGrid::default()),
            Err(Error::QuasiConformalViolation { .. })
        ));
    }

    #[test]
    fn log_space_agrees_with_direct_evaluation() {
        let specs = [
            PsiSpec::power_law(0.5, 1.5).unwrap(),
            PsiSpec::log_power(2.0, 0.5).unwrap(),
            PsiSpec::constant(0.1).unwrap(),
            PsiSpec::tabulated(&[(1.0, 2.0), (50.0, 0.01)]).unwrap(),
        ];
        for p in &specs {
            for u in [-3.0, 0.0, 0.5, 2.0, 10.0, 40.0] {
                let direct = p.value(f64::exp(u)).ln();
                assert!((p.ln_value_at_exp(u) - direct).abs() < 1e-12, "{p} at {u}");
            }
            // no overflow far out
            assert!(p.ln_value_at_exp(2000.0).is_finite());
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["powerlaw:eps=0.5,s=1", "logpower:eps=1,a=0.5", "const:eps=0.1"] {
            let p: PsiSpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        let t: PsiSpec = "table:1=0.5,10=0.05".parse().unwrap();
        assert!((t.value(100.0) - 0.005).abs() < 1e-15);
        assert!("powerlaw:eps=1".parse::<PsiSpec>().is_err());
        assert!("bogus:eps=1".parse::<PsiSpec>().is_err());
    }

    #[test]
    fn hp_matches_f64() {
        let mut hp = Hp::new();
        for p in [
            PsiSpec::power_law(0.5, 1.5).unwrap(),
            PsiSpec::log_power(2.0, 0.5).unwrap(),
            PsiSpec::tabulated(&[(1.0, 2.0), (50.0, 0.01)]).unwrap(),
        ] {
            let t = 17.25;
            let tb = hp.f(t);
            let v = p.value_hp(&mut hp, &tb);
            assert!((hp.to_f64(&v) / p.value(t) - 1.0).abs() < 1e-14);
        }
    }
}
