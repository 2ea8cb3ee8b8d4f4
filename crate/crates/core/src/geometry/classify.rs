//! Divergence of `∫₁^∞ t^{d−2} ψ(t)^{d−1} dt`.

use serde::Serialize;

use crate::approx::{PsiFamily, PsiSpec};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Divergent,
    Convergent,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Divergent => "divergent",
            Verdict::Convergent => "convergent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub criterion: Verdict,
    pub rule: String,
}

impl Classification {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// Analytic verdicts for the closed-form families; the numeric heuristic
/// for tabulated ψ.
pub fn divergence_classifier(psi: &PsiSpec, d: usize) -> Result<Classification> {
    if d < 3 {
        return Err(Error::DimensionTooSmall(d));
    }
    let k = (d - 1) as f64;
    let (div, rule) = match psi.family() {
        PsiFamily::PowerLaw { s, .. } => {
            (*s <= 1.0, format!("power law: divergent iff s ≤ 1 (s = {s})"))
        }
        PsiFamily::LogPower { a, .. } => (
            a * k <= 1.0,
            format!("log power: divergent iff a(d−1) ≤ 1 (a(d−1) = {})", a * k),
        ),
        PsiFamily::Constant { .. } => (true, "constant: always divergent".to_string()),
        PsiFamily::Tabulated(_) => return classify_numeric(psi, d),
    };
    let criterion = if div { Verdict::Divergent } else { Verdict::Convergent };
    Ok(Classification { criterion, rule })
}

/// `P(k) = ∫₁^{2^k} t^{d−2} ψ(t)^{d−1} dt`, computed in `u = ln t`.
pub fn partial_integral(psi: &PsiSpec, d: usize, k: u32) -> Result<f64> {
    (0..k).map(|j| partial_step(psi, d, j)).sum()
}

const MAX_K: u32 = 40;

/// Heuristic verdict from the partial integrals `P(k)` at `2^k`:
/// convergent once `P(k+1) − P(k) < 10⁻⁶·P(k)` three times in a row,
/// divergent once `P(k) > 10³·P(3)`, otherwise inconclusive at `k = 40`.
pub fn classify_numeric(psi: &PsiSpec, d: usize) -> Result<Classification> {
    if d < 3 {
        return Err(Error::DimensionTooSmall(d));
    }
    let p3 = partial_integral(psi, d, 3)?;
    let mut prev = p3;
    let mut flat = 0;
    for k in 4..=MAX_K {
        let pk = prev + partial_step(psi, d, k - 1)?;
        if pk > 1e3 * p3 {
            return Ok(Classification {
                criterion: Verdict::Divergent,
                rule: format!("numeric heuristic: P({k}) > 1e3·P(3)"),
            });
        }
        if pk - prev < 1e-6 * prev {
            flat += 1;
            if flat == 3 {
                return Ok(Classification {
                    criterion: Verdict::Convergent,
                    rule: format!("numeric heuristic: P(k) flat to 1e-6 up to k = {k}"),
                });
            }
        } else {
            flat = 0;
        }
        prev = pk;
    }
    Ok(Classification {
        criterion: Verdict::Inconclusive,
        rule: format!("numeric heuristic: no decision by k = {MAX_K}"),
    })
}

/// `P(j+1) − P(j)`.
fn partial_step(psi: &PsiSpec, d: usize, j: u32) -> Result<f64> {
    let kd = (d - 1) as f64;
    let f = |u: f64| (kd * (u + psi.ln_value_at_exp(u))).exp();
    let ln2 = std::f64::consts::LN_2;
    let (a, b) = (j as f64 * ln2, (j + 1) as f64 * ln2);
    let scale = f(a).max(f(b)).max(f64::MIN_POSITIVE);
    adaptive_simpson(&f, a, b, 1e-12 * scale * (b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(psi: PsiSpec, d: usize) -> Verdict {
        divergence_classifier(&psi, d).unwrap().criterion
    }

    #[test]
    fn analytic_rules() {
        for d in [3, 4, 5] {
            let k = (d - 1) as f64;
            assert_eq!(verdict(PsiSpec::power_law(0.3, 1.0).unwrap(), d), Verdict::Divergent);
            assert_eq!(verdict(PsiSpec::power_law(5.0, 1.01).unwrap(), d), Verdict::Convergent);
            assert_eq!(verdict(PsiSpec::log_power(1.0, 1.0 / k).unwrap(), d), Verdict::Divergent);
            assert_eq!(verdict(PsiSpec::log_power(1.0, 2.0 / k).unwrap(), d), Verdict::Convergent);
            assert_eq!(verdict(PsiSpec::constant(1e-3).unwrap(), d), Verdict::Divergent);
        }
        assert!(divergence_classifier(&PsiSpec::constant(1.0).unwrap(), 2).is_err());
        let c = divergence_classifier(&PsiSpec::power_law(1.0, 2.0).unwrap(), 3).unwrap();
        let j: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(j["criterion"], "convergent");
    }

    #[test]
    fn partial_integrals() {
        // ψ = 1/t, d = 3: integrand 1/t, P(k) = k ln 2
        let p = partial_integral(&PsiSpec::power_law(1.0, 1.0).unwrap(), 3, 10).unwrap();
        assert!((p - 10.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn numeric_fallback() {
        let steep = PsiSpec::tabulated(&[(1.0, 1.0), (10.0, 1e-2)]).unwrap();
        assert_eq!(classify_numeric(&steep, 3).unwrap().criterion, Verdict::Convergent);
        assert_eq!(verdict(steep, 3), Verdict::Convergent);
        let flat = PsiSpec::tabulated(&[(1.0, 0.5), (10.0, 0.4)]).unwrap();
        assert_eq!(verdict(flat, 3), Verdict::Divergent);
        // the boundary case grows only logarithmically
        let edge = classify_numeric(&PsiSpec::power_law(1.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(edge.criterion, Verdict::Inconclusive);
        assert_eq!(
            classify_numeric(&PsiSpec::constant(0.1).unwrap(), 4).unwrap().criterion,
            Verdict::Divergent
        );
    }
}
