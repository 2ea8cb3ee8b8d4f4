//! Seeded experiment drivers: the counting dichotomy over sampled boundary
//! directions, the two worked examples, the group self-checks and the box
//! counts of `Γ`.
//!
//! Every random draw comes from `rng::stream(seed, index)` with a fixed
//! index per direction or sample, so results do not depend on the worker
//! count and adding directions leaves earlier rows unchanged.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::approx::{
    example1_certificate, example2_witnesses, pell_solutions, sample_boundary, summarize_witnesses,
    PsiSpec,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{ratio, FormSpec};
use crate::geometry::{cusp_volume, divergence_classifier, Chart, Classification, HorosphericalElement};
use crate::group_dyn::{
    gamma_in_box, lemma_uzav_fit, transversality_checks, BoxSpec, GammaCount, OrthogonalGroup,
};
use crate::lattice_points::{counts_at, enumerate_in_cusp, EnumConfig, DEFAULT_BUDGET, DEFAULT_MARGIN};
use crate::rng;

fn default_form() -> FormSpec {
    FormSpec::diagonal(&[1, 1, 1, -1], "1")
}

fn default_psi() -> String {
    "powerlaw:eps=2,s=1".into()
}

fn default_checkpoints() -> Vec<f64> {
    vec![1e3, 1e4, 1e5]
}

/// Options of the `Γ` box count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaOptions {
    pub form: FormSpec,
    pub radii: [f64; 3],
    pub t_values: Vec<f64>,
    pub entry_bound: i64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            form: FormSpec::diagonal(&[1, 1, -1], "1"),
            radii: [2.0, 2.0, 2.0],
            t_values: vec![3.0, 4.0, 5.0, 6.0],
            entry_bound: 1 << 40,
        }
    }
}

/// Options of the worked examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExampleOptions {
    pub y_max: i64,
    pub eps_pass: f64,
    pub eps_fail: f64,
    pub witnesses: usize,
    pub pell_count: usize,
}

impl Default for ExampleOptions {
    fn default() -> Self {
        ExampleOptions { y_max: 10_000, eps_pass: 0.8, eps_fail: 0.7, witnesses: 30, pell_count: 50 }
    }
}

/// Options of the self-check suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfCheckOptions {
    /// Replaces every floating-point tolerance when set.
    pub tolerance: Option<f64>,
    pub round_trips: usize,
    pub uzav_samples: usize,
    pub uzav_radius: f64,
    pub uzav_t_max: f64,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        SelfCheckOptions { tolerance: None, round_trips: 1000, uzav_samples: 500, uzav_radius: 0.05, uzav_t_max: 10.0 }
    }
}

/// Configuration shared by all experiment commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub form: FormSpec,
    pub psi: String,
    pub n_directions: usize,
    pub seed: u64,
    pub checkpoints: Vec<f64>,
    pub t_min: f64,
    pub budget: u64,
    pub margin: f64,
    pub gamma: GammaOptions,
    pub examples: ExampleOptions,
    pub selfcheck: SelfCheckOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            form: default_form(),
            psi: default_psi(),
            n_directions: 50,
            seed: 0,
            checkpoints: default_checkpoints(),
            t_min: 1.0,
            budget: DEFAULT_BUDGET,
            margin: DEFAULT_MARGIN,
            gamma: GammaOptions::default(),
            examples: ExampleOptions::default(),
            selfcheck: SelfCheckOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_directions == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidArgument("at least one checkpoint is required".into()));
        }
        if self.checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("checkpoints must be strictly increasing".into()));
        }
        if !(self.t_min >= 0.0 && self.t_min < self.checkpoints[0]) {
            return Err(Error::InvalidArgument("t_min must lie below the first checkpoint".into()));
        }
        self.psi_spec()?;
        Ok(())
    }

    pub fn psi_spec(&self) -> Result<PsiSpec> {
        self.psi.parse()
    }

    fn enum_config(&self) -> EnumConfig {
        EnumConfig { budget: self.budget, margin: self.margin, exec: Execution::Sequential, require_boundary: true }
    }
}

/// One row of the dichotomy table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub direction: usize,
    pub checkpoint: f64,
    pub hits: usize,
    /// `∫_0^{log T} vol(𝒰_t(ψ)) dt`.
    pub predicted_volume: f64,
    pub verdict: String,
    /// The enumeration ran out of budget before this checkpoint; `hits`
    /// is a lower bound.
    pub partial: bool,
}

impl DichotomyRow {
    pub const CSV_HEADER: &'static str = "direction,checkpoint,hits,predicted_volume,verdict,partial";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.direction, self.checkpoint, self.hits, self.predicted_volume, self.verdict, self.partial
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub rows: Vec<DichotomyRow>,
    pub classification: Classification,
    pub checkpoints: Vec<f64>,
}

impl DichotomyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(DichotomyRow::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Hit counts per direction, one vector per checkpoint.
    fn per_direction(&self) -> Vec<Vec<usize>> {
        let k = self.checkpoints.len();
        self.rows.chunks(k).map(|c| c.iter().map(|r| r.hits).collect()).collect()
    }

    /// Median hit count at each checkpoint.
    pub fn medians(&self) -> Vec<f64> {
        let per = self.per_direction();
        (0..self.checkpoints.len())
            .map(|j| {
                let mut v: Vec<usize> = per.iter().map(|c| c[j]).collect();
                v.sort_unstable();
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2] as f64
                } else {
                    (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
                }
            })
            .collect()
    }

    /// Fraction of directions with a hit between the first and the last
    /// checkpoint.
    pub fn fraction_gaining(&self) -> f64 {
        let per = self.per_direction();
        let k = self.checkpoints.len();
        per.iter().filter(|c| c[k - 1] > c[0]).count() as f64 / per.len() as f64
    }

    /// Fraction of directions without hits between the first and the last
    /// checkpoint.
    pub fn fraction_silent(&self) -> f64 {
        1.0 - self.fraction_gaining()
    }

    pub fn any_partial(&self) -> bool {
        self.rows.iter().any(|r| r.partial)
    }
}

/// Samples `N` boundary directions, enumerates cusp hits up to the last
/// checkpoint and tabulates the counts with the predicted volume and the
/// classifier verdict.
pub fn run_dichotomy(cfg: &ExperimentConfig, exec: Execution) -> Result<DichotomyReport> {
    cfg.validate()?;
    let psi = cfg.psi_spec()?;
    let (form, basis) = cfg.form.build_with_basis()?;
    let d = form.d();
    if d < 3 {
        return Err(Error::DimensionTooSmall(d));
    }
    let chart = Chart::new(&form, &basis)?;
    let classification = divergence_classifier(&psi, d)?;
    let predicted: Vec<f64> = cfg
        .checkpoints
        .iter()
        .map(|&t| cusp_volume(&psi, 0.0, t.ln().max(0.0), d, chart.p(), chart.m()))
        .collect::<Result<_>>()?;
    let ecfg = cfg.enum_config();
    let ids: Vec<usize> = (0..cfg.n_directions).collect();
    let per_dir = exec.try_map(&ids, |&i| -> Result<Vec<DichotomyRow>> {
        let v = sample_boundary(&form, &mut rng::stream(cfg.seed, i as u64))?;
        // largest checkpoint reachable within the budget
        let mut reach = cfg.checkpoints.len();
        let hits = loop {
            if reach == 0 {
                break Vec::new();
            }
            let t_max = cfg.checkpoints[reach - 1];
            match enumerate_in_cusp(&form, &v, &psi, cfg.t_min, t_max, &ecfg) {
                Ok(h) => break h,
                Err(Error::BudgetExceeded { .. }) => reach -= 1,
                Err(e) => return Err(e),
            }
        };
        let counts = counts_at(&hits, &cfg.checkpoints);
        Ok(cfg
            .checkpoints
            .iter()
            .enumerate()
            .map(|(j, &t)| DichotomyRow {
                direction: i,
                checkpoint: t,
                hits: counts[j],
                predicted_volume: predicted[j],
                verdict: classification.criterion.to_string(),
                partial: j >= reach,
            })
            .collect())
    })?;
    Ok(DichotomyReport {
        rows: per_dir.into_iter().flatten().collect(),
        classification,
        checkpoints: cfg.checkpoints.clone(),
    })
}

/// A named claim with its outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Claim {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Claim { name: name.to_string(), pass, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Outcome of a group of claims.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimReport {
    pub claims: Vec<Claim>,
}

impl ClaimReport {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

/// The Pell construction and the rational-direction obstruction.
pub fn run_examples(cfg: &ExperimentConfig, exec: Execution) -> Result<ClaimReport> {
    let o = &cfg.examples;
    let mut claims = Vec::new();

    let pell = pell_solutions(o.pell_count);
    let ok = pell.iter().all(|(k, l)| k * k - 7 * l * l == 1.into());
    claims.push(Claim::new("pell-identity", ok, format!("k² − 7l² = 1 for {} solutions", pell.len())));

    let ws = example2_witnesses(o.eps_pass, o.witnesses, 4)?;
    let sum = summarize_witnesses(&ws);
    let (ok, detail) = match sum.all_pass_from {
        Some(j) => {
            let after = ws.iter().filter(|w| w.index >= j).take(10).count();
            let ok = after == 10 && ws.iter().filter(|w| w.index >= j).take(10).all(|w| w.passes());
            (ok, format!("ε = {}: every witness from j = {j} passes ({after} checked)", o.eps_pass))
        }
        None => (false, format!("ε = {}: the tail of the witness run fails", o.eps_pass)),
    };
    claims.push(Claim::new("example2-above-threshold", ok, detail));

    let ws = example2_witnesses(o.eps_fail, o.witnesses, 4)?;
    let sum = summarize_witnesses(&ws);
    let (ok, detail) = match sum.all_fail_from {
        Some(j) => (true, format!("ε = {}: every witness from j = {j} fails (expected)", o.eps_fail)),
        None => (false, format!("ε = {}: late witnesses still pass", o.eps_fail)),
    };
    claims.push(Claim::new("example2-below-threshold", ok, detail));

    let q0: Vec<Vec<i64>> = (0..4).map(|i| (0..4).map(|j| (i == j) as i64).collect()).collect();
    let v = vec![ratio(3, 5), ratio(4, 5), ratio(0, 1), ratio(0, 1)];
    let rep = example1_certificate(&q0, &v, o.y_max, exec)?;
    claims.push(Claim::new(
        "example1-no-solutions",
        rep.solutions.is_empty(),
        format!(
            "ε* = {}, |y| ≤ {}: {} solutions among {} near hits",
            rep.epsilon,
            rep.y_max,
            rep.solutions.len(),
            rep.near_hits
        ),
    ));
    Ok(ClaimReport { claims })
}

/// Machine-readable self-check summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub suites: Vec<Claim>,
    pub det_phi: Option<f64>,
    pub dv_du_plus_error: Option<f64>,
    pub lemma_uzav_fitted_l: Option<f64>,
}

impl SelfCheckReport {
    pub fn all_pass(&self) -> bool {
        self.suites.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Runs the form, chart and group suites on the configured form.
pub fn run_selfcheck(cfg: &ExperimentConfig) -> SelfCheckReport {
    let o = &cfg.selfcheck;
    let tol = |default: f64| o.tolerance.unwrap_or(default);
    let mut suites = Vec::new();
    let mut report = SelfCheckReport { suites: Vec::new(), det_phi: None, dv_du_plus_error: None, lemma_uzav_fitted_l: None };

    let built = cfg.form.build_with_basis();
    let (form, basis) = match built {
        Ok(fb) => fb,
        Err(e) => {
            suites.push(Claim::new("forms", false, e.to_string()));
            report.suites = suites;
            return report;
        }
    };
    let ok = basis.verify(&form).is_ok();
    suites.push(Claim::new("forms", ok, format!("{form}: hyperbolic basis verified = {ok}")));

    let chart = match Chart::new(&form, &basis) {
        Ok(c) => c,
        Err(e) => {
            suites.push(Claim::new("chart", false, e.to_string()));
            report.suites = suites;
            return report;
        }
    };
    let mut worst = 0f64;
    let mut r = rng::stream(cfg.seed, 0);
    for _ in 0..100 {
        use rand::Rng;
        let t = 4.0 * r.random::<f64>() - 1.0;
        let s: Vec<f64> = (0..chart.d() - 1).map(|_| 2.0 * r.random::<f64>() - 1.0).collect();
        let ts = crate::geometry::TsCoordinates { t, s: s.clone() };
        match chart.parametrize(&ts).and_then(|x| chart.invert(&x)) {
            Ok(back) => {
                worst = worst.max((back.t - t).abs());
                for (a, b) in back.s.iter().zip(&s) {
                    worst = worst.max((a - b).abs());
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    suites.push(Claim::new("chart", worst <= tol(1e-9), format!("max (t, s) round-trip error {worst:e}")));

    let group = match OrthogonalGroup::for_chart(&chart) {
        Ok(g) => g,
        Err(e) => {
            suites.push(Claim::new("group", false, e.to_string()));
            report.suites = suites;
            return report;
        }
    };
    let n = group.dim();
    let mut flow_exact = true;
    let mut dev = 0f64;
    let mut r = rng::stream(cfg.seed, 1);
    for _ in 0..20 {
        use rand::Rng;
        let t = 6.0 * r.random::<f64>() - 3.0;
        flow_exact &= group.involution(&group.flow(t)) == group.flow(-t);
        let s: Vec<f64> = (0..n - 2).map(|_| 2.0 * r.random::<f64>() - 1.0).collect();
        let u = HorosphericalElement::new(s.clone(), group.p()).matrix();
        let a = group.flow(t).matrix;
        let conj = &a * &u * group.flow(-t).matrix;
        let shrunk = HorosphericalElement::new(s.iter().map(|x| x * (-t).exp()).collect(), group.p()).matrix();
        dev = dev.max(frob(&(conj - shrunk)));
        dev = dev.max(group.membership_residual(&u)).max(group.membership_residual(&a));
    }
    suites.push(Claim::new(
        "group-identities",
        flow_exact && dev <= tol(1e-12),
        format!("σ(a_t) = a_(−t) exactly: {flow_exact}; max deviation {dev:e}"),
    ));

    let mut worst = 0f64;
    let mut failures = 0;
    for i in 0..o.round_trips {
        let mut r = rng::stream(cfg.seed ^ 0x757a75, i as u64);
        let g = group.random_near_identity(&mut r, 0.3);
        match group.decompose_uzu(&g) {
            Ok(d) => worst = worst.max(frob(&(d.product() - &g.matrix))),
            Err(_) => failures += 1,
        }
    }
    suites.push(Claim::new(
        "uzu-round-trip",
        failures == 0 && worst <= tol(1e-9),
        format!("{} elements, max residual {worst:e}, {failures} failures", o.round_trips),
    ));

    match transversality_checks(&group) {
        Ok(t) => {
            let ok = (t.det_phi - 1.0).abs() <= tol(1e-4) && t.dv_du_plus_error <= tol(1e-5);
            suites.push(Claim::new(
                "transversality",
                ok,
                format!("|det| = {}, ‖∂v/∂u⁺ + σ‖ = {:e}", t.det_phi, t.dv_du_plus_error),
            ));
            report.det_phi = Some(t.det_phi);
            report.dv_du_plus_error = Some(t.dv_du_plus_error);
        }
        Err(e) => suites.push(Claim::new("transversality", false, e.to_string())),
    }

    match lemma_uzav_fit(&group, o.uzav_radius, o.uzav_t_max, o.uzav_samples, cfg.seed) {
        Ok(f) => {
            suites.push(Claim::new(
                "uzav-containment",
                f.fitted_l.is_finite(),
                format!("fitted l = {} over {} samples", f.fitted_l, f.samples),
            ));
            report.lemma_uzav_fitted_l = Some(f.fitted_l);
        }
        Err(e) => suites.push(Claim::new("uzav-containment", false, e.to_string())),
    }
    report.suites = suites;
    report
}

/// Box counts for each configured `t`.
pub fn run_gamma(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<GammaCount>> {
    let g = &cfg.gamma;
    let (form, basis) = g.form.build_with_basis()?;
    g.t_values
        .iter()
        .map(|&t| {
            let bx = BoxSpec::new(g.radii[0], g.radii[1], g.radii[2], t)?;
            gamma_in_box(&form, &basis, &bx, g.entry_bound, exec)
        })
        .collect()
}

pub fn gamma_csv(rows: &[GammaCount]) -> String {
    let mut s = String::from(GammaCount::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}
