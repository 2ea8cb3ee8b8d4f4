//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use quadlab_core::approx::{
    example1_certificate, example2_witnesses, pell_solutions, sample_boundary, summarize_witnesses, PsiSpec,
};
use quadlab_core::experiment::{run_dichotomy, ExperimentConfig};
use quadlab_core::forms::{hyperbolic_basis, rat, ratio, QuadraticForm};
use quadlab_core::geometry::{divergence_classifier, CoordinateRegion, FlowElement, HorosphericalElement, Predicate, Verdict};
use quadlab_core::group_dyn::{gamma_in_box, transversality_checks, BoxSpec, OrthogonalGroup};
use quadlab_core::lattice_points::{enumerate_all, enumerate_in_cusp, EnumConfig};
use quadlab_core::{rng, Execution};

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn lorentz() -> QuadraticForm {
    QuadraticForm::from_diag(&[1, 1, 1, -1], rat(1)).unwrap()
}

/// Integer points of x₀² + x₁² + x₂² − x₃² = 1 with ‖x‖ ≤ t, by direct search.
fn lorentz_points(t: i64) -> Vec<[i64; 4]> {
    let t2 = t * t;
    let mut out = Vec::new();
    for a in -t..=t {
        for b in -t..=t {
            for c in -t..=t {
                let s = a * a + b * b + c * c - 1;
                if s < 0 || 2 * s + 1 > t2 {
                    continue;
                }
                let w = (s as f64).sqrt().round() as i64;
                if w * w == s {
                    out.push([a, b, c, w]);
                    if w != 0 {
                        out.push([a, b, c, -w]);
                    }
                }
            }
        }
    }
    out
}

fn oracle_equivalence(rep: &mut Report) {
    let start = Instant::now();
    let form = lorentz();
    let t_max = 300i64;
    let points = lorentz_points(t_max);
    let cfg = EnumConfig::default();
    let mut mismatches = 0;
    let mut total = 0;
    for i in 0..20 {
        let v = sample_boundary(&form, &mut rng::stream(2024, i)).unwrap();
        let vs = v.as_slice();
        for s in [0.5, 1.0, 1.5] {
            let psi = PsiSpec::power_law(1.0, s).unwrap();
            let got: BTreeSet<Vec<i64>> = enumerate_in_cusp(&form, &v, &psi, 1.0, t_max as f64, &cfg)
                .unwrap()
                .into_iter()
                .map(|h| h.point.coords)
                .collect();
            let want: BTreeSet<Vec<i64>> = points
                .iter()
                .filter(|x| {
                    let r = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                    let e = x.iter().zip(vs).map(|(&c, &vi)| (c as f64 / r - vi).powi(2)).sum::<f64>().sqrt();
                    e < r.powf(-s)
                })
                .map(|x| x.to_vec())
                .collect();
            total += want.len();
            if got != want {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "oracle-equivalence",
        mismatches == 0 && secs < 60.0,
        format!("60 (direction, ψ) pairs, {total} hits, {mismatches} mismatches, {secs:.1} s"),
    );
}

fn enumeration_counts(rep: &mut Report) {
    let start = Instant::now();
    let form = lorentz();
    let cfg = EnumConfig::default();
    let a = enumerate_all(&form, 1.5, &cfg).unwrap().len();
    let b = enumerate_all(&form, 2.0, &cfg).unwrap().len();
    let secs = start.elapsed().as_secs_f64();
    // ‖x‖² = 2x₃² + 1 ≤ 2.25 only for x₃ = 0
    let oracle_a = lorentz_points(2).iter().filter(|x| x[3] == 0).count();
    let oracle_b = lorentz_points(2).len();
    rep.line(
        "enumeration-counts",
        a == 6 && b == 30 && oracle_a == 6 && oracle_b == 30 && secs < 1.0,
        format!("{a} points at T = 1.5, {b} at T = 2, {secs:.3} s"),
    );
}

fn unit_ball(k: usize) -> f64 {
    match k {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!(),
    }
}

fn volume_formula(rep: &mut Report) {
    let start = Instant::now();
    let configs: [(f64, PsiSpec, usize, usize, f64); 10] = [
        (1.0, PsiSpec::power_law(1.0, 1.0).unwrap(), 3, 3, 1.0),
        (2.0, PsiSpec::power_law(1.0, 1.0).unwrap(), 3, 2, 1.0),
        (1.5, PsiSpec::power_law(0.5, 0.5).unwrap(), 3, 3, 1.0),
        (3.0, PsiSpec::constant(0.2).unwrap(), 3, 3, 1.0),
        (2.0, PsiSpec::log_power(1.0, 0.5).unwrap(), 3, 3, 1.0),
        (1.0, PsiSpec::power_law(1.0, 1.0).unwrap(), 4, 4, 1.0),
        (2.0, PsiSpec::power_law(1.0, 1.5).unwrap(), 4, 3, 1.0),
        (1.5, PsiSpec::constant(0.5).unwrap(), 4, 2, 1.0),
        (2.5, PsiSpec::log_power(1.0, 1.0).unwrap(), 4, 4, 2.0),
        (3.0, PsiSpec::power_law(2.0, 1.0).unwrap(), 4, 3, -1.0),
    ];
    let mut worst = 0f64;
    let mut ok = true;
    for (i, (t, psi, d, p, m)) in configs.into_iter().enumerate() {
        let psi_t = psi.value(t.exp());
        let valid = t.exp().powi(2) * psi_t > m.abs() && psi_t <= 1.0;
        let want = unit_ball(d - 1) * (t.exp() * psi_t).powi(d as i32 - 1);
        let region = CoordinateRegion::new(t, psi, d, p, m).unwrap();
        let est = region.mc_volume(100 + i as u64, 1_000_000, Predicate::Full, Execution::default()).unwrap();
        let z = (est.value - want).abs() / est.stderr;
        worst = worst.max(z);
        ok &= valid && z <= 3.0 && est.stderr / want < 0.01;
    }
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "volume-formula",
        ok && secs < 30.0,
        format!("10 configurations, n = 10⁶, worst deviation {worst:.2} standard errors, {secs:.1} s"),
    );
}

fn classifier(rep: &mut Report) {
    let mut ok = true;
    for d in [3usize, 4, 5] {
        let k = (d - 1) as f64;
        let cases = [
            (PsiSpec::power_law(1.0, 1.0).unwrap(), Verdict::Divergent),
            (PsiSpec::power_law(1.0, 1.01).unwrap(), Verdict::Convergent),
            (PsiSpec::log_power(1.0, 1.0 / k).unwrap(), Verdict::Divergent),
            (PsiSpec::log_power(1.0, 2.0 / k).unwrap(), Verdict::Convergent),
        ];
        for (psi, want) in cases {
            ok &= divergence_classifier(&psi, d).unwrap().criterion == want;
        }
    }
    rep.line("classifier", ok, "power law s = 1, 1.01 and log power a = 1/(d−1), 2/(d−1) for d = 3, 4, 5".into());
}

fn dichotomy(rep: &mut Report) {
    let start = Instant::now();
    let cfg = ExperimentConfig { seed: 1, ..ExperimentConfig::default() };
    let div = run_dichotomy(&cfg, Execution::default()).unwrap();
    let med = div.medians();
    let gain = div.fraction_gaining();
    let conv_cfg = ExperimentConfig { psi: "powerlaw:eps=0.5,s=1.5".into(), ..cfg };
    let conv = run_dichotomy(&conv_cfg, Execution::default()).unwrap();
    let silent = conv.fraction_silent();
    let secs = start.elapsed().as_secs_f64();
    let ok = med.windows(2).all(|w| w[0] < w[1])
        && gain >= 0.6
        && silent >= 0.9
        && !div.any_partial()
        && !conv.any_partial()
        && secs < 600.0;
    rep.line(
        "dichotomy",
        ok,
        format!(
            "N = 50; PowerLaw(2, 1) medians {med:?}, {:.0}% gain; PowerLaw(0.5, 1.5) {:.0}% silent in [10³, 10⁵]; {secs:.1} s",
            100.0 * gain,
            100.0 * silent
        ),
    );
}

/// `4l|k − √7 l| = 4l/(k + √7 l)`, in floating point.
fn pell_scaled_error(k: &BigInt, l: &BigInt) -> f64 {
    let (k, l) = (k.to_f64().unwrap(), l.to_f64().unwrap());
    4.0 * l / (k + 7f64.sqrt() * l)
}

fn example2(rep: &mut Report) {
    let start = Instant::now();
    let pell = pell_solutions(50);
    let identities = pell.iter().all(|(k, l)| k * k - BigInt::from(7) * l * l == BigInt::from(1));

    let pass = example2_witnesses(0.8, 30, 4).unwrap();
    let from = summarize_witnesses(&pass).all_pass_from;
    let mut ok_pass = false;
    if let Some(j) = from {
        let tail: Vec<_> = pass.iter().filter(|w| w.index >= j).take(10).collect();
        ok_pass = tail.len() == 10
            && tail.iter().all(|w| {
                let (k, l) = &pell[w.index - 1];
                // x₁² + x₂² − y²(v₁² + v₂²) = k² + 9l² − 16l²
                let surface = k * k + BigInt::from(9) * l * l - BigInt::from(16) * l * l == BigInt::from(1);
                w.passes() && surface && pell_scaled_error(k, l) < 0.8
            });
    }
    let fail = example2_witnesses(0.7, 30, 4).unwrap();
    let fail_from = summarize_witnesses(&fail).all_fail_from;
    let ok_fail = fail_from.is_some_and(|j| {
        fail.iter().filter(|w| w.index >= j).all(|w| {
            let (k, l) = &pell[w.index - 1];
            !w.approximation_ok && pell_scaled_error(k, l) > 0.7
        })
    });
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "example2-pell",
        identities && ok_pass && ok_fail && secs < 1.0,
        format!(
            "50 Pell identities {identities}; ε = 0.8 passes from j = {from:?}; ε = 0.7 fails from j = {fail_from:?}; {secs:.3} s"
        ),
    );
}

fn example1(rep: &mut Report) {
    let start = Instant::now();
    let q0: Vec<Vec<i64>> = (0..4).map(|i| (0..4).map(|j| (i == j) as i64).collect()).collect();
    let v = [ratio(3, 5), ratio(4, 5), ratio(0, 1), ratio(0, 1)];
    let r = example1_certificate(&q0, &v, 10_000, Execution::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "example1-obstruction",
        r.solutions.is_empty() && r.epsilon == ratio(1, 5) && secs < 120.0,
        format!(
            "ε* = {}, |y| ≤ {}: {} solutions, {} candidates, {secs:.1} s",
            r.epsilon,
            r.y_max,
            r.solutions.len(),
            r.candidates
        ),
    );
}

fn group_identities(rep: &mut Report) {
    let g = OrthogonalGroup::new(3, 3, 1.0).unwrap();
    let gram = g.gram().clone();
    let residual = |x: &nalgebra::DMatrix<f64>| (x.transpose() * &gram * x - &gram).norm();
    let mut exact = true;
    // deviations relative to the size of the matrices compared
    let mut dev = 0f64;
    let mut abs_dev = 0f64;
    let mut r = rng::stream(77, 0);
    for _ in 0..200 {
        use rand::Rng;
        let t: f64 = r.random_range(-4.0..4.0);
        let s: Vec<f64> = (0..2).map(|_| r.random_range(-2.0..2.0)).collect();
        let a = FlowElement::new(t).matrix(4);
        exact &= g.involution(&g.flow(t)).matrix == FlowElement::new(-t).matrix(4);
        let u = HorosphericalElement::new(s.clone(), 3).matrix();
        let conj = &a * &u * FlowElement::new(-t).matrix(4);
        let shrunk = HorosphericalElement::new(s.iter().map(|x| x * (-t).exp()).collect(), 3).matrix();
        let c = (&conj - &shrunk).norm();
        abs_dev = abs_dev.max(c);
        dev = dev
            .max(c / shrunk.norm())
            .max(residual(&u) / u.norm_squared())
            .max(residual(&a) / a.norm_squared());
    }
    let mut worst = 0f64;
    let mut failures = 0;
    for i in 0..1000 {
        let x = g.random_near_identity(&mut rng::stream(78, i), 0.3);
        match g.decompose_uzu(&x) {
            Ok(d) => worst = worst.max((d.product() - &x.matrix).norm()),
            Err(_) => failures += 1,
        }
    }
    rep.line(
        "group-identities",
        exact && dev <= 1e-12 && worst <= 1e-9 && failures == 0,
        format!(
            "σ(a_t) = a_(−t) exactly: {exact}; max relative deviation {dev:.1e} (absolute {abs_dev:.1e}); \
             10³ uzu round trips, max {worst:.1e}"
        ),
    );
}

fn transversality(rep: &mut Report) {
    let start = Instant::now();
    let form = lorentz();
    let basis = hyperbolic_basis(&form).unwrap();
    let chart = quadlab_core::geometry::Chart::new(&form, &basis).unwrap();
    let g = OrthogonalGroup::for_chart(&chart).unwrap();
    let t = transversality_checks(&g).unwrap();
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "transversality",
        (t.det_phi - 1.0).abs() <= 1e-4 && t.dv_du_plus_error <= 1e-5 && secs < 10.0,
        format!("|det| = {:.10}, ‖∂v/∂u⁺ + σ‖ = {:.1e}, {secs:.2} s", t.det_phi, t.dv_du_plus_error),
    );
}

fn gamma_growth(rep: &mut Report) {
    let start = Instant::now();
    let form = QuadraticForm::from_diag(&[1, 1, -1], rat(1)).unwrap();
    let basis = hyperbolic_basis(&form).unwrap();
    let counts: Vec<_> = [3.0, 4.0, 5.0, 6.0]
        .iter()
        .map(|&t| {
            let bx = BoxSpec::new(2.0, 2.0, 2.0, t).unwrap();
            gamma_in_box(&form, &basis, &bx, 1 << 40, Execution::default()).unwrap()
        })
        .collect();
    let ratios: Vec<f64> = counts.windows(2).map(|w| w[1].count as f64 / w[0].count as f64).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = ratios.iter().all(|r| (2.0..=3.8).contains(r)) && counts.iter().all(|c| !c.lower_bound) && secs < 1800.0;
    let n: Vec<u64> = counts.iter().map(|c| c.count).collect();
    rep.line(
        "gamma-growth",
        ok,
        format!("radii (2, 2, 2), counts {n:?} at t = 3..6, ratios {ratios:.3?}, {secs:.1} s"),
    );
}

fn main() {
    let mut rep = Report { failed: 0 };
    enumeration_counts(&mut rep);
    oracle_equivalence(&mut rep);
    volume_formula(&mut rep);
    classifier(&mut rep);
    dichotomy(&mut rep);
    example2(&mut rep);
    example1(&mut rep);
    group_identities(&mut rep);
    transversality(&mut rep);
    gamma_growth(&mut rep);
    if rep.failed > 0 {
        println!("{} criteria failed", rep.failed);
        std::process::exit(1);
    }
}
