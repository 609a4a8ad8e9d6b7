//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

mod common;

use std::time::Instant;

use berwald::classify::{classify, ClassificationReport, Verdict};
use berwald::config::JobConfig;
use berwald::connection::{ConnectionProfile, TangentPoint};
use berwald::curvature::{curvature_profile, curvature_profile_lenient};
use berwald::error::Error;
use berwald::lagrangian::{Lagrangian, Scaled};
use berwald::metrize::{
    build_class3, build_class5, metrize, FinslerKind, Metrization, ThetaChoice,
};
use berwald::pipeline::{base_samples, form_samples, mean_ratio, run_classification};
use berwald::sampling::{default_samples, Grid};
use berwald::tolerances::Tolerances;
use berwald::verify::{
    determinant_formula, geodesic_agreement, hessian, horizontal_constancy, levi_civita,
    levi_civita_roundtrip, quadratic_fit_check, ratio_constancy,
};
use common::{fixture, Poly, WarpedProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Summary of one fixture for the cross-consistency criterion.
#[derive(Debug, Clone)]
struct Consistency {
    name: String,
    class: Option<u8>,
    riemann: Verdict,
    rank: usize,
    asymmetry: f64,
    metric_built: Option<bool>,
}

fn consistency(
    name: &str,
    rep: &ClassificationReport,
    conn: &ConnectionProfile,
    grid: &Grid,
    cfg_c1: f64,
) -> Consistency {
    let mut c = summary(name, rep);
    let tol = Tolerances::default();
    c.metric_built = wants_metric(rep).then(|| {
        let class = rep.class_label.unwrap();
        let opts = berwald::metrize::BuildOptions {
            c1: cfg_c1,
            ..Default::default()
        };
        matches!(
            metrize(conn, grid, class, &opts, &tol),
            Ok(Metrization {
                riemann: Some(_),
                ..
            })
        )
    });
    c
}

/// Classes 3 and 4, and class 5 with a symmetric Ricci tensor, must admit
/// a metric.
fn wants_metric(rep: &ClassificationReport) -> bool {
    matches!(rep.class_label, Some(3 | 4))
        || rep.class_label == Some(5) && rep.riemann_metrizable == Verdict::Yes
}

fn summary(name: &str, rep: &ClassificationReport) -> Consistency {
    Consistency {
        name: name.to_string(),
        class: rep.class_label,
        riemann: rep.riemann_metrizable,
        rank: rep.holonomy_rank,
        asymmetry: rep.ricci_asymmetry,
        metric_built: None,
    }
}

fn example1(ledger: &mut Vec<Consistency>) -> Outcome {
    let cfg = fixture("example1");
    let tol = Tolerances::default();
    let alpha: f64 = 3.0;
    let mut worst = 0.0f64;
    for (t, r) in cfg.grid.coarse(5).points() {
        let cp = curvature_profile(&cfg.connection, t, r).map_err(e)?;
        let r2 = r * r;
        let mut expected = [0.0; 14];
        expected[0] = 2.0 * alpha - 4.0;
        expected[2] = 4.0 * alpha * r2 * (alpha - 1.0);
        expected[3] = -2.0 * alpha;
        expected[4] = -2.0;
        expected[6] = 2.0 * alpha * r2 * (alpha - 1.0);
        expected[7] = -4.0 * r2 * (alpha - 1.0);
        expected[10] = -alpha;
        expected[11] = 2.0;
        expected[13] = 1.0;
        for (i, (got, want)) in cp.values().iter().zip(&expected).enumerate() {
            let err = (got - want).abs() / want.abs().max(1.0);
            ensure!(
                err <= 1e-10,
                "a{} = {got} at ({t}, {r}), expected {want}",
                i + 1
            );
            worst = worst.max(err);
        }
    }
    let rep = run_classification(&cfg, &tol).map_err(e)?;
    ledger.push(consistency(
        "example1",
        &rep,
        &cfg.connection,
        &cfg.grid,
        1.0,
    ));
    ensure!(
        (rep.ricci_asymmetry + 8.0).abs() <= 1e-10,
        "ricci asymmetry {}",
        rep.ricci_asymmetry
    );
    ensure!(rep.class_label == Some(1), "class {:?}", rep.class_label);
    ensure!(rep.holonomy_rank == 3, "rank {}", rep.holonomy_rank);
    ensure!(
        rep.riemann_metrizable == Verdict::No,
        "riemann {:?}",
        rep.riemann_metrizable
    );
    let m = metrize(&cfg.connection, &cfg.grid, 1, &cfg.task.build, &tol).map_err(e)?;
    let l = m.lagrangian();
    let samples = form_samples(&cfg, &m);
    ensure!(
        samples.len() == 50,
        "only {} admissible samples",
        samples.len()
    );
    let displayed = cfg.reference.lagrangian.as_ref().unwrap();
    let ratio = ratio_constancy("ratio", l, displayed, &samples, 1e-8).map_err(e)?;
    ensure!(
        ratio.passed && ratio.evaluated == 50,
        "ratio variance {:e}",
        ratio.max_residual
    );
    let h = horizontal_constancy(l, &cfg.connection, &samples, 1e-7).map_err(e)?;
    ensure!(h.passed, "delta L residual {:e}", h.max_residual);
    let hs = hessian(l, &samples, tol.hessian_det).map_err(e)?;
    let sig = hs.signature.unwrap();
    ensure!(
        hs.signature_constant && sig.is_lorentzian(),
        "signature {sig} constant {}",
        hs.signature_constant
    );
    Ok(format!(
        "a_i worst rel {worst:.1e}; asym {}; class 1, rank 3, riemann no; ratio var {:.1e}; dL {:.1e}; signature {sig}",
        rep.ricci_asymmetry, ratio.max_residual, h.max_residual
    ))
}

fn example2(ledger: &mut Vec<Consistency>) -> Outcome {
    let mut cfg = fixture("example2");
    cfg.samples.count = 25;
    let tol = Tolerances::default();
    let rep = run_classification(&cfg, &tol).map_err(e)?;
    ledger.push(consistency(
        "example2",
        &rep,
        &cfg.connection,
        &cfg.grid,
        1.0,
    ));
    ensure!(rep.class_label == Some(1), "class {:?}", rep.class_label);
    ensure!(
        rep.ricci_asymmetry.abs() <= 1e-10,
        "asymmetry {}",
        rep.ricci_asymmetry
    );
    ensure!(
        rep.riemann_metrizable == Verdict::No && rep.holonomy_rank == 3,
        "riemann {:?} rank {}",
        rep.riemann_metrizable,
        rep.holonomy_rank
    );
    let m = metrize(&cfg.connection, &cfg.grid, 1, &cfg.task.build, &tol).map_err(e)?;
    let f = m.finsler.as_ref().unwrap();
    let FinslerKind::PowerLaw { lambda, .. } = &f.kind else {
        return Err("not a power law".into());
    };
    ensure!((lambda - 0.75).abs() <= 1e-10, "lambda {lambda}");
    let mut max_rho = 0.0f64;
    for (t, r) in cfg.grid.coarse(5).points() {
        let [d, ee, _] = curvature_profile(&cfg.connection, t, r)
            .map_err(e)?
            .def
            .unwrap();
        max_rho = max_rho.max((ee.value / d.value).abs());
    }
    ensure!(max_rho <= 1e-12, "rho = {max_rho}");
    let samples = form_samples(&cfg, &m);
    ensure!(samples.len() == 25, "{} samples", samples.len());
    let displayed = cfg.reference.lagrangian.as_ref().unwrap();
    let c = mean_ratio(f, displayed, &samples);
    let normalized = Scaled {
        inner: f,
        factor: 1.0 / c,
    };
    // The displayed value is det of the full vertical Hessian; g is half of it.
    let det = determinant_formula(
        "det",
        &normalized,
        &samples,
        &|p| Ok(-(27.0 / 16.0) * (2.0 * p.t * p.r).exp() * p.theta.sin().powi(2) / 16.0),
        1e-6,
    )
    .map_err(e)?;
    ensure!(
        det.passed && det.evaluated == 25,
        "det g rel error {:e}",
        det.max_residual
    );
    Ok(format!(
        "class 1, lambda {lambda}, rho {max_rho:.0e}, asym {:.0e}, det g rel {:.1e}, riemann no, rank 3",
        rep.ricci_asymmetry, det.max_residual
    ))
}

fn exponential(ledger: &mut Vec<Consistency>) -> Outcome {
    let cfg = fixture("exponential");
    let tol = Tolerances::default();
    let rep = run_classification(&cfg, &tol).map_err(e)?;
    ledger.push(consistency(
        "exponential",
        &rep,
        &cfg.connection,
        &cfg.grid,
        1.0,
    ));
    ensure!(rep.class_label == Some(2), "class {:?}", rep.class_label);
    ensure!(
        rep.riemann_metrizable == Verdict::No,
        "riemann {:?}",
        rep.riemann_metrizable
    );
    let m = metrize(&cfg.connection, &cfg.grid, 2, &cfg.task.build, &tol).map_err(e)?;
    let f = m.finsler.as_ref().unwrap();
    let FinslerKind::Exponential { scale } = &f.kind else {
        return Err("not exponential".into());
    };
    let closed_phi = |t: f64, r: f64| (3.0 * t * t - 2.0 * r * t - 1.0) * (-(r - t).powi(2)).exp();
    let (t0, r0) = cfg.grid.base_point();
    let (mut mu_err, mut phi_err) = (0.0f64, 0.0f64);
    for (t, r) in cfg.grid.coarse(5).points() {
        let [_, ee, ff] = curvature_profile(&cfg.connection, t, r)
            .map_err(e)?
            .def
            .unwrap();
        let mu = ff.value / ee.value;
        let want = (-(r - t).powi(2)).exp();
        mu_err = mu_err.max((mu - want).abs() / want);
        // φ is determined up to a constant factor: compare φ(t,r)/φ(t0,r0).
        let got = (scale.value(t, r).map_err(e)? - scale.value(t0, r0).map_err(e)?).exp();
        let want = (closed_phi(t, r) - closed_phi(t0, r0)).exp();
        phi_err = phi_err.max((got - want).abs() / want);
    }
    ensure!(mu_err <= 1e-8, "mu rel error {mu_err:e}");
    ensure!(phi_err <= 1e-8, "phi rel error {phi_err:e}");
    let samples = form_samples(&cfg, &m);
    let h = horizontal_constancy(f, &cfg.connection, &samples, 1e-6).map_err(e)?;
    ensure!(
        h.passed && h.skipped == 0,
        "delta L residual {:e} ({} skipped)",
        h.max_residual,
        h.skipped
    );
    Ok(format!(
        "class 2; mu rel {mu_err:.1e}; phi rel {phi_err:.1e}; dL {:.1e} on {} samples; riemann no",
        h.max_residual, h.evaluated
    ))
}

fn flat(ledger: &mut Vec<Consistency>) -> Outcome {
    let cfg = fixture("flat");
    let tol = Tolerances::default();
    let rep = run_classification(&cfg, &tol).map_err(e)?;
    ledger.push(consistency("flat", &rep, &cfg.connection, &cfg.grid, 1.0));
    ensure!(rep.class_label == Some(4), "class {:?}", rep.class_label);
    ensure!(rep.holonomy_rank == 1, "rank {}", rep.holonomy_rank);
    let m = metrize(&cfg.connection, &cfg.grid, 4, &cfg.task.build, &tol).map_err(e)?;
    let a = m.riemann.as_ref().unwrap();
    let mut worst = 0.0f64;
    for p in base_samples(&cfg) {
        let want = p.tdot * p.tdot - p.rdot * p.rdot - p.w2();
        worst = worst.max((a.eval(&p).map_err(e)? - want).abs());
    }
    ensure!(
        worst <= 1e-12,
        "A differs from tdot^2 - rdot^2 - w^2 by {worst:e}"
    );
    let mut lc_err = 0.0f64;
    for (t, r) in cfg.grid.coarse(3).points() {
        for theta in [0.4, 1.1, 2.5] {
            let (g, dg) = a.metric_with_derivatives(t, r, theta).map_err(e)?;
            let gamma = levi_civita(&g, &dg).map_err(e)?;
            let mut want = [[[0.0; 4]; 4]; 4];
            want[2][3][3] = -theta.sin() * theta.cos();
            want[3][2][3] = theta.cos() / theta.sin();
            want[3][3][2] = want[3][2][3];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        lc_err = lc_err.max((gamma[i][j][k] - want[i][j][k]).abs());
                    }
                }
            }
        }
    }
    ensure!(lc_err < 1e-10, "Levi-Civita error {lc_err:e}");
    Ok(format!(
        "A = tdot^2 - rdot^2 - w^2 to {worst:.0e}; Christoffel error {lc_err:.1e}; rank 1"
    ))
}

fn class3_suite(ledger: &mut Vec<Consistency>) -> Outcome {
    let tol = Tolerances::default();
    let grid = Grid::new((0.5, 1.5), (0.5, 1.5), 9, 9);
    let (mut lc_worst, mut det_worst, mut k_worst) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10u64 {
        let w = WarpedProfile::seeded(1000 + seed);
        let conn = &w.conn;
        let rep = classify(conn, &grid, &default_samples(&grid, 30, seed), &tol).map_err(e)?;
        let built = build_class3(conn, &grid, ThetaChoice::Identity, &tol);
        let mut c = summary(&format!("class3-{seed}"), &rep);
        c.metric_built = wants_metric(&rep).then_some(built.is_ok());
        ledger.push(c);
        ensure!(
            rep.class_label == Some(3),
            "profile {seed}: class {:?}",
            rep.class_label
        );
        let (finsler, a) = built.map_err(|x| format!("profile {seed}: {x}"))?;
        let lc = levi_civita_roundtrip(&a, conn, &grid, 1e-6).map_err(e)?;
        ensure!(
            lc.passed,
            "profile {seed}: Levi-Civita residual {:e}",
            lc.max_residual
        );
        lc_worst = lc_worst.max(lc.max_residual);
        let FinslerKind::Class3 { fields, .. } = &finsler.kind else {
            return Err("class-3 fields missing".into());
        };
        // The built K matches the generator's up to its base-point value.
        let (tb, rb) = grid.base_point();
        for (t, r) in grid.coarse(4).points() {
            let y = fields.value(t, r).map_err(e)?;
            k_worst = k_worst.max((y[1] - (w.k(t, r) - w.k(tb, rb))).abs());
        }
        ensure!(k_worst <= 1e-8, "profile {seed}: K mismatch {k_worst:e}");
        let samples: Vec<TangentPoint> = default_samples(&grid, 25, seed)
            .into_iter()
            .filter(|p| a.admissible(p))
            .collect();
        let expected = |p: &TangentPoint| -> berwald::Result<f64> {
            let y = fields.value(p.t, p.r)?;
            let (gg, kk, mm) = (y[0], y[1], y[2]);
            let k = conn.values(p.t, p.r)?;
            let (a_, b_) = (k[6] / k[9], k[7] / k[9]);
            let c_ = (k[8] * k[9] - k[6] * k[7]) / (k[9] * k[9]);
            let delta = mm * gg.exp() * (2.0 * a_ * b_ + c_) - b_ * b_ * (2.0 * kk).exp();
            Ok(p.theta.sin().powi(2) * (6.0 * kk).exp() * delta)
        };
        let det = determinant_formula("det", &a, &samples, &expected, 1e-6).map_err(e)?;
        ensure!(
            det.passed,
            "profile {seed}: det rel error {:e}",
            det.max_residual
        );
        det_worst = det_worst.max(det.max_residual);
    }
    Ok(format!(
        "10 profiles class 3; Levi-Civita {lc_worst:.1e}; det rel {det_worst:.1e}; K vs generator {k_worst:.1e}"
    ))
}

fn class5_suite(ledger: &mut Vec<Consistency>) -> Outcome {
    let tol = Tolerances::default();
    let cfg = fixture("class5_symmetric");
    let rep = run_classification(&cfg, &tol).map_err(e)?;
    ledger.push(consistency(
        "class5_symmetric",
        &rep,
        &cfg.connection,
        &cfg.grid,
        cfg.task.build.c1,
    ));
    ensure!(
        rep.class_label == Some(5) && rep.riemann_metrizable == Verdict::Yes,
        "class {:?} riemann {:?}",
        rep.class_label,
        rep.riemann_metrizable
    );
    let (c1, c2) = (cfg.task.build.c1, cfg.task.build.c2);
    let a = build_class5(&cfg.connection, &cfg.grid, c1, c2, &tol).map_err(e)?;
    // Hand-derived: a1 = 0, a2 = a3 = 1, φ = −r²/2 up to a constant fixed at the base point.
    let (_, rb) = cfg.grid.base_point();
    let phi = |r: f64| -(r * r - rb * rb) / 2.0;
    let samples: Vec<TangentPoint> = base_samples(&cfg)
        .into_iter()
        .filter(|p| a.admissible(p))
        .collect();
    let mut worst = 0.0f64;
    for p in &samples {
        let q = -p.tdot * p.tdot + p.rdot * p.rdot;
        let want = c1 * (-2.0 * phi(p.r)).exp() * q.abs() + c2 * p.w2();
        worst = worst.max((a.eval(p).map_err(e)? - want).abs() / want.abs().max(1e-12));
    }
    ensure!(worst <= 1e-8, "A differs from the closed form by {worst:e}");
    let h = horizontal_constancy(&a, &cfg.connection, &samples, 1e-6).map_err(e)?;
    ensure!(h.passed, "delta A residual {:e}", h.max_residual);
    let det = determinant_formula(
        "det",
        &a,
        &samples,
        &|p| Ok(-c1 * c1 * c2 * c2 * (-4.0 * phi(p.r)).exp() * p.theta.sin().powi(2)),
        1e-6,
    )
    .map_err(e)?;
    ensure!(det.passed, "det rel error {:e}", det.max_residual);

    let asym = fixture("class5_asymmetric");
    let rep = run_classification(&asym, &tol).map_err(e)?;
    ledger.push(consistency(
        "class5_asymmetric",
        &rep,
        &asym.connection,
        &asym.grid,
        1.0,
    ));
    ensure!(
        rep.riemann_metrizable == Verdict::No,
        "perturbed verdict {:?}",
        rep.riemann_metrizable
    );
    ensure!(
        matches!(
            build_class5(&asym.connection, &asym.grid, 1.0, -1.0, &tol),
            Err(Error::NotRiemannMetrizable(_))
        ),
        "perturbed fixture built a metric"
    );
    let fit = quadratic_fit_check(&asym.connection, &asym.grid, asym.samples.seed, 1e-3, false)
        .map_err(e)?;
    ensure!(
        fit.passed,
        "quadratic-fit residual {:e} not above 1e-3",
        fit.max_residual
    );
    Ok(format!(
        "A closed form {worst:.1e}; dA {:.1e}; det rel {:.1e}; perturbed: verdict no, fit residual {:.2e}",
        h.max_residual, det.max_residual, fit.max_residual
    ))
}

fn random_poly(rng: &mut ChaCha8Rng) -> Poly {
    let mut p = Poly::default();
    for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
        p = p.add(&Poly::term(rng.gen_range(-2.0..2.0), i, j));
    }
    p
}

fn identity_a5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for n in 0..100 {
        let polys: Vec<String> = (0..10).map(|_| random_poly(&mut rng).src()).collect();
        let src: Vec<(usize, &str)> = polys
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.as_str()))
            .collect();
        let conn = ConnectionProfile::from_sources(&src, Default::default()).map_err(e)?;
        let (t, r) = (rng.gen_range(0.5..2.5), rng.gen_range(0.5..2.5));
        let cp = curvature_profile_lenient(&conn, t, r).map_err(e)?;
        let a = cp.values();
        let res = (a[4] - (a[8] - a[11])).abs() / (1.0 + cp.max_abs_a());
        ensure!(res < 1e-10, "profile {n}: residual {res:e}");
        worst = worst.max(res);
    }
    Ok(format!("100 profiles, worst residual {worst:.1e}"))
}

fn geodesics() -> Outcome {
    let tol = Tolerances::default();
    let mut parts = Vec::new();
    for name in ["example1", "example2", "exponential"] {
        let cfg: JobConfig = fixture(name);
        let g = cfg.geodesic.ok_or("fixture lacks a [geodesic] block")?;
        ensure!(g.t_end == 0.5, "{name}: T = {}", g.t_end);
        let class = if name == "exponential" { 2 } else { 1 };
        let m = metrize(&cfg.connection, &cfg.grid, class, &cfg.task.build, &tol).map_err(e)?;
        let (agree, drift) =
            geodesic_agreement(m.lagrangian(), &cfg.connection, &g.start, 0.5, &tol).map_err(e)?;
        ensure!(
            agree.max_residual < 1e-6,
            "{name}: sup-norm discrepancy {:e}",
            agree.max_residual
        );
        ensure!(
            drift.max_residual < 1e-8,
            "{name}: drift {:e}",
            drift.max_residual
        );
        parts.push(format!(
            "{name} {:.0e}/{:.0e}",
            agree.max_residual, drift.max_residual
        ));
    }
    Ok(parts.join("; "))
}

fn cross_consistency(ledger: &[Consistency]) -> Outcome {
    let mut violations = Vec::new();
    for c in ledger {
        if c.riemann == Verdict::Yes && !(c.rank <= 2 && c.asymmetry.abs() < 1e-8) {
            violations.push(format!(
                "{}: riemann yes with rank {} asymmetry {}",
                c.name, c.rank, c.asymmetry
            ));
        }
        if c.metric_built == Some(false) {
            violations.push(format!(
                "{}: class {:?} metric construction failed",
                c.name, c.class
            ));
        }
    }
    let converse = ledger
        .iter()
        .filter(|c| c.metric_built == Some(true))
        .count();
    ensure!(violations.is_empty(), "{}", violations.join("; "));
    Ok(format!(
        "{} fixtures, {converse} metric constructions, 0 violations",
        ledger.len()
    ))
}

fn extra_fixture(ledger: &mut Vec<Consistency>, name: &str) -> Result<(), String> {
    let cfg = fixture(name);
    let rep = run_classification(&cfg, &Tolerances::default()).map_err(e)?;
    ledger.push(consistency(
        name,
        &rep,
        &cfg.connection,
        &cfg.grid,
        cfg.task.build.c1,
    ));
    Ok(())
}

fn main() {
    let mut ledger = Vec::new();
    let mut failures = 0;
    let mut report = |n: usize,
                      name: &str,
                      f: &mut dyn FnMut(&mut Vec<Consistency>) -> Outcome,
                      ledger: &mut Vec<Consistency>| {
        let start = Instant::now();
        let out = f(ledger);
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("PASS {n} {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {n} {name} ({secs:.1}s): {msg}");
            }
        }
    };
    report(1, "example-1 pipeline", &mut example1, &mut ledger);
    report(2, "example-2 pipeline", &mut example2, &mut ledger);
    report(3, "exponential pipeline", &mut exponential, &mut ledger);
    report(4, "class-4 flat pipeline", &mut flat, &mut ledger);
    report(5, "class-3 property suite", &mut class3_suite, &mut ledger);
    report(6, "class-5 suite", &mut class5_suite, &mut ledger);
    report(
        7,
        "a5 = a9 - a12 identity",
        &mut |_| identity_a5(),
        &mut ledger,
    );
    report(8, "geodesic agreement", &mut |_| geodesics(), &mut ledger);
    let _ = extra_fixture(&mut ledger, "minkowski_spherical");
    report(
        9,
        "riemann verdict cross-consistency",
        &mut |l| cross_consistency(l),
        &mut ledger,
    );
    println!("{} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
