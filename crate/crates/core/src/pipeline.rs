//! End-to-end runs over a [`JobConfig`]: classification, construction,
//! certification and trajectory comparison, collected into a [`Report`].

use crate::classify::{classify, ClassificationReport, Verdict};
use crate::config::JobConfig;
use crate::connection::TangentPoint;
use crate::error::{Error, Result};
use crate::geodesic::{integrate_finsler, integrate_spray};
use crate::lagrangian::{Lagrangian, Scaled};
use crate::metrize::{metrize, Metrization};
use crate::report::{
    signature_text, ConnectionSummary, FormReport, GeodesicReport, MetrizationReport, Outcome,
    Report, Status, TrajectorySummary,
};
use crate::tolerances::Tolerances;
use crate::verify::{
    berwald, determinant_formula, geodesic_agreement, hessian, homogeneity, horizontal_constancy,
    levi_civita_roundtrip, quadratic_fit_check, ratio_constancy, CheckResult, ResidualReport,
};

/// How far a run goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Classify,
    Metrize,
    Verify,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Classify => "classify",
            Stage::Metrize => "metrize",
            Stage::Verify => "verify",
            Stage::Report => "report",
        }
    }
}

/// Samples where the base config's domain predicate holds.
pub fn base_samples(cfg: &JobConfig) -> Vec<TangentPoint> {
    cfg.draw_samples(&|_| true)
}

/// Samples where every built form and the reference functions are defined.
pub fn form_samples(cfg: &JobConfig, m: &Metrization) -> Vec<TangentPoint> {
    cfg.draw_samples(&|p| {
        m.finsler.as_ref().is_none_or(|f| f.admissible(p))
            && m.riemann.as_ref().is_none_or(|r| r.admissible(p))
            && cfg
                .reference
                .lagrangian
                .as_ref()
                .is_none_or(|l| l.admissible(p))
            && cfg
                .reference
                .hessian_det
                .as_ref()
                .is_none_or(|l| l.admissible(p))
    })
}

pub fn run_classification(cfg: &JobConfig, tol: &Tolerances) -> Result<ClassificationReport> {
    classify(&cfg.connection, &cfg.grid, &base_samples(cfg), tol)
}

/// Whether a classification settles both questions it asks.
pub fn is_determinate(c: &ClassificationReport) -> bool {
    match c.finsler_metrizable {
        Verdict::Undetermined => false,
        Verdict::No => true,
        Verdict::Yes => c.class_label.is_some() && c.riemann_metrizable != Verdict::Undetermined,
    }
}

/// Class to build, honouring an explicit override, or the outcome that
/// stops the run.
pub fn class_to_build(
    cfg: &JobConfig,
    c: &ClassificationReport,
) -> std::result::Result<u8, Outcome> {
    if let Some(k) = cfg.task.class_override {
        return Ok(k);
    }
    match (c.finsler_metrizable, c.class_label) {
        (Verdict::Yes, Some(k)) => Ok(k),
        (Verdict::Undetermined, _) | (Verdict::Yes, None) => Err(Outcome::new(
            Status::Undetermined,
            "classification is undetermined; nothing to construct",
        )),
        (Verdict::No, _) => Err(Outcome::new(
            Status::Fail,
            "connection is not Finsler metrizable",
        )),
    }
}

/// Runs a check and turns an error into a failed result naming it.
fn guarded(name: &str, tolerance: f64, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult {
        name: name.to_string(),
        max_residual: f64::NAN,
        witness: None,
        tolerance,
        passed: false,
        evaluated: 0,
        skipped: 0,
        note: Some(e.to_string()),
    })
}

fn prefixed(prefix: &str, mut c: CheckResult) -> CheckResult {
    c.name = format!("{prefix}.{}", c.name);
    c
}

/// Mean of `l1/l2` over the samples where both are defined.
pub fn mean_ratio(l1: &dyn Lagrangian, l2: &dyn Lagrangian, samples: &[TangentPoint]) -> f64 {
    let ratios: Vec<f64> = samples
        .iter()
        .filter_map(|p| match (l1.eval(p), l2.eval(p)) {
            (Ok(a), Ok(b)) if b != 0.0 && (a / b).is_finite() => Some(a / b),
            _ => None,
        })
        .collect();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

/// Certification checks of every built form. Returns the residuals and
/// the observed Hessian signatures of the Finsler and Riemann forms.
pub fn certify(
    cfg: &JobConfig,
    m: &Metrization,
    samples: &[TangentPoint],
    tol: &Tolerances,
) -> (ResidualReport, [Option<String>; 2]) {
    let mut rep = ResidualReport::new(cfg.samples.seed);
    let mut sigs = [None, None];
    let conn = &cfg.connection;
    let forms: [(&str, Option<&dyn Lagrangian>); 2] = [
        ("finsler", m.finsler.as_ref().map(|f| f as &dyn Lagrangian)),
        ("riemann", m.riemann.as_ref().map(|r| r as &dyn Lagrangian)),
    ];
    for (slot, (prefix, l)) in forms.into_iter().enumerate() {
        let Some(l) = l else { continue };
        rep.push(prefixed(
            prefix,
            guarded("horizontal_constancy", tol.horizontal, || {
                horizontal_constancy(l, conn, samples, tol.horizontal)
            }),
        ));
        rep.push(prefixed(
            prefix,
            guarded("homogeneity", tol.homogeneity, || {
                homogeneity(l, samples, tol.homogeneity)
            }),
        ));
        let h = hessian(l, samples, tol.hessian_det);
        rep.push(prefixed(
            prefix,
            guarded("hessian_nondegenerate", 1.0 / tol.hessian_det, || {
                h.clone().map(|h| h.check)
            }),
        ));
        if let Ok(h) = h {
            sigs[slot] = signature_text(h.signature);
        }
    }
    if let Some(r) = &m.riemann {
        rep.push(prefixed(
            "riemann",
            guarded("levi_civita", tol.levi_civita, || {
                levi_civita_roundtrip(r, conn, &cfg.grid, tol.levi_civita)
            }),
        ));
    }
    let primary = m.lagrangian();
    if let Some(reference) = &cfg.reference.lagrangian {
        rep.push(guarded("reference.ratio", tol.ratio, || {
            ratio_constancy("reference.ratio", primary, reference, samples, tol.ratio)
        }));
    }
    if let Some(det) = &cfg.reference.hessian_det {
        // The expected determinant belongs to the reference function, which
        // the built one matches only up to a constant factor.
        let factor = match &cfg.reference.lagrangian {
            Some(reference) => mean_ratio(primary, reference, samples),
            None => 1.0,
        };
        let normalized = Scaled {
            inner: primary,
            factor: 1.0 / factor,
        };
        rep.push(guarded("reference.hessian_det", tol.determinant, || {
            determinant_formula(
                "reference.hessian_det",
                &normalized,
                samples,
                &|p| det.eval(p),
                tol.determinant,
            )
        }));
    }
    (rep, sigs)
}

/// Berwald check, quadratic-fit falsification and, with a `[geodesic]`
/// block, trajectory agreement and drift.
pub fn extended_checks(
    cfg: &JobConfig,
    m: &Metrization,
    riemann: Verdict,
    samples: &[TangentPoint],
    tol: &Tolerances,
    rep: &mut ResidualReport,
) {
    let l = m.lagrangian();
    rep.push(guarded("berwald", tol.berwald, || {
        berwald(l, samples, tol.berwald)
    }));
    if riemann != Verdict::Undetermined {
        rep.push(guarded("quadratic_fit", tol.quadratic_fit, || {
            quadratic_fit_check(
                &cfg.connection,
                &cfg.grid,
                cfg.samples.seed,
                tol.quadratic_fit,
                riemann == Verdict::Yes,
            )
        }));
    }
    if let Some(g) = &cfg.geodesic {
        match geodesic_agreement(l, &cfg.connection, &g.start, g.t_end, tol) {
            Ok((a, d)) => {
                rep.push(a);
                rep.push(d);
            }
            Err(e) => rep.push(guarded("geodesic_agreement", tol.geodesic, || Err(e))),
        }
    }
}

/// Trajectories from the `[geodesic]` block: autoparallel, and the
/// Finsler Euler-Lagrange geodesic of `l` when given.
pub fn geodesics(
    cfg: &JobConfig,
    l: Option<&dyn Lagrangian>,
    tol: &Tolerances,
) -> Result<(
    crate::geodesic::Trajectory,
    Option<crate::geodesic::Trajectory>,
    GeodesicReport,
)> {
    let g = cfg.geodesic.ok_or_else(|| Error::Config {
        line: 0,
        message: "no [geodesic] block and no initial state given".into(),
    })?;
    let a = integrate_spray(&cfg.connection, &g.start, g.t_end, g.n_out, tol.ode)?;
    let b = match l {
        Some(l) => Some(integrate_finsler(l, &g.start, g.t_end, g.n_out, tol.ode)?),
        None => None,
    };
    let rep = GeodesicReport {
        start: g.start,
        t_end: g.t_end,
        n_out: g.n_out,
        autoparallel: TrajectorySummary::of(&a),
        finsler: b.as_ref().map(TrajectorySummary::of),
        discrepancy: b.as_ref().map(|b| a.sup_distance(b)),
    };
    Ok((a, b, rep))
}

fn form_report(
    formula: String,
    constants: &std::collections::BTreeMap<String, f64>,
    residuals: &std::collections::BTreeMap<String, f64>,
    signature: Option<String>,
    tables: Result<Vec<crate::potential::ScalarTable>>,
) -> FormReport {
    FormReport {
        formula,
        constants: constants.clone(),
        field_residuals: residuals.clone(),
        signature,
        tables: tables.unwrap_or_default(),
    }
}

fn metrization_report(
    cfg: &JobConfig,
    m: &Metrization,
    sigs: [Option<String>; 2],
) -> MetrizationReport {
    let [fs, rs] = sigs;
    MetrizationReport {
        class: m.class,
        finsler: m.finsler.as_ref().map(|f| {
            form_report(
                f.formula_text(),
                &f.constants,
                &f.field_residuals,
                fs,
                f.tables(&cfg.grid),
            )
        }),
        riemann: m.riemann.as_ref().map(|r| {
            form_report(
                r.formula_text(),
                &r.constants,
                &r.field_residuals,
                rs,
                r.tables(&cfg.grid),
            )
        }),
    }
}

fn empty_report(cfg: &JobConfig, command: &str, config: &str, tol: &Tolerances) -> Report {
    Report {
        schema: crate::report::SCHEMA,
        command: command.to_string(),
        config: config.to_string(),
        seed: cfg.samples.seed,
        sample_count: cfg.samples.count,
        grid: cfg.grid,
        tolerances: *tol,
        connection: ConnectionSummary::of(&cfg.connection),
        classification: None,
        metrization: None,
        verification: None,
        geodesic: None,
        outcome: Outcome::new(Status::Pass, ""),
    }
}

/// Runs `stage` and everything before it. Built forms are only included
/// when every certification check passed.
pub fn run(cfg: &JobConfig, config_name: &str, stage: Stage, tol: &Tolerances) -> Report {
    let mut rep = empty_report(cfg, stage.name(), config_name, tol);
    let cls = match run_classification(cfg, tol) {
        Ok(c) => c,
        Err(e) => {
            rep.outcome = Outcome::new(Status::Error, e.to_string());
            return rep;
        }
    };
    let determinate = is_determinate(&cls);
    let riemann = cls.riemann_metrizable;
    let class = class_to_build(cfg, &cls);
    rep.classification = Some(cls);
    if stage == Stage::Classify {
        rep.outcome = if determinate {
            Outcome::new(Status::Pass, "classification is determinate")
        } else {
            Outcome::new(Status::Undetermined, "classification is undetermined")
        };
        return rep;
    }
    let class = match class {
        Ok(k) => k,
        Err(o) => {
            rep.outcome = o;
            return rep;
        }
    };
    let m = match metrize(&cfg.connection, &cfg.grid, class, &cfg.task.build, tol) {
        Ok(m) => m,
        Err(e) => {
            rep.outcome = Outcome::new(Status::Fail, format!("construction failed: {e}"));
            return rep;
        }
    };
    let samples = form_samples(cfg, &m);
    rep.sample_count = samples.len();
    let (mut checks, sigs) = certify(cfg, &m, &samples, tol);
    if stage >= Stage::Verify {
        extended_checks(cfg, &m, riemann, &samples, tol, &mut checks);
    }
    if stage == Stage::Report && cfg.geodesic.is_some() {
        match geodesics(cfg, Some(m.lagrangian()), tol) {
            Ok((_, _, g)) => rep.geodesic = Some(g),
            Err(e) => {
                checks.push(guarded("trajectories", tol.geodesic, || Err(e)));
            }
        }
    }
    rep.outcome = match checks.first_failure() {
        None => {
            rep.metrization = Some(metrization_report(cfg, &m, sigs));
            Outcome::new(
                Status::Pass,
                format!("class {class}: all {} checks passed", checks.checks.len()),
            )
        }
        Some(f) => Outcome::new(
            Status::Fail,
            format!(
                "check `{}` failed: residual {:e} vs tolerance {:e}{}",
                f.name,
                f.max_residual,
                f.tolerance,
                f.note
                    .as_ref()
                    .map(|n| format!(" ({n})"))
                    .unwrap_or_default()
            ),
        ),
    };
    rep.verification = Some(checks);
    rep
}
