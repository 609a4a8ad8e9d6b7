//! Structured run reports: a JSON document (the stable interface) and a
//! human-readable table rendered from the same data.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::classify::ClassificationReport;
use crate::connection::{ConnectionProfile, TangentPoint};
use crate::geodesic::Trajectory;
use crate::lagrangian::Signature;
use crate::ode::OdeStats;
use crate::potential::ScalarTable;
use crate::sampling::Grid;
use crate::tolerances::Tolerances;
use crate::verify::ResidualReport;

/// Version tag of the JSON layout.
pub const SCHEMA: &str = "berwald-report/1";

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub config: String,
    pub seed: u64,
    pub sample_count: usize,
    pub grid: Grid,
    pub tolerances: Tolerances,
    pub connection: ConnectionSummary,
    pub classification: Option<ClassificationReport>,
    pub metrization: Option<MetrizationReport>,
    pub verification: Option<ResidualReport>,
    pub geodesic: Option<GeodesicReport>,
    pub outcome: Outcome,
}

/// Sources of `k1..k12` and the parameter bindings.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionSummary {
    pub coefficients: BTreeMap<String, String>,
    pub parameters: BTreeMap<String, f64>,
}

impl ConnectionSummary {
    pub fn of(conn: &ConnectionProfile) -> Self {
        ConnectionSummary {
            coefficients: (0..12)
                .map(|i| (format!("k{:02}", i + 1), conn.k[i].to_string()))
                .collect(),
            parameters: conn.params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }
}

/// One built form with its certification data.
#[derive(Debug, Clone, Serialize)]
pub struct FormReport {
    pub formula: String,
    pub constants: BTreeMap<String, f64>,
    pub field_residuals: BTreeMap<String, f64>,
    pub signature: Option<String>,
    pub tables: Vec<ScalarTable>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetrizationReport {
    pub class: u8,
    pub finsler: Option<FormReport>,
    pub riemann: Option<FormReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub integrator: String,
    pub end: TangentPoint,
    pub stats: OdeStats,
}

impl TrajectorySummary {
    pub fn of(t: &Trajectory) -> Self {
        TrajectorySummary {
            integrator: t.integrator.clone(),
            end: t.last(),
            stats: t.stats,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicReport {
    pub start: TangentPoint,
    pub t_end: f64,
    pub n_out: usize,
    pub autoparallel: TrajectorySummary,
    pub finsler: Option<TrajectorySummary>,
    /// Sup-norm distance between the two trajectories.
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Undetermined,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Error => 1,
            Status::Undetermined => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub status: Status,
    pub exit_code: i32,
    pub message: String,
}

impl Outcome {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        Outcome {
            status,
            exit_code: status.exit_code(),
            message: message.into(),
        }
    }
}

pub fn signature_text(s: Option<Signature>) -> Option<String> {
    s.map(|s| s.to_string())
}

fn opt_class(c: Option<u8>) -> String {
    c.map_or("none".into(), |c| c.to_string())
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text rendering for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        writeln!(w, "command      {}", self.command).unwrap();
        writeln!(w, "config       {}", self.config).unwrap();
        writeln!(
            w,
            "grid         t in [{}, {}], r in [{}, {}], {}x{}",
            self.grid.t_range.0,
            self.grid.t_range.1,
            self.grid.r_range.0,
            self.grid.r_range.1,
            self.grid.nt,
            self.grid.nr
        )
        .unwrap();
        writeln!(
            w,
            "seed         {} ({} samples)",
            self.seed, self.sample_count
        )
        .unwrap();
        if let Some(c) = &self.classification {
            writeln!(w, "finsler      {:?}", c.finsler_metrizable).unwrap();
            writeln!(w, "class        {}", opt_class(c.class_label)).unwrap();
            writeln!(
                w,
                "riemann      {:?} ({})",
                c.riemann_metrizable, c.riemann_explanation
            )
            .unwrap();
            writeln!(w, "holonomy     rank {}", c.holonomy_rank).unwrap();
            writeln!(w, "ricci asym   {:e}", c.ricci_asymmetry).unwrap();
            for n in &c.notes {
                writeln!(w, "note         {n}").unwrap();
            }
        }
        if let Some(m) = &self.metrization {
            for (kind, f) in [("finsler", &m.finsler), ("riemann", &m.riemann)] {
                if let Some(f) = f {
                    writeln!(w, "{kind:<12} {}", f.formula).unwrap();
                    for (k, v) in &f.constants {
                        writeln!(w, "  {k:<10} {v}").unwrap();
                    }
                    if let Some(s) = &f.signature {
                        writeln!(w, "  signature  {s}").unwrap();
                    }
                }
            }
        }
        if let Some(v) = &self.verification {
            writeln!(
                w,
                "{:<36} {:>12} {:>12}  status",
                "check", "residual", "tolerance"
            )
            .unwrap();
            for c in &v.checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                writeln!(
                    w,
                    "{:<36} {:>12.3e} {:>12.3e}  {status}",
                    c.name, c.max_residual, c.tolerance
                )
                .unwrap();
            }
        }
        if let Some(g) = &self.geodesic {
            let e = g.autoparallel.end;
            writeln!(
                w,
                "geodesic     end (t, r, theta, phi) = ({}, {}, {}, {})",
                e.t, e.r, e.theta, e.phi
            )
            .unwrap();
            if let Some(d) = g.discrepancy {
                writeln!(w, "discrepancy  {d:e}").unwrap();
            }
        }
        writeln!(
            w,
            "outcome      {:?}: {}",
            self.outcome.status, self.outcome.message
        )
        .unwrap();
        out
    }
}
