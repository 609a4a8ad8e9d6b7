//! Finsler- and Riemann-metrizability decisions and class assignment.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::connection::{ConnectionProfile, TangentPoint};
use crate::curvature::{
    bracket_vectors_with, curvature_profile_lenient, ricci_asymmetry, vertical_holonomy_rank,
    Corner, CurvatureProfile,
};
use crate::error::{Error, Result};
use crate::sampling::Grid;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Undetermined,
}

/// Largest absolute value of a named quantity over the grid and where it
/// occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evidence {
    pub max_abs: f64,
    pub t: f64,
    pub r: f64,
}

/// Three-way status of a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridStatus {
    /// Below the zero threshold everywhere.
    Zero,
    /// Above the nonzero threshold everywhere.
    Nonzero,
    /// Zero on part of the grid and nonzero elsewhere.
    Mixed,
    /// Some values fall between the two thresholds.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub finsler_metrizable: Verdict,
    pub class_label: Option<u8>,
    pub riemann_metrizable: Verdict,
    pub riemann_explanation: String,
    /// Signed value of `a1 + a4 + 2a5` with the largest magnitude on the grid.
    pub ricci_asymmetry: f64,
    pub holonomy_rank: usize,
    pub evidence: BTreeMap<String, Evidence>,
    pub statuses: BTreeMap<String, GridStatus>,
    pub zero_threshold: f64,
    pub grid: Grid,
    pub sample_count: usize,
    pub notes: Vec<String>,
}

/// Per-grid-point values of named quantities.
#[derive(Debug, Clone, Default)]
pub struct GridTable {
    pub points: Vec<(f64, f64)>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl GridTable {
    fn push(&mut self, name: &str, value: f64) {
        self.columns
            .entry(name.to_string())
            .or_default()
            .push(value);
    }

    pub fn evidence(&self, name: &str) -> Option<Evidence> {
        let col = self.columns.get(name)?;
        let mut best = Evidence {
            max_abs: 0.0,
            t: self.points[0].0,
            r: self.points[0].1,
        };
        for (v, &(t, r)) in col.iter().zip(&self.points) {
            if v.abs() > best.max_abs || v.is_nan() {
                best = Evidence {
                    max_abs: v.abs(),
                    t,
                    r,
                };
            }
        }
        Some(best)
    }

    pub fn status(&self, name: &str, zero: f64, nonzero: f64) -> GridStatus {
        let Some(col) = self.columns.get(name) else {
            return GridStatus::Zero;
        };
        let (mut z, mut nz, mut gap) = (false, false, false);
        for v in col {
            let x = v.abs();
            if x < zero {
                z = true;
            } else if x > nonzero {
                nz = true;
            } else {
                gap = true;
            }
        }
        match (z, nz, gap) {
            (_, _, true) => GridStatus::Gap,
            (true, true, _) => GridStatus::Mixed,
            (false, true, _) => GridStatus::Nonzero,
            _ => GridStatus::Zero,
        }
    }
}

/// Fixed velocities used to test the proportionality conditions.
const PROBE_VELOCITIES: [[f64; 4]; 3] = [
    [1.0, 0.3, 0.2, -0.1],
    [0.7, -0.5, 0.4, 0.3],
    [1.2, 0.1, -0.3, 0.5],
];
const PROBE_THETA: f64 = 1.1;

fn norm(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sine of the angle between `x` and `y`, or 0 when either is negligible.
fn proportionality_defect(x: &[f64; 4], y: &[f64; 4], floor: f64) -> f64 {
    let (nx, ny) = (norm(x), norm(y));
    if nx <= floor || ny <= floor {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = x[i] * y[j] - x[j] * y[i];
            s += m * m;
        }
    }
    s.sqrt() / (nx * ny)
}

/// All quantities the classification depends on, tabulated on the grid.
#[derive(Debug, Clone)]
pub struct ConstraintTable {
    pub profiles: Vec<CurvatureProfile>,
    pub table: GridTable,
    /// `true` when `k7..k10` vanish on the whole grid.
    pub w_corner_zero: bool,
    /// `zero * (1 + max |aᵢ|)`.
    pub zero_threshold: f64,
}

fn check_supported(conn: &ConnectionProfile, grid: &Grid) -> Result<()> {
    conn.check_bound()?;
    for idx in [10, 11] {
        if conn.k[idx].is_zero() {
            continue;
        }
        for (t, r) in grid.points() {
            let v = conn.k[idx].eval_f64(t, r, &conn.params)?;
            if v != 0.0 {
                return Err(Error::UnsupportedConnection(format!(
                    "k{} = {} is nonzero at (t, r) = ({t}, {r}); the classification covers k11 = k12 = 0",
                    idx + 1,
                    conn.k[idx]
                )));
            }
        }
    }
    Ok(())
}

/// Residuals of the Finsler metrizability conditions on the grid.
pub fn check_finsler_constraints(
    conn: &ConnectionProfile,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<ConstraintTable> {
    check_supported(conn, grid)?;
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut profiles = Vec::with_capacity(points.len());
    for &(t, r) in &points {
        profiles.push(curvature_profile_lenient(conn, t, r)?);
    }
    let max_a = profiles.iter().map(|p| p.max_abs_a()).fold(0.0, f64::max);
    let zero_threshold = tol.zero * (1.0 + max_a);
    let n_zero = profiles
        .iter()
        .filter(|p| p.corner == Corner::WCornerZero)
        .count();
    if let Some(p) = profiles.iter().find(|p| p.corner == Corner::K10Degenerate) {
        return Err(Error::K10Degenerate { t: p.t, r: p.r });
    }
    if n_zero != 0 && n_zero != profiles.len() {
        return Err(Error::MixedClass(format!(
            "k7..k10 vanish at {n_zero} of {} grid points",
            profiles.len()
        )));
    }
    let w_corner_zero = n_zero == profiles.len();

    let mut table = GridTable {
        points: points.clone(),
        ..Default::default()
    };
    for cp in &profiles {
        let a = cp.values();
        let ai = |i: usize| a[i - 1];
        table.push("ricci_asymmetry", ricci_asymmetry(cp));
        table.push("a5-(a9-a12)", ai(5) - (ai(9) - ai(12)));
        table.push("a1+a4", ai(1) + ai(4));
        table.push("a1*a4-a2*a3", ai(1) * ai(4) - ai(2) * ai(3));
        table.push("a1*a3-a2*a4", ai(1) * ai(3) - ai(2) * ai(4));
        table.push(
            "tr-bracket",
            (1..=5).map(|i| ai(i).abs()).fold(0.0, f64::max),
        );
        if let (Some(abc), Some(def)) = (cp.abc, cp.def) {
            let (aa, bb, cc) = (abc[0].value, abc[1].value, abc[2].value);
            let abpc = aa * bb + cc;
            table.push(
                "A",
                bb * (aa * ai(1) + ai(2)) + abpc * (aa * ai(3) + ai(4))
                    - ai(5) * (2.0 * aa * bb + cc),
            );
            table.push("B", aa * (aa * ai(3) + ai(4)) - (aa * ai(1) + ai(2)));
            table.push(
                "C",
                abpc * ai(3) + bb * (aa * ai(3) + ai(4)) + bb * (ai(1) - 2.0 * ai(5)),
            );
            table.push("a6-a*a7", ai(6) - aa * ai(7));
            table.push("a8-b*a7", ai(8) - bb * ai(7));
            table.push("a9-(ab+c)*a7", ai(9) - abpc * ai(7));
            table.push("a10-a*a11", ai(10) - aa * ai(11));
            table.push("a12-b*a11", ai(12) - bb * ai(11));
            table.push("a13-(ab+c)*a11", ai(13) - abpc * ai(11));
            table.push("D", def[0].value);
            table.push("E", def[1].value);
            table.push("F", def[2].value);
        } else {
            for i in 6..=13 {
                table.push(&format!("a{i}"), ai(i));
            }
        }
        let (mut d1, mut d2) = (0.0f64, 0.0f64);
        for v in PROBE_VELOCITIES {
            let p = TangentPoint::new([cp.t, cp.r, PROBE_THETA, 0.0], v);
            let bs = bracket_vectors_with(cp, &p, 2);
            let find = |label: &str| bs.iter().find(|b| b.label == label).unwrap().components;
            let y = find("[t,r]");
            let floor = zero_threshold * norm(&v);
            d1 = d1.max(proportionality_defect(&find("[t,[t,r]]"), &y, floor));
            d2 = d2.max(proportionality_defect(&find("[r,[t,r]]"), &y, floor));
        }
        table.push("proportionality[t,[t,r]]", d1);
        table.push("proportionality[r,[t,r]]", d2);
    }
    Ok(ConstraintTable {
        profiles,
        table,
        w_corner_zero,
        zero_threshold,
    })
}

impl ConstraintTable {
    /// Names of the residuals that must vanish for Finsler metrizability.
    pub fn constraint_names(&self) -> Vec<&'static str> {
        let mut v = vec!["proportionality[t,[t,r]]", "proportionality[r,[t,r]]"];
        if self.w_corner_zero {
            v.extend(["a6", "a7", "a8", "a9", "a10", "a11", "a12", "a13"]);
        } else {
            v.extend([
                "A",
                "B",
                "C",
                "a6-a*a7",
                "a8-b*a7",
                "a9-(ab+c)*a7",
                "a10-a*a11",
                "a12-b*a11",
                "a13-(ab+c)*a11",
            ]);
        }
        v
    }

    pub fn status(&self, name: &str, tol: &Tolerances) -> GridStatus {
        self.table.status(name, self.zero_threshold, tol.nonzero)
    }
}

/// Outcome of class assignment before the Riemann verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAssignment {
    pub finsler_metrizable: Verdict,
    pub class_label: Option<u8>,
    pub notes: Vec<String>,
}

/// Assigns the class from the tabulated constraints.
pub fn assign_class_from(ct: &ConstraintTable, tol: &Tolerances) -> Result<ClassAssignment> {
    let mut notes = Vec::new();
    let mut undetermined = false;
    for name in ct.constraint_names() {
        match ct.status(name, tol) {
            GridStatus::Zero => {}
            GridStatus::Gap => {
                undetermined = true;
                notes.push(format!("constraint {name} is in the undecided band"));
            }
            GridStatus::Nonzero | GridStatus::Mixed => {
                notes.push(format!("constraint {name} is violated"));
                return Ok(ClassAssignment {
                    finsler_metrizable: Verdict::No,
                    class_label: None,
                    notes,
                });
            }
        }
    }
    if undetermined {
        return Ok(ClassAssignment {
            finsler_metrizable: Verdict::Undetermined,
            class_label: None,
            notes,
        });
    }
    let st = |n: &str| ct.status(n, tol);
    let mixed = |n: &str| Error::MixedClass(format!("{n} vanishes on part of the grid only"));
    let gap = |n: &str, notes: &mut Vec<String>| {
        notes.push(format!("{n} is in the undecided band"));
        ClassAssignment {
            finsler_metrizable: Verdict::Undetermined,
            class_label: None,
            notes: notes.clone(),
        }
    };
    let outside = |why: String, notes: &mut Vec<String>| {
        notes.push(why);
        ClassAssignment {
            finsler_metrizable: Verdict::No,
            class_label: None,
            notes: notes.clone(),
        }
    };
    let found = |c: u8, notes: &Vec<String>| ClassAssignment {
        finsler_metrizable: Verdict::Yes,
        class_label: Some(c),
        notes: notes.clone(),
    };

    if !ct.w_corner_zero {
        match st("D") {
            GridStatus::Nonzero => return Ok(found(1, &notes)),
            GridStatus::Mixed => return Err(mixed("D")),
            GridStatus::Gap => return Ok(gap("D", &mut notes)),
            GridStatus::Zero => {}
        }
        let (e, f) = (st("E"), st("F"));
        for (n, s) in [("E", e), ("F", f)] {
            if s == GridStatus::Mixed {
                return Err(mixed(n));
            }
            if s == GridStatus::Gap {
                return Ok(gap(n, &mut notes));
            }
        }
        return Ok(match (e, f) {
            (GridStatus::Nonzero, GridStatus::Nonzero) => found(2, &notes),
            (GridStatus::Zero, GridStatus::Zero) => found(3, &notes),
            _ => outside(
                format!(
                    "D = 0 with E {e:?} and F {f:?} is outside the non-Riemannian classification"
                ),
                &mut notes,
            ),
        });
    }
    match st("tr-bracket") {
        GridStatus::Zero => Ok(found(4, &notes)),
        GridStatus::Mixed => Err(mixed("[δt,δr]")),
        GridStatus::Gap => Ok(gap("[δt,δr]", &mut notes)),
        GridStatus::Nonzero => match st("a1*a4-a2*a3") {
            GridStatus::Nonzero => {
                if st("a1*a3-a2*a4") != GridStatus::Nonzero {
                    notes.push("the variant a1*a3 - a2*a4 vanishes somewhere on the grid; the a1*a4 - a2*a3 form is used".into());
                }
                Ok(found(5, &notes))
            }
            GridStatus::Mixed => Err(mixed("a1*a4 - a2*a3")),
            GridStatus::Gap => Ok(gap("a1*a4 - a2*a3", &mut notes)),
            GridStatus::Zero => Ok(outside(
                "[δt,δr] ≠ 0 with a1*a4 - a2*a3 = 0 is outside the non-Riemannian classification"
                    .into(),
                &mut notes,
            )),
        },
    }
}

pub fn assign_class(conn: &ConnectionProfile, grid: &Grid, tol: &Tolerances) -> Result<Option<u8>> {
    let ct = check_finsler_constraints(conn, grid, tol)?;
    Ok(assign_class_from(&ct, tol)?.class_label)
}

fn signed_extreme(ct: &ConstraintTable, name: &str) -> f64 {
    ct.table.columns[name]
        .iter()
        .cloned()
        .fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc })
}

/// Applies the Riemann-metrizability rules and cross-checks them against
/// the holonomy rank and the Ricci asymmetry.
pub fn riemann_verdict(
    ct: &ConstraintTable,
    assignment: &ClassAssignment,
    rank: usize,
    tol: &Tolerances,
) -> Result<(Verdict, String)> {
    let asym = ct.status("ricci_asymmetry", tol);
    let (verdict, why) = match assignment.class_label {
        Some(c @ (1 | 2)) => {
            if rank != 3 {
                return Err(Error::InternalInconsistency(format!(
                    "class {c} requires holonomy rank 3, found {rank}"
                )));
            }
            (
                Verdict::No,
                format!("class {c}: the vertical holonomy has rank 3"),
            )
        }
        Some(c @ (3 | 4)) => (
            Verdict::Yes,
            format!("class {c}: an affinely equivalent metric exists"),
        ),
        Some(5) => match ct.status("a1+a4", tol) {
            GridStatus::Zero => (Verdict::Yes, "class 5 with a1 + a4 = 0".to_string()),
            GridStatus::Gap => (
                Verdict::Undetermined,
                "class 5 with a1 + a4 in the undecided band".to_string(),
            ),
            _ => (
                Verdict::No,
                "class 5 with a1 + a4 ≠ 0 (non-symmetric Ricci tensor)".to_string(),
            ),
        },
        _ => (
            Verdict::Undetermined,
            "not covered by the non-Riemannian classification".to_string(),
        ),
    };
    if verdict == Verdict::Yes {
        if rank > 2 {
            return Err(Error::InternalInconsistency(format!(
                "Riemann metrizable verdict with holonomy rank {rank}"
            )));
        }
        if asym != GridStatus::Zero {
            return Err(Error::InternalInconsistency(
                "Riemann metrizable verdict with non-symmetric Ricci tensor".into(),
            ));
        }
    }
    Ok((verdict, why))
}

/// Full classification: constraints, class, holonomy rank, Riemann verdict.
pub fn classify(
    conn: &ConnectionProfile,
    grid: &Grid,
    samples: &[TangentPoint],
    tol: &Tolerances,
) -> Result<ClassificationReport> {
    let ct = check_finsler_constraints(conn, grid, tol)?;
    let assignment = assign_class_from(&ct, tol)?;
    let rank = vertical_holonomy_rank(conn, samples, tol.rank)?;
    let (riemann, why) = riemann_verdict(&ct, &assignment, rank, tol)?;
    let mut evidence = BTreeMap::new();
    let mut statuses = BTreeMap::new();
    for name in ct.table.columns.keys() {
        evidence.insert(name.clone(), ct.table.evidence(name).unwrap());
        statuses.insert(name.clone(), ct.status(name, tol));
    }
    Ok(ClassificationReport {
        finsler_metrizable: assignment.finsler_metrizable,
        class_label: assignment.class_label,
        riemann_metrizable: riemann,
        riemann_explanation: why,
        ricci_asymmetry: signed_extreme(&ct, "ricci_asymmetry"),
        holonomy_rank: rank,
        evidence,
        statuses,
        zero_threshold: ct.zero_threshold,
        grid: *grid,
        sample_count: samples.len(),
        notes: assignment.notes,
    })
}
