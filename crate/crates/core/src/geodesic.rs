//! Autoparallels of the connection and geodesics of a Finsler function.

use std::fmt::Write as _;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::connection::{spray_coefficients, ConnectionProfile, TangentPoint};
use crate::error::{Error, Result};
use crate::lagrangian::{vertical_metric, Lagrangian, TANGENT_NAMES};
use crate::ode::{integrate, OdeOptions, OdeStats};

/// Chart limits: `r ≥ r_min` and `θ ∈ [margin, π − margin]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartGuard {
    pub r_min: f64,
    pub theta_margin: f64,
}

impl Default for ChartGuard {
    fn default() -> Self {
        ChartGuard {
            r_min: 1e-3,
            theta_margin: 1e-3,
        }
    }
}

impl ChartGuard {
    fn check(&self, s: f64, y: &[f64]) -> Result<()> {
        let reason = if !y.iter().all(|v| v.is_finite()) {
            Some("state is not finite".to_string())
        } else if y[1] < self.r_min {
            Some(format!("r = {} below r_min = {}", y[1], self.r_min))
        } else if y[2].sin() < self.theta_margin {
            Some(format!(
                "sin(theta) = {} below {}",
                y[2].sin(),
                self.theta_margin
            ))
        } else {
            None
        };
        match reason {
            None => Ok(()),
            Some(why) => Err(Error::ChartExit {
                s,
                reason: format!("{why}; state {y:?}"),
            }),
        }
    }
}

/// Sampled solution of a second-order system in the eight coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub integrator: String,
    pub s: Vec<f64>,
    pub states: Vec<[f64; 8]>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn point(&self, k: usize) -> TangentPoint {
        TangentPoint::from_array(&self.states[k])
    }

    pub fn last(&self) -> TangentPoint {
        self.point(self.states.len() - 1)
    }

    /// Largest componentwise difference to another trajectory sampled at
    /// the same parameters.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Columnar text: a header naming the columns, then one state per row.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("s");
        for n in TANGENT_NAMES {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
        for (s, y) in self.s.iter().zip(&self.states) {
            write!(out, "{s:.17e}").unwrap();
            for v in y {
                write!(out, " {v:.17e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn run<F>(
    label: &str,
    rhs: F,
    p0: &TangentPoint,
    t_end: f64,
    n_out: usize,
    tol: f64,
) -> Result<Trajectory>
where
    F: FnMut(&TangentPoint) -> Result<[f64; 4]>,
{
    if !(t_end > 0.0) || n_out < 2 {
        return Err(Error::Domain(format!(
            "need T > 0 and at least 2 output points, got T = {t_end}, n_out = {n_out}"
        )));
    }
    if !p0.is_valid() {
        return Err(Error::Domain(format!("invalid initial state {p0:?}")));
    }
    let guard = ChartGuard::default();
    guard.check(0.0, &p0.to_array())?;
    let s: Vec<f64> = (0..n_out)
        .map(|k| t_end * k as f64 / (n_out - 1) as f64)
        .collect();
    let mut rhs = rhs;
    let sol = integrate(
        |_, y, dy| {
            let p = TangentPoint::from_array(&y.try_into().unwrap());
            let g = rhs(&p)?;
            dy[..4].copy_from_slice(&y[4..]);
            for a in 0..4 {
                dy[4 + a] = -2.0 * g[a];
            }
            Ok(())
        },
        0.0,
        &p0.to_array(),
        t_end,
        &s,
        &OdeOptions::tight(tol),
        |s, y| guard.check(s, y),
    )?;
    Ok(Trajectory {
        integrator: label.to_string(),
        s,
        states: sol
            .outputs
            .iter()
            .map(|y| y.as_slice().try_into().unwrap())
            .collect(),
        stats: sol.stats,
    })
}

/// Autoparallels `ẍᵃ = −2Gᵃ(x, ẋ)` with `Gᵃ = ½ Γᵃ_bc ẋᵇ ẋᶜ`.
pub fn integrate_spray(
    conn: &ConnectionProfile,
    p0: &TangentPoint,
    t_end: f64,
    n_out: usize,
    tol: f64,
) -> Result<Trajectory> {
    run(
        "autoparallel",
        |p| spray_coefficients(conn, p),
        p0,
        t_end,
        n_out,
        tol,
    )
}

/// Spray of a Finsler function:
/// `Gᵃ = ¼ gᵃᵇ (ẋᶜ ∂_c ∂̇_b L − ∂_b L)`.
pub fn finsler_spray(l: &dyn Lagrangian, p: &TangentPoint) -> Result<[f64; 4]> {
    let h = l.eval_hyper(p)?;
    let g: Matrix4<f64> = vertical_metric(&h);
    let v = p.velocity();
    let rhs = Vector4::from_fn(|b, _| {
        let mixed: f64 = (0..4).map(|c| v[c] * h.hess[c][4 + b]).sum();
        mixed - h.grad[b]
    });
    let lu = g.lu();
    let det = lu.determinant();
    if !(det.abs() > 1e-300) {
        return Err(Error::Degenerate {
            det,
            witness: format!("{p:?}"),
        });
    }
    let x = lu.solve(&rhs).ok_or_else(|| Error::Degenerate {
        det,
        witness: format!("{p:?}"),
    })?;
    Ok(std::array::from_fn(|a| 0.25 * x[a]))
}

/// Geodesics of `l` from its Euler–Lagrange equations.
pub fn integrate_finsler(
    l: &dyn Lagrangian,
    p0: &TangentPoint,
    t_end: f64,
    n_out: usize,
    tol: f64,
) -> Result<Trajectory> {
    run(
        "finsler-geodesic",
        |p| finsler_spray(l, p),
        p0,
        t_end,
        n_out,
        tol,
    )
}
