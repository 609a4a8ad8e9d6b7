//! Independent numerical certification of built forms.

use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connection::{christoffel, ConnectionProfile, TangentPoint};
use crate::curvature::{bracket_vectors_with, curvature_profile_lenient};
use crate::error::{Error, Result};
use crate::geodesic::{finsler_spray, integrate_finsler, integrate_spray};
use crate::lagrangian::{vertical_metric, Lagrangian, Signature};
use crate::metrize::RiemannForm;
use crate::sampling::Grid;
use crate::tolerances::Tolerances;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    /// Sample where the largest residual occurs.
    pub witness: Option<TangentPoint>,
    pub tolerance: f64,
    pub passed: bool,
    pub evaluated: usize,
    /// Samples outside the domain of the function, not counted.
    pub skipped: usize,
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            max_residual: 0.0,
            witness: None,
            tolerance,
            passed: false,
            evaluated: 0,
            skipped: 0,
            note: None,
        }
    }

    fn record(&mut self, residual: f64, at: &TangentPoint) {
        self.evaluated += 1;
        // A NaN residual sticks, so the check fails.
        if self.max_residual.is_nan() {
            return;
        }
        if residual.is_nan() || self.witness.is_none() || residual > self.max_residual {
            self.max_residual = residual;
            self.witness = Some(*at);
        }
    }

    /// Residual must stay below the tolerance.
    fn below(mut self) -> Result<Self> {
        if self.evaluated == 0 {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        self.passed = self.max_residual <= self.tolerance;
        Ok(self)
    }
}

/// Every check of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl ResidualReport {
    pub fn new(seed: u64) -> Self {
        ResidualReport {
            seed,
            checks: Vec::new(),
        }
    }
    pub fn push(&mut self, c: CheckResult) {
        debug_assert!(self.get(&c.name).is_none(), "duplicate check {}", c.name);
        self.checks.push(c);
    }
    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// `maxₐ |δₐL| / (|L| + |ẋ| |∂̇L|)` with `δₐ = ∂ₐ − Γᶜ_ab ẋᵇ ∂̇_c`, over
/// all four positions `a = t, r, θ, φ`.
pub fn horizontal_constancy(
    l: &dyn Lagrangian,
    conn: &ConnectionProfile,
    samples: &[TangentPoint],
    tol: f64,
) -> Result<CheckResult> {
    let mut c = CheckResult::new("horizontal_constancy", tol);
    for p in samples {
        let Ok(h) = l.eval_hyper(p) else {
            c.skipped += 1;
            continue;
        };
        let g = christoffel(&conn.values(p.t, p.r)?, p.theta);
        let v = p.velocity();
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dv = h.grad[4..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = h.value.abs() + vnorm * dv;
        let mut worst = 0.0f64;
        for a in 0..4 {
            let mut d = h.grad[a];
            for cc in 0..4 {
                for b in 0..4 {
                    d -= g[cc][a][b] * v[b] * h.grad[4 + cc];
                }
            }
            worst = worst.max(d.abs());
        }
        c.record(worst / scale, p);
    }
    c.below()
}

/// Positive 2-homogeneity: `|L(x, sẋ) − s²L(x, ẋ)| / |s²L|` for a few `s`
/// and the Euler relation `ẋ·∂̇L = 2L`.
pub fn homogeneity(l: &dyn Lagrangian, samples: &[TangentPoint], tol: f64) -> Result<CheckResult> {
    let mut c = CheckResult::new("homogeneity", tol);
    for p in samples {
        let Ok(h) = l.eval_hyper(p) else {
            c.skipped += 1;
            continue;
        };
        let v = p.velocity();
        let scale = h.value.abs().max(f64::MIN_POSITIVE);
        let euler: f64 = (0..4).map(|a| v[a] * h.grad[4 + a]).sum::<f64>();
        let mut worst = (euler - 2.0 * h.value).abs() / scale;
        for s in [0.5, 2.0, 3.7] {
            let q = p.with_velocity(v.map(|x| s * x));
            let lv = l.eval(&q)?;
            worst = worst.max((lv - s * s * h.value).abs() / (s * s * scale));
        }
        c.record(worst, p);
    }
    c.below()
}

/// Nondegeneracy of the vertical Hessian and the observed signature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianReport {
    pub check: CheckResult,
    /// Signature at the first evaluated sample.
    pub signature: Option<Signature>,
    /// Whether every evaluated sample had the same signature.
    pub signature_constant: bool,
    pub min_abs_det: f64,
}

/// `|det g| > tol` at every admissible sample, with `g = ½ ∂̇∂̇L`.
pub fn hessian(l: &dyn Lagrangian, samples: &[TangentPoint], tol: f64) -> Result<HessianReport> {
    let mut c = CheckResult::new("hessian_nondegenerate", tol);
    let mut sig = None;
    let mut constant = true;
    let mut min_det = f64::INFINITY;
    for p in samples {
        let Ok(h) = l.eval_hyper(p) else {
            c.skipped += 1;
            continue;
        };
        let g = vertical_metric(&h);
        let det = g.determinant();
        let s = Signature::of(&g);
        match sig {
            None => sig = Some(s),
            Some(s0) if s0 != s => constant = false,
            _ => {}
        }
        c.evaluated += 1;
        if det.abs() < min_det {
            min_det = det.abs();
            c.witness = Some(*p);
        }
        if !(det.abs() > tol) {
            return Err(Error::Degenerate {
                det,
                witness: format!("{p:?}"),
            });
        }
    }
    if c.evaluated == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    // Reported residual: the reciprocal of the smallest |det g|.
    c.max_residual = 1.0 / min_det;
    c.tolerance = 1.0 / tol;
    c.passed = true;
    c.note = Some(format!("min |det g| = {min_det:e}"));
    Ok(HessianReport {
        check: c,
        signature: sig,
        signature_constant: constant,
        min_abs_det: min_det,
    })
}

/// Relative agreement of `det g` with a closed form.
pub fn determinant_formula(
    name: &str,
    l: &dyn Lagrangian,
    samples: &[TangentPoint],
    expected: &dyn Fn(&TangentPoint) -> Result<f64>,
    tol: f64,
) -> Result<CheckResult> {
    let mut c = CheckResult::new(name, tol);
    for p in samples {
        let Ok(h) = l.eval_hyper(p) else {
            c.skipped += 1;
            continue;
        };
        let det = vertical_metric(&h).determinant();
        let e = expected(p)?;
        c.record((det - e).abs() / e.abs(), p);
    }
    c.below()
}

/// `Var(L1/L2) / mean²` over the samples where both are defined.
pub fn ratio_constancy(
    name: &str,
    l1: &dyn Lagrangian,
    l2: &dyn Lagrangian,
    samples: &[TangentPoint],
    tol: f64,
) -> Result<CheckResult> {
    let mut c = CheckResult::new(name, tol);
    let mut ratios = Vec::new();
    for p in samples {
        match (l1.eval(p), l2.eval(p)) {
            (Ok(a), Ok(b)) if b != 0.0 => ratios.push((a / b, *p)),
            _ => c.skipped += 1,
        }
    }
    if ratios.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().map(|r| r.0).sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / n;
    c.evaluated = ratios.len();
    c.max_residual = var / (mean * mean);
    c.witness = ratios
        .iter()
        .max_by(|a, b| (a.0 - mean).abs().total_cmp(&(b.0 - mean).abs()))
        .map(|r| r.1);
    c.note = Some(format!("mean ratio {mean:.15e}"));
    c.passed = c.max_residual <= tol && mean > 0.0;
    Ok(c)
}

/// Christoffel symbols of a metric with coefficients `g` and first partials
/// `dg[k]` in `t, r, θ` (no `φ` dependence).
pub fn levi_civita(g: &[[f64; 4]; 4], dg: &[[[f64; 4]; 4]; 3]) -> Result<[[[f64; 4]; 4]; 4]> {
    let m = Matrix4::from_fn(|a, b| g[a][b]);
    let inv = m.try_inverse().ok_or_else(|| Error::Degenerate {
        det: m.determinant(),
        witness: "metric coefficients".into(),
    })?;
    let d = |k: usize, a: usize, b: usize| if k < 3 { dg[k][a][b] } else { 0.0 };
    let mut out = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let mut s = 0.0;
                for e in 0..4 {
                    s += inv[(a, e)] * (d(b, e, c) + d(c, e, b) - d(e, b, c));
                }
                out[a][b][c] = 0.5 * s;
            }
        }
    }
    Ok(out)
}

/// Largest componentwise difference between the Levi-Civita connection of
/// `form` and the input connection, over grid nodes and a few `θ`.
pub fn levi_civita_roundtrip(
    form: &RiemannForm,
    conn: &ConnectionProfile,
    grid: &Grid,
    tol: f64,
) -> Result<CheckResult> {
    let mut c = CheckResult::new("levi_civita_roundtrip", tol);
    for (t, r) in grid.points() {
        for theta in [0.7, 1.3, 2.2] {
            let (g, dg) = form.metric_with_derivatives(t, r, theta)?;
            let lc = levi_civita(&g, &dg)?;
            let gamma = conn.christoffel_at(t, r, theta)?;
            let mut worst = 0.0f64;
            for a in 0..4 {
                for b in 0..4 {
                    for cc in 0..4 {
                        worst = worst.max((lc[a][b][cc] - gamma[a][b][cc]).abs());
                    }
                }
            }
            c.record(worst, &TangentPoint::new([t, r, theta, 0.0], [0.0; 4]));
        }
    }
    c.below()
}

/// Autoparallel vs Finsler-geodesic discrepancy and drift of `L` along the
/// autoparallel, over `[0, T]` at 100 sample parameters.
pub fn geodesic_agreement(
    l: &dyn Lagrangian,
    conn: &ConnectionProfile,
    p0: &TangentPoint,
    t_end: f64,
    tol: &Tolerances,
) -> Result<(CheckResult, CheckResult)> {
    let a = integrate_spray(conn, p0, t_end, 100, tol.ode)?;
    let b = integrate_finsler(l, p0, t_end, 100, tol.ode)?;
    let mut agree = CheckResult::new("geodesic_agreement", tol.geodesic);
    agree.evaluated = a.states.len();
    agree.max_residual = a.sup_distance(&b);
    agree.witness = Some(*p0);
    agree.note = Some(format!(
        "T = {t_end}; steps {} / {}",
        a.stats.steps, b.stats.steps
    ));
    agree.passed = agree.max_residual <= agree.tolerance;
    let mut drift = CheckResult::new("lagrangian_drift", tol.drift);
    let l0 = l.eval(p0)?;
    for k in 0..a.states.len() {
        let p = a.point(k);
        drift.record((l.eval(&p)? - l0).abs() / l0.abs(), &p);
    }
    Ok((agree, drift.below()?))
}

/// Third vertical derivative of the spray of `l` along the coordinate
/// directions, by central differences of the exact spray, scaled by `|ẋ|`.
pub fn berwald(l: &dyn Lagrangian, samples: &[TangentPoint], tol: f64) -> Result<CheckResult> {
    let mut c = CheckResult::new("berwald", tol);
    'outer: for p in samples {
        let v = p.velocity();
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let h = 0.05 * vn;
        let mut worst = 0.0f64;
        for e in 0..4 {
            let mut g = [[0.0; 4]; 4];
            for (slot, s) in [-2.0, -1.0, 1.0, 2.0].into_iter().enumerate() {
                let mut w = v;
                w[e] += s * h;
                match finsler_spray(l, &p.with_velocity(w)) {
                    Ok(x) => g[slot] = x,
                    Err(_) => {
                        c.skipped += 1;
                        continue 'outer;
                    }
                }
            }
            for a in 0..4 {
                let d3 = (g[3][a] - 2.0 * g[2][a] + 2.0 * g[1][a] - g[0][a]) / (2.0 * h * h * h);
                worst = worst.max(d3.abs() * vn);
            }
        }
        c.record(worst, p);
    }
    c.below()
}

/// Least-squares evidence about quadratic metrics at one position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub t: f64,
    pub r: f64,
    /// `σ_j / σ_max` for the smallest `j` whose trailing singular subspace
    /// contains a nondegenerate symmetric matrix.
    pub residual: f64,
    pub subspace_dim: usize,
    pub singular_values: Vec<f64>,
    pub rows: usize,
}

const FIT_THETA: f64 = 1.1;
const PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

fn symmetric(x: &[f64]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        m[(i, j)] = x[k];
        m[(j, i)] = x[k];
    }
    m
}

/// Fits `a_ab` to `Vᵉ a_ed ẋᵈ = 0` for all depth-1 and depth-2 bracket
/// vectors `V` at `n_dirs` random velocities.
pub fn quadratic_fit(
    conn: &ConnectionProfile,
    t: f64,
    r: f64,
    n_dirs: usize,
    seed: u64,
) -> Result<QuadraticFit> {
    let cp = curvature_profile_lenient(conn, t, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<[f64; 10]> = Vec::new();
    for _ in 0..n_dirs {
        let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let p = TangentPoint::new([t, r, FIT_THETA, 0.0], v);
        for bv in bracket_vectors_with(&cp, &p, 2) {
            let w = bv.components;
            let row: [f64; 10] = std::array::from_fn(|k| {
                let (i, j) = PAIRS[k];
                if i == j {
                    w[i] * v[i]
                } else {
                    w[i] * v[j] + w[j] * v[i]
                }
            });
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                rows.push(row.map(|x| x / n));
            }
        }
    }
    let n_rows = rows.len();
    // Zero rows leave the solution set unchanged and keep the SVD square.
    while rows.len() < 10 {
        rows.push([0.0; 10]);
    }
    // Equilibrate columns so the residual does not depend on how the
    // coordinates scale the unknowns.
    let scale: [f64; 10] = std::array::from_fn(|k| {
        let n = rows.iter().map(|row| row[k] * row[k]).sum::<f64>().sqrt();
        if n > 0.0 {
            1.0 / n
        } else {
            1.0
        }
    });
    let m = DMatrix::from_fn(rows.len(), 10, |i, j| rows[i][j] * scale[j]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let smax = svd.singular_values.max();
    let mut crng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut found = 10;
    'dims: for j in 1..=10 {
        for _ in 0..16 {
            let mut x = [0.0; 10];
            for &k in &order[..j] {
                let w: f64 = crng.gen_range(-1.0..1.0);
                for (xi, vi) in x.iter_mut().zip(vt.row(k).iter()) {
                    *xi += w * vi;
                }
            }
            for (xi, d) in x.iter_mut().zip(&scale) {
                *xi *= d;
            }
            let s = symmetric(&x);
            let n2 = s.norm_squared();
            if n2 > 0.0 && s.determinant().abs() / (n2 * n2) > 1e-8 {
                found = j;
                break 'dims;
            }
        }
    }
    let sigma = svd.singular_values[order[found - 1]];
    Ok(QuadraticFit {
        t,
        r,
        residual: if smax > 0.0 { sigma / smax } else { 0.0 },
        subspace_dim: found,
        singular_values: order.iter().map(|&k| svd.singular_values[k]).collect(),
        rows: n_rows,
    })
}

/// Smallest quadratic-fit residual over the coarse grid nodes. With
/// `expect_quadratic = false` the check passes when the residual exceeds
/// the tolerance (no quadratic metric exists), otherwise when it is below.
pub fn quadratic_fit_check(
    conn: &ConnectionProfile,
    grid: &Grid,
    seed: u64,
    tol: f64,
    expect_quadratic: bool,
) -> Result<CheckResult> {
    let mut c = CheckResult::new("quadratic_fit", tol);
    let mut min_res = f64::INFINITY;
    for (t, r) in grid.coarse(3).points() {
        let fit = quadratic_fit(conn, t, r, 40, seed)?;
        c.evaluated += 1;
        if fit.residual < min_res {
            min_res = fit.residual;
            c.witness = Some(TangentPoint::new([t, r, FIT_THETA, 0.0], [0.0; 4]));
        }
    }
    c.max_residual = min_res;
    c.passed = if expect_quadratic {
        min_res <= tol
    } else {
        min_res > tol
    };
    c.note = Some(if expect_quadratic {
        "a nondegenerate quadratic solution is expected".into()
    } else {
        "residual above tolerance witnesses that no quadratic metric exists".into()
    });
    Ok(c)
}
