//! Construction of metrizing Finsler functions and affinely equivalent
//! pseudo-Riemannian metrics, class by class.
//!
//! All scale fields are evaluated exactly at the requested point (by
//! quadrature or by integrating the defining system from the base point);
//! grid tables are produced only for serialization.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::ad::{Hyper, Jet1, Jet2, Real};
use crate::connection::{ConnectionProfile, TangentPoint};
use crate::curvature::{curvature_profile, CurvatureProfile};
use crate::error::{Error, Result};
use crate::expr::{Env, Expression};
use crate::lagrangian::{w2, Lagrangian};
use crate::potential::{OneForm, Pfaff, PfaffField, Potential, ScalarTable};
use crate::sampling::Grid;
use crate::tolerances::Tolerances;

/// Relative size below which `u` (or the power-law base) counts as being on
/// the boundary of the conic domain.
pub const DOMAIN_MARGIN: f64 = 1e-6;

/// The free function of one variable in the class-3 family.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaChoice {
    Identity,
    Square,
    /// An expression in the variable `s`.
    Custom(Expression),
}

impl ThetaChoice {
    pub fn parse(src: &str) -> Result<Self> {
        match src.trim() {
            "identity" => Ok(ThetaChoice::Identity),
            "square" => Ok(ThetaChoice::Square),
            other => {
                let e = Expression::parse(other)?;
                if let Some(p) = e.parameters().into_iter().find(|p| p != "s") {
                    return Err(Error::UnboundParameter(p));
                }
                Ok(ThetaChoice::Custom(e))
            }
        }
    }

    fn apply<S: Real>(&self, s: S) -> Result<S> {
        match self {
            ThetaChoice::Identity => Ok(s),
            ThetaChoice::Square => Ok(s * s),
            ThetaChoice::Custom(e) => e.eval(&Env {
                t: S::cst(0.0),
                r: S::cst(0.0),
                vars: &[("s", s)],
                params: &Default::default(),
            }),
        }
    }
}

impl std::fmt::Display for ThetaChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThetaChoice::Identity => write!(f, "identity"),
            ThetaChoice::Square => write!(f, "square"),
            ThetaChoice::Custom(e) => write!(f, "{e}"),
        }
    }
}

/// Sign pattern of the class-4 metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureChoice {
    Lorentzian,
    Euclidean,
}

impl SignatureChoice {
    pub fn parse(src: &str) -> Result<Self> {
        match src.trim() {
            "lorentzian" => Ok(SignatureChoice::Lorentzian),
            "euclidean" => Ok(SignatureChoice::Euclidean),
            other => Err(Error::UnknownIdentifier(other.to_string())),
        }
    }
}

fn profile(conn: &ConnectionProfile, t: f64, r: f64) -> Result<CurvatureProfile> {
    let cp = curvature_profile(conn, t, r)?;
    if cp.abc.is_none() {
        return Err(Error::WrongClass(format!(
            "a, b, c are undefined at (t, r) = ({t}, {r}) because k7..k10 vanish"
        )));
    }
    Ok(cp)
}

fn lift<S: Real>(j: &Jet2, x: &[S; 8], t: f64, r: f64) -> S {
    S::taylor(j, x[0] - t, x[1] - r)
}

fn check_margin(what: &str, value: f64, scale: f64) -> Result<()> {
    if !(value.abs() > DOMAIN_MARGIN * scale) {
        return Err(Error::Domain(format!(
            "{what} = {value:e} is at the domain boundary"
        )));
    }
    Ok(())
}

fn speed2<S: Real>(x: &[S; 8]) -> f64 {
    x[4..].iter().map(|v| v.val() * v.val()).sum::<f64>()
}

/// `u = ṫ − aṙ` and `v = cṙ² + 2bṫṙ − w²`.
fn uv<S: Real>(abc: [S; 3], x: &[S; 8]) -> (S, S) {
    let [a, b, c] = abc;
    let (td, rd) = (x[4], x[5]);
    (td - a * rd, c * rd * rd + b * td * rd * 2.0 - w2(x))
}

/// Metrizing Finsler function of a class-1, -2 or -3 connection.
#[derive(Debug, Clone)]
pub struct FinslerForm {
    pub class: u8,
    pub conn: ConnectionProfile,
    pub kind: FinslerKind,
    /// Structural constants, such as `lambda`.
    pub constants: BTreeMap<String, f64>,
    /// Certification residuals of the scale fields (curl, path).
    pub field_residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub enum FinslerKind {
    /// `L = ϑ u^{2−2λ} (v + ρu²)^λ`, `ϑ = exp(scale)`, `ρ = E/D`.
    PowerLaw { lambda: f64, scale: Potential },
    /// `L = φ u² exp(μv/u²)`, `φ = exp(scale)`, `μ = F/E`.
    Exponential { scale: Potential },
    /// `L = e^𝒢 u² Θ(v/u² · e^{2𝒦−𝒢} + ℳ)`.
    Class3 {
        fields: PfaffField,
        theta: ThetaChoice,
    },
}

impl FinslerForm {
    /// Second-order jets of the point-dependent pieces, in the order used by
    /// [`FinslerForm::formula`].
    fn fields(&self, t: f64, r: f64) -> Result<Vec<Jet2>> {
        let cp = profile(&self.conn, t, r)?;
        let abc = cp.abc.unwrap();
        let [d, e, f] = cp.def.unwrap();
        let mut out = abc.to_vec();
        match &self.kind {
            FinslerKind::PowerLaw { scale, .. } => {
                out.push((e / d).to_jet2());
                out.push(scale.jet(t, r)?.exp());
            }
            FinslerKind::Exponential { scale } => {
                out.push((f / e).to_jet2());
                out.push(scale.jet(t, r)?.exp());
            }
            FinslerKind::Class3 { fields, .. } => out.extend(fields.jets(t, r)?),
        }
        Ok(out)
    }

    fn formula<S: Real>(&self, f: &[Jet2], x: &[S; 8], t: f64, r: f64) -> Result<S> {
        let l = |i: usize| lift(&f[i], x, t, r);
        let (u, v) = uv([l(0), l(1), l(2)], x);
        let sp2 = speed2(x);
        match &self.kind {
            FinslerKind::PowerLaw { lambda, .. } => {
                let base = v + l(3) * u * u;
                if !(u.val() > DOMAIN_MARGIN * sp2.sqrt()) {
                    return Err(Error::Domain(format!(
                        "u = {:e} is outside the power-law domain",
                        u.val()
                    )));
                }
                if !(base.val() > DOMAIN_MARGIN * sp2) {
                    return Err(Error::Domain(format!(
                        "v + ρu² = {:e} is outside the power-law domain",
                        base.val()
                    )));
                }
                Ok(l(4) * u.powf(2.0 - 2.0 * lambda) * base.powf(*lambda))
            }
            FinslerKind::Exponential { .. } => {
                check_margin("u", u.val(), sp2.sqrt())?;
                let u2 = u * u;
                Ok(l(4) * u2 * (l(3) * v / u2).exp())
            }
            FinslerKind::Class3 { theta, .. } => {
                let (g, k, m) = (l(3), l(4), l(5));
                if *theta == ThetaChoice::Identity {
                    return Ok(v * (k * 2.0).exp() + g.exp() * m * u * u);
                }
                check_margin("u", u.val(), sp2.sqrt())?;
                let u2 = u * u;
                let s = v / u2 * (k * 2.0 - g).exp() + m;
                Ok(g.exp() * u2 * theta.apply(s)?)
            }
        }
    }

    fn eval_generic<S: Real>(&self, p: &TangentPoint, x: &[S; 8]) -> Result<S> {
        let f = self.fields(p.t, p.r)?;
        self.formula(&f, x, p.t, p.r)
    }

    /// Grid tables of the scale fields.
    pub fn tables(&self, grid: &Grid) -> Result<Vec<ScalarTable>> {
        match &self.kind {
            FinslerKind::PowerLaw { scale, .. } | FinslerKind::Exponential { scale } => {
                Ok(vec![scale.table(grid)?])
            }
            FinslerKind::Class3 { fields, .. } => fields.tables(grid),
        }
    }

    pub fn formula_text(&self) -> String {
        match &self.kind {
            FinslerKind::PowerLaw { lambda, .. } => {
                format!(
                    "L = exp(theta_pot) * u^({}) * (v + rho*u^2)^({lambda}), rho = E/D",
                    2.0 - 2.0 * lambda
                )
            }
            FinslerKind::Exponential { .. } => {
                "L = exp(phi_pot) * u^2 * exp(mu*v/u^2), mu = F/E".into()
            }
            FinslerKind::Class3 { theta, .. } => {
                format!("L = exp(G) * u^2 * Theta(v/u^2 * exp(2K - G) + M), Theta(s) = {theta}")
            }
        }
    }
}

impl Lagrangian for FinslerForm {
    fn label(&self) -> String {
        format!("class-{} Finsler function", self.class)
    }
    fn eval(&self, p: &TangentPoint) -> Result<f64> {
        self.eval_generic(p, &p.to_array())
    }
    fn eval_hyper(&self, p: &TangentPoint) -> Result<Hyper> {
        self.eval_generic(p, &Hyper::seed(&p.to_array()))
    }
}

/// Affinely equivalent pseudo-Riemannian metric
/// `A = h_tt ṫ² + 2h_tr ṫṙ + h_rr ṙ² + κ w²`.
#[derive(Debug, Clone)]
pub struct RiemannForm {
    pub class: u8,
    pub conn: ConnectionProfile,
    source: RiemannSource,
    /// Added to `(h_tt, h_tr, h_rr, κ)`; zero except for negative controls.
    perturbation: [f64; 4],
    pub constants: BTreeMap<String, f64>,
    pub field_residuals: BTreeMap<String, f64>,
}

#[derive(Clone)]
enum RiemannSource {
    /// Fields `(𝒢, 𝒦, ℳ)`.
    Class3(PfaffField),
    /// Fields `(h_tt, h_tr, h_rr)` and the constant `κ`.
    Class4(PfaffField, f64),
    /// `A = C1 e^{−2φ} |Q| + C2 w²`.
    Class5 {
        phi: Potential,
        c1: f64,
        c2: f64,
    },
    Explicit(Arc<dyn Fn(f64, f64) -> Result<[Jet2; 4]> + Send + Sync>),
}

impl std::fmt::Debug for RiemannSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RiemannSource::Class3(p) => write!(f, "Class3({p:?})"),
            RiemannSource::Class4(p, k) => write!(f, "Class4({p:?}, κ = {k})"),
            RiemannSource::Class5 { phi, c1, c2 } => {
                write!(f, "Class5({phi:?}, C1 = {c1}, C2 = {c2})")
            }
            RiemannSource::Explicit(_) => write!(f, "Explicit"),
        }
    }
}

impl RiemannForm {
    /// A metric with the given coefficient jets, for fixtures and tests.
    pub fn explicit(
        conn: ConnectionProfile,
        coeffs: impl Fn(f64, f64) -> Result<[Jet2; 4]> + Send + Sync + 'static,
    ) -> Self {
        RiemannForm {
            class: 0,
            conn,
            source: RiemannSource::Explicit(Arc::new(coeffs)),
            perturbation: [0.0; 4],
            constants: BTreeMap::new(),
            field_residuals: BTreeMap::new(),
        }
    }

    /// Same metric with constants added to `(h_tt, h_tr, h_rr, κ)`.
    pub fn perturbed(mut self, delta: [f64; 4]) -> Self {
        self.perturbation = delta;
        self
    }

    /// Jets of `(h_tt, h_tr, h_rr, κ)` at `(t, r)`. For class 5 these are the
    /// coefficients of `C1 e^{−2φ} Q + C2 w²`, which agrees with the metric
    /// up to sign in the `(t, r)` block.
    pub fn coefficients(&self, t: f64, r: f64) -> Result<[Jet2; 4]> {
        let mut h = match &self.source {
            RiemannSource::Class3(fields) => {
                let cp = profile(&self.conn, t, r)?;
                let [a, b, c] = cp.abc.unwrap();
                let f = fields.jets(t, r)?;
                let (g, k, mm) = (f[0], f[1], f[2]);
                let e2k = (k * 2.0).exp();
                let m = g.exp() * mm;
                [m, e2k * b - a * m, e2k * c + a * a * m, -e2k]
            }
            RiemannSource::Class4(fields, kappa) => {
                let f = fields.jets(t, r)?;
                [f[0], f[1], f[2], Jet2::constant(*kappa)]
            }
            RiemannSource::Class5 { phi, c1, c2 } => {
                let cp = curvature_profile(&self.conn, t, r)?;
                let s = (phi.jet(t, r)? * -2.0).exp() * *c1;
                let a = |i: usize| cp.a[i - 1].to_jet2();
                [-(s * a(3)), s * a(1), s * a(2), Jet2::constant(*c2)]
            }
            RiemannSource::Explicit(f) => f(t, r)?,
        };
        for (x, d) in h.iter_mut().zip(self.perturbation) {
            x.value += d;
        }
        Ok(h)
    }

    fn eval_generic<S: Real>(&self, p: &TangentPoint, x: &[S; 8]) -> Result<S> {
        let (td, rd) = (x[4], x[5]);
        if let RiemannSource::Class5 { phi, c1, c2 } = &self.source {
            if self.perturbation == [0.0; 4] {
                let cp = curvature_profile(&self.conn, p.t, p.r)?;
                let a = |i: usize| S::taylor(&cp.a[i - 1].to_jet2(), x[0] - p.t, x[1] - p.r);
                let q = -(a(3) * td * td) + a(1) * td * rd * 2.0 + a(2) * rd * rd;
                check_margin("Q", q.val(), speed2(x))?;
                let e = lift(&(phi.jet(p.t, p.r)? * -2.0).exp(), x, p.t, p.r);
                return Ok(e * q.abs() * *c1 + w2(x) * *c2);
            }
        }
        let h = self.coefficients(p.t, p.r)?;
        let l = |i: usize| lift(&h[i], x, p.t, p.r);
        Ok(l(0) * td * td + l(1) * td * rd * 2.0 + l(2) * rd * rd + l(3) * w2(x))
    }

    /// Full coefficient matrix `a_ab` at a position with first partials in
    /// `t, r, θ`: returns `(a, [∂_t a, ∂_r a, ∂_θ a])`.
    #[allow(clippy::type_complexity)]
    pub fn metric_with_derivatives(
        &self,
        t: f64,
        r: f64,
        theta: f64,
    ) -> Result<([[f64; 4]; 4], [[[f64; 4]; 4]; 3])> {
        let h = self.coefficients(t, r)?;
        let (s, c) = theta.sin_cos();
        let mut g = [[0.0; 4]; 4];
        let mut dg = [[[0.0; 4]; 4]; 3];
        let parts = |j: &Jet2| [j.value, j.d_t, j.d_r];
        let (htt, htr, hrr, k) = (parts(&h[0]), parts(&h[1]), parts(&h[2]), parts(&h[3]));
        for (a, b, v) in [
            (0usize, 0usize, htt),
            (0, 1, htr),
            (1, 0, htr),
            (1, 1, hrr),
            (2, 2, k),
        ] {
            g[a][b] = v[0];
            dg[0][a][b] = v[1];
            dg[1][a][b] = v[2];
        }
        g[3][3] = k[0] * s * s;
        dg[0][3][3] = k[1] * s * s;
        dg[1][3][3] = k[2] * s * s;
        dg[2][3][3] = k[0] * 2.0 * s * c;
        Ok((g, dg))
    }

    /// Grid tables of the underlying fields.
    pub fn tables(&self, grid: &Grid) -> Result<Vec<ScalarTable>> {
        match &self.source {
            RiemannSource::Class3(f) | RiemannSource::Class4(f, _) => f.tables(grid),
            RiemannSource::Class5 { phi, .. } => Ok(vec![phi.table(grid)?]),
            RiemannSource::Explicit(_) => Ok(vec![]),
        }
    }

    pub fn formula_text(&self) -> String {
        match &self.source {
            RiemannSource::Class3(_) => "A = v*exp(2K) + exp(G)*M*u^2".into(),
            RiemannSource::Class4(_, k) => {
                let sign = if *k < 0.0 { "-" } else { "+" };
                format!("A = h_tt*tdot^2 + 2*h_tr*tdot*rdot + h_rr*rdot^2 {sign} w^2")
            }
            RiemannSource::Class5 { c1, c2, .. } => {
                format!("A = {c1}*exp(-2*phi)*|-a3*tdot^2 + 2*a1*tdot*rdot + a2*rdot^2| + {c2}*w^2")
            }
            RiemannSource::Explicit(_) => {
                "A = h_tt*tdot^2 + 2*h_tr*tdot*rdot + h_rr*rdot^2 + kappa*w^2".into()
            }
        }
    }
}

impl Lagrangian for RiemannForm {
    fn label(&self) -> String {
        format!("class-{} metric", self.class)
    }
    fn eval(&self, p: &TangentPoint) -> Result<f64> {
        self.eval_generic(p, &p.to_array())
    }
    fn eval_hyper(&self, p: &TangentPoint) -> Result<Hyper> {
        self.eval_generic(p, &Hyper::seed(&p.to_array()))
    }
}

/// Profiles at all grid nodes; fails if `a, b, c` are undefined anywhere.
fn grid_profiles(conn: &ConnectionProfile, grid: &Grid) -> Result<Vec<CurvatureProfile>> {
    grid.points()
        .into_iter()
        .map(|(t, r)| profile(conn, t, r))
        .collect()
}

fn scalar_form(
    conn: &ConnectionProfile,
    f: impl Fn(&CurvatureProfile) -> Result<(Jet1, Jet1)> + Send + Sync + 'static,
) -> OneForm {
    let conn = conn.clone();
    Arc::new(move |t, r| f(&profile(&conn, t, r)?))
}

fn certified_potential(
    name: &str,
    form: OneForm,
    grid: &Grid,
    tol: &Tolerances,
    residuals: &mut BTreeMap<String, f64>,
) -> Result<Potential> {
    let p = Potential::new(name, form, grid.base_point(), tol.quadrature);
    let path = p.certify(grid, tol.curl, tol.path)?;
    residuals.insert(format!("{name}.path"), path);
    Ok(p)
}

/// Class 1: power law with constant exponent `λ = F/D`.
pub fn build_power_law(
    conn: &ConnectionProfile,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<FinslerForm> {
    let profiles = grid_profiles(conn, grid)?;
    let mut lambdas = Vec::with_capacity(profiles.len());
    for cp in &profiles {
        let [d, _, f] = cp.def.unwrap();
        if d.value.abs() <= tol.nonzero {
            return Err(Error::LambdaNotConstant {
                spread: f64::INFINITY,
            });
        }
        lambdas.push(f.value / d.value);
    }
    let mean = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    let spread = lambdas.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max);
    if !(spread < tol.lambda_spread) {
        return Err(Error::LambdaNotConstant { spread });
    }
    if (mean - 1.0).abs() < tol.lambda_spread {
        return Err(Error::LambdaEqualsOne);
    }
    let lambda = mean;
    let form = scalar_form(conn, move |cp| {
        let [g, gt, h, ht] = cp.gh.unwrap();
        Ok((g + gt * -lambda, h + ht * -lambda))
    });
    let mut residuals = BTreeMap::new();
    let scale = certified_potential("theta_pot", form, grid, tol, &mut residuals)?;
    let mut constants = BTreeMap::new();
    constants.insert("lambda".to_string(), lambda);
    constants.insert("lambda_spread".to_string(), spread);
    Ok(FinslerForm {
        class: 1,
        conn: conn.clone(),
        kind: FinslerKind::PowerLaw { lambda, scale },
        constants,
        field_residuals: residuals,
    })
}

/// Class 2: exponential law with `μ = F/E`, which may vary over `(t, r)`.
pub fn build_exponential(
    conn: &ConnectionProfile,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<FinslerForm> {
    let profiles = grid_profiles(conn, grid)?;
    let mut mu_range = (f64::INFINITY, f64::NEG_INFINITY);
    for cp in &profiles {
        let [_, e, f] = cp.def.unwrap();
        if e.value.abs() <= tol.nonzero {
            return Err(Error::MuNotConstant {
                spread: f64::INFINITY,
            });
        }
        let mu = f.value / e.value;
        mu_range = (mu_range.0.min(mu), mu_range.1.max(mu));
    }
    let form = scalar_form(conn, |cp| {
        let [g, _, h, _] = cp.gh.unwrap();
        let [_, e, f] = cp.def.unwrap();
        let mu = f / e;
        let b = cp.abc.unwrap()[1].to_jet1();
        let k4 = cp.k[3].to_jet1();
        let k6 = cp.k[5].to_jet1();
        Ok((g + k4 * b * mu * 2.0, h + k6 * b * mu * 2.0))
    });
    let mut residuals = BTreeMap::new();
    let scale = certified_potential("phi_pot", form, grid, tol, &mut residuals)?;
    let mut constants = BTreeMap::new();
    constants.insert("mu_min".to_string(), mu_range.0);
    constants.insert("mu_max".to_string(), mu_range.1);
    Ok(FinslerForm {
        class: 2,
        conn: conn.clone(),
        kind: FinslerKind::Exponential { scale },
        constants,
        field_residuals: residuals,
    })
}

/// `(𝒢, 𝒦, ℳ)` with `∇𝒢 = (G, H)`, `∇𝒦 = (k8, k9)` and
/// `∇ℳ = 2 e^{2𝒦−𝒢} b (k4, k6)`.
struct Class3System {
    conn: ConnectionProfile,
}

impl Pfaff for Class3System {
    fn dim(&self) -> usize {
        3
    }
    fn names(&self) -> Vec<String> {
        vec!["G".into(), "K".into(), "M".into()]
    }
    fn rhs(&self, t: f64, r: f64, y: &[Jet1]) -> Result<(Vec<Jet1>, Vec<Jet1>)> {
        let cp = profile(&self.conn, t, r)?;
        let [g, _, h, _] = cp.gh.unwrap();
        let b = cp.abc.unwrap()[1].to_jet1();
        let k = |i: usize| cp.k[i - 1].to_jet1();
        let w = (y[1] * 2.0 - y[0]).exp() * b * 2.0;
        Ok((vec![g, k(8), w * k(4)], vec![h, k(9), w * k(6)]))
    }
}

/// Candidate shifts of `ℳ`, tried in order.
const M_SHIFTS: [f64; 11] = [
    0.0, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0, 100.0, -100.0,
];

/// Class 3: potentials `𝒢, 𝒦, ℳ`, the Finsler function for the chosen `Θ`
/// and the metric `A = v e^{2𝒦} + e^𝒢 ℳ u²`.
pub fn build_class3(
    conn: &ConnectionProfile,
    grid: &Grid,
    theta: ThetaChoice,
    tol: &Tolerances,
) -> Result<(FinslerForm, RiemannForm)> {
    grid_profiles(conn, grid)?;
    let sys: Arc<dyn Pfaff> = Arc::new(Class3System { conn: conn.clone() });
    let base = grid.base_point();
    let probe = PfaffField::new(sys.clone(), base, vec![0.0, 0.0, 0.0], tol.ode);
    let coarse = grid.coarse(5);
    let path = probe.certify(&coarse, tol.path).map_err(|e| match e {
        Error::PathDependent { discrepancy } => Error::NotClosed {
            residual: discrepancy,
            t: base.0,
            r: base.1,
        },
        other => other,
    })?;
    // Δ(m0) = (ℳ + m0) e^𝒢 (2ab + c) − b² e^{2𝒦} at the coarse nodes.
    let mut terms = Vec::new();
    for (t, r) in coarse.points() {
        let y = probe.value(t, r)?;
        let [a, b, c] = profile(conn, t, r)?.abc.unwrap();
        let eg = y[0].exp() * (2.0 * a.value * b.value + c.value);
        terms.push((y[2], eg, b.value * b.value * (2.0 * y[1]).exp()));
    }
    let delta_ok = |m0: f64| -> Option<f64> {
        let ds: Vec<f64> = terms.iter().map(|(m, eg, b2)| (m + m0) * eg - b2).collect();
        let min = ds.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
        let same_sign = ds.iter().all(|d| d.signum() == ds[0].signum());
        (same_sign && min > tol.nonzero).then_some(min)
    };
    let m0 = M_SHIFTS
        .iter()
        .copied()
        .find(|&m| delta_ok(m).is_some())
        .ok_or(Error::DeltaVanishes)?;
    let fields = PfaffField::new(sys, base, vec![0.0, 0.0, m0], tol.ode);
    let mut residuals = BTreeMap::new();
    residuals.insert("GKM.path".to_string(), path);
    let mut constants = BTreeMap::new();
    constants.insert("M_shift".to_string(), m0);
    constants.insert("min_abs_delta".to_string(), delta_ok(m0).unwrap());
    let finsler = FinslerForm {
        class: 3,
        conn: conn.clone(),
        kind: FinslerKind::Class3 {
            fields: fields.clone(),
            theta,
        },
        constants: constants.clone(),
        field_residuals: residuals.clone(),
    };
    let riemann = RiemannForm {
        class: 3,
        conn: conn.clone(),
        source: RiemannSource::Class3(fields),
        perturbation: [0.0; 4],
        constants,
        field_residuals: residuals,
    };
    Ok((finsler, riemann))
}

/// `∂_a h_bc = Γ^d_ab h_dc + Γ^d_ac h_bd` on the `(t, r)` block.
struct Class4System {
    conn: ConnectionProfile,
}

impl Pfaff for Class4System {
    fn dim(&self) -> usize {
        3
    }
    fn names(&self) -> Vec<String> {
        vec!["h_tt".into(), "h_tr".into(), "h_rr".into()]
    }
    fn rhs(&self, t: f64, r: f64, y: &[Jet1]) -> Result<(Vec<Jet1>, Vec<Jet1>)> {
        let k = self.conn.jets(t, r)?;
        let q = |i: usize| k[i - 1].to_jet1();
        // g2[d][a][b] = Γ^d_ab on the (t, r) block.
        let g2 = [[[q(1), q(2)], [q(2), q(3)]], [[q(4), q(6)], [q(6), q(5)]]];
        let h = [[y[0], y[1]], [y[1], y[2]]];
        let d = |a: usize, b: usize, c: usize| {
            let mut s = Jet1::default();
            for dd in 0..2 {
                s = s + g2[dd][a][b] * h[dd][c] + g2[dd][a][c] * h[b][dd];
            }
            s
        };
        Ok((
            vec![d(0, 0, 0), d(0, 0, 1), d(0, 1, 1)],
            vec![d(1, 0, 0), d(1, 0, 1), d(1, 1, 1)],
        ))
    }
}

/// Class 4: flat `(t, r)` block metric with `h(t0, r0) = diag(1, ∓1)` and
/// angular part `∓w²`.
pub fn build_class4(
    conn: &ConnectionProfile,
    grid: &Grid,
    signature: SignatureChoice,
    tol: &Tolerances,
) -> Result<RiemannForm> {
    let (h0, kappa) = match signature {
        SignatureChoice::Lorentzian => (vec![1.0, 0.0, -1.0], -1.0),
        SignatureChoice::Euclidean => (vec![1.0, 0.0, 1.0], 1.0),
    };
    let fields = PfaffField::new(
        Arc::new(Class4System { conn: conn.clone() }),
        grid.base_point(),
        h0,
        tol.ode,
    );
    let path = fields.certify(&grid.coarse(5), tol.path)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("h.path".to_string(), path);
    let mut constants = BTreeMap::new();
    constants.insert("kappa".to_string(), kappa);
    Ok(RiemannForm {
        class: 4,
        conn: conn.clone(),
        source: RiemannSource::Class4(fields, kappa),
        perturbation: [0.0; 4],
        constants,
        field_residuals: residuals,
    })
}

/// Gradient of the class-5 scale field from `δ_a(e^{−2φ}Q) = 0` at a fixed
/// velocity: `∂_aφ = (∂_aQ − N^c_a ∂̇_cQ) / (2Q)`.
fn class5_gradient(conn: &ConnectionProfile, t: f64, r: f64) -> Result<(f64, f64)> {
    let cp = curvature_profile(conn, t, r)?;
    let k = conn.values(t, r)?;
    let (a1, a2, a3) = (cp.a[0], cp.a[1], cp.a[2]);
    let q_at =
        |td: f64, rd: f64| -a3.value * td * td + 2.0 * a1.value * td * rd + a2.value * rd * rd;
    let (td, rd) = if q_at(1.0, 0.0).abs() > 1e-12 {
        (1.0, 0.0)
    } else {
        (1.0, 0.5)
    };
    let q = q_at(td, rd);
    if q.abs() <= 1e-12 {
        return Err(Error::SingularQuadratic { t, r });
    }
    let dq = [
        -a3.d_t * td * td + 2.0 * a1.d_t * td * rd + a2.d_t * rd * rd,
        -a3.d_r * td * td + 2.0 * a1.d_r * td * rd + a2.d_r * rd * rd,
    ];
    let dqdot = [
        -2.0 * a3.value * td + 2.0 * a1.value * rd,
        2.0 * a1.value * td + 2.0 * a2.value * rd,
    ];
    // g2[c][a][b] = Γ^c_ab on the (t, r) block.
    let g2 = [[[k[0], k[1]], [k[1], k[2]]], [[k[3], k[5]], [k[5], k[4]]]];
    let v = [td, rd];
    let grad = |a: usize| {
        let mut s = dq[a];
        for c in 0..2 {
            let n = g2[c][a][0] * v[0] + g2[c][a][1] * v[1];
            s -= n * dqdot[c];
        }
        s / (2.0 * q)
    };
    Ok((grad(0), grad(1)))
}

/// Class 5 with symmetric Ricci tensor: `A = C1 e^{−2φ}|Q| + C2 w²`.
pub fn build_class5(
    conn: &ConnectionProfile,
    grid: &Grid,
    c1: f64,
    c2: f64,
    tol: &Tolerances,
) -> Result<RiemannForm> {
    if c1 == 0.0 || c2 == 0.0 {
        return Err(Error::Domain("C1 and C2 must be nonzero".into()));
    }
    let mut max_a = 0.0f64;
    let mut profiles = Vec::new();
    for (t, r) in grid.points() {
        let cp = curvature_profile(conn, t, r)?;
        max_a = max_a.max(cp.max_abs_a());
        profiles.push(cp);
    }
    let zero = tol.zero * (1.0 + max_a);
    for cp in &profiles {
        let a = cp.values();
        if (a[0] + a[3]).abs() >= zero {
            return Err(Error::NotRiemannMetrizable(format!(
                "a1 + a4 = {:e} at (t, r) = ({}, {})",
                a[0] + a[3],
                cp.t,
                cp.r
            )));
        }
        if (a[0] * a[3] - a[1] * a[2]).abs() <= tol.nonzero {
            return Err(Error::SingularQuadratic { t: cp.t, r: cp.r });
        }
    }
    // Partials of the recovered gradient by central differences.
    const H: f64 = 1e-5;
    let c = conn.clone();
    let form: OneForm = Arc::new(move |t, r| {
        let (p, q) = class5_gradient(&c, t, r)?;
        let (pt1, qt1) = class5_gradient(&c, t + H, r)?;
        let (pt0, qt0) = class5_gradient(&c, t - H, r)?;
        let (pr1, qr1) = class5_gradient(&c, t, r + H)?;
        let (pr0, qr0) = class5_gradient(&c, t, r - H)?;
        Ok((
            Jet1::new(p, (pt1 - pt0) / (2.0 * H), (pr1 - pr0) / (2.0 * H)),
            Jet1::new(q, (qt1 - qt0) / (2.0 * H), (qr1 - qr0) / (2.0 * H)),
        ))
    });
    let phi = Potential::new("phi", form, grid.base_point(), tol.quadrature);
    // Finite-difference partials limit the curl check to about 1e-9.
    let path = phi
        .certify(grid, tol.curl.max(1e-7), tol.path)
        .map_err(|e| match e {
            Error::NotClosed { residual, t, r } => Error::GradientNotClosed { residual, t, r },
            other => other,
        })?;
    let mut residuals = BTreeMap::new();
    residuals.insert("phi.path".to_string(), path);
    let mut constants = BTreeMap::new();
    constants.insert("C1".to_string(), c1);
    constants.insert("C2".to_string(), c2);
    Ok(RiemannForm {
        class: 5,
        conn: conn.clone(),
        source: RiemannSource::Class5 { phi, c1, c2 },
        perturbation: [0.0; 4],
        constants,
        field_residuals: residuals,
    })
}

/// Construction options that the class leaves free.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub theta: ThetaChoice,
    pub signature: SignatureChoice,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            theta: ThetaChoice::Identity,
            signature: SignatureChoice::Lorentzian,
            c1: 1.0,
            c2: -1.0,
        }
    }
}

/// Everything built for one connection.
#[derive(Debug, Clone)]
pub struct Metrization {
    pub class: u8,
    pub finsler: Option<FinslerForm>,
    pub riemann: Option<RiemannForm>,
}

impl Metrization {
    /// The function to certify: the Finsler form if there is one, else the
    /// metric.
    pub fn lagrangian(&self) -> &dyn Lagrangian {
        match (&self.finsler, &self.riemann) {
            (Some(f), _) => f,
            (None, Some(r)) => r,
            _ => unreachable!("a metrization has at least one form"),
        }
    }
}

/// Dispatches to the builder of `class`.
pub fn metrize(
    conn: &ConnectionProfile,
    grid: &Grid,
    class: u8,
    opts: &BuildOptions,
    tol: &Tolerances,
) -> Result<Metrization> {
    let (finsler, riemann) = match class {
        1 => (Some(build_power_law(conn, grid, tol)?), None),
        2 => (Some(build_exponential(conn, grid, tol)?), None),
        3 => {
            let (f, r) = build_class3(conn, grid, opts.theta.clone(), tol)?;
            (Some(f), Some(r))
        }
        4 => (None, Some(build_class4(conn, grid, opts.signature, tol)?)),
        5 => (None, Some(build_class5(conn, grid, opts.c1, opts.c2, tol)?)),
        other => {
            return Err(Error::WrongClass(format!(
                "no construction for class {other}"
            )))
        }
    };
    Ok(Metrization {
        class,
        finsler,
        riemann,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use approx::assert_relative_eq;

    fn conn(sources: &[(usize, &str)], params: &[(&str, f64)]) -> ConnectionProfile {
        let p: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        ConnectionProfile::from_sources(sources, p).unwrap()
    }

    fn example1() -> ConnectionProfile {
        conn(
            &[
                (1, "2*r*(alpha-2)"),
                (4, "4*alpha*r^3*(alpha-1)"),
                (6, "-2*alpha*r"),
                (8, "-2*r"),
                (10, "alpha*r"),
            ],
            &[("alpha", 3.0)],
        )
    }

    #[test]
    fn example1_power_law() {
        let grid = Grid::default().coarse(5);
        let f = build_power_law(&example1(), &grid, &Tolerances::default()).unwrap();
        assert_relative_eq!(f.constants["lambda"], 0.5, max_relative = 1e-12);
        let FinslerKind::PowerLaw { scale, .. } = &f.kind else {
            panic!()
        };
        assert!(scale.value(2.0, 2.0).unwrap().abs() < 1e-12);
        // Displayed form for α = 3: ṫ (12r²ṫ² − 4ṫṙ − 3w²)^{1/2}, equal to √3 L.
        let p = TangentPoint::new([1.0, 1.5, 1.0, 0.2], [1.0, 0.1, 0.2, 0.3]);
        let w2 = p.w2();
        let shown =
            p.tdot * (12.0 * 2.25 * p.tdot * p.tdot - 4.0 * p.tdot * p.rdot - 3.0 * w2).sqrt();
        assert_relative_eq!(
            shown / f.eval(&p).unwrap(),
            3f64.sqrt(),
            max_relative = 1e-12
        );
        let h = f.eval_hyper(&p).unwrap();
        assert_relative_eq!(h.value, f.eval(&p).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn power_law_domain_is_enforced() {
        let grid = Grid::default().coarse(3);
        let f = build_power_law(&example1(), &grid, &Tolerances::default()).unwrap();
        let p = TangentPoint::new([1.0, 1.5, 1.0, 0.2], [-1.0, 0.1, 0.2, 0.3]);
        assert!(!f.admissible(&p));
    }

    #[test]
    fn flat_class4_is_minkowski() {
        let grid = Grid::default().coarse(5);
        let a = build_class4(
            &ConnectionProfile::flat(),
            &grid,
            SignatureChoice::Lorentzian,
            &Tolerances::default(),
        )
        .unwrap();
        let h = a.coefficients(1.7, 0.9).unwrap();
        assert_eq!(
            [h[0].value, h[1].value, h[2].value, h[3].value],
            [1.0, 0.0, -1.0, -1.0]
        );
        let e = build_class4(
            &ConnectionProfile::flat(),
            &grid,
            SignatureChoice::Euclidean,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(e.coefficients(1.7, 0.9).unwrap()[2].value, 1.0);
    }

    #[test]
    fn class4_with_k1() {
        let grid = Grid::default().coarse(5);
        let a = build_class4(
            &conn(&[(1, "1")], &[]),
            &grid,
            SignatureChoice::Lorentzian,
            &Tolerances::default(),
        )
        .unwrap();
        let h = a.coefficients(1.7, 0.9).unwrap();
        let expect = (2.0f64 * (1.7 - 0.5)).exp();
        assert_relative_eq!(h[0].value, expect, max_relative = 1e-9);
        assert_relative_eq!(h[0].d_t, 2.0 * expect, max_relative = 1e-9);
        assert_relative_eq!(h[0].d_tt, 4.0 * expect, max_relative = 1e-9);
        assert!(h[1].value.abs() < 1e-12);
        assert_relative_eq!(h[2].value, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn minkowski_spherical_class3() {
        let grid = Grid::default().coarse(5);
        let c = conn(&[(9, "1/r"), (10, "-r")], &[]);
        let (f, a) =
            build_class3(&c, &grid, ThetaChoice::Identity, &Tolerances::default()).unwrap();
        assert_eq!(a.constants["M_shift"], 1.0);
        let p = TangentPoint::new([1.0, 1.5, 1.0, 0.2], [1.0, 0.1, 0.2, 0.3]);
        let r0 = 0.5f64;
        let expect = p.tdot * p.tdot - (p.rdot * p.rdot + p.r * p.r * p.w2()) / (r0 * r0);
        assert!((a.eval(&p).unwrap() - expect).abs() < 1e-8);
        assert!((f.eval(&p).unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn class5_symmetric_fixture() {
        let grid = Grid::default().coarse(5);
        let c = conn(&[(2, "r"), (4, "r"), (5, "r")], &[]);
        let a = build_class5(&c, &grid, 1.0, -1.0, &Tolerances::default()).unwrap();
        let RiemannSource::Class5 { phi, .. } = &a.source else {
            panic!()
        };
        // φ = −(r² − r0²)/2.
        assert_relative_eq!(
            phi.value(1.3, 2.0).unwrap(),
            -(4.0 - 0.25) / 2.0,
            max_relative = 1e-10
        );
        let bad = conn(&[(1, "r"), (2, "r"), (4, "r"), (5, "r")], &[]);
        assert!(matches!(
            build_class5(&bad, &grid, 1.0, -1.0, &Tolerances::default()),
            Err(Error::NotRiemannMetrizable(_))
        ));
    }

    #[test]
    fn theta_choices_parse() {
        assert_eq!(ThetaChoice::parse("square").unwrap(), ThetaChoice::Square);
        let c = ThetaChoice::parse("s^3 + s").unwrap();
        assert_eq!(c.apply(2.0).unwrap(), 10.0);
        assert!(ThetaChoice::parse("s*q").is_err());
    }
}
