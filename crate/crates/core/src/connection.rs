//! SO(3)-invariant torsion-free connections and tangent points.

use crate::ad::{Jet2, Real};
use crate::error::{Error, Result};
use crate::expr::{Expression, Params};

/// Coordinate indices.
pub const T: usize = 0;
pub const R: usize = 1;
pub const TH: usize = 2;
pub const PH: usize = 3;

pub const COORD_NAMES: [&str; 4] = ["t", "r", "theta", "phi"];

/// The twelve coefficient functions `k1..k12` of `(t, r)`.
///
/// Roles: `k1 = Γᵗ_tt`, `k2 = Γᵗ_tr`, `k3 = Γᵗ_rr`, `k4 = Γʳ_tt`,
/// `k5 = Γʳ_rr`, `k6 = Γʳ_tr`, `k7 = Γᵗ_θθ`, `k8 = Γ^φ_φt`, `k9 = Γ^φ_φr`,
/// `k10 = Γʳ_θθ`, `k11 = sinθ Γ^φ_tθ`, `k12 = sinθ Γ^φ_rθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionProfile {
    pub k: [Expression; 12],
    pub params: Params,
}

impl Default for ConnectionProfile {
    fn default() -> Self {
        ConnectionProfile {
            k: std::array::from_fn(|_| Expression::zero()),
            params: Params::new(),
        }
    }
}

impl ConnectionProfile {
    /// The flat connection of Minkowski space in spherical coordinates
    /// with `t, r` Cartesian-like (all `kᵢ = 0`).
    pub fn flat() -> Self {
        Self::default()
    }

    /// Builds a profile from `(index, source)` pairs with 1-based indices;
    /// absent coefficients are zero.
    pub fn from_sources(sources: &[(usize, &str)], params: Params) -> Result<Self> {
        let mut p = ConnectionProfile {
            params,
            ..Default::default()
        };
        for &(i, src) in sources {
            if !(1..=12).contains(&i) {
                return Err(Error::UnknownIdentifier(format!("k{i}")));
            }
            p.k[i - 1] = Expression::parse(src)?;
        }
        Ok(p)
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Every referenced parameter must be bound.
    pub fn check_bound(&self) -> Result<()> {
        for e in &self.k {
            for name in e.parameters() {
                if !self.params.contains_key(&name) {
                    return Err(Error::UnboundParameter(name));
                }
            }
        }
        Ok(())
    }

    pub fn jets(&self, t: f64, r: f64) -> Result<[Jet2; 12]> {
        let mut out = [Jet2::default(); 12];
        for (o, e) in out.iter_mut().zip(&self.k) {
            *o = e.eval_jet2(t, r, &self.params)?;
        }
        Ok(out)
    }

    pub fn values(&self, t: f64, r: f64) -> Result<[f64; 12]> {
        let mut out = [0.0; 12];
        for (o, e) in out.iter_mut().zip(&self.k) {
            *o = e.eval_f64(t, r, &self.params)?;
        }
        Ok(out)
    }

    /// Christoffel symbols `Γ^a_bc` at a position.
    pub fn christoffel_at(&self, t: f64, r: f64, theta: f64) -> Result<Gamma<f64>> {
        Ok(christoffel(&self.values(t, r)?, theta))
    }
}

/// `Γ[a][b][c] = Γ^a_bc`.
pub type Gamma<S> = [[[S; 4]; 4]; 4];

/// Connection table for the given coefficient values.
pub fn christoffel<S: Real>(k: &[S; 12], theta: S) -> Gamma<S> {
    let z = S::cst(0.0);
    let mut g = [[[z; 4]; 4]; 4];
    let s = theta.sin();
    let c = theta.cos();
    let s2 = s * s;
    let mut sym = |a: usize, b: usize, cc: usize, v: S| {
        g[a][b][cc] = v;
        g[a][cc][b] = v;
    };
    sym(T, T, T, k[0]);
    sym(T, T, R, k[1]);
    sym(T, R, R, k[2]);
    sym(R, T, T, k[3]);
    sym(R, R, R, k[4]);
    sym(R, T, R, k[5]);
    sym(T, TH, TH, k[6]);
    sym(T, PH, PH, k[6] * s2);
    sym(TH, TH, T, k[7]);
    sym(PH, PH, T, k[7]);
    sym(TH, TH, R, k[8]);
    sym(PH, PH, R, k[8]);
    sym(R, TH, TH, k[9]);
    sym(R, PH, PH, k[9] * s2);
    sym(PH, T, TH, k[10] / s);
    sym(TH, PH, T, -(k[10] * s));
    sym(PH, R, TH, k[11] / s);
    sym(TH, R, PH, -(k[11] * s));
    sym(TH, PH, PH, -(s * c));
    sym(PH, TH, PH, c / s);
    g
}

/// A point `(x, ẋ)` of the tangent bundle in the spherical chart.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TangentPoint {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub tdot: f64,
    pub rdot: f64,
    pub thetadot: f64,
    pub phidot: f64,
}

impl TangentPoint {
    pub fn new(x: [f64; 4], v: [f64; 4]) -> Self {
        TangentPoint {
            t: x[0],
            r: x[1],
            theta: x[2],
            phi: x[3],
            tdot: v[0],
            rdot: v[1],
            thetadot: v[2],
            phidot: v[3],
        }
    }
    pub fn from_array(a: &[f64; 8]) -> Self {
        Self::new([a[0], a[1], a[2], a[3]], [a[4], a[5], a[6], a[7]])
    }
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.t,
            self.r,
            self.theta,
            self.phi,
            self.tdot,
            self.rdot,
            self.thetadot,
            self.phidot,
        ]
    }
    pub fn position(&self) -> [f64; 4] {
        [self.t, self.r, self.theta, self.phi]
    }
    pub fn velocity(&self) -> [f64; 4] {
        [self.tdot, self.rdot, self.thetadot, self.phidot]
    }
    pub fn with_velocity(&self, v: [f64; 4]) -> Self {
        Self::new(self.position(), v)
    }
    pub fn with_position(&self, x: [f64; 4]) -> Self {
        Self::new(x, self.velocity())
    }
    /// `w² = θ̇² + φ̇² sin²θ`.
    pub fn w2(&self) -> f64 {
        let s = self.theta.sin();
        self.thetadot * self.thetadot + self.phidot * self.phidot * s * s
    }
    /// Nonzero velocity and a valid spherical chart.
    pub fn is_valid(&self) -> bool {
        self.velocity().iter().any(|v| *v != 0.0) && self.theta.sin() != 0.0
    }
}

/// Spray coefficients `Gᵃ = ½ Γᵃ_bc ẋᵇ ẋᶜ`.
pub fn spray_coefficients(conn: &ConnectionProfile, p: &TangentPoint) -> Result<[f64; 4]> {
    let g = conn.christoffel_at(p.t, p.r, p.theta)?;
    Ok(spray_from_gamma(&g, &p.velocity()))
}

pub fn spray_from_gamma(g: &Gamma<f64>, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (a, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for b in 0..4 {
            for c in 0..4 {
                s += g[a][b][c] * v[b] * v[c];
            }
        }
        *o = 0.5 * s;
    }
    out
}

/// Nonlinear connection `Nᵃ_b = Γᵃ_bc ẋᶜ`.
pub fn nonlinear_connection(g: &Gamma<f64>, v: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut n = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            n[a][b] = (0..4).map(|c| g[a][b][c] * v[c]).sum();
        }
    }
    n
}
