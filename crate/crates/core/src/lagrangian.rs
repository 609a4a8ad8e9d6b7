//! Functions on the tangent bundle that can be evaluated exactly with
//! second-order derivatives in all eight coordinates.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::ad::{Hyper, Real};
use crate::connection::TangentPoint;
use crate::error::{Error, Result};
use crate::expr::{Env, Expression, Params};

/// Names of the eight coordinates as used in expressions.
pub const TANGENT_NAMES: [&str; 8] = [
    "t", "r", "theta", "phi", "tdot", "rdot", "thetadot", "phidot",
];

/// A pseudo-Finsler function candidate.
pub trait Lagrangian: Send + Sync {
    fn label(&self) -> String;
    fn eval(&self, p: &TangentPoint) -> Result<f64>;
    /// Value, gradient and Hessian in `(t, r, θ, φ, ṫ, ṙ, θ̇, φ̇)`.
    fn eval_hyper(&self, p: &TangentPoint) -> Result<Hyper>;
    /// Whether `p` lies in the conic domain (away from its boundary).
    fn admissible(&self, p: &TangentPoint) -> bool {
        matches!(self.eval(p), Ok(v) if v.is_finite())
    }
}

/// `w² = θ̇² + sin²θ φ̇²` in any scalar type.
pub fn w2<S: Real>(x: &[S; 8]) -> S {
    let s = x[2].sin();
    x[6] * x[6] + s * s * x[7] * x[7]
}

/// Vertical metric tensor `g_ab = ½ ∂̇_a ∂̇_b L`.
pub fn vertical_metric(h: &Hyper) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| 0.5 * h.hess[4 + a][4 + b])
}

/// Counts of positive, negative and (numerically) zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Signature {
    pub fn of(m: &Matrix4<f64>) -> Self {
        let eig = SymmetricEigen::new(*m);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cut = 1e-12 * scale.max(1e-300);
        let mut s = Signature {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for &v in eig.eigenvalues.iter() {
            if v > cut {
                s.positive += 1;
            } else if v < -cut {
                s.negative += 1;
            } else {
                s.zero += 1;
            }
        }
        s
    }

    /// One eigenvalue of one sign and three of the other.
    pub fn is_lorentzian(&self) -> bool {
        self.zero == 0
            && (self.positive == 1 && self.negative == 3
                || self.positive == 3 && self.negative == 1)
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let signs: Vec<&str> = std::iter::repeat_n("+", self.positive)
            .chain(std::iter::repeat_n("-", self.negative))
            .chain(std::iter::repeat_n("0", self.zero))
            .collect();
        write!(f, "({})", signs.join(","))
    }
}

/// A Lagrangian given by an expression in the eight coordinates.
#[derive(Debug, Clone)]
pub struct ExpressionLagrangian {
    pub source: String,
    expr: Expression,
    params: Params,
}

impl ExpressionLagrangian {
    pub fn parse(source: &str, params: Params) -> Result<Self> {
        let expr = Expression::parse(source)?;
        for p in expr.parameters() {
            if !TANGENT_NAMES.contains(&p.as_str()) && !params.contains_key(&p) {
                return Err(Error::UnboundParameter(p));
            }
        }
        Ok(ExpressionLagrangian {
            source: source.to_string(),
            expr,
            params,
        })
    }

    fn eval_generic<S: Real>(&self, x: &[S; 8]) -> Result<S> {
        let vars: [(&str, S); 6] = std::array::from_fn(|i| (TANGENT_NAMES[i + 2], x[i + 2]));
        self.expr.eval(&Env {
            t: x[0],
            r: x[1],
            vars: &vars,
            params: &self.params,
        })
    }
}

impl Lagrangian for ExpressionLagrangian {
    fn label(&self) -> String {
        self.source.clone()
    }
    fn eval(&self, p: &TangentPoint) -> Result<f64> {
        self.eval_generic(&p.to_array())
    }
    fn eval_hyper(&self, p: &TangentPoint) -> Result<Hyper> {
        self.eval_generic(&Hyper::seed(&p.to_array()))
    }
}

/// `c · L` for a constant `c`.
pub struct Scaled<'a> {
    pub inner: &'a dyn Lagrangian,
    pub factor: f64,
}

impl Lagrangian for Scaled<'_> {
    fn label(&self) -> String {
        format!("{} * ({})", self.factor, self.inner.label())
    }
    fn eval(&self, p: &TangentPoint) -> Result<f64> {
        Ok(self.factor * self.inner.eval(p)?)
    }
    fn eval_hyper(&self, p: &TangentPoint) -> Result<Hyper> {
        Ok(self.inner.eval_hyper(p)? * self.factor)
    }
    fn admissible(&self, p: &TangentPoint) -> bool {
        self.inner.admissible(p)
    }
}
