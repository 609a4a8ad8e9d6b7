//! Named numerical tolerances, overridable from the command line.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative threshold for "identically zero on the grid", scaled by
    /// `1 + max |aᵢ|`.
    pub zero: f64,
    /// Absolute threshold for "nonzero somewhere".
    pub nonzero: f64,
    /// Singular-value cutoff relative to `max(σ_max, 1)`.
    pub rank: f64,
    /// Allowed spread of `λ = F/D` across the grid.
    pub lambda_spread: f64,
    /// Curl residual of potentials' one-forms.
    pub curl: f64,
    /// Agreement of the two L-shaped integration paths.
    pub path: f64,
    /// Normalized `δₐL` residual.
    pub horizontal: f64,
    /// Minimum `|det g|`.
    pub hessian_det: f64,
    /// Levi-Civita round-trip residual.
    pub levi_civita: f64,
    /// Sup-norm discrepancy between autoparallels and Finsler geodesics.
    pub geodesic: f64,
    /// Relative drift of `L` along autoparallels.
    pub drift: f64,
    /// Third vertical derivative of the spray.
    pub berwald: f64,
    /// Minimum quadratic-fit residual that witnesses "no quadratic metric".
    pub quadratic_fit: f64,
    /// Relative error of 2-homogeneity.
    pub homogeneity: f64,
    /// Relative error of determinant formulas.
    pub determinant: f64,
    /// `Var(L₁/L₂)/mean²` for functions expected to agree up to a constant.
    pub ratio: f64,
    /// Local error tolerance of the Runge–Kutta integrator.
    pub ode: f64,
    /// Absolute error tolerance of adaptive quadrature.
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-9,
            nonzero: 1e-6,
            rank: 1e-8,
            lambda_spread: 1e-8,
            curl: 1e-8,
            path: 1e-8,
            horizontal: 1e-7,
            hessian_det: 1e-10,
            levi_civita: 1e-6,
            geodesic: 1e-6,
            drift: 1e-8,
            berwald: 1e-5,
            quadratic_fit: 1e-3,
            homogeneity: 1e-10,
            determinant: 1e-6,
            ratio: 1e-8,
            ode: 1e-10,
            quadrature: 1e-10,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 18] = [
        "zero",
        "nonzero",
        "rank",
        "lambda_spread",
        "curl",
        "path",
        "horizontal",
        "hessian_det",
        "levi_civita",
        "geodesic",
        "drift",
        "berwald",
        "quadratic_fit",
        "homogeneity",
        "determinant",
        "ratio",
        "ode",
        "quadrature",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "zero" => &mut self.zero,
            "nonzero" => &mut self.nonzero,
            "rank" => &mut self.rank,
            "lambda_spread" => &mut self.lambda_spread,
            "curl" => &mut self.curl,
            "path" => &mut self.path,
            "horizontal" => &mut self.horizontal,
            "hessian_det" => &mut self.hessian_det,
            "levi_civita" => &mut self.levi_civita,
            "geodesic" => &mut self.geodesic,
            "drift" => &mut self.drift,
            "berwald" => &mut self.berwald,
            "quadratic_fit" => &mut self.quadratic_fit,
            "homogeneity" => &mut self.homogeneity,
            "determinant" => &mut self.determinant,
            "ratio" => &mut self.ratio,
            "ode" => &mut self.ode,
            "quadrature" => &mut self.quadrature,
            _ => return None,
        })
    }

    /// Sets a tolerance by name; values must be positive and finite.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance {name} must be positive, got {value}"
            )));
        }
        match self.slot(name) {
            Some(s) => {
                *s = value;
                Ok(())
            }
            None => Err(Error::UnknownIdentifier(name.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_is_settable() {
        let mut t = Tolerances::default();
        for n in Tolerances::NAMES {
            t.set(n, 0.5).unwrap();
        }
        assert_eq!(t.zero, 0.5);
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("zero", -1.0).is_err());
    }
}
