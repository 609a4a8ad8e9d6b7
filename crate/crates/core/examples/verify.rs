//! Certifies a built Finsler function and shows a negative control.
//!
//! cargo run --example verify

use berwald::connection::ConnectionProfile;
use berwald::expr::Params;
use berwald::metrize::{build_class4, build_power_law, SignatureChoice};
use berwald::sampling::{default_samples, Grid};
use berwald::tolerances::Tolerances;
use berwald::verify::{
    berwald, hessian, homogeneity, horizontal_constancy, levi_civita_roundtrip, quadratic_fit_check,
};

fn main() -> berwald::Result<()> {
    let grid = Grid::default();
    let tol = Tolerances::default();
    let params: Params = [("alpha".to_string(), 3.0)].into();
    let conn = ConnectionProfile::from_sources(
        &[
            (1, "2*r*(alpha-2)"),
            (4, "4*alpha*r^3*(alpha-1)"),
            (6, "-2*alpha*r"),
            (8, "-2*r"),
            (10, "alpha*r"),
        ],
        params,
    )?;
    let l = build_power_law(&conn, &grid, &tol)?;
    let samples: Vec<_> = default_samples(&grid, 200, 9)
        .into_iter()
        .filter(|p| berwald::lagrangian::Lagrangian::admissible(&l, p))
        .take(40)
        .collect();

    let checks = [
        horizontal_constancy(&l, &conn, &samples, tol.horizontal)?,
        homogeneity(&l, &samples, tol.homogeneity)?,
        berwald(&l, &samples, tol.berwald)?,
        quadratic_fit_check(&conn, &grid, 9, tol.quadratic_fit, false)?,
    ];
    // The quadratic fit is run as a falsification: no Riemannian metric
    // exists, so the residual must stay above its tolerance.
    for c in &checks {
        println!(
            "{:<22} residual {:>10.3e} tolerance {:>8.1e}  {}",
            c.name,
            c.max_residual,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    let h = hessian(&l, &samples, tol.hessian_det)?;
    println!(
        "signature {:?}, min |det g| {:e}",
        h.signature.map(|s| s.to_string()),
        h.min_abs_det
    );

    // A metric shifted away from the true one fails the Levi-Civita check
    // (with a connection that actually varies, so the shift matters).
    let conn4 = ConnectionProfile::from_sources(&[(1, "1")], Params::new())?;
    let a = build_class4(&conn4, &grid, SignatureChoice::Lorentzian, &tol)?;
    let good = levi_civita_roundtrip(&a, &conn4, &grid, tol.levi_civita)?;
    let bad = levi_civita_roundtrip(
        &a.clone().perturbed([0.1, 0.0, 0.0, 0.0]),
        &conn4,
        &grid,
        tol.levi_civita,
    )?;
    println!(
        "Levi-Civita: built {:.1e} ({}), perturbed {:.1e} ({})",
        good.max_residual, good.passed, bad.max_residual, bad.passed
    );
    Ok(())
}
