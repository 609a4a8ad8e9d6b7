//! Autoparallels against Finsler geodesics, and the trajectory file format.
//!
//! cargo run --example geodesic

use berwald::connection::{ConnectionProfile, TangentPoint};
use berwald::expr::Params;
use berwald::geodesic::{integrate_finsler, integrate_spray};
use berwald::lagrangian::Lagrangian;
use berwald::metrize::build_power_law;
use berwald::sampling::Grid;
use berwald::tolerances::Tolerances;

fn main() -> berwald::Result<()> {
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
    let l = build_power_law(&conn, &Grid::default(), &tol)?;
    let p0 = TangentPoint::new([1.0, 1.0, 1.2, 0.0], [0.3, 0.3, 0.1, 0.05]);
    let a = integrate_spray(&conn, &p0, 0.5, 11, tol.ode)?;
    let b = integrate_finsler(&l, &p0, 0.5, 11, tol.ode)?;
    println!("sup-norm discrepancy {:e}", a.sup_distance(&b));
    let l0 = l.eval(&p0)?;
    let drift = (0..a.states.len())
        .map(|k| l.eval(&a.point(k)).map(|v| (v - l0).abs() / l0.abs()))
        .collect::<berwald::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!(
        "relative drift of L {drift:e}; {} steps, {} rejected",
        a.stats.steps, a.stats.rejected
    );
    print!("{}", a.to_columns());

    // Leaving the chart is reported with the last state.
    let flat = ConnectionProfile::flat();
    let out = TangentPoint::new([0.0, 0.2, 1.2, 0.0], [1.0, -1.0, 0.0, 0.0]);
    if let Err(e) = integrate_spray(&flat, &out, 1.0, 5, tol.ode) {
        println!("{e}");
    }
    Ok(())
}
