//! Builds metrizing forms: a power law, a class-3 pair and a flat metric.
//!
//! cargo run --example metrize

use berwald::connection::{ConnectionProfile, TangentPoint};
use berwald::expr::Params;
use berwald::lagrangian::{vertical_metric, ExpressionLagrangian, Lagrangian, Signature};
use berwald::metrize::{build_class3, build_class4, build_power_law, SignatureChoice, ThetaChoice};
use berwald::sampling::Grid;
use berwald::tolerances::Tolerances;

fn main() -> berwald::Result<()> {
    let grid = Grid::default();
    let tol = Tolerances::default();
    let p = TangentPoint::new([1.0, 1.5, 1.2, 0.0], [1.0, 0.8, 0.1, 0.1]);

    // Power law for Phi = t r.
    let conn = ConnectionProfile::from_sources(
        &[(1, "r"), (5, "t/3"), (9, "t/3"), (10, "t/3")],
        Params::new(),
    )?;
    let l = build_power_law(&conn, &grid, &tol)?;
    println!("{}", l.formula_text());
    println!("constants {:?}", l.constants);
    let displayed = ExpressionLagrangian::parse(
        "exp(t*r/2) * tdot^(1/2) * (rdot^2 - thetadot^2 - sin(theta)^2*phidot^2)^(3/4)",
        Params::new(),
    )?;
    let q = TangentPoint::new([2.0, 0.7, 0.4, 1.0], [0.5, 1.3, -0.2, 0.6]);
    println!(
        "built / displayed: {} at one point, {} at another",
        l.eval(&p)? / displayed.eval(&p)?,
        l.eval(&q)? / displayed.eval(&q)?
    );
    let g = vertical_metric(&l.eval_hyper(&p)?);
    println!(
        "signature {} det g {:e}",
        Signature::of(&g),
        g.determinant()
    );

    // Flat spacetime in spherical coordinates: class 3, both forms.
    let mink = ConnectionProfile::from_sources(&[(9, "1/r"), (10, "-r")], Params::new())?;
    let (f3, a3) = build_class3(&mink, &grid, ThetaChoice::parse("s^2")?, &tol)?;
    println!("{}", f3.formula_text());
    println!("{}", a3.formula_text());
    println!("M shift {:?}", a3.constants.get("M_shift"));
    let c = a3.coefficients(1.0, 2.0)?;
    println!(
        "A coefficients at r = 2: h_tt {:.6} h_tr {:.6} h_rr {:.6} kappa {:.6}",
        c[0].value, c[1].value, c[2].value, c[3].value
    );

    // Flat connection: class 4 metric with either signature.
    for s in [SignatureChoice::Lorentzian, SignatureChoice::Euclidean] {
        let a = build_class4(&ConnectionProfile::flat(), &grid, s, &tol)?;
        let g = vertical_metric(&a.eval_hyper(&p)?);
        println!(
            "class 4 {s:?}: A(p) = {} signature {}",
            a.eval(&p)?,
            Signature::of(&g)
        );
    }
    Ok(())
}
