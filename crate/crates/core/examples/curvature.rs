//! Curvature coefficients, bracket vectors and holonomy rank of a profile.
//!
//! cargo run --example curvature

use berwald::connection::{ConnectionProfile, TangentPoint};
use berwald::curvature::{
    bracket_vectors, curvature_profile, ricci_asymmetry, vertical_holonomy_rank,
};
use berwald::expr::Params;
use berwald::sampling::{default_samples, Grid};

fn main() -> berwald::Result<()> {
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

    let cp = curvature_profile(&conn, 1.0, 1.5)?;
    for (i, a) in cp.values().iter().enumerate() {
        if *a != 0.0 {
            println!("a{:<2} = {a}", i + 1);
        }
    }
    let [a, b, c] = cp.abc.unwrap();
    println!("a = {}, b = {}, c = {}", a.value, b.value, c.value);
    let [d, e, f] = cp.def.unwrap();
    println!(
        "D = {}, E = {}, F = {}, lambda = F/D = {}",
        d.value,
        e.value,
        f.value,
        f.value / d.value
    );
    println!("a1 + a4 + 2 a5 = {}", ricci_asymmetry(&cp));

    let p = TangentPoint::new([1.0, 1.5, 1.1, 0.0], [1.0, 0.2, 0.3, -0.1]);
    for v in bracket_vectors(&conn, &p, 2)? {
        let [x, y, z, w] = v.components;
        println!("{:<28} ({x:+.4}, {y:+.4}, {z:+.4}, {w:+.4})", v.label);
    }

    let grid = Grid::default();
    let rank = vertical_holonomy_rank(&conn, &default_samples(&grid, 20, 1), 1e-8)?;
    println!("vertical holonomy rank: {rank}");
    let flat = vertical_holonomy_rank(
        &ConnectionProfile::flat(),
        &default_samples(&grid, 20, 1),
        1e-8,
    )?;
    println!("flat profile rank: {flat}");
    Ok(())
}
