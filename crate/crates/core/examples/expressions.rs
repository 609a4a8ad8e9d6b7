//! Parsing connection coefficients and evaluating them with derivatives.
//!
//! cargo run --example expressions

use berwald::config::JobConfig;
use berwald::expr::{Expression, Params};

fn main() -> berwald::Result<()> {
    let params: Params = [("alpha".to_string(), 3.0)].into();
    let k4 = Expression::parse("4*alpha*r^3*(alpha-1)")?;
    println!("k4 = {k4}, parameters {:?}", k4.parameters());

    // Value with first and second partials in (t, r).
    let j = k4.eval_jet2(1.0, 1.5, &params)?;
    println!(
        "at (1, 1.5): value {} d_r {} d_rr {} (exact: {}, {}, {})",
        j.value,
        j.d_r,
        j.d_rr,
        24.0 * 1.5f64.powi(3),
        72.0 * 1.5f64.powi(2),
        144.0 * 1.5
    );

    // Symbolic derivative, then numeric evaluation.
    let d = k4.derivative("r");
    println!("d/dr k4 = {d} -> {}", d.eval_f64(1.0, 1.5, &params)?);

    // Unary minus binds to the following atom: -(r-t)^2 is ((-(r-t))^2).
    let a = Expression::parse("-(r-t)^2")?.eval_f64(0.0, 1.0, &params)?;
    let b = Expression::parse("-((r-t)^2)")?.eval_f64(0.0, 1.0, &params)?;
    println!("-(r-t)^2 = {a}, -((r-t)^2) = {b}");

    // Diagnostics point at the offending byte.
    match Expression::parse("r +* 2") {
        Err(e) => println!("parse error: {e}"),
        Ok(_) => unreachable!(),
    }

    // Whole job configs use the same expressions.
    let cfg = JobConfig::parse(
        "[connection]\nk1 = r\nk5 = t/3\nk9 = t/3\nk10 = t/3\n[grid]\nresolution = 5x5\n[samples]\ncount = 8\n",
    )?;
    println!(
        "config: k10 = {}, grid {}x{}, {} samples drawn",
        cfg.connection.k[9],
        cfg.grid.nt,
        cfg.grid.nr,
        cfg.draw_samples(&|_| true).len()
    );
    match JobConfig::parse("[connection]\nk1 = r\nk13 = 1\n") {
        Err(e) => println!("config error: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
