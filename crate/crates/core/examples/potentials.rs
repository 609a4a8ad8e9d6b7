//! Scalar potentials from closed one-forms and solutions of Pfaff systems.
//!
//! cargo run --example potentials

use std::sync::Arc;

use berwald::ad::Jet1;
use berwald::potential::{OneForm, Pfaff, PfaffField, Potential};
use berwald::sampling::Grid;

/// `dy = y (dt + 2 dr)`, solved by `y = e^{t + 2r}`.
struct Growth;

impl Pfaff for Growth {
    fn dim(&self) -> usize {
        1
    }
    fn names(&self) -> Vec<String> {
        vec!["y".into()]
    }
    fn rhs(&self, _t: f64, _r: f64, y: &[Jet1]) -> berwald::Result<(Vec<Jet1>, Vec<Jet1>)> {
        Ok((vec![y[0]], vec![y[0] * 2.0]))
    }
}

fn main() -> berwald::Result<()> {
    let grid = Grid::new((0.5, 2.5), (0.5, 2.5), 9, 9);

    // d(t r^2) = r^2 dt + 2 t r dr.
    let form: OneForm = Arc::new(|t, r| {
        Ok((
            Jet1 {
                value: r * r,
                d_t: 0.0,
                d_r: 2.0 * r,
            },
            Jet1 {
                value: 2.0 * t * r,
                d_t: 2.0 * r,
                d_r: 2.0 * t,
            },
        ))
    });
    let f = Potential::new("f", form, grid.base_point(), 1e-12);
    let path = f.certify(&grid, 1e-8, 1e-8)?;
    println!("path discrepancy {path:e}");
    let (t0, r0) = grid.base_point();
    println!(
        "f(2, 1.5) = {} (exact {})",
        f.value(2.0, 1.5)?,
        2.0 * 2.25 - t0 * r0 * r0
    );
    let table = f.table(&grid)?;
    println!(
        "bicubic table at (1.9, 1.3): {} (exact {})",
        table.interpolate(1.9, 1.3),
        1.9 * 1.69 - t0 * r0 * r0
    );

    // A form that is not closed is rejected.
    let twisted: OneForm = Arc::new(|t, _r| {
        Ok((
            Jet1 {
                value: 0.0,
                d_t: 0.0,
                d_r: 0.0,
            },
            Jet1 {
                value: t,
                d_t: 1.0,
                d_r: 0.0,
            },
        ))
    });
    if let Err(e) =
        Potential::new("g", twisted, grid.base_point(), 1e-12).certify(&grid, 1e-8, 1e-8)
    {
        println!("{e}");
    }

    let y = PfaffField::new(Arc::new(Growth), (0.0, 0.0), vec![1.0], 1e-12);
    let j = y.jets(0.3, 0.2)?[0];
    println!(
        "y(0.3, 0.2) = {} (exact {}), d_rr = {}",
        j.value,
        0.7f64.exp(),
        j.d_rr
    );
    Ok(())
}
