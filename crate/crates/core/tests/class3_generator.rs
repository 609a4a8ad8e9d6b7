mod common;

use berwald::classify::classify;
use berwald::metrize::{build_class3, RiemannForm, ThetaChoice};
use berwald::sampling::{default_samples, Grid};
use berwald::tolerances::Tolerances;
use berwald::verify::levi_civita_roundtrip;
use common::WarpedProfile;

fn grid() -> Grid {
    Grid::new((0.5, 1.5), (0.5, 1.5), 9, 9)
}

#[test]
fn generating_metric_reproduces_the_profile() {
    for seed in 0..5 {
        let w = WarpedProfile::seeded(seed);
        let w2 = w.clone();
        let form = RiemannForm::explicit(w.conn.clone(), move |t, r| Ok(w2.coefficients(t, r)));
        let c = levi_civita_roundtrip(&form, &w.conn, &grid(), 1e-9).unwrap();
        assert!(c.passed, "seed {seed}: {c:?}");
    }
}

#[test]
fn generated_profiles_are_class3_and_rebuild() {
    let tol = Tolerances::default();
    for seed in 0..3 {
        let w = WarpedProfile::seeded(seed);
        let g = grid();
        let rep = classify(&w.conn, &g, &default_samples(&g, 30, seed), &tol).unwrap();
        assert_eq!(rep.class_label, Some(3), "seed {seed}: {rep:#?}");
        let (_, a) = build_class3(&w.conn, &g, ThetaChoice::Identity, &tol).unwrap();
        let c = levi_civita_roundtrip(&a, &w.conn, &g, 1e-6).unwrap();
        assert!(c.passed, "seed {seed}: {c:?}");
    }
}
