//! Reduced brute-force search for class-5 profiles: every hit with a
//! symmetric Ricci tensor must metrize and certify, every hit without one
//! must be rejected.

use berwald::classify::Verdict;
use berwald::config::JobConfig;
use berwald::curvature::curvature_profile;
use berwald::pipeline::{run, run_classification, Stage};
use berwald::report::Status;
use berwald::tolerances::Tolerances;

const CHOICES: [&str; 5] = ["0", "1", "-1", "r", "-r"];

fn job(k: [&str; 4]) -> JobConfig {
    let text = format!(
        "[connection]\nk1 = {}\nk2 = {}\nk4 = {}\nk5 = {}\n[grid]\nresolution = 5x5\n[samples]\ncount = 20\nseed = 5\n[task]\nc1 = 1\nc2 = -1\n",
        k[0], k[1], k[2], k[3]
    );
    JobConfig::parse(&text).unwrap()
}

#[test]
fn reduced_class5_search() {
    let tol = Tolerances::default();
    let (mut symmetric, mut asymmetric) = (Vec::new(), Vec::new());
    for i in 0..CHOICES.len().pow(4) {
        let k: [&str; 4] =
            std::array::from_fn(|j| CHOICES[i / CHOICES.len().pow(j as u32) % CHOICES.len()]);
        let cfg = job(k);
        let Ok(cls) = run_classification(&cfg, &tol) else {
            continue;
        };
        if cls.class_label != Some(5) {
            continue;
        }
        // a1 + a4 straight from the curvature coefficients on the grid.
        let worst = cfg
            .grid
            .points()
            .into_iter()
            .map(|(t, r)| {
                let a = curvature_profile(&cfg.connection, t, r).unwrap().values();
                (a[0] + a[3]).abs()
            })
            .fold(0.0, f64::max);
        if worst < 1e-12 {
            assert_eq!(cls.riemann_metrizable, Verdict::Yes, "{k:?}");
            symmetric.push(k);
        } else {
            assert_eq!(cls.riemann_metrizable, Verdict::No, "{k:?}");
            asymmetric.push(k);
        }
    }
    assert!(symmetric.contains(&["0", "r", "r", "r"]), "{symmetric:?}");
    assert!(asymmetric.contains(&["r", "r", "r", "r"]), "{asymmetric:?}");
    for k in symmetric.iter().take(6) {
        let rep = run(&job(*k), "search", Stage::Metrize, &tol);
        assert_eq!(
            rep.outcome.status,
            Status::Pass,
            "{k:?}: {}",
            rep.outcome.message
        );
    }
    for k in asymmetric.iter().take(6) {
        let rep = run(&job(*k), "search", Stage::Metrize, &tol);
        assert_eq!(
            rep.outcome.status,
            Status::Fail,
            "{k:?}: {}",
            rep.outcome.message
        );
        assert!(
            rep.outcome.message.contains("NotRiemannMetrizable")
                || rep.outcome.message.contains("not Riemann"),
            "{}",
            rep.outcome.message
        );
    }
    println!(
        "{} symmetric and {} asymmetric class-5 hits",
        symmetric.len(),
        asymmetric.len()
    );
}
