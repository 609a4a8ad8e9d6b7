//! Classifies every fixture shipped with the crate.
//!
//! cargo run --example classify

use std::path::Path;

use berwald::config::JobConfig;
use berwald::pipeline::run_classification;
use berwald::tolerances::Tolerances;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .expect("fixtures directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ini"))
        .collect();
    names.sort();
    let tol = Tolerances::default();
    println!(
        "{:<22} {:<8} {:<6} {:<8} {:<5} {:>12}",
        "fixture", "finsler", "class", "riemann", "rank", "ricci asym"
    );
    for path in names {
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let cfg = match JobConfig::load(&path) {
            Ok(c) => c,
            Err(e) => {
                println!("{name:<22} config error: {e}");
                continue;
            }
        };
        match run_classification(&cfg, &tol) {
            Ok(r) => println!(
                "{name:<22} {:<8} {:<6} {:<8} {:<5} {:>12.3e}",
                format!("{:?}", r.finsler_metrizable),
                r.class_label.map_or("none".into(), |c| c.to_string()),
                format!("{:?}", r.riemann_metrizable),
                r.holonomy_rank,
                r.ricci_asymmetry
            ),
            Err(e) => println!("{name:<22} {e}"),
        }
    }
}
