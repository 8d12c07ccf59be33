//! One line per acceptance criterion. Exits nonzero if any criterion fails.

use std::time::Instant;

use chernlab::suite::{self, Check, SuiteConfig, DEFAULT_SEED};

const CRITERIA: &[(&str, &str, f64)] = &[
    ("winding", "winding integrals of z^n", 1.0),
    ("index", "Toeplitz index and three-way Bott verdict", 10.0),
    ("monoid", "blocksum, concatenation, flip and adjoint identities", 10.0),
    ("homotopies", "canonical homotopies", 20.0),
    ("stokes", "Stokes relation and closedness", 30.0),
    ("cp1", "tautological bundle on CP1", 30.0),
    ("transgression", "transgression form", 60.0),
    ("curvature", "curvature formulas", 5.0),
    ("holonomy", "Kato holonomy", 30.0),
    ("point_circle", "point and circle models", 10.0),
    ("determinism", "determinism", 60.0),
];

fn describe(c: &Check) -> String {
    let status = if c.pass { "ok" } else { "FAIL" };
    match &c.error {
        Some(e) => format!("    {status} {}: error: {e}", c.name),
        None => format!("    {status} {}: measured {:.3e}, bound {:.0e}", c.name, c.measured, c.tolerance),
    }
}

fn main() {
    let cfg = SuiteConfig { seed: DEFAULT_SEED, ..Default::default() };
    let mut failures = 0;
    for (i, (group, title, budget)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let checks = suite::run_group(&cfg, group);
        let mut pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let mut extra = Vec::new();
        if *group == "determinism" {
            let a = serde_json::to_string(&suite::run(&cfg).expect("suite runs")).unwrap();
            let b = serde_json::to_string(&suite::run(&cfg).expect("suite runs")).unwrap();
            let same = a == b;
            pass &= same;
            extra.push(format!("    {} verify report byte-identical across runs ({} bytes)", if same { "ok" } else { "FAIL" }, a.len()));
        }
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {:>2} [{group}] {title}: {} ({} checks, {secs:.1} s, budget {budget} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            checks.len()
        );
        for c in &checks {
            println!("{}", describe(c));
        }
        for line in extra {
            println!("{line}");
        }
        if !pass {
            failures += 1;
        }
    }
    println!("{} of {} criteria pass", CRITERIA.len() - failures, CRITERIA.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
