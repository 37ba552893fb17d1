// Rotation vectors on small-angle targets: squashed into a ball, plain, and
// plain with the targets moved next to a half-turn.

use std::f64::consts::FRAC_PI_2;

use rotmap::experiments::{align, run_restricted_rotvec_probe, AlignConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let iterations = 800;
    let cfg = AlignConfig {
        iterations,
        eval_every: 400,
        test_size: 128,
        ..Default::default()
    };
    let report = run_restricted_rotvec_probe(FRAC_PI_2, &cfg)?;
    let labels = [format!("rotvec-restricted:{FRAC_PI_2}"), "procrustes".into(), "rotvec".into(), "rotvec/shifted".into()];
    for label in labels {
        let err = align::final_error(&report, &label, cfg.seed, iterations).ok_or("missing final error")?;
        println!("{label:<40} {err:6.2} deg");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("restricted rotation vector");
}
