// How far each mapping's loss strays from its first-order model along the
// gradient.

use rotmap::experiments::{fmt_float, linearity, run_linearity, LinearityConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = LinearityConfig {
        samples: 2000,
        eps: vec![1e-3, 1e-2, 1e-1, 1.0],
        ..Default::default()
    };
    let report = run_linearity(&cfg)?;
    print!("{:<34}", "median deviation");
    for eps in &cfg.eps {
        print!(" {eps:>10.0e}");
    }
    println!();
    for kind in &cfg.mappings {
        print!("{:<34}", kind.to_string());
        for eps in &cfg.eps {
            let v = report.values(linearity::EXPERIMENT, &kind.to_string(), &fmt_float(*eps), "median")[0];
            print!(" {v:>10.3e}");
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("linearity");
}
