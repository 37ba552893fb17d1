// Experiment reports: CSV output, parsing it back and the markdown summary.

use rotmap::experiments::{ExperimentReport, IKConfig, run_ik};
use rotmap::mappings::MappingKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut report = ExperimentReport::new();
    for mapping in [MappingKind::Procrustes, MappingKind::Quaternion] {
        for seed in 0..2 {
            let cfg = IKConfig {
                mapping,
                seed,
                iterations: 200,
                eval_every: 100,
                test_size: 64,
                hidden: vec![32],
                ..Default::default()
            };
            report.extend(run_ik(&cfg)?);
        }
    }
    let csv = report.to_csv();
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("... {} rows\n", report.rows().len());
    let parsed = ExperimentReport::from_csv(&csv)?;
    assert_eq!(parsed, report);
    print!("{}", parsed.summary_markdown(true));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("reports");
}
