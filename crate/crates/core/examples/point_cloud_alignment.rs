// Rotation regression from a point cloud and its rotated copy, comparing
// output heads. Short runs; the command line has the full-length defaults.

use rotmap::experiments::{align, run_alignment, AlignConfig, HeadChoice};
use rotmap::mappings::MappingKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let heads = [
        HeadChoice::Mapping(MappingKind::Procrustes),
        HeadChoice::Mapping(MappingKind::SixD),
        HeadChoice::Mapping(MappingKind::Quaternion),
        HeadChoice::Mapping(MappingKind::RotVec),
        HeadChoice::Matrix,
    ];
    let iterations = 800;
    for head in heads {
        let cfg = AlignConfig {
            head,
            iterations,
            eval_every: 400,
            test_size: 128,
            ..Default::default()
        };
        let report = run_alignment(&cfg)?;
        let labels: Vec<String> = match head {
            HeadChoice::Mapping(kind) => vec![kind.to_string()],
            HeadChoice::Matrix => vec!["matrix/procrustes".into(), "matrix/gram-schmidt".into()],
        };
        for label in labels {
            let err = align::final_error(&report, &label, cfg.seed, iterations).ok_or("missing final error")?;
            println!("{label:<22} test error after {iterations} steps: {err:6.2} deg");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("point cloud alignment");
}
