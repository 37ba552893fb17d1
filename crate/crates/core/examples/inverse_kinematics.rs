// Auto-encoding inverse kinematics of a three-joint chain: a network maps
// keypoints to joint rotations and forward kinematics closes the loop.

use rotmap::experiments::{ik, run_ik, IKConfig};
use rotmap::mappings::MappingKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let iterations = 1000;
    for mapping in [MappingKind::Procrustes, MappingKind::SixD, MappingKind::Quaternion, MappingKind::RotVec] {
        let cfg = IKConfig {
            mapping,
            iterations,
            test_size: 128,
            ..IKConfig::with_joints(3)
        };
        let report = run_ik(&cfg)?;
        let err = ik::final_error(&report, &mapping.to_string(), cfg.seed, iterations).ok_or("missing final error")?;
        let per_joint: Vec<String> = (0..cfg.joints())
            .map(|j| {
                let v = report.value(ik::EXPERIMENT, &mapping.to_string(), cfg.seed, &iterations.to_string(), &format!("joint_error_{j}"));
                format!("{:.3}", v.unwrap_or(f64::NAN))
            })
            .collect();
        println!("{:<12} mean joint error {err:.4}  per joint {}", mapping.to_string(), per_joint.join(" "));
    }
    let (bones, _) = ik::default_chain(3);
    println!("chain reach: {:.3}", bones.iter().map(|b| b[1]).sum::<f64>());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("inverse kinematics");
}
