// A small network regressing rotations through the 6D mapping, then saved
// and reloaded.

use rotmap::losses::LossSpec;
use rotmap::mappings::MappingKind;
use rotmap::nn::{self, Activation, DenseNet, Head, OptimState, Optimizer};
use rotmap::rng::Rng;
use rotmap::so3::{self, RotationMatrix};

fn features(r: &RotationMatrix) -> Vec<f64> {
    // Two rotated reference directions.
    let (a, b) = (r.apply(&[1.0, 0.0, 0.0]), r.apply(&[0.3, 1.0, 0.2]));
    a.iter().chain(&b).copied().collect()
}

fn mean_error_deg(net: &DenseNet, head: Head, targets: &[RotationMatrix]) -> f64 {
    let total: f64 = targets
        .iter()
        .map(|t| {
            let (out, _) = net.forward(&features(t)).expect("shapes");
            head.rotation(&out).map_or(180.0, |r| so3::geodesic_angle(&r, t).to_degrees())
        })
        .sum();
    total / targets.len() as f64
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(1);
    let head = Head::Mapping(MappingKind::SixD);
    let mut net = DenseNet::mlp(&[6, 32, head.output_dim()], Activation::Tanh, &mut rng)?;
    let mut optim = OptimState::new(Optimizer::adam(3e-3), net.num_params());
    let loss = LossSpec::frobenius();
    let test: Vec<RotationMatrix> = (0..200).map(|_| so3::random_rotation(&mut rng)).collect();

    println!("step {:>5}: {:.2} deg", 0, mean_error_deg(&net, head, &test));
    for step in 1..=1500 {
        let targets: Vec<RotationMatrix> = (0..16).map(|_| so3::random_rotation(&mut rng)).collect();
        let inputs: Vec<Vec<f64>> = targets.iter().map(features).collect();
        nn::train_step(&mut net, &mut optim, &inputs, head, &loss, &targets)?;
        if step % 500 == 0 {
            println!("step {step:>5}: {:.2} deg", mean_error_deg(&net, head, &test));
        }
    }

    let dir = std::env::temp_dir().join(format!("rotmap-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("regressor.tnck");
    net.save(&path)?;
    let restored = DenseNet::load(&path)?;
    println!("reloaded checkpoint matches: {}", restored == net);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("train regressor");
}
