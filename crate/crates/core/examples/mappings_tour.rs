// Every mapping onto SO(3): forward value, Jacobian rank and a right inverse.

use rotmap::linalg;
use rotmap::mappings::{self, MappingKind};
use rotmap::rng::Rng;
use rotmap::so3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(7);
    let target = so3::random_rotation(&mut rng);
    println!("target angle: {:.4} rad", target.angle());
    println!("{:<34} {:>3} {:>10} {:>12}", "mapping", "n", "sigma3", "round trip");
    for kind in MappingKind::ALL {
        let x = match mappings::canonical_preimage(kind, &target) {
            Ok(x) => x,
            Err(e) => {
                println!("{:<34} {:>3} {e}", kind.to_string(), kind.input_dim());
                continue;
            }
        };
        let eval = mappings::jacobian(kind, &x)?;
        let rank = linalg::numeric_rank(&eval.jacobian, 1e-6)?;
        let err = linalg::max_abs_diff(eval.value.matrix(), target.matrix());
        println!("{:<34} {:>3} {:>10.3e} {:>12.1e}", kind.to_string(), kind.input_dim(), rank.sigma_d, err);
    }

    // Gimbal lock: the Euler Jacobian loses a rank at β = π/2.
    let locked = mappings::jacobian(MappingKind::EulerXYZ, &[0.4, std::f64::consts::FRAC_PI_2, -1.0])?;
    println!("euler-xyz at beta = pi/2: rank {}", linalg::numeric_rank(&locked.jacobian, 1e-6)?.rank);

    // Two inputs of the quaternion mapping with the same image.
    let pair = mappings::quaternion_antipodal_pair(&target);
    let mid: Vec<f64> = pair.x1.iter().zip(&pair.x2).map(|(a, b)| 0.5 * (a + b)).collect();
    println!("quaternion antipodal midpoint: {}", mappings::apply(MappingKind::Quaternion, &mid).unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("mappings tour");
}
