// Rotation losses: Frobenius, quaternion and the point-set loss with its
// closed form.

use rotmap::losses::{self, PointSet};
use rotmap::rng::Rng;
use rotmap::so3::{self, RotationVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(5);
    let a = so3::random_rotation(&mut rng);
    println!("{:>8} {:>12} {:>12} {:>10}", "angle", "frobenius", "quaternion", "ratio");
    for angle in [0.01, 0.1, 0.5, 1.0, 2.0, 3.0] {
        let b = a.compose(&so3::exp_map(&RotationVector(rng.unit_vector3().map(|c| c * angle)))?);
        let f = losses::frobenius_loss(a.matrix(), b.matrix()).0;
        let q = losses::quaternion_min_loss(&so3::matrix_to_quat(&a), &so3::matrix_to_quat(&b)).0;
        println!("{angle:>8.2} {f:>12.6} {q:>12.6} {:>10.4}", f / q);
    }
    println!("small-angle weight of the Frobenius loss: {}", losses::loss_weight_ratio());

    let points: Vec<[f64; 3]> = (0..200)
        .map(|_| {
            let u = rng.unit_vector3();
            [2.0 * u[0], u[1], 0.5 * u[2]]
        })
        .collect();
    let cloud = PointSet::new(points)?;
    let (r, r_star) = (so3::random_rotation(&mut rng), so3::random_rotation(&mut rng));
    let closed = losses::weighted_points_loss(r.matrix(), r_star.matrix(), &cloud).0;
    let direct = losses::direct_points_loss(r.matrix(), r_star.matrix(), &cloud);
    println!("point loss: closed form {closed:.12}, direct sum {direct:.12}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("rotation losses");
}
