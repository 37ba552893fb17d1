// Closed-form derivative of the Procrustes mapping, the weighted variant and
// its Gram-Schmidt limit.

use rotmap::linalg::{self, Mat};
use rotmap::mappings::{self, procrustes, MappingKind};
use rotmap::rng::Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(3);

    for label in ["det > 0", "det < 0"] {
        let mut m = rng.normal_vec(9);
        let det = linalg::det3(&linalg::unvec9(&m));
        if (label == "det > 0") != (det > 0.0) {
            m.iter_mut().take(3).for_each(|v| *v = -*v);
        }
        let closed = mappings::jacobian(MappingKind::Procrustes, &m)?;
        let fd = mappings::jacobian_fd(MappingKind::Procrustes, &m, 1e-6)?;
        let diff = closed.jacobian.data().iter().zip(fd.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{label}: |closed form - finite differences| = {diff:.2e}");
    }

    // argmin ‖RΛ − M‖ over SO(3) for a 3×4 problem.
    let m = Mat::from_row_major(3, 4, rng.normal_vec(12))?;
    let lambda = Mat::from_row_major(3, 4, rng.normal_vec(12))?;
    let best = mappings::weighted_procrustes(&m, &lambda)?;
    println!("weighted objective at the optimum: {:.6}", procrustes::weighted_objective(&best, &m, &lambda));

    // Shrinking the weight of the second column recovers Gram-Schmidt.
    let x = rng.normal_vec(6);
    let sixd = mappings::apply(MappingKind::SixD, &x)?;
    let cols = Mat::from_row_major(2, 3, x)?.transpose();
    for l2 in [1e-1, 1e-2, 1e-3, 1e-4] {
        let r = mappings::weighted_procrustes(&cols, &procrustes::diag_rect(l2))?;
        println!("lambda2 = {l2:.0e}: distance to 6D = {:.3e}", r.distance_frobenius(&sixd));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("procrustes derivative");
}
