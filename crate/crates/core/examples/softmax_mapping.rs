// Softmax as a mapping onto the probability simplex: its Jacobian and its
// line of pre-images.

use rotmap::mappings::{softmax_jacobian, softmax_map, softmax_preimage};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let x = [0.5, -1.0, 2.0, 0.0];
    let p = softmax_map(&x)?;
    println!("p = {p:.4?}");
    let j = softmax_jacobian(&x)?;
    for r in 0..p.len() {
        let row: Vec<f64> = (0..p.len()).map(|c| j.get(r, c)).collect();
        println!("  {row:+.4?}  row sum {:+.1e}", row.iter().sum::<f64>());
    }
    for c in [-3.0, 0.0, 10.0] {
        let back = softmax_map(&softmax_preimage(&p, c)?)?;
        let err = back.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("pre-image with offset {c:+}: max error {err:.1e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("softmax mapping");
}
