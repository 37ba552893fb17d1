//! Softmax as a mapping from `Rⁿ` onto the open probability simplex.
//!
//! Not a rotation mapping; it is the textbook sanity case for the mapping
//! property checks (surjective, differentiable, convex line pre-images).

use crate::error::{Error, Result};
use crate::linalg::Mat;

pub fn softmax_map(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::ShapeMismatch { expected: 1, got: 0 });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

/// `∂pᵢ/∂xⱼ = pᵢ(δᵢⱼ − pⱼ)`.
pub fn softmax_jacobian(x: &[f64]) -> Result<Mat> {
    let p = softmax_map(x)?;
    let n = p.len();
    let mut j = Mat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let v = if a == b { p[a] * (1.0 - p[b]) } else { -p[a] * p[b] };
            j.set(a, b, v);
        }
    }
    Ok(j)
}

/// Element `(log pᵢ + c)ᵢ` of the pre-image line of `p`.
pub fn softmax_preimage(p: &[f64], c: f64) -> Result<Vec<f64>> {
    if p.iter().any(|v| !v.is_finite()) || !c.is_finite() {
        return Err(Error::NonFinite("softmax pre-image"));
    }
    if let Some(bad) = p.iter().find(|&&v| v <= 0.0) {
        return Err(Error::DegenerateInput {
            mapping: "softmax",
            reason: format!("probability {bad} is not positive"),
        });
    }
    Ok(p.iter().map(|v| v.ln() + c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn zero_input_is_uniform() {
        let p = softmax_map(&[0.0; 5]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn large_inputs_do_not_overflow() {
        let p = softmax_map(&[1000.0, 1000.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn preimage_line_round_trips() {
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..6).map(|_| rng.uniform(0.01, 1.0)).collect();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let c = rng.normal() * 10.0;
            let back = softmax_map(&softmax_preimage(&p, c).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&p) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_rows_sum_to_zero() {
        let j = softmax_jacobian(&[0.3, -1.2, 2.0, 0.0]).unwrap();
        for r in 0..4 {
            let s: f64 = (0..4).map(|c| j.get(r, c)).sum();
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn preimage_rejects_non_positive() {
        assert!(matches!(
            softmax_preimage(&[0.5, 0.5, 0.0], 0.0),
            Err(Error::DegenerateInput { .. })
        ));
    }
}
