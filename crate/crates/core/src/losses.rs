//! Rotation losses with their gradients.
//!
//! Gradients are taken with respect to the predicted matrix in ambient
//! coordinates (a 3×3 array), so callers chain them with a mapping Jacobian
//! through `vec(∂L/∂R)ᵀ · J`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Mat3, Vec3};
use crate::so3::UnitQuaternion;

#[derive(Clone, Debug, PartialEq)]
pub enum LossKind {
    /// `‖R − R*‖²_F`.
    FrobeniusSq,
    /// `min ‖q ± q*‖²`, evaluated on matrices as `2 − √(1 + tr(R*ᵀR))`.
    QuaternionMinSq,
    /// `‖(R − R*)Λ‖²_F` for a symmetric positive semidefinite `Λ`.
    WeightedPoints(Mat3),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub weight: f64,
}

impl LossSpec {
    pub fn frobenius() -> Self {
        Self {
            kind: LossKind::FrobeniusSq,
            weight: 1.0,
        }
    }

    pub fn quaternion_min() -> Self {
        Self {
            kind: LossKind::QuaternionMinSq,
            weight: 1.0,
        }
    }

    pub fn weighted_points(lambda: Mat3) -> Result<Self> {
        if !linalg::is_finite3(&lambda) {
            return Err(Error::NonFinite("loss weight matrix"));
        }
        let asym = linalg::max_abs_diff(&lambda, &linalg::transpose(&lambda));
        if asym > 1e-12 {
            return Err(Error::InvalidLoss(format!("Λ is not symmetric (|Λ − Λᵀ| = {asym:e})")));
        }
        let eig = linalg::sym_eig(&Mat::from_mat3(&lambda))?;
        if eig.values[0] < -1e-12 {
            return Err(Error::InvalidLoss(format!("Λ has eigenvalue {}", eig.values[0])));
        }
        Ok(Self {
            kind: LossKind::WeightedPoints(lambda),
            weight: 1.0,
        })
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidLoss(format!("weight {weight}")));
        }
        self.weight = weight;
        Ok(self)
    }

    /// Weighted value and gradient with respect to `r`.
    pub fn eval(&self, r: &Mat3, r_star: &Mat3) -> (f64, Mat3) {
        let (v, g) = match &self.kind {
            LossKind::FrobeniusSq => frobenius_loss(r, r_star),
            LossKind::QuaternionMinSq => quaternion_matrix_loss(r, r_star),
            LossKind::WeightedPoints(lambda) => lambda_loss(r, r_star, lambda),
        };
        (self.weight * v, linalg::scale(&g, self.weight))
    }
}

/// `Σ (R − R*)²` and its gradient `2(R − R*)`.
pub fn frobenius_loss(r: &Mat3, r_star: &Mat3) -> (f64, Mat3) {
    let d = linalg::sub(r, r_star);
    (linalg::frobenius_sq(&d), linalg::scale(&d, 2.0))
}

/// `min(‖q − q*‖², ‖q + q*‖²)` and the gradient of the branch achieving it.
/// On an exact tie the `−` branch is used.
pub fn quaternion_min_loss(q: &UnitQuaternion, q_star: &UnitQuaternion) -> (f64, [f64; 4]) {
    let a = q.to_array();
    let b = q_star.to_array();
    let minus: f64 = (0..4).map(|i| (a[i] - b[i]).powi(2)).sum();
    let plus: f64 = (0..4).map(|i| (a[i] + b[i]).powi(2)).sum();
    if minus <= plus {
        (minus, std::array::from_fn(|i| 2.0 * (a[i] - b[i])))
    } else {
        (plus, std::array::from_fn(|i| 2.0 * (a[i] + b[i])))
    }
}

/// [`quaternion_min_loss`] written on rotation matrices.
///
/// With `t = tr(R*ᵀR)`, `|q·q*| = √(1 + t)/2`, hence the loss is
/// `2 − √(1 + t)`. Its gradient `−R*/(2√(1 + t))` blows up at half-turns;
/// `1 + t` is floored at `1e-12` there.
pub fn quaternion_matrix_loss(r: &Mat3, r_star: &Mat3) -> (f64, Mat3) {
    let t: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| r[i][j] * r_star[i][j]).sum();
    let s = (1.0 + t).max(1e-12).sqrt();
    (2.0 - s, linalg::scale(r_star, -0.5 / s))
}

/// `‖(R − R*)Λ‖²_F` and its gradient `2(R − R*)ΛΛᵀ`.
pub fn lambda_loss(r: &Mat3, r_star: &Mat3, lambda: &Mat3) -> (f64, Mat3) {
    let d = linalg::sub(r, r_star);
    let dl = linalg::matmul(&d, lambda);
    let grad = linalg::scale(&linalg::matmul(&dl, &linalg::transpose(lambda)), 2.0);
    (linalg::frobenius_sq(&dl), grad)
}

/// Object points, centered on their (weighted) centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Vec3>,
    weights: Vec<f64>,
    diameter: f64,
}

impl PointSet {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        let n = points.len();
        Self::with_weights(points, vec![1.0; n])
    }

    /// Points with per-point area weights.
    pub fn with_weights(mut points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if weights.len() != points.len() {
            return Err(Error::ShapeMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if points.iter().flatten().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point set"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidLoss("point weights must be nonnegative with a positive sum".into()));
        }
        let mut c = [0.0; 3];
        for (p, w) in points.iter().zip(&weights) {
            for k in 0..3 {
                c[k] += w * p[k] / total;
            }
        }
        for p in points.iter_mut() {
            for k in 0..3 {
                p[k] -= c[k];
            }
        }
        let mut diameter: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                let d = linalg::norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
                diameter = diameter.max(d);
            }
        }
        if diameter == 0.0 {
            return Err(Error::ZeroDiameter);
        }
        Ok(Self {
            points,
            weights,
            diameter,
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Normalized second moment `Σ wᵢ xᵢxᵢᵀ / (d² Σ wᵢ)`.
    pub fn second_moment(&self) -> Mat3 {
        let total: f64 = self.weights.iter().sum();
        let k = 1.0 / (self.diameter * self.diameter * total);
        let mut m = [[0.0; 3]; 3];
        for (p, w) in self.points.iter().zip(&self.weights) {
            m = linalg::add(&m, &linalg::scale(&linalg::outer(p, p), w * k));
        }
        m
    }

    /// Symmetric square root of [`PointSet::second_moment`].
    pub fn lambda(&self) -> Mat3 {
        sqrtm_psd(&self.second_moment())
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec {
            kind: LossKind::WeightedPoints(self.lambda()),
            weight: 1.0,
        }
    }
}

/// Square root of a symmetric positive semidefinite 3×3 matrix; negative
/// rounding noise in the spectrum is clamped to 0.
pub fn sqrtm_psd(m: &Mat3) -> Mat3 {
    let eig = linalg::sym_eig(&Mat::from_mat3(m)).expect("finite moment matrix");
    let mut out = [[0.0; 3]; 3];
    for (i, &lam) in eig.values.iter().enumerate() {
        let v = eig.vector(i);
        let v = [v[0], v[1], v[2]];
        out = linalg::add(&out, &linalg::scale(&linalg::outer(&v, &v), lam.max(0.0).sqrt()));
    }
    // Exact symmetry for downstream checks.
    let t = linalg::transpose(&out);
    linalg::scale(&linalg::add(&out, &t), 0.5)
}

/// Mean squared displacement `Σ wᵢ‖R xᵢ − R* xᵢ‖² / (d² Σ wᵢ)` by direct sum.
pub fn direct_points_loss(r: &Mat3, r_star: &Mat3, points: &PointSet) -> f64 {
    let d = linalg::sub(r, r_star);
    let total: f64 = points.weights.iter().sum();
    let s: f64 = points
        .points
        .iter()
        .zip(&points.weights)
        .map(|(p, w)| {
            let e = linalg::mat_vec(&d, p);
            w * linalg::dot(&e, &e)
        })
        .sum();
    s / (points.diameter * points.diameter * total)
}

/// Closed form `‖(R − R*)Λ‖²_F` of the mean squared point displacement, with
/// its gradient.
pub fn weighted_points_loss(r: &Mat3, r_star: &Mat3, points: &PointSet) -> (f64, Mat3) {
    lambda_loss(r, r_star, &points.lambda())
}

/// `δ/γ`: weight of the Frobenius loss relative to the quaternion loss that
/// makes both agree for small angles (`2α²` against `α²/4`).
pub fn loss_weight_ratio() -> f64 {
    1.0 / 8.0
}
