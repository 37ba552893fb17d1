//! Rotation types, conversions, exponential and logarithm maps, the geodesic
//! metric and uniform sampling.
//!
//! Quaternions are stored scalar-last, `(x, y, z, w)`, everywhere in the
//! crate, including file formats.

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, M3, Vec3};
use crate::rng::Rng;
use crate::tol;
use std::f64::consts::PI;

/// A 3×3 special orthogonal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix(linalg::IDENTITY3);

    /// Validates a caller-supplied matrix (`RᵀR = I`, `det R = 1` within 1e-6).
    pub fn new(m: Mat3) -> Result<Self> {
        Self::with_tolerance(m, tol::ROTATION_INPUT_TOL)
    }

    pub fn with_tolerance(m: Mat3, tol: f64) -> Result<Self> {
        if !linalg::is_finite3(&m) {
            return Err(Error::NonFinite("rotation matrix"));
        }
        let ortho = linalg::max_abs_diff(&linalg::matmul(&linalg::transpose(&m), &m), &linalg::IDENTITY3);
        let det = linalg::det3(&m);
        if ortho > tol || (det - 1.0).abs() > tol {
            return Err(Error::InvalidRotation(format!(
                "orthogonality error {ortho:e}, det {det}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix produced by a construction that is orthogonal by design.
    pub(crate) fn from_trusted(m: Mat3) -> Self {
        debug_assert!(
            Self::with_tolerance(m, tol::ROTATION_TOL).is_ok(),
            "not a rotation: {m:?}"
        );
        Self(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(linalg::transpose(&self.0))
    }

    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(linalg::matmul(&self.0, &other.0))
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        linalg::mat_vec(&self.0, p)
    }

    pub fn column(&self, j: usize) -> Vec3 {
        linalg::column(&self.0, j)
    }

    pub fn vec9(&self) -> [f64; 9] {
        linalg::vec9(&self.0)
    }

    pub fn angle(&self) -> f64 {
        geodesic_angle(&Self::IDENTITY, self)
    }

    pub fn distance_frobenius(&self, other: &RotationMatrix) -> f64 {
        linalg::frobenius(&linalg::sub(&self.0, &other.0))
    }
}

/// Unit quaternion `(x, y, z, w)`; `q` and `−q` encode the same rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitQuaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    /// Accepts a 4-vector whose norm is 1 within 1e-12.
    pub fn new(xyzw: [f64; 4]) -> Result<Self> {
        if xyzw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quaternion"));
        }
        let n = norm4(&xyzw);
        if (n - 1.0).abs() > tol::UNIT_QUAT_TOL {
            return Err(Error::InvalidRotation(format!("quaternion norm {n}")));
        }
        Ok(Self::from_array(xyzw))
    }

    /// Normalizes an arbitrary non-null 4-vector.
    pub fn normalize(xyzw: [f64; 4]) -> Result<Self> {
        if xyzw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quaternion"));
        }
        let n = norm4(&xyzw);
        if n < tol::QUAT_MIN_NORM {
            return Err(Error::DegenerateInput {
                mapping: "quaternion",
                reason: format!("norm {n:e} below {:e}", tol::QUAT_MIN_NORM),
            });
        }
        Ok(Self::from_array(xyzw.map(|v| v / n)))
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            w: a[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn neg(self) -> Self {
        Self::from_array(self.to_array().map(|v| -v))
    }

    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    /// Representative with `w ≥ 0` (ties: `x ≥ 0`, then `y ≥ 0`, then `z > 0`).
    pub fn canonical(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            self.neg()
        } else {
            self
        }
    }
}

fn norm4(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Axis-angle vector: direction is the axis, norm the angle in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationVector(pub Vec3);

impl RotationVector {
    pub fn angle(&self) -> f64 {
        linalg::norm3(&self.0)
    }
}

/// Rotation matrix of a unit quaternion, generic over the scalar type.
pub fn quat_to_matrix_generic<T: Scalar>(q: &[T; 4]) -> M3<T> {
    let [x, y, z, w] = *q;
    let two = T::cst(2.0);
    let one = T::one();
    [
        [
            one - two * (y * y + z * z),
            two * (x * y - z * w),
            two * (x * z + y * w),
        ],
        [
            two * (x * y + z * w),
            one - two * (x * x + z * z),
            two * (y * z - x * w),
        ],
        [
            two * (x * z - y * w),
            two * (y * z + x * w),
            one - two * (x * x + y * y),
        ],
    ]
}

pub fn quat_to_matrix(q: &UnitQuaternion) -> RotationMatrix {
    RotationMatrix::from_trusted(quat_to_matrix_generic(&q.to_array()))
}

/// Canonical quaternion of a rotation, by the largest-diagonal branch.
pub fn matrix_to_quat(r: &RotationMatrix) -> UnitQuaternion {
    let m = r.matrix();
    let tr = linalg::trace(m);
    let candidates = [tr, m[0][0], m[1][1], m[2][2]];
    let branch = (0..4)
        .max_by(|&i, &j| candidates[i].total_cmp(&candidates[j]))
        .unwrap_or(0);
    let q = match branch {
        0 => {
            let s = (1.0 + tr).sqrt() * 2.0;
            [
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
                0.25 * s,
            ]
        }
        1 => {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            [
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[2][1] - m[1][2]) / s,
            ]
        }
        2 => {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            [
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
                (m[0][2] - m[2][0]) / s,
            ]
        }
        _ => {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            [
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
                (m[1][0] - m[0][1]) / s,
            ]
        }
    };
    let n = norm4(&q);
    UnitQuaternion::from_array(q.map(|v| v / n)).canonical()
}

/// Rodrigues' formula, generic over the scalar type.
///
/// Uses the series of `sin θ/θ` and `(1 − cos θ)/θ²` below
/// [`tol::EXP_SERIES_THRESHOLD`], written in `θ²` so it stays smooth at 0.
pub fn exp_map_generic<T: Scalar>(v: &[T; 3]) -> M3<T> {
    let theta2 = linalg::dot(v, v);
    let (a, b) = if theta2.re().sqrt() < tol::EXP_SERIES_THRESHOLD {
        (
            T::one() - theta2.scale(1.0 / 6.0),
            T::cst(0.5) - theta2.scale(1.0 / 24.0),
        )
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    let k = skew(v);
    let k2 = linalg::matmul(&k, &k);
    let mut r = linalg::identity::<T>();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] += a * k[i][j] + b * k2[i][j];
        }
    }
    r
}

pub fn skew<T: Scalar>(v: &[T; 3]) -> M3<T> {
    let z = T::zero();
    [[z, -v[2], v[1]], [v[2], z, -v[0]], [-v[1], v[0], z]]
}

pub fn exp_map(v: &RotationVector) -> Result<RotationMatrix> {
    if v.0.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("rotation vector"));
    }
    Ok(RotationMatrix::from_trusted(exp_map_generic(&v.0)))
}

/// Principal logarithm, angle in `[0, π]`.
///
/// At angle π the axis sign follows the largest-diagonal quaternion branch.
pub fn log_map(r: &RotationMatrix) -> Result<RotationVector> {
    let r = RotationMatrix::new(*r.matrix())?;
    let q = matrix_to_quat(&r);
    let xyz = [q.x, q.y, q.z];
    let s = linalg::norm3(&xyz);
    if s < 1e-300 {
        return Ok(RotationVector([0.0; 3]));
    }
    let angle = 2.0 * s.atan2(q.w);
    let k = angle / s;
    Ok(RotationVector(xyz.map(|c| c * k)))
}

/// Elementary rotation about axis `axis` (0 = x, 1 = y, 2 = z).
pub fn axis_rotation<T: Scalar>(axis: usize, angle: T) -> M3<T> {
    let (c, s) = (angle.cos(), angle.sin());
    let (o, z) = (T::one(), T::zero());
    match axis {
        0 => [[o, z, z], [z, c, -s], [z, s, c]],
        1 => [[c, z, s], [z, o, z], [-s, z, c]],
        _ => [[c, -s, z], [s, c, z], [z, z, o]],
    }
}

/// `R_x(α) R_y(β) R_z(γ)`, generic over the scalar type.
pub fn euler_xyz_generic<T: Scalar>(a: T, b: T, c: T) -> M3<T> {
    linalg::matmul(
        &linalg::matmul(&axis_rotation(0, a), &axis_rotation(1, b)),
        &axis_rotation(2, c),
    )
}

pub fn euler_xyz_to_matrix(alpha: f64, beta: f64, gamma: f64) -> Result<RotationMatrix> {
    if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
        return Err(Error::NonFinite("euler angles"));
    }
    Ok(RotationMatrix::from_trusted(euler_xyz_generic(alpha, beta, gamma)))
}

/// XYZ angles with `β ∈ [−π/2, π/2]`; in gimbal lock `γ` is fixed to 0.
pub fn matrix_to_euler_xyz(r: &RotationMatrix) -> [f64; 3] {
    let m = r.matrix();
    let sb = m[0][2].clamp(-1.0, 1.0);
    let beta = sb.asin();
    if 1.0 - sb.abs() <= tol::GIMBAL_TOL {
        // R = R_x(α) R_y(±π/2): R₂₁ = ±sin α, R₂₂ = cos α.
        let alpha = (sb.signum() * m[1][0]).atan2(m[1][1]);
        [alpha, beta, 0.0]
    } else {
        [(-m[1][2]).atan2(m[2][2]), beta, (-m[0][1]).atan2(m[0][0])]
    }
}

/// `arccos((tr(R₁ᵀR₂) − 1)/2)` with the cosine clamped to `[−1, 1]`.
pub fn geodesic_angle(r1: &RotationMatrix, r2: &RotationMatrix) -> f64 {
    let a = r1.matrix();
    let b = r2.matrix();
    let mut tr = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            tr += a[i][j] * b[i][j];
        }
    }
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// Uniform rotation: normalized 4-vector of i.i.d. standard normals.
pub fn random_rotation(rng: &mut Rng) -> RotationMatrix {
    quat_to_matrix(&random_quaternion(rng))
}

pub fn random_quaternion(rng: &mut Rng) -> UnitQuaternion {
    loop {
        let v = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
        if let Ok(q) = UnitQuaternion::normalize(v) {
            return q;
        }
    }
}

/// Uniform rotation among those of angle strictly below `max_angle`.
pub fn random_rotation_within(rng: &mut Rng, max_angle: f64) -> RotationMatrix {
    loop {
        let r = random_rotation(rng);
        if r.angle() < max_angle {
            return r;
        }
    }
}

/// CDF of the angle of a uniform rotation: `(θ − sin θ)/π`.
pub fn uniform_angle_cdf(theta: f64) -> f64 {
    (theta - theta.sin()) / PI
}
