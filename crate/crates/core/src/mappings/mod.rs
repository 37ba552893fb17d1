//! Differentiable mappings `f: Rⁿ → SO(3)`.
//!
//! Each [`MappingKind`] exposes a forward evaluation ([`apply`]), a 9×n
//! ambient Jacobian ([`jacobian`]), a right inverse ([`canonical_preimage`])
//! and a generator of distinct inputs sharing the same image
//! ([`preimage_pair`]).
//!
//! Input layouts:
//!
//! | kind                | n  | layout                                             |
//! |---------------------|----|----------------------------------------------------|
//! | `RotVec`            | 3  | rotation vector                                    |
//! | `RotVecRestricted`  | 3  | unconstrained vector squashed into the α-ball      |
//! | `Quaternion`        | 4  | `(x, y, z, w)`, normalized                         |
//! | `EulerXYZ`          | 3  | `(α, β, γ)` for `R_x(α) R_y(β) R_z(γ)`             |
//! | `SixD`              | 6  | first column then second column                    |
//! | `Procrustes`        | 9  | row-major 3×3 matrix                               |
//! | `SymMatrix10`       | 10 | upper triangle of a symmetric 4×4, row by row      |
//!
//! The Procrustes Jacobian is closed form. Every other kind is
//! differentiated by running its forward code on dual numbers.

pub mod procrustes;
pub mod softmax;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Mat3, Sweeps, M3};
use crate::rng::Rng;
use crate::so3::{self, RotationMatrix};
use crate::tol;

pub use procrustes::{weighted_procrustes, ProcrustesSolution};
pub use softmax::{softmax_jacobian, softmax_map, softmax_preimage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MappingKind {
    RotVec,
    /// Rotation vector squashed into the open ball of radius `max_angle`.
    RotVecRestricted {
        max_angle: f64,
    },
    Quaternion,
    EulerXYZ,
    SixD,
    Procrustes,
    SymMatrix10,
}

impl MappingKind {
    /// Every kind, with the restricted rotation vector at `π/2`.
    pub const ALL: [MappingKind; 7] = [
        MappingKind::RotVec,
        MappingKind::RotVecRestricted { max_angle: PI / 2.0 },
        MappingKind::Quaternion,
        MappingKind::EulerXYZ,
        MappingKind::SixD,
        MappingKind::Procrustes,
        MappingKind::SymMatrix10,
    ];

    pub fn rotvec_restricted(max_angle: f64) -> Result<Self> {
        if !(max_angle > 0.0 && max_angle < PI) {
            return Err(Error::InvalidConfig(format!(
                "restricted rotation vector needs 0 < max angle < π, got {max_angle}"
            )));
        }
        Ok(MappingKind::RotVecRestricted { max_angle })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            MappingKind::RotVec | MappingKind::RotVecRestricted { .. } | MappingKind::EulerXYZ => 3,
            MappingKind::Quaternion => 4,
            MappingKind::SixD => 6,
            MappingKind::Procrustes => 9,
            MappingKind::SymMatrix10 => 10,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MappingKind::RotVec => "rotvec",
            MappingKind::RotVecRestricted { .. } => "rotvec-restricted",
            MappingKind::Quaternion => "quaternion",
            MappingKind::EulerXYZ => "euler-xyz",
            MappingKind::SixD => "6d",
            MappingKind::Procrustes => "procrustes",
            MappingKind::SymMatrix10 => "symmatrix10",
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingKind::RotVecRestricted { max_angle } => {
                write!(f, "rotvec-restricted:{max_angle}")
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MappingKind {
    type Err = Error;

    /// Accepts the names of [`MappingKind::name`]; the restricted rotation
    /// vector takes an optional `:angle` suffix in radians (default `π/2`).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let kind = match head {
            "rotvec" | "rotation-vector" => MappingKind::RotVec,
            "rotvec-restricted" => {
                let angle = match arg {
                    Some(a) => a.parse::<f64>().map_err(|_| {
                        Error::InvalidConfig(format!("bad restricted angle '{a}'"))
                    })?,
                    None => PI / 2.0,
                };
                return MappingKind::rotvec_restricted(angle);
            }
            "quaternion" | "quat" => MappingKind::Quaternion,
            "euler-xyz" | "euler" => MappingKind::EulerXYZ,
            "6d" | "sixd" | "gram-schmidt" => MappingKind::SixD,
            "procrustes" => MappingKind::Procrustes,
            "symmatrix10" | "symmatrix" => MappingKind::SymMatrix10,
            _ => return Err(Error::InvalidConfig(format!("unknown mapping '{s}'"))),
        };
        if arg.is_some() {
            return Err(Error::InvalidConfig(format!("mapping '{head}' takes no argument")));
        }
        Ok(kind)
    }
}

/// Forward value and ambient Jacobian `∂vec(R)/∂x` (9×n).
#[derive(Clone, Debug)]
pub struct MappingEval {
    pub value: RotationMatrix,
    pub jacobian: Mat,
}

/// Two distinct inputs with the same image.
#[derive(Clone, Debug, PartialEq)]
pub struct PreimagePair {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

fn check_input(kind: MappingKind, x: &[f64]) -> Result<()> {
    if x.len() != kind.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: kind.input_dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mapping input"));
    }
    Ok(())
}

fn degenerate(kind: MappingKind, reason: String) -> Error {
    Error::DegenerateInput {
        mapping: kind.name(),
        reason,
    }
}

/// Domain checks beyond finiteness (Procrustes checks its own in `solve`).
fn check_domain(kind: MappingKind, x: &[f64]) -> Result<()> {
    match kind {
        MappingKind::Quaternion => {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n < tol::QUAT_MIN_NORM {
                return Err(degenerate(kind, format!("‖x‖ = {n:e}")));
            }
        }
        MappingKind::SixD => {
            let m = Mat::from_row_major(2, 3, x.to_vec())?.transpose();
            let r = linalg::numeric_rank(&m, tol::SIXD_RANK_TOL)?;
            if r.rank < 2 {
                return Err(degenerate(kind, "columns are collinear or null".into()));
            }
        }
        MappingKind::SymMatrix10 => {
            let eig = linalg::sym_eig(&Mat::from_row_major(4, 4, unpack_sym4(x).to_vec())?)?;
            let gap = eig.values[1] - eig.values[0];
            if gap < tol::SYMMAT_GAP_TOL {
                return Err(degenerate(kind, format!("eigen-gap λ2 - λ1 = {gap:e}")));
            }
        }
        _ => {}
    }
    Ok(())
}

/// Forward pass shared by the value and the dual-number Jacobian.
///
/// Procrustes is excluded: its SVD is not differentiated through.
fn forward_generic<T: Scalar>(kind: MappingKind, x: &[T], sweeps: Sweeps) -> M3<T> {
    match kind {
        MappingKind::RotVec => so3::exp_map_generic(&[x[0], x[1], x[2]]),
        MappingKind::RotVecRestricted { max_angle } => {
            let v = [x[0], x[1], x[2]];
            let r2 = linalg::dot(&v, &v);
            // tanh(r)/r with its series near 0
            let ratio = if r2.re().sqrt() < tol::EXP_SERIES_THRESHOLD {
                T::one() - r2.scale(1.0 / 3.0) + (r2 * r2).scale(2.0 / 15.0)
            } else {
                let r = r2.sqrt();
                r.tanh() / r
            };
            let k = ratio.scale(max_angle);
            so3::exp_map_generic(&v.map(|c| c * k))
        }
        MappingKind::Quaternion => {
            let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
            let q = [x[0] / n, x[1] / n, x[2] / n, x[3] / n];
            so3::quat_to_matrix_generic(&q)
        }
        MappingKind::EulerXYZ => so3::euler_xyz_generic(x[0], x[1], x[2]),
        MappingKind::SixD => gram_schmidt(&[x[0], x[1], x[2]], &[x[3], x[4], x[5]]),
        MappingKind::SymMatrix10 => {
            let s = unpack_sym4(x);
            let (_, vecs) = linalg::jacobi_sorted(&s, 4, sweeps);
            let q = [vecs[0], vecs[4], vecs[8], vecs[12]];
            so3::quat_to_matrix_generic(&q)
        }
        MappingKind::Procrustes => unreachable!("procrustes has a dedicated path"),
    }
}

/// Special Gram-Schmidt: `e₁ = c₁/‖c₁‖`, `e₂ ∝ c₂ − (e₁·c₂)e₁`, `e₃ = e₁ × e₂`.
pub fn gram_schmidt<T: Scalar>(c1: &[T; 3], c2: &[T; 3]) -> M3<T> {
    let n1 = linalg::norm3(c1);
    let e1 = c1.map(|c| c / n1);
    let p = linalg::dot(&e1, c2);
    let w = [c2[0] - p * e1[0], c2[1] - p * e1[1], c2[2] - p * e1[2]];
    let n2 = linalg::norm3(&w);
    let e2 = w.map(|c| c / n2);
    let e3 = linalg::cross(&e1, &e2);
    std::array::from_fn(|i| [e1[i], e2[i], e3[i]])
}

/// Symmetric 4×4 matrix from its 10 upper-triangular coefficients.
pub fn unpack_sym4<T: Scalar>(a: &[T]) -> [T; 16] {
    const IDX: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];
    std::array::from_fn(|k| a[IDX[k / 4][k % 4]])
}

pub fn pack_sym4(s: &[f64; 16]) -> [f64; 10] {
    [
        s[0], s[1], s[2], s[3], s[5], s[6], s[7], s[10], s[11], s[15],
    ]
}

/// Maps `x` onto SO(3).
pub fn apply(kind: MappingKind, x: &[f64]) -> Result<RotationMatrix> {
    check_input(kind, x)?;
    if kind == MappingKind::Procrustes {
        return Ok(procrustes::solve(&linalg::unvec9(x))?.rotation);
    }
    check_domain(kind, x)?;
    let r = forward_generic::<f64>(kind, x, Sweeps::Converge);
    RotationMatrix::with_tolerance(r, tol::ROTATION_TOL)
}

fn dual_jacobian<const N: usize>(kind: MappingKind, x: &[f64]) -> Mat {
    let xs: [f64; N] = x.try_into().expect("input dimension checked");
    let seeded = Dual::<N>::seed(&xs);
    let r = forward_generic(kind, &seeded, Sweeps::Fixed(tol::DUAL_JACOBI_SWEEPS));
    let mut jac = Mat::zeros(9, N);
    for i in 0..3 {
        for j in 0..3 {
            for (c, d) in r[i][j].du.iter().enumerate() {
                jac.set(3 * i + j, c, *d);
            }
        }
    }
    jac
}

/// Symmetric-matrix Jacobian from the first-order perturbation of the
/// smallest eigenvector, `dv₁ = Σ_{k>1} v_k (v_kᵀ dS v₁)/(λ₁ − λ_k)`, which
/// only needs `λ₂ > λ₁`; the quaternion-to-matrix step runs on dual numbers.
fn symmatrix_jacobian(x: &[f64]) -> Result<Mat> {
    const PAIRS: [(usize, usize); 10] = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];
    let eig = linalg::sym_eig(&Mat::from_row_major(4, 4, unpack_sym4(x).to_vec())?)?;
    let v: Vec<Vec<f64>> = (0..4).map(|k| eig.vector(k)).collect();
    let mut q = [Dual::<10>::constant(0.0); 4];
    for (i, qi) in q.iter_mut().enumerate() {
        qi.re = v[0][i];
    }
    for (j, &(a, b)) in PAIRS.iter().enumerate() {
        for k in 1..4 {
            let mut proj = v[k][a] * v[0][b];
            if a != b {
                proj += v[k][b] * v[0][a];
            }
            let coef = proj / (eig.values[0] - eig.values[k]);
            for (i, qi) in q.iter_mut().enumerate() {
                qi.du[j] += coef * v[k][i];
            }
        }
    }
    let r = so3::quat_to_matrix_generic(&q);
    let mut jac = Mat::zeros(9, 10);
    for i in 0..3 {
        for j in 0..3 {
            for (c, d) in r[i][j].du.iter().enumerate() {
                jac.set(3 * i + j, c, *d);
            }
        }
    }
    Ok(jac)
}

/// Value and exact ambient Jacobian of `kind` at `x`.
pub fn jacobian(kind: MappingKind, x: &[f64]) -> Result<MappingEval> {
    check_input(kind, x)?;
    if kind == MappingKind::Procrustes {
        let sol = procrustes::solve(&linalg::unvec9(x))?;
        return Ok(MappingEval {
            value: sol.rotation,
            jacobian: procrustes::jacobian(&sol)?,
        });
    }
    let value = apply(kind, x)?;
    let jacobian = match kind.input_dim() {
        3 => dual_jacobian::<3>(kind, x),
        4 => dual_jacobian::<4>(kind, x),
        6 => dual_jacobian::<6>(kind, x),
        10 => symmatrix_jacobian(x)?,
        n => unreachable!("no mapping of input dimension {n}"),
    };
    Ok(MappingEval { value, jacobian })
}

/// Central finite-difference Jacobian with step `h`.
pub fn jacobian_fd(kind: MappingKind, x: &[f64], h: f64) -> Result<Mat> {
    check_input(kind, x)?;
    let n = x.len();
    let mut jac = Mat::zeros(9, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        xp[c] = x[c] + h;
        let plus = apply(kind, &xp)?.vec9();
        xp[c] = x[c] - h;
        let minus = apply(kind, &xp)?.vec9();
        xp[c] = x[c];
        for r in 0..9 {
            jac.set(r, c, (plus[r] - minus[r]) / (2.0 * h));
        }
    }
    Ok(jac)
}

/// [`jacobian`], falling back to central differences when the closed-form
/// Procrustes derivative is near singular. The step stays well inside the
/// gap that triggered the fallback.
pub fn jacobian_with_fallback(kind: MappingKind, x: &[f64]) -> Result<MappingEval> {
    match jacobian(kind, x) {
        Err(Error::NearSingularDerivative { denominator }) => Ok(MappingEval {
            value: apply(kind, x)?,
            jacobian: jacobian_fd(kind, x, (0.25 * denominator.abs()).clamp(1e-12, 1e-6))?,
        }),
        other => other,
    }
}

/// A right inverse: `apply(kind, canonical_preimage(kind, R)) = R`.
pub fn canonical_preimage(kind: MappingKind, r: &RotationMatrix) -> Result<Vec<f64>> {
    let r = RotationMatrix::new(*r.matrix())?;
    Ok(match kind {
        MappingKind::RotVec => so3::log_map(&r)?.0.to_vec(),
        MappingKind::RotVecRestricted { max_angle } => {
            let v = so3::log_map(&r)?.0;
            let theta = linalg::norm3(&v);
            if theta >= max_angle {
                return Err(Error::OutOfRange {
                    angle: theta,
                    max_angle,
                });
            }
            // g_α⁻¹(v) = artanh(‖v‖/α) v/‖v‖, → v/α at 0
            let k = if theta < 1e-12 {
                1.0 / max_angle
            } else {
                (theta / max_angle).atanh() / theta
            };
            v.map(|c| c * k).to_vec()
        }
        MappingKind::Quaternion => so3::matrix_to_quat(&r).to_array().to_vec(),
        MappingKind::EulerXYZ => so3::matrix_to_euler_xyz(&r).to_vec(),
        MappingKind::SixD => {
            let (c1, c2) = (r.column(0), r.column(1));
            vec![c1[0], c1[1], c1[2], c2[0], c2[1], c2[2]]
        }
        MappingKind::Procrustes => r.vec9().to_vec(),
        MappingKind::SymMatrix10 => pack_sym4(&projector_complement(&so3::matrix_to_quat(&r).to_array()))
            .to_vec(),
    })
}

/// `I₄ − q qᵀ`: eigenvalue 0 on `±q`, 1 elsewhere.
fn projector_complement(q: &[f64; 4]) -> [f64; 16] {
    std::array::from_fn(|k| {
        let (i, j) = (k / 4, k % 4);
        (if i == j { 1.0 } else { 0.0 }) - q[i] * q[j]
    })
}

/// Symmetric 4×4 matrix `Q diag(λ) Qᵀ` whose smallest eigenvector is `q`.
fn symmetric_with_min_eigvec(q: &[f64; 4], rng: &mut Rng) -> [f64; 16] {
    // Orthonormal basis starting at q (Gram-Schmidt of q and random vectors).
    let mut basis: Vec<[f64; 4]> = vec![*q];
    while basis.len() < 4 {
        let mut v = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
        for b in &basis {
            let p: f64 = (0..4).map(|i| v[i] * b[i]).sum();
            for i in 0..4 {
                v[i] -= p * b[i];
            }
        }
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.map(|c| c / n));
        }
    }
    let base = rng.normal();
    let mut spectrum = [base; 4];
    for lam in spectrum.iter_mut().skip(1) {
        *lam = base + rng.uniform(0.5, 2.0);
    }
    std::array::from_fn(|k| {
        let (i, j) = (k / 4, k % 4);
        (0..4).map(|e| spectrum[e] * basis[e][i] * basis[e][j]).sum()
    })
}

/// Symmetric positive definite 3×3 matrix with eigenvalues in `[0.5, 2]`.
fn random_spd(rng: &mut Rng) -> Mat3 {
    let q = *so3::random_rotation(rng).matrix();
    let d = linalg::diag([rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)]);
    linalg::matmul(&linalg::matmul(&q, &d), &linalg::transpose(&q))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Two distinct inputs mapping to `r`.
///
/// Quaternion pairs are positive rescalings of the same 4-vector (same
/// connected component); see [`quaternion_antipodal_pair`] for the
/// disconnected witness.
pub fn preimage_pair(kind: MappingKind, r: &RotationMatrix, rng: &mut Rng) -> Result<PreimagePair> {
    let r = RotationMatrix::new(*r.matrix())?;
    let pair = match kind {
        MappingKind::EulerXYZ => return Err(Error::Unsupported(kind.name())),
        MappingKind::RotVecRestricted { .. } => return Err(Error::InjectiveMapping(kind.name())),
        MappingKind::Quaternion => {
            let q = so3::matrix_to_quat(&r).to_array();
            loop {
                let (a, b) = (rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0));
                if (a - b).abs() > 1e-3 {
                    break PreimagePair {
                        x1: q.map(|c| c * a).to_vec(),
                        x2: q.map(|c| c * b).to_vec(),
                    };
                }
            }
        }
        MappingKind::RotVec => {
            let mut v = so3::log_map(&r)?.0;
            if linalg::norm3(&v) < 1e-9 {
                v = [0.0; 3];
                let u = rng.unit_vector3();
                let x2 = u.map(|c| c * 2.0 * PI).to_vec();
                return Ok(PreimagePair { x1: v.to_vec(), x2 });
            }
            let k = 1.0 + 2.0 * PI / linalg::norm3(&v);
            PreimagePair {
                x1: v.to_vec(),
                x2: v.map(|c| c * k).to_vec(),
            }
        }
        MappingKind::Procrustes => {
            // R·P has SVD (R Q) Λ Qᵀ, so Procrustes(R·P) = R.
            let x1 = linalg::vec9(&linalg::matmul(r.matrix(), &random_spd(rng))).to_vec();
            let x2 = linalg::vec9(&linalg::matmul(r.matrix(), &random_spd(rng))).to_vec();
            PreimagePair { x1, x2 }
        }
        MappingKind::SixD => {
            let (e1, e2) = (r.column(0), r.column(1));
            let mut draw = || {
                let (c1, c2, t) = (rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.normal());
                let a: Vec<f64> = e1.iter().map(|v| c1 * v).collect();
                let b: Vec<f64> = (0..3).map(|i| c2 * e2[i] + t * e1[i]).collect();
                [a, b].concat()
            };
            PreimagePair { x1: draw(), x2: draw() }
        }
        MappingKind::SymMatrix10 => {
            let q = so3::matrix_to_quat(&r).to_array();
            let x1 = pack_sym4(&symmetric_with_min_eigvec(&q, rng)).to_vec();
            let x2 = pack_sym4(&symmetric_with_min_eigvec(&q, rng)).to_vec();
            PreimagePair { x1, x2 }
        }
    };
    if distance(&pair.x1, &pair.x2) <= 1e-3 {
        // Astronomically unlikely with continuous draws; retry from the stream.
        return preimage_pair(kind, &r, rng);
    }
    Ok(pair)
}

/// `(q, −q)`: two quaternion inputs of the same rotation in disconnected
/// components of the pre-image.
pub fn quaternion_antipodal_pair(r: &RotationMatrix) -> PreimagePair {
    let q = so3::matrix_to_quat(r).to_array();
    PreimagePair {
        x1: q.to_vec(),
        x2: q.map(|c| -c).to_vec(),
    }
}

#[cfg(test)]
mod tests;
