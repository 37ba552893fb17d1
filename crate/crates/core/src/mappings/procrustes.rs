//! Special orthogonal Procrustes orthonormalization and its closed-form
//! derivative.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Mat3};
use crate::so3::RotationMatrix;
use crate::tol;

/// SVD-based projection of `m` onto SO(3) together with the factors used.
#[derive(Clone, Copy, Debug)]
pub struct ProcrustesSolution {
    pub rotation: RotationMatrix,
    pub u: Mat3,
    pub d: [f64; 3],
    pub v: Mat3,
    /// `det(U)·det(V)`, the last entry of `S = diag(1, 1, ±1)`.
    pub sign: f64,
}

/// `argmin_{R ∈ SO(3)} ‖R − M‖_F² = U·diag(1, 1, det U det V)·Vᵀ`.
///
/// Refuses inputs where the minimizer is not unique, i.e. `det(M) ≤ 0` with
/// `d₂ − d₃` below [`tol::PROCRUSTES_GAP_TOL`].
pub fn solve(m: &Mat3) -> Result<ProcrustesSolution> {
    let svd = linalg::svd3(m)?;
    let det_m = linalg::det3(m);
    if det_m <= 0.0 && svd.d[1] - svd.d[2] < tol::PROCRUSTES_GAP_TOL {
        return Err(Error::DegenerateInput {
            mapping: "procrustes",
            reason: format!(
                "det(M) = {det_m:e} and d2 - d3 = {:e}: the closest rotation is not unique",
                svd.d[1] - svd.d[2]
            ),
        });
    }
    let sign = (linalg::det3(&svd.u) * linalg::det3(&svd.v)).signum();
    let r = linalg::matmul(
        &linalg::matmul(&svd.u, &linalg::diag([1.0, 1.0, sign])),
        &linalg::transpose(&svd.v),
    );
    Ok(ProcrustesSolution {
        rotation: RotationMatrix::from_trusted(r),
        u: svd.u,
        d: svd.d,
        v: svd.v,
        sign,
    })
}

/// Closed-form Jacobian `∂vec(R)/∂vec(M)` (9×9, row-major vectorization).
///
/// `∂R/∂m_ij = U Ω^{ij} Vᵀ` with `Ω^{ij}` skew-symmetric. Writing
/// `p = u_ik v_jl` and `q = u_il v_jk`, its off-diagonal entries are
/// `(p − q)/(d_k + d_l)` when no reflection is involved. When
/// `det U det V < 0` and exactly one of `k, l` is the reflected last axis,
/// they become `(p + q)/(d_k − d_l)` for `l = 3` and `(p + q)/(d_l − d_k)`
/// for `k = 3`.
pub fn jacobian(sol: &ProcrustesSolution) -> Result<Mat> {
    let (u, v, d) = (&sol.u, &sol.v, &sol.d);
    let flipped = sol.sign < 0.0;

    // Denominators only depend on (k, l).
    let mut denom = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            if k == l {
                continue;
            }
            let den = if flipped && l == 2 {
                d[k] - d[l]
            } else if flipped && k == 2 {
                d[l] - d[k]
            } else {
                d[k] + d[l]
            };
            if den.abs() <= tol::PROCRUSTES_DERIV_TOL {
                return Err(Error::NearSingularDerivative { denominator: den });
            }
            denom[k][l] = den;
        }
    }

    let vt = linalg::transpose(v);
    let mut jac = Mat::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            let mut omega = [[0.0; 3]; 3];
            for k in 0..3 {
                for l in 0..3 {
                    if k == l {
                        continue;
                    }
                    let p = u[i][k] * v[j][l];
                    let q = u[i][l] * v[j][k];
                    let num = if flipped && (k == 2 || l == 2) { p + q } else { p - q };
                    omega[k][l] = num / denom[k][l];
                }
            }
            let dr = linalg::matmul(&linalg::matmul(u, &omega), &vt);
            let col = 3 * i + j;
            for (row, val) in linalg::vec9(&dr).into_iter().enumerate() {
                jac.set(row, col, val);
            }
        }
    }
    Ok(jac)
}

/// `argmin_{R ∈ SO(3)} ‖R Λ − M‖_F²` for `3×k` matrices `M` and `Λ`,
/// obtained as the Procrustes projection of `M Λᵀ`.
pub fn weighted_procrustes(m: &Mat, lambda: &Mat) -> Result<RotationMatrix> {
    if m.rows() != 3 || lambda.rows() != 3 || m.cols() != lambda.cols() {
        return Err(Error::ShapeMismatch {
            expected: 3 * m.cols(),
            got: lambda.rows() * lambda.cols(),
        });
    }
    let mlt = m.matmul(&lambda.transpose())?.to_mat3()?;
    Ok(solve(&mlt)?.rotation)
}

/// `‖R Λ − M‖_F²`.
pub fn weighted_objective(r: &RotationMatrix, m: &Mat, lambda: &Mat) -> f64 {
    let rl = Mat::from_mat3(r.matrix())
        .matmul(lambda)
        .expect("3×3 times 3×k");
    rl.data()
        .iter()
        .zip(m.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The `3×2` "rectangular diagonal" matrix `[[1, 0], [0, λ₂], [0, 0]]`.
pub fn diag_rect(lambda2: f64) -> Mat {
    Mat::from_row_major(3, 2, vec![1.0, 0.0, 0.0, lambda2, 0.0, 0.0]).expect("3×2")
}
