//! Small dense linear algebra: 3×3 helpers, a Jacobi symmetric eigensolver
//! (generic over [`Scalar`] so it can be differentiated), a 3×3 SVD and a
//! numeric rank estimate for tall Jacobians.

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::tol;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
/// 3×3 matrix over a generic scalar, row-major.
pub type M3<T> = [[T; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn identity<T: Scalar>() -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn matmul<T: Scalar>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
    })
}

pub fn transpose<T: Scalar>(a: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

pub fn mat_vec<T: Scalar>(a: &M3<T>, v: &[T; 3]) -> [T; 3] {
    std::array::from_fn(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

pub fn dot<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3<T: Scalar>(a: &[T; 3]) -> T {
    dot(a, a).sqrt()
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn add(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}

pub fn sub(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]))
}

pub fn scale(a: &Mat3, k: f64) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * k))
}

pub fn frobenius_sq(a: &Mat3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum()
}

pub fn frobenius(a: &Mat3) -> f64 {
    frobenius_sq(a).sqrt()
}

pub fn trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn diag(d: [f64; 3]) -> Mat3 {
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j]))
}

/// Row-major flattening, `vec(M)[3i + j] = M[i][j]`.
pub fn vec9(m: &Mat3) -> [f64; 9] {
    std::array::from_fn(|k| m[k / 3][k % 3])
}

pub fn unvec9(v: &[f64]) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| v[3 * i + j]))
}

pub fn column(m: &Mat3, j: usize) -> Vec3 {
    [m[0][j], m[1][j], m[2][j]]
}

pub fn from_columns(c0: &Vec3, c1: &Vec3, c2: &Vec3) -> Mat3 {
    std::array::from_fn(|i| [c0[i], c1[i], c2[i]])
}

pub fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn is_finite3(m: &Mat3) -> bool {
    m.iter().flatten().all(|v| v.is_finite())
}

/// Dense row-major matrix of construction-time size.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_mat3(m: &Mat3) -> Self {
        Self {
            rows: 3,
            cols: 3,
            data: vec9(m).to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.get(r, c) * vr;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_mat3(&self) -> Result<Mat3> {
        if self.rows != 3 || self.cols != 3 {
            return Err(Error::ShapeMismatch {
                expected: 9,
                got: self.rows * self.cols,
            });
        }
        Ok(unvec9(&self.data))
    }
}

/// Symmetric eigendecomposition, eigenvalues ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Eigenvectors as the columns of an orthogonal matrix.
    pub vectors: Mat,
}

impl SymEig {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// How many Jacobi sweeps to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweeps {
    /// Sweep until the off-diagonal part vanishes (capped).
    Converge,
    /// Exactly this many sweeps; used under dual numbers.
    Fixed(usize),
}

/// Cyclic Jacobi eigensolver on a dense symmetric `n×n` matrix (row-major).
///
/// Returns the diagonal and the accumulated rotation matrix in the solver's
/// natural column order (unsorted).
pub fn jacobi_raw<T: Scalar>(a: &[T], n: usize, sweeps: Sweeps) -> (Vec<T>, Vec<T>) {
    let mut a: Vec<T> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            (a[i * n + j] + a[j * n + i]).scale(0.5)
        })
        .collect();
    let mut v: Vec<T> = (0..n * n)
        .map(|k| if k / n == k % n { T::one() } else { T::zero() })
        .collect();

    let total: f64 = a.iter().map(|x| x.re() * x.re()).sum();
    let max_sweeps = match sweeps {
        Sweeps::Converge => tol::MAX_JACOBI_SWEEPS,
        Sweeps::Fixed(s) => s,
    };
    for _ in 0..max_sweeps {
        if sweeps == Sweeps::Converge {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[i * n + j].re() * a[i * n + j].re();
                    }
                }
            }
            if off == 0.0 || off <= (f64::EPSILON * f64::EPSILON * 1e-4) * total {
                break;
            }
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.is_exact_zero() {
                    continue;
                }
                let diff = a[q * n + q] - a[p * n + p];
                // tan 2θ = 2 a_pq / (a_qq − a_pp), |θ| ≤ π/4
                let s = if diff.re() >= 0.0 { 1.0 } else { -1.0 };
                let theta = (apq.scale(2.0 * s)).atan2(diff.scale(s)).scale(0.5);
                let (c, sn) = (theta.cos(), theta.sin());
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    (values, v)
}

/// Eigenpairs sorted ascending by value (stable in the solver's order).
pub fn jacobi_sorted<T: Scalar>(a: &[T], n: usize, sweeps: Sweeps) -> (Vec<T>, Vec<T>) {
    let (vals, vecs) = jacobi_raw(a, n, sweeps);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].re().total_cmp(&vals[j].re()));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = vec![T::zero(); n * n];
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vecs[r * n + new_c] = vecs[r * n + old_c];
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Eigendecomposition of a symmetric 3×3 or 4×4 matrix.
pub fn sym_eig(a: &Mat) -> Result<SymEig> {
    let n = a.rows();
    if a.cols() != n || !(n == 3 || n == 4) {
        return Err(Error::ShapeMismatch {
            expected: 16,
            got: a.rows() * a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("sym_eig input"));
    }
    let (values, vecs) = jacobi_sorted(a.data(), n, Sweeps::Converge);
    Ok(SymEig {
        values,
        vectors: Mat::from_row_major(n, n, vecs)?,
    })
}

/// `M = U·diag(d)·Vᵀ` with `d` sorted descending and nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Svd3 {
    pub u: Mat3,
    pub d: [f64; 3],
    pub v: Mat3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> Mat3 {
        matmul(&matmul(&self.u, &diag(self.d)), &transpose(&self.v))
    }
}

fn normalize(v: &Vec3) -> Option<Vec3> {
    let n = norm3(v);
    (n > 0.0 && n.is_finite()).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// Unit vector orthogonal to `a` (and to `b` when given).
fn complete_basis(a: &Vec3) -> Vec3 {
    // Axis least aligned with `a`.
    let k = (0..3)
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let p = dot(&e, a);
    let w = [e[0] - p * a[0], e[1] - p * a[1], e[2] - p * a[2]];
    normalize(&w).unwrap_or(e)
}

/// Singular value decomposition of a 3×3 matrix.
///
/// `V` and the singular values come from the eigendecomposition of `MᵀM`;
/// the columns of `U` are `M vᵢ` orthonormalized, completed by a cross
/// product, and the singular values are then read back as `uᵢᵀ M vᵢ`.
pub fn svd3(m: &Mat3) -> Result<Svd3> {
    if !is_finite3(m) {
        return Err(Error::NonFinite("svd3 input"));
    }
    let mtm = matmul(&transpose(m), m);
    let flat = vec9(&mtm);
    let (vals, vecs) = jacobi_raw(&flat, 3, Sweeps::Converge);
    let mut order = [0usize, 1, 2];
    // Stable: ties keep the solver's column order.
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let vcols: [Vec3; 3] =
        std::array::from_fn(|c| std::array::from_fn(|r| vecs[r * 3 + order[c]]));

    let scale = frobenius(m);
    let tiny = scale * 1e-14;
    let mv: [Vec3; 3] = std::array::from_fn(|c| mat_vec(m, &vcols[c]));

    let u0 = if norm3(&mv[0]) > tiny {
        normalize(&mv[0]).unwrap_or([1.0, 0.0, 0.0])
    } else {
        [1.0, 0.0, 0.0]
    };
    let p = dot(&u0, &mv[1]);
    let w = [
        mv[1][0] - p * u0[0],
        mv[1][1] - p * u0[1],
        mv[1][2] - p * u0[2],
    ];
    let u1 = if norm3(&w) > tiny {
        normalize(&w).unwrap_or_else(|| complete_basis(&u0))
    } else {
        complete_basis(&u0)
    };
    let mut ucols = [u0, u1, cross(&u0, &u1)];
    let mut vcols = vcols;
    let mut d: [f64; 3] = std::array::from_fn(|c| dot(&ucols[c], &mv[c]));
    for c in 0..3 {
        if d[c] < 0.0 {
            d[c] = -d[c];
            ucols[c] = [-ucols[c][0], -ucols[c][1], -ucols[c][2]];
        }
    }
    // Rounding can reorder nearly equal values.
    for _ in 0..2 {
        for c in 0..2 {
            if d[c] < d[c + 1] {
                d.swap(c, c + 1);
                ucols.swap(c, c + 1);
                vcols.swap(c, c + 1);
            }
        }
    }
    Ok(Svd3 {
        u: from_columns(&ucols[0], &ucols[1], &ucols[2]),
        d,
        v: from_columns(&vcols[0], &vcols[1], &vcols[2]),
    })
}

/// Numeric rank of a matrix together with its singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Third largest singular value (the SO(3) dimension), 0 when absent.
    pub sigma_d: f64,
}

/// Singular values of a small dense matrix by one-sided Jacobi rotations.
pub fn singular_values(j: &Mat) -> Result<Vec<f64>> {
    if !j.is_finite() {
        return Err(Error::NonFinite("singular_values input"));
    }
    let (m, n) = (j.rows(), j.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| j.column(c)).collect();
    for _ in 0..tol::MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let (xp, xq) = (cols[p][r], cols[q][r]);
                    cols[p][r] = c * xp - s * xq;
                    cols[q][r] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Counts singular values above `tol · σ_max`.
pub fn numeric_rank(j: &Mat, tol: f64) -> Result<RankReport> {
    let sv = singular_values(j)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol * smax).count()
    };
    Ok(RankReport {
        rank,
        sigma_d: sv.get(2).copied().unwrap_or(0.0),
        singular_values: sv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_mat3(rng: &mut Rng) -> Mat3 {
        std::array::from_fn(|_| std::array::from_fn(|_| rng.normal()))
    }

    fn orthogonality_error(m: &Mat3) -> f64 {
        max_abs_diff(&matmul(&transpose(m), m), &IDENTITY3)
    }

    #[test]
    fn sym_eig_diagonal() {
        let e = sym_eig(&Mat::from_mat3(&diag([3.0, 1.0, 2.0]))).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vector(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn sym_eig_identity4() {
        let mut i4 = Mat::zeros(4, 4);
        for k in 0..4 {
            i4.set(k, k, 1.0);
        }
        let e = sym_eig(&i4).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
        let back = e
            .vectors
            .matmul(&e.vectors.transpose())
            .unwrap();
        assert!(back.data().iter().zip(i4.data()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn sym_eig_rejects_bad_input() {
        let mut m = Mat::zeros(3, 3);
        m.set(1, 2, f64::NAN);
        assert_eq!(sym_eig(&m), Err(Error::NonFinite("sym_eig input")));
        assert!(matches!(
            sym_eig(&Mat::zeros(2, 2)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn svd_identity_and_reflection() {
        let s = svd3(&IDENTITY3).unwrap();
        assert_eq!(s.d, [1.0, 1.0, 1.0]);
        assert!(max_abs_diff(&s.reconstruct(), &IDENTITY3) < 1e-15);

        let m = diag([3.0, 2.0, -1.0]);
        let s = svd3(&m).unwrap();
        assert!((s.d[0] - 3.0).abs() < 1e-14);
        assert!((s.d[1] - 2.0).abs() < 1e-14);
        assert!((s.d[2] - 1.0).abs() < 1e-14);
        assert!((det3(&s.u) * det3(&s.v) + 1.0).abs() < 1e-12);
        assert!(max_abs_diff(&s.reconstruct(), &m) < 1e-14);
    }

    #[test]
    fn svd_rank_one() {
        let u = normalize(&[1.0, -2.0, 0.5]).unwrap();
        let v = normalize(&[0.3, 0.1, -1.0]).unwrap();
        let m = outer(&u, &v);
        let s = svd3(&m).unwrap();
        assert!((s.d[0] - 1.0).abs() < 1e-14);
        assert!(s.d[1].abs() < 1e-14 && s.d[2].abs() < 1e-14);
        assert!(orthogonality_error(&s.u) < tol::ORTHO_TOL);
        assert!(orthogonality_error(&s.v) < tol::ORTHO_TOL);
        assert!(max_abs_diff(&s.reconstruct(), &m) < 1e-14);
    }

    #[test]
    fn svd_zero_matrix() {
        let s = svd3(&[[0.0; 3]; 3]).unwrap();
        assert_eq!(s.d, [0.0; 3]);
        assert!(orthogonality_error(&s.u) < tol::ORTHO_TOL);
    }

    #[test]
    fn svd_random_reconstruction_and_orthogonality() {
        let mut rng = Rng::new(11);
        for _ in 0..10_000 {
            let m = random_mat3(&mut rng);
            let s = svd3(&m).unwrap();
            let err = frobenius(&sub(&s.reconstruct(), &m));
            assert!(err <= tol::RECON_TOL * frobenius(&m), "recon {err}");
            assert!(orthogonality_error(&s.u) <= tol::ORTHO_TOL);
            assert!(orthogonality_error(&s.v) <= tol::ORTHO_TOL);
            assert!(s.d[0] >= s.d[1] && s.d[1] >= s.d[2] && s.d[2] >= 0.0);
        }
    }

    #[test]
    fn svd_values_are_roots_of_gram_eigenvalues() {
        let mut rng = Rng::new(3);
        for _ in 0..200 {
            let m = random_mat3(&mut rng);
            let s = svd3(&m).unwrap();
            let e = sym_eig(&Mat::from_mat3(&matmul(&transpose(&m), &m))).unwrap();
            for k in 0..3 {
                let expect = e.values[2 - k].max(0.0).sqrt();
                assert!((s.d[k] - expect).abs() < 1e-7 * (1.0 + s.d[0]));
            }
        }
    }

    /// Roots of det(A − λI) by bisection on the characteristic cubic.
    fn char_poly_roots(a: &Mat3) -> [f64; 3] {
        let p = |l: f64| det3(&sub(a, &scale(&IDENTITY3, l)));
        let bound = a.iter().flatten().map(|v| v.abs()).sum::<f64>() + 1.0;
        // Scan for sign changes; symmetric matrices have three real roots.
        let steps = 20_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev = p(prev_x);
        for k in 1..=steps {
            let x = -bound + 2.0 * bound * k as f64 / steps as f64;
            let val = p(x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != val.signum() && val != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if p(lo).signum() == p(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = val;
        }
        assert_eq!(roots.len(), 3, "expected three separated roots");
        [roots[0], roots[1], roots[2]]
    }

    #[test]
    fn sym_eig_matches_characteristic_polynomial() {
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let b = random_mat3(&mut rng);
            let a = add(&b, &transpose(&b));
            let e = sym_eig(&Mat::from_mat3(&a)).unwrap();
            let roots = char_poly_roots(&a);
            for k in 0..3 {
                assert!((e.values[k] - roots[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sym_eig_recovers_constructed_spectrum() {
        let mut rng = Rng::new(9);
        for n in [3usize, 4] {
            for _ in 0..100 {
                // Orthogonal Q from the eigenvectors of a random symmetric matrix.
                let raw: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
                let (_, q) = jacobi_sorted(&raw, n, Sweeps::Converge);
                let mut spectrum: Vec<f64> = (0..n).map(|_| rng.normal() * 3.0).collect();
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = (0..n).map(|k| q[i * n + k] * spectrum[k] * q[j * n + k]).sum();
                    }
                }
                let e = sym_eig(&Mat::from_row_major(n, n, a.clone()).unwrap()).unwrap();
                spectrum.sort_by(f64::total_cmp);
                for k in 0..n {
                    assert!((e.values[k] - spectrum[k]).abs() < 1e-9);
                    // A v = λ v
                    let v = e.vector(k);
                    for i in 0..n {
                        let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                        assert!((av - e.values[k] * v[i]).abs() < 1e-10);
                    }
                }
                let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((vtv.get(i, j) - expect).abs() < tol::ORTHO_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn decompositions_are_deterministic() {
        let mut rng = Rng::new(1);
        let m = random_mat3(&mut rng);
        assert_eq!(svd3(&m).unwrap(), svd3(&m).unwrap());
        let s = Mat::from_mat3(&add(&m, &transpose(&m)));
        assert_eq!(sym_eig(&s).unwrap(), sym_eig(&s).unwrap());
    }

    #[test]
    fn numeric_rank_basic_cases() {
        let r = numeric_rank(&Mat::zeros(9, 3), tol::RANK_REL_TOL).unwrap();
        assert_eq!(r.rank, 0);
        let mut j = Mat::zeros(9, 3);
        for k in 0..3 {
            j.set(k, k, 1.0);
        }
        let r = numeric_rank(&j, tol::RANK_REL_TOL).unwrap();
        assert_eq!(r.rank, 3);
        assert_eq!(r.sigma_d, 1.0);
        let mut bad = Mat::zeros(9, 2);
        bad.set(0, 0, f64::INFINITY);
        assert!(numeric_rank(&bad, 1e-7).is_err());
    }

    #[test]
    fn singular_values_match_svd3() {
        let mut rng = Rng::new(21);
        for _ in 0..100 {
            let m = random_mat3(&mut rng);
            let sv = singular_values(&Mat::from_mat3(&m)).unwrap();
            let s = svd3(&m).unwrap();
            for k in 0..3 {
                assert!((sv[k] - s.d[k]).abs() < 1e-9 * (1.0 + s.d[0]));
            }
        }
    }
}
