use super::*;
use crate::linalg::{diag, max_abs_diff, IDENTITY3};
use crate::so3::{random_rotation, RotationVector};

const KINDS: [MappingKind; 7] = MappingKind::ALL;

/// Admissible random input for `kind`.
fn random_input(kind: MappingKind, rng: &mut Rng) -> Vec<f64> {
    loop {
        let x = rng.normal_vec(kind.input_dim());
        if apply(kind, &x).is_ok() {
            return x;
        }
    }
}

fn close(a: &RotationMatrix, b: &RotationMatrix, tol: f64) -> bool {
    max_abs_diff(a.matrix(), b.matrix()) <= tol
}

#[test]
fn input_dims() {
    let dims: Vec<usize> = KINDS.iter().map(|k| k.input_dim()).collect();
    assert_eq!(dims, vec![3, 3, 4, 3, 6, 9, 10]);
}

#[test]
fn names_parse_back() {
    for k in KINDS {
        assert_eq!(k.to_string().parse::<MappingKind>().unwrap(), k);
    }
    assert!("nope".parse::<MappingKind>().is_err());
    assert!("rotvec-restricted:4.0".parse::<MappingKind>().is_err());
    assert!("procrustes:1".parse::<MappingKind>().is_err());
}

#[test]
fn apply_examples() {
    let mut rng = Rng::new(1);
    for _ in 0..100 {
        let r = random_rotation(&mut rng);
        let out = apply(MappingKind::Procrustes, &r.vec9()).unwrap();
        assert!(close(&out, &r, 1e-12));
    }
    let two_i = linalg::vec9(&diag([2.0, 2.0, 2.0]));
    assert!(close(&apply(MappingKind::Procrustes, &two_i).unwrap(), &RotationMatrix::IDENTITY, 1e-15));
    let m = linalg::vec9(&diag([3.0, 2.0, -1.0]));
    assert!(close(&apply(MappingKind::Procrustes, &m).unwrap(), &RotationMatrix::IDENTITY, 1e-14));

    let sixd = apply(MappingKind::SixD, &[2.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    assert!(close(&sixd, &RotationMatrix::IDENTITY, 1e-15));

    let q = apply(MappingKind::Quaternion, &[0.0, 0.0, 0.0, 2.0]).unwrap();
    assert_eq!(q, RotationMatrix::IDENTITY);

    let s = pack_sym4(&[
        1.0, 0.0, 0.0, 0.0, //
        0.0, 2.0, 0.0, 0.0, //
        0.0, 0.0, 2.0, 0.0, //
        0.0, 0.0, 0.0, 2.0,
    ]);
    let out = apply(MappingKind::SymMatrix10, &s).unwrap();
    assert!(max_abs_diff(out.matrix(), &diag([1.0, -1.0, -1.0])) < 1e-15);
}

#[test]
fn restricted_rotvec_range() {
    let kind = MappingKind::rotvec_restricted(PI / 2.0).unwrap();
    assert_eq!(apply(kind, &[0.0; 3]).unwrap(), RotationMatrix::IDENTITY);
    let mut rng = Rng::new(2);
    for _ in 0..2000 {
        // Beyond ‖x‖ ≈ 19, tanh saturates to 1.0 in f64 and the angle reaches α.
        let x: Vec<f64> = rng.normal_vec(3).iter().map(|v| v * 2.0).collect();
        let r = apply(kind, &x).unwrap();
        assert!(r.angle() < PI / 2.0);
    }
    assert!(MappingKind::rotvec_restricted(PI).is_err());
    assert!(MappingKind::rotvec_restricted(0.0).is_err());
}

#[test]
fn degenerate_inputs_are_refused() {
    let is_degenerate = |k: MappingKind, x: &[f64]| matches!(apply(k, x), Err(Error::DegenerateInput { .. }));
    assert!(is_degenerate(MappingKind::Quaternion, &[0.0; 4]));
    assert!(is_degenerate(MappingKind::Quaternion, &[1e-13, 0.0, 0.0, 0.0]));
    assert!(is_degenerate(MappingKind::SixD, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]));
    assert!(is_degenerate(MappingKind::SixD, &[1.0, 2.0, 3.0, 0.0, 0.0, 0.0]));
    // det ≤ 0 with d₂ = d₃
    assert!(is_degenerate(MappingKind::Procrustes, &linalg::vec9(&diag([1.0, 1.0, -1.0]))));
    assert!(is_degenerate(MappingKind::Procrustes, &[0.0; 9]));
    // repeated smallest eigenvalue
    assert!(is_degenerate(MappingKind::SymMatrix10, &pack_sym4(&[
        1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 3.0
    ])));
    assert!(matches!(apply(MappingKind::RotVec, &[1.0, 2.0]), Err(Error::ShapeMismatch { .. })));
    assert!(matches!(apply(MappingKind::RotVec, &[1.0, f64::NAN, 0.0]), Err(Error::NonFinite(_))));
}

#[test]
fn quaternion_radial_derivative_vanishes() {
    let e = jacobian(MappingKind::Quaternion, &[0.0, 0.0, 0.0, 1.0]).unwrap();
    assert!(e.jacobian.column(3).iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn procrustes_closed_form_at_identity_matches_fd() {
    let x = linalg::vec9(&IDENTITY3);
    let e = jacobian(MappingKind::Procrustes, &x).unwrap();
    let fd = jacobian_fd(MappingKind::Procrustes, &x, 1e-6).unwrap();
    for (a, b) in e.jacobian.data().iter().zip(fd.data()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn procrustes_closed_form_with_reflection_matches_fd() {
    // det(M) < 0 forces S = diag(1, 1, −1).
    let mut rng = Rng::new(17);
    let mut seen = 0;
    while seen < 200 {
        let x = rng.normal_vec(9);
        if linalg::det3(&linalg::unvec9(&x)) >= 0.0 {
            continue;
        }
        let Ok(e) = jacobian(MappingKind::Procrustes, &x) else { continue };
        let fd = jacobian_fd(MappingKind::Procrustes, &x, 1e-6).unwrap();
        let scale = 1.0 + e.jacobian.max_abs();
        for (a, b) in e.jacobian.data().iter().zip(fd.data()) {
            assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}");
        }
        seen += 1;
    }
}

#[test]
fn procrustes_near_singular_derivative() {
    // det < 0, d₂ − d₃ = 5e-8: admissible but the derivative denominator is tiny.
    let x = linalg::vec9(&diag([1.0, 1.0, -(1.0 - 5e-8)]));
    assert!(apply(MappingKind::Procrustes, &x).is_ok());
    assert!(matches!(
        jacobian(MappingKind::Procrustes, &x),
        Err(Error::NearSingularDerivative { .. })
    ));
    let fallback = jacobian_with_fallback(MappingKind::Procrustes, &x).unwrap();
    assert!(fallback.jacobian.is_finite());
}

#[test]
fn rotvec_jacobian_rank_deficient_at_two_pi() {
    let mut rng = Rng::new(5);
    for _ in 0..20 {
        let u = rng.unit_vector3();
        let x = u.map(|c| c * 2.0 * PI);
        let e = jacobian(MappingKind::RotVec, &x).unwrap();
        let r = linalg::numeric_rank(&e.jacobian, 1e-6).unwrap();
        assert!(r.sigma_d < 1e-6, "σ3 = {}", r.sigma_d);
        assert!(r.rank < 3);
    }
}

#[test]
fn gradient_correctness_all_kinds() {
    let mut rng = Rng::new(2024);
    for kind in KINDS {
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let x = random_input(kind, &mut rng);
            let e = jacobian(kind, &x).unwrap();
            let fd = jacobian_fd(kind, &x, 1e-5).unwrap();
            let err = e
                .jacobian
                .data()
                .iter()
                .zip(fd.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err / (1.0 + e.jacobian.max_abs()));
        }
        assert!(worst <= 1e-5, "{kind}: {worst:e}");
    }
}

#[test]
fn jacobian_columns_are_tangent() {
    let mut rng = Rng::new(33);
    for kind in KINDS {
        for _ in 0..50 {
            let x = random_input(kind, &mut rng);
            let e = jacobian(kind, &x).unwrap();
            let rt = linalg::transpose(e.value.matrix());
            for c in 0..kind.input_dim() {
                let d = linalg::unvec9(&e.jacobian.column(c));
                let w = linalg::matmul(&rt, &d);
                let sym = linalg::add(&w, &linalg::transpose(&w));
                assert!(sym.iter().flatten().all(|v| v.abs() < 1e-6), "{kind}");
            }
        }
    }
}

#[test]
fn surjectivity_round_trips() {
    let mut rng = Rng::new(8);
    assert_eq!(
        apply(MappingKind::RotVec, &canonical_preimage(MappingKind::RotVec, &RotationMatrix::IDENTITY).unwrap())
            .unwrap(),
        RotationMatrix::IDENTITY
    );
    for kind in KINDS {
        let x = canonical_preimage(kind, &RotationMatrix::IDENTITY).unwrap();
        assert!(close(&apply(kind, &x).unwrap(), &RotationMatrix::IDENTITY, 1e-12), "{kind}");
        for _ in 0..1000 {
            let r = random_rotation(&mut rng);
            match canonical_preimage(kind, &r) {
                Ok(x) => assert!(close(&apply(kind, &x).unwrap(), &r, 1e-8), "{kind}"),
                Err(Error::OutOfRange { angle, max_angle }) => {
                    assert!(matches!(kind, MappingKind::RotVecRestricted { .. }));
                    assert!(angle >= max_angle);
                }
                Err(e) => panic!("{kind}: {e}"),
            }
        }
    }
}

#[test]
fn symmatrix_canonical_preimage_has_unit_gap() {
    let mut rng = Rng::new(4);
    for _ in 0..50 {
        let r = random_rotation(&mut rng);
        let x = canonical_preimage(MappingKind::SymMatrix10, &r).unwrap();
        let e = linalg::sym_eig(&Mat::from_row_major(4, 4, unpack_sym4(&x).to_vec()).unwrap()).unwrap();
        assert!(e.values[0].abs() < 1e-12);
        assert!((e.values[1] - e.values[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn preimage_pairs_share_the_image() {
    let mut rng = Rng::new(10);
    for kind in [
        MappingKind::RotVec,
        MappingKind::Quaternion,
        MappingKind::SixD,
        MappingKind::Procrustes,
        MappingKind::SymMatrix10,
    ] {
        for _ in 0..200 {
            let r = random_rotation(&mut rng);
            let p = preimage_pair(kind, &r, &mut rng).unwrap();
            assert!(distance(&p.x1, &p.x2) > 1e-3);
            let a = apply(kind, &p.x1).unwrap();
            let b = apply(kind, &p.x2).unwrap();
            assert!(a.distance_frobenius(&b) <= 1e-9, "{kind}");
            assert!(close(&a, &r, 1e-9));
        }
    }
    let r = random_rotation(&mut rng);
    assert_eq!(
        preimage_pair(MappingKind::EulerXYZ, &r, &mut rng),
        Err(Error::Unsupported("euler-xyz"))
    );
    assert_eq!(
        preimage_pair(MappingKind::rotvec_restricted(1.0).unwrap(), &r, &mut rng),
        Err(Error::InjectiveMapping("rotvec-restricted"))
    );
}

#[test]
fn convex_combinations_of_pairs() {
    let mut rng = Rng::new(12);
    for kind in [MappingKind::Procrustes, MappingKind::SixD, MappingKind::SymMatrix10] {
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let p = preimage_pair(kind, &r, &mut rng).unwrap();
            for step in 1..10 {
                let t = step as f64 / 10.0;
                let x: Vec<f64> = p.x1.iter().zip(&p.x2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                assert!(close(&apply(kind, &x).unwrap(), &r, 1e-8), "{kind} t={t}");
            }
        }
    }
}

#[test]
fn quaternion_antipodal_midpoint_is_degenerate() {
    let mut rng = Rng::new(13);
    let r = random_rotation(&mut rng);
    let p = quaternion_antipodal_pair(&r);
    assert!(close(&apply(MappingKind::Quaternion, &p.x2).unwrap(), &r, 1e-12));
    let mid: Vec<f64> = p.x1.iter().zip(&p.x2).map(|(a, b)| 0.5 * (a + b)).collect();
    assert!(matches!(
        apply(MappingKind::Quaternion, &mid),
        Err(Error::DegenerateInput { .. })
    ));
}

#[test]
fn procrustes_scaling_and_equivariance() {
    let mut rng = Rng::new(14);
    for _ in 0..200 {
        let m = linalg::unvec9(&rng.normal_vec(9));
        let Ok(base) = apply(MappingKind::Procrustes, &linalg::vec9(&m)) else { continue };
        let alpha = rng.uniform(0.01, 100.0);
        let scaled = apply(MappingKind::Procrustes, &linalg::vec9(&linalg::scale(&m, alpha))).unwrap();
        assert!(close(&scaled, &base, 1e-10));

        let q = random_rotation(&mut rng);
        let left = apply(MappingKind::Procrustes, &linalg::vec9(&linalg::matmul(q.matrix(), &m))).unwrap();
        assert!(close(&left, &q.compose(&base), 1e-10));
        let right = apply(MappingKind::Procrustes, &linalg::vec9(&linalg::matmul(&m, q.matrix()))).unwrap();
        assert!(close(&right, &base.compose(&q), 1e-10));
    }
}

#[test]
fn sixd_left_equivariant_but_not_right() {
    let mut rng = Rng::new(15);
    let mut right_breaks = 0;
    for _ in 0..100 {
        let x = random_input(MappingKind::SixD, &mut rng);
        let base = apply(MappingKind::SixD, &x).unwrap();
        let q = random_rotation(&mut rng);
        let rotate = |v: &[f64]| q.apply(&[v[0], v[1], v[2]]);
        let (c1, c2) = (rotate(&x[0..3]), rotate(&x[3..6]));
        let left = apply(MappingKind::SixD, &[c1, c2].concat()).unwrap();
        assert!(close(&left, &q.compose(&base), 1e-10));

        // Right action mixes the columns of the 3×2 input.
        let m = [[x[0], x[3]], [x[1], x[4]], [x[2], x[5]]];
        let qm = q.matrix();
        let mq: Vec<[f64; 2]> = m
            .iter()
            .map(|row| [row[0] * qm[0][0] + row[1] * qm[1][0], row[0] * qm[0][1] + row[1] * qm[1][1]])
            .collect();
        let moved = [mq[0][0], mq[1][0], mq[2][0], mq[0][1], mq[1][1], mq[2][1]];
        if let Ok(r) = apply(MappingKind::SixD, &moved) {
            if !close(&r, &base.compose(&q), 1e-6) {
                right_breaks += 1;
            }
        }
    }
    assert!(right_breaks > 90);
}

#[test]
fn weighted_procrustes_examples() {
    let mut rng = Rng::new(16);
    let r = random_rotation(&mut rng);
    let eye = Mat::from_mat3(&IDENTITY3);
    let out = weighted_procrustes(&Mat::from_mat3(r.matrix()), &eye).unwrap();
    assert!(close(&out, &r, 1e-12));

    let x = random_input(MappingKind::SixD, &mut rng);
    let m = Mat::from_row_major(2, 3, x.clone()).unwrap().transpose();
    let near = weighted_procrustes(&m, &procrustes::diag_rect(1e-4)).unwrap();
    let sixd = apply(MappingKind::SixD, &x).unwrap();
    assert!(near.distance_frobenius(&sixd) < 1e-2);
}

#[test]
fn weighted_procrustes_beats_random_rotations() {
    let mut rng = Rng::new(18);
    let m = Mat::from_row_major(3, 4, rng.normal_vec(12)).unwrap();
    let lambda = Mat::from_row_major(3, 4, rng.normal_vec(12)).unwrap();
    let best = weighted_procrustes(&m, &lambda).unwrap();
    let best_val = procrustes::weighted_objective(&best, &m, &lambda);
    for _ in 0..100_000 {
        let r = random_rotation(&mut rng);
        assert!(procrustes::weighted_objective(&r, &m, &lambda) >= best_val - 1e-9);
    }
}

#[test]
fn euler_gimbal_lock_rank() {
    for beta in [PI / 2.0, -PI / 2.0] {
        let e = jacobian(MappingKind::EulerXYZ, &[0.3, beta, -0.7]).unwrap();
        assert!(linalg::numeric_rank(&e.jacobian, 1e-6).unwrap().rank < 3);
    }
    let e = jacobian(MappingKind::EulerXYZ, &[0.3, 0.2, -0.7]).unwrap();
    assert_eq!(linalg::numeric_rank(&e.jacobian, 1e-6).unwrap().rank, 3);
}

#[test]
fn restricted_preimage_out_of_range() {
    let kind = MappingKind::rotvec_restricted(1.0).unwrap();
    let r = so3::exp_map(&RotationVector([0.0, 1.5, 0.0])).unwrap();
    assert!(matches!(canonical_preimage(kind, &r), Err(Error::OutOfRange { .. })));
}

#[test]
fn symmatrix_perturbation_matches_dual_jacobi() {
    let mut rng = Rng::new(23);
    for _ in 0..50 {
        let x = random_input(MappingKind::SymMatrix10, &mut rng);
        let e = jacobian(MappingKind::SymMatrix10, &x).unwrap();
        let d = dual_jacobian::<10>(MappingKind::SymMatrix10, &x);
        let scale = 1.0 + e.jacobian.max_abs();
        assert!(mat_diff(&e.jacobian, &d) <= 1e-8 * scale);
    }
}

#[test]
fn symmatrix_jacobian_at_canonical_preimage_matches_fd() {
    let mut rng = Rng::new(29);
    for _ in 0..20 {
        let r = random_rotation(&mut rng);
        let x = canonical_preimage(MappingKind::SymMatrix10, &r).unwrap();
        let e = jacobian(MappingKind::SymMatrix10, &x).unwrap();
        let fd = jacobian_fd(MappingKind::SymMatrix10, &x, 1e-5).unwrap();
        assert!(e.jacobian.data().iter().all(|v| v.is_finite()));
        assert!(mat_diff(&e.jacobian, &fd) <= 1e-5 * (1.0 + e.jacobian.max_abs()));
    }
}

fn mat_diff(a: &Mat, b: &Mat) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
