//! Numerical property checks shared by the command line and the acceptance
//! tests. Each suite returns one [`CheckOutcome`] per named check.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Mat3};
use crate::losses::{self, LossSpec, PointSet};
use crate::mappings::{self, procrustes, MappingKind};
use crate::nn::{self, Activation, DenseNet, Head};
use crate::rng::Rng;
use crate::so3::{self, RotationMatrix, RotationVector};

/// Central finite-difference step of every gradient check.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance of component-level gradient checks.
pub const GRAD_TOL: f64 = 1e-5;
/// Relative tolerance of the end-to-end network gradient check.
pub const END_TO_END_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} {}", self.name, self.detail)
    }
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

/// Check suites, one per command-line subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Gradcheck,
    Rankcheck,
    Convexity,
    Identities,
    LimitGs,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Gradcheck, Suite::Rankcheck, Suite::Convexity, Suite::Identities, Suite::LimitGs];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Gradcheck => "gradcheck",
            Suite::Rankcheck => "rankcheck",
            Suite::Convexity => "convexity",
            Suite::Identities => "identities",
            Suite::LimitGs => "limit-gs",
        }
    }

    pub fn default_samples(&self) -> usize {
        match self {
            Suite::Gradcheck => 500,
            Suite::Rankcheck | Suite::Convexity => 1000,
            Suite::Identities => 10_000,
            Suite::LimitGs => 100,
        }
    }
}

/// Catalog entry: a check name pattern and the module it exercises.
#[derive(Clone, Copy, Debug)]
pub struct CheckInfo {
    pub suite: Suite,
    pub name: &'static str,
    pub anchor: &'static str,
    pub summary: &'static str,
}

pub const CATALOG: &[CheckInfo] = &[
    CheckInfo { suite: Suite::Gradcheck, name: "gradcheck/<mapping>", anchor: "mappings::jacobian", summary: "analytic 9×n Jacobian against central differences" },
    CheckInfo { suite: Suite::Gradcheck, name: "gradcheck/softmax", anchor: "mappings::softmax_jacobian", summary: "softmax Jacobian against central differences" },
    CheckInfo { suite: Suite::Gradcheck, name: "gradcheck/loss-frobenius", anchor: "losses::frobenius_loss", summary: "gradient with respect to R" },
    CheckInfo { suite: Suite::Gradcheck, name: "gradcheck/loss-quaternion", anchor: "losses::quaternion_min_loss", summary: "gradient with respect to q and to R" },
    CheckInfo { suite: Suite::Gradcheck, name: "gradcheck/loss-points", anchor: "losses::weighted_points_loss", summary: "gradient with respect to R" },
    CheckInfo { suite: Suite::Gradcheck, name: "gradcheck/net-<mapping>", anchor: "nn::rotation_sample_loss", summary: "network parameters through mapping and loss" },
    CheckInfo { suite: Suite::Rankcheck, name: "rankcheck/full/<mapping>", anchor: "linalg::numeric_rank", summary: "rank 3 Jacobian at random inputs" },
    CheckInfo { suite: Suite::Rankcheck, name: "rankcheck/deficient/rotvec", anchor: "mappings::jacobian", summary: "rank drop at ‖x‖ = 2π and 4π" },
    CheckInfo { suite: Suite::Rankcheck, name: "rankcheck/deficient/euler-xyz", anchor: "mappings::jacobian", summary: "gimbal lock at β = ±π/2" },
    CheckInfo { suite: Suite::Convexity, name: "surjective/<mapping>", anchor: "mappings::canonical_preimage", summary: "round trip of uniform rotations" },
    CheckInfo { suite: Suite::Convexity, name: "convex-preimage/<mapping>", anchor: "mappings::preimage_pair", summary: "convex combinations keep the image" },
    CheckInfo { suite: Suite::Convexity, name: "disconnected-preimage/<mapping>", anchor: "mappings::preimage_pair", summary: "witness pairs whose midpoint leaves the pre-image" },
    CheckInfo { suite: Suite::Identities, name: "identity/frobenius-angle", anchor: "losses::frobenius_loss", summary: "‖R₁ − R₂‖² = 8 sin²(α/2)" },
    CheckInfo { suite: Suite::Identities, name: "identity/quaternion-angle", anchor: "losses::quaternion_min_loss", summary: "min ‖q ± q*‖² = 4 sin²(α/4)" },
    CheckInfo { suite: Suite::Identities, name: "identity/small-angle-ratio", anchor: "losses::loss_weight_ratio", summary: "loss ratio within 2% of 8 below 0.1 rad" },
    CheckInfo { suite: Suite::Identities, name: "identity/points-closed-form", anchor: "losses::weighted_points_loss", summary: "closed form against the direct point sum" },
    CheckInfo { suite: Suite::LimitGs, name: "limit-gs", anchor: "mappings::weighted_procrustes", summary: "weighted Procrustes tends to Gram-Schmidt" },
];

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `‖analytic − fd‖_max / (1 + ‖analytic‖_max)`.
fn relative_error(analytic: &[f64], fd: &[f64]) -> f64 {
    max_abs_diff(analytic, fd) / (1.0 + max_abs(analytic))
}

/// Central differences of a scalar function.
fn fd_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let up = f(&xp);
            xp[i] = x[i] - h;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn grad_outcome(name: String, worst: f64, tol: f64, samples: usize) -> CheckOutcome {
    CheckOutcome::new(name, worst <= tol, format!("max_rel_err={worst:.3e} tol={tol:e} samples={samples}"))
}

/// Admissible input whose closed-form derivative is defined.
fn random_input(kind: MappingKind, rng: &mut Rng) -> Vec<f64> {
    loop {
        let x = rng.normal_vec(kind.input_dim());
        if mappings::jacobian(kind, &x).is_ok() {
            return x;
        }
    }
}

/// Analytic mapping Jacobians against central differences.
pub fn gradcheck_mappings(kinds: &[MappingKind], samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let root = Rng::new(seed);
    let mut out = Vec::new();
    for (i, &kind) in kinds.iter().enumerate() {
        let mut rng = root.split(i as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = random_input(kind, &mut rng);
            let e = mappings::jacobian(kind, &x)?;
            let fd = mappings::jacobian_fd(kind, &x, FD_STEP)?;
            worst = worst.max(relative_error(e.jacobian.data(), fd.data()));
        }
        out.push(grad_outcome(format!("gradcheck/{kind}"), worst, GRAD_TOL, samples));
    }
    Ok(out)
}

pub fn gradcheck_softmax(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed).split(100);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = rng.normal_vec(5).iter().map(|v| 2.0 * v).collect();
        let j = mappings::softmax_jacobian(&x)?;
        let mut fd = Mat::zeros(5, 5);
        for c in 0..5 {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[c] += FD_STEP;
            down[c] -= FD_STEP;
            let (pu, pd) = (mappings::softmax_map(&up)?, mappings::softmax_map(&down)?);
            for r in 0..5 {
                fd.set(r, c, (pu[r] - pd[r]) / (2.0 * FD_STEP));
            }
        }
        worst = worst.max(relative_error(j.data(), fd.data()));
    }
    Ok(grad_outcome("gradcheck/softmax".into(), worst, GRAD_TOL, samples))
}

fn random_matrix(rng: &mut Rng) -> Mat3 {
    std::array::from_fn(|_| std::array::from_fn(|_| rng.normal()))
}

fn matrix_gradcheck(r: &Mat3, analytic: &Mat3, f: impl Fn(&Mat3) -> f64) -> f64 {
    let fd = fd_gradient(&linalg::vec9(r), FD_STEP, |v| f(&linalg::unvec9(v)));
    relative_error(&linalg::vec9(analytic), &fd)
}

/// Sphere-like cloud of `n` points.
fn random_cloud(rng: &mut Rng, n: usize) -> Result<PointSet> {
    let points = (0..n)
        .map(|_| {
            let u = rng.unit_vector3();
            let s = rng.uniform(0.5, 1.5);
            [u[0] * s, u[1] * s * 0.6, u[2] * s * 0.3]
        })
        .collect();
    PointSet::new(points)
}

/// Loss gradients with respect to their rotation (or quaternion) argument.
pub fn gradcheck_losses(samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = Rng::new(seed).split(200);
    let mut worst = [0.0f64; 3];
    for _ in 0..samples {
        let r_star = *so3::random_rotation(&mut rng).matrix();
        let m = random_matrix(&mut rng);
        let (_, g) = losses::frobenius_loss(&m, &r_star);
        worst[0] = worst[0].max(matrix_gradcheck(&m, &g, |x| losses::frobenius_loss(x, &r_star).0));

        // Away from the tie between both branches and from half-turns,
        // where the loss has kinks.
        let (q, q_star) = loop {
            let (a, b) = (so3::random_quaternion(&mut rng), so3::random_quaternion(&mut rng));
            if a.dot(&b).abs() > 0.05 {
                break (a, b);
            }
        };
        let (_, gq) = losses::quaternion_min_loss(&q, &q_star);
        let qa = q.to_array();
        let fd = fd_gradient(&qa, FD_STEP, |v| {
            let d: f64 = (0..4).map(|i| (v[i] - q_star.to_array()[i]).powi(2)).sum();
            let s: f64 = (0..4).map(|i| (v[i] + q_star.to_array()[i]).powi(2)).sum();
            d.min(s)
        });
        let mut w = relative_error(&gq, &fd);
        let (ra, rb) = (so3::quat_to_matrix(&q), so3::quat_to_matrix(&q_star));
        let (_, gm) = losses::quaternion_matrix_loss(ra.matrix(), rb.matrix());
        w = w.max(matrix_gradcheck(ra.matrix(), &gm, |x| losses::quaternion_matrix_loss(x, rb.matrix()).0));
        worst[1] = worst[1].max(w);

        let cloud = random_cloud(&mut rng, 40)?;
        let (_, gp) = losses::weighted_points_loss(&m, &r_star, &cloud);
        worst[2] = worst[2].max(matrix_gradcheck(&m, &gp, |x| losses::weighted_points_loss(x, &r_star, &cloud).0));
    }
    Ok(vec![
        grad_outcome("gradcheck/loss-frobenius".into(), worst[0], GRAD_TOL, samples),
        grad_outcome("gradcheck/loss-quaternion".into(), worst[1], GRAD_TOL, samples),
        grad_outcome("gradcheck/loss-points".into(), worst[2], GRAD_TOL, samples),
    ])
}

/// Frobenius loss of a `9 → 16 → n` network through each mapping, against
/// central differences over every parameter.
pub fn gradcheck_end_to_end(kinds: &[MappingKind], samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let root = Rng::new(seed).split(300);
    let loss = LossSpec::frobenius();
    let mut out = Vec::new();
    for (i, &kind) in kinds.iter().enumerate() {
        let mut rng = root.split(i as u64);
        let head = Head::Mapping(kind);
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < samples {
            let mut net = DenseNet::mlp(&[9, 16, kind.input_dim()], Activation::Tanh, &mut rng)?;
            let input = rng.normal_vec(9);
            let target = *so3::random_rotation(&mut rng).matrix();
            let (y, cache) = net.forward(&input)?;
            if mappings::jacobian(kind, &y).is_err() {
                continue;
            }
            let Some((_, g_out)) = nn::rotation_sample_loss(head, &loss, &y, &target)? else {
                continue;
            };
            let (analytic, _) = net.backward(&cache, &g_out)?;
            let theta = net.params().to_vec();
            let mut failed = None;
            let fd = fd_gradient(&theta, FD_STEP, |p| {
                net.params_mut().copy_from_slice(p);
                let (y, _) = net.forward(&input).expect("fixed shapes");
                match mappings::apply(kind, &y) {
                    Ok(r) => loss.eval(r.matrix(), &target).0,
                    Err(e) => {
                        failed = Some(e);
                        f64::NAN
                    }
                }
            });
            if failed.is_some() {
                continue;
            }
            worst = worst.max(relative_error(&analytic, &fd));
            done += 1;
        }
        out.push(grad_outcome(format!("gradcheck/net-{kind}"), worst, END_TO_END_TOL, samples));
    }
    Ok(out)
}

/// Every gradient check: mappings, softmax, losses and end-to-end.
pub fn gradcheck(kinds: &[MappingKind], samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = gradcheck_mappings(kinds, samples, seed)?;
    out.push(gradcheck_softmax(samples, seed)?);
    out.extend(gradcheck_losses(samples, seed)?);
    out.extend(gradcheck_end_to_end(kinds, samples, seed)?);
    Ok(out)
}

/// Mappings whose Jacobian has rank 3 everywhere on their domain.
pub const FULL_RANK_KINDS: [MappingKind; 5] = [
    MappingKind::Quaternion,
    MappingKind::SixD,
    MappingKind::Procrustes,
    MappingKind::SymMatrix10,
    MappingKind::ALL[1],
];

/// Threshold on `σ₃` and on the relative rank tolerance.
pub const RANK_TOL: f64 = 1e-6;

/// Full rank at random inputs for the mappings that have it; rank
/// deficiency at the known singular sets of the rotation vector and Euler
/// angles.
pub fn rankcheck(samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let root = Rng::new(seed);
    let mut out = Vec::new();
    for (i, &kind) in FULL_RANK_KINDS.iter().enumerate() {
        let mut rng = root.split(i as u64);
        let mut min_sigma = f64::INFINITY;
        let mut deficient = 0;
        for _ in 0..samples {
            let x = random_input(kind, &mut rng);
            let r = linalg::numeric_rank(&mappings::jacobian(kind, &x)?.jacobian, RANK_TOL)?;
            min_sigma = min_sigma.min(r.sigma_d);
            if r.rank != 3 || r.sigma_d <= RANK_TOL {
                deficient += 1;
            }
        }
        out.push(CheckOutcome::new(
            format!("rankcheck/full/{kind}"),
            deficient == 0,
            format!("min_sigma3={min_sigma:.3e} deficient={deficient}/{samples}"),
        ));
    }

    let mut rng = root.split(10);
    let mut max_sigma: f64 = 0.0;
    let mut full = 0;
    let probes = samples.min(200);
    for p in 0..probes {
        let k = (1 + p % 2) as f64;
        let x = rng.unit_vector3().map(|c| c * 2.0 * PI * k);
        let r = linalg::numeric_rank(&mappings::jacobian(MappingKind::RotVec, &x)?.jacobian, RANK_TOL)?;
        max_sigma = max_sigma.max(r.sigma_d);
        if r.rank >= 3 {
            full += 1;
        }
    }
    out.push(CheckOutcome::new(
        "rankcheck/deficient/rotvec",
        full == 0 && max_sigma < RANK_TOL,
        format!("max_sigma3={max_sigma:.3e} full_rank={full}/{probes}"),
    ));

    let mut max_sigma: f64 = 0.0;
    let mut full = 0;
    for p in 0..probes {
        let beta = if p % 2 == 0 { PI / 2.0 } else { -PI / 2.0 };
        let x = [rng.uniform(-PI, PI), beta, rng.uniform(-PI, PI)];
        let r = linalg::numeric_rank(&mappings::jacobian(MappingKind::EulerXYZ, &x)?.jacobian, RANK_TOL)?;
        max_sigma = max_sigma.max(r.sigma_d);
        if r.rank >= 3 {
            full += 1;
        }
    }
    out.push(CheckOutcome::new(
        "rankcheck/deficient/euler-xyz",
        full == 0 && max_sigma < RANK_TOL,
        format!("max_sigma3={max_sigma:.3e} full_rank={full}/{probes}"),
    ));
    Ok(out)
}

/// Round-trip tolerance of surjectivity and convexity checks.
pub const PREIMAGE_TOL: f64 = 1e-8;

fn rot_dist(a: &RotationMatrix, b: &RotationMatrix) -> f64 {
    linalg::max_abs_diff(a.matrix(), b.matrix())
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
}

/// Surjectivity and pre-image structure: convex pre-images for Procrustes,
/// 6D and the symmetric-matrix mapping; witnesses of disconnected pre-images
/// for the quaternion, rotation-vector and Euler mappings.
pub fn convexity(samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let root = Rng::new(seed);
    let mut out = Vec::new();

    for (i, &kind) in MappingKind::ALL.iter().enumerate() {
        let mut rng = root.split(i as u64);
        let mut worst: f64 = 0.0;
        let mut bad = 0;
        for _ in 0..samples {
            let r = so3::random_rotation(&mut rng);
            match mappings::canonical_preimage(kind, &r) {
                Ok(x) => worst = worst.max(rot_dist(&mappings::apply(kind, &x)?, &r)),
                Err(Error::OutOfRange { angle, max_angle }) if angle >= max_angle => {}
                Err(_) => bad += 1,
            }
        }
        // The restricted mapping must never leave its ball.
        if let MappingKind::RotVecRestricted { max_angle } = kind {
            for _ in 0..samples {
                let x: Vec<f64> = rng.normal_vec(3).iter().map(|v| 3.0 * v).collect();
                if mappings::apply(kind, &x)?.angle() >= max_angle {
                    bad += 1;
                }
            }
        }
        out.push(CheckOutcome::new(
            format!("surjective/{kind}"),
            bad == 0 && worst <= PREIMAGE_TOL,
            format!("max_err={worst:.3e} failures={bad} samples={samples}"),
        ));
    }

    let probes = samples.min(200);
    for (i, kind) in [MappingKind::Procrustes, MappingKind::SixD, MappingKind::SymMatrix10].into_iter().enumerate() {
        let mut rng = root.split(20 + i as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let r = so3::random_rotation(&mut rng);
            let p = mappings::preimage_pair(kind, &r, &mut rng)?;
            for step in 1..10 {
                let x = lerp(&p.x1, &p.x2, step as f64 / 10.0);
                worst = worst.max(rot_dist(&mappings::apply(kind, &x)?, &r));
            }
        }
        out.push(CheckOutcome::new(
            format!("convex-preimage/{kind}"),
            worst <= PREIMAGE_TOL,
            format!("max_err={worst:.3e} pairs={probes}"),
        ));
    }

    let mut rng = root.split(30);
    let mut raised = 0;
    for _ in 0..probes {
        let p = mappings::quaternion_antipodal_pair(&so3::random_rotation(&mut rng));
        if matches!(mappings::apply(MappingKind::Quaternion, &lerp(&p.x1, &p.x2, 0.5)), Err(Error::DegenerateInput { .. })) {
            raised += 1;
        }
    }
    out.push(CheckOutcome::new(
        "disconnected-preimage/quaternion",
        raised == probes,
        format!("degenerate_midpoints={raised}/{probes}"),
    ));

    // Rotation vector: v and (1 + 2π/‖v‖)v.
    let mut shared: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..probes {
        let r = so3::random_rotation(&mut rng);
        let p = mappings::preimage_pair(MappingKind::RotVec, &r, &mut rng)?;
        let (a, b) = (mappings::apply(MappingKind::RotVec, &p.x1)?, mappings::apply(MappingKind::RotVec, &p.x2)?);
        shared = shared.max(rot_dist(&a, &r)).max(rot_dist(&b, &r));
        min_gap = min_gap.min(rot_dist(&mappings::apply(MappingKind::RotVec, &lerp(&p.x1, &p.x2, 0.5))?, &r));
    }
    out.push(CheckOutcome::new(
        "disconnected-preimage/rotvec",
        shared <= PREIMAGE_TOL && min_gap > 1e-3,
        format!("pair_err={shared:.3e} min_midpoint_gap={min_gap:.3e} pairs={probes}"),
    ));

    // Euler angles: (α, β, γ) and (α + π, π − β, γ + π).
    let mut shared: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..probes {
        let x1 = [rng.uniform(-PI, PI), rng.uniform(-1.4, 1.4), rng.uniform(-PI, PI)];
        let x2 = [x1[0] + PI, PI - x1[1], x1[2] + PI];
        let (a, b) = (mappings::apply(MappingKind::EulerXYZ, &x1)?, mappings::apply(MappingKind::EulerXYZ, &x2)?);
        shared = shared.max(rot_dist(&a, &b));
        min_gap = min_gap.min(rot_dist(&mappings::apply(MappingKind::EulerXYZ, &lerp(&x1, &x2, 0.5))?, &a));
    }
    out.push(CheckOutcome::new(
        "disconnected-preimage/euler-xyz",
        shared <= PREIMAGE_TOL && min_gap > 1e-3,
        format!("pair_err={shared:.3e} min_midpoint_gap={min_gap:.3e} pairs={probes}"),
    ));
    Ok(out)
}

/// Tolerance of the closed-form loss identities.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Pair of rotations at a prescribed geodesic angle.
fn pair_at_angle(rng: &mut Rng, angle: f64) -> Result<(RotationMatrix, RotationMatrix)> {
    let a = so3::random_rotation(rng);
    let d = so3::exp_map(&RotationVector(rng.unit_vector3().map(|c| c * angle)))?;
    Ok((a, a.compose(&d)))
}

/// Loss-angle identities, the small-angle weighting ratio and the closed
/// form of the point loss.
pub fn identities(samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = Rng::new(seed).split(400);
    let (mut wf, mut wq): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let angle = rng.uniform(0.0, PI);
        let (a, b) = pair_at_angle(&mut rng, angle)?;
        let f = losses::frobenius_loss(a.matrix(), b.matrix()).0;
        wf = wf.max((f - 8.0 * (angle / 2.0).sin().powi(2)).abs());
        let q = losses::quaternion_min_loss(&so3::matrix_to_quat(&a), &so3::matrix_to_quat(&b)).0;
        wq = wq.max((q - 4.0 * (angle / 4.0).sin().powi(2)).abs());
    }
    let mut out = vec![
        CheckOutcome::new("identity/frobenius-angle", wf <= IDENTITY_TOL, format!("max_err={wf:.3e} pairs={samples}")),
        CheckOutcome::new("identity/quaternion-angle", wq <= IDENTITY_TOL, format!("max_err={wq:.3e} pairs={samples}")),
    ];

    let ratio_pairs = samples.min(1000);
    let mut worst: f64 = 0.0;
    for _ in 0..ratio_pairs {
        let angle = rng.uniform(1e-4, 0.1);
        let (a, b) = pair_at_angle(&mut rng, angle)?;
        let f = losses::frobenius_loss(a.matrix(), b.matrix()).0;
        let q = losses::quaternion_min_loss(&so3::matrix_to_quat(&a), &so3::matrix_to_quat(&b)).0;
        worst = worst.max((f * losses::loss_weight_ratio() / q - 1.0).abs());
    }
    out.push(CheckOutcome::new(
        "identity/small-angle-ratio",
        worst <= 0.02 && losses::loss_weight_ratio() == 0.125,
        format!("max_rel_dev={worst:.3e} pairs={ratio_pairs}"),
    ));

    let sets = (samples / 100).max(10);
    let mut worst: f64 = 0.0;
    for _ in 0..sets {
        let cloud = random_cloud(&mut rng, 100)?;
        for _ in 0..10 {
            let (r, r_star) = (so3::random_rotation(&mut rng), so3::random_rotation(&mut rng));
            let closed = losses::weighted_points_loss(r.matrix(), r_star.matrix(), &cloud).0;
            let direct = losses::direct_points_loss(r.matrix(), r_star.matrix(), &cloud);
            worst = worst.max((closed - direct).abs());
        }
    }
    out.push(CheckOutcome::new(
        "identity/points-closed-form",
        worst <= IDENTITY_TOL,
        format!("max_err={worst:.3e} clouds={sets}"),
    ));
    Ok(out)
}

/// Second weights of the Gram-Schmidt limit check.
pub const LIMIT_LAMBDAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Distance of weighted Procrustes to 6D as the second column weight
/// vanishes: monotone decrease and a final error below `1e-2`.
pub fn limit_gs(samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = Rng::new(seed).split(500);
    let mut non_monotone = 0;
    let mut worst_last: f64 = 0.0;
    let mut mean = [0.0; 4];
    let mut done = 0;
    while done < samples {
        let x = rng.normal_vec(6);
        let Ok(sixd) = mappings::apply(MappingKind::SixD, &x) else {
            continue;
        };
        let m = Mat::from_row_major(2, 3, x)?.transpose();
        let mut errs = [0.0; 4];
        let mut ok = true;
        for (e, &l) in errs.iter_mut().zip(&LIMIT_LAMBDAS) {
            match mappings::weighted_procrustes(&m, &procrustes::diag_rect(l)) {
                Ok(r) => *e = r.distance_frobenius(&sixd),
                Err(Error::DegenerateInput { .. }) => ok = false,
                Err(err) => return Err(err),
            }
        }
        if !ok {
            continue;
        }
        if errs.windows(2).any(|w| w[1] >= w[0]) {
            non_monotone += 1;
        }
        worst_last = worst_last.max(errs[3]);
        for (s, e) in mean.iter_mut().zip(errs) {
            *s += e / samples as f64;
        }
        done += 1;
    }
    Ok(vec![CheckOutcome::new(
        "limit-gs",
        non_monotone == 0 && worst_last < 1e-2,
        format!(
            "mean_err=[{:.2e}, {:.2e}, {:.2e}, {:.2e}] max_err_at_1e-4={worst_last:.3e} non_monotone={non_monotone}/{samples}",
            mean[0], mean[1], mean[2], mean[3]
        ),
    )])
}

/// Runs one suite with default mapping selection.
pub fn run_suite(suite: Suite, samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    match suite {
        Suite::Gradcheck => gradcheck(&MappingKind::ALL, samples, seed),
        Suite::Rankcheck => rankcheck(samples, seed),
        Suite::Convexity => convexity(samples, seed),
        Suite::Identities => identities(samples, seed),
        Suite::LimitGs => limit_gs(samples, seed),
    }
}
