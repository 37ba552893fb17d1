//! Inverse kinematics as an auto-encoder on a synthetic kinematic chain.
//!
//! Joint `i` carries a bone offset `bᵢ` and a marker offset `mᵢ` not
//! collinear with it. With `G₀ = I`, `p₀ = 0`:
//!
//! ```text
//! Gᵢ = Gᵢ₋₁ Rᵢ      pᵢ = pᵢ₋₁ + Gᵢ bᵢ      qᵢ = pᵢ₋₁ + Gᵢ mᵢ
//! ```
//!
//! The keypoints `(pᵢ, qᵢ)` are fed to a network whose outputs are mapped to
//! the joint rotations; forward kinematics of those rotations must reproduce
//! the keypoints under the loss `Σ αᵢ (‖pᵢ − p*ᵢ‖² + ‖qᵢ − q*ᵢ‖²)`. The marker
//! makes the twist of each joint observable.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;
use crate::linalg::{self, Mat3, Vec3, IDENTITY3};
use crate::mappings::{self, MappingKind};
use crate::nn::{self, Activation, DenseNet, OptimState, Optimizer};
use crate::rng::Rng;
use crate::so3::{self, RotationMatrix, RotationVector};

pub const EXPERIMENT: &str = "ik";

#[derive(Clone, Debug, PartialEq)]
pub struct IKConfig {
    pub mapping: MappingKind,
    pub bones: Vec<Vec3>,
    pub markers: Vec<Vec3>,
    /// Per-joint loss weights `αᵢ`.
    pub weights: Vec<f64>,
    pub hidden: Vec<usize>,
    /// Training poses come from this many trajectories of `frames` frames.
    pub trajectories: usize,
    pub frames: usize,
    /// Largest rotation angle of every joint but the root.
    pub joint_limit: f64,
    pub iterations: usize,
    pub batch: usize,
    pub lr: f64,
    pub eval_every: usize,
    pub test_size: usize,
    pub seed: u64,
    pub label: Option<String>,
}

/// `1/(3n)` for every joint.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / (3.0 * n as f64); n]
}

/// Uniform weights with `10/9` added on the flagged joints.
pub fn cmu_hips_weights(n: usize, flagged: &[usize]) -> Vec<f64> {
    let mut w = uniform_weights(n);
    for &j in flagged {
        if j < n {
            w[j] += 10.0 / 9.0;
        }
    }
    w
}

/// Named weight presets: `uniform` or `cmu-hips` (root joint flagged).
pub fn weight_preset(name: &str, n: usize) -> Result<Vec<f64>> {
    match name {
        "uniform" => Ok(uniform_weights(n)),
        "cmu-hips" => Ok(cmu_hips_weights(n, &[0])),
        _ => Err(Error::InvalidConfig(format!("unknown weight preset '{name}' (uniform, cmu-hips)"))),
    }
}

/// Chain of `n` joints with bones of decreasing length along `+y` and
/// markers half-way along, offset sideways.
pub fn default_chain(n: usize) -> (Vec<Vec3>, Vec<Vec3>) {
    let lengths: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + 0.25 * i as f64)).collect();
    let bones = lengths.iter().map(|&l| [0.0, l, 0.0]).collect();
    let markers = lengths.iter().map(|&l| [0.4 * l, 0.5 * l, 0.0]).collect();
    (bones, markers)
}

impl IKConfig {
    pub fn with_joints(n: usize) -> Self {
        let (bones, markers) = default_chain(n);
        Self {
            mapping: MappingKind::Procrustes,
            bones,
            markers,
            weights: uniform_weights(n),
            hidden: vec![128],
            trajectories: 64,
            frames: 200,
            joint_limit: PI / 2.0,
            iterations: 5000,
            batch: 10,
            lr: 1e-3,
            eval_every: 500,
            test_size: 512,
            seed: 0,
            label: None,
        }
    }

    pub fn joints(&self) -> usize {
        self.bones.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.joints();
        if n == 0 {
            return Err(Error::InvalidConfig("chain needs at least one joint".into()));
        }
        if self.markers.len() != n || self.weights.len() != n {
            return Err(Error::InvalidConfig(format!(
                "chain of {n} joints needs {n} markers and weights, got {} and {}",
                self.markers.len(),
                self.weights.len()
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidConfig("joint weights must be nonnegative with a finite positive sum".into()));
        }
        for (b, m) in self.bones.iter().zip(&self.markers) {
            if linalg::norm3(&linalg::cross(b, m)) < 1e-6 {
                return Err(Error::InvalidConfig("each marker must not be collinear with its bone".into()));
            }
        }
        if self.batch == 0 || self.test_size == 0 || self.trajectories == 0 || self.frames == 0 || self.eval_every == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("sizes must be positive".into()));
        }
        if !(self.joint_limit > 0.0 && self.joint_limit < PI) {
            return Err(Error::InvalidConfig(format!("joint limit must lie in (0, π), got {}", self.joint_limit)));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.lr)));
        }
        Ok(())
    }

    fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.mapping.to_string())
    }
}

impl Default for IKConfig {
    fn default() -> Self {
        Self::with_joints(3)
    }
}

/// Keypoints and global frames of a pose.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub joints: Vec<Vec3>,
    pub markers: Vec<Vec3>,
    pub frames: Vec<Mat3>,
}

pub fn forward_kinematics(bones: &[Vec3], markers: &[Vec3], rotations: &[Mat3]) -> Pose {
    let mut g = IDENTITY3;
    let mut p = [0.0; 3];
    let mut pose = Pose {
        joints: Vec::with_capacity(bones.len()),
        markers: Vec::with_capacity(bones.len()),
        frames: Vec::with_capacity(bones.len()),
    };
    for ((b, m), r) in bones.iter().zip(markers).zip(rotations) {
        g = linalg::matmul(&g, r);
        let gm = linalg::mat_vec(&g, m);
        pose.markers.push([p[0] + gm[0], p[1] + gm[1], p[2] + gm[2]]);
        let gb = linalg::mat_vec(&g, b);
        p = [p[0] + gb[0], p[1] + gb[1], p[2] + gb[2]];
        pose.joints.push(p);
        pose.frames.push(g);
    }
    pose
}

fn diff(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Weighted keypoint loss and its gradient with respect to each joint
/// rotation (treated as an unconstrained 3×3 matrix).
pub fn chain_loss(bones: &[Vec3], markers: &[Vec3], weights: &[f64], rotations: &[Mat3], target: &Pose) -> (f64, Vec<Mat3>) {
    let n = bones.len();
    let pose = forward_kinematics(bones, markers, rotations);
    let ej: Vec<Vec3> = pose.joints.iter().zip(&target.joints).map(|(a, b)| diff(a, b)).collect();
    let em: Vec<Vec3> = pose.markers.iter().zip(&target.markers).map(|(a, b)| diff(a, b)).collect();
    let loss = (0..n).map(|i| weights[i] * (linalg::dot(&ej[i], &ej[i]) + linalg::dot(&em[i], &em[i]))).sum();

    // dL/dpᵢ and dL/dqᵢ, then accumulated into the positions they depend on:
    // pₖ feeds every pᵢ (i ≥ k) and every qᵢ (i > k).
    let dp: Vec<Vec3> = (0..n).map(|i| ej[i].map(|v| 2.0 * weights[i] * v)).collect();
    let dq: Vec<Vec3> = (0..n).map(|i| em[i].map(|v| 2.0 * weights[i] * v)).collect();
    let mut acc = vec![[0.0; 3]; n];
    let mut run = [0.0; 3];
    for k in (0..n).rev() {
        if k + 1 < n {
            for c in 0..3 {
                run[c] += dq[k + 1][c];
            }
        }
        for c in 0..3 {
            run[c] += dp[k][c];
        }
        acc[k] = run;
    }
    // Direct gradient on each global frame Gₖ.
    let direct: Vec<Mat3> = (0..n)
        .map(|k| linalg::add(&linalg::outer(&acc[k], &bones[k]), &linalg::outer(&dq[k], &markers[k])))
        .collect();
    // Gₖ = Gₖ₋₁ Rₖ: back through the chain.
    let mut grads = vec![[[0.0; 3]; 3]; n];
    let mut upstream = [[0.0; 3]; 3];
    for k in (0..n).rev() {
        let total = linalg::add(&direct[k], &upstream);
        let parent = if k == 0 { IDENTITY3 } else { pose.frames[k - 1] };
        grads[k] = linalg::matmul(&linalg::transpose(&parent), &total);
        upstream = linalg::matmul(&total, &linalg::transpose(&rotations[k]));
    }
    (loss, grads)
}

fn pose_features(pose: &Pose) -> Vec<f64> {
    pose.joints.iter().chain(&pose.markers).flatten().copied().collect()
}

/// Smooth random joint motion. The root turns freely over SO(3); every
/// other joint follows a stationary Ornstein-Uhlenbeck walk in `R³` squashed
/// into the ball of rotations of angle below `cfg.joint_limit`.
struct Trajectory {
    root: RotationMatrix,
    velocity: Vec3,
    limbs: Vec<Vec3>,
    limit: MappingKind,
}

impl Trajectory {
    const DT: f64 = 0.05;
    const JITTER: f64 = 0.3;
    const LIMB_RHO: f64 = 0.99;
    const LIMB_SCALE: f64 = 0.75;

    fn new(cfg: &IKConfig, rng: &mut Rng) -> Self {
        let normal3 = |rng: &mut Rng| [rng.normal(), rng.normal(), rng.normal()];
        Self {
            root: so3::random_rotation(rng),
            velocity: normal3(rng),
            limbs: (1..cfg.joints()).map(|_| normal3(rng).map(|c| c * Self::LIMB_SCALE)).collect(),
            limit: MappingKind::RotVecRestricted { max_angle: cfg.joint_limit },
        }
    }

    fn advance(&mut self, rng: &mut Rng) {
        for c in self.velocity.iter_mut() {
            *c = 0.95 * *c + Self::JITTER * rng.normal();
        }
        let step = so3::exp_map(&RotationVector(self.velocity.map(|c| c * Self::DT))).expect("finite velocity");
        let next = self.root.compose(&step);
        // Re-project to keep rounding from accumulating over long runs.
        self.root = mappings::apply(MappingKind::Procrustes, &next.vec9()).unwrap_or(next);
        let kick = (1.0 - Self::LIMB_RHO * Self::LIMB_RHO).sqrt() * Self::LIMB_SCALE;
        for z in self.limbs.iter_mut() {
            for c in z.iter_mut() {
                *c = Self::LIMB_RHO * *c + kick * rng.normal();
            }
        }
    }

    fn rotations(&self) -> Vec<Mat3> {
        let mut out = vec![*self.root.matrix()];
        for z in &self.limbs {
            out.push(*mappings::apply(self.limit, z).expect("finite walk").matrix());
        }
        out
    }
}

/// Poses of `cfg.trajectories` random trajectories of `cfg.frames` frames.
fn training_pool(cfg: &IKConfig, rng: &mut Rng) -> Vec<Pose> {
    let mut pool = Vec::with_capacity(cfg.trajectories * cfg.frames);
    for _ in 0..cfg.trajectories {
        let mut t = Trajectory::new(cfg, rng);
        for _ in 0..cfg.frames {
            t.advance(rng);
            pool.push(forward_kinematics(&cfg.bones, &cfg.markers, &t.rotations()));
        }
    }
    pool
}

/// Per-joint position errors `(‖pᵢ − p*ᵢ‖ + ‖qᵢ − q*ᵢ‖)/2`.
fn joint_errors(a: &Pose, b: &Pose) -> Vec<f64> {
    (0..a.joints.len())
        .map(|i| 0.5 * (linalg::norm3(&diff(&a.joints[i], &b.joints[i])) + linalg::norm3(&diff(&a.markers[i], &b.markers[i]))))
        .collect()
}

fn predict(cfg: &IKConfig, out: &[f64]) -> Result<Vec<Mat3>> {
    let d = cfg.mapping.input_dim();
    out.chunks(d).map(|c| mappings::apply(cfg.mapping, c).map(|r| *r.matrix())).collect()
}

/// Mean per-joint test errors. A degenerate prediction counts as twice the
/// chain reach on every joint.
fn test_errors(cfg: &IKConfig, net: &DenseNet, poses: &[Pose]) -> Result<(Vec<f64>, usize)> {
    let n = cfg.joints();
    let reach: f64 = cfg.bones.iter().map(linalg::norm3).sum::<f64>() * 2.0;
    let mut sums = vec![0.0; n];
    let mut degenerate = 0;
    for target in poses {
        let (out, _) = net.forward(&pose_features(target))?;
        match predict(cfg, &out) {
            Ok(rots) => {
                let pose = forward_kinematics(&cfg.bones, &cfg.markers, &rots);
                for (s, e) in sums.iter_mut().zip(joint_errors(&pose, target)) {
                    *s += e;
                }
            }
            Err(Error::DegenerateInput { .. }) => {
                degenerate += 1;
                sums.iter_mut().for_each(|s| *s += reach);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((sums.into_iter().map(|s| s / poses.len() as f64).collect(), degenerate))
}

/// Loss of one sample and its gradient with respect to the network output.
fn sample_loss(cfg: &IKConfig, out: &[f64], target: &Pose) -> Result<Option<(f64, Vec<f64>)>> {
    let d = cfg.mapping.input_dim();
    let mut evals = Vec::with_capacity(cfg.joints());
    for chunk in out.chunks(d) {
        match mappings::jacobian_with_fallback(cfg.mapping, chunk) {
            Ok(e) => evals.push(e),
            Err(Error::DegenerateInput { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let rots: Vec<Mat3> = evals.iter().map(|e| *e.value.matrix()).collect();
    let (loss, grads) = chain_loss(&cfg.bones, &cfg.markers, &cfg.weights, &rots, target);
    let mut g_out = Vec::with_capacity(out.len());
    for (e, g) in evals.iter().zip(&grads) {
        g_out.extend(e.jacobian.transpose_mul_vec(&linalg::vec9(g)));
    }
    Ok(Some((loss, g_out)))
}

/// Trains the auto-encoder and reports the mean per-joint test error every
/// `eval_every` steps, with per-joint errors at the end.
pub fn run_ik(cfg: &IKConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.joints();
    let label = cfg.label();
    let root = Rng::new(cfg.seed);
    let mut train_rng = root.split(0);
    let mut test_rng = root.split(1);
    let mut init_rng = root.split(2);

    // Fresh trajectories start from the stationary distribution.
    let test_poses: Vec<Pose> = (0..cfg.test_size)
        .map(|_| forward_kinematics(&cfg.bones, &cfg.markers, &Trajectory::new(cfg, &mut test_rng).rotations()))
        .collect();

    let mut sizes = vec![6 * n];
    sizes.extend(&cfg.hidden);
    sizes.push(n * cfg.mapping.input_dim());
    let mut net = DenseNet::mlp(&sizes, Activation::Tanh, &mut init_rng)?;
    let mut optim = OptimState::new(Optimizer::adam(cfg.lr), net.num_params());
    let pool = training_pool(cfg, &mut train_rng);

    let mut report = ExperimentReport::new();
    let evaluate = |report: &mut ExperimentReport, net: &DenseNet, step: usize, per_joint: bool| -> Result<()> {
        let (errs, degenerate) = test_errors(cfg, net, &test_poses)?;
        let key = step.to_string();
        report.push(EXPERIMENT, &label, cfg.seed, key.clone(), "mean_joint_error", errs.iter().sum::<f64>() / n as f64)?;
        if per_joint {
            for (j, e) in errs.iter().enumerate() {
                report.push(EXPERIMENT, &label, cfg.seed, key.clone(), &format!("joint_error_{j}"), *e)?;
            }
        }
        if degenerate > 0 {
            report.push(EXPERIMENT, &label, cfg.seed, key, "test_degenerate", degenerate as f64)?;
        }
        Ok(())
    };
    evaluate(&mut report, &net, 0, false)?;

    let mut window = (0.0, 0usize);
    let mut skipped = 0;
    for step in 1..=cfg.iterations {
        let targets: Vec<&Pose> = (0..cfg.batch).map(|_| &pool[train_rng.below(pool.len())]).collect();
        let inputs: Vec<Vec<f64>> = targets.iter().map(|p| pose_features(p)).collect();
        match nn::train_step_with(&mut net, &mut optim, &inputs, |i, out| sample_loss(cfg, out, targets[i])) {
            Ok(stats) => {
                skipped += stats.skipped;
                if stats.loss.is_finite() {
                    window.0 += stats.loss;
                    window.1 += 1;
                }
            }
            Err(Error::NonFiniteParameters { step: s }) => {
                report.push(EXPERIMENT, &label, cfg.seed, step.to_string(), "aborted_at_step", s as f64)?;
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
        if step % cfg.eval_every == 0 || step == cfg.iterations {
            evaluate(&mut report, &net, step, step == cfg.iterations)?;
            if window.1 > 0 {
                report.push(EXPERIMENT, &label, cfg.seed, step.to_string(), "train_loss", window.0 / window.1 as f64)?;
            }
            window = (0.0, 0);
        }
    }
    report.push(EXPERIMENT, &label, cfg.seed, cfg.iterations.to_string(), "skipped", skipped as f64)?;
    Ok(report)
}

/// Final mean per-joint error of `label` for `seed` in `report`.
pub fn final_error(report: &ExperimentReport, label: &str, seed: u64, iterations: usize) -> Option<f64> {
    report.value(EXPERIMENT, label, seed, &iterations.to_string(), "mean_joint_error")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pose_is_cumulative_bone_sum() {
        let (bones, markers) = default_chain(4);
        let pose = forward_kinematics(&bones, &markers, &[IDENTITY3; 4]);
        let mut acc = [0.0; 3];
        for (i, b) in bones.iter().enumerate() {
            let m = [acc[0] + markers[i][0], acc[1] + markers[i][1], acc[2] + markers[i][2]];
            assert_eq!(pose.markers[i], m);
            acc = [acc[0] + b[0], acc[1] + b[1], acc[2] + b[2]];
            assert_eq!(pose.joints[i], acc);
        }
    }

    #[test]
    fn chain_gradient_matches_finite_differences() {
        let mut rng = Rng::new(9);
        let (bones, markers) = default_chain(3);
        let weights = cmu_hips_weights(3, &[0]);
        for _ in 0..50 {
            let rots: Vec<Mat3> = (0..3).map(|_| std::array::from_fn(|_| std::array::from_fn(|_| rng.normal()))).collect();
            let t: Vec<Mat3> = (0..3).map(|_| *so3::random_rotation(&mut rng).matrix()).collect();
            let target = forward_kinematics(&bones, &markers, &t);
            let (_, grads) = chain_loss(&bones, &markers, &weights, &rots, &target);
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let h = 1e-6;
                        let mut p = rots.clone();
                        p[k][i][j] += h;
                        let mut m = rots.clone();
                        m[k][i][j] -= h;
                        let fd = (chain_loss(&bones, &markers, &weights, &p, &target).0
                            - chain_loss(&bones, &markers, &weights, &m, &target).0)
                            / (2.0 * h);
                        assert!((grads[k][i][j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "joint {k} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn presets() {
        let w = weight_preset("cmu-hips", 3).unwrap();
        assert!((w[0] - (1.0 / 9.0 + 10.0 / 9.0)).abs() < 1e-15);
        assert_eq!(w[1], 1.0 / 9.0);
        assert!(weight_preset("nope", 3).is_err());
    }

    #[test]
    fn validation_rejects_collinear_marker() {
        let mut cfg = IKConfig::default();
        cfg.markers[1] = cfg.bones[1].map(|c| 2.0 * c);
        assert!(cfg.validate().is_err());
        let mut cfg = IKConfig::default();
        cfg.weights = vec![0.0; 3];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn short_run_is_deterministic_and_learns() {
        let cfg = IKConfig {
            mapping: MappingKind::SixD,
            iterations: 300,
            eval_every: 100,
            test_size: 64,
            ..Default::default()
        };
        let a = run_ik(&cfg).unwrap();
        assert_eq!(a.to_csv(), run_ik(&cfg).unwrap().to_csv());
        let first = final_error(&a, "6d", 0, 0).unwrap();
        let last = final_error(&a, "6d", 0, 300).unwrap();
        assert!(last < first, "{first} -> {last}");
    }
}
