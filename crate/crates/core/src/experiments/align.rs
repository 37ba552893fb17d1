//! Rotation regression from a point cloud and its rotated copy.
//!
//! A fixed base cloud `C` is drawn once per seed. Each training sample is a
//! target `R*` and the features `(C, R*C)` flattened; a tanh MLP outputs the
//! mapping input and the loss is taken against `R*`.

use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;
use crate::linalg::{self, Vec3};
use crate::losses::LossSpec;
use crate::mappings::MappingKind;
use crate::nn::{self, Activation, DenseNet, Head, OptimState, Optimizer, Orthonormalize};
use crate::rng::Rng;
use crate::so3::{self, RotationMatrix};

pub const EXPERIMENT: &str = "align";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeadChoice {
    Mapping(MappingKind),
    /// Regress the raw 3×3 matrix; evaluated with both Procrustes and
    /// Gram-Schmidt orthonormalization.
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossChoice {
    Frobenius,
    QuaternionMin,
}

impl LossChoice {
    pub fn spec(self) -> LossSpec {
        match self {
            LossChoice::Frobenius => LossSpec::frobenius(),
            LossChoice::QuaternionMin => LossSpec::quaternion_min(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossChoice::Frobenius => "frobenius",
            LossChoice::QuaternionMin => "quaternion",
        }
    }
}

impl std::str::FromStr for LossChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(LossChoice::Frobenius),
            "quaternion" | "quaternion-min" => Ok(LossChoice::QuaternionMin),
            _ => Err(Error::InvalidConfig(format!("unknown loss '{s}' (frobenius, quaternion)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignConfig {
    pub points: usize,
    pub hidden: Vec<usize>,
    pub head: HeadChoice,
    pub loss: LossChoice,
    pub iterations: usize,
    pub batch: usize,
    pub lr: f64,
    pub eval_every: usize,
    pub test_size: usize,
    pub seed: u64,
    /// Targets restricted to angles below this bound.
    pub target_max_angle: Option<f64>,
    /// Targets right-multiplied by this rotation.
    pub target_offset: Option<RotationMatrix>,
    /// Overrides the mapping column of the report.
    pub label: Option<String>,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            points: 64,
            hidden: vec![64],
            head: HeadChoice::Mapping(MappingKind::Procrustes),
            loss: LossChoice::Frobenius,
            iterations: 5000,
            batch: 10,
            lr: 1e-3,
            eval_every: 500,
            test_size: 512,
            seed: 0,
            target_max_angle: None,
            target_offset: None,
            label: None,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || self.batch == 0 || self.test_size == 0 || self.eval_every == 0 {
            return Err(Error::InvalidConfig("sizes must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden layer sizes must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.lr)));
        }
        if let Some(a) = self.target_max_angle {
            if !(a > 0.0 && a <= std::f64::consts::PI) {
                return Err(Error::InvalidConfig(format!("target angle bound {a}")));
            }
        }
        Ok(())
    }

    fn train_head(&self) -> Head {
        match self.head {
            HeadChoice::Mapping(kind) => Head::Mapping(kind),
            HeadChoice::Matrix => Head::Matrix(Orthonormalize::Procrustes),
        }
    }

    /// `(report label, evaluation head)` pairs.
    fn eval_heads(&self) -> Vec<(String, Head)> {
        match self.head {
            HeadChoice::Mapping(kind) => vec![(self.label.clone().unwrap_or_else(|| kind.to_string()), Head::Mapping(kind))],
            HeadChoice::Matrix => {
                let prefix = self.label.clone().unwrap_or_else(|| "matrix".into());
                vec![
                    (format!("{prefix}/procrustes"), Head::Matrix(Orthonormalize::Procrustes)),
                    (format!("{prefix}/gram-schmidt"), Head::Matrix(Orthonormalize::GramSchmidt)),
                ]
            }
        }
    }
}

struct Task {
    cloud: Vec<Vec3>,
    max_angle: Option<f64>,
    offset: Option<RotationMatrix>,
}

impl Task {
    fn target(&self, rng: &mut Rng) -> RotationMatrix {
        let r = match self.max_angle {
            Some(a) => so3::random_rotation_within(rng, a),
            None => so3::random_rotation(rng),
        };
        match &self.offset {
            Some(o) => r.compose(o),
            None => r,
        }
    }

    fn features(&self, r: &RotationMatrix) -> Vec<f64> {
        let mut f = Vec::with_capacity(6 * self.cloud.len());
        f.extend(self.cloud.iter().flatten());
        for p in &self.cloud {
            f.extend(r.apply(p));
        }
        f
    }
}

/// Centered Gaussian cloud.
pub fn base_cloud(rng: &mut Rng, n: usize) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = (0..n).map(|_| [rng.normal(), rng.normal(), rng.normal()]).collect();
    let c: Vec3 = std::array::from_fn(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n as f64);
    for p in pts.iter_mut() {
        for k in 0..3 {
            p[k] -= c[k];
        }
    }
    pts
}

/// Mean geodesic error in degrees; degenerate outputs count as 180°.
fn test_error(net: &DenseNet, head: Head, inputs: &[Vec<f64>], targets: &[RotationMatrix]) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut degenerate = 0;
    for (x, t) in inputs.iter().zip(targets) {
        let (out, _) = net.forward(x)?;
        match head.rotation(&out) {
            Ok(r) => total += so3::geodesic_angle(&r, t),
            Err(Error::DegenerateInput { .. }) => {
                degenerate += 1;
                total += std::f64::consts::PI;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((total.to_degrees() / inputs.len() as f64, degenerate))
}

/// Trains one network and reports the test error every `eval_every` steps
/// (and at step 0). A run whose parameters become non-finite stops early;
/// the report then carries an `aborted_at_step` row.
pub fn run_alignment(cfg: &AlignConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    let mut cloud_rng = root.split(0);
    let mut train_rng = root.split(1);
    let mut test_rng = root.split(2);
    let mut init_rng = root.split(3);

    let task = Task {
        cloud: base_cloud(&mut cloud_rng, cfg.points),
        max_angle: cfg.target_max_angle,
        offset: cfg.target_offset,
    };
    let test_targets: Vec<RotationMatrix> = (0..cfg.test_size).map(|_| task.target(&mut test_rng)).collect();
    let test_inputs: Vec<Vec<f64>> = test_targets.iter().map(|t| task.features(t)).collect();

    let head = cfg.train_head();
    let mut sizes = vec![6 * cfg.points];
    sizes.extend(&cfg.hidden);
    sizes.push(head.output_dim());
    let mut net = DenseNet::mlp(&sizes, Activation::Tanh, &mut init_rng)?;
    let mut optim = OptimState::new(Optimizer::adam(cfg.lr), net.num_params());
    let loss = cfg.loss.spec();
    let heads = cfg.eval_heads();

    let mut report = ExperimentReport::new();
    let evaluate = |report: &mut ExperimentReport, net: &DenseNet, step: usize| -> Result<()> {
        for (label, h) in &heads {
            let (err, degenerate) = test_error(net, *h, &test_inputs, &test_targets)?;
            report.push(EXPERIMENT, label, cfg.seed, step.to_string(), "test_error_deg", err)?;
            if degenerate > 0 {
                report.push(EXPERIMENT, label, cfg.seed, step.to_string(), "test_degenerate", degenerate as f64)?;
            }
        }
        Ok(())
    };
    evaluate(&mut report, &net, 0)?;

    let mut window_loss = 0.0;
    let mut window_steps = 0usize;
    let mut skipped = 0usize;
    for step in 1..=cfg.iterations {
        let targets: Vec<RotationMatrix> = (0..cfg.batch).map(|_| task.target(&mut train_rng)).collect();
        let inputs: Vec<Vec<f64>> = targets.iter().map(|t| task.features(t)).collect();
        match nn::train_step(&mut net, &mut optim, &inputs, head, &loss, &targets) {
            Ok(stats) => {
                skipped += stats.skipped;
                if stats.loss.is_finite() {
                    window_loss += stats.loss;
                    window_steps += 1;
                }
            }
            Err(Error::NonFiniteParameters { step: s }) => {
                for (label, _) in &heads {
                    report.push(EXPERIMENT, label, cfg.seed, step.to_string(), "aborted_at_step", s as f64)?;
                }
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
        if step % cfg.eval_every == 0 || step == cfg.iterations {
            evaluate(&mut report, &net, step)?;
            if window_steps > 0 {
                for (label, _) in &heads {
                    report.push(EXPERIMENT, label, cfg.seed, step.to_string(), "train_loss", window_loss / window_steps as f64)?;
                }
            }
            window_loss = 0.0;
            window_steps = 0;
        }
    }
    for (label, _) in &heads {
        report.push(EXPERIMENT, label, cfg.seed, cfg.iterations.to_string(), "skipped", skipped as f64)?;
    }
    Ok(report)
}

/// Final mean test error (degrees) of `label` for `seed` in `report`.
pub fn final_error(report: &ExperimentReport, label: &str, seed: u64, iterations: usize) -> Option<f64> {
    report.value(EXPERIMENT, label, seed, &iterations.to_string(), "test_error_deg")
}

/// Rotation about the x axis by `π`.
pub fn half_turn_x() -> RotationMatrix {
    RotationMatrix::new(linalg::diag([1.0, -1.0, -1.0])).expect("diag(1,-1,-1) is a rotation")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(head: HeadChoice) -> AlignConfig {
        AlignConfig {
            head,
            iterations: 300,
            eval_every: 100,
            test_size: 64,
            points: 16,
            ..Default::default()
        }
    }

    #[test]
    fn features_are_cloud_then_rotated_cloud() {
        let task = Task {
            cloud: vec![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]],
            max_angle: None,
            offset: None,
        };
        let f = task.features(&half_turn_x());
        assert_eq!(f, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0, 0.0]);
    }

    #[test]
    fn training_reduces_test_error() {
        let report = run_alignment(&short(HeadChoice::Mapping(MappingKind::Procrustes))).unwrap();
        let first = final_error(&report, "procrustes", 0, 0).unwrap();
        let last = final_error(&report, "procrustes", 0, 300).unwrap();
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn deterministic_csv() {
        let cfg = short(HeadChoice::Mapping(MappingKind::Quaternion));
        assert_eq!(run_alignment(&cfg).unwrap().to_csv(), run_alignment(&cfg).unwrap().to_csv());
    }

    #[test]
    fn matrix_head_reports_both_projections() {
        let report = run_alignment(&short(HeadChoice::Matrix)).unwrap();
        assert!(final_error(&report, "matrix/procrustes", 0, 300).is_some());
        assert!(final_error(&report, "matrix/gram-schmidt", 0, 300).is_some());
    }

    #[test]
    fn restricted_targets_respect_bound() {
        let task = Task {
            cloud: vec![[1.0, 0.0, 0.0]],
            max_angle: Some(0.5),
            offset: None,
        };
        let mut rng = Rng::new(1);
        assert!((0..200).all(|_| task.target(&mut rng).angle() < 0.5));
    }
}
