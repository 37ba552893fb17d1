//! A small dense feed-forward network with manual backpropagation.
//!
//! Parameters live in one flat vector, layer after layer, each layer stored
//! as its weight matrix (row-major, `out × in`) followed by its bias.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3};
use crate::losses::LossSpec;
use crate::mappings::{self, procrustes, MappingKind};
use crate::rng::Rng;
use crate::so3::RotationMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Identity => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Activation::Tanh),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Identity),
            _ => Err(Error::Io(format!("unknown activation code {c}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::InvalidConfig(format!("unknown activation '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

/// Per-layer inputs and pre-activations kept for [`DenseNet::backward`].
#[derive(Clone, Debug)]
pub struct Cache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl DenseNet {
    /// Zero-initialized network; `activations` has one entry per layer.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(Error::ShapeMismatch {
                expected: sizes.len() - 1,
                got: activations.len(),
            });
        }
        let n: usize = sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            activations: activations.to_vec(),
            params: vec![0.0; n],
        })
    }

    /// Weights uniform in `±√(6/(fan_in + fan_out))`, zero biases.
    pub fn new(sizes: &[usize], activations: &[Activation], rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes, activations)?;
        let mut off = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = rng.uniform(-limit, limit);
            }
            off += fan_out * (fan_in + 1);
        }
        Ok(net)
    }

    /// Hidden layers use `hidden`, the output layer is linear.
    pub fn mlp(sizes: &[usize], hidden: Activation, rng: &mut Rng) -> Result<Self> {
        let mut acts = vec![hidden; sizes.len().saturating_sub(1)];
        if let Some(last) = acts.last_mut() {
            *last = Activation::Identity;
        }
        Self::new(sizes, &acts, rng)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Offsets of (weights, bias) for layer `l`.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let start: usize = self.sizes.windows(2).take(l).map(|w| w[1] * (w[0] + 1)).sum();
        (start, start + self.sizes[l] * self.sizes[l + 1])
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Cache)> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut cache = Cache {
            inputs: Vec::with_capacity(self.activations.len()),
            pre: Vec::with_capacity(self.activations.len()),
        };
        let mut a = input.to_vec();
        for (l, act) in self.activations.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let w = &self.params[w_off..w_off + n_in * n_out];
            let b = &self.params[b_off..b_off + n_out];
            let z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&a).map(|(x, y)| x * y).sum::<f64>())
                .collect();
            let next = z.iter().map(|&v| act.apply(v)).collect();
            cache.inputs.push(a);
            cache.pre.push(z);
            a = next;
        }
        Ok((a, cache))
    }

    /// Gradient of `grad_output · output` with respect to the parameters
    /// (flat, same layout as [`DenseNet::params`]) and to the input.
    pub fn backward(&self, cache: &Cache, grad_output: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.output_dim(),
                got: grad_output.len(),
            });
        }
        if cache.inputs.len() != self.activations.len() {
            return Err(Error::ShapeMismatch {
                expected: self.activations.len(),
                got: cache.inputs.len(),
            });
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut g = grad_output.to_vec();
        for l in (0..self.activations.len()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let act = self.activations[l];
            let dz: Vec<f64> = g.iter().zip(&cache.pre[l]).map(|(gi, &z)| gi * act.derivative(z)).collect();
            let a_in = &cache.inputs[l];
            for o in 0..n_out {
                for i in 0..n_in {
                    grads[w_off + o * n_in + i] = dz[o] * a_in[i];
                }
                grads[b_off + o] = dz[o];
            }
            let w = &self.params[w_off..w_off + n_in * n_out];
            g = (0..n_in).map(|i| (0..n_out).map(|o| w[o * n_in + i] * dz[o]).sum()).collect();
        }
        Ok((grads, g))
    }

    /// Writes the binary checkpoint at `path` and a `<path>.layers` sidecar.
    ///
    /// Binary layout (little-endian): `b"TNCK"`, `u32` version (1), `u32`
    /// layer count `L`, `L + 1` `u64` layer sizes, `L` `u8` activation codes
    /// (0 tanh, 1 relu, 2 identity), `u64` parameter count, then the
    /// parameters as `f64`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(32 + 8 * self.params.len());
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.activations.len() as u32).to_le_bytes());
        for &s in &self.sizes {
            buf.extend_from_slice(&(s as u64).to_le_bytes());
        }
        buf.extend(self.activations.iter().map(|a| a.code()));
        buf.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        fs::File::create(path)?.write_all(&buf)?;
        fs::write(sidecar_path(path), self.layers_text())?;
        Ok(())
    }

    fn layers_text(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let acts: Vec<String> = self.activations.iter().map(|a| a.to_string()).collect();
        format!("sizes {}\nactivations {}\n", sizes.join(" "), acts.join(" "))
    }

    /// Reads a checkpoint written by [`DenseNet::save`]. The sidecar, when
    /// present, must agree with the binary header.
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = ByteReader { bytes: &bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Io("not a network checkpoint".into()));
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Io(format!("unsupported checkpoint version {version}")));
        }
        let layers = u32::from_le_bytes(r.array()?) as usize;
        let sizes = (0..=layers)
            .map(|_| Ok(u64::from_le_bytes(r.array()?) as usize))
            .collect::<Result<Vec<_>>>()?;
        let acts = r.take(layers)?.iter().map(|&c| Activation::from_code(c)).collect::<Result<Vec<_>>>()?;
        let mut net = Self::zeros(&sizes, &acts)?;
        let count = u64::from_le_bytes(r.array()?) as usize;
        if count != net.params.len() {
            return Err(Error::Io(format!("parameter count {count} does not match the layer sizes")));
        }
        for p in net.params.iter_mut() {
            *p = f64::from_le_bytes(r.array()?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Io("trailing bytes after the parameters".into()));
        }
        if let Ok(text) = fs::read_to_string(sidecar_path(path)) {
            if text != net.layers_text() {
                return Err(Error::Io("sidecar layer file disagrees with the checkpoint".into()));
            }
        }
        Ok(net)
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"TNCK";
const CHECKPOINT_VERSION: u32 = 1;

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".layers");
    PathBuf::from(s)
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Io("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimState {
    pub optimizer: Optimizer,
    pub step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimState {
    pub fn new(optimizer: Optimizer, num_params: usize) -> Self {
        let moments = matches!(optimizer, Optimizer::Adam { .. });
        Self {
            optimizer,
            step: 0,
            m: if moments { vec![0.0; num_params] } else { Vec::new() },
            v: if moments { vec![0.0; num_params] } else { Vec::new() },
        }
    }

    /// One descent step on `params` along `grad`.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::ShapeMismatch {
                expected: params.len(),
                got: grad.len(),
            });
        }
        self.step += 1;
        match self.optimizer {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps } => {
                if self.m.len() != params.len() {
                    return Err(Error::ShapeMismatch {
                        expected: self.m.len(),
                        got: params.len(),
                    });
                }
                let c1 = 1.0 - beta1.powi(self.step as i32);
                let c2 = 1.0 - beta2.powi(self.step as i32);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] -= lr * mh / (vh.sqrt() + eps);
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteParameters { step: self.step });
        }
        Ok(())
    }
}

/// How network outputs become a rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Head {
    /// Through a differentiable mapping during training and evaluation.
    Mapping(MappingKind),
    /// Raw 3×3 matrix regressed directly; orthonormalized only at evaluation.
    Matrix(Orthonormalize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthonormalize {
    Procrustes,
    GramSchmidt,
}

impl Head {
    pub fn output_dim(&self) -> usize {
        match self {
            Head::Mapping(kind) => kind.input_dim(),
            Head::Matrix(_) => 9,
        }
    }

    /// Training-time prediction and `∂vec(R)/∂output` as a 9×n row-major
    /// array.
    fn predict_with_jacobian(&self, out: &[f64]) -> Result<(Mat3, Vec<f64>)> {
        match self {
            Head::Mapping(kind) => {
                let e = mappings::jacobian_with_fallback(*kind, out)?;
                Ok((*e.value.matrix(), e.jacobian.data().to_vec()))
            }
            Head::Matrix(_) => {
                let mut id = vec![0.0; 81];
                for i in 0..9 {
                    id[i * 9 + i] = 1.0;
                }
                Ok((linalg::unvec9(out), id))
            }
        }
    }

    /// Evaluation-time rotation.
    pub fn rotation(&self, out: &[f64]) -> Result<RotationMatrix> {
        match self {
            Head::Mapping(kind) => mappings::apply(*kind, out),
            Head::Matrix(Orthonormalize::Procrustes) => mappings::apply(MappingKind::Procrustes, out),
            Head::Matrix(Orthonormalize::GramSchmidt) => {
                // Columns of the raw 3×3 output.
                let m = linalg::unvec9(out);
                let x = [m[0][0], m[1][0], m[2][0], m[0][1], m[1][1], m[2][1]];
                mappings::apply(MappingKind::SixD, &x)
            }
        }
    }
}

/// Outcome of one optimizer step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    /// Mean loss over the samples that contributed, before the update.
    pub loss: f64,
    /// Samples whose mapping input was degenerate and were skipped.
    pub skipped: usize,
}

/// Generic step: `sample_loss(i, output)` returns the loss of sample `i` and
/// its gradient with respect to the network output, or `None` to skip it.
/// Gradients are summed in sample order, averaged over the contributing
/// samples, then applied.
pub fn train_step_with<F>(net: &mut DenseNet, optim: &mut OptimState, inputs: &[Vec<f64>], mut sample_loss: F) -> Result<StepStats>
where
    F: FnMut(usize, &[f64]) -> Result<Option<(f64, Vec<f64>)>>,
{
    let mut total = vec![0.0; net.num_params()];
    let mut loss = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (i, input) in inputs.iter().enumerate() {
        let (out, cache) = net.forward(input)?;
        let Some((l, g_out)) = sample_loss(i, &out)? else {
            skipped += 1;
            continue;
        };
        let (g, _) = net.backward(&cache, &g_out)?;
        for (t, v) in total.iter_mut().zip(&g) {
            *t += v;
        }
        loss += l;
        used += 1;
    }
    if used > 0 {
        let k = 1.0 / used as f64;
        total.iter_mut().for_each(|v| *v *= k);
        optim.update(net.params_mut(), &total)?;
    }
    Ok(StepStats {
        loss: if used > 0 { loss / used as f64 } else { f64::NAN },
        skipped,
    })
}

/// Loss and gradient with respect to the network output for one sample;
/// `None` when the mapping input is degenerate.
pub fn rotation_sample_loss(head: Head, loss: &LossSpec, out: &[f64], target: &Mat3) -> Result<Option<(f64, Vec<f64>)>> {
    let (r, jac) = match head.predict_with_jacobian(out) {
        Ok(v) => v,
        Err(Error::DegenerateInput { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (l, g) = loss.eval(&r, target);
    let gv = linalg::vec9(&g);
    let n = out.len();
    let grad = (0..n).map(|c| (0..9).map(|row| gv[row] * jac[row * n + c]).sum()).collect();
    Ok(Some((l, grad)))
}

/// One step of rotation regression: `dL/dθ = vec(∂L/∂R)ᵀ · J_head · ∂out/∂θ`.
pub fn train_step(
    net: &mut DenseNet,
    optim: &mut OptimState,
    inputs: &[Vec<f64>],
    head: Head,
    loss: &LossSpec,
    targets: &[RotationMatrix],
) -> Result<StepStats> {
    if inputs.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    if net.output_dim() != head.output_dim() {
        return Err(Error::ShapeMismatch {
            expected: head.output_dim(),
            got: net.output_dim(),
        });
    }
    train_step_with(net, optim, inputs, |i, out| rotation_sample_loss(head, loss, out, targets[i].matrix()))
}

/// Procrustes projection of a raw 3×3 output, or `None` when degenerate.
pub fn project_procrustes(out: &[f64]) -> Option<RotationMatrix> {
    procrustes::solve(&linalg::unvec9(out)).ok().map(|s| s.rotation)
}
