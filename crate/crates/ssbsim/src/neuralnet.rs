//! Dense feedforward networks with exact reverse-mode gradients.
//!
//! Just enough machinery for the actor and critic: affine layers with relu
//! or identity activations, a taped forward pass, backprop, masked softmax,
//! and an adaptive-moment optimizer. Parameters are kept exactly
//! representable in 32-bit floats at all times, so the `NNW1` checkpoint
//! (which stores f32) loses nothing and a save/load cycle reproduces the
//! network bit for bit. All arithmetic runs in f64 with the fixed
//! reduction order of [`crate::kernels`].

use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{matvec, matvec_t_acc, norm2, outer_acc};
use crate::rng::{stream, StreamKind};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NNW1";
pub const CHECKPOINT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Identity),
            other => Err(Error::Incompatible(format!("unknown activation code {other}"))),
        }
    }
}

/// One affine layer: row-major `out x in` weights plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// A dense feedforward network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

/// Round to the nearest f32-representable value.
#[inline]
fn f32_clean(x: f64) -> f64 {
    x as f32 as f64
}

impl DenseNet {
    /// Multilayer perceptron over `dims` (input first), relu on hidden
    /// layers and identity on the output. Weights use scaled-uniform
    /// fan-in initialization from a seeded stream; biases start at zero.
    pub fn mlp(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Invalid("network needs at least one layer".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Invalid("layer dimensions must be positive".into()));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let mut rng = stream(seed, StreamKind::NetInit, &[l as u64]);
            let weights: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| f32_clean((rng.gen::<f64>() * 2.0 - 1.0) * limit))
                .collect();
            layers.push(Layer {
                weights,
                biases: vec![0.0; fan_out],
                activation: if l + 2 == dims.len() {
                    Activation::Identity
                } else {
                    Activation::Relu
                },
                in_dim: fan_in,
                out_dim: fan_out,
            });
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }
}

/// Cached activations from one forward pass: per-layer inputs and
/// pre-activation values.
#[derive(Debug, Clone)]
pub struct Tape {
    pub inputs: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Forward pass with taping.
pub fn forward(net: &DenseNet, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
    if input.len() != net.input_dim() {
        return Err(Error::Invalid(format!(
            "input length {} does not match network input {}",
            input.len(),
            net.input_dim()
        )));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite network input".into()));
    }

    let mut inputs = Vec::with_capacity(net.layers.len());
    let mut pre_activations = Vec::with_capacity(net.layers.len());
    let mut x = input.to_vec();
    for layer in &net.layers {
        let mut z = vec![0.0; layer.out_dim];
        matvec(&layer.weights, &layer.biases, &x, &mut z);
        inputs.push(x);
        pre_activations.push(z.clone());
        x = match layer.activation {
            Activation::Relu => z.into_iter().map(|v| if v > 0.0 { v } else { 0.0 }).collect(),
            Activation::Identity => z,
        };
    }
    let tape = Tape {
        inputs,
        pre_activations,
        output: x.clone(),
    };
    Ok((x, tape))
}

/// Per-parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for a in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for x in a.iter_mut() {
                *x *= k;
            }
        }
    }

    /// Euclidean norm over all parameters.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for a in self.weights.iter().chain(self.biases.iter()) {
            let n = norm2(a);
            acc += n * n;
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|a| a.iter().all(|v| v.is_finite()))
    }
}

/// Exact reverse-mode gradients for `d(loss)/d(output) = output_gradient`.
pub fn backward(net: &DenseNet, tape: &Tape, output_gradient: &[f64]) -> Result<Gradients> {
    if tape.inputs.len() != net.layers.len() {
        return Err(Error::Invalid("tape does not match network depth".into()));
    }
    if output_gradient.len() != net.output_dim() {
        return Err(Error::Invalid("output gradient length mismatch".into()));
    }
    for (layer, x) in net.layers.iter().zip(&tape.inputs) {
        if x.len() != layer.in_dim {
            return Err(Error::Invalid("stale tape: layer input size mismatch".into()));
        }
    }

    let mut grads = Gradients::zeros_like(net);
    let mut dy = output_gradient.to_vec();
    for (l, layer) in net.layers.iter().enumerate().rev() {
        let z = &tape.pre_activations[l];
        let dz: Vec<f64> = match layer.activation {
            Activation::Relu => dy
                .iter()
                .zip(z)
                .map(|(&g, &zv)| if zv > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Identity => dy.clone(),
        };
        outer_acc(&mut grads.weights[l], &dz, &tape.inputs[l]);
        for (gb, &g) in grads.biases[l].iter_mut().zip(&dz) {
            *gb += g;
        }
        if l > 0 {
            let mut dx = vec![0.0; layer.in_dim];
            matvec_t_acc(&layer.weights, &dz, &mut dx);
            dy = dx;
        }
    }
    Ok(grads)
}

/// Numerically stable softmax with excluded entries. `masked[i] == true`
/// removes entry `i` from the support; the rest sum to one.
pub fn softmax_masked(logits: &[f64], masked: &[bool]) -> Result<Vec<f64>> {
    if logits.len() != masked.len() {
        return Err(Error::Invalid("mask length mismatch".into()));
    }
    let mut max = f64::NEG_INFINITY;
    for (l, &m) in logits.iter().zip(masked) {
        if !m && *l > max {
            max = *l;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::Invalid("softmax over fully masked support".into()));
    }
    let mut out = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for (i, (&l, &m)) in logits.iter().zip(masked).enumerate() {
        if !m {
            let e = (l - max).exp();
            out[i] = e;
            sum += e;
        }
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
    Ok(out)
}

/// Adaptive-moment optimizer state (decay 0.9 / 0.999, epsilon 1e-8).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step: u64,
    pub learning_rate: f64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

impl OptimizerState {
    pub fn new(net: &DenseNet, learning_rate: f64) -> Self {
        Self {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step: 0,
            learning_rate,
        }
    }
}

/// One bias-corrected adaptive-moment step; parameters and moments are
/// rounded back to f32-representable values afterwards.
pub fn optimizer_step(net: &mut DenseNet, grads: &Gradients, state: &mut OptimizerState) -> Result<()> {
    if grads.weights.len() != net.layers.len() {
        return Err(Error::Invalid("gradient shape mismatch".into()));
    }
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite gradients".into()));
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - ADAM_BETA1.powf(t);
    let bc2 = 1.0 - ADAM_BETA2.powf(t);
    let lr = state.learning_rate;

    for (l, layer) in net.layers.iter_mut().enumerate() {
        if grads.weights[l].len() != layer.weights.len()
            || grads.biases[l].len() != layer.biases.len()
        {
            return Err(Error::Invalid("gradient shape mismatch".into()));
        }
        let update = |param: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..param.len() {
                m[i] = f32_clean(ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i]);
                v[i] = f32_clean(ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i]);
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                param[i] = f32_clean(param[i] - lr * mhat / (vhat.sqrt() + ADAM_EPSILON));
            }
        };
        update(
            &mut layer.weights,
            &grads.weights[l],
            &mut state.first_moment.weights[l],
            &mut state.second_moment.weights[l],
        );
        update(
            &mut layer.biases,
            &grads.biases[l],
            &mut state.first_moment.biases[l],
            &mut state.second_moment.biases[l],
        );
    }
    Ok(())
}

// ── NNW1 checkpoint ──────────────────────────────────────────────────────────

fn write_f32s(w: &mut impl Write, vals: &[f64]) -> Result<()> {
    for &v in vals {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 4];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(f32::from_le_bytes(buf) as f64);
    }
    Ok(out)
}

/// Write the `NNW1` checkpoint: magic, version, layer dims, f32 weights
/// (row-major) then biases per layer, then optimizer state.
pub fn write_checkpoint(
    net: &DenseNet,
    opt: Option<&OptimizerState>,
    w: &mut impl Write,
) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&[CHECKPOINT_VERSION])?;
    w.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    for layer in &net.layers {
        w.write_all(&(layer.in_dim as u32).to_le_bytes())?;
        w.write_all(&(layer.out_dim as u32).to_le_bytes())?;
        w.write_all(&[layer.activation.code()])?;
    }
    for layer in &net.layers {
        write_f32s(w, &layer.weights)?;
        write_f32s(w, &layer.biases)?;
    }
    match opt {
        Some(state) => {
            w.write_all(&[1u8])?;
            w.write_all(&state.learning_rate.to_le_bytes())?;
            w.write_all(&state.step.to_le_bytes())?;
            for l in 0..net.layers.len() {
                write_f32s(w, &state.first_moment.weights[l])?;
                write_f32s(w, &state.second_moment.weights[l])?;
                write_f32s(w, &state.first_moment.biases[l])?;
                write_f32s(w, &state.second_moment.biases[l])?;
            }
        }
        None => w.write_all(&[0u8])?,
    }
    Ok(())
}

/// Read an `NNW1` checkpoint.
pub fn read_checkpoint(r: &mut impl Read) -> Result<(DenseNet, Option<OptimizerState>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Incompatible("not an NNW1 checkpoint".into()));
    }
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    if byte[0] != CHECKPOINT_VERSION {
        return Err(Error::Incompatible(format!("unsupported checkpoint version {}", byte[0])));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let layer_count = u32::from_le_bytes(buf4) as usize;

    let mut dims = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        r.read_exact(&mut buf4)?;
        let in_dim = u32::from_le_bytes(buf4) as usize;
        r.read_exact(&mut buf4)?;
        let out_dim = u32::from_le_bytes(buf4) as usize;
        r.read_exact(&mut byte)?;
        dims.push((in_dim, out_dim, Activation::from_code(byte[0])?));
    }

    let mut layers = Vec::with_capacity(layer_count);
    for &(in_dim, out_dim, activation) in &dims {
        let weights = read_f32s(r, in_dim * out_dim)?;
        let biases = read_f32s(r, out_dim)?;
        layers.push(Layer {
            weights,
            biases,
            activation,
            in_dim,
            out_dim,
        });
    }
    let net = DenseNet { layers };

    r.read_exact(&mut byte)?;
    let opt = if byte[0] == 1 {
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let learning_rate = f64::from_le_bytes(buf8);
        r.read_exact(&mut buf8)?;
        let step = u64::from_le_bytes(buf8);
        let mut state = OptimizerState::new(&net, learning_rate);
        state.step = step;
        for l in 0..net.layers.len() {
            let nw = net.layers[l].weights.len();
            let nb = net.layers[l].biases.len();
            state.first_moment.weights[l] = read_f32s(r, nw)?;
            state.second_moment.weights[l] = read_f32s(r, nw)?;
            state.first_moment.biases[l] = read_f32s(r, nb)?;
            state.second_moment.biases[l] = read_f32s(r, nb)?;
        }
        Some(state)
    } else {
        None
    };
    Ok((net, opt))
}

/// Quadratic loss and its output gradient; shared by tests and examples.
pub fn quadratic_loss(output: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let loss = 0.5 * output.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
    let grad = output.iter().zip(target).map(|(o, t)| o - t).collect();
    (loss, grad)
}
