//! From-scratch 3-8-2 sigmoid network with Adam and a dual-source
//! cross-entropy objective: `L = CE(real) + lambda * CE(sim)`.
//!
//! The two outputs are independent sigmoid probabilities for the 2-point and
//! 3-point hits; labels are the two binary flags.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::physics::LaunchConfig;


pub const INPUT_DIM: usize = 3;
pub const HIDDEN_DIM: usize = 8;
pub const OUTPUT_DIM: usize = 2;

/// Probability clamp inside the cross-entropy, keeping the loss finite.
const CE_EPS: f64 = 1e-7;

/// Fixed feature divisors: distance / 16, motor ratio as-is, angle / 90.
pub const FEATURE_DIVISORS: [f64; INPUT_DIM] = [16.0, 1.0, 90.0];

/// The 3-8-2 network parameters. Weight matrices are row-major
/// `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: [[f64; INPUT_DIM]; HIDDEN_DIM],
    pub b1: [f64; HIDDEN_DIM],
    pub w2: [[f64; HIDDEN_DIM]; OUTPUT_DIM],
    pub b2: [f64; OUTPUT_DIM],
    /// Feature divisors baked into the model file so inference does not
    /// depend on external configuration.
    pub feature_divisors: [f64; INPUT_DIM],
}

impl MlpModel {
    /// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeroed();
        let lim1 = 1.0 / (INPUT_DIM as f64).sqrt();
        for row in &mut model.w1 {
            for w in row.iter_mut() {
                *w = rng.gen_range(-lim1..=lim1);
            }
        }
        let lim2 = 1.0 / (HIDDEN_DIM as f64).sqrt();
        for row in &mut model.w2 {
            for w in row.iter_mut() {
                *w = rng.gen_range(-lim2..=lim2);
            }
        }
        model
    }

    pub fn zeroed() -> Self {
        Self {
            w1: [[0.0; INPUT_DIM]; HIDDEN_DIM],
            b1: [0.0; HIDDEN_DIM],
            w2: [[0.0; HIDDEN_DIM]; OUTPUT_DIM],
            b2: [0.0; OUTPUT_DIM],
            feature_divisors: FEATURE_DIVISORS,
        }
    }

    pub fn normalize(&self, config: &LaunchConfig) -> [f64; INPUT_DIM] {
        [
            config.distance / self.feature_divisors[0],
            config.motor_ratio / self.feature_divisors[1],
            config.angle / self.feature_divisors[2],
        ]
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Forward pass returning the hidden activations too (needed by backprop).
fn forward_full(model: &MlpModel, x: &[f64; INPUT_DIM]) -> ([f64; HIDDEN_DIM], [f64; OUTPUT_DIM]) {
    let mut hidden = [0.0; HIDDEN_DIM];
    for (j, row) in model.w1.iter().enumerate() {
        let z: f64 = row.iter().zip(x.iter()).map(|(w, xi)| w * xi).sum::<f64>() + model.b1[j];
        hidden[j] = sigmoid(z);
    }
    let mut out = [0.0; OUTPUT_DIM];
    for (k, row) in model.w2.iter().enumerate() {
        let z: f64 =
            row.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>() + model.b2[k];
        out[k] = sigmoid(z);
    }
    (hidden, out)
}

/// Forward pass on a normalized feature vector; outputs are
/// `[P(hit2), P(hit3)]`, each in (0, 1).
pub fn forward(model: &MlpModel, x: &[f64; INPUT_DIM]) -> [f64; OUTPUT_DIM] {
    forward_full(model, x).1
}

/// A feature/label batch.
pub type Batch = (Vec<[f64; INPUT_DIM]>, Vec<[f64; OUTPUT_DIM]>);

pub fn features_and_labels(data: &Dataset, model: &MlpModel) -> Batch {
    let xs = data.rows.iter().map(|(c, _)| model.normalize(c)).collect();
    let ys = data
        .rows
        .iter()
        .map(|(_, o)| [o.hit2 as u8 as f64, o.hit3 as u8 as f64])
        .collect();
    (xs, ys)
}

fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(CE_EPS, 1.0 - CE_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean element-wise binary cross-entropy over a batch (2 outputs per row).
/// An empty batch contributes 0.
fn batch_ce(model: &MlpModel, xs: &[[f64; INPUT_DIM]], ys: &[[f64; OUTPUT_DIM]]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let p = forward(model, x);
        for k in 0..OUTPUT_DIM {
            total += bce(p[k], y[k]);
        }
    }
    total / (xs.len() * OUTPUT_DIM) as f64
}

/// Dual-source objective: `CE(real) + lambda * CE(sim)`.
pub fn loss(model: &MlpModel, real: &Batch, sim: &Batch, lambda: f64) -> f64 {
    batch_ce(model, &real.0, &real.1) + lambda * batch_ce(model, &sim.0, &sim.1)
}

/// Gradients with the same shapes as [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: [[f64; INPUT_DIM]; HIDDEN_DIM],
    pub b1: [f64; HIDDEN_DIM],
    pub w2: [[f64; HIDDEN_DIM]; OUTPUT_DIM],
    pub b2: [f64; OUTPUT_DIM],
}

impl Gradients {
    fn zeroed() -> Self {
        Self {
            w1: [[0.0; INPUT_DIM]; HIDDEN_DIM],
            b1: [0.0; HIDDEN_DIM],
            w2: [[0.0; HIDDEN_DIM]; OUTPUT_DIM],
            b2: [0.0; OUTPUT_DIM],
        }
    }

    fn accumulate_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.w1.iter_mut().zip(other.w1.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
        for (x, y) in self.b1.iter_mut().zip(other.b1.iter()) {
            *x += scale * y;
        }
        for (a, b) in self.w2.iter_mut().zip(other.w2.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
        for (x, y) in self.b2.iter_mut().zip(other.b2.iter()) {
            *x += scale * y;
        }
    }
}

/// Backprop for one batch's mean cross-entropy. Uses the sigmoid + BCE
/// shortcut dL/dz = p - y at the output layer.
fn batch_ce_grad(model: &MlpModel, xs: &[[f64; INPUT_DIM]], ys: &[[f64; OUTPUT_DIM]]) -> Gradients {
    let mut g = Gradients::zeroed();
    if xs.is_empty() {
        return g;
    }
    let scale = 1.0 / (xs.len() * OUTPUT_DIM) as f64;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let (hidden, out) = forward_full(model, x);
        let mut dz2 = [0.0; OUTPUT_DIM];
        for k in 0..OUTPUT_DIM {
            dz2[k] = (out[k] - y[k]) * scale;
        }
        for k in 0..OUTPUT_DIM {
            for j in 0..HIDDEN_DIM {
                g.w2[k][j] += dz2[k] * hidden[j];
            }
            g.b2[k] += dz2[k];
        }
        for j in 0..HIDDEN_DIM {
            let dh: f64 = (0..OUTPUT_DIM).map(|k| model.w2[k][j] * dz2[k]).sum();
            let dz1 = dh * hidden[j] * (1.0 - hidden[j]);
            for i in 0..INPUT_DIM {
                g.w1[j][i] += dz1 * x[i];
            }
            g.b1[j] += dz1;
        }
    }
    g
}

/// Analytic gradient of [`loss`] with respect to every parameter.
pub fn grad(model: &MlpModel, real: &Batch, sim: &Batch, lambda: f64) -> Gradients {
    let mut g = batch_ce_grad(model, &real.0, &real.1);
    if lambda != 0.0 && !sim.0.is_empty() {
        let gs = batch_ce_grad(model, &sim.0, &sim.1);
        g.accumulate_scaled(&gs, lambda);
    }
    g
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 10,
            lambda: 0.01,
            epochs: 200,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::validation("learning rate must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch size must be >= 1"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::validation("lambda must be >= 0"));
        }
        Ok(())
    }
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
}

impl Adam {
    fn new(cfg: &TrainConfig) -> Self {
        Self {
            m: Gradients::zeroed(),
            v: Gradients::zeroed(),
            t: 0,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            lr: cfg.learning_rate,
        }
    }

    fn step(&mut self, model: &mut MlpModel, g: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (beta1, beta2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let update = |param: &mut f64, grad: f64, m: &mut f64, v: &mut f64| {
            *m = beta1 * *m + (1.0 - beta1) * grad;
            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *param -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for j in 0..HIDDEN_DIM {
            for i in 0..INPUT_DIM {
                update(&mut model.w1[j][i], g.w1[j][i], &mut self.m.w1[j][i], &mut self.v.w1[j][i]);
            }
            update(&mut model.b1[j], g.b1[j], &mut self.m.b1[j], &mut self.v.b1[j]);
        }
        for k in 0..OUTPUT_DIM {
            for j in 0..HIDDEN_DIM {
                update(&mut model.w2[k][j], g.w2[k][j], &mut self.m.w2[k][j], &mut self.v.w2[k][j]);
            }
            update(&mut model.b2[k], g.b2[k], &mut self.m.b2[k], &mut self.v.b2[k]);
        }
    }
}

/// Cyclic sampler over the real dataset: shuffled order, reshuffled at every
/// wrap, batches always full-size.
struct CyclicSampler {
    order: Vec<usize>,
    cursor: usize,
}

impl CyclicSampler {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, cursor: 0 }
    }

    fn next_batch(&mut self, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut batch = Vec::with_capacity(size);
        for _ in 0..size {
            if self.cursor == self.order.len() {
                self.order.shuffle(rng);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }
}

/// Train with the interleaved schedule: one epoch walks the shuffled
/// simulated set in batches, pairing every simulated batch with a cyclically
/// resampled real batch. With an empty simulated set, epochs walk the real
/// set alone. Returns the trained model and the per-step loss history.
pub fn train(
    model: MlpModel,
    real: &Dataset,
    sim: &Dataset,
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<f64>)> {
    cfg.validate()?;
    if real.is_empty() {
        return Err(Error::validation("real (experimental) dataset is empty"));
    }
    let mut model = model;
    let (real_xs, real_ys) = features_and_labels(real, &model);
    let (sim_xs, sim_ys) = features_and_labels(sim, &model);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg);
    let mut history = Vec::new();

    let gather = |xs: &[[f64; INPUT_DIM]], ys: &[[f64; OUTPUT_DIM]], idx: &[usize]| -> Batch {
        (
            idx.iter().map(|&i| xs[i]).collect(),
            idx.iter().map(|&i| ys[i]).collect(),
        )
    };

    if sim_xs.is_empty() {
        for _ in 0..cfg.epochs {
            let mut order: Vec<usize> = (0..real_xs.len()).collect();
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                let real_batch = gather(&real_xs, &real_ys, chunk);
                let empty: Batch = (Vec::new(), Vec::new());
                let g = grad(&model, &real_batch, &empty, cfg.lambda);
                adam.step(&mut model, &g);
                history.push(loss(&model, &real_batch, &empty, cfg.lambda));
            }
        }
    } else {
        let mut real_sampler = CyclicSampler::new(real_xs.len(), &mut rng);
        for _ in 0..cfg.epochs {
            let mut sim_order: Vec<usize> = (0..sim_xs.len()).collect();
            sim_order.shuffle(&mut rng);
            for chunk in sim_order.chunks(cfg.batch_size) {
                let sim_batch = gather(&sim_xs, &sim_ys, chunk);
                let real_idx = real_sampler.next_batch(cfg.batch_size, &mut rng);
                let real_batch = gather(&real_xs, &real_ys, &real_idx);
                let g = grad(&model, &real_batch, &sim_batch, cfg.lambda);
                adam.step(&mut model, &g);
                history.push(loss(&model, &real_batch, &sim_batch, cfg.lambda));
            }
        }
    }
    Ok((model, history))
}

/// Evaluation metrics: exact-outcome accuracy plus per-output F1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub overall_acc: f64,
    pub f1_3pt: f64,
    pub f1_2pt: f64,
}

/// Threshold the model's outputs and compare against labels.
///
/// p = threshold predicts negative. If hit3 fires without hit2, hit2 is
/// repaired to 1 so reported predictions never violate containment.
pub fn evaluate(model: &MlpModel, test: &Dataset, threshold: f64) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::validation("cannot evaluate on an empty dataset"));
    }
    let mut exact = 0usize;
    // [tp, fp, fn] per output; index 0 = hit2, 1 = hit3.
    let mut tally = [[0usize; 3]; OUTPUT_DIM];
    for (config, label) in &test.rows {
        let p = forward(model, &model.normalize(config));
        let mut pred2 = p[0] > threshold;
        let pred3 = p[1] > threshold;
        if pred3 && !pred2 {
            pred2 = true;
        }
        let preds = [pred2, pred3];
        let labels = [label.hit2, label.hit3];
        if preds == labels {
            exact += 1;
        }
        for k in 0..OUTPUT_DIM {
            match (preds[k], labels[k]) {
                (true, true) => tally[k][0] += 1,
                (true, false) => tally[k][1] += 1,
                (false, true) => tally[k][2] += 1,
                (false, false) => {}
            }
        }
    }
    let f1 = |t: &[usize; 3]| -> f64 {
        let denom = 2 * t[0] + t[1] + t[2];
        if denom == 0 {
            1.0
        } else {
            2.0 * t[0] as f64 / denom as f64
        }
    };
    Ok(Metrics {
        overall_acc: exact as f64 / test.len() as f64,
        f1_2pt: f1(&tally[0]),
        f1_3pt: f1(&tally[1]),
    })
}

/// Train one model per lambda (shared seed and schedule) and evaluate each.
pub fn lambda_sweep(
    real_train: &Dataset,
    sim: &Dataset,
    test: &Dataset,
    lambdas: &[f64],
    base: &TrainConfig,
) -> Result<Vec<(f64, Metrics)>> {
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cfg = TrainConfig { lambda, ..base.clone() };
        let (model, _) = train(MlpModel::init(cfg.seed), real_train, sim, &cfg)?;
        out.push((lambda, evaluate(&model, test, 0.5)?));
    }
    Ok(out)
}

const MODEL_HEADER: &str = "fce-model v1";

/// Serialize to the versioned text format. f64 values use Rust's shortest
/// round-trip decimal encoding, so read-back is bit-lossless.
pub fn write_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    writeln!(out, "{MODEL_HEADER}").unwrap();
    writeln!(out, "dims {INPUT_DIM} {HIDDEN_DIM} {OUTPUT_DIM}").unwrap();
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "norm {}", join(&model.feature_divisors)).unwrap();
    for row in &model.w1 {
        writeln!(out, "w1 {}", join(row)).unwrap();
    }
    writeln!(out, "b1 {}", join(&model.b1)).unwrap();
    for row in &model.w2 {
        writeln!(out, "w2 {}", join(row)).unwrap();
    }
    writeln!(out, "b2 {}", join(&model.b2)).unwrap();
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let expect = |entry: Option<(usize, &str)>, tag: &str| -> Result<(usize, Vec<f64>)> {
        let (idx, line) = entry
            .ok_or_else(|| Error::parse(path, 0, format!("missing `{tag}` line")))?;
        let line_no = idx + 1;
        let rest = line.strip_prefix(tag).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| {
            Error::parse(path, line_no, format!("expected line starting with `{tag}`"))
        })?;
        let values: std::result::Result<Vec<f64>, _> =
            rest.split_whitespace().map(str::parse).collect();
        values
            .map(|v| (line_no, v))
            .map_err(|_| Error::parse(path, line_no, format!("invalid number in `{tag}` line")))
    };

    match lines.next() {
        Some((_, h)) if h == MODEL_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header `{MODEL_HEADER}`"))),
    }
    let (line_no, dims) = expect(lines.next(), "dims")?;
    if dims != [INPUT_DIM as f64, HIDDEN_DIM as f64, OUTPUT_DIM as f64] {
        return Err(Error::parse(
            path,
            line_no,
            format!("unsupported layer dims, expected {INPUT_DIM} {HIDDEN_DIM} {OUTPUT_DIM}"),
        ));
    }
    let mut model = MlpModel::zeroed();
    let take = |line_no: usize, v: Vec<f64>, n: usize, tag: &str| -> Result<Vec<f64>> {
        if v.len() != n {
            return Err(Error::parse(
                path,
                line_no,
                format!("`{tag}` line must have {n} values, found {}", v.len()),
            ));
        }
        Ok(v)
    };
    let (ln, norm) = expect(lines.next(), "norm")?;
    model.feature_divisors.copy_from_slice(&take(ln, norm, INPUT_DIM, "norm")?);
    for row in &mut model.w1 {
        let (ln, v) = expect(lines.next(), "w1")?;
        row.copy_from_slice(&take(ln, v, INPUT_DIM, "w1")?);
    }
    let (ln, b1) = expect(lines.next(), "b1")?;
    model.b1.copy_from_slice(&take(ln, b1, HIDDEN_DIM, "b1")?);
    for row in &mut model.w2 {
        let (ln, v) = expect(lines.next(), "w2")?;
        row.copy_from_slice(&take(ln, v, HIDDEN_DIM, "w2")?);
    }
    let (ln, b2) = expect(lines.next(), "b2")?;
    model.b2.copy_from_slice(&take(ln, b2, OUTPUT_DIM, "b2")?);
    if !model_params_finite(&model) {
        return Err(Error::validation("model file contains non-finite parameters"));
    }
    Ok(model)
}

fn model_params_finite(model: &MlpModel) -> bool {
    model.w1.iter().flatten().all(|x| x.is_finite())
        && model.b1.iter().all(|x| x.is_finite())
        && model.w2.iter().flatten().all(|x| x.is_finite())
        && model.b2.iter().all(|x| x.is_finite())
        && model.feature_divisors.iter().all(|x| x.is_finite() && *x > 0.0)
}
