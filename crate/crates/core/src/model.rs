//! Mean-field message-passing network for graph classification.
//!
//! Nodes start from one-hot tag features, exchange messages for `max_lv`
//! rounds through two learned linear maps and a relu, the final embeddings
//! are sum-pooled and pushed through an output projection, one hidden layer,
//! and a softmax. Training is plain minibatch descent with analytic
//! gradients (checked against central finite differences in the tests) and
//! an Adam-style optimizer, fully deterministic for a given seed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::prep::LabeledGraph;

/// Message-passing scheme. Only the mean-field variant exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphModel {
    #[default]
    MeanField,
}

/// Training and architecture knobs.
///
/// `feat_dim` and `num_class` may be 0, meaning "infer from the data":
/// the maximum node tag and the label universe size respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub gm: GraphModel,
    pub batch_size: usize,
    pub seed: u64,
    pub feat_dim: usize,
    pub num_class: usize,
    pub num_epochs: usize,
    pub latent_dim: usize,
    pub out_dim: usize,
    pub hidden: usize,
    pub max_lv: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gm: GraphModel::MeanField,
            batch_size: 50,
            seed: 1,
            feat_dim: 0,
            num_class: 0,
            num_epochs: 1000,
            latent_dim: 64,
            out_dim: 1024,
            hidden: 100,
            max_lv: 4,
            learning_rate: 0.0001,
            train_fraction: 0.8,
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    /// `self · x`
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (i, row) in self.data.chunks_exact(self.cols).enumerate() {
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `selfᵀ · y`
    fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, row) in self.data.chunks_exact(self.cols).enumerate() {
            for (j, a) in row.iter().enumerate() {
                out[j] += a * y[i];
            }
        }
        out
    }

    /// `self += y ⊗ x` (outer product).
    fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        for (i, &yi) in y.iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (j, &xj) in x.iter().enumerate() {
                row[j] += yi * xj;
            }
        }
    }
}

/// All learned parameters. Gradients and optimizer moments reuse the same
/// shape via [`ModelParams::zeros_like`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// latent_dim x feat_dim
    pub w_node: Matrix,
    /// latent_dim x latent_dim
    pub w_msg: Matrix,
    /// out_dim x latent_dim
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
    /// hidden x out_dim
    pub w_h: Matrix,
    pub b_h: Vec<f64>,
    /// num_class x hidden
    pub w_c: Matrix,
    pub b_c: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(hp: &Hyperparams) -> Self {
        ModelParams {
            w_node: Matrix::zeros(hp.latent_dim, hp.feat_dim),
            w_msg: Matrix::zeros(hp.latent_dim, hp.latent_dim),
            w_out: Matrix::zeros(hp.out_dim, hp.latent_dim),
            b_out: vec![0.0; hp.out_dim],
            w_h: Matrix::zeros(hp.hidden, hp.out_dim),
            b_h: vec![0.0; hp.hidden],
            w_c: Matrix::zeros(hp.num_class, hp.hidden),
            b_c: vec![0.0; hp.num_class],
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            w_node: Matrix::zeros(self.w_node.rows, self.w_node.cols),
            w_msg: Matrix::zeros(self.w_msg.rows, self.w_msg.cols),
            w_out: Matrix::zeros(self.w_out.rows, self.w_out.cols),
            b_out: vec![0.0; self.b_out.len()],
            w_h: Matrix::zeros(self.w_h.rows, self.w_h.cols),
            b_h: vec![0.0; self.b_h.len()],
            w_c: Matrix::zeros(self.w_c.rows, self.w_c.cols),
            b_c: vec![0.0; self.b_c.len()],
        }
    }

    /// Seeded initialization: every tensor uniform in ±1/sqrt(fan_in), drawn
    /// in a fixed field order so identical seeds give identical parameters.
    pub fn init(hp: &Hyperparams, rng: &mut ChaCha8Rng) -> Self {
        let mut params = Self::zeros(hp);
        let fill = |data: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng| {
            let scale = 1.0 / math::sqrt(fan_in.max(1) as f64);
            for value in data {
                *value = (2.0 * rng.gen::<f64>() - 1.0) * scale;
            }
        };
        fill(&mut params.w_node.data, hp.feat_dim, rng);
        fill(&mut params.w_msg.data, hp.latent_dim, rng);
        fill(&mut params.w_out.data, hp.latent_dim, rng);
        fill(&mut params.b_out, hp.latent_dim, rng);
        fill(&mut params.w_h.data, hp.out_dim, rng);
        fill(&mut params.b_h, hp.out_dim, rng);
        fill(&mut params.w_c.data, hp.hidden, rng);
        fill(&mut params.b_c, hp.hidden, rng);
        params
    }

    /// The eight parameter tensors as flat slices, in a fixed order
    /// (w_node, w_msg, w_out, b_out, w_h, b_h, w_c, b_c).
    pub fn slices(&self) -> [&[f64]; 8] {
        [
            &self.w_node.data,
            &self.w_msg.data,
            &self.w_out.data,
            &self.b_out,
            &self.w_h.data,
            &self.b_h,
            &self.w_c.data,
            &self.b_c,
        ]
    }

    /// Mutable view of the same tensors as [`ModelParams::slices`].
    pub fn slices_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.w_node.data,
            &mut self.w_msg.data,
            &mut self.w_out.data,
            &mut self.b_out,
            &mut self.w_h.data,
            &mut self.b_h,
            &mut self.w_c.data,
            &mut self.b_c,
        ]
    }

    fn scale(&mut self, factor: f64) {
        for slice in self.slices_mut() {
            for value in slice {
                *value *= factor;
            }
        }
    }

    fn add_assign(&mut self, other: &ModelParams) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.slices()
            .into_iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn dims_match(&self, hp: &Hyperparams) -> bool {
        self.w_node.rows == hp.latent_dim
            && self.w_node.cols == hp.feat_dim
            && self.w_msg.rows == hp.latent_dim
            && self.w_msg.cols == hp.latent_dim
            && self.w_out.rows == hp.out_dim
            && self.w_out.cols == hp.latent_dim
            && self.b_out.len() == hp.out_dim
            && self.w_h.rows == hp.hidden
            && self.w_h.cols == hp.out_dim
            && self.b_h.len() == hp.hidden
            && self.w_c.rows == hp.num_class
            && self.w_c.cols == hp.hidden
            && self.b_c.len() == hp.num_class
    }
}

/// Cached activations of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Node embeddings per message-passing level, levels 0..=max_lv.
    pub levels: Vec<Vec<Vec<f64>>>,
    /// Sum-pooled final embeddings.
    pub raw: Vec<f64>,
    /// Output projection activation.
    pub g: Vec<f64>,
    /// Hidden layer activation.
    pub h: Vec<f64>,
    pub logits: Vec<f64>,
    /// Softmax probabilities; non-negative, sum to 1 within 1e-9.
    pub probs: Vec<f64>,
}

/// Per-epoch training record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub epoch_accuracy: Vec<f64>,
    /// Filled under `std`; 0.0 otherwise.
    pub wall_time_secs: f64,
}

/// Result of [`train`]: final parameters, the per-epoch report, and the
/// hyperparameters with inferred dimensions filled in.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub report: TrainReport,
    pub resolved: Hyperparams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    ShapeMismatch(&'static str),
    TagOutOfRange { tag: u32, feat_dim: usize },
    LabelOutOfRange { label: u32, num_class: usize },
    NonFiniteLoss,
    EmptyDataset,
    InfiniteLoss { epoch: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ShapeMismatch(what) => write!(f, "shape mismatch: {what}"),
            ModelError::TagOutOfRange { tag, feat_dim } => {
                write!(f, "tag {tag} out of range for feature dimension {feat_dim}")
            }
            ModelError::LabelOutOfRange { label, num_class } => {
                write!(f, "label {label} out of range for {num_class} classes")
            }
            ModelError::NonFiniteLoss => write!(f, "loss is not finite"),
            ModelError::EmptyDataset => write!(f, "dataset is empty"),
            ModelError::InfiniteLoss { epoch } => {
                write!(f, "loss became non-finite in epoch {epoch}")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// One-hot encoding of a tag. Position `tag - 1` is set for `tag >= 1`;
/// the reserved unknown tag 0 yields the all-zero vector.
pub fn one_hot(tag: u32, feat_dim: usize) -> Result<Vec<f64>, ModelError> {
    if tag as usize > feat_dim {
        return Err(ModelError::TagOutOfRange { tag, feat_dim });
    }
    let mut x = vec![0.0; feat_dim];
    if tag > 0 {
        x[tag as usize - 1] = 1.0;
    }
    Ok(x)
}

fn relu(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn neighbor_lists(graph: &LabeledGraph) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::new(); graph.node_count()];
    for &(a, b) in &graph.adjacency {
        if a == b {
            lists[a as usize].push(a as usize);
        } else {
            lists[a as usize].push(b as usize);
            lists[b as usize].push(a as usize);
        }
    }
    for list in &mut lists {
        list.sort_unstable();
    }
    lists
}

fn embed_levels(
    graph: &LabeledGraph,
    params: &ModelParams,
    max_lv: usize,
) -> Result<Vec<Vec<Vec<f64>>>, ModelError> {
    let latent = params.w_node.rows;
    if params.w_msg.rows != latent || params.w_msg.cols != latent {
        return Err(ModelError::ShapeMismatch("message matrix vs latent dim"));
    }
    let feat_dim = params.w_node.cols;
    let n = graph.node_count();
    let features: Vec<Vec<f64>> = graph
        .node_tags
        .iter()
        .map(|&tag| one_hot(tag, feat_dim))
        .collect::<Result<_, _>>()?;
    let neighbors = neighbor_lists(graph);

    let mut levels = Vec::with_capacity(max_lv + 1);
    levels.push(vec![vec![0.0; latent]; n]);
    for t in 1..=max_lv {
        let prev = &levels[t - 1];
        let mut level = Vec::with_capacity(n);
        for v in 0..n {
            let mut message_sum = vec![0.0; latent];
            for &u in &neighbors[v] {
                for (acc, value) in message_sum.iter_mut().zip(&prev[u]) {
                    *acc += value;
                }
            }
            let mut mu = params.w_node.matvec(&features[v]);
            let propagated = params.w_msg.matvec(&message_sum);
            for (a, b) in mu.iter_mut().zip(&propagated) {
                *a += b;
            }
            relu(&mut mu);
            level.push(mu);
        }
        levels.push(level);
    }
    Ok(levels)
}

/// Runs `max_lv` rounds of mean-field message passing and returns the final
/// node embeddings: `mu_v = relu(W_node x_v + W_msg sum of neighbor mu)`
/// starting from zeros.
pub fn mean_field_embed(
    graph: &LabeledGraph,
    params: &ModelParams,
    max_lv: usize,
) -> Result<Vec<Vec<f64>>, ModelError> {
    Ok(embed_levels(graph, params, max_lv)?.pop().expect("levels"))
}

/// Full forward pass: embed, sum-pool, output projection, hidden layer,
/// stabilized softmax.
pub fn classify(
    graph: &LabeledGraph,
    params: &ModelParams,
    hp: &Hyperparams,
) -> Result<ForwardTrace, ModelError> {
    if !params.dims_match(hp) {
        return Err(ModelError::ShapeMismatch("parameters vs hyperparameters"));
    }
    let levels = embed_levels(graph, params, hp.max_lv)?;
    let latent = params.w_node.rows;
    let mut raw = vec![0.0; latent];
    for mu in levels.last().expect("levels") {
        for (acc, value) in raw.iter_mut().zip(mu) {
            *acc += value;
        }
    }
    let mut g = params.w_out.matvec(&raw);
    for (a, b) in g.iter_mut().zip(&params.b_out) {
        *a += b;
    }
    relu(&mut g);
    let mut h = params.w_h.matvec(&g);
    for (a, b) in h.iter_mut().zip(&params.b_h) {
        *a += b;
    }
    relu(&mut h);
    let mut logits = params.w_c.matvec(&h);
    for (a, b) in logits.iter_mut().zip(&params.b_c) {
        *a += b;
    }

    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|&l| math::exp(l - max)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }

    Ok(ForwardTrace {
        levels,
        raw,
        g,
        h,
        logits,
        probs,
    })
}

/// Cross-entropy of the true class: `-ln p[label]`, clamped at 1e-12.
pub fn loss(probs: &[f64], label: u32) -> Result<f64, ModelError> {
    let p = *probs
        .get(label as usize)
        .ok_or(ModelError::ShapeMismatch("label vs class count"))?;
    let value = -math::ln(p.max(1e-12));
    if !value.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    Ok(value)
}

/// Analytic gradient of the cross-entropy loss of one graph with respect to
/// every parameter, by reverse traversal of the forward recurrence with the
/// message-passing levels unrolled.
pub fn backward(
    graph: &LabeledGraph,
    trace: &ForwardTrace,
    label: u32,
    params: &ModelParams,
) -> Result<ModelParams, ModelError> {
    if label as usize >= trace.probs.len() {
        return Err(ModelError::ShapeMismatch("label vs class count"));
    }
    let mut grads = params.zeros_like();
    let feat_dim = params.w_node.cols;
    let neighbors = neighbor_lists(graph);
    let max_lv = trace.levels.len() - 1;

    // softmax + cross-entropy
    let mut dlogits = trace.probs.clone();
    dlogits[label as usize] -= 1.0;

    grads.w_c.add_outer(&dlogits, &trace.h);
    for (d, s) in grads.b_c.iter_mut().zip(&dlogits) {
        *d += s;
    }
    let mut dh = params.w_c.matvec_t(&dlogits);
    for (d, &activated) in dh.iter_mut().zip(&trace.h) {
        if activated <= 0.0 {
            *d = 0.0;
        }
    }

    grads.w_h.add_outer(&dh, &trace.g);
    for (d, s) in grads.b_h.iter_mut().zip(&dh) {
        *d += s;
    }
    let mut dg = params.w_h.matvec_t(&dh);
    for (d, &activated) in dg.iter_mut().zip(&trace.g) {
        if activated <= 0.0 {
            *d = 0.0;
        }
    }

    grads.w_out.add_outer(&dg, &trace.raw);
    for (d, s) in grads.b_out.iter_mut().zip(&dg) {
        *d += s;
    }
    let draw = params.w_out.matvec_t(&dg);

    // The pooled gradient flows equally into every node's final embedding.
    let n = graph.node_count();
    let mut dmu: Vec<Vec<f64>> = vec![draw; n];
    for t in (1..=max_lv).rev() {
        let current = &trace.levels[t];
        let prev = &trace.levels[t - 1];
        let mut dmu_prev = vec![vec![0.0; params.w_node.rows]; n];
        for v in 0..n {
            let mut dpre = dmu[v].clone();
            for (d, &activated) in dpre.iter_mut().zip(&current[v]) {
                if activated <= 0.0 {
                    *d = 0.0;
                }
            }
            let x = one_hot(graph.node_tags[v], feat_dim)?;
            grads.w_node.add_outer(&dpre, &x);
            let mut message_sum = vec![0.0; params.w_node.rows];
            for &u in &neighbors[v] {
                for (acc, value) in message_sum.iter_mut().zip(&prev[u]) {
                    *acc += value;
                }
            }
            grads.w_msg.add_outer(&dpre, &message_sum);
            let dsum = params.w_msg.matvec_t(&dpre);
            for &u in &neighbors[v] {
                for (acc, value) in dmu_prev[u].iter_mut().zip(&dsum) {
                    *acc += value;
                }
            }
        }
        dmu = dmu_prev;
    }

    Ok(grads)
}

/// Class index (lowest wins ties) and probabilities for one graph. Node tags
/// beyond the trained feature dimension are mapped to the reserved unknown
/// tag instead of failing.
pub fn predict(
    graph: &LabeledGraph,
    params: &ModelParams,
    hp: &Hyperparams,
) -> Result<(usize, Vec<f64>), ModelError> {
    let clamped;
    let graph = if graph.node_tags.iter().any(|&t| t as usize > hp.feat_dim) {
        clamped = LabeledGraph {
            node_tags: graph
                .node_tags
                .iter()
                .map(|&t| if t as usize > hp.feat_dim { 0 } else { t })
                .collect(),
            adjacency: graph.adjacency.clone(),
            label: graph.label,
        };
        &clamped
    } else {
        graph
    };
    let trace = classify(graph, params, hp)?;
    Ok((argmax(&trace.probs), trace.probs))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Optimizer selection for [`train_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    #[default]
    Adam,
    Sgd,
}

struct AdamState {
    m: ModelParams,
    v: ModelParams,
    step: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(
    params: &mut ModelParams,
    grads: &ModelParams,
    lr: f64,
    optimizer: Optimizer,
    adam: &mut AdamState,
) {
    match optimizer {
        Optimizer::Sgd => {
            for (p, g) in params.slices_mut().into_iter().zip(grads.slices()) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= lr * gv;
                }
            }
        }
        Optimizer::Adam => {
            adam.step += 1;
            let t = adam.step as f64;
            let bias1 = 1.0 - libm::pow(ADAM_BETA1, t);
            let bias2 = 1.0 - libm::pow(ADAM_BETA2, t);
            let params = params.slices_mut();
            let grads = grads.slices();
            let ms = adam.m.slices_mut();
            let vs = adam.v.slices_mut();
            for (((p, g), m), v) in params.into_iter().zip(grads).zip(ms).zip(vs) {
                for (((pv, gv), mv), vv) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut())
                {
                    *mv = ADAM_BETA1 * *mv + (1.0 - ADAM_BETA1) * gv;
                    *vv = ADAM_BETA2 * *vv + (1.0 - ADAM_BETA2) * gv * gv;
                    let m_hat = *mv / bias1;
                    let v_hat = *vv / bias2;
                    *pv -= lr * m_hat / (math::sqrt(v_hat) + ADAM_EPS);
                }
            }
        }
    }
}

/// Fills in inferred dimensions: `feat_dim` 0 becomes the maximum tag,
/// `num_class` 0 becomes the label universe size.
pub fn resolve_hyperparams(
    dataset: &[LabeledGraph],
    hp: &Hyperparams,
) -> Result<Hyperparams, ModelError> {
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut resolved = hp.clone();
    let max_tag = dataset
        .iter()
        .flat_map(|g| g.node_tags.iter().copied())
        .max()
        .unwrap_or(0) as usize;
    if resolved.feat_dim == 0 {
        resolved.feat_dim = max_tag;
    } else if max_tag > resolved.feat_dim {
        return Err(ModelError::TagOutOfRange {
            tag: max_tag as u32,
            feat_dim: resolved.feat_dim,
        });
    }
    if resolved.num_class == 0 {
        resolved.num_class = crate::format::label_universe(dataset).len();
    }
    for graph in dataset {
        if graph.label as usize >= resolved.num_class {
            return Err(ModelError::LabelOutOfRange {
                label: graph.label,
                num_class: resolved.num_class,
            });
        }
    }
    Ok(resolved)
}

/// Trains with the Adam-style optimizer; see [`train_with`].
pub fn train(dataset: &[LabeledGraph], hp: &Hyperparams) -> Result<TrainOutcome, ModelError> {
    train_with(dataset, hp, Optimizer::Adam)
}

/// Minibatch training, deterministic for a given `(dataset order, seed,
/// hyperparameters)`: seeded parameter initialization, a per-epoch seeded
/// shuffle, gradients of the mean batch loss, and the chosen optimizer.
pub fn train_with(
    dataset: &[LabeledGraph],
    hp: &Hyperparams,
    optimizer: Optimizer,
) -> Result<TrainOutcome, ModelError> {
    let resolved = resolve_hyperparams(dataset, hp)?;
    #[cfg(feature = "std")]
    let started = std::time::Instant::now();

    let mut rng = ChaCha8Rng::seed_from_u64(resolved.seed);
    let mut params = ModelParams::init(&resolved, &mut rng);
    let mut adam = AdamState {
        m: params.zeros_like(),
        v: params.zeros_like(),
        step: 0,
    };
    let mut report = TrainReport::default();

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..resolved.num_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(resolved.batch_size.max(1)) {
            let mut batch_grads = params.zeros_like();
            for &index in batch {
                let graph = &dataset[index];
                let trace = classify(graph, &params, &resolved)?;
                loss_sum += loss(&trace.probs, graph.label)?;
                let grads = backward(graph, &trace, graph.label, &params)?;
                batch_grads.add_assign(&grads);
            }
            batch_grads.scale(1.0 / batch.len() as f64);
            apply_update(
                &mut params,
                &batch_grads,
                resolved.learning_rate,
                optimizer,
                &mut adam,
            );
        }
        let mean_loss = loss_sum / dataset.len() as f64;
        if !mean_loss.is_finite() || !params.all_finite() {
            return Err(ModelError::InfiniteLoss { epoch });
        }
        report.epoch_loss.push(mean_loss);

        let mut correct = 0usize;
        for graph in dataset {
            let (class, _) = predict(graph, &params, &resolved)?;
            if class == graph.label as usize {
                correct += 1;
            }
        }
        report
            .epoch_accuracy
            .push(correct as f64 / dataset.len() as f64);
    }

    #[cfg(feature = "std")]
    {
        report.wall_time_secs = started.elapsed().as_secs_f64();
    }

    Ok(TrainOutcome {
        params,
        report,
        resolved,
    })
}
