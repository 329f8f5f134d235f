//! The assembled predictor: N backbones plus a bias vector, the penalized
//! loss, and the training loop.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backbones::{init_backbone, Backbone, BackboneKind, LstmState};
use crate::data::{apply_stats, fit_stats, window, NormStats, TimeSeriesDataset, WindowedDataset};
use crate::error::{Error, Result};
use crate::numerics::{adam_step_refs, AdamState, Graph, Tensor, Var};

/// Training loss above this bound aborts with a divergence error.
const DIVERGENCE_BOUND: f64 = 1e6;

/// Prediction steps skipped at the start of every LSTM sequence before the
/// loss starts counting.
const LSTM_WARMUP: usize = 1;

/// Everything needed to train one model.
#[derive(Debug, Clone, PartialEq)]
pub struct NavarConfig {
    pub backbone: BackboneKind,
    /// Maximum lag (window depth for MLP backbones).
    pub k: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Contribution penalty coefficient λ.
    pub lambda: f64,
    /// Weight decay coefficient μ (applied inside the Adam step).
    pub mu: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of each replicate held out (temporally) for validation.
    pub val_fraction: f64,
}

impl Default for NavarConfig {
    fn default() -> Self {
        NavarConfig {
            backbone: BackboneKind::Mlp,
            k: 2,
            hidden_units: 16,
            hidden_layers: 1,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda: 0.1,
            mu: 1e-4,
            epochs: 2000,
            seed: 0,
            val_fraction: 0.2,
        }
    }
}

impl NavarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be ≥ 1".into()));
        }
        if self.hidden_units == 0 || self.hidden_layers == 0 {
            return Err(Error::Config("hidden_units and hidden_layers must be ≥ 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be ≥ 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        if self.mu < 0.0 {
            return Err(Error::Config(format!("mu must be ≥ 0, got {}", self.mu)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "val_fraction must be in [0, 1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

/// A trained (or freshly initialized) NAVAR predictor.
#[derive(Debug, Clone)]
pub struct NavarModel {
    /// One backbone per input variable, index i holds θ_i.
    pub backbones: Vec<Backbone>,
    /// Per-target bias β, length N.
    pub beta: Tensor,
    pub config: NavarConfig,
    /// Normalization fitted on the training portion, applied everywhere.
    pub norm_stats: NormStats,
    pub variable_names: Vec<String>,
    pub trained: bool,
}

/// Per-epoch curves from a training run.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    /// Empty when val_fraction is 0.
    pub val_mse: Vec<f64>,
    pub epochs_run: usize,
    /// Filled by callers that have a clock; the core leaves it at zero.
    pub wall_clock_seconds: f64,
}

/// A forward evaluation over a batch: all pairwise contributions plus the
/// additive predictions.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Flat batch×N×N, entry (b, i, j) = c_b^{i→j}.
    pub contributions: Vec<f64>,
    /// Flat batch×N, entry (b, j) = β_j plus the i-ascending contribution sum.
    pub predictions: Vec<f64>,
    pub batch: usize,
    pub n: usize,
}

impl ForwardPass {
    pub fn contribution(&self, b: usize, i: usize, j: usize) -> f64 {
        self.contributions[b * self.n * self.n + i * self.n + j]
    }

    pub fn prediction(&self, b: usize, j: usize) -> f64 {
        self.predictions[b * self.n + j]
    }
}

/// A loss expression built on a graph, with parameter handles in the same
/// order as [`NavarModel::params_mut`].
pub struct LossGraph {
    pub graph: Graph,
    pub loss: Var,
    pub param_vars: Vec<Var>,
}

impl NavarModel {
    /// Fresh model with per-backbone seeds drawn from `config.seed`.
    pub fn init(
        config: &NavarConfig,
        n: usize,
        variable_names: Vec<String>,
        norm_stats: NormStats,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut backbones = Vec::with_capacity(n);
        for _ in 0..n {
            let seed = rng.next_u64();
            backbones.push(init_backbone(
                config.backbone,
                config.k,
                n,
                config.hidden_units,
                config.hidden_layers,
                seed,
            )?);
        }
        Ok(NavarModel {
            backbones,
            beta: Tensor::zeros(&[n]),
            config: config.clone(),
            norm_stats,
            variable_names,
            trained: false,
        })
    }

    /// Reassemble a model from stored parts, validating consistency.
    pub fn from_parts(
        config: NavarConfig,
        backbones: Vec<Backbone>,
        beta: Tensor,
        norm_stats: NormStats,
        variable_names: Vec<String>,
        trained: bool,
    ) -> Result<Self> {
        config.validate()?;
        let n = backbones.len();
        if n == 0 {
            return Err(Error::Config("model needs at least one backbone".into()));
        }
        if beta.numel() != n {
            return Err(Error::DimensionMismatch(format!(
                "beta has {} entries for {} backbones",
                beta.numel(),
                n
            )));
        }
        if norm_stats.mean.len() != n || norm_stats.std.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "normalization stats cover {} variables, expected {n}",
                norm_stats.mean.len()
            )));
        }
        for (i, b) in backbones.iter().enumerate() {
            if b.kind() != config.backbone {
                return Err(Error::Config(format!(
                    "backbone {i} is {:?} but config says {:?}",
                    b.kind(),
                    config.backbone
                )));
            }
            if b.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "backbone {i} emits {} outputs for {n} variables",
                    b.n()
                )));
            }
        }
        if !beta.all_finite() {
            return Err(Error::Config("beta contains non-finite values".into()));
        }
        Ok(NavarModel {
            backbones,
            beta,
            config,
            norm_stats,
            variable_names,
            trained,
        })
    }

    pub fn n(&self) -> usize {
        self.backbones.len()
    }

    /// All trainable tensors: backbone parameters in variable order, then β.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for b in self.backbones.iter_mut() {
            out.extend(b.params_mut());
        }
        out.push(&mut self.beta);
        out
    }

    /// Named tensors for checkpointing: `b{i}.{param}` then `beta`.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, b) in self.backbones.iter().enumerate() {
            for (name, t) in b.named_params() {
                out.push((format!("b{i}.{name}"), t));
            }
        }
        out.push(("beta".into(), &self.beta));
        out
    }

    // ── MLP forward and loss ────────────────────────────────────────

    fn require_mlp(&self, what: &str) -> Result<()> {
        if self.config.backbone != BackboneKind::Mlp {
            return Err(Error::UnsupportedAnalysis(format!(
                "{what} consumes lag windows and applies to MLP backbones; \
                 LSTM models run over sequences"
            )));
        }
        Ok(())
    }

    fn check_windowed(&self, windowed: &WindowedDataset) -> Result<()> {
        if windowed.n != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "windows carry {} variables, model has {}",
                windowed.n,
                self.n()
            )));
        }
        if windowed.k != self.config.k {
            return Err(Error::DimensionMismatch(format!(
                "windows have lag depth {}, model expects {}",
                windowed.k, self.config.k
            )));
        }
        Ok(())
    }

    /// Gather the per-variable window matrix (batch×K) and target matrix
    /// (batch×N) for the chosen samples.
    fn gather(
        &self,
        windowed: &WindowedDataset,
        indices: &[usize],
    ) -> (Vec<Tensor>, Tensor) {
        let n = windowed.n;
        let k = windowed.k;
        let b = indices.len();
        let mut per_var = Vec::with_capacity(n);
        for i in 0..n {
            let mut data = Vec::with_capacity(b * k);
            for &idx in indices {
                let s = &windowed.samples[idx];
                data.extend_from_slice(&s.windows[i * k..(i + 1) * k]);
            }
            per_var.push(Tensor::new(&[b, k], data).expect("window shape"));
        }
        let mut targets = Vec::with_capacity(b * n);
        for &idx in indices {
            targets.extend_from_slice(&windowed.samples[idx].targets);
        }
        (per_var, Tensor::new(&[b, n], targets).expect("target shape"))
    }

    /// Forward the N backbones over window batches already on a graph,
    /// returning per-variable contribution nodes and the prediction node.
    fn forward_graph(
        &self,
        g: &mut Graph,
        window_vars: &[Var],
    ) -> Result<(Vec<Var>, Var, Vec<Var>)> {
        let n = self.n();
        let mut contrib_nodes = Vec::with_capacity(n);
        let mut param_vars = Vec::new();
        for (i, backbone) in self.backbones.iter().enumerate() {
            let Backbone::Mlp(mlp) = backbone else {
                return Err(Error::UnsupportedAnalysis("window forward on LSTM".into()));
            };
            let vars = mlp.register(g);
            param_vars.extend(vars.ordered());
            contrib_nodes.push(mlp.forward_on(g, &vars, window_vars[i])?);
        }
        let beta_var = g.leaf(self.beta.clone());
        let summed = g.add_n(&contrib_nodes)?;
        let preds = g.add_row(summed, beta_var)?;
        param_vars.push(beta_var);
        Ok((contrib_nodes, preds, param_vars))
    }

    /// Contributions and additive predictions for selected window samples.
    ///
    /// Entry (b, i, j) of the contribution block is c^{i→j} for sample b;
    /// prediction (b, j) is β_j plus the i-ascending sum of contributions.
    pub fn forward_contributions(
        &self,
        windowed: &WindowedDataset,
        indices: &[usize],
    ) -> Result<ForwardPass> {
        self.require_mlp("forward_contributions")?;
        self.check_windowed(windowed)?;
        let n = self.n();
        let b = indices.len();
        let (per_var, _targets) = self.gather(windowed, indices);
        let mut g = Graph::new();
        let window_vars: Vec<Var> = per_var.into_iter().map(|t| g.leaf(t)).collect();
        let (contrib_nodes, preds, _) = self.forward_graph(&mut g, &window_vars)?;

        let mut contributions = vec![0.0; b * n * n];
        for (i, &node) in contrib_nodes.iter().enumerate() {
            let value = g.value(node);
            for bi in 0..b {
                for j in 0..n {
                    contributions[bi * n * n + i * n + j] = value.at(bi, j);
                }
            }
        }
        Ok(ForwardPass {
            contributions,
            predictions: g.value(preds).data().to_vec(),
            batch: b,
            n,
        })
    }

    /// `forward_contributions` over every sample.
    pub fn forward_all(&self, windowed: &WindowedDataset) -> Result<ForwardPass> {
        let indices: Vec<usize> = (0..windowed.samples.len()).collect();
        self.forward_contributions(windowed, &indices)
    }

    /// Build the penalized loss over a batch of window samples:
    /// mean squared prediction error over batch and targets, plus
    /// λ/N · mean over batch of the summed |contribution|.
    pub fn loss_graph(&self, windowed: &WindowedDataset, indices: &[usize]) -> Result<LossGraph> {
        self.require_mlp("compute_loss")?;
        self.check_windowed(windowed)?;
        if indices.is_empty() {
            return Err(Error::DimensionMismatch("loss over an empty batch".into()));
        }
        let (per_var, targets) = self.gather(windowed, indices);
        let batch = indices.len();
        let n = self.n();
        let mut g = Graph::new();
        let window_vars: Vec<Var> = per_var.into_iter().map(|t| g.leaf(t)).collect();
        let (contrib_nodes, preds, param_vars) = self.forward_graph(&mut g, &window_vars)?;
        let target_var = g.leaf(targets);

        let err = g.sub(preds, target_var)?;
        let sq = g.square(err);
        let mse = g.mean(sq);

        let loss = if self.config.lambda > 0.0 {
            let mut abs_sums = Vec::with_capacity(n);
            for &c in &contrib_nodes {
                let a = g.abs_val(c);
                abs_sums.push(g.sum(a));
            }
            let total_abs = g.add_n(&abs_sums)?;
            let penalty = g.scale(total_abs, self.config.lambda / (n as f64 * batch as f64));
            g.add(mse, penalty)?
        } else {
            mse
        };
        Ok(LossGraph {
            graph: g,
            loss,
            param_vars,
        })
    }

    /// Loss value over a batch of window samples.
    pub fn compute_loss(&self, windowed: &WindowedDataset, indices: &[usize]) -> Result<f64> {
        let lg = self.loss_graph(windowed, indices)?;
        Ok(lg.graph.value(lg.loss).item())
    }

    // ── LSTM forward ────────────────────────────────────────────────

    /// Unroll the LSTM backbones over one replicate (batch of equal-length
    /// sequences is handled by the trainer; extraction uses batch 1).
    ///
    /// Returns, for each prediction step (target rows 1..T−1, 0-based),
    /// the per-variable contribution nodes and the prediction node.
    fn unroll_sequence(
        &self,
        g: &mut Graph,
        rows: &Tensor,
    ) -> Result<(Vec<Vec<Var>>, Vec<Var>, Vec<Var>)> {
        let n = self.n();
        let t_len = rows.rows();
        let mut param_vars = Vec::new();
        let mut lstm_vars = Vec::with_capacity(n);
        let mut states: Vec<LstmState> = Vec::with_capacity(n);
        for backbone in &self.backbones {
            let Backbone::Lstm(lstm) = backbone else {
                return Err(Error::UnsupportedAnalysis("sequence forward on MLP".into()));
            };
            let vars = lstm.register(g);
            param_vars.extend(vars.ordered());
            states.push(lstm.zero_state(g, 1));
            lstm_vars.push(vars);
        }
        let beta_var = g.leaf(self.beta.clone());
        param_vars.push(beta_var);

        let mut step_contribs = Vec::with_capacity(t_len - 1);
        let mut step_preds = Vec::with_capacity(t_len - 1);
        for t in 0..t_len - 1 {
            let mut contribs = Vec::with_capacity(n);
            for i in 0..n {
                let Backbone::Lstm(lstm) = &self.backbones[i] else {
                    unreachable!()
                };
                let x = g.leaf(Tensor::new(&[1, 1], vec![rows.at(t, i)])?);
                let (out, next) = lstm.step_on(g, &lstm_vars[i], x, states[i])?;
                states[i] = next;
                contribs.push(out);
            }
            let summed = g.add_n(&contribs)?;
            let pred = g.add_row(summed, beta_var)?;
            step_contribs.push(contribs);
            step_preds.push(pred);
        }
        Ok((step_contribs, step_preds, param_vars))
    }

    /// Contributions and predictions for every prediction step of every
    /// replicate of a normalized dataset (LSTM models).
    ///
    /// Each replicate contributes rows for target times 1..T_r−1 (0-based):
    /// every step with at least one past observation.
    pub fn forward_sequences(&self, normalized: &TimeSeriesDataset) -> Result<ForwardPass> {
        if self.config.backbone != BackboneKind::Lstm {
            return Err(Error::UnsupportedAnalysis(
                "forward_sequences applies to LSTM models".into(),
            ));
        }
        let n = self.n();
        if normalized.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} variables, model has {n}",
                normalized.n()
            )));
        }
        let mut contributions = Vec::new();
        let mut predictions = Vec::new();
        let mut batch = 0;
        for rep in &normalized.replicates {
            if rep.rows() < 2 {
                return Err(Error::DatasetTooShort { t: rep.rows(), k: 1 });
            }
            let mut g = Graph::new();
            let (step_contribs, step_preds, _) = self.unroll_sequence(&mut g, rep)?;
            for (contribs, pred) in step_contribs.iter().zip(&step_preds) {
                for &node in contribs {
                    let value = g.value(node);
                    for j in 0..n {
                        contributions.push(value.at(0, j));
                    }
                }
                predictions.extend_from_slice(g.value(*pred).data());
                batch += 1;
            }
        }
        Ok(ForwardPass {
            contributions,
            predictions,
            batch,
            n,
        })
    }
}

// ── Training ────────────────────────────────────────────────────────

fn train_len(rows: usize, val_fraction: f64) -> usize {
    let keep = crate::mathx::floor(rows as f64 * (1.0 - val_fraction)) as usize;
    keep.clamp(1, rows)
}

/// Train a NAVAR model on a dataset.
///
/// Normalization statistics come from the leading (1 − val_fraction) part
/// of every replicate and are stored in the model; validation MSE is
/// reported in normalized space, without the penalty term.
pub fn train(dataset: &TimeSeriesDataset, config: &NavarConfig) -> Result<(NavarModel, TrainReport)> {
    config.validate()?;
    let n = dataset.n();
    if n < 2 {
        return Err(Error::Config(format!("training needs N ≥ 2 variables, got {n}")));
    }
    if config.backbone == BackboneKind::Mlp {
        for rep in &dataset.replicates {
            if rep.rows() <= config.k {
                return Err(Error::DatasetTooShort {
                    t: rep.rows(),
                    k: config.k,
                });
            }
        }
    } else {
        for rep in &dataset.replicates {
            // One input step, one warm-up prediction, one trained prediction.
            if rep.rows() < 3 {
                return Err(Error::DatasetTooShort { t: rep.rows(), k: 2 });
            }
        }
    }

    let fit_fraction = 1.0 - config.val_fraction;
    let stats = fit_stats(dataset, fit_fraction)?;
    let normalized = apply_stats(dataset, &stats)?;

    let mut model = NavarModel::init(config, n, dataset.variable_names.clone(), stats)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let report = match config.backbone {
        BackboneKind::Mlp => train_mlp(&mut model, &normalized, config, &mut rng)?,
        BackboneKind::Lstm => train_lstm(&mut model, &normalized, config, &mut rng)?,
    };
    model.trained = true;
    Ok((model, report))
}

fn train_mlp(
    model: &mut NavarModel,
    normalized: &TimeSeriesDataset,
    config: &NavarConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    let windowed = window(normalized, config.k)?;
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let splits: Vec<usize> = normalized
        .replicates
        .iter()
        .map(|r| train_len(r.rows(), config.val_fraction))
        .collect();
    for (idx, s) in windowed.samples.iter().enumerate() {
        if s.t < splits[s.replicate] {
            train_idx.push(idx);
        } else {
            val_idx.push(idx);
        }
    }
    if train_idx.is_empty() {
        return Err(Error::DatasetTooShort {
            t: *splits.iter().min().unwrap_or(&0),
            k: config.k,
        });
    }

    let mut adam = AdamState::new(&tensor_shapes(model));
    let mut report = TrainReport::default();

    for epoch in 1..=config.epochs {
        train_idx.shuffle(rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in train_idx.chunks(config.batch_size) {
            let lg = model.loss_graph(&windowed, chunk)?;
            let loss = lg.graph.value(lg.loss).item();
            if !loss.is_finite() || loss > DIVERGENCE_BOUND {
                return Err(Error::Divergence { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
            apply_gradients(model, lg, config, &mut adam)?;
        }
        report.train_loss.push(epoch_loss / seen as f64);

        if !val_idx.is_empty() {
            report.val_mse.push(validation_mse_mlp(model, &windowed, &val_idx)?);
        }
        report.epochs_run = epoch;
    }
    Ok(report)
}

fn validation_mse_mlp(
    model: &NavarModel,
    windowed: &WindowedDataset,
    val_idx: &[usize],
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for chunk in val_idx.chunks(512) {
        let pass = model.forward_contributions(windowed, chunk)?;
        for (row, &idx) in chunk.iter().enumerate() {
            let targets = &windowed.samples[idx].targets;
            for j in 0..pass.n {
                let d = pass.prediction(row, j) - targets[j];
                total += d * d;
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

fn train_lstm(
    model: &mut NavarModel,
    normalized: &TimeSeriesDataset,
    config: &NavarConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    // Group replicates by length so sequences in one batch stay aligned.
    let mut groups: alloc::collections::BTreeMap<usize, Vec<usize>> =
        alloc::collections::BTreeMap::new();
    for (r, rep) in normalized.replicates.iter().enumerate() {
        groups.entry(rep.rows()).or_default().push(r);
    }

    let splits: Vec<usize> = normalized
        .replicates
        .iter()
        .map(|r| train_len(r.rows(), config.val_fraction))
        .collect();

    let mut adam = AdamState::new(&tensor_shapes(model));
    let mut report = TrainReport::default();
    // Validation rows are target times ≥ split; the last target time is
    // rows−1, so any split strictly below rows leaves a validation region.
    let has_val = normalized
        .replicates
        .iter()
        .zip(&splits)
        .any(|(r, &s)| s < r.rows());

    for epoch in 1..=config.epochs {
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        let mut val_total = 0.0;
        let mut val_count = 0usize;
        for (&t_len, members) in groups.iter() {
            let mut order = members.clone();
            order.shuffle(rng);
            for chunk in order.chunks(config.batch_size) {
                let (loss, vtot, vcnt) =
                    lstm_batch_step(model, normalized, config, chunk, t_len, &splits, &mut adam, epoch)?;
                epoch_loss += loss * chunk.len() as f64;
                seen += chunk.len();
                val_total += vtot;
                val_count += vcnt;
            }
        }
        report.train_loss.push(epoch_loss / seen as f64);
        if has_val && val_count > 0 {
            report.val_mse.push(val_total / val_count as f64);
        }
        report.epochs_run = epoch;
    }
    Ok(report)
}

/// One optimizer step over a batch of equal-length replicates, fully
/// unrolled. Returns (training loss, validation squared-error sum,
/// validation count).
#[allow(clippy::too_many_arguments)]
fn lstm_batch_step(
    model: &mut NavarModel,
    normalized: &TimeSeriesDataset,
    config: &NavarConfig,
    members: &[usize],
    t_len: usize,
    splits: &[usize],
    adam: &mut AdamState,
    epoch: usize,
) -> Result<(f64, f64, usize)> {
    let n = model.n();
    let b = members.len();
    let mut g = Graph::new();

    let mut param_vars = Vec::new();
    let mut lstm_vars = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for backbone in &model.backbones {
        let Backbone::Lstm(lstm) = backbone else {
            return Err(Error::UnsupportedAnalysis("lstm trainer on MLP".into()));
        };
        let vars = lstm.register(&mut g);
        param_vars.extend(vars.ordered());
        states.push(lstm.zero_state(&mut g, b));
        lstm_vars.push(vars);
    }
    let beta_var = g.leaf(model.beta.clone());
    param_vars.push(beta_var);

    // The temporal split is shared inside one batch; lengths are equal, so
    // all members have the same split point.
    let split = splits[members[0]];
    let mut train_terms = Vec::new();
    let mut abs_terms = Vec::new();
    let mut val_nodes: Vec<(Var, Tensor)> = Vec::new();

    for t in 0..t_len - 1 {
        let mut contribs = Vec::with_capacity(n);
        for i in 0..n {
            let Backbone::Lstm(lstm) = &model.backbones[i] else {
                unreachable!()
            };
            let mut col = Vec::with_capacity(b);
            for &r in members {
                col.push(normalized.replicates[r].at(t, i));
            }
            let x = g.leaf(Tensor::new(&[b, 1], col)?);
            let (out, next) = lstm.step_on(&mut g, &lstm_vars[i], x, states[i])?;
            states[i] = next;
            contribs.push(out);
        }
        let summed = g.add_n(&contribs)?;
        let pred = g.add_row(summed, beta_var)?;

        let target_row = t + 1;
        let mut target = Vec::with_capacity(b * n);
        for &r in members {
            for j in 0..n {
                target.push(normalized.replicates[r].at(target_row, j));
            }
        }
        let target_tensor = Tensor::new(&[b, n], target)?;

        if target_row < split {
            if target_row > LSTM_WARMUP {
                let target_var = g.leaf(target_tensor);
                let err = g.sub(pred, target_var)?;
                let sq = g.square(err);
                train_terms.push(g.mean(sq));
                if config.lambda > 0.0 {
                    for &c in &contribs {
                        let a = g.abs_val(c);
                        abs_terms.push(g.sum(a));
                    }
                }
            }
        } else {
            val_nodes.push((pred, target_tensor));
        }
    }

    if train_terms.is_empty() {
        return Err(Error::DatasetTooShort { t: t_len, k: 2 });
    }
    let steps = train_terms.len();
    let mse_sum = g.add_n(&train_terms)?;
    let mse = g.scale(mse_sum, 1.0 / steps as f64);
    let loss = if abs_terms.is_empty() {
        mse
    } else {
        let abs_sum = g.add_n(&abs_terms)?;
        let penalty = g.scale(
            abs_sum,
            config.lambda / (n as f64 * b as f64 * steps as f64),
        );
        g.add(mse, penalty)?
    };

    let loss_value = g.value(loss).item();
    if !loss_value.is_finite() || loss_value > DIVERGENCE_BOUND {
        return Err(Error::Divergence {
            epoch,
            loss: loss_value,
        });
    }

    let mut val_total = 0.0;
    let mut val_count = 0usize;
    for (pred, target) in &val_nodes {
        let pv = g.value(*pred);
        for (p, t) in pv.data().iter().zip(target.data()) {
            let d = p - t;
            val_total += d * d;
            val_count += 1;
        }
    }

    apply_gradients(
        model,
        LossGraph {
            graph: g,
            loss,
            param_vars,
        },
        config,
        adam,
    )?;
    Ok((loss_value, val_total, val_count))
}

fn tensor_shapes(model: &mut NavarModel) -> Vec<Tensor> {
    model
        .params_mut()
        .iter()
        .map(|t| Tensor::zeros(t.shape()))
        .collect()
}

fn apply_gradients(
    model: &mut NavarModel,
    mut lg: LossGraph,
    config: &NavarConfig,
    adam: &mut AdamState,
) -> Result<()> {
    lg.graph.backward(lg.loss)?;
    let grads: Vec<Tensor> = lg
        .param_vars
        .iter()
        .map(|&v| lg.graph.grad(v).expect("backward ran"))
        .collect();
    let mut params = model.params_mut();
    adam_step_refs(&mut params, &grads, adam, config.learning_rate, config.mu)
}
