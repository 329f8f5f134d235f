//! Causal-score extraction and evaluation: contribution histories, score
//! matrices, ROC/AUROC against ground truth, and the lag-masking analysis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::backbones::{Backbone, BackboneKind};
use crate::data::{apply_stats, window, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::mathx;
use crate::model::NavarModel;
use crate::numerics::{Graph, Tensor, Var};

/// Boolean adjacency over variables: entry (i, j) means i Granger-causes j.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthGraph {
    /// Flat N×N, row-major: `adjacency[i * n + j]` is the link i→j.
    pub adjacency: Vec<bool>,
    pub n: usize,
    /// Optional per-link lag annotations from generators.
    pub lags: Option<Vec<((usize, usize), Vec<usize>)>>,
}

impl GroundTruthGraph {
    pub fn new(adjacency: Vec<bool>, n: usize) -> Result<Self> {
        if adjacency.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency has {} entries for n={n}",
                adjacency.len()
            )));
        }
        Ok(GroundTruthGraph {
            adjacency,
            n,
            lags: None,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// All true links as (from, to) pairs.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.at(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Contribution history c_t^{i→j} over all valid time steps, in
/// normalized space.
#[derive(Debug, Clone)]
pub struct ContributionTensor {
    /// Flat steps×N×N: entry (s, i, j) = c_s^{i→j}.
    pub values: Vec<f64>,
    pub steps: usize,
    pub n: usize,
    /// Leading steps skipped per replicate: K for MLP windows, 1 for LSTM
    /// sequences (every step after the first input is scored).
    pub lag: usize,
}

impl ContributionTensor {
    pub fn at(&self, s: usize, i: usize, j: usize) -> f64 {
        self.values[s * self.n * self.n + i * self.n + j]
    }

    /// The time series of contributions for one ordered pair.
    pub fn series(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.steps).map(|s| self.at(s, i, j)).collect()
    }

    /// β_j plus the i-ascending contribution sum, per (step, target).
    pub fn summed_predictions(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "beta has {} entries for n={}",
                beta.len(),
                self.n
            )));
        }
        let mut out = Vec::with_capacity(self.steps * self.n);
        for s in 0..self.steps {
            for j in 0..self.n {
                let mut acc = 0.0;
                for i in 0..self.n {
                    acc += self.at(s, i, j);
                }
                out.push(acc + beta[j]);
            }
        }
        Ok(out)
    }

    /// Predictions with variable `excluded`'s contribution replaced by its
    /// time-mean: the "exclude i" Granger ablation, with no refitting.
    pub fn ablated_predictions(&self, beta: &[f64], excluded: usize) -> Result<Vec<f64>> {
        if excluded >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "variable {excluded} out of range for n={}",
                self.n
            )));
        }
        if beta.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "beta has {} entries for n={}",
                beta.len(),
                self.n
            )));
        }
        let mut means = vec![0.0; self.n];
        for s in 0..self.steps {
            for (j, m) in means.iter_mut().enumerate() {
                *m += self.at(s, excluded, j);
            }
        }
        for m in means.iter_mut() {
            *m /= self.steps as f64;
        }
        let mut out = Vec::with_capacity(self.steps * self.n);
        for s in 0..self.steps {
            for j in 0..self.n {
                let mut acc = 0.0;
                for i in 0..self.n {
                    acc += if i == excluded {
                        means[j]
                    } else {
                        self.at(s, i, j)
                    };
                }
                out.push(acc + beta[j]);
            }
        }
        Ok(out)
    }
}

/// N×N causal scores: entry (i, j) scores the link i→j.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    /// Flat N×N, row-major.
    pub scores: Vec<f64>,
    pub n: usize,
    /// Whether diagonal entries carry meaningful scores (they do here;
    /// evaluation decides whether to ignore them).
    pub self_links_scored: bool,
}

impl ScoreMatrix {
    pub fn new(scores: Vec<f64>, n: usize) -> Result<Self> {
        if scores.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "score matrix has {} entries for n={n}",
                scores.len()
            )));
        }
        Ok(ScoreMatrix {
            scores,
            n,
            self_links_scored: true,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.n + j]
    }
}

/// One operating point of a ROC sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
    /// Scores at or above this value are predicted positive.
    pub threshold: f64,
}

/// ROC curve points (threshold descending) plus the area under the curve.
#[derive(Debug, Clone)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auroc: f64,
}

// ── Extraction and scoring ──────────────────────────────────────────

/// Full contribution history of a trained model over a raw dataset.
///
/// The dataset is normalized here with the model's stored statistics, so
/// callers pass the same data they trained on (or new raw data).
pub fn extract_contributions(
    model: &NavarModel,
    dataset: &TimeSeriesDataset,
) -> Result<ContributionTensor> {
    let n = model.n();
    if dataset.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} variables, model has {n}",
            dataset.n()
        )));
    }
    let normalized = apply_stats(dataset, &model.norm_stats)?;
    match model.config.backbone {
        BackboneKind::Mlp => {
            let windowed = window(&normalized, model.config.k)?;
            let pass = model.forward_all(&windowed)?;
            Ok(ContributionTensor {
                values: pass.contributions,
                steps: pass.batch,
                n,
                lag: model.config.k,
            })
        }
        BackboneKind::Lstm => {
            let pass = model.forward_sequences(&normalized)?;
            Ok(ContributionTensor {
                values: pass.contributions,
                steps: pass.batch,
                n,
                lag: 1,
            })
        }
    }
}

/// Population standard deviation with an exact constant short-circuit, so
/// a constant series scores exactly zero.
fn population_std(series: &[f64]) -> f64 {
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return 0.0;
    }
    let mean: f64 = series.iter().sum::<f64>() / series.len() as f64;
    let ss: f64 = series.iter().map(|&v| (v - mean) * (v - mean)).sum();
    mathx::sqrt(ss / series.len() as f64)
}

/// Score every ordered pair by the standard deviation of its contribution
/// series: constant contributions mean no Granger influence.
pub fn score_links(contribs: &ContributionTensor) -> Result<ScoreMatrix> {
    if contribs.steps < 2 {
        return Err(Error::TooFewSteps {
            steps: contribs.steps,
        });
    }
    let n = contribs.n;
    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let series = contribs.series(i, j);
            scores[i * n + j] = population_std(&series);
        }
    }
    ScoreMatrix::new(scores, n)
}

/// AUROC of a score matrix against ground truth, with Mann-Whitney tie
/// handling (tied positive-negative pairs count half).
pub fn auroc(
    scores: &ScoreMatrix,
    truth: &GroundTruthGraph,
    ignore_self_links: bool,
) -> Result<RocCurve> {
    if scores.n != truth.n {
        return Err(Error::DimensionMismatch(format!(
            "scores are {}×{} but truth is {}×{}",
            scores.n, scores.n, truth.n, truth.n
        )));
    }
    let mut items: Vec<(f64, bool)> = Vec::new();
    for i in 0..scores.n {
        for j in 0..scores.n {
            if ignore_self_links && i == j {
                continue;
            }
            items.push((scores.at(i, j), truth.at(i, j)));
        }
    }
    let positives = items.iter().filter(|(_, l)| *l).count();
    let negatives = items.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuroc {
            positives,
            negatives,
        });
    }

    // Midrank statistic: AUROC = (Σ ranks of positives − P(P+1)/2) / (P·N).
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].0.total_cmp(&items[b].0));
    let mut rank_sum_pos = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let mut end = idx + 1;
        while end < order.len() && items[order[end]].0 == items[order[idx]].0 {
            end += 1;
        }
        // 1-based ranks idx+1 ..= end share the midrank.
        let midrank = (idx + 1 + end) as f64 / 2.0;
        for &item in &order[idx..end] {
            if items[item].1 {
                rank_sum_pos += midrank;
            }
        }
        idx = end;
    }
    let p = positives as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    let auroc_value = u / (p * negatives as f64);

    // Threshold sweep for the curve, descending score.
    let mut thresholds: Vec<f64> = items.iter().map(|(s, _)| *s).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut points = vec![RocPoint {
        false_positive_rate: 0.0,
        true_positive_rate: 0.0,
        threshold: f64::INFINITY,
    }];
    for &th in &thresholds {
        let tp = items.iter().filter(|(s, l)| *l && *s >= th).count();
        let fp = items.iter().filter(|(s, l)| !*l && *s >= th).count();
        points.push(RocPoint {
            false_positive_rate: fp as f64 / negatives as f64,
            true_positive_rate: tp as f64 / positives as f64,
            threshold: th,
        });
    }
    Ok(RocCurve {
        points,
        auroc: auroc_value,
    })
}

/// All ordered pairs ranked by score, descending; ties break on (i, j).
pub fn rank_links(scores: &ScoreMatrix) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(scores.n * scores.n);
    for i in 0..scores.n {
        for j in 0..scores.n {
            out.push((i, j, scores.at(i, j)));
        }
    }
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    out
}

/// One row of the lag-masking analysis for a pair (i, j).
#[derive(Debug, Clone)]
pub struct LagRecord {
    /// Lags 1..=k were kept; lags above k were masked to 0.
    pub k: usize,
    /// Causal score of the masked contribution series.
    pub score: f64,
    /// Mean squared distance between masked contributions and the target.
    pub mse: f64,
    /// score(k) − score(k−1); k=1 compares against the fully masked model.
    pub delta_score: f64,
}

/// Mask a fitted MLP model's inputs above each lag cutoff and trace how the
/// causal score of the pair (i, j) builds up lag by lag.
///
/// Masked inputs are set to 0, the normalized mean. Only variable i's
/// window matters: contributions are additive, so the pair's series is
/// independent of every other backbone.
pub fn lag_mask_analysis(
    model: &NavarModel,
    dataset: &TimeSeriesDataset,
    from: usize,
    to: usize,
) -> Result<Vec<LagRecord>> {
    if model.config.backbone != BackboneKind::Mlp {
        return Err(Error::UnsupportedAnalysis(
            "lag masking needs explicit lag inputs; only MLP backbones have them".into(),
        ));
    }
    let n = model.n();
    if dataset.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} variables, model has {n}",
            dataset.n()
        )));
    }
    if from >= n || to >= n {
        return Err(Error::DimensionMismatch(format!(
            "pair ({from}, {to}) out of range for n={n}"
        )));
    }
    let k_max = model.config.k;
    let normalized = apply_stats(dataset, &model.norm_stats)?;
    let windowed = window(&normalized, k_max)?;
    let steps = windowed.samples.len();

    // Variable `from`'s windows (steps×K) and variable `to`'s targets.
    let mut base_windows = Vec::with_capacity(steps * k_max);
    let mut targets = Vec::with_capacity(steps);
    for s in &windowed.samples {
        base_windows.extend_from_slice(&s.windows[from * k_max..(from + 1) * k_max]);
        targets.push(s.targets[to]);
    }

    let Backbone::Mlp(mlp) = &model.backbones[from] else {
        unreachable!("kind checked above")
    };

    let mut records = Vec::with_capacity(k_max);
    let mut prev_score = 0.0; // fully masked (k=0): constant input, score 0
    for keep in 0..=k_max {
        // Window index idx holds lag K−idx; masking lags > keep zeroes
        // indices below K−keep.
        let mut masked = base_windows.clone();
        let cutoff = k_max - keep;
        for s in 0..steps {
            for idx in 0..cutoff {
                masked[s * k_max + idx] = 0.0;
            }
        }
        let mut g = Graph::new();
        let input: Var = g.leaf(Tensor::new(&[steps, k_max], masked)?);
        let vars = mlp.register(&mut g);
        let out = mlp.forward_on(&mut g, &vars, input)?;
        let series: Vec<f64> = (0..steps).map(|s| g.value(out).at(s, to)).collect();

        let score = population_std(&series);
        let mse = series
            .iter()
            .zip(&targets)
            .map(|(c, t)| (c - t) * (c - t))
            .sum::<f64>()
            / steps as f64;
        if keep > 0 {
            records.push(LagRecord {
                k: keep,
                score,
                mse,
                delta_score: score - prev_score,
            });
        }
        prev_score = score;
    }
    Ok(records)
}
