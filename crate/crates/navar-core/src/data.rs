//! Time-series containers, synthetic ground-truth generators,
//! normalization, and lag-window construction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mathx;
use crate::numerics::Tensor;
use crate::scoring::GroundTruthGraph;

/// Steps discarded from the front of every generated series so initial
/// transients do not contaminate the data.
pub const BURN_IN: usize = 100;

/// Per-variable normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// A multivariate time series: one or more replicate runs of the same
/// system, each a T_r×N matrix (row-major, row = time step).
#[derive(Debug, Clone)]
pub struct TimeSeriesDataset {
    pub replicates: Vec<Tensor>,
    pub variable_names: Vec<String>,
    pub truth: Option<GroundTruthGraph>,
    /// Present once the data has been normalized.
    pub norm_stats: Option<NormStats>,
}

impl TimeSeriesDataset {
    pub fn from_single(matrix: Tensor, variable_names: Vec<String>) -> Self {
        TimeSeriesDataset {
            replicates: vec![matrix],
            variable_names,
            truth: None,
            norm_stats: None,
        }
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.replicates.first().map_or(0, |r| r.cols())
    }

    /// Total number of time steps across replicates.
    pub fn total_steps(&self) -> usize {
        self.replicates.iter().map(|r| r.rows()).sum()
    }

    pub fn replicate_lengths(&self) -> Vec<usize> {
        self.replicates.iter().map(|r| r.rows()).collect()
    }

    fn check_rectangular(&self) -> Result<()> {
        let n = self.n();
        for (r, rep) in self.replicates.iter().enumerate() {
            if rep.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "replicate {r} has {} variables, expected {n}",
                    rep.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Fit per-variable mean and population std on the first `fit_fraction` of
/// every replicate, pooled.
///
/// `fit_fraction` of 1.0 fits on everything. Errors if a variable is
/// constant on the fit range.
pub fn fit_stats(dataset: &TimeSeriesDataset, fit_fraction: f64) -> Result<NormStats> {
    if !(fit_fraction > 0.0 && fit_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "fit_fraction must be in (0, 1], got {fit_fraction}"
        )));
    }
    dataset.check_rectangular()?;
    let n = dataset.n();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for rep in &dataset.replicates {
        let t_fit = fit_len(rep.rows(), fit_fraction);
        for t in 0..t_fit {
            for j in 0..n {
                sums[j] += rep.at(t, j);
                counts[j] += 1;
            }
        }
    }
    let mean: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| s / c as f64)
        .collect();
    let mut sq = vec![0.0; n];
    for rep in &dataset.replicates {
        let t_fit = fit_len(rep.rows(), fit_fraction);
        for t in 0..t_fit {
            for j in 0..n {
                let d = rep.at(t, j) - mean[j];
                sq[j] += d * d;
            }
        }
    }
    let mut std = Vec::with_capacity(n);
    for j in 0..n {
        let s = mathx::sqrt(sq[j] / counts[j] as f64);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::ConstantVariable {
                index: j,
                name: dataset
                    .variable_names
                    .get(j)
                    .cloned()
                    .unwrap_or_else(|| format!("x{j}")),
            });
        }
        std.push(s);
    }
    Ok(NormStats { mean, std })
}

fn fit_len(rows: usize, fraction: f64) -> usize {
    let t = mathx::floor(rows as f64 * fraction) as usize;
    t.clamp(1, rows)
}

/// Apply given stats to every value of every replicate.
pub fn apply_stats(dataset: &TimeSeriesDataset, stats: &NormStats) -> Result<TimeSeriesDataset> {
    let n = dataset.n();
    if stats.mean.len() != n || stats.std.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "stats cover {} variables, dataset has {n}",
            stats.mean.len()
        )));
    }
    let mut out = dataset.clone();
    for rep in &mut out.replicates {
        let cols = rep.cols();
        for (idx, v) in rep.data_mut().iter_mut().enumerate() {
            let j = idx % cols;
            *v = (*v - stats.mean[j]) / stats.std[j];
        }
    }
    out.norm_stats = Some(stats.clone());
    Ok(out)
}

/// Fit stats on the leading `fit_fraction` of each replicate and apply them
/// everywhere.
pub fn normalize(
    dataset: &TimeSeriesDataset,
    fit_fraction: f64,
) -> Result<(TimeSeriesDataset, NormStats)> {
    let stats = fit_stats(dataset, fit_fraction)?;
    let normalized = apply_stats(dataset, &stats)?;
    Ok((normalized, stats))
}

/// One training sample: the N per-variable lag windows plus the N targets.
#[derive(Debug, Clone)]
pub struct WindowSample {
    /// Flat N×K: variable i's window occupies [i*K, (i+1)*K), ordered
    /// oldest to newest (index K−1 holds lag 1).
    pub windows: Vec<f64>,
    /// The N observations at the target time step.
    pub targets: Vec<f64>,
    /// Which replicate the sample came from.
    pub replicate: usize,
    /// Target time step within the replicate (0-based).
    pub t: usize,
}

/// All valid lag windows of a dataset. Windows never cross replicate
/// boundaries, so there are Σ_r (T_r − K) samples.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub samples: Vec<WindowSample>,
    pub k: usize,
    pub n: usize,
}

/// Enumerate every valid window of depth `k`.
pub fn window(dataset: &TimeSeriesDataset, k: usize) -> Result<WindowedDataset> {
    if k == 0 {
        return Err(Error::Config("lag depth k must be ≥ 1".to_string()));
    }
    dataset.check_rectangular()?;
    let n = dataset.n();
    let mut samples = Vec::new();
    for (r, rep) in dataset.replicates.iter().enumerate() {
        let t_r = rep.rows();
        if t_r <= k {
            return Err(Error::DatasetTooShort { t: t_r, k });
        }
        for t in k..t_r {
            let mut windows = Vec::with_capacity(n * k);
            for i in 0..n {
                for lag_pos in (t - k)..t {
                    windows.push(rep.at(lag_pos, i));
                }
            }
            let targets = (0..n).map(|j| rep.at(t, j)).collect();
            samples.push(WindowSample {
                windows,
                targets,
                replicate: r,
                t,
            });
        }
    }
    Ok(WindowedDataset { samples, k, n })
}

// ── Synthetic generators ────────────────────────────────────────────

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Three-variable nonlinear system, all links at lag 1:
///   x1 ← cos(x2) + tanh(x3),  x2 ← 0.35·x2 + x3,  x3 ← |0.5·x1| + sin(2·x2),
/// each plus standard normal noise. True links: 2→1, 3→1, 2→2, 3→2, 1→3, 2→3.
pub fn generate_toy3(t: usize, seed: u64) -> Result<TimeSeriesDataset> {
    simulate_toy3(t, seed, 1.0)
}

/// `generate_toy3` with an explicit noise standard deviation. Noise 0 with
/// zero initial values follows the deterministic recurrence exactly.
pub fn simulate_toy3(t: usize, seed: u64, noise_std: f64) -> Result<TimeSeriesDataset> {
    if t < 10 {
        return Err(Error::Config(format!("toy3 needs T ≥ 10, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = t + BURN_IN;
    let mut data = Vec::with_capacity(total * 3);
    let mut prev = [
        noise_std * standard_normal(&mut rng),
        noise_std * standard_normal(&mut rng),
        noise_std * standard_normal(&mut rng),
    ];
    for _ in 0..total {
        let x1 = mathx::cos(prev[1]) + mathx::tanh(prev[2]) + noise_std * standard_normal(&mut rng);
        let x2 = 0.35 * prev[1] + prev[2] + noise_std * standard_normal(&mut rng);
        let x3 =
            mathx::abs(0.5 * prev[0]) + mathx::sin(2.0 * prev[1]) + noise_std * standard_normal(&mut rng);
        prev = [x1, x2, x3];
        data.extend_from_slice(&prev);
    }
    let kept = data[BURN_IN * 3..].to_vec();
    let matrix = Tensor::new(&[t, 3], kept)?;

    let mut adjacency = vec![false; 9];
    // (i→j) entries, 0-based: 2→1, 3→1, 2→2, 3→2, 1→3, 2→3
    for (i, j) in [(1, 0), (2, 0), (1, 1), (2, 1), (0, 2), (1, 2)] {
        adjacency[i * 3 + j] = true;
    }
    let truth = GroundTruthGraph {
        adjacency,
        n: 3,
        lags: Some(
            [(1, 0), (2, 0), (1, 1), (2, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(i, j)| ((i, j), vec![1]))
                .collect(),
        ),
    };

    let mut ds = TimeSeriesDataset::from_single(
        matrix,
        vec!["x1".to_string(), "x2".to_string(), "x3".to_string()],
    );
    ds.truth = Some(truth);
    Ok(ds)
}

/// Two-variable system with links spread over several lags:
///   x ← cos(y₋₃ + y₋₄ + y₋₅),  y ← x₋₂ · x₋₄,
/// plus N(0, 0.1) noise (0.1 read as the standard deviation). True links:
/// y→x at lags {3,4,5} and x→y at lags {2,4}.
pub fn generate_lag_scm(t: usize, seed: u64) -> Result<TimeSeriesDataset> {
    simulate_lag_scm(t, seed, 0.1)
}

/// `generate_lag_scm` with an explicit noise standard deviation.
pub fn simulate_lag_scm(t: usize, seed: u64, noise_std: f64) -> Result<TimeSeriesDataset> {
    if t < 10 {
        return Err(Error::Config(format!("lag SCM needs T ≥ 10, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = t + BURN_IN;
    const HIST: usize = 5;
    let mut xs: Vec<f64> = (0..HIST).map(|_| noise_std * standard_normal(&mut rng)).collect();
    let mut ys: Vec<f64> = (0..HIST).map(|_| noise_std * standard_normal(&mut rng)).collect();
    let mut data = Vec::with_capacity(total * 2);
    for step in 0..total {
        let cur = HIST + step;
        let x = mathx::cos(ys[cur - 3] + ys[cur - 4] + ys[cur - 5])
            + noise_std * standard_normal(&mut rng);
        let y = xs[cur - 2] * xs[cur - 4] + noise_std * standard_normal(&mut rng);
        xs.push(x);
        ys.push(y);
        data.push(x);
        data.push(y);
    }
    let kept = data[BURN_IN * 2..].to_vec();
    let matrix = Tensor::new(&[t, 2], kept)?;

    let mut adjacency = vec![false; 4];
    adjacency[2] = true; // y → x  (row 1, col 0)
    adjacency[1] = true; // x → y  (row 0, col 1)
    let truth = GroundTruthGraph {
        adjacency,
        n: 2,
        lags: Some(vec![((1, 0), vec![3, 4, 5]), ((0, 1), vec![2, 4])]),
    };

    let mut ds =
        TimeSeriesDataset::from_single(matrix, vec!["x".to_string(), "y".to_string()]);
    ds.truth = Some(truth);
    Ok(ds)
}

/// Draw sparse lag-coefficient matrices for a linear VAR.
///
/// Each entry of each N×N matrix is nonzero with probability `density`;
/// nonzero magnitudes sit in `coeff_scale`·[0.3, 1.0] with a random sign,
/// so true links stay detectable after stabilization.
pub fn draw_var_coefficients(
    n: usize,
    k: usize,
    density: f64,
    coeff_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Tensor>> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Config(format!(
            "density must be in (0, 1], got {density}"
        )));
    }
    if n == 0 || k == 0 {
        return Err(Error::Config(format!("need n ≥ 1 and k ≥ 1, got n={n}, k={k}")));
    }
    let magnitude = Uniform::new(0.3, 1.0);
    let mut mats = Vec::with_capacity(k);
    for _ in 0..k {
        let mut data = vec![0.0; n * n];
        for v in data.iter_mut() {
            if rng.gen::<f64>() < density {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                *v = sign * coeff_scale * magnitude.sample(rng);
            }
        }
        mats.push(Tensor::new(&[n, n], data)?);
    }
    Ok(mats)
}

/// Spectral radius of the VAR companion matrix, estimated by power
/// iteration on the norm growth rate.
pub fn companion_spectral_radius(coeffs: &[Tensor], iterations: usize) -> f64 {
    let k = coeffs.len();
    let n = coeffs[0].rows();
    let dim = n * k;
    // State layout: [x_t, x_{t−1}, ..., x_{t−k+1}], each block length n.
    let mut state = vec![0.0; dim];
    for (i, v) in state.iter_mut().enumerate() {
        // Deterministic, aperiodic start vector.
        *v = mathx::sin(1.0 + 2.7 * i as f64) + 0.1;
    }
    let warm = iterations / 2;
    let mut log_growth = 0.0;
    let mut counted = 0usize;
    for it in 0..iterations {
        let mut next = vec![0.0; dim];
        // Top block: Σ_k A_kᵀ? — here scores propagate x_{t+1}[j] = Σ_i Σ_k [A_k]^{ij} x_{t−k+1}[i].
        for (lag, a) in coeffs.iter().enumerate() {
            let block = &state[lag * n..(lag + 1) * n];
            for i in 0..n {
                let xi = block[i];
                for j in 0..n {
                    next[j] += a.at(i, j) * xi;
                }
            }
        }
        // Shift blocks down.
        for lag in 1..k {
            for i in 0..n {
                next[lag * n + i] = state[(lag - 1) * n + i];
            }
        }
        let norm = mathx::sqrt(next.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 || !norm.is_finite() {
            return if norm == 0.0 { 0.0 } else { f64::INFINITY };
        }
        for v in next.iter_mut() {
            *v /= norm;
        }
        if it >= warm {
            log_growth += mathx::ln(norm);
            counted += 1;
        }
        state = next;
    }
    if counted == 0 {
        return 0.0;
    }
    mathx::exp(log_growth / counted as f64)
}

/// Rescale lag matrices so the companion spectral radius sits at `target`.
///
/// Scaling A_k by s^k scales every companion eigenvalue by exactly s.
pub fn stabilize_coefficients(coeffs: &mut [Tensor], target: f64) -> Result<()> {
    let rho = companion_spectral_radius(coeffs, 400);
    if !rho.is_finite() || rho == 0.0 {
        return Err(Error::GenerationFailure(format!(
            "spectral radius estimate unusable: {rho}"
        )));
    }
    let s = target / rho;
    for (lag, a) in coeffs.iter_mut().enumerate() {
        let factor = mathx::powi(s, (lag + 1) as u64);
        for v in a.data_mut().iter_mut() {
            *v *= factor;
        }
    }
    Ok(())
}

/// Truth adjacency implied by lag matrices: i→j iff any [A_k]^{ij} ≠ 0.
pub fn truth_from_coefficients(coeffs: &[Tensor]) -> GroundTruthGraph {
    let n = coeffs[0].rows();
    let mut adjacency = vec![false; n * n];
    let mut lags: Vec<((usize, usize), Vec<usize>)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let link_lags: Vec<usize> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, a)| a.at(i, j) != 0.0)
                .map(|(lag, _)| lag + 1)
                .collect();
            if !link_lags.is_empty() {
                adjacency[i * n + j] = true;
                lags.push(((i, j), link_lags));
            }
        }
    }
    GroundTruthGraph {
        adjacency,
        n,
        lags: Some(lags),
    }
}

/// Simulate a linear VAR with given lag matrices and unit normal noise.
pub fn simulate_var(coeffs: &[Tensor], t: usize, seed: u64) -> Result<Tensor> {
    let k = coeffs.len();
    let n = coeffs[0].rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = t + BURN_IN;
    let mut history: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| standard_normal(&mut rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(total * n);
    for _ in 0..total {
        let mut next: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        for (lag, a) in coeffs.iter().enumerate() {
            let past = &history[history.len() - 1 - lag];
            for i in 0..n {
                let xi = past[i];
                for j in 0..n {
                    next[j] += a.at(i, j) * xi;
                }
            }
        }
        data.extend_from_slice(&next);
        history.push(next);
        if history.len() > k {
            history.remove(0);
        }
    }
    Tensor::new(&[t, n], data[BURN_IN * n..].to_vec())
}

/// Generate a stationary sparse linear VAR dataset with ground truth.
///
/// Coefficients are redrawn (up to 100 times) until the stabilized system
/// verifies a spectral radius below 0.95.
pub fn generate_linear_var(
    n: usize,
    t: usize,
    k: usize,
    density: f64,
    coeff_scale: f64,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    if t < 10 {
        return Err(Error::Config(format!("linear VAR needs T ≥ 10, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..100 {
        let mut coeffs = draw_var_coefficients(n, k, density, coeff_scale, &mut rng)?;
        let all_zero = coeffs.iter().all(|a| a.data().iter().all(|&v| v == 0.0));
        if !all_zero {
            if stabilize_coefficients(&mut coeffs, 0.9).is_err() {
                continue;
            }
            let rho = companion_spectral_radius(&coeffs, 400);
            if !(rho < 0.95) {
                continue;
            }
        }
        let matrix = simulate_var(&coeffs, t, seed ^ 0x005e_ed0f_da7a)?;
        let truth = truth_from_coefficients(&coeffs);
        let mut ds = TimeSeriesDataset::from_single(
            matrix,
            (0..n).map(|j| format!("x{}", j + 1)).collect(),
        );
        ds.truth = Some(truth);
        return Ok(ds);
    }
    Err(Error::GenerationFailure(
        "no stable coefficient draw within 100 attempts".to_string(),
    ))
}
