//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its measured runtime. Run with
//! `cargo test -p navar --test acceptance`.

use std::fs;
use std::time::Instant;

use navar::checkpoint::save_checkpoint;
use navar::io::{load_csv, save_csv, save_scores_csv, save_truth_csv};
use navar::pipeline::{bench, generate, GenerateParams, ScmKind};
use navar::presets;
use navar_core::backbones::BackboneKind;
use navar_core::data::{
    draw_var_coefficients, generate_lag_scm, generate_toy3, simulate_var,
    stabilize_coefficients, NormStats, TimeSeriesDataset, WindowSample, WindowedDataset,
};
use navar_core::model::{train, NavarConfig, NavarModel};
use navar_core::numerics::Tensor;
use navar_core::scoring::{
    auroc, extract_contributions, lag_mask_analysis, rank_links, score_links, GroundTruthGraph,
    ScoreMatrix,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOY3_TRUE_LINKS: [(usize, usize); 6] = [(1, 0), (2, 0), (1, 1), (2, 1), (0, 2), (1, 2)];

fn pass(criterion: &str, detail: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("[PASS] {criterion}: {detail} ({elapsed:.1}s)");
    assert!(
        elapsed < budget_s,
        "[FAIL] {criterion}: runtime {elapsed:.1}s exceeded budget {budget_s}s"
    );
}

/// Criterion 3/9 training setup: small MLP on the three-variable system.
fn toy3_config(seed: u64) -> NavarConfig {
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
        seed,
        val_fraction: 0.2,
    }
}

// ── 1. Gradient correctness ─────────────────────────────────────────

#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    let n = 3;
    let config = NavarConfig {
        k: 2,
        hidden_units: 8,
        lambda: 0.12,
        seed: 41,
        ..toy3_config(41)
    };
    let stats = NormStats {
        mean: vec![0.0; n],
        std: vec![1.0; n],
    };
    let names = vec!["x1".into(), "x2".into(), "x3".into()];
    let model = NavarModel::init(&config, n, names, stats).unwrap();

    // A random batch of 8 window samples.
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let samples: Vec<WindowSample> = (0..8)
        .map(|b| WindowSample {
            windows: (0..n * 2).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
            targets: (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
            replicate: 0,
            t: 2 + b,
        })
        .collect();
    let windowed = WindowedDataset { samples, k: 2, n };
    let indices: Vec<usize> = (0..windowed.samples.len()).collect();

    let mut lg = model.loss_graph(&windowed, &indices).unwrap();
    lg.graph.backward(lg.loss).unwrap();
    let analytic: Vec<f64> = lg
        .param_vars
        .iter()
        .flat_map(|&v| lg.graph.grad(v).unwrap().into_data())
        .collect();

    let flat: Vec<f64> = model
        .named_tensors()
        .iter()
        .flat_map(|(_, t)| t.data().to_vec())
        .collect();
    assert_eq!(analytic.len(), flat.len());

    let loss_at = |vals: &[f64]| -> f64 {
        let mut m = model.clone();
        let mut offset = 0;
        for p in m.params_mut() {
            let len = p.numel();
            p.data_mut().copy_from_slice(&vals[offset..offset + len]);
            offset += len;
        }
        m.compute_loss(&windowed, &indices).unwrap()
    };

    let h = 1e-5;
    let mut probe = flat.clone();
    let mut worst = 0.0f64;
    for e in 0..flat.len() {
        let orig = probe[e];
        probe[e] = orig + h;
        let plus = loss_at(&probe);
        probe[e] = orig - h;
        let minus = loss_at(&probe);
        probe[e] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let denom = analytic[e].abs().max(numeric.abs()).max(1e-6);
        let rel = (analytic[e] - numeric).abs() / denom;
        worst = worst.max(rel);
        assert!(
            rel <= 1e-4,
            "[FAIL] criterion 1: param {e}: analytic {} vs numeric {numeric} (rel {rel:.2e})",
            analytic[e]
        );
    }
    pass(
        "criterion 1 (gradient correctness)",
        &format!("{} parameters, worst relative error {worst:.2e}", flat.len()),
        started,
        10.0,
    );
}

// ── 2. Additivity invariant ─────────────────────────────────────────

#[test]
fn criterion_2_additivity_invariant() {
    let started = Instant::now();
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let n = 2 + (seed % 4) as usize;
        let k = 1 + (seed % 3) as usize;
        let config = NavarConfig {
            k,
            hidden_units: 3 + (seed % 6) as usize,
            seed,
            ..toy3_config(seed)
        };
        let stats = NormStats {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        };
        let names = (0..n).map(|i| format!("x{i}")).collect();
        let mut model = NavarModel::init(&config, n, names, stats).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
        model.beta =
            Tensor::new(&[n], (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();

        let samples: Vec<WindowSample> = (0..3)
            .map(|b| WindowSample {
                windows: (0..n * k).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect(),
                targets: vec![0.0; n],
                replicate: 0,
                t: k + b,
            })
            .collect();
        let windowed = WindowedDataset { samples, k, n };
        let pass_fwd = model.forward_all(&windowed).unwrap();
        for b in 0..pass_fwd.batch {
            for j in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += pass_fwd.contribution(b, i, j);
                }
                let expected = model.beta.data()[j] + acc;
                assert!(
                    pass_fwd.prediction(b, j) == expected,
                    "[FAIL] criterion 2: seed {seed} sample {b} target {j}: \
                     {} != {expected}",
                    pass_fwd.prediction(b, j)
                );
                checked += 1;
            }
        }
    }
    pass(
        "criterion 2 (additivity invariant)",
        &format!("{checked} predictions across 100 random models, exact"),
        started,
        5.0,
    );
}

// ── 3. Toy SCM recovery ─────────────────────────────────────────────

#[test]
fn criterion_3_toy_scm_recovery() {
    let started = Instant::now();
    let mut aurocs = Vec::new();
    let mut top6_hits = 0usize;
    for seed in 0..5u64 {
        let ds = generate_toy3(4000, seed).unwrap();
        let truth = ds.truth.clone().unwrap();
        let (model, _) = train(&ds, &toy3_config(seed)).unwrap();
        let scores = score_links(&extract_contributions(&model, &ds).unwrap()).unwrap();
        aurocs.push(auroc(&scores, &truth, true).unwrap().auroc);

        let ranked = rank_links(&scores);
        let top6: std::collections::BTreeSet<(usize, usize)> =
            ranked[..6].iter().map(|&(i, j, _)| (i, j)).collect();
        let expected: std::collections::BTreeSet<(usize, usize)> =
            TOY3_TRUE_LINKS.iter().copied().collect();
        if top6 == expected {
            top6_hits += 1;
        }
    }
    let mean = aurocs.iter().sum::<f64>() / aurocs.len() as f64;
    assert!(
        mean >= 0.95,
        "[FAIL] criterion 3: mean AUROC {mean:.4} below 0.95 ({aurocs:?})"
    );
    assert!(
        top6_hits >= 4,
        "[FAIL] criterion 3: true links topped the ranking in only {top6_hits}/5 seeds"
    );
    pass(
        "criterion 3 (toy SCM recovery)",
        &format!("mean AUROC {mean:.4}, top-6 exact in {top6_hits}/5 seeds"),
        started,
        900.0,
    );
}

// ── 4. Lag structure ────────────────────────────────────────────────

#[test]
fn criterion_4_lag_structure() {
    let started = Instant::now();
    let config_for = |seed| NavarConfig {
        k: 8,
        hidden_units: 32,
        batch_size: 128,
        learning_rate: 1e-3,
        lambda: 0.05,
        mu: 1e-4,
        epochs: 3000,
        seed,
        ..toy3_config(seed)
    };
    let mut y_to_x_hits = 0usize;
    let mut x_to_y_hits = 0usize;
    for seed in 0..5u64 {
        let ds = generate_lag_scm(4000, seed).unwrap();
        let (model, _) = train(&ds, &config_for(seed)).unwrap();

        // y → x: the three largest deltas should sit at lags {3,4,5}.
        let records = lag_mask_analysis(&model, &ds, 1, 0).unwrap();
        let mut by_delta: Vec<(usize, f64)> =
            records.iter().map(|r| (r.k, r.delta_score)).collect();
        by_delta.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top3: std::collections::BTreeSet<usize> =
            by_delta[..3].iter().map(|&(k, _)| k).collect();
        if top3 == [3, 4, 5].into_iter().collect() {
            y_to_x_hits += 1;
        }

        // x → y: the two largest deltas should sit at lags {2,4}.
        let records = lag_mask_analysis(&model, &ds, 0, 1).unwrap();
        let mut by_delta: Vec<(usize, f64)> =
            records.iter().map(|r| (r.k, r.delta_score)).collect();
        by_delta.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top2: std::collections::BTreeSet<usize> =
            by_delta[..2].iter().map(|&(k, _)| k).collect();
        if top2 == [2, 4].into_iter().collect() {
            x_to_y_hits += 1;
        }
    }
    assert!(
        y_to_x_hits >= 4,
        "[FAIL] criterion 4: y→x lag set {{3,4,5}} recovered in only {y_to_x_hits}/5 seeds"
    );
    assert!(
        x_to_y_hits >= 4,
        "[FAIL] criterion 4: x→y lag set {{2,4}} recovered in only {x_to_y_hits}/5 seeds"
    );
    pass(
        "criterion 4 (lag structure)",
        &format!("y→x {y_to_x_hits}/5, x→y {x_to_y_hits}/5 seeds"),
        started,
        1200.0,
    );
}

// ── 5. Penalty behavior ─────────────────────────────────────────────

#[test]
fn criterion_5_penalty_behavior() {
    let started = Instant::now();
    let ds = generate_toy3(4000, 0).unwrap();

    let heavy = NavarConfig {
        lambda: 1e3,
        epochs: 1000,
        ..toy3_config(0)
    };
    let (model, _) = train(&ds, &heavy).unwrap();
    let scores = score_links(&extract_contributions(&model, &ds).unwrap()).unwrap();
    let mut max_off = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                max_off = max_off.max(scores.at(i, j));
            }
        }
    }
    assert!(
        max_off < 0.05,
        "[FAIL] criterion 5: off-diagonal score {max_off:.4} survived λ=1e3"
    );

    let free = NavarConfig {
        lambda: 0.0,
        epochs: 1000,
        ..toy3_config(0)
    };
    let (model, _) = train(&ds, &free).unwrap();
    let scores = score_links(&extract_contributions(&model, &ds).unwrap()).unwrap();
    let mut min_true = f64::INFINITY;
    for &(i, j) in &TOY3_TRUE_LINKS {
        min_true = min_true.min(scores.at(i, j));
    }
    assert!(
        min_true > 0.1,
        "[FAIL] criterion 5: a true link scored {min_true:.4} with λ=0"
    );
    pass(
        "criterion 5 (penalty behavior)",
        &format!("λ=1e3 max off-diag {max_off:.4}; λ=0 min true link {min_true:.4}"),
        started,
        600.0,
    );
}

// ── 6. AUROC oracle equivalence ─────────────────────────────────────

#[test]
fn criterion_6_auroc_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut done = 0usize;
    while done < 1000 {
        let n = 2 + rng.gen_range(0..5usize); // N ≤ 6
        let quantized = rng.gen_bool(0.5); // force ties half the time
        let scores: Vec<f64> = (0..n * n)
            .map(|_| {
                if quantized {
                    rng.gen_range(0..6) as f64 / 4.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let adjacency: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(0.4)).collect();
        let ignore = rng.gen_bool(0.5);

        // Need both label classes after the self-link policy.
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if ignore && i == j {
                    continue;
                }
                if adjacency[i * n + j] {
                    pos.push(scores[i * n + j]);
                } else {
                    neg.push(scores[i * n + j]);
                }
            }
        }
        if pos.is_empty() || neg.is_empty() {
            continue;
        }

        let matrix = ScoreMatrix::new(scores, n).unwrap();
        let truth = GroundTruthGraph::new(adjacency, n).unwrap();
        let fast = auroc(&matrix, &truth, ignore).unwrap().auroc;

        // Brute-force concordant-pair count with half credit for ties.
        let mut acc = 0.0;
        for &p in &pos {
            for &q in &neg {
                if p > q {
                    acc += 1.0;
                } else if p == q {
                    acc += 0.5;
                }
            }
        }
        let brute = acc / (pos.len() as f64 * neg.len() as f64);
        let diff = (fast - brute).abs();
        worst = worst.max(diff);
        assert!(
            diff <= 1e-12,
            "[FAIL] criterion 6: instance {done}: rank {fast} vs brute force {brute}"
        );
        done += 1;
    }
    pass(
        "criterion 6 (AUROC oracle equivalence)",
        &format!("1000 instances, worst |Δ| = {worst:.2e}"),
        started,
        10.0,
    );
}

// ── 7. Linear VAR sanity ────────────────────────────────────────────

#[test]
fn criterion_7_linear_var_sanity() {
    let started = Instant::now();
    let config = NavarConfig {
        k: 2,
        hidden_units: 16,
        epochs: 1500,
        ..toy3_config(0)
    };
    let params = GenerateParams {
        t: Some(1000),
        n: Some(5),
        k: Some(2),
        density: Some(0.3),
        coeff_scale: Some(0.8),
    };
    let outcome = bench(ScmKind::LinearVar, params, 5, 0, &config);
    assert_eq!(outcome.failures, 0, "[FAIL] criterion 7: trials failed");
    assert!(
        outcome.mean >= 0.85,
        "[FAIL] criterion 7: mean AUROC {:.4} below 0.85 ({:?})",
        outcome.mean,
        outcome.aurocs
    );
    pass(
        "criterion 7 (linear VAR sanity)",
        &format!("mean AUROC {:.4} ± {:.4} over 5 seeds", outcome.mean, outcome.std),
        started,
        600.0,
    );
}

// ── 8. Execution at gene-benchmark scale ────────────────────────────

/// 46 replicates × 21 steps × 100 variables through CSV → train (full
/// preset) → score → eval. An execution criterion: it must finish, well
/// inside two hours; accuracy is not asserted.
#[test]
fn criterion_8_dream3_shape_execution() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let n = 100;

    // A stationary sparse linear system provides plausibly-shaped data.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut coeffs = draw_var_coefficients(n, 2, 0.02, 0.8, &mut rng).unwrap();
    stabilize_coefficients(&mut coeffs, 0.9).unwrap();
    let replicates: Vec<Tensor> = (0..46)
        .map(|r| simulate_var(&coeffs, 21, 1000 + r as u64).unwrap())
        .collect();
    let dataset = TimeSeriesDataset {
        replicates,
        variable_names: (0..n).map(|i| format!("g{i}")).collect(),
        truth: None,
        norm_stats: None,
    };
    let truth = navar_core::data::truth_from_coefficients(&coeffs);

    let data_path = dir.path().join("dream_shape.csv");
    let truth_path = dir.path().join("dream_truth.csv");
    save_csv(&data_path, &dataset, ',').unwrap();
    save_truth_csv(&truth_path, &truth, &dataset.variable_names).unwrap();

    // Full pipeline from the files with the gene-benchmark preset.
    let loaded = load_csv(&data_path, true, ',').unwrap();
    assert_eq!(loaded.replicates.len(), 46);
    assert_eq!(loaded.n(), 100);
    let config = presets::find("dream3-ecoli1").unwrap().to_config();
    assert_eq!(config.k, 2);
    assert_eq!(config.hidden_units, 10);
    assert_eq!(config.epochs, 5000);

    let (model, report) = navar::pipeline::train_timed(&loaded, &config).unwrap();
    let ckpt_path = dir.path().join("model.ckpt");
    save_checkpoint(&ckpt_path, &model).unwrap();

    let contribs = extract_contributions(&model, &loaded).unwrap();
    assert_eq!(contribs.steps, 46 * (21 - 2));
    let scores = score_links(&contribs).unwrap();
    let scores_path = dir.path().join("scores.csv");
    save_scores_csv(&scores_path, &scores, &loaded.variable_names).unwrap();

    let truth_loaded = navar::io::load_truth_csv(&truth_path).unwrap();
    let roc = auroc(&scores, &truth_loaded, true).unwrap();
    assert!(roc.auroc.is_finite());
    assert!(fs::metadata(&scores_path).unwrap().len() > 0);

    pass(
        "criterion 8 (gene-benchmark-scale execution)",
        &format!(
            "46×21×100 trained {} epochs in {:.0}s, AUROC {:.3} (not asserted)",
            report.epochs_run, report.wall_clock_seconds, roc.auroc
        ),
        started,
        7200.0,
    );
}

// ── 9. Determinism ──────────────────────────────────────────────────

#[test]
fn criterion_9_pipeline_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let ds = generate(ScmKind::Toy3, GenerateParams::default(), 1).unwrap();
        let (model, _) = train(&ds, &toy3_config(1)).unwrap();
        let scores = score_links(&extract_contributions(&model, &ds).unwrap()).unwrap();
        let path = dir.path().join(format!("scores{run}.csv"));
        save_scores_csv(&path, &scores, &ds.variable_names).unwrap();
        bytes.push(fs::read(&path).unwrap());
    }
    assert_eq!(
        bytes[0], bytes[1],
        "[FAIL] criterion 9: score CSVs differ between identical runs"
    );
    pass(
        "criterion 9 (determinism)",
        "two identical runs, byte-identical score CSVs",
        started,
        600.0,
    );
}
