//! Gradient and matmul oracles for the tensor graph.

mod common;

use common::{assert_close_rel, finite_difference, random_values, random_values_off_zero};
use navar_core::numerics::{Graph, Tensor, Var};

fn tensor(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::new(shape, data.to_vec()).unwrap()
}

#[test]
fn matmul_matches_triple_loop_oracle() {
    let a = random_values(3 * 4, -2.0, 2.0, 10);
    let b = random_values(4 * 2, -2.0, 2.0, 11);
    let mut g = Graph::new();
    let va = g.leaf(tensor(&[3, 4], &a));
    let vb = g.leaf(tensor(&[4, 2], &b));
    let out = g.matmul(va, vb).unwrap();

    // Independent naive i-j-p triple loop.
    let mut expected = vec![0.0; 3 * 2];
    for i in 0..3 {
        for j in 0..2 {
            let mut s = 0.0;
            for p in 0..4 {
                s += a[i * 4 + p] * b[p * 2 + j];
            }
            expected[i * 2 + j] = s;
        }
    }
    for (got, want) in g.value(out).data().iter().zip(&expected) {
        assert!((got - want).abs() < 1e-12);
    }
}

/// Run one unary op through the finite-difference oracle.
fn fd_unary(name: &str, apply: impl Fn(&mut Graph, Var) -> Var, x: Vec<f64>) {
    let shape = [x.len()];
    let mut g = Graph::new();
    let vx = g.leaf(tensor(&shape, &x));
    let y = apply(&mut g, vx);
    let root = g.sum(y);
    g.backward(root).unwrap();
    let analytic = g.grad(vx).unwrap().into_data();

    let f = |vals: &[f64]| {
        let mut g = Graph::new();
        let vx = g.leaf(tensor(&shape, vals));
        let y = apply(&mut g, vx);
        let root = g.sum(y);
        g.value(root).item()
    };
    let numeric = finite_difference(&f, &x);
    assert_close_rel(&analytic, &numeric, name);
}

#[test]
fn finite_differences_cover_every_unary_op() {
    let smooth = random_values(6, -1.5, 1.5, 21);
    fd_unary("tanh", |g, v| g.tanh_act(v), smooth.clone());
    fd_unary("sigmoid", |g, v| g.sigmoid_act(v), smooth.clone());
    fd_unary("square", |g, v| g.square(v), smooth.clone());
    fd_unary("scale", |g, v| g.scale(v, -1.7), smooth.clone());
    fd_unary("mean", |g, v| g.mean(v), smooth);
    // Kinked ops get inputs bounded away from zero.
    let kinked = random_values_off_zero(6, 22);
    fd_unary("relu", |g, v| g.relu(v), kinked.clone());
    fd_unary("abs", |g, v| g.abs_val(v), kinked);
}

#[test]
fn finite_differences_cover_binary_ops() {
    let a = random_values(8, -1.0, 1.0, 30);
    let b = random_values(8, -1.0, 1.0, 31);
    let joint: Vec<f64> = a.iter().chain(&b).copied().collect();

    type BinOp = fn(&mut Graph, Var, Var) -> Var;
    let cases: Vec<(&str, BinOp)> = vec![
        ("add", |g, x, y| g.add(x, y).unwrap()),
        ("sub", |g, x, y| g.sub(x, y).unwrap()),
        ("mul", |g, x, y| g.mul(x, y).unwrap()),
    ];
    for (name, apply) in cases {
        let mut g = Graph::new();
        let vx = g.leaf(tensor(&[8], &a));
        let vy = g.leaf(tensor(&[8], &b));
        let z = apply(&mut g, vx, vy);
        let root = g.sum(z);
        g.backward(root).unwrap();
        let mut analytic = g.grad(vx).unwrap().into_data();
        analytic.extend(g.grad(vy).unwrap().into_data());

        let f = |vals: &[f64]| {
            let mut g = Graph::new();
            let vx = g.leaf(tensor(&[8], &vals[..8]));
            let vy = g.leaf(tensor(&[8], &vals[8..]));
            let z = apply(&mut g, vx, vy);
            let root = g.sum(z);
            g.value(root).item()
        };
        let numeric = finite_difference(&f, &joint);
        assert_close_rel(&analytic, &numeric, name);
    }
}

#[test]
fn finite_differences_cover_matmul_and_add_row() {
    let a = random_values(2 * 3, -1.0, 1.0, 40);
    let b = random_values(3 * 2, -1.0, 1.0, 41);
    let joint: Vec<f64> = a.iter().chain(&b).copied().collect();
    let f = |vals: &[f64]| {
        let mut g = Graph::new();
        let va = g.leaf(tensor(&[2, 3], &vals[..6]));
        let vb = g.leaf(tensor(&[3, 2], &vals[6..]));
        let m = g.matmul(va, vb).unwrap();
        let root = g.sum(m);
        g.value(root).item()
    };
    let mut g = Graph::new();
    let va = g.leaf(tensor(&[2, 3], &a));
    let vb = g.leaf(tensor(&[3, 2], &b));
    let m = g.matmul(va, vb).unwrap();
    let root = g.sum(m);
    g.backward(root).unwrap();
    let mut analytic = g.grad(va).unwrap().into_data();
    analytic.extend(g.grad(vb).unwrap().into_data());
    assert_close_rel(&analytic, &finite_difference(&f, &joint), "matmul");

    let m0 = random_values(2 * 3, -1.0, 1.0, 42);
    let r0 = random_values(3, -1.0, 1.0, 43);
    let joint: Vec<f64> = m0.iter().chain(&r0).copied().collect();
    let f = |vals: &[f64]| {
        let mut g = Graph::new();
        let vm = g.leaf(tensor(&[2, 3], &vals[..6]));
        let vr = g.leaf(tensor(&[3], &vals[6..]));
        let s = g.add_row(vm, vr).unwrap();
        let sq = g.square(s);
        let root = g.sum(sq);
        g.value(root).item()
    };
    let mut g = Graph::new();
    let vm = g.leaf(tensor(&[2, 3], &m0));
    let vr = g.leaf(tensor(&[3], &r0));
    let s = g.add_row(vm, vr).unwrap();
    let sq = g.square(s);
    let root = g.sum(sq);
    g.backward(root).unwrap();
    let mut analytic = g.grad(vm).unwrap().into_data();
    analytic.extend(g.grad(vr).unwrap().into_data());
    assert_close_rel(&analytic, &finite_difference(&f, &joint), "add_row");
}

#[test]
fn composed_expression_matches_finite_differences() {
    // sum(square(tanh(W·x + b) ∘ sigmoid(x'))) with shared leaves — a
    // deliberately tangled expression.
    let w = random_values(3 * 3, -0.8, 0.8, 50);
    let x = random_values(3 * 1, -0.8, 0.8, 51);
    let b = random_values(3, -0.5, 0.5, 52);
    let joint: Vec<f64> = w.iter().chain(&x).chain(&b).copied().collect();

    let build = |vals: &[f64]| -> (Graph, Var, Var, Var, Var) {
        let mut g = Graph::new();
        let vw = g.leaf(tensor(&[3, 3], &vals[..9]));
        let vx = g.leaf(tensor(&[1, 3], &vals[9..12]));
        let vb = g.leaf(tensor(&[3], &vals[12..]));
        let wx = g.matmul(vx, vw).unwrap();
        let z = g.add_row(wx, vb).unwrap();
        let t = g.tanh_act(z);
        let s = g.sigmoid_act(vx);
        let p = g.mul(t, s).unwrap();
        let q = g.square(p);
        let root = g.sum(q);
        (g, vw, vx, vb, root)
    };

    let (mut g, vw, vx, vb, root) = build(&joint);
    g.backward(root).unwrap();
    let mut analytic = g.grad(vw).unwrap().into_data();
    analytic.extend(g.grad(vx).unwrap().into_data());
    analytic.extend(g.grad(vb).unwrap().into_data());

    let f = |vals: &[f64]| {
        let (g, _, _, _, root) = build(vals);
        g.value(root).item()
    };
    assert_close_rel(&analytic, &finite_difference(&f, &joint), "composed");
}

#[test]
fn backward_is_linear_in_the_root() {
    // gradients of a·f + b·g equal a·grad(f) + b·grad(g) elementwise.
    let x = random_values(5, -1.0, 1.0, 60);
    let (a, b) = (1.7, -0.6);

    let grad_f = {
        let mut g = Graph::new();
        let vx = g.leaf(tensor(&[5], &x));
        let t = g.tanh_act(vx);
        let root = g.sum(t);
        g.backward(root).unwrap();
        g.grad(vx).unwrap().into_data()
    };
    let grad_g = {
        let mut g = Graph::new();
        let vx = g.leaf(tensor(&[5], &x));
        let s = g.square(vx);
        let root = g.sum(s);
        g.backward(root).unwrap();
        g.grad(vx).unwrap().into_data()
    };
    let grad_combined = {
        let mut g = Graph::new();
        let vx = g.leaf(tensor(&[5], &x));
        let t = g.tanh_act(vx);
        let f_root = g.sum(t);
        let s = g.square(vx);
        let g_root = g.sum(s);
        let fa = g.scale(f_root, a);
        let gb = g.scale(g_root, b);
        let root = g.add(fa, gb).unwrap();
        g.backward(root).unwrap();
        g.grad(vx).unwrap().into_data()
    };
    for e in 0..5 {
        let expected = a * grad_f[e] + b * grad_g[e];
        assert!(
            (grad_combined[e] - expected).abs() < 1e-12,
            "linearity broke at {e}: {} vs {expected}",
            grad_combined[e]
        );
    }
}

#[test]
fn forward_and_gradients_are_bitwise_deterministic() {
    let run = || {
        let x = random_values(8, -1.0, 1.0, 70);
        let w = random_values(8, -1.0, 1.0, 71);
        let mut g = Graph::new();
        let vx = g.leaf(tensor(&[8], &x));
        let vw = g.leaf(tensor(&[8], &w));
        let p = g.mul(vx, vw).unwrap();
        let t = g.tanh_act(p);
        let root = g.sum(t);
        g.backward(root).unwrap();
        (
            g.value(root).item(),
            g.grad(vw).unwrap().into_data(),
        )
    };
    let (v1, g1) = run();
    let (v2, g2) = run();
    assert!(v1.to_bits() == v2.to_bits());
    for (a, b) in g1.iter().zip(&g2) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn forward_and_backward_stay_finite() {
    let x = random_values(64, -3.0, 3.0, 80);
    let w = random_values(64, -3.0, 3.0, 81);
    let mut g = Graph::new();
    let vx = g.leaf(tensor(&[8, 8], &x));
    let vw = g.leaf(tensor(&[8, 8], &w));
    let m = g.matmul(vx, vw).unwrap();
    let r = g.relu(m);
    let t = g.tanh_act(r);
    let root = g.mean(t);
    assert!(g.value(root).item().is_finite());
    g.backward(root).unwrap();
    assert!(g.grad(vx).unwrap().all_finite());
    assert!(g.grad(vw).unwrap().all_finite());
}
