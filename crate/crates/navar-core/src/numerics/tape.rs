//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] records every primitive operation as it executes. Calling
//! [`Graph::backward`] on a scalar node replays the record in reverse and
//! accumulates gradients into per-node buffers. Graphs are rebuilt for
//! every batch; there is no graph reuse.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mathx;
use crate::numerics::tensor::Tensor;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Matrix plus a row vector broadcast over all rows.
    AddRow(Var, Var),
    /// Elementwise sum of several same-shaped nodes, left to right.
    AddN(Vec<Var>),
    Scale(Var, f64),
    Relu(Var),
    TanhAct(Var),
    SigmoidAct(Var),
    AbsVal(Var),
    Square(Var),
    Sum(Var),
    Mean(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    grad: Option<Vec<f64>>,
}

/// Recorded operations plus per-node gradient accumulators.
///
/// Recording order is a valid evaluation order, so the reverse of it is a
/// valid order for gradient propagation. Accumulators start empty (meaning
/// zero) and are only materialized once gradient actually flows into a node.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            op,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Record an input node. Leaves receive gradients but have no parents.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.push(Tensor::scalar(value), Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last backward root with respect to `v`.
    ///
    /// Returns `None` before backward has run; nodes the root does not
    /// depend on get an all-zero gradient.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        if !self.backward_done {
            return None;
        }
        let node = &self.nodes[v.0];
        Some(match &node.grad {
            Some(g) => Tensor::new(node.value.shape(), g.clone()).expect("grad shape"),
            None => Tensor::zeros(node.value.shape()),
        })
    }

    // ── forward ops ─────────────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, ka) = (self.nodes[a.0].value.rows(), self.nodes[a.0].value.cols());
        let (kb, n) = (self.nodes[b.0].value.rows(), self.nodes[b.0].value.cols());
        if ka != kb {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: self.nodes[a.0].value.shape().to_vec(),
                rhs: self.nodes[b.0].value.shape().to_vec(),
            });
        }
        let mut out = vec![0.0; m * n];
        matmul_into(
            self.nodes[a.0].value.data(),
            self.nodes[b.0].value.data(),
            m,
            ka,
            n,
            &mut out,
        );
        let value = Tensor::new(&[m, n], out).expect("matmul shape");
        Ok(self.push(value, Op::Matmul(a, b)))
    }

    fn binary_elementwise(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let value = if va.is_scalar() && !vb.is_scalar() {
            let s = va.item();
            let data = vb.data().iter().map(|&y| f(s, y)).collect();
            Tensor::new(vb.shape(), data).expect("shape")
        } else if vb.is_scalar() && !va.is_scalar() {
            let s = vb.item();
            let data = va.data().iter().map(|&x| f(x, s)).collect();
            Tensor::new(va.shape(), data).expect("shape")
        } else if va.shape() == vb.shape() {
            let data = va
                .data()
                .iter()
                .zip(vb.data())
                .map(|(&x, &y)| f(x, y))
                .collect();
            Tensor::new(va.shape(), data).expect("shape")
        } else {
            return Err(Error::ShapeMismatch {
                op: op_name,
                lhs: va.shape().to_vec(),
                rhs: vb.shape().to_vec(),
            });
        };
        Ok(self.push(value, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// `matrix + row`, the row broadcast over every matrix row.
    pub fn add_row(&mut self, matrix: Var, row: Var) -> Result<Var> {
        let (vm, vr) = (&self.nodes[matrix.0].value, &self.nodes[row.0].value);
        let (m, n) = (vm.rows(), vm.cols());
        if vr.numel() != n || vr.rows() != 1 {
            return Err(Error::ShapeMismatch {
                op: "add_row",
                lhs: vm.shape().to_vec(),
                rhs: vr.shape().to_vec(),
            });
        }
        let mut data = vm.data().to_vec();
        let row_data = vr.data();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += row_data[j];
            }
        }
        let value = Tensor::new(vm.shape(), data).expect("shape");
        Ok(self.push(value, Op::AddRow(matrix, row)))
    }

    /// Elementwise sum of `terms` in the given (fixed) order.
    pub fn add_n(&mut self, terms: &[Var]) -> Result<Var> {
        let first = terms
            .first()
            .ok_or_else(|| Error::DimensionMismatch("add_n needs at least one term".into()))?;
        let shape = self.nodes[first.0].value.shape().to_vec();
        for t in &terms[1..] {
            if self.nodes[t.0].value.shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch {
                    op: "add_n",
                    lhs: shape,
                    rhs: self.nodes[t.0].value.shape().to_vec(),
                });
            }
        }
        let mut data = vec![0.0; self.nodes[first.0].value.numel()];
        for t in terms {
            for (acc, &v) in data.iter_mut().zip(self.nodes[t.0].value.data()) {
                *acc += v;
            }
        }
        let value = Tensor::new(&shape, data).expect("shape");
        Ok(self.push(value, Op::AddN(terms.to_vec())))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let data = self.nodes[a.0].value.data().iter().map(|&x| factor * x).collect();
        let value = Tensor::new(self.nodes[a.0].value.shape(), data).expect("shape");
        self.push(value, Op::Scale(a, factor))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let data = self.nodes[a.0].value.data().iter().map(|&x| f(x)).collect();
        let value = Tensor::new(self.nodes[a.0].value.shape(), data).expect("shape");
        self.push(value, op)
    }

    /// Elementwise max(0, x). The gradient at exactly 0 is defined as 0.
    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    pub fn tanh_act(&mut self, a: Var) -> Var {
        self.unary(a, mathx::tanh, Op::TanhAct(a))
    }

    pub fn sigmoid_act(&mut self, a: Var) -> Var {
        self.unary(a, mathx::sigmoid, Op::SigmoidAct(a))
    }

    /// Elementwise |x|. The gradient at exactly 0 is defined as 0.
    pub fn abs_val(&mut self, a: Var) -> Var {
        self.unary(a, mathx::abs, Op::AbsVal(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Mean of all elements, as a scalar node.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].value.numel();
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(Tensor::scalar(s / n as f64), Op::Mean(a))
    }

    // ── backward ────────────────────────────────────────────────────

    /// Reverse pass from a scalar root.
    ///
    /// Populates gradient accumulators for every node the root depends on.
    /// A graph supports exactly one backward pass; rebuild the graph for
    /// the next one.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardAlreadyRun);
        }
        let root_node = &self.nodes[root.0];
        if root_node.value.numel() != 1 {
            return Err(Error::NonScalarRoot {
                shape: root_node.value.shape().to_vec(),
            });
        }
        self.backward_done = true;
        self.nodes[root.0].grad = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let upstream = match self.nodes[idx].grad.take() {
                Some(g) => g,
                None => continue,
            };
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let m = self.nodes[a.0].value.rows();
                    let k = self.nodes[a.0].value.cols();
                    let n = self.nodes[b.0].value.cols();
                    // dA = dC · Bᵀ
                    {
                        let b_data = &self.nodes[b.0].value;
                        let mut da = vec![0.0; m * k];
                        for i in 0..m {
                            for p in 0..k {
                                let mut s = 0.0;
                                for j in 0..n {
                                    s += upstream[i * n + j] * b_data.data()[p * n + j];
                                }
                                da[i * k + p] = s;
                            }
                        }
                        self.accumulate(a, &da);
                    }
                    // dB = Aᵀ · dC
                    {
                        let mut db = vec![0.0; k * n];
                        for i in 0..m {
                            for p in 0..k {
                                let a_ip = self.nodes[a.0].value.data()[i * k + p];
                                let row = &upstream[i * n..(i + 1) * n];
                                let out = &mut db[p * n..(p + 1) * n];
                                for j in 0..n {
                                    out[j] += a_ip * row[j];
                                }
                            }
                        }
                        self.accumulate(b, &db);
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate_broadcast(a, &upstream);
                    self.accumulate_broadcast(b, &upstream);
                }
                Op::Sub(a, b) => {
                    self.accumulate_broadcast(a, &upstream);
                    let neg: Vec<f64> = upstream.iter().map(|&g| -g).collect();
                    self.accumulate_broadcast(b, &neg);
                }
                Op::Mul(a, b) => {
                    let ga = self.mul_partner(&upstream, b);
                    let gb = self.mul_partner(&upstream, a);
                    self.accumulate_broadcast(a, &ga);
                    self.accumulate_broadcast(b, &gb);
                }
                Op::AddRow(matrix, row) => {
                    self.accumulate(matrix, &upstream);
                    let n = self.nodes[row.0].value.numel();
                    let m = upstream.len() / n;
                    let mut grow = vec![0.0; n];
                    for i in 0..m {
                        for j in 0..n {
                            grow[j] += upstream[i * n + j];
                        }
                    }
                    self.accumulate(row, &grow);
                }
                Op::AddN(terms) => {
                    for t in terms {
                        self.accumulate(t, &upstream);
                    }
                }
                Op::Scale(a, factor) => {
                    let g: Vec<f64> = upstream.iter().map(|&u| factor * u).collect();
                    self.accumulate(a, &g);
                }
                Op::Relu(a) => {
                    let g: Vec<f64> = upstream
                        .iter()
                        .zip(self.nodes[a.0].value.data())
                        .map(|(&u, &x)| if x > 0.0 { u } else { 0.0 })
                        .collect();
                    self.accumulate(a, &g);
                }
                Op::TanhAct(a) => {
                    let g: Vec<f64> = upstream
                        .iter()
                        .zip(self.nodes[idx].value.data())
                        .map(|(&u, &y)| u * (1.0 - y * y))
                        .collect();
                    self.accumulate(a, &g);
                }
                Op::SigmoidAct(a) => {
                    let g: Vec<f64> = upstream
                        .iter()
                        .zip(self.nodes[idx].value.data())
                        .map(|(&u, &y)| u * y * (1.0 - y))
                        .collect();
                    self.accumulate(a, &g);
                }
                Op::AbsVal(a) => {
                    let g: Vec<f64> = upstream
                        .iter()
                        .zip(self.nodes[a.0].value.data())
                        .map(|(&u, &x)| {
                            if x > 0.0 {
                                u
                            } else if x < 0.0 {
                                -u
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    self.accumulate(a, &g);
                }
                Op::Square(a) => {
                    let g: Vec<f64> = upstream
                        .iter()
                        .zip(self.nodes[a.0].value.data())
                        .map(|(&u, &x)| u * 2.0 * x)
                        .collect();
                    self.accumulate(a, &g);
                }
                Op::Sum(a) => {
                    let u = upstream[0];
                    let g = vec![u; self.nodes[a.0].value.numel()];
                    self.accumulate(a, &g);
                }
                Op::Mean(a) => {
                    let numel = self.nodes[a.0].value.numel();
                    let u = upstream[0] / numel as f64;
                    let g = vec![u; numel];
                    self.accumulate(a, &g);
                }
            }
            // take() released the borrow during propagation; put the
            // accumulated gradient back for callers to read.
            self.nodes[idx].grad = Some(upstream);
        }
        Ok(())
    }

    /// Gradient contribution of `u ∘ partner` toward the other operand of
    /// `mul`, handling the scalar-broadcast case. `accumulate_broadcast`
    /// reduces the result if the receiving operand is the scalar one.
    fn mul_partner(&self, upstream: &[f64], partner: Var) -> Vec<f64> {
        let pv = &self.nodes[partner.0].value;
        if pv.is_scalar() && upstream.len() > 1 {
            let s = pv.item();
            upstream.iter().map(|&u| u * s).collect()
        } else {
            upstream.iter().zip(pv.data()).map(|(&u, &p)| u * p).collect()
        }
    }

    /// Accumulate `g` into the gradient of `v`; `g` has v's full shape.
    fn accumulate(&mut self, v: Var, g: &[f64]) {
        let node = &mut self.nodes[v.0];
        match &mut node.grad {
            Some(acc) => {
                for (a, &x) in acc.iter_mut().zip(g) {
                    *a += x;
                }
            }
            None => node.grad = Some(g.to_vec()),
        }
    }

    /// Accumulate with scalar reduction: if `v` is scalar but `g` is not
    /// (scalar-broadcast forward), the gradient is the sum over `g`.
    fn accumulate_broadcast(&mut self, v: Var, g: &[f64]) {
        if self.nodes[v.0].value.numel() == 1 && g.len() > 1 {
            let s: f64 = g.iter().sum();
            self.accumulate(v, &[s]);
        } else {
            self.accumulate(v, g);
        }
    }
}

/// `out += a · b` for row-major `a` (m×k) and `b` (k×n); `out` must be zeroed.
fn matmul_into(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        for p in 0..k {
            let a_ip = a[i * k + p];
            let b_row = &b[p * n..(p + 1) * n];
            let out_row = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                out_row[j] += a_ip * b_row[j];
            }
        }
    }
}
