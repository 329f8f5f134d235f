//! Per-variable contribution networks.
//!
//! Every input variable gets one backbone. An MLP backbone consumes the
//! variable's K-lag window and an LSTM backbone consumes one time step at
//! a time; both emit one contribution per target variable. The final layer
//! is linear so contributions can be negative.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mathx;
use crate::numerics::{Graph, Tensor, Var};

/// Which network family a backbone belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackboneKind {
    Mlp,
    Lstm,
}

impl BackboneKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackboneKind::Mlp => "mlp",
            BackboneKind::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(BackboneKind::Mlp),
            "lstm" => Ok(BackboneKind::Lstm),
            other => Err(Error::Config(format!("unknown backbone kind `{other}`"))),
        }
    }
}

fn uniform_tensor(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let bound = 1.0 / mathx::sqrt(fan_in as f64);
    let dist = Uniform::new(-bound, bound);
    let numel = shape.iter().product();
    let data: Vec<f64> = (0..numel).map(|_| dist.sample(rng)).collect();
    Tensor::new(shape, data).expect("init shape")
}

// ── MLP ─────────────────────────────────────────────────────────────

/// Feed-forward backbone: K lag inputs, ReLU hidden layers, N linear outputs.
#[derive(Debug, Clone)]
pub struct MlpBackbone {
    /// First K×H, then H×H per extra hidden layer, finally H×N.
    pub layer_weights: Vec<Tensor>,
    pub layer_biases: Vec<Tensor>,
    pub hidden_layers: usize,
    pub k: usize,
    pub n: usize,
}

/// Leaf handles for one MLP's parameters on a graph.
pub struct MlpVars {
    pub weights: Vec<Var>,
    pub biases: Vec<Var>,
}

impl MlpVars {
    /// Handles in the same order as [`MlpBackbone::params_mut`].
    pub fn ordered(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(*w);
            out.push(*b);
        }
        out
    }
}

impl MlpBackbone {
    /// Weights drawn uniform in ±1/√fan_in, biases zero; deterministic in the seed.
    pub fn init(k: usize, n: usize, hidden_units: usize, hidden_layers: usize, seed: u64) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Config(format!("mlp needs k ≥ 1 and n ≥ 1, got k={k}, n={n}")));
        }
        if hidden_units == 0 || hidden_layers == 0 {
            return Err(Error::Config(format!(
                "mlp needs hidden_units ≥ 1 and hidden_layers ≥ 1, got {hidden_units} and {hidden_layers}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = hidden_units;
        let mut layer_weights = Vec::with_capacity(hidden_layers + 1);
        let mut layer_biases = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = k;
        for _ in 0..hidden_layers {
            layer_weights.push(uniform_tensor(&[fan_in, h], fan_in, &mut rng));
            layer_biases.push(Tensor::zeros(&[h]));
            fan_in = h;
        }
        layer_weights.push(uniform_tensor(&[h, n], h, &mut rng));
        layer_biases.push(Tensor::zeros(&[n]));
        Ok(MlpBackbone {
            layer_weights,
            layer_biases,
            hidden_layers,
            k,
            n,
        })
    }

    pub fn register(&self, g: &mut Graph) -> MlpVars {
        MlpVars {
            weights: self.layer_weights.iter().map(|w| g.leaf(w.clone())).collect(),
            biases: self.layer_biases.iter().map(|b| g.leaf(b.clone())).collect(),
        }
    }

    /// Batch forward: `input` is batch×K, the result is batch×N.
    pub fn forward_on(&self, g: &mut Graph, vars: &MlpVars, input: Var) -> Result<Var> {
        if g.value(input).cols() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "mlp expects windows of depth {}, got {:?}",
                self.k,
                g.value(input).shape()
            )));
        }
        let mut x = input;
        let last = self.layer_weights.len() - 1;
        for l in 0..=last {
            let z = g.matmul(x, vars.weights[l])?;
            x = g.add_row(z, vars.biases[l])?;
            if l < last {
                x = g.relu(x);
            }
        }
        Ok(x)
    }

    /// Contribution vector for a single K-lag window.
    ///
    /// The window is ordered oldest to newest: index K−1 holds lag 1.
    pub fn forward_window(&self, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "mlp expects a window of length {}, got {}",
                self.k,
                window.len()
            )));
        }
        let mut g = Graph::new();
        let input = g.leaf(Tensor::new(&[1, self.k], window.to_vec())?);
        let vars = self.register(&mut g);
        let out = self.forward_on(&mut g, &vars, input)?;
        Ok(g.value(out).data().to_vec())
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, (w, b)) in self.layer_weights.iter().zip(&self.layer_biases).enumerate() {
            out.push((format!("w{l}"), w));
            out.push((format!("b{l}"), b));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for (w, b) in self.layer_weights.iter_mut().zip(self.layer_biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (l, (w, b)) in self
            .layer_weights
            .iter_mut()
            .zip(self.layer_biases.iter_mut())
            .enumerate()
        {
            out.push((format!("w{l}"), w));
            out.push((format!("b{l}"), b));
        }
        out
    }
}

// ── LSTM ────────────────────────────────────────────────────────────

/// Recurrent backbone: scalar input per step, H hidden units, N linear outputs.
///
/// The network size does not grow with the lag depth; longer dependencies
/// ride in the recurrent state instead.
#[derive(Debug, Clone)]
pub struct LstmBackbone {
    pub w_xi: Tensor,
    pub w_hi: Tensor,
    pub b_i: Tensor,
    pub w_xf: Tensor,
    pub w_hf: Tensor,
    pub b_f: Tensor,
    pub w_xg: Tensor,
    pub w_hg: Tensor,
    pub b_g: Tensor,
    pub w_xo: Tensor,
    pub w_ho: Tensor,
    pub b_o: Tensor,
    pub w_out: Tensor,
    pub b_out: Tensor,
    pub hidden: usize,
    pub n: usize,
}

pub struct LstmVars {
    pub w_xi: Var,
    pub w_hi: Var,
    pub b_i: Var,
    pub w_xf: Var,
    pub w_hf: Var,
    pub b_f: Var,
    pub w_xg: Var,
    pub w_hg: Var,
    pub b_g: Var,
    pub w_xo: Var,
    pub w_ho: Var,
    pub b_o: Var,
    pub w_out: Var,
    pub b_out: Var,
}

impl LstmVars {
    /// Handles in the same order as [`LstmBackbone::params_mut`].
    pub fn ordered(&self) -> Vec<Var> {
        vec![
            self.w_xi, self.w_hi, self.b_i, self.w_xf, self.w_hf, self.b_f, self.w_xg,
            self.w_hg, self.b_g, self.w_xo, self.w_ho, self.b_o, self.w_out, self.b_out,
        ]
    }
}

/// Recurrent state on a graph: hidden and cell, each batch×H.
#[derive(Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmBackbone {
    /// Weights uniform in ±1/√fan_in; biases zero except the forget gate,
    /// which starts at 1.0 to ease gradient flow over short sequences.
    pub fn init(n: usize, hidden_units: usize, seed: u64) -> Result<Self> {
        if n == 0 || hidden_units == 0 {
            return Err(Error::Config(format!(
                "lstm needs n ≥ 1 and hidden_units ≥ 1, got n={n}, hidden_units={hidden_units}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = hidden_units;
        let w_xi = uniform_tensor(&[1, h], 1, &mut rng);
        let w_hi = uniform_tensor(&[h, h], h, &mut rng);
        let w_xf = uniform_tensor(&[1, h], 1, &mut rng);
        let w_hf = uniform_tensor(&[h, h], h, &mut rng);
        let w_xg = uniform_tensor(&[1, h], 1, &mut rng);
        let w_hg = uniform_tensor(&[h, h], h, &mut rng);
        let w_xo = uniform_tensor(&[1, h], 1, &mut rng);
        let w_ho = uniform_tensor(&[h, h], h, &mut rng);
        let w_out = uniform_tensor(&[h, n], h, &mut rng);
        Ok(LstmBackbone {
            w_xi,
            w_hi,
            b_i: Tensor::zeros(&[h]),
            w_xf,
            w_hf,
            b_f: Tensor::new(&[h], vec![1.0; h]).expect("bias shape"),
            w_xg,
            w_hg,
            b_g: Tensor::zeros(&[h]),
            w_xo,
            w_ho,
            b_o: Tensor::zeros(&[h]),
            w_out,
            b_out: Tensor::zeros(&[n]),
            hidden: h,
            n,
        })
    }

    pub fn register(&self, g: &mut Graph) -> LstmVars {
        LstmVars {
            w_xi: g.leaf(self.w_xi.clone()),
            w_hi: g.leaf(self.w_hi.clone()),
            b_i: g.leaf(self.b_i.clone()),
            w_xf: g.leaf(self.w_xf.clone()),
            w_hf: g.leaf(self.w_hf.clone()),
            b_f: g.leaf(self.b_f.clone()),
            w_xg: g.leaf(self.w_xg.clone()),
            w_hg: g.leaf(self.w_hg.clone()),
            b_g: g.leaf(self.b_g.clone()),
            w_xo: g.leaf(self.w_xo.clone()),
            w_ho: g.leaf(self.w_ho.clone()),
            b_o: g.leaf(self.b_o.clone()),
            w_out: g.leaf(self.w_out.clone()),
            b_out: g.leaf(self.b_out.clone()),
        }
    }

    /// Fresh all-zero state for a batch of sequences.
    pub fn zero_state(&self, g: &mut Graph, batch: usize) -> LstmState {
        LstmState {
            h: g.leaf(Tensor::zeros(&[batch, self.hidden])),
            c: g.leaf(Tensor::zeros(&[batch, self.hidden])),
        }
    }

    fn gate(
        &self,
        g: &mut Graph,
        x: Var,
        h: Var,
        w_x: Var,
        w_h: Var,
        b: Var,
    ) -> Result<Var> {
        let zx = g.matmul(x, w_x)?;
        let zh = g.matmul(h, w_h)?;
        let z = g.add(zx, zh)?;
        g.add_row(z, b)
    }

    /// One step for a batch: `x` is batch×1, the result is batch×N plus the
    /// advanced state.
    pub fn step_on(
        &self,
        g: &mut Graph,
        vars: &LstmVars,
        x: Var,
        state: LstmState,
    ) -> Result<(Var, LstmState)> {
        if g.value(x).cols() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "lstm step expects a batch×1 input, got {:?}",
                g.value(x).shape()
            )));
        }
        let zi = self.gate(g, x, state.h, vars.w_xi, vars.w_hi, vars.b_i)?;
        let i = g.sigmoid_act(zi);
        let zf = self.gate(g, x, state.h, vars.w_xf, vars.w_hf, vars.b_f)?;
        let f = g.sigmoid_act(zf);
        let zg = self.gate(g, x, state.h, vars.w_xg, vars.w_hg, vars.b_g)?;
        let cand = g.tanh_act(zg);
        let zo = self.gate(g, x, state.h, vars.w_xo, vars.w_ho, vars.b_o)?;
        let o = g.sigmoid_act(zo);

        let keep = g.mul(f, state.c)?;
        let write = g.mul(i, cand)?;
        let c_next = g.add(keep, write)?;
        let c_act = g.tanh_act(c_next);
        let h_next = g.mul(o, c_act)?;

        let proj = g.matmul(h_next, vars.w_out)?;
        let out = g.add_row(proj, vars.b_out)?;
        Ok((
            out,
            LstmState {
                h: h_next,
                c: c_next,
            },
        ))
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("w_xi".into(), &self.w_xi),
            ("w_hi".into(), &self.w_hi),
            ("b_i".into(), &self.b_i),
            ("w_xf".into(), &self.w_xf),
            ("w_hf".into(), &self.w_hf),
            ("b_f".into(), &self.b_f),
            ("w_xg".into(), &self.w_xg),
            ("w_hg".into(), &self.w_hg),
            ("b_g".into(), &self.b_g),
            ("w_xo".into(), &self.w_xo),
            ("w_ho".into(), &self.w_ho),
            ("b_o".into(), &self.b_o),
            ("w_out".into(), &self.w_out),
            ("b_out".into(), &self.b_out),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.b_i,
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.b_f,
            &mut self.w_xg,
            &mut self.w_hg,
            &mut self.b_g,
            &mut self.w_xo,
            &mut self.w_ho,
            &mut self.b_o,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("w_xi".into(), &mut self.w_xi),
            ("w_hi".into(), &mut self.w_hi),
            ("b_i".into(), &mut self.b_i),
            ("w_xf".into(), &mut self.w_xf),
            ("w_hf".into(), &mut self.w_hf),
            ("b_f".into(), &mut self.b_f),
            ("w_xg".into(), &mut self.w_xg),
            ("w_hg".into(), &mut self.w_hg),
            ("b_g".into(), &mut self.b_g),
            ("w_xo".into(), &mut self.w_xo),
            ("w_ho".into(), &mut self.w_ho),
            ("b_o".into(), &mut self.b_o),
            ("w_out".into(), &mut self.w_out),
            ("b_out".into(), &mut self.b_out),
        ]
    }
}

/// Step-at-a-time LSTM evaluation with owned state, for walking a single
/// sequence outside a training graph.
pub struct LstmRunner<'a> {
    backbone: &'a LstmBackbone,
    h: Tensor,
    c: Tensor,
}

impl<'a> LstmRunner<'a> {
    pub fn new(backbone: &'a LstmBackbone) -> Self {
        LstmRunner {
            backbone,
            h: Tensor::zeros(&[1, backbone.hidden]),
            c: Tensor::zeros(&[1, backbone.hidden]),
        }
    }

    /// Reset hidden and cell state to zero, as at every sequence start.
    pub fn reset(&mut self) {
        self.h = Tensor::zeros(&[1, self.backbone.hidden]);
        self.c = Tensor::zeros(&[1, self.backbone.hidden]);
    }

    /// Feed one scalar observation; returns the N contributions.
    pub fn step(&mut self, x: f64) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let vars = self.backbone.register(&mut g);
        let state = LstmState {
            h: g.leaf(self.h.clone()),
            c: g.leaf(self.c.clone()),
        };
        let input = g.leaf(Tensor::new(&[1, 1], vec![x])?);
        let (out, next) = self.backbone.step_on(&mut g, &vars, input, state)?;
        self.h = g.value(next.h).clone();
        self.c = g.value(next.c).clone();
        Ok(g.value(out).data().to_vec())
    }
}

// ── Common surface ──────────────────────────────────────────────────

/// A backbone of either family.
#[derive(Debug, Clone)]
pub enum Backbone {
    Mlp(MlpBackbone),
    Lstm(LstmBackbone),
}

/// Build a backbone with deterministic initialization.
pub fn init_backbone(
    kind: BackboneKind,
    k: usize,
    n: usize,
    hidden_units: usize,
    hidden_layers: usize,
    seed: u64,
) -> Result<Backbone> {
    match kind {
        BackboneKind::Mlp => Ok(Backbone::Mlp(MlpBackbone::init(
            k,
            n,
            hidden_units,
            hidden_layers,
            seed,
        )?)),
        BackboneKind::Lstm => {
            if hidden_layers != 1 {
                return Err(Error::Config(format!(
                    "lstm backbones are single-layer, got hidden_layers={hidden_layers}"
                )));
            }
            Ok(Backbone::Lstm(LstmBackbone::init(n, hidden_units, seed)?))
        }
    }
}

impl Backbone {
    pub fn kind(&self) -> BackboneKind {
        match self {
            Backbone::Mlp(_) => BackboneKind::Mlp,
            Backbone::Lstm(_) => BackboneKind::Lstm,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Backbone::Mlp(m) => m.n,
            Backbone::Lstm(l) => l.n,
        }
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        match self {
            Backbone::Mlp(m) => m.named_params(),
            Backbone::Lstm(l) => l.named_params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Backbone::Mlp(m) => m.params_mut(),
            Backbone::Lstm(l) => l.params_mut(),
        }
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        match self {
            Backbone::Mlp(m) => m.named_params_mut(),
            Backbone::Lstm(l) => l.named_params_mut(),
        }
    }
}
