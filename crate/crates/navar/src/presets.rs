//! Named hyperparameter presets for the benchmark families the model is
//! tuned on. Epochs default to 5000 (the training protocol length); seed
//! and validation fraction are runtime choices.

use navar_core::backbones::BackboneKind;
use navar_core::model::NavarConfig;

use crate::error::{NavarError, Result};

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub backbone: BackboneKind,
    pub k: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub mu: f64,
}

use BackboneKind::{Lstm, Mlp};

#[rustfmt::skip]
pub const PRESETS: &[Preset] = &[
    // MLP, nonlinear-VAR and earth-science benchmark families
    Preset { name: "nonlinear-var-n3",       backbone: Mlp,  k: 5,  hidden_units: 32,  hidden_layers: 1, batch_size: 64,  learning_rate: 0.00005, lambda: 0.1344, mu: 2.903e-3 },
    Preset { name: "nonlinear-var-n5",       backbone: Mlp,  k: 5,  hidden_units: 16,  hidden_layers: 1, batch_size: 64,  learning_rate: 0.0001,  lambda: 0.1596, mu: 2.420e-3 },
    Preset { name: "nonlinear-var-n10",      backbone: Mlp,  k: 5,  hidden_units: 128, hidden_layers: 1, batch_size: 64,  learning_rate: 0.0005,  lambda: 0.2014, mu: 8.557e-3 },
    Preset { name: "nonlinear-var-n20",      backbone: Mlp,  k: 5,  hidden_units: 32,  hidden_layers: 1, batch_size: 64,  learning_rate: 0.0002,  lambda: 0.2434, mu: 4.508e-3 },
    Preset { name: "climate",                backbone: Mlp,  k: 2,  hidden_units: 32,  hidden_layers: 1, batch_size: 16,  learning_rate: 0.0002,  lambda: 0.3924, mu: 4.322e-3 },
    Preset { name: "weather",                backbone: Mlp,  k: 5,  hidden_units: 32,  hidden_layers: 1, batch_size: 64,  learning_rate: 0.0001,  lambda: 0.0560, mu: 4.903e-3 },
    Preset { name: "river",                  backbone: Mlp,  k: 5,  hidden_units: 8,   hidden_layers: 1, batch_size: 256, learning_rate: 0.0001,  lambda: 0.1708, mu: 5.092e-4 },
    // LSTM counterparts
    Preset { name: "nonlinear-var-n3-lstm",  backbone: Lstm, k: 5,  hidden_units: 16,  hidden_layers: 1, batch_size: 64,  learning_rate: 0.0001,  lambda: 0.1370, mu: 8.952e-4 },
    Preset { name: "nonlinear-var-n5-lstm",  backbone: Lstm, k: 5,  hidden_units: 32,  hidden_layers: 1, batch_size: 32,  learning_rate: 0.00005, lambda: 0.2445, mu: 2.6756e-4 },
    Preset { name: "nonlinear-var-n10-lstm", backbone: Lstm, k: 5,  hidden_units: 64,  hidden_layers: 1, batch_size: 128, learning_rate: 0.0001,  lambda: 0.0784, mu: 7.1237e-4 },
    Preset { name: "nonlinear-var-n20-lstm", backbone: Lstm, k: 5,  hidden_units: 128, hidden_layers: 1, batch_size: 64,  learning_rate: 0.00005, lambda: 0.3512, mu: 1.901e-6 },
    Preset { name: "climate-lstm",           backbone: Lstm, k: 2,  hidden_units: 64,  hidden_layers: 1, batch_size: 128, learning_rate: 0.0002,  lambda: 0.2334, mu: 6.231e-4 },
    Preset { name: "weather-lstm",           backbone: Lstm, k: 5,  hidden_units: 8,   hidden_layers: 1, batch_size: 256, learning_rate: 0.0005,  lambda: 0.0172, mu: 1.687e-3 },
    Preset { name: "river-lstm",             backbone: Lstm, k: 5,  hidden_units: 128, hidden_layers: 1, batch_size: 128, learning_rate: 0.001,   lambda: 0.0544, mu: 4.465e-4 },
    // Gene-expression benchmark family (46 replicates of 21 steps)
    Preset { name: "dream3-ecoli1",          backbone: Mlp,  k: 2,  hidden_units: 10,  hidden_layers: 1, batch_size: 128, learning_rate: 0.0005,  lambda: 0.1883, mu: 1.114e-4 },
    Preset { name: "dream3-ecoli2",          backbone: Mlp,  k: 2,  hidden_units: 10,  hidden_layers: 1, batch_size: 32,  learning_rate: 0.001,   lambda: 0.2011, mu: 1.710e-4 },
    Preset { name: "dream3-yeast1",          backbone: Mlp,  k: 2,  hidden_units: 10,  hidden_layers: 2, batch_size: 16,  learning_rate: 0.002,   lambda: 0.2697, mu: 1.424e-4 },
    Preset { name: "dream3-yeast2",          backbone: Mlp,  k: 2,  hidden_units: 10,  hidden_layers: 1, batch_size: 256, learning_rate: 0.0002,  lambda: 0.1563, mu: 2.013e-4 },
    Preset { name: "dream3-yeast3",          backbone: Mlp,  k: 2,  hidden_units: 10,  hidden_layers: 1, batch_size: 16,  learning_rate: 0.0002,  lambda: 0.1559, mu: 1.644e-4 },
    Preset { name: "dream3-ecoli1-lstm",     backbone: Lstm, k: 21, hidden_units: 10,  hidden_layers: 1, batch_size: 46,  learning_rate: 0.002,   lambda: 0.2208, mu: 1.094e-5 },
    Preset { name: "dream3-ecoli2-lstm",     backbone: Lstm, k: 21, hidden_units: 10,  hidden_layers: 1, batch_size: 46,  learning_rate: 0.002,   lambda: 0.1958, mu: 3.233e-6 },
    Preset { name: "dream3-yeast1-lstm",     backbone: Lstm, k: 21, hidden_units: 10,  hidden_layers: 1, batch_size: 46,  learning_rate: 0.002,   lambda: 0.2343, mu: 5.309e-5 },
    Preset { name: "dream3-yeast2-lstm",     backbone: Lstm, k: 21, hidden_units: 10,  hidden_layers: 1, batch_size: 46,  learning_rate: 0.002,   lambda: 0.2189, mu: 1.987e-5 },
    Preset { name: "dream3-yeast3-lstm",     backbone: Lstm, k: 21, hidden_units: 10,  hidden_layers: 1, batch_size: 46,  learning_rate: 0.002,   lambda: 0.2128, mu: 1.049e-5 },
];

/// Epoch count shared by every preset; override with `--epochs`.
pub const PRESET_EPOCHS: usize = 5000;

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| NavarError::UnknownPreset(name.to_string()))
}

impl Preset {
    pub fn to_config(&self) -> NavarConfig {
        NavarConfig {
            backbone: self.backbone,
            k: self.k,
            hidden_units: self.hidden_units,
            hidden_layers: self.hidden_layers,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            mu: self.mu,
            epochs: PRESET_EPOCHS,
            seed: 0,
            val_fraction: 0.2,
        }
    }
}
