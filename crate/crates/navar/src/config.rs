//! Flat key=value config files for training runs.
//!
//! One assignment per line; `#` starts a comment. Keys match the training
//! config fields, e.g.:
//!
//! ```text
//! backbone=mlp
//! k=2
//! hidden_units=16
//! epochs=2000
//! ```

use std::fs;
use std::path::Path;

use navar_core::backbones::BackboneKind;
use navar_core::model::NavarConfig;

use crate::error::{NavarError, Result};
use crate::io::format_g17;

/// Parse a config file over defaults; every key is optional.
pub fn load_config(path: &Path) -> Result<NavarConfig> {
    let text = fs::read_to_string(path).map_err(|e| NavarError::io(path, e))?;
    let mut config = NavarConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(NavarError::parse(
                path,
                line_no,
                format!("expected key=value, got `{line}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        apply_key(&mut config, key, value)
            .map_err(|msg| NavarError::parse(path, line_no, msg))?;
    }
    config.validate()?;
    Ok(config)
}

fn apply_key(config: &mut NavarConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
        value
            .parse::<T>()
            .map_err(|_| format!("cannot parse {key}=`{value}`"))
    }
    match key {
        "backbone" => {
            config.backbone =
                BackboneKind::parse(value).map_err(|_| format!("unknown backbone `{value}`"))?;
        }
        "k" => config.k = num(key, value)?,
        "hidden_units" => config.hidden_units = num(key, value)?,
        "hidden_layers" => config.hidden_layers = num(key, value)?,
        "batch_size" => config.batch_size = num(key, value)?,
        "learning_rate" => config.learning_rate = num(key, value)?,
        "lambda" => config.lambda = num(key, value)?,
        "mu" => config.mu = num(key, value)?,
        "epochs" => config.epochs = num(key, value)?,
        "seed" => config.seed = num(key, value)?,
        "val_fraction" => config.val_fraction = num(key, value)?,
        other => return Err(format!("unknown config key `{other}`")),
    }
    Ok(())
}

/// The config as `(key, value)` pairs, for report headers and `preset --show`.
pub fn config_echo(config: &NavarConfig) -> Vec<(String, String)> {
    vec![
        ("backbone".into(), config.backbone.as_str().into()),
        ("k".into(), config.k.to_string()),
        ("hidden_units".into(), config.hidden_units.to_string()),
        ("hidden_layers".into(), config.hidden_layers.to_string()),
        ("batch_size".into(), config.batch_size.to_string()),
        ("learning_rate".into(), format_g17(config.learning_rate)),
        ("lambda".into(), format_g17(config.lambda)),
        ("mu".into(), format_g17(config.mu)),
        ("epochs".into(), config.epochs.to_string()),
        ("seed".into(), config.seed.to_string()),
        ("val_fraction".into(), format_g17(config.val_fraction)),
    ]
}
