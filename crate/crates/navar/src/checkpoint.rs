//! Self-describing text checkpoint for trained models.
//!
//! Line-oriented: a magic/version line, the config, normalization stats,
//! then one `tensor <name> <ndim> <dims…>` record per parameter followed by
//! its values, and a final `end` marker. Values are written with 17
//! significant digits, so a round trip reproduces every f64 bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use navar_core::backbones::{init_backbone, Backbone, BackboneKind};
use navar_core::data::NormStats;
use navar_core::model::{NavarConfig, NavarModel};
use navar_core::numerics::Tensor;

use crate::error::{NavarError, Result};
use crate::io::{format_g17, write_file};

const MAGIC: &str = "navar-checkpoint v1";

pub fn save_checkpoint(path: &Path, model: &NavarModel) -> Result<()> {
    let c = &model.config;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("backbone {}\n", c.backbone.as_str()));
    out.push_str(&format!("n {}\n", model.n()));
    out.push_str(&format!("k {}\n", c.k));
    out.push_str(&format!("hidden_units {}\n", c.hidden_units));
    out.push_str(&format!("hidden_layers {}\n", c.hidden_layers));
    out.push_str(&format!("batch_size {}\n", c.batch_size));
    out.push_str(&format!("learning_rate {}\n", format_g17(c.learning_rate)));
    out.push_str(&format!("lambda {}\n", format_g17(c.lambda)));
    out.push_str(&format!("mu {}\n", format_g17(c.mu)));
    out.push_str(&format!("epochs {}\n", c.epochs));
    out.push_str(&format!("seed {}\n", c.seed));
    out.push_str(&format!("val_fraction {}\n", format_g17(c.val_fraction)));
    out.push_str(&format!("trained {}\n", u8::from(model.trained)));
    for (i, name) in model.variable_names.iter().enumerate() {
        out.push_str(&format!("name {i} {name}\n"));
    }
    out.push_str(&format!(
        "norm_mean {}\n",
        join_g17(&model.norm_stats.mean)
    ));
    out.push_str(&format!("norm_std {}\n", join_g17(&model.norm_stats.std)));
    for (name, tensor) in model.named_tensors() {
        out.push_str(&format!(
            "tensor {name} {} {}\n",
            tensor.shape().len(),
            tensor
                .shape()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
        out.push_str(&join_g17(tensor.data()));
        out.push('\n');
    }
    out.push_str("end\n");
    write_file(path, &out)
}

fn join_g17(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_g17(*v))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Reader<'a> {
    path: &'a Path,
    lines: Vec<String>,
    next: usize,
}

impl<'a> Reader<'a> {
    fn line(&mut self) -> Result<(usize, String)> {
        if self.next >= self.lines.len() {
            return Err(NavarError::parse(
                self.path,
                self.lines.len() + 1,
                "unexpected end of file (checkpoint truncated?)",
            ));
        }
        let no = self.next + 1;
        let line = self.lines[self.next].clone();
        self.next += 1;
        Ok((no, line))
    }

    /// Next line split as `<key> <rest>` with the expected key.
    fn field(&mut self, key: &str) -> Result<(usize, String)> {
        let (no, line) = self.line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok((no, rest.to_string())),
            _ => Err(NavarError::parse(
                self.path,
                no,
                format!("expected `{key} …`, got `{line}`"),
            )),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (no, rest) = self.field(key)?;
        rest.trim().parse::<T>().map_err(|_| {
            NavarError::parse(self.path, no, format!("cannot parse {key} value `{rest}`"))
        })
    }
}

pub fn load_checkpoint(path: &Path) -> Result<NavarModel> {
    let text = fs::read_to_string(path).map_err(|e| NavarError::io(path, e))?;
    let mut r = Reader {
        path,
        lines: text.lines().map(|l| l.to_string()).collect(),
        next: 0,
    };

    let (_, magic) = r.line()?;
    if magic != MAGIC {
        return Err(NavarError::version(
            path,
            format!("expected `{MAGIC}`, found `{magic}`"),
        ));
    }

    let (no, kind_str) = r.field("backbone")?;
    let backbone = BackboneKind::parse(kind_str.trim())
        .map_err(|_| NavarError::parse(path, no, format!("unknown backbone `{kind_str}`")))?;
    let n: usize = r.parse("n")?;
    let config = NavarConfig {
        backbone,
        k: r.parse("k")?,
        hidden_units: r.parse("hidden_units")?,
        hidden_layers: r.parse("hidden_layers")?,
        batch_size: r.parse("batch_size")?,
        learning_rate: r.parse("learning_rate")?,
        lambda: r.parse("lambda")?,
        mu: r.parse("mu")?,
        epochs: r.parse("epochs")?,
        seed: r.parse("seed")?,
        val_fraction: r.parse("val_fraction")?,
    };
    let trained: u8 = r.parse("trained")?;

    let mut names = vec![String::new(); n];
    for expect in 0..n {
        let (no, rest) = r.field("name")?;
        let (idx_str, name) = rest.split_once(' ').ok_or_else(|| {
            NavarError::parse(path, no, "name record needs an index and a value")
        })?;
        let idx: usize = idx_str
            .parse()
            .map_err(|_| NavarError::parse(path, no, "bad name index"))?;
        if idx != expect || idx >= n {
            return Err(NavarError::parse(path, no, format!("name index {idx} out of order")));
        }
        names[idx] = name.to_string();
    }

    let mean = parse_vector(&mut r, "norm_mean", n)?;
    let std = parse_vector(&mut r, "norm_std", n)?;

    // Expected tensor set for this config.
    let mut backbones: Vec<Backbone> = (0..n)
        .map(|_| {
            init_backbone(
                backbone,
                config.k,
                n,
                config.hidden_units,
                config.hidden_layers,
                0,
            )
            .map_err(NavarError::from)
        })
        .collect::<Result<_>>()?;
    let mut expected: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, b) in backbones.iter().enumerate() {
        for (pname, t) in b.named_params() {
            expected.insert(format!("b{i}.{pname}"), t.shape().to_vec());
        }
    }
    expected.insert("beta".to_string(), vec![n]);

    let mut loaded: BTreeMap<String, Tensor> = BTreeMap::new();
    loop {
        let (no, line) = r.line()?;
        if line == "end" {
            break;
        }
        let mut parts = line.split_whitespace();
        let (Some("tensor"), Some(name), Some(ndim_str)) =
            (parts.next(), parts.next(), parts.next())
        else {
            return Err(NavarError::parse(path, no, format!("expected a tensor record, got `{line}`")));
        };
        let ndim: usize = ndim_str
            .parse()
            .map_err(|_| NavarError::parse(path, no, "bad tensor rank"))?;
        let shape: Vec<usize> = parts
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| NavarError::parse(path, no, "bad tensor dimension"))?;
        if shape.len() != ndim {
            return Err(NavarError::parse(
                path,
                no,
                format!("tensor rank {ndim} disagrees with {} dimensions", shape.len()),
            ));
        }
        let Some(expected_shape) = expected.get(name) else {
            return Err(NavarError::version(
                path,
                format!("tensor `{name}` does not belong to a {} model", backbone.as_str()),
            ));
        };
        if expected_shape != &shape {
            return Err(NavarError::version(
                path,
                format!("tensor `{name}` has shape {shape:?}, config implies {expected_shape:?}"),
            ));
        }
        let numel: usize = shape.iter().product();
        let (vno, vline) = r.line()?;
        let values: Vec<f64> = vline
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| NavarError::parse(path, vno, format!("bad value in tensor `{name}`")))?;
        if values.len() != numel {
            return Err(NavarError::parse(
                path,
                vno,
                format!("tensor `{name}` carries {} values, shape needs {numel}", values.len()),
            ));
        }
        if loaded
            .insert(name.to_string(), Tensor::new(&shape, values)?)
            .is_some()
        {
            return Err(NavarError::parse(path, no, format!("duplicate tensor `{name}`")));
        }
    }

    let missing: Vec<&String> = expected.keys().filter(|k| !loaded.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(NavarError::version(
            path,
            format!("missing tensors for a {} model: {missing:?}", backbone.as_str()),
        ));
    }

    let beta = loaded.remove("beta").expect("checked present");
    for (i, b) in backbones.iter_mut().enumerate() {
        for (pname, slot) in b.named_params_mut() {
            *slot = loaded
                .remove(&format!("b{i}.{pname}"))
                .expect("checked present");
        }
    }

    NavarModel::from_parts(
        config,
        backbones,
        beta,
        NormStats { mean, std },
        names,
        trained != 0,
    )
    .map_err(NavarError::from)
}

fn parse_vector(r: &mut Reader, key: &str, n: usize) -> Result<Vec<f64>> {
    let (no, rest) = r.field(key)?;
    let values: Vec<f64> = rest
        .split_whitespace()
        .map(|v| v.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| NavarError::parse(r.path, no, format!("bad value in {key}")))?;
    if values.len() != n {
        return Err(NavarError::parse(
            r.path,
            no,
            format!("{key} has {} entries, expected {n}", values.len()),
        ));
    }
    Ok(values)
}
