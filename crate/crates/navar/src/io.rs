//! CSV formats: data tables, truth matrices, score matrices, ROC points,
//! training reports, and lag records.
//!
//! All floating-point output uses 17 significant digits, which round-trips
//! f64 exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use navar_core::data::TimeSeriesDataset;
use navar_core::numerics::Tensor;
use navar_core::scoring::{GroundTruthGraph, LagRecord, RocCurve, ScoreMatrix};

use crate::error::{NavarError, Result};

/// 17 significant digits: enough to reproduce any f64 bit-exactly.
pub fn format_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_cell(path: &Path, line_no: usize, col: usize, cell: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        NavarError::parse(
            path,
            line_no,
            format!("column {} is not numeric: `{}`", col + 1, cell.trim()),
        )
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| NavarError::io(path, e))?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

/// Load a rectangular numeric table: one row per time step, one column per
/// variable. A column named `replicate` (header mode only) splits the rows
/// into replicate series on value changes.
pub fn load_csv(path: &Path, has_header: bool, delimiter: char) -> Result<TimeSeriesDataset> {
    let lines = read_lines(path)?;
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push((idx + 1, line.split(delimiter).collect()));
    }
    if rows.is_empty() {
        return Err(NavarError::parse(path, 1, "empty table"));
    }

    let mut names: Vec<String> = Vec::new();
    let mut replicate_col: Option<usize> = None;
    let data_start = if has_header {
        let (_, header) = &rows[0];
        for (c, cell) in header.iter().enumerate() {
            let cell = cell.trim();
            if cell.eq_ignore_ascii_case("replicate") {
                if replicate_col.is_some() {
                    return Err(NavarError::parse(path, 1, "duplicate replicate column"));
                }
                replicate_col = Some(c);
            } else {
                names.push(cell.to_string());
            }
        }
        1
    } else {
        let width = rows[0].1.len();
        names = (0..width).map(|c| format!("x{}", c + 1)).collect();
        0
    };

    let width = rows[data_start].1.len();
    let expected_vars = if replicate_col.is_some() { width - 1 } else { width };
    if has_header && names.len() != expected_vars {
        return Err(NavarError::parse(
            path,
            rows[data_start].0,
            format!(
                "header names {} variables but rows have {expected_vars}",
                names.len()
            ),
        ));
    }

    let mut replicates: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut current_tag: Option<String> = None;
    for (line_no, cells) in &rows[data_start..] {
        if cells.len() != width {
            return Err(NavarError::parse(
                path,
                *line_no,
                format!("row has {} cells, expected {width}", cells.len()),
            ));
        }
        let tag = replicate_col.map(|c| cells[c].trim().to_string());
        if tag != current_tag {
            if !current.is_empty() {
                replicates.push(std::mem::take(&mut current));
            }
            current_tag = tag;
        }
        let mut var = 0;
        for (c, cell) in cells.iter().enumerate() {
            if Some(c) == replicate_col {
                continue;
            }
            current.push(parse_cell(path, *line_no, c, cell)?);
            var += 1;
        }
        debug_assert_eq!(var, expected_vars);
    }
    if !current.is_empty() {
        replicates.push(current);
    }

    let n = expected_vars;
    let tensors: Vec<Tensor> = replicates
        .into_iter()
        .map(|data| {
            let t = data.len() / n;
            Tensor::new(&[t, n], data).map_err(NavarError::from)
        })
        .collect::<Result<_>>()?;
    Ok(TimeSeriesDataset {
        replicates: tensors,
        variable_names: names,
        truth: None,
        norm_stats: None,
    })
}

/// Write a dataset as CSV with a header row; multi-replicate datasets get a
/// leading `replicate` column.
pub fn save_csv(path: &Path, dataset: &TimeSeriesDataset, delimiter: char) -> Result<()> {
    let mut out = String::new();
    let multi = dataset.replicates.len() > 1;
    if multi {
        out.push_str("replicate");
        out.push(delimiter);
    }
    out.push_str(&dataset.variable_names.join(&delimiter.to_string()));
    out.push('\n');
    for (r, rep) in dataset.replicates.iter().enumerate() {
        for t in 0..rep.rows() {
            if multi {
                out.push_str(&r.to_string());
                out.push(delimiter);
            }
            let row: Vec<String> = (0..rep.cols()).map(|j| format_g17(rep.at(t, j))).collect();
            out.push_str(&row.join(&delimiter.to_string()));
            out.push('\n');
        }
    }
    write_file(path, &out)
}

/// Load an N×N 0/1 adjacency matrix; a non-numeric first row is treated as
/// a header and skipped.
pub fn load_truth_csv(path: &Path) -> Result<GroundTruthGraph> {
    let lines = read_lines(path)?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push((idx + 1, vals)),
            Err(_) if rows.is_empty() && idx == 0 => continue, // header
            Err(_) => {
                return Err(NavarError::parse(path, idx + 1, "non-numeric cell in truth matrix"))
            }
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(NavarError::parse(path, 1, "empty truth matrix"));
    }
    let mut adjacency = Vec::with_capacity(n * n);
    for (line_no, vals) in &rows {
        if vals.len() != n {
            return Err(NavarError::parse(
                path,
                *line_no,
                format!("truth matrix is not square: row has {} cells for {n} rows", vals.len()),
            ));
        }
        for &v in vals {
            if v == 0.0 {
                adjacency.push(false);
            } else if v == 1.0 {
                adjacency.push(true);
            } else {
                return Err(NavarError::parse(
                    path,
                    *line_no,
                    format!("truth entries must be 0 or 1, got {v}"),
                ));
            }
        }
    }
    GroundTruthGraph::new(adjacency, n).map_err(NavarError::from)
}

pub fn save_truth_csv(path: &Path, truth: &GroundTruthGraph, names: &[String]) -> Result<()> {
    let mut out = String::new();
    if names.len() == truth.n {
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for i in 0..truth.n {
        let row: Vec<&str> = (0..truth.n)
            .map(|j| if truth.at(i, j) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Load an N×N score matrix; a non-numeric first row is treated as a header.
pub fn load_scores_csv(path: &Path) -> Result<ScoreMatrix> {
    let lines = read_lines(path)?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push((idx + 1, vals)),
            Err(_) if rows.is_empty() && idx == 0 => continue,
            Err(_) => return Err(NavarError::parse(path, idx + 1, "non-numeric score cell")),
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(NavarError::parse(path, 1, "empty score matrix"));
    }
    let mut scores = Vec::with_capacity(n * n);
    for (line_no, vals) in &rows {
        if vals.len() != n {
            return Err(NavarError::parse(
                path,
                *line_no,
                format!("score matrix is not square: row has {} cells for {n} rows", vals.len()),
            ));
        }
        scores.extend_from_slice(vals);
    }
    ScoreMatrix::new(scores, n).map_err(NavarError::from)
}

pub fn save_scores_csv(path: &Path, scores: &ScoreMatrix, names: &[String]) -> Result<()> {
    let mut out = String::new();
    if names.len() == scores.n {
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for i in 0..scores.n {
        let row: Vec<String> = (0..scores.n).map(|j| format_g17(scores.at(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn save_roc_csv(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in &roc.points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_g17(p.false_positive_rate),
            format_g17(p.true_positive_rate),
            format_g17(p.threshold)
        ));
    }
    write_file(path, &out)
}

/// Training report: config echo as `# key=value` comment lines, then
/// `epoch,train_loss,val_mse` rows (val_mse blank when absent).
pub fn save_report_csv(
    path: &Path,
    config_echo: &[(String, String)],
    train_loss: &[f64],
    val_mse: &[f64],
) -> Result<()> {
    let mut out = String::new();
    for (key, value) in config_echo {
        out.push_str(&format!("# {key}={value}\n"));
    }
    out.push_str("epoch,train_loss,val_mse\n");
    for (e, loss) in train_loss.iter().enumerate() {
        let val = val_mse.get(e).map(|v| format_g17(*v)).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", e + 1, format_g17(*loss), val));
    }
    write_file(path, &out)
}

pub fn save_lag_records_csv(path: &Path, records: &[LagRecord]) -> Result<()> {
    let mut out = String::from("k,score,mse,delta_score\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.k,
            format_g17(r.score),
            format_g17(r.mse),
            format_g17(r.delta_score)
        ));
    }
    write_file(path, &out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| NavarError::io(path, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| NavarError::io(path, e))?;
    Ok(())
}
