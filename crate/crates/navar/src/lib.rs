//! File formats, presets, and pipeline plumbing around `navar-core`: CSV
//! data/truth/score tables, text checkpoints, tuned hyperparameter presets,
//! key=value run configs, and end-to-end generate→train→score→evaluate
//! runs. The `navar` binary exposes all of it on the command line.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod presets;

pub use error::{NavarError, Result};

/// Re-export of the algorithmic core.
pub use navar_core as core;
