//! JSON experiment configuration. Every key mirrors a long flag; flags given
//! on the command line take precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{CliError, Format};

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Config {
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub weights: Option<String>,
    pub potential: Option<String>,
    pub kind: Option<String>,
    pub value: Option<f64>,
    pub file: Option<String>,
    pub map: Option<String>,
    pub freqs: Option<String>,
    pub start: Option<usize>,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_steps: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_steps: Option<usize>,
    pub closed_form: Option<bool>,
    pub numeric: Option<bool>,
    pub return_word: Option<usize>,
    pub seed: Option<u64>,
    pub len: Option<usize>,
    pub paths: Option<usize>,
    pub depths: Option<Vec<usize>>,
    pub subst: Option<String>,
    pub prefix: Option<String>,
    pub prefix_len: Option<usize>,
    pub only: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}
