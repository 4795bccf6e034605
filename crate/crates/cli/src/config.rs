use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use reluapprox::construct::{DeltaMode, DeltaPolicy};
use reluapprox::metrics::{GridSpec, QuadratureRule};
use reluapprox::{Error, Result};

/// Parameters shared by every command. Every field is optional so a JSON
/// document and command-line flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(rename = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_list")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_mode: Option<DeltaMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_shrink: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<QuadratureRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "L")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cores: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_flop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suites: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub junit: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            offset: byte_offset(bytes, e.line(), e.column()),
            message: e.to_string(),
        })
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &ExperimentConfig) -> Self {
        overlay!(
            self, top, target, d, alpha, nu, n, n_list, delta_mode, delta_floor, delta_shrink,
            delta_target, grid_points, rule, seed, depth, cores, t_s, t_w, c_flop, suites, m,
            n_blocks, out, summary, trace, junit,
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn delta_policy(&self) -> Result<DeltaPolicy> {
        let mut p = DeltaPolicy::default();
        if let Some(mode) = self.delta_mode {
            p.mode = mode;
        }
        if let Some(f) = self.delta_floor {
            p.floor = f;
        }
        if let Some(s) = self.delta_shrink {
            p.shrink = s;
        }
        p.target = self.delta_target;
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self, d: usize) -> GridSpec {
        let mut g = GridSpec::default_for(d);
        if let Some(p) = self.grid_points {
            g.points_per_axis = p;
        }
        if let Some(r) = self.rule {
            g.rule = r;
        }
        g
    }

    /// The target, dimension, order and constant, defaulting to the unit
    /// cone in one dimension.
    pub fn target_spec(&self) -> (String, usize, f64, f64) {
        (
            self.target.clone().unwrap_or_else(|| "cone".into()),
            self.d.unwrap_or(1),
            self.alpha.unwrap_or(1.0),
            self.nu.unwrap_or(1.0),
        )
    }

    /// Copy with output paths removed, for embedding into outputs.
    pub fn echo(&self) -> Self {
        let mut c = self.clone();
        c.out = None;
        c.summary = None;
        c.trace = None;
        c.junit = None;
        c.seed = Some(self.seed());
        c
    }

    pub fn echo_json(&self) -> String {
        serde_json::to_string(&self.echo()).expect("config serializes")
    }
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut start = 0;
    for _ in 1..line {
        match bytes[start..].iter().position(|&b| b == b'\n') {
            Some(p) => start += p + 1,
            None => return bytes.len(),
        }
    }
    (start + column.saturating_sub(1)).min(bytes.len())
}
