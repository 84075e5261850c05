//! Experiment configuration.
//!
//! The format is line oriented UTF-8: `key = value` pairs, `#` comments and
//! optional `[problem]`, `[train]`, `[scheduler]`, `[correction]` and
//! `[output]` headers. Keys are unique across sections; a key placed under a
//! header must belong to that section. Omitted keys take the problem's
//! defaults.
//!
//! Learning-rate reductions fire on strict improvement of the best loss
//! seen so far, compared exactly (no relative threshold).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{CsnnError, Result};
use crate::optim::CorrectionPolicy;
use crate::problems::{catalog, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zero,
    Random,
}

impl std::fmt::Display for Init {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Init::Zero => "zero",
            Init::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub problem: String,
    pub n: usize,
    /// Fourier family size on periodic axes; `2N − 3` when unset.
    pub fourier_size: Option<usize>,
    /// CGL order of the sample nodes on non-periodic axes; `N` when unset.
    pub cgl_order: Option<usize>,
    pub uniform_samples: usize,
    /// Fixed budget; unset means the problem's default for each `N`.
    pub iterations: Option<usize>,
    pub lr: f64,
    pub init: Init,
    pub init_scale: f64,
    pub seed: u64,
    pub u0_init: f64,
    pub u0_lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub u0_factor: f64,
    pub u0_patience: usize,
    pub correction: bool,
    pub threshold: usize,
    pub interval: usize,
    pub h: f64,
    pub out_dir: Option<PathBuf>,
    pub grid_cells: usize,
    pub n_list: Vec<usize>,
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("problem", &["problem", "N", "fourier_size", "cgl_order", "uniform_samples"]),
    ("train", &["iterations", "lr", "init", "init_scale", "seed", "u0_init", "u0_lr"]),
    ("scheduler", &["factor", "patience", "min_lr", "u0_factor", "u0_patience"]),
    ("correction", &["correction", "threshold", "interval", "h"]),
    ("output", &["out_dir", "grid_cells", "N_list"]),
];

fn invalid(field: &str, message: impl Into<String>) -> CsnnError {
    CsnnError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

impl TrainConfig {
    /// Defaults for `spec` at its reference order.
    pub fn for_problem(spec: &ProblemSpec) -> Self {
        let d = spec.defaults();
        let policy = CorrectionPolicy::default();
        Self {
            problem: spec.name().to_string(),
            n: d.n,
            fourier_size: None,
            cgl_order: None,
            uniform_samples: d.uniform_samples.max(1),
            iterations: d.iterations,
            lr: d.lr,
            init: Init::Zero,
            init_scale: 0.1,
            seed: 0,
            u0_init: 0.0,
            u0_lr: if spec.has_u0() { d.u0_lr } else { d.lr },
            factor: d.factor,
            patience: d.patience,
            min_lr: 0.0,
            u0_factor: if spec.has_u0() { d.u0_factor } else { d.factor },
            u0_patience: if spec.has_u0() { d.u0_patience } else { d.patience },
            correction: spec.has_u0(),
            threshold: policy.threshold,
            interval: policy.interval,
            h: policy.h,
            out_dir: None,
            grid_cells: d.grid_cells,
            n_list: d.n_list.clone(),
        }
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        catalog(&self.problem)
    }

    pub fn fourier_size(&self) -> usize {
        self.fourier_size_at(self.n)
    }

    pub fn fourier_size_at(&self, n: usize) -> usize {
        self.fourier_size.unwrap_or((2 * n).saturating_sub(3).max(1))
    }

    pub fn cgl_order_at(&self, n: usize) -> usize {
        self.cgl_order.unwrap_or(n)
    }

    /// Iteration budget for a run at order `n`.
    pub fn iterations_at(&self, n: usize) -> usize {
        match self.iterations {
            Some(it) => it,
            None => {
                let per_n = catalog(&self.problem).map(|s| s.defaults().iterations_per_n).unwrap_or(0);
                per_n * n
            }
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations_at(self.n)
    }

    /// Same configuration at another order; explicit sizes are kept.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn correction_policy(&self) -> CorrectionPolicy {
        CorrectionPolicy {
            threshold: self.threshold,
            interval: self.interval,
            h: self.h,
        }
    }

    pub fn out_dir_or_default(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&self.problem))
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        if self.n < 2 {
            return Err(invalid("N", "must be at least 2"));
        }
        if self.fourier_size == Some(0) {
            return Err(invalid("fourier_size", "must be positive"));
        }
        if self.cgl_order.is_some_and(|c| c < 2) {
            return Err(invalid("cgl_order", "must be at least 2"));
        }
        if self.uniform_samples == 0 {
            return Err(invalid("uniform_samples", "must be positive"));
        }
        if self.iterations == Some(0) || self.total_iterations() == 0 {
            return Err(invalid("iterations", "must be positive"));
        }
        for (field, lr) in [("lr", self.lr), ("u0_lr", self.u0_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(invalid(field, format!("must be positive, got {lr}")));
            }
        }
        for (field, f) in [("factor", self.factor), ("u0_factor", self.u0_factor)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid(field, format!("must lie in (0, 1), got {f}")));
            }
        }
        if self.patience == 0 {
            return Err(invalid("patience", "must be positive"));
        }
        if self.u0_patience == 0 {
            return Err(invalid("u0_patience", "must be positive"));
        }
        if !(self.min_lr >= 0.0) {
            return Err(invalid("min_lr", "must be non-negative"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(invalid("init_scale", "must be non-negative"));
        }
        if !self.u0_init.is_finite() {
            return Err(invalid("u0_init", "must be finite"));
        }
        if self.interval == 0 {
            return Err(invalid("interval", "must be at least 1"));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(invalid("h", format!("must lie in (0, 1), got {}", self.h)));
        }
        if self.correction && !spec.has_u0() {
            return Err(invalid("correction", format!("{} has no center value", self.problem)));
        }
        if self.grid_cells == 0 {
            return Err(invalid("grid_cells", "must be positive"));
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] < 2 {
            return Err(invalid("N_list", "must be a strictly increasing list of orders >= 2"));
        }
        Ok(())
    }

    fn assign(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        fn boolean(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => Err(format!("expected true or false, got {v:?}")),
            }
        }
        match key {
            "problem" => self.problem = value.to_string(),
            "N" => self.n = num(value)?,
            "fourier_size" => self.fourier_size = Some(num(value)?),
            "cgl_order" => self.cgl_order = Some(num(value)?),
            "uniform_samples" => self.uniform_samples = num(value)?,
            "iterations" => self.iterations = Some(num(value)?),
            "lr" => self.lr = num(value)?,
            "init" => {
                self.init = match value {
                    "zero" => Init::Zero,
                    "random" => Init::Random,
                    _ => return Err(format!("expected zero or random, got {value:?}")),
                }
            }
            "init_scale" => self.init_scale = num(value)?,
            "seed" => self.seed = num(value)?,
            "u0_init" => self.u0_init = num(value)?,
            "u0_lr" => self.u0_lr = num(value)?,
            "factor" => self.factor = num(value)?,
            "patience" => self.patience = num(value)?,
            "min_lr" => self.min_lr = num(value)?,
            "u0_factor" => self.u0_factor = num(value)?,
            "u0_patience" => self.u0_patience = num(value)?,
            "correction" => self.correction = boolean(value)?,
            "threshold" => self.threshold = num(value)?,
            "interval" => self.interval = num(value)?,
            "h" => self.h = num(value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "grid_cells" => self.grid_cells = num(value)?,
            "N_list" => {
                self.n_list = value
                    .split(',')
                    .map(|s| num(s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut section = |name: &str, entries: Vec<(&str, Option<String>)>| {
            let _ = writeln!(s, "[{name}]");
            for (k, v) in entries {
                if let Some(v) = v {
                    let _ = writeln!(s, "{k} = {v}");
                }
            }
            s.push('\n');
        };
        section(
            "problem",
            vec![
                ("problem", Some(self.problem.clone())),
                ("N", Some(self.n.to_string())),
                ("fourier_size", self.fourier_size.map(|v| v.to_string())),
                ("cgl_order", self.cgl_order.map(|v| v.to_string())),
                ("uniform_samples", Some(self.uniform_samples.to_string())),
            ],
        );
        section(
            "train",
            vec![
                ("iterations", self.iterations.map(|v| v.to_string())),
                ("lr", Some(self.lr.to_string())),
                ("init", Some(self.init.to_string())),
                ("init_scale", Some(self.init_scale.to_string())),
                ("seed", Some(self.seed.to_string())),
                ("u0_init", Some(self.u0_init.to_string())),
                ("u0_lr", Some(self.u0_lr.to_string())),
            ],
        );
        section(
            "scheduler",
            vec![
                ("factor", Some(self.factor.to_string())),
                ("patience", Some(self.patience.to_string())),
                ("min_lr", Some(self.min_lr.to_string())),
                ("u0_factor", Some(self.u0_factor.to_string())),
                ("u0_patience", Some(self.u0_patience.to_string())),
            ],
        );
        section(
            "correction",
            vec![
                ("correction", Some(self.correction.to_string())),
                ("threshold", Some(self.threshold.to_string())),
                ("interval", Some(self.interval.to_string())),
                ("h", Some(self.h.to_string())),
            ],
        );
        let n_list: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
        section(
            "output",
            vec![
                ("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
                ("grid_cells", Some(self.grid_cells.to_string())),
                ("N_list", Some(n_list.join(", "))),
            ],
        );
        s.pop();
        s
    }
}

pub fn parse_config(text: &str) -> Result<TrainConfig> {
    let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| CsnnError::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| err(format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let home = SECTIONS
            .iter()
            .find(|(_, keys)| keys.contains(&key))
            .map(|(s, _)| *s)
            .ok_or_else(|| err(format!("unknown key {key:?}")))?;
        if let Some(s) = section {
            if s != home {
                return Err(err(format!("key {key:?} belongs in [{home}], not [{s}]")));
            }
        }
        if value.is_empty() {
            return Err(err(format!("missing value for {key:?}")));
        }
        if entries.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
            return Err(err(format!("duplicate key {key:?}")));
        }
    }
    let (problem, line) = entries
        .get("problem")
        .ok_or_else(|| invalid("problem", "missing"))?;
    let spec = catalog(problem).map_err(|e| CsnnError::Parse {
        line: *line,
        message: e.to_string(),
    })?;
    let mut cfg = TrainConfig::for_problem(&spec);
    for (key, (value, line)) in &entries {
        cfg.assign(key, value)
            .map_err(|message| CsnnError::Parse { line: *line, message: format!("{key}: {message}") })?;
    }
    if !entries.contains_key("N_list") && entries.contains_key("N") && !spec.defaults().n_list.contains(&cfg.n) {
        cfg.n_list = vec![cfg.n];
    }
    cfg.validate()?;
    Ok(cfg)
}
