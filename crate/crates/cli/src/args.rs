//! Flags of every command. Each argument struct doubles as its JSON config
//! file: flags given on the command line win over values from `--config`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{usage_err, CliError, CliResult};
use crate::format::ModelName;

#[derive(Debug, Parser)]
#[command(name = "jumpmeans", version, about = "MAP inference for Markov jump processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Fit a model and write parameters, trajectories and a trace.
    Fit(FitArgs),
    /// Score held-out reconstruction error against the majority baseline.
    Evaluate(EvaluateArgs),
    /// Aggregate results files into summary and scaling tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// 10 directly observed states.
    Synthetic1,
    /// 5 hidden states emitting 5 symbols.
    Synthetic2,
    /// 5 hidden states with Gaussian emissions.
    Gaussian,
    /// Prefix-nested hidden-state datasets of increasing size.
    Scaling,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Synthetic1 => "synthetic1",
            Protocol::Synthetic2 => "synthetic2",
            Protocol::Gaussian => "gaussian",
            Protocol::Scaling => "scaling",
        }
    }
}

/// Fills unset fields of `$a` from `$b`.
macro_rules! overlay {
    ($a:expr, $b:expr; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sequences (the largest size for `scaling`).
    #[arg(long)]
    pub num_seqs: Option<usize>,
    #[arg(long)]
    pub obs_per_seq: Option<usize>,
    /// Observation window; defaults to one time unit per observation.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Dataset sizes of the scaling suite, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Output file, or output directory for `scaling`.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.take() {
            let file: Self = load_config(&path, "simulate")?;
            overlay!(self, file; protocol, seed, num_seqs, obs_per_seq, horizon, sizes, out);
        }
        let Some(protocol) = self.protocol else {
            return usage_err("--protocol is required");
        };
        if self.out.is_none() {
            return usage_err("--out is required");
        }
        self.seed.get_or_insert(0);
        self.obs_per_seq.get_or_insert(20);
        if protocol == Protocol::Scaling {
            let sizes = self.sizes.get_or_insert_with(|| vec![100, 1_000, 10_000, 100_000]);
            if let Some(n) = self.num_seqs {
                sizes.retain(|&s| s <= n);
            }
            if sizes.is_empty() {
                return usage_err("no scaling size left");
            }
            self.num_seqs = sizes.iter().copied().max();
        } else if self.sizes.is_some() {
            return usage_err("--sizes only applies to the scaling protocol");
        }
        self.num_seqs.get_or_insert(500);
        Ok(self)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// Dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relative objective change that ends the fit.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fraction of interior observations per sequence held out.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Seed of the hold-out split and the emission initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Required for Gaussian observations with the finite-state model.
    #[arg(long)]
    pub num_states: Option<usize>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub xi_lambda: Option<f64>,
    #[arg(long)]
    pub mu_lambda: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub xi1: Option<f64>,
    #[arg(long)]
    pub xi2: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Bin edges for scoring Gaussian data; defaults to the generator's.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Record zero elapsed time so traces are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    /// Output directory.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl FitArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.take() {
            let file: Self = load_config(&path, "fit")?;
            overlay!(self, file; data, model, max_iters, tol, holdout, seed, num_states,
                xi, xi_lambda, mu_lambda, zeta, xi1, xi2, gamma, thresholds, out);
            self.no_timing |= file.no_timing;
        }
        let Some(model) = self.model else {
            return usage_err("--model is required");
        };
        if self.data.is_none() || self.out.is_none() {
            return usage_err("--data and --out are required");
        }
        let hyper = match model {
            ModelName::Imjp => jumpmeans::Hyperparams::nonparametric_default(),
            _ => jumpmeans::Hyperparams::parametric_default(),
        };
        self.max_iters.get_or_insert(if model == ModelName::Imjp { 50 } else { 300 });
        self.tol.get_or_insert(1e-6);
        self.holdout.get_or_insert(0.0);
        self.seed.get_or_insert(0);
        self.xi.get_or_insert(hyper.xi);
        self.xi_lambda.get_or_insert(hyper.xi_lambda);
        self.mu_lambda.get_or_insert(hyper.mu_lambda);
        self.zeta.get_or_insert(hyper.zeta);
        self.xi1.get_or_insert(hyper.xi1);
        self.xi2.get_or_insert(hyper.xi2);
        self.gamma.get_or_insert(hyper.gamma);
        self.hyperparams().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !self.tol.is_some_and(|t| t >= 0.0) {
            return usage_err("--tol must be non-negative");
        }
        if self.max_iters == Some(0) {
            return usage_err("--max-iters must be at least 1");
        }
        let holdout = self.holdout.unwrap_or_default();
        if !(0.0..1.0).contains(&holdout) {
            return usage_err(format!("--holdout must lie in [0, 1), got {holdout}"));
        }
        Ok(self)
    }

    pub fn hyperparams(&self) -> jumpmeans::Hyperparams {
        jumpmeans::Hyperparams {
            xi: self.xi.unwrap_or_default(),
            xi_lambda: self.xi_lambda.unwrap_or_default(),
            mu_lambda: self.mu_lambda.unwrap_or_default(),
            zeta: self.zeta.unwrap_or_default(),
            xi1: self.xi1.unwrap_or_default(),
            xi2: self.xi2.unwrap_or_default(),
            gamma: self.gamma.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateArgs {
    /// Dataset file the model was fit on, before the split.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Fit output directory; supplies the model, trajectories, split and
    /// trace files not given explicitly.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Trace CSV; its last elapsed time is reported as the fit's runtime.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Dataset label in the results; defaults to the data file stem.
    #[arg(long)]
    pub dataset_id: Option<String>,
    /// Method label in the results; defaults to the model kind.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Score only the majority baseline; no model is needed.
    #[arg(long)]
    pub baseline_only: bool,
    /// Results file.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl EvaluateArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.take() {
            let file: Self = load_config(&path, "evaluate")?;
            overlay!(self, file; data, run, model, trajectories, split, trace, dataset_id, method,
                thresholds, out);
            self.baseline_only |= file.baseline_only;
        }
        if let Some(dir) = self.run.clone() {
            let fill = |slot: &mut Option<PathBuf>, name: &str| {
                if slot.is_none() {
                    let p = dir.join(name);
                    if p.exists() {
                        *slot = Some(p);
                    }
                }
            };
            fill(&mut self.model, "model.json");
            fill(&mut self.trajectories, "trajectories.json");
            fill(&mut self.split, "split.json");
            fill(&mut self.trace, "trace.csv");
        }
        let Some(data) = &self.data else {
            return usage_err("--data is required");
        };
        if self.split.is_none() || self.out.is_none() {
            return usage_err("--split and --out are required");
        }
        if !self.baseline_only && (self.model.is_none() || self.trajectories.is_none()) {
            return usage_err("--model and --trajectories are required unless --baseline-only");
        }
        if self.dataset_id.is_none() {
            self.dataset_id = Some(
                data.file_stem()
                    .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned()),
            );
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Results files to aggregate.
    #[arg(num_args = 0..)]
    pub results: Vec<PathBuf>,
    /// Summary table, one row per dataset and method.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Size, runtime and error of every run that recorded its runtime.
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl ReportArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.take() {
            let file: Self = load_config(&path, "report")?;
            if self.results.is_empty() {
                self.results = file.results;
            }
            overlay!(self, file; summary, scaling);
        }
        if self.results.is_empty() {
            return usage_err("at least one results file is required");
        }
        if self.summary.is_none() {
            return usage_err("--summary is required");
        }
        Ok(self)
    }
}

/// Reads a config file: either a flat object of settings or a run manifest,
/// whose `config` block is used.
fn load_config<T: DeserializeOwned>(path: &Path, command: &str) -> CliResult<T> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(obj) = value.as_object_mut() {
        if let (Some(cmd), Some(config)) = (obj.get("command").cloned(), obj.remove("config")) {
            if cmd.as_str() != Some(command) {
                return usage_err(format!("{} is a manifest of another command", path.display()));
            }
            value = config;
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
