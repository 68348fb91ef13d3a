use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyPohozaev,
    BuildCounterexample,
    Eigen,
    SecondVariation,
    Minimize,
    Oracle,
    Bifurcation,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyPohozaev => "verify-pohozaev",
            Command::BuildCounterexample => "build-counterexample",
            Command::Eigen => "eigen",
            Command::SecondVariation => "second-variation",
            Command::Minimize => "minimize",
            Command::Oracle => "oracle",
            Command::Bifurcation => "bifurcation",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Special,
    Full,
}

/// Numerical laboratory for the L_p-Minkowski equation on S^n with p ≤ −n−1.
#[derive(Debug, Parser)]
#[command(name = "lpm", version, arg_required_else_help = true)]
pub struct Args {
    /// Subcommand; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON config file; flags given on the command line override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Highest harmonic degree of the variational basis.
    #[arg(long = "L")]
    pub l: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub mu_max: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub seed_amplitude: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub phi_k: Option<f64>,
    #[arg(long)]
    pub phi_inf: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Exponent of the critical weight (p = −n−1).
    #[arg(long)]
    pub d: Option<f64>,
    /// Offset of the critical weight (p = −n−1).
    #[arg(long)]
    pub c: Option<f64>,
    /// Seed for the random projective fields.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 2, value_names = ["P_MIN", "P_MAX"], allow_hyphen_values = true)]
    pub scan: Option<Vec<f64>>,
    /// Output directory for JSON and CSV artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Every setting of a run, after merging the config file with the flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<[f64; 2]>,
    /// Paths and worker counts are excluded from the echoed config so that output is reproducible.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if $args.$field.is_some() { $cfg.$field = $args.$field.clone(); })*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    /// Config file first, then every flag that was given.
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if args.command.is_some() {
            cfg.subcommand = args.command;
        }
        overlay!(
            cfg, args, n, p, resolution, l, mode, mu_max, seed_amplitude, tol, max_iter, phi_k, phi_inf, beta0, d,
            c, seed, out, workers
        );
        if let Some(scan) = &args.scan {
            cfg.scan = Some([scan[0], scan[1]]);
        }
        Ok(cfg)
    }

    pub fn n_or(&self, default: usize) -> usize {
        self.n.unwrap_or(default)
    }

    /// Range checks that apply to every subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if let Some(n) = self.n {
            if n == 0 {
                return bad("n must be at least 1".into());
            }
        }
        for (name, v) in [
            ("p", self.p),
            ("seed-amplitude", self.seed_amplitude),
            ("tol", self.tol),
            ("phi-k", self.phi_k),
            ("phi-inf", self.phi_inf),
            ("beta0", self.beta0),
            ("d", self.d),
            ("c", self.c),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return bad(format!("{name} must be finite"));
                }
            }
        }
        if let Some(tol) = self.tol {
            if tol <= 0.0 {
                return bad("tol must be positive".into());
            }
        }
        if self.max_iter == Some(0) {
            return bad("max-iter must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if let Some([lo, hi]) = self.scan {
            if !(lo < hi) {
                return bad(format!("scan range [{lo}, {hi}] is empty"));
            }
        }
        Ok(())
    }
}
