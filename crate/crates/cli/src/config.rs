//! Parameter resolution: JSON config file first, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use fdx::params::{ParamSet, DEFAULT_B1_MARGIN};
use fdx::profile::ProfileConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that replaces the output directory.
pub const OUT_ENV: &str = "FDX_OUT";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub params: ParamsBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub n: Option<usize>,
    pub m: Option<f64>,
    pub gamma: Option<f64>,
    pub rho1: Option<f64>,
    pub eta_inf: Option<f64>,
    pub b1_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    pub picard_tol: Option<f64>,
    pub picard_max_iter: Option<usize>,
    pub rho_min: Option<f64>,
    pub ode_abs_tol: Option<f64>,
    pub ode_rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON file with optional `params`, `numerics` and `out` entries; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (replaced by $FDX_OUT when set).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub eta_inf: Option<f64>,
    #[arg(long)]
    pub b1_margin: Option<f64>,
}

/// Fully resolved problem parameters, echoed into every manifest.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedParams {
    pub n: usize,
    pub m: f64,
    pub gamma: f64,
    pub rho1: f64,
    pub eta_inf: f64,
    pub b1_margin: f64,
}

impl ResolvedParams {
    pub fn param_set(&self) -> Result<ParamSet<f64>, CliError> {
        ParamSet::new(self.n, self.m, self.gamma, self.rho1).map_err(CliError::Core)
    }
}

pub fn load_file(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed config {}: {e}", path.display())))
}

pub fn resolve_params(flags: &ParamArgs, file: &FileConfig) -> Result<ResolvedParams, CliError> {
    let f = &file.params;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Config(format!("missing required parameter --{name}")));
    Ok(ResolvedParams {
        n: flags.n.or(f.n).ok_or_else(|| CliError::Config("missing required parameter --n".into()))?,
        m: need(flags.m.or(f.m), "m")?,
        gamma: need(flags.gamma.or(f.gamma), "gamma")?,
        rho1: flags.rho1.or(f.rho1).unwrap_or(1.0),
        eta_inf: flags.eta_inf.or(f.eta_inf).unwrap_or(1.0),
        b1_margin: flags.b1_margin.or(f.b1_margin).unwrap_or(DEFAULT_B1_MARGIN),
    })
}

pub fn profile_config(params: &ResolvedParams, file: &FileConfig) -> ProfileConfig {
    let d = ProfileConfig::default();
    let nb = &file.numerics;
    let mut ode = d.ode_tol;
    ode.abs_tol = nb.ode_abs_tol.unwrap_or(ode.abs_tol);
    ode.rel_tol = nb.ode_rel_tol.unwrap_or(ode.rel_tol);
    ProfileConfig {
        b1_margin: params.b1_margin,
        picard_tol: nb.picard_tol.unwrap_or(d.picard_tol),
        picard_max_iter: nb.picard_max_iter.unwrap_or(d.picard_max_iter),
        rho_min: nb.rho_min.unwrap_or(d.rho_min),
        ode_tol: ode,
        ..d
    }
}

pub fn output_dir(common: &CommonArgs, file: &FileConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    common.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("fdx-out"))
}
