//! Command-line front end: flag and config-file parsing, dispatch to the
//! numerics modules, and deterministic CSV/JSON artifacts.
//!
//! Precedence: built-in defaults < config file (`--config`, TOML with one
//! section per module) < command-line flags. Floats are always written with
//! 17 significant digits so identical configs give byte-identical output.

use crate::hydrogen::HydrogenError;
use crate::quadrature::QuadError;
use crate::renorm::{self, RenormError};
use crate::shifts::{self, ShiftError, ShiftReport, ShiftSettings, TMode};
use crate::spectral::{GridConfig, GridScheme};
use crate::units::{Params, ParamsError};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config file {path}: {source}")]
    Config {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("cannot read config file {path}: {source}")]
    ConfigIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write output {path}: {source}")]
    OutputIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Hydrogen(#[from] HydrogenError),
    #[error("PFL_THREADS must be a positive integer, got {0:?}")]
    BadThreads(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Pauli-Fierz mass renormalization and radiative level shifts.
#[derive(Debug, Parser)]
#[command(name = "pfl", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Physical mass (natural units).
    #[arg(long, global = true)]
    pub m: Option<f64>,
    /// Bare mass; derived from m when absent.
    #[arg(long, global = true)]
    pub m0: Option<f64>,
    /// Radiation coupling.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Coulomb coupling (V = -beta Z / r).
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Nuclear charge.
    #[arg(long = "Z", global = true)]
    pub z: Option<f64>,
    /// UV cutoff in units of m.
    #[arg(long = "Lambda", global = true)]
    pub lambda: Option<f64>,
    /// Quadrature / solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Radial grid points.
    #[arg(long = "grid-n", global = true)]
    pub grid_n: Option<usize>,
    /// Radial grid extent (units of 1/(m beta Z)).
    #[arg(long = "grid-rmax", global = true)]
    pub grid_rmax: Option<f64>,
    /// T-term evaluation mode.
    #[arg(long = "t-mode", global = true, value_enum)]
    pub t_mode: Option<TMode>,
    /// Partial-wave cutoff for the T term.
    #[arg(long, global = true)]
    pub lmax: Option<u32>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML config file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vacuum self-energy of the free electron.
    SelfEnergy,
    /// Ground-state dispersion E_P - E_0 by 2D quadrature.
    Dispersion {
        /// |P| in units of the bare mass (along z).
        #[arg(long, default_value_t = 0.05)]
        p: f64,
    },
    /// Mass renormalization: bare from physical mass (or forward with --m0).
    Mass,
    /// The scalar level-shift function S(e).
    SFunction {
        #[arg(long)]
        e: f64,
    },
    /// The cutoff function f(e, Lambda).
    FFunction {
        #[arg(long, default_value_t = 0.0)]
        e: f64,
    },
    /// Renormalized ground-state binding energy report.
    Binding,
    /// Level energy report for the metastable state (n, l).
    LevelShift {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        l: u32,
    },
    /// 2s-2p Lamb splitting.
    Lamb,
    /// Binding report over a grid of (beta Z, alpha, Lambda).
    Sweep {
        #[arg(long = "beta-z-list", value_delimiter = ',')]
        beta_z_list: Vec<f64>,
        #[arg(long = "alpha-list", value_delimiter = ',')]
        alpha_list: Vec<f64>,
        #[arg(long = "lambda-list", value_delimiter = ',')]
        lambda_list: Vec<f64>,
    },
}

// --- config file --------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    params: ParamsSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    quadrature: QuadratureSection,
    #[serde(default)]
    shifts: ShiftsSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    m: Option<f64>,
    m0: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    z: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n: Option<usize>,
    r_min: Option<f64>,
    r_max: Option<f64>,
    scheme: Option<GridScheme>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureSection {
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftsSection {
    t_mode: Option<TMode>,
    l_max: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    path: Option<PathBuf>,
    format: Option<Format>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Params,
    pub settings: ShiftSettings,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Worker cap from PFL_THREADS; evaluation is deterministic and
    /// currently single-threaded, so this is an upper bound only.
    pub threads: usize,
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|source| CliError::ConfigIo {
                    path: path.display().to_string(),
                    source,
                })?;
            toml::from_str(&text).map_err(|source| CliError::Config {
                path: path.display().to_string(),
                source,
            })?
        }
        None => FileConfig::default(),
    };
    let mut params = Params::default();
    params.m = cli.m.or(file.params.m).unwrap_or(params.m);
    params.m0 = cli.m0.or(file.params.m0);
    params.alpha = cli.alpha.or(file.params.alpha).unwrap_or(params.alpha);
    params.beta = cli.beta.or(file.params.beta).unwrap_or(params.beta);
    params.z = cli.z.or(file.params.z).unwrap_or(params.z);
    params.lambda = cli.lambda.or(file.params.lambda).unwrap_or(params.lambda);
    params.validate()?;

    let mut settings = ShiftSettings::default();
    settings.grid = GridConfig {
        n: cli.grid_n.or(file.grid.n).unwrap_or(settings.grid.n),
        r_min: file.grid.r_min.unwrap_or(settings.grid.r_min),
        r_max: cli
            .grid_rmax
            .or(file.grid.r_max)
            .unwrap_or(settings.grid.r_max),
        scheme: file.grid.scheme.unwrap_or(settings.grid.scheme),
    };
    settings.tol = cli.tol.or(file.quadrature.tol).unwrap_or(settings.tol);
    settings.t_mode = cli.t_mode.or(file.shifts.t_mode).unwrap_or(settings.t_mode);
    settings.l_max = cli.lmax.or(file.shifts.l_max).unwrap_or(settings.l_max);

    let threads = match std::env::var("PFL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or(CliError::BadThreads(v))?,
        Err(_) => 1,
    };
    Ok(RunConfig {
        params,
        settings,
        out: cli.out.clone().or(file.output.path),
        format: cli.format.or(file.output.format).unwrap_or(Format::Csv),
        threads,
    })
}

// --- tables -------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// 17 significant digits, the fixed float formatting of every artifact.
fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

impl Table {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(x) => fmt17(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Missing => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let mut out = String::from("[\n");
        for (ri, row) in self.rows.iter().enumerate() {
            out.push_str("  {");
            for (ci, (name, cell)) in self.columns.iter().zip(row).enumerate() {
                if ci > 0 {
                    out.push_str(", ");
                }
                out.push('"');
                out.push_str(name);
                out.push_str("\": ");
                match cell {
                    Cell::Float(x) => out.push_str(&fmt17(*x)),
                    Cell::Int(i) => out.push_str(&i.to_string()),
                    Cell::Text(s) => {
                        out.push('"');
                        for ch in s.chars() {
                            match ch {
                                '"' => out.push_str("\\\""),
                                '\\' => out.push_str("\\\\"),
                                c => out.push(c),
                            }
                        }
                        out.push('"');
                    }
                    Cell::Missing => out.push_str("null"),
                }
            }
            out.push('}');
            if ri + 1 < self.rows.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("]\n");
        out
    }
}

fn mode_name(mode: TMode) -> &'static str {
    match mode {
        TMode::Bound => "bound",
        TMode::Leading => "leading",
        TMode::Resolvent => "resolvent",
    }
}

fn report_columns() -> Vec<String> {
    [
        "n",
        "l",
        "convention",
        "t_method",
        "coulomb_term",
        "s_term",
        "t_term",
        "total",
        "bethe_approx",
        "jensen_bound",
        "convergence_error",
        "coulomb_term_MHz",
        "s_term_MHz",
        "t_term_MHz",
        "total_MHz",
        "bethe_approx_MHz",
        "jensen_bound_MHz",
        "convergence_error_MHz",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn report_row(r: &ShiftReport) -> Vec<Cell> {
    let opt = |v: Option<f64>| v.map(Cell::Float).unwrap_or(Cell::Missing);
    vec![
        Cell::Int(r.n as i64),
        Cell::Int(r.l as i64),
        Cell::Text(
            match r.convention {
                shifts::Convention::Binding => "binding",
                shifts::Convention::Level => "level",
            }
            .into(),
        ),
        Cell::Text(mode_name(r.t_method).into()),
        Cell::Float(r.values.coulomb_term),
        Cell::Float(r.values.s_term),
        Cell::Float(r.values.t_term),
        Cell::Float(r.values.total),
        Cell::Float(r.values.bethe_approx),
        opt(r.values.jensen_bound),
        Cell::Float(r.values.convergence_error),
        Cell::Float(r.in_mhz.coulomb_term),
        Cell::Float(r.in_mhz.s_term),
        Cell::Float(r.in_mhz.t_term),
        Cell::Float(r.in_mhz.total),
        Cell::Float(r.in_mhz.bethe_approx),
        opt(r.in_mhz.jensen_bound),
        Cell::Float(r.in_mhz.convergence_error),
    ]
}

// --- dispatch -----------------------------------------------------------

/// Execute a parsed command; returns the artifact table plus human-readable
/// summary lines.
pub fn run(cli: &Cli) -> Result<(Table, Vec<String>), CliError> {
    let cfg = resolve_config(cli)?;
    let params = &cfg.params;
    let mut summary = Vec::new();
    let table = match &cli.command {
        Command::SelfEnergy => {
            let m0 = params.bare_mass_or_derive(cfg.settings.tol.min(1e-12))?;
            let se = renorm::self_energy(params)?;
            summary.push(format!("self-energy = {} (natural units)", fmt17(se)));
            Table {
                columns: ["alpha", "Lambda", "m0", "self_energy"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                rows: vec![vec![
                    Cell::Float(params.alpha),
                    Cell::Float(params.lambda),
                    Cell::Float(m0),
                    Cell::Float(se),
                ]],
            }
        }
        Command::Dispersion { p } => {
            let m0 = params.bare_mass_or_derive(cfg.settings.tol.min(1e-12))?;
            let pvec = [0.0, 0.0, p * m0];
            let d = renorm::dispersion_shift(pvec, params, cfg.settings.tol)?;
            let quadratic = d.p2_coefficient * (p * m0) * (p * m0);
            let rel = if quadratic != 0.0 {
                (d.shift - quadratic) / quadratic
            } else {
                0.0
            };
            summary.push(format!(
                "E_P - E_0 = {} at |P| = {} m0 (quadratic model deviation {:.2e})",
                fmt17(d.shift),
                p,
                rel
            ));
            Table {
                columns: [
                    "p_over_m0",
                    "shift",
                    "p2_coefficient",
                    "quadratic_estimate",
                    "relative_deviation",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
                rows: vec![vec![
                    Cell::Float(*p),
                    Cell::Float(d.shift),
                    Cell::Float(d.p2_coefficient),
                    Cell::Float(quadratic),
                    Cell::Float(rel),
                ]],
            }
        }
        Command::Mass => {
            let r = match params.m0 {
                Some(m0) => renorm::physical_mass(m0, params.alpha, params.lambda),
                None => renorm::bare_mass(
                    params.m,
                    params.alpha,
                    params.lambda,
                    cfg.settings.tol.min(1e-13),
                ),
            };
            let dipole = renorm::dipole_mass(r.m0, params.alpha, params.lambda);
            summary.push(format!(
                "m = {}  m0 = {}  (round-trip residual {:.2e})",
                fmt17(r.m),
                fmt17(r.m0),
                r.residual
            ));
            Table {
                columns: ["m", "m0", "alpha", "Lambda", "residual", "iterations", "m_dipole"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                rows: vec![vec![
                    Cell::Float(r.m),
                    Cell::Float(r.m0),
                    Cell::Float(r.alpha),
                    Cell::Float(r.lambda),
                    Cell::Float(r.residual),
                    Cell::Int(r.iterations as i64),
                    Cell::Float(dipole),
                ]],
            }
        }
        Command::SFunction { e } => {
            let s = shifts::s_function(*e, cfg.settings.tol)?;
            summary.push(format!("S({}) = {}", e, fmt17(s)));
            Table {
                columns: vec!["e".into(), "S".into()],
                rows: vec![vec![Cell::Float(*e), Cell::Float(s)]],
            }
        }
        Command::FFunction { e } => {
            let f = shifts::f_function(*e, params.lambda, cfg.settings.tol)?;
            summary.push(format!("f({}, {}) = {}", e, params.lambda, fmt17(f)));
            let closed = (*e == 0.0).then(|| shifts::f_zero_closed(params.lambda));
            Table {
                columns: vec!["e".into(), "Lambda".into(), "f".into(), "f_zero_closed".into()],
                rows: vec![vec![
                    Cell::Float(*e),
                    Cell::Float(params.lambda),
                    Cell::Float(f),
                    closed.map(Cell::Float).unwrap_or(Cell::Missing),
                ]],
            }
        }
        Command::Binding => {
            let r = shifts::binding_energy(params, &cfg.settings)?;
            summary.push(format!(
                "binding energy = {} ({} MHz), convergence error {:.2e} ({:.3e} MHz)",
                fmt17(r.values.total),
                fmt17(r.in_mhz.total),
                r.values.convergence_error,
                r.in_mhz.convergence_error
            ));
            if let Some(j) = r.in_mhz.jensen_bound {
                summary.push(format!("jensen lower bound = {} MHz", fmt17(j)));
            }
            Table {
                columns: report_columns(),
                rows: vec![report_row(&r)],
            }
        }
        Command::LevelShift { n, l } => {
            let r = shifts::level_shift(*n, *l, params, &cfg.settings)?;
            summary.push(format!(
                "level energy ({}, l={}) = {} ({} MHz), convergence error {:.3e} MHz",
                n,
                l,
                fmt17(r.values.total),
                fmt17(r.in_mhz.total),
                r.in_mhz.convergence_error
            ));
            Table {
                columns: report_columns(),
                rows: vec![report_row(&r)],
            }
        }
        Command::Lamb => {
            let lamb = shifts::lamb_splitting(params, &cfg.settings)?;
            summary.push(format!(
                "2s-2p splitting = {} MHz (convergence error {:.3e} MHz)",
                fmt17(lamb.splitting_mhz),
                lamb.convergence_error_mhz
            ));
            Table {
                columns: [
                    "splitting",
                    "splitting_MHz",
                    "convergence_error",
                    "convergence_error_MHz",
                    "s_2s_MHz",
                    "t_2s_MHz",
                    "s_2p_MHz",
                    "t_2p_MHz",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
                rows: vec![vec![
                    Cell::Float(lamb.splitting),
                    Cell::Float(lamb.splitting_mhz),
                    Cell::Float(lamb.convergence_error),
                    Cell::Float(lamb.convergence_error_mhz),
                    Cell::Float(lamb.report_2s.in_mhz.s_term),
                    Cell::Float(lamb.report_2s.in_mhz.t_term),
                    Cell::Float(lamb.report_2p.in_mhz.s_term),
                    Cell::Float(lamb.report_2p.in_mhz.t_term),
                ]],
            }
        }
        Command::Sweep {
            beta_z_list,
            alpha_list,
            lambda_list,
        } => {
            let bzs = if beta_z_list.is_empty() {
                vec![params.beta_z()]
            } else {
                beta_z_list.clone()
            };
            let alphas = if alpha_list.is_empty() {
                vec![params.alpha]
            } else {
                alpha_list.clone()
            };
            let lambdas = if lambda_list.is_empty() {
                vec![params.lambda]
            } else {
                lambda_list.clone()
            };
            let mut rows = Vec::new();
            for &bz in &bzs {
                for &alpha in &alphas {
                    for &lambda in &lambdas {
                        let p = Params {
                            beta: bz,
                            z: 1.0,
                            alpha,
                            lambda,
                            m0: None,
                            ..*params
                        };
                        p.validate()?;
                        let m0 = p.bare_mass_or_derive(1e-13)?;
                        let r = shifts::binding_energy(&p, &cfg.settings)?;
                        rows.push(vec![
                            Cell::Float(bz),
                            Cell::Float(alpha),
                            Cell::Float(lambda),
                            Cell::Float(m0),
                            Cell::Float(r.values.coulomb_term),
                            Cell::Float(r.values.s_term),
                            Cell::Float(r.values.t_term),
                            Cell::Float(r.values.total),
                            Cell::Float(r.in_mhz.total),
                        ]);
                    }
                }
            }
            summary.push(format!("sweep over {} grid points", rows.len()));
            Table {
                columns: [
                    "beta_z",
                    "alpha",
                    "Lambda",
                    "m0",
                    "coulomb_term",
                    "s_term",
                    "t_term",
                    "total",
                    "total_MHz",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
                rows,
            }
        }
    };
    summary.push(
        "all results are leading order in the radiation coupling alpha".to_string(),
    );
    emit(&table, &cfg)?;
    Ok((table, summary))
}

fn emit(table: &Table, cfg: &RunConfig) -> Result<(), CliError> {
    let rendered = table.render(cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, rendered).map_err(|source| CliError::OutputIo {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.as_bytes())
                .map_err(|source| CliError::OutputIo {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Binary entry point.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((_, summary)) => {
            for line in summary {
                eprintln!("# {line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            let mut src = std::error::Error::source(&err);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).expect("parse")
    }

    #[test]
    fn defaults_and_flag_overrides() {
        let cli = parse(&["pfl", "binding"]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.params.alpha, 1.0 / 137.0);
        assert_eq!(cfg.settings.grid.n, 2000);
        assert_eq!(cfg.settings.t_mode, TMode::Leading);

        let cli = parse(&[
            "pfl", "binding", "--alpha", "0.01", "--Z", "2", "--grid-n", "500", "--t-mode",
            "resolvent", "--lmax", "3",
        ]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.params.alpha, 0.01);
        assert_eq!(cfg.params.z, 2.0);
        assert_eq!(cfg.settings.grid.n, 500);
        assert_eq!(cfg.settings.t_mode, TMode::Resolvent);
        assert_eq!(cfg.settings.l_max, 3);
    }

    #[test]
    fn config_file_and_precedence() {
        let dir = std::env::temp_dir().join("pfl-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.toml");
        std::fs::write(
            &path,
            "[params]\nalpha = 0.02\nbeta = 0.05\n\n[grid]\nn = 800\n\n[quadrature]\ntol = 1e-6\n\n[shifts]\nt_mode = \"bound\"\n",
        )
        .unwrap();
        let cli = parse(&[
            "pfl",
            "binding",
            "--config",
            path.to_str().unwrap(),
            "--alpha",
            "0.03",
        ]);
        let cfg = resolve_config(&cli).unwrap();
        // flag beats file, file beats default
        assert_eq!(cfg.params.alpha, 0.03);
        assert_eq!(cfg.params.beta, 0.05);
        assert_eq!(cfg.settings.grid.n, 800);
        assert_eq!(cfg.settings.tol, 1e-6);
        assert_eq!(cfg.settings.t_mode, TMode::Bound);
    }

    #[test]
    fn config_parse_error_is_precise() {
        let dir = std::env::temp_dir().join("pfl-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "[params]\nallpha = 0.02\n").unwrap();
        let cli = parse(&["pfl", "binding", "--config", path.to_str().unwrap()]);
        let err = resolve_config(&cli).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("bad.toml"), "{msg}");
    }

    #[test]
    fn float_formatting_17_digits() {
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt17(-0.5 / 137.0), "-3.6496350364963502e-3");
    }

    #[test]
    fn table_rendering() {
        let t = Table {
            columns: vec!["a".into(), "b_MHz".into(), "tag".into()],
            rows: vec![vec![
                Cell::Float(1.5),
                Cell::Missing,
                Cell::Text("x".into()),
            ]],
        };
        assert_eq!(t.to_csv(), "a,b_MHz,tag\n1.5000000000000000e0,,x\n");
        let json = t.to_json();
        assert!(json.contains("\"b_MHz\": null"));
        assert!(json.contains("\"tag\": \"x\""));
        // identical input -> identical bytes
        assert_eq!(t.to_csv(), t.to_csv());
        assert_eq!(json, t.to_json());
    }

    #[test]
    fn scalar_commands_run() {
        let (t, _) = run_to_table(parse(&["pfl", "s-function", "--e", "0"]));
        match t.rows[0][1] {
            Cell::Float(v) => assert_eq!(v, 0.0),
            _ => panic!("expected float"),
        }
        let (t, _) = run_to_table(parse(&["pfl", "f-function", "--e", "0", "--Lambda", "1"]));
        match (&t.rows[0][2], &t.rows[0][3]) {
            (Cell::Float(f), Cell::Float(c)) => assert!((f - c).abs() < 1e-10),
            _ => panic!("expected floats"),
        }
        let (t, _) = run_to_table(parse(&[
            "pfl", "mass", "--m", "1", "--alpha", "0.00729927", "--Lambda", "100",
        ]));
        match (&t.rows[0][0], &t.rows[0][1], &t.rows[0][4]) {
            (Cell::Float(m), Cell::Float(m0), Cell::Float(res)) => {
                assert_eq!(*m, 1.0);
                assert!(*m0 < 1.0);
                assert!(*res < 1e-12);
            }
            _ => panic!("expected floats"),
        }
    }

    /// Run a command, routing the artifact to a temp file so test output
    /// stays clean.
    fn run_to_table(mut cli: Cli) -> (Table, Vec<String>) {
        let dir = std::env::temp_dir().join("pfl-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        cli.out = Some(dir.join(format!("out-{:?}.csv", std::thread::current().id())));
        run(&cli).expect("command runs")
    }
}
