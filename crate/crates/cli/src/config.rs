//! Run configuration, read from a TOML file with fixed sections.

use std::path::{Path, PathBuf};

use oscgraph_core::counting::{ConvergeOptions, CountMethod, CountOptions, Schedule};
use oscgraph_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alpha_plus: Option<f64>,
    alpha_minus: Option<f64>,
    eta_plus: Option<f64>,
    eta_minus: Option<f64>,
    nu_plus: Option<f64>,
    nu_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationBlock {
    pub scheme: String,
    pub l0: usize,
    pub growth: f64,
    pub window: usize,
    pub cap: usize,
}

impl Default for TruncationBlock {
    fn default() -> Self {
        let s = Schedule::default();
        Self {
            scheme: "simplex".into(),
            l0: s.l0,
            growth: s.growth,
            window: s.window,
            cap: s.cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub method: CountMethod,
    pub pivot_tol: f64,
    /// Distance of the oracle's top energy below the threshold, relative
    /// to the threshold.
    pub margin: f64,
    /// Crossing localization tolerance, relative to the threshold.
    pub crossing_tol: f64,
    pub lanczos_steps: usize,
    pub oracle_points: usize,
    /// Largest simplex cutoff the oracle scans on.
    pub oracle_max_l: usize,
    pub residual_seed: u64,
    /// Worker threads; 0 uses every processor.
    pub threads: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            method: CountMethod::Auto,
            pivot_tol: CountOptions::default().pivot_tol,
            margin: 1e-6,
            crossing_tol: 1e-10,
            lanczos_steps: 0,
            oracle_points: 64,
            oracle_max_l: 256,
            residual_seed: 1,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepPath {
    /// `η₊ = η₋ = η` for each listed `η`.
    Diagonal,
    /// `η₋` fixed, `η₊` from the list.
    FixedMinus,
    /// Explicit `[η₊, η₋]` pairs.
    List,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    path: SweepPath,
    #[serde(default)]
    etas: Vec<f64>,
    eta_minus: Option<f64>,
    #[serde(default)]
    points: Vec<[f64; 2]>,
    #[serde(default)]
    oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub path: SweepPath,
    /// The `(η₊, η₋)` points in emission order.
    pub points: Vec<(f64, f64)>,
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: None,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    truncation: TruncationBlock,
    #[serde(default)]
    solver: SolverBlock,
    sweep: Option<RawSweep>,
    #[serde(default)]
    output: OutputBlock,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Absent when the file only describes a sweep.
    pub model: Option<ModelParams>,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub truncation: TruncationBlock,
    pub solver: SolverBlock,
    pub sweep: Option<SweepBlock>,
    pub output: OutputBlock,
}

fn invalid(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {reason}"))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::validate(raw)
    }

    /// The configuration used when no file is given (selfcheck only).
    pub fn unit() -> Self {
        Self::validate(RawConfig {
            model: RawModel {
                alpha_plus: Some(1.0),
                alpha_minus: Some(1.0),
                ..RawModel::default()
            },
            ..RawConfig::default()
        })
        .expect("built-in configuration is valid")
    }

    fn validate(raw: RawConfig) -> Result<Self, CliError> {
        let m = raw.model;
        let nu_plus = m.nu_plus.unwrap_or(1.0);
        let nu_minus = m.nu_minus.unwrap_or(1.0);
        positive("model.nu_plus", nu_plus)?;
        positive("model.nu_minus", nu_minus)?;

        let alpha_form = m.alpha_plus.is_some() || m.alpha_minus.is_some();
        let eta_form = m.eta_plus.is_some() || m.eta_minus.is_some();
        let model = match (alpha_form, eta_form) {
            (true, true) => {
                return Err(invalid(
                    "model",
                    "give either alpha_plus/alpha_minus or eta_plus/eta_minus, not both",
                ))
            }
            (true, false) => {
                let a = m.alpha_plus.ok_or_else(|| invalid("model.alpha_plus", "missing"))?;
                let b = m.alpha_minus.ok_or_else(|| invalid("model.alpha_minus", "missing"))?;
                Some(model_from_alpha(a, b, nu_plus, nu_minus)?)
            }
            (false, true) => {
                let a = m.eta_plus.ok_or_else(|| invalid("model.eta_plus", "missing"))?;
                let b = m.eta_minus.ok_or_else(|| invalid("model.eta_minus", "missing"))?;
                Some(model_from_eta(a, b, nu_plus, nu_minus)?)
            }
            (false, false) => None,
        };

        let t = &raw.truncation;
        if t.scheme != "simplex" {
            return Err(invalid(
                "truncation.scheme",
                format!("`{}` has no L schedule; only `simplex` is supported", t.scheme),
            ));
        }
        Schedule {
            l0: t.l0,
            growth: t.growth,
            window: t.window,
            cap: t.cap,
        }
        .validate()
        .map_err(|e| invalid("truncation", e))?;

        let s = &raw.solver;
        positive("solver.pivot_tol", s.pivot_tol)?;
        positive("solver.margin", s.margin)?;
        positive("solver.crossing_tol", s.crossing_tol)?;
        if s.margin >= 1.0 {
            return Err(invalid("solver.margin", "must be below 1 (it is relative to the threshold)"));
        }
        if s.oracle_points < 2 {
            return Err(invalid("solver.oracle_points", "need at least 2 grid points"));
        }
        if s.oracle_max_l == 0 {
            return Err(invalid("solver.oracle_max_l", "must be at least 1"));
        }

        let sweep = raw.sweep.map(|w| sweep_points(w)).transpose()?;
        if let Some(sw) = &sweep {
            for &(a, b) in &sw.points {
                model_from_eta(a, b, nu_plus, nu_minus)?;
            }
        }
        if raw.output.formats.is_empty() {
            return Err(invalid("output.formats", "list at least one of \"csv\", \"json\""));
        }

        Ok(Self {
            model,
            nu_plus,
            nu_minus,
            truncation: raw.truncation,
            solver: raw.solver,
            sweep,
            output: raw.output,
        })
    }

    pub fn require_model(&self) -> Result<ModelParams, CliError> {
        self.model.ok_or_else(|| {
            invalid(
                "model",
                "expected alpha_plus/alpha_minus or eta_plus/eta_minus for this command",
            )
        })
    }

    pub fn require_sweep(&self) -> Result<&SweepBlock, CliError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| invalid("sweep", "this command needs a [sweep] section"))
    }

    pub fn converge_options(&self) -> ConvergeOptions {
        ConvergeOptions {
            schedule: Schedule {
                l0: self.truncation.l0,
                growth: self.truncation.growth,
                window: self.truncation.window,
                cap: self.truncation.cap,
            },
            count: CountOptions {
                method: self.solver.method,
                pivot_tol: self.solver.pivot_tol,
            },
            lanczos_steps: self.solver.lanczos_steps,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

fn model_from_alpha(a: f64, b: f64, nu_p: f64, nu_m: f64) -> Result<ModelParams, CliError> {
    let p = ModelParams::new(a, b, nu_p, nu_m).map_err(|e| invalid("model", e))?;
    p.require_subcritical()
        .map_err(|e| invalid("model", e))?;
    Ok(p)
}

/// `α± = √2ν±/(1 + η±)`.
pub fn model_from_eta(a: f64, b: f64, nu_p: f64, nu_m: f64) -> Result<ModelParams, CliError> {
    for (key, eta) in [("eta_plus", a), ("eta_minus", b)] {
        if !(eta > 0.0) || eta.is_nan() {
            return Err(invalid(
                key,
                format!("{eta} is not positive; the count needs mu_plus > 1 and mu_minus > 1"),
            ));
        }
    }
    let p = ModelParams::from_eta(a, b, nu_p, nu_m).map_err(|e| invalid("model", e))?;
    p.require_subcritical().map_err(|e| invalid("model", e))?;
    Ok(p)
}

fn sweep_points(w: RawSweep) -> Result<SweepBlock, CliError> {
    let points = match w.path {
        SweepPath::Diagonal => {
            if w.eta_minus.is_some() || !w.points.is_empty() {
                return Err(invalid("sweep", "the diagonal path only takes `etas`"));
            }
            w.etas.iter().map(|&e| (e, e)).collect()
        }
        SweepPath::FixedMinus => {
            let m = w
                .eta_minus
                .ok_or_else(|| invalid("sweep.eta_minus", "required for the fixed-minus path"))?;
            if !w.points.is_empty() {
                return Err(invalid("sweep.points", "not used by the fixed-minus path"));
            }
            w.etas.iter().map(|&e| (e, m)).collect()
        }
        SweepPath::List => {
            if !w.etas.is_empty() || w.eta_minus.is_some() {
                return Err(invalid("sweep", "the list path only takes `points`"));
            }
            w.points.iter().map(|p| (p[0], p[1])).collect()
        }
    };
    Ok(SweepBlock {
        path: w.path,
        points,
        oracle: w.oracle,
    })
}
