//! The four subcommands. Each returns its structured result plus a text
//! summary; emission to files happens in [`crate::report`].

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use oscgraph_core::counting::{asymptotic_prediction, converge_in_truncation, CountReport, TracePoint};
use oscgraph_core::oracle::{residual_check, scan_and_refine, Anomaly, ResidualReport, ScanOptions, ScanPoint};
use oscgraph_core::variational::{
    fk_monotonicity, form_excess, form_excess_at, linear_grid, negativity_threshold,
    negativity_threshold_by_bisection, shift_constant_check, trial_excess_closed_form, FiniteElementState,
    SHIFT_BOUND,
};
use oscgraph_core::{ModelParams, Side, Truncation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{cache_key, Cache};
use crate::config::{model_from_eta, RunConfig};
use crate::error::CliError;

/// Everything a command needs besides its own arguments.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub cache: Cache,
}

impl Context {
    fn scan_options(&self) -> ScanOptions {
        let c = self.config.converge_options();
        ScanOptions {
            margin_rel: self.config.solver.margin,
            tol_rel: self.config.solver.crossing_tol,
            count: c.count,
            lanczos_steps: 40,
        }
    }
}

/// The converged threshold count, from the cache when possible. The flag
/// tells whether the report was replayed.
pub fn cached_count(ctx: &Context, params: &ModelParams) -> Result<(CountReport, bool), CliError> {
    let opts = ctx.config.converge_options();
    let key = cache_key("count", params, &opts, &[]);
    if let Some(r) = ctx.cache.lookup(&key) {
        log::info!("cache hit {key}");
        return Ok((r, true));
    }
    let r = converge_in_truncation(params, &opts)?;
    ctx.cache.store(&key, &r)?;
    Ok((r, false))
}

pub fn summarize_count(r: &CountReport) -> String {
    let mut s = String::new();
    let p = &r.params;
    let _ = writeln!(
        s,
        "alpha = ({}, {}), nu = ({}, {}), mu = ({}, {})",
        p.alpha_plus,
        p.alpha_minus,
        p.nu_plus,
        p.nu_minus,
        p.mu(Side::Plus),
        p.mu(Side::Minus)
    );
    let _ = writeln!(
        s,
        "count {} at L = {} (dim {}), converged = {}",
        r.count, r.l_used, r.dim, r.converged
    );
    let trace: Vec<String> = r.trace.iter().map(|t| format!("{}:{}", t.l, t.count)).collect();
    let _ = writeln!(s, "trace (L:count) {}", trace.join(" "));
    match r.ratio {
        Some(q) => {
            let _ = writeln!(s, "prediction {:.6}, ratio {:.6}", r.prediction, q);
        }
        None => {
            let _ = writeln!(s, "prediction {:.6}", r.prediction);
        }
    }
    s
}

/// `count`: converged count of the configured model. A run that hits the
/// schedule cap still returns its report together with the error.
pub fn cmd_count(ctx: &Context) -> Result<(CountReport, String), (Option<CountReport>, CliError)> {
    let params = ctx.config.require_model().map_err(|e| (None, e))?;
    let (r, _) = cached_count(ctx, &params).map_err(|e| (None, e))?;
    let text = summarize_count(&r);
    if !r.converged {
        let msg = format!("count still changing at the cap L = {}", r.l_used);
        return Err((Some(r), CliError::NotConverged(msg)));
    }
    Ok((r, text))
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub l_used: Option<usize>,
    pub dim: Option<usize>,
    pub count: Option<usize>,
    pub prediction: Option<f64>,
    pub ratio: Option<f64>,
    pub converged: bool,
    pub oracle_count: Option<usize>,
    pub oracle_gap: Option<usize>,
    pub wall_seconds: f64,
    pub trace: Vec<TracePoint>,
    pub error: Option<String>,
}

fn sweep_point(ctx: &Context, eta_plus: f64, eta_minus: f64, with_oracle: bool) -> SweepRecord {
    let start = Instant::now();
    let mut rec = SweepRecord {
        eta_plus,
        eta_minus,
        mu_plus: 1.0 + eta_plus,
        mu_minus: 1.0 + eta_minus,
        l_used: None,
        dim: None,
        count: None,
        prediction: None,
        ratio: None,
        converged: false,
        oracle_count: None,
        oracle_gap: None,
        wall_seconds: 0.0,
        trace: Vec::new(),
        error: None,
    };
    let result = (|| -> Result<(), CliError> {
        let p = model_from_eta(eta_plus, eta_minus, ctx.config.nu_plus, ctx.config.nu_minus)?;
        rec.prediction = Some(asymptotic_prediction(&p)?);
        let (r, _) = cached_count(ctx, &p)?;
        rec.l_used = Some(r.l_used);
        rec.dim = Some(r.dim);
        rec.count = Some(r.count);
        rec.ratio = r.ratio;
        rec.converged = r.converged;
        rec.trace = r.trace.clone();
        if with_oracle {
            let o = run_oracle(ctx, &p, &r, false)?;
            rec.oracle_count = Some(o.oracle_count);
            rec.oracle_gap = Some(o.gap);
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("sweep point ({eta_plus}, {eta_minus}) failed: {e}");
        rec.converged = false;
        rec.error = Some(e.to_string());
    }
    rec.wall_seconds = start.elapsed().as_secs_f64();
    rec
}

/// `sweep`: one record per configured point, in configuration order
/// whatever the number of worker threads.
pub fn cmd_sweep(ctx: &Context) -> Result<(Vec<SweepRecord>, String), CliError> {
    let sweep = ctx.config.require_sweep()?;
    let records: Vec<SweepRecord> = sweep
        .points
        .par_iter()
        .map(|&(a, b)| sweep_point(ctx, a, b, sweep.oracle))
        .collect();
    let mut text = String::new();
    let _ = writeln!(text, "{:>12} {:>12} {:>6} {:>6} {:>12} {:>10}", "eta_plus", "eta_minus", "L", "count", "prediction", "ratio");
    for r in &records {
        let opt = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.6}"));
        let _ = writeln!(
            text,
            "{:>12} {:>12} {:>6} {:>6} {:>12} {:>10}{}",
            r.eta_plus,
            r.eta_minus,
            r.l_used.map_or("-".into(), |v| v.to_string()),
            r.count.map_or("-".into(), |v| v.to_string()),
            opt(r.prediction),
            opt(r.ratio),
            if r.converged { "" } else { "  (not converged)" }
        );
    }
    Ok((records, text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub lambda: f64,
    pub multiplicity: usize,
    pub residual: Option<ResidualReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub params: ModelParams,
    pub main_count: usize,
    pub main_l_used: usize,
    pub main_converged: bool,
    pub oracle_l: usize,
    pub threshold: f64,
    pub margin: f64,
    pub points: Vec<ScanPoint>,
    pub crossings: Vec<CrossingReport>,
    pub anomalies: Vec<Anomaly>,
    pub oracle_count: usize,
    pub last_cell_increment: usize,
    /// `|main − oracle|`.
    pub gap: usize,
    /// `2 + last_cell_increment`.
    pub allowed: usize,
    pub pass: bool,
}

fn run_oracle(ctx: &Context, params: &ModelParams, main: &CountReport, residuals: bool) -> Result<OracleReport, CliError> {
    let opts = ctx.scan_options();
    let l = main.l_used.min(ctx.config.solver.oracle_max_l).max(1);
    let trunc = Truncation::simplex(l)?.with_origin(true);
    let grid = oscgraph_core::oracle::default_grid(
        params.threshold(),
        opts.margin_rel * params.threshold(),
        ctx.config.solver.oracle_points,
    );
    let scan = scan_and_refine(params, trunc, Some(&grid), &opts)?;
    let crossings = scan
        .crossings
        .iter()
        .map(|c| {
            let residual = if residuals {
                Some(residual_check(params, trunc, c.lambda, ctx.config.solver.residual_seed)?)
            } else {
                None
            };
            Ok(CrossingReport {
                lambda: c.lambda,
                multiplicity: c.multiplicity,
                residual,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let oracle_count = scan.crossing_count();
    let last = scan.last_cell_increment();
    let gap = main.count.abs_diff(oracle_count);
    let allowed = 2 + last;
    Ok(OracleReport {
        params: *params,
        main_count: main.count,
        main_l_used: main.l_used,
        main_converged: main.converged,
        oracle_l: l,
        threshold: scan.threshold,
        margin: scan.margin,
        points: scan.points,
        crossings,
        anomalies: scan.anomalies,
        oracle_count,
        last_cell_increment: last,
        gap,
        allowed,
        pass: gap <= allowed,
    })
}

/// `oracle`: energy scan of the configured model against a count from the
/// cache or a fresh run. A bracket violation returns the report together
/// with the error.
pub fn cmd_oracle(ctx: &Context) -> Result<(OracleReport, String), (Option<OracleReport>, CliError)> {
    let params = ctx.config.require_model().map_err(|e| (None, e))?;
    let (main, _) = cached_count(ctx, &params).map_err(|e| (None, e))?;
    let report = run_oracle(ctx, &params, &main, true).map_err(|e| (None, e))?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "main count {} (L = {}), oracle crossings {} (L = {}, margin {:.3e})",
        report.main_count, report.main_l_used, report.oracle_count, report.oracle_l, report.margin
    );
    for c in &report.crossings {
        let res = c.residual.map_or(String::new(), |r| {
            format!(
                "  residual {:.3e}{}",
                r.max_interior,
                if r.flagged { " (poorly isolated)" } else { "" }
            )
        });
        let _ = writeln!(text, "  lambda = {:.12}  x{}{}", c.lambda, c.multiplicity, res);
    }
    for a in &report.anomalies {
        let _ = writeln!(
            text,
            "  anomaly: increment {} on [{:.12}, {:.12}]",
            a.increment, a.lambda_low, a.lambda_high
        );
    }
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(text, "{verdict} bracket |main - oracle| = {} <= {}", report.gap, report.allowed);
    if report.pass {
        Ok((report, text))
    } else {
        let msg = format!(
            "|{} - {}| = {} exceeds {}",
            report.main_count, report.oracle_count, report.gap, report.allowed
        );
        Err((Some(report), CliError::Bracket(msg)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

fn item(name: &str, value: f64, limit: f64, pass: bool) -> CheckItem {
    CheckItem {
        name: name.into(),
        value,
        limit,
        pass,
    }
}

/// `selfcheck`: the variational checks, on the configured model when there
/// is one and on `α± = ν± = 1` otherwise.
pub fn cmd_selfcheck(ctx: &Context) -> Result<(Vec<CheckItem>, String), (Option<Vec<CheckItem>>, CliError)> {
    let run = || -> Result<Vec<CheckItem>, CliError> {
        let p = match ctx.config.model {
            Some(p) => p,
            None => ModelParams::new(1.0, 1.0, ctx.config.nu_plus, ctx.config.nu_minus)?,
        };
        let mut items = Vec::new();

        let c = shift_constant_check(&p, SHIFT_BOUND, 10_000)?;
        items.push(item("shift constant at k = 27e^-3/4, m+n <= 10^4", c.worst, 1.0 + 1e-12, c.worst <= 1.0 + 1e-12));
        let c = shift_constant_check(&p, 0.01, 10_000)?;
        items.push(item("shift constant at k = 0.01 exceeds 1", c.worst, 1.0, c.worst > 1.0));

        let k: f64 = 0.34;
        let m = fk_monotonicity(k, &linear_grid(k.sqrt() + 0.01, 50.0, 100_000))?;
        items.push(item("min f_k' at k = 0.34", m, -1e-8, m >= -1e-8));
        let m = fk_monotonicity(0.05, &linear_grid(0.05f64.sqrt() + 0.01, 50.0, 100_000))?;
        items.push(item("min f_k' at k = 0.05 is negative", m, 0.0, m < 0.0));

        let mut worst: f64 = 0.0;
        for eps in [0.9, 0.5, 0.1, 1e-2, 1e-3, 1e-4] {
            let s = FiniteElementState::negative_energy_trial(eps)?;
            let want = trial_excess_closed_form(&p, eps);
            worst = worst.max((form_excess(&s, &p) - want).abs() / want.abs().max(1.0));
        }
        items.push(item("trial form vs closed form", worst, 1e-10, worst <= 1e-10));
        let t = negativity_threshold(&p);
        let gap = match negativity_threshold_by_bisection(&p, 1e-13)? {
            Some(b) => (b - t).abs(),
            None => f64::INFINITY,
        };
        items.push(item("trial sign change vs closed-form threshold", gap, 1e-10, gap <= 1e-10));

        let worst = assembly_consistency(&p)?;
        items.push(item("form of basis combinations vs matrix form", worst, 1e-10, worst <= 1e-10));
        Ok(items)
    };
    let items = run().map_err(|e| (None, e))?;
    let mut text = String::new();
    for i in &items {
        let _ = writeln!(
            text,
            "{} {}: {:.6e} (limit {:.6e})",
            if i.pass { "PASS" } else { "FAIL" },
            i.name,
            i.value,
            i.limit
        );
    }
    let failed: Vec<&str> = items.iter().filter(|i| !i.pass).map(|i| i.name.as_str()).collect();
    if failed.is_empty() {
        Ok((items, text))
    } else {
        let msg = failed.join("; ");
        Err((Some(items), CliError::SelfCheck(msg)))
    }
}

/// Largest relative mismatch between the closed-form quadratic form of a
/// few deterministic basis combinations and the assembled matrix form.
fn assembly_consistency(p: &ModelParams) -> Result<f64, CliError> {
    use oscgraph_core::assembly::{assemble_total, ChannelTable};
    use oscgraph_core::CoefficientVector;
    let mut worst: f64 = 0.0;
    let trunc = Truncation::simplex(6)?;
    for energy in [p.threshold(), p.threshold() - 1.0] {
        let table = ChannelTable::new(p, trunc, energy)?;
        let op = assemble_total(p, trunc, energy)?;
        for j in 1..=3 {
            let c: Vec<f64> = (0..op.dim())
                .map(|i| ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0)
                .collect();
            let state = FiniteElementState::from_coefficients(&table, &CoefficientVector { values: c.clone() })?;
            let a = form_excess_at(&state, p, energy);
            let b = op.quadratic_form(&c);
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    Ok(worst)
}
