//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Every tolerance is pinned below.

use std::process::ExitCode;
use std::time::Instant;

use oscgraph_cli::commands::{cmd_sweep, Context, SweepRecord};
use oscgraph_cli::report::sweep_csv;
use oscgraph_cli::{Cache, RunConfig};
use oscgraph_core::counting::{
    converge_in_truncation, count_below_threshold, one_oscillator_count, one_oscillator_count_at,
    remainder_tail_count, separable_count, separable_count_converged, ConvergeOptions, CountOptions,
    ASYMPTOTIC_CONSTANT,
};
use oscgraph_core::expbasis::{project, trace_gap, TraceData};
use oscgraph_core::oracle::{converge_full_count, scan_and_refine, scan_one_oscillator, ScanOptions};
use oscgraph_core::variational::{
    form_excess, full_form_value, negativity_threshold, negativity_threshold_by_bisection, shift_constant_check,
    trial_excess_closed_form, FiniteElementState,
};
use oscgraph_core::{ModelParams, Truncation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn alpha_of(eta: f64, nu: f64) -> f64 {
    std::f64::consts::SQRT_2 * nu / (1.0 + eta)
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

// 1. one oscillator, N(eta) sqrt(eta) / M -> 1
const ONE_OSC_ETAS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const ONE_OSC_BAND_1E3: (f64, f64) = (0.5, 1.5);
const ONE_OSC_BAND_1E4: (f64, f64) = (0.6, 1.4);

fn one_oscillator_trend() -> Outcome {
    let mut q = Vec::new();
    let mut parts = Vec::new();
    for eta in ONE_OSC_ETAS {
        let r = one_oscillator_count(alpha_of(eta, 1.0), 1.0, 0.5).map_err(fail)?;
        let v = r.count as f64 * eta.sqrt() / ASYMPTOTIC_CONSTANT;
        parts.push(format!("eta {eta:e}: N {} (size {}) ratio {v:.4}", r.count, r.size));
        q.push(v);
    }
    let dev: Vec<f64> = q.iter().map(|v| (v - 1.0).abs()).collect();
    let ok = (ONE_OSC_BAND_1E3.0..=ONE_OSC_BAND_1E3.1).contains(&q[1])
        && (ONE_OSC_BAND_1E4.0..=ONE_OSC_BAND_1E4.1).contains(&q[2])
        && nonincreasing(&dev);
    check(ok, parts.join("; "))
}

// 2. diagonal sweep of the two-oscillator count
const DIAGONAL_ETAS: &str = "[0.1, 0.03, 0.01, 0.003]";
const DIAGONAL_BAND: (f64, f64) = (0.4, 1.6);

fn sweep_context(sweep: &str) -> Result<Context, String> {
    let config = RunConfig::parse(sweep).map_err(fail)?;
    Ok(Context {
        config,
        out: std::env::temp_dir(),
        cache: Cache::disabled(),
    })
}

fn two_oscillator_trend() -> Outcome {
    let ctx = sweep_context(&format!("[sweep]\npath = \"diagonal\"\netas = {DIAGONAL_ETAS}\n"))?;
    let (records, _) = cmd_sweep(&ctx).map_err(fail)?;
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    for r in &records {
        if let Some(e) = &r.error {
            return Err(format!("eta {}: {e}", r.eta_plus));
        }
        let ratio = r.ratio.ok_or("missing ratio")?;
        parts.push(format!(
            "eta {}: N {} (L {}, converged {}) ratio {ratio:.4}",
            r.eta_plus,
            r.count.unwrap_or(0),
            r.l_used.unwrap_or(0),
            r.converged
        ));
        ratios.push(ratio);
    }
    let last = *ratios.last().ok_or("empty sweep")?;
    let dev: Vec<f64> = ratios[ratios.len() - 3..].iter().map(|v| (v - 1.0).abs()).collect();
    let ok = records.iter().all(|r| r.converged)
        && (DIAGONAL_BAND.0..=DIAGONAL_BAND.1).contains(&last)
        && nonincreasing(&dev);
    check(ok, parts.join("; "))
}

// 3. separable decomposition, exact integers
// the last two give nonzero counts, so the equality is not 0 = 0 throughout
const SEPARABLE_MU: [f64; 5] = [1.5, 1.2, 1.1, 1.01, 1.001];
const SEPARABLE_RECTANGLES: [(usize, usize); 3] = [(40, 10), (200, 30), (1100, 4)];

fn separability() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for mu in SEPARABLE_MU {
        let p = ModelParams::new(alpha_of(mu - 1.0, 1.0), 0.0, 1.0, 1.0).map_err(fail)?;
        for (m, n) in SEPARABLE_RECTANGLES {
            let t = Truncation::rectangle(m, n);
            let direct = count_below_threshold(&p, t, &CountOptions::default()).map_err(fail)?.count;
            let sum = separable_count(&p, t, 1e-11).map_err(fail)?;
            ok &= direct == sum;
            parts.push(format!("mu {mu} {m}x{n}: {direct} = {sum}"));
        }
        let conv = separable_count_converged(&p).map_err(fail)?;
        parts.push(format!("mu {mu} converged sum {}", conv.count));
    }
    check(ok, parts.join("; "))
}

// 4. secular-oracle bracket
const BRACKET_POINTS: [(f64, f64); 5] = [(0.02, 0.02), (0.01, 0.01), (0.005, 0.005), (0.005, 0.05), (0.02, 0.005)];
const BRACKET_SLACK: usize = 2;
const BRACKET_COUNT_RANGE: (usize, usize) = (1, 20);
const ONE_OSC_SCAN_ETAS: [f64; 3] = [0.01, 0.003, 0.001];

fn oracle_bracket() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, b) in BRACKET_POINTS {
        let p = ModelParams::from_eta(a, b, 1.0, 1.0).map_err(fail)?;
        let main = converge_in_truncation(&p, &ConvergeOptions::default()).map_err(fail)?;
        let scan = scan_and_refine(&p, main.truncation, None, &ScanOptions::default()).map_err(fail)?;
        let oracle = scan.crossing_count();
        let in_range = (BRACKET_COUNT_RANGE.0..=BRACKET_COUNT_RANGE.1).contains(&main.count);
        ok &= main.converged && in_range && main.count.abs_diff(oracle) <= BRACKET_SLACK && scan.anomalies.is_empty();
        parts.push(format!("({a}, {b}) L {}: main {} oracle {oracle}", main.l_used, main.count));
    }
    for eta in ONE_OSC_SCAN_ETAS {
        let alpha = alpha_of(eta, 1.0);
        let size = one_oscillator_count(alpha, 1.0, 0.5).map_err(fail)?.size;
        let scan = scan_one_oscillator(alpha, 1.0, size, None, &ScanOptions::default()).map_err(fail)?;
        let top = scan.points.last().ok_or("empty scan")?.lambda;
        let direct = one_oscillator_count_at(alpha, 1.0, top, size, 1e-11).require(top).map_err(fail)?;
        ok &= scan.crossing_count() == direct && scan.anomalies.is_empty();
        parts.push(format!("1D eta {eta} size {size}: scan {} direct {direct}", scan.crossing_count()));
    }
    check(ok, parts.join("; "))
}

// 5. non-empty and finite on a grid of mu in (1, 1.2]
const GRID_MU: [f64; 5] = [1.04, 1.08, 1.12, 1.16, 1.2];
const FULL_COUNT_MARGIN: f64 = 1e-6;

fn non_empty_and_finite() -> Outcome {
    let mut ok = true;
    let mut low = usize::MAX;
    let mut high = 0;
    let mut l_max = 0;
    for mp in GRID_MU {
        for mm in GRID_MU {
            let p = ModelParams::from_eta(mp - 1.0, mm - 1.0, 1.0, 1.0).map_err(fail)?;
            let r = converge_full_count(&p, &ConvergeOptions::default(), FULL_COUNT_MARGIN).map_err(fail)?;
            let monotone = r.trace.windows(2).all(|w| w[0].count <= w[1].count);
            if !(r.converged && r.count >= 1 && monotone) {
                ok = false;
                eprintln!("  mu ({mp}, {mm}): count {} converged {} trace {:?}", r.count, r.converged, r.trace);
            }
            low = low.min(r.count);
            high = high.max(r.count);
            l_max = l_max.max(r.l_used);
        }
    }
    check(ok, format!("25 points, counts in [{low}, {high}], largest L {l_max}"))
}

// 6. trace inequality: sharp for even traces, never violated
const TRACE_EQUALITY_TOL: f64 = 1e-12;
const TRACE_GAP_FLOOR: f64 = -1e-12;
const TRACE_PAIRS: usize = 100_000;

fn gamma_grid() -> Vec<f64> {
    (0..=40).map(|i| 0.05 * (30.0f64 / 0.05).powf(i as f64 / 40.0)).collect()
}

fn trace_inequality() -> Outcome {
    let grid = gamma_grid();
    let mut worst_eq = 0.0f64;
    for &g in &grid {
        let e = project(&TraceData::new(1.0, 1.0), g).map_err(fail)?;
        worst_eq = worst_eq.max(trace_gap(&e).abs() / e.norm_sq());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for i in 0..TRACE_PAIRS {
        let g = grid[i % grid.len()];
        let t = TraceData::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let e = project(&t, g).map_err(fail)?;
        worst = worst.min(trace_gap(&e) / e.norm_sq().max(f64::MIN_POSITIVE));
    }
    check(
        worst_eq <= TRACE_EQUALITY_TOL && worst >= TRACE_GAP_FLOOR,
        format!("equality case {worst_eq:.2e}, smallest relative gap over {TRACE_PAIRS} pairs {worst:.3e}"),
    )
}

// 7. shift constant
const SHIFT_K: f64 = 0.3360629;
const SHIFT_CONTROL_K: f64 = 0.01;
const SHIFT_MAX_SUM: usize = 10_000;
const SHIFT_TOL: f64 = 1e-12;

fn shift_constant() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (nu_p, nu_m) in [(1.0, 1.0), (0.4, 2.0)] {
        let p = ModelParams::new(0.0, 0.0, nu_p, nu_m).map_err(fail)?;
        let c = shift_constant_check(&p, SHIFT_K, SHIFT_MAX_SUM).map_err(fail)?;
        let control = shift_constant_check(&p, SHIFT_CONTROL_K, SHIFT_MAX_SUM).map_err(fail)?;
        ok &= c.worst <= 1.0 + SHIFT_TOL && control.worst > 1.0;
        parts.push(format!(
            "nu ({nu_p}, {nu_m}): max C {:.10} at {:?}, control {:.6}",
            c.worst, c.at, control.worst
        ));
    }
    check(ok, parts.join("; "))
}

// 8. trial element form and its sign change
const TRIAL_CASES: usize = 20;
const TRIAL_TOL: f64 = 1e-10;

fn trial_element() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut worst_form = 0.0f64;
    let mut worst_threshold = 0.0f64;
    for _ in 0..TRIAL_CASES {
        let nu_p = rng.random_range(0.3..2.5);
        let nu_m = rng.random_range(0.3..2.5);
        let a_p = rng.random_range(0.0..(std::f64::consts::SQRT_2 * nu_p));
        let a_m = rng.random_range(0.0..(std::f64::consts::SQRT_2 * nu_m));
        let p = ModelParams::new(a_p, a_m, nu_p, nu_m).map_err(fail)?;
        let eps = rng.random_range(1e-4..0.999);
        let s = FiniteElementState::negative_energy_trial(eps).map_err(fail)?;
        let want = trial_excess_closed_form(&p, eps);
        let raw = full_form_value(&s, &p) - p.threshold() * s.norm_sq();
        worst_form = worst_form.max((form_excess(&s, &p) - want).abs()).max((raw - want).abs());
        let t = negativity_threshold(&p);
        if t > 1e-300 {
            let b = negativity_threshold_by_bisection(&p, 1e-13)
                .map_err(fail)?
                .ok_or("no sign change found")?;
            worst_threshold = worst_threshold.max((b - t).abs());
        }
    }
    check(
        worst_form <= TRIAL_TOL && worst_threshold <= TRIAL_TOL,
        format!("form error {worst_form:.2e}, threshold error {worst_threshold:.2e}"),
    )
}

// 9. remainder tail, frozen from the first verified run
const REMAINDER_R: f64 = 0.056;
const REMAINDER_K: f64 = 1.0;
const REMAINDER_L: usize = 96;
const REMAINDER_POINTS: [(f64, f64); 3] = [(0.1, 0.1), (0.01, 0.01), (0.003, 0.05)];

fn remainder_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let t = Truncation::simplex(REMAINDER_L).map_err(fail)?;
    for (a, b) in REMAINDER_POINTS {
        let p = ModelParams::from_eta(a, b, 1.0, 1.0).map_err(fail)?;
        let mut counts = Vec::new();
        for k in 3..=10 {
            let eps = 2f64.powi(-k);
            let n = remainder_tail_count(&p, t, eps, &CountOptions::default()).map_err(fail)?;
            ok &= n as f64 <= REMAINDER_R * (REMAINDER_K / eps).ln().powi(4);
            counts.push(n);
        }
        parts.push(format!("({a}, {b}): {counts:?}"));
    }
    check(ok, format!("eps 2^-3..2^-10: {}", parts.join("; ")))
}

// 10. determinism across runs and thread counts
const DETERMINISM_SWEEP: &str = "[sweep]\npath = \"list\"\npoints = [[0.3, 0.3], [0.1, 0.2], [0.5, 0.05], [0.05, 0.5]]\noracle = true\n";

fn strip_wall(records: &[SweepRecord]) -> String {
    sweep_csv(records)
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(h, _)| h))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let ctx = sweep_context(DETERMINISM_SWEEP)?;
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut runs = Vec::new();
    for threads in [1, 1, 4, max] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(fail)?;
        let (records, _) = pool.install(|| cmd_sweep(&ctx)).map_err(fail)?;
        if let Some(e) = records.iter().find_map(|r| r.error.clone()) {
            return Err(e);
        }
        runs.push(strip_wall(&records));
    }
    check(
        runs.iter().all(|r| *r == runs[0]),
        format!("4 runs at threads 1, 1, 4, {max}: identical CSV without wall_seconds"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("one-oscillator asymptotic trend", one_oscillator_trend),
        ("two-oscillator asymptotic trend", two_oscillator_trend),
        ("separability exactness", separability),
        ("oracle bracket", oracle_bracket),
        ("non-empty and finite", non_empty_and_finite),
        ("trace inequality optimality", trace_inequality),
        ("shift constant bound", shift_constant),
        ("trial element form", trial_element),
        ("remainder polylog bound", remainder_bound),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name} ({secs:.1} s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {d}", i + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria pass", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria fail", criteria.len());
        ExitCode::FAILURE
    }
}
