use oscgraph_core::counting::{count_below_threshold, one_oscillator_count, CountOptions};
use oscgraph_core::oracle::{
    count_at, default_grid, residual_check, scan_and_refine, scan_one_oscillator, two_channel_crossing, ScanOptions,
};
use oscgraph_core::{ModelParams, Truncation};

#[test]
fn scan_counts_are_monotone_and_bracket_the_main_count() {
    let opts = ScanOptions::default();
    for mu in [1.3, 1.15] {
        let p = ModelParams::from_eta(mu - 1.0, mu - 1.0, 1.0, 1.0).unwrap();
        let trunc = Truncation::simplex(32).unwrap();
        let scan = scan_and_refine(&p, trunc, None, &opts).unwrap();
        assert!(scan.points.windows(2).all(|w| w[0].count <= w[1].count));
        assert_eq!(scan.points[0].count, 0);
        assert!(scan.anomalies.is_empty());
        let main = count_below_threshold(&p, trunc, &CountOptions::default()).unwrap().count;
        let oracle = scan.crossing_count();
        assert_eq!(oracle, scan.points.last().unwrap().count);
        assert!(main.abs_diff(oracle) <= 2 + scan.last_cell_increment(), "{main} vs {oracle}");
        for c in &scan.crossings {
            let r = residual_check(&p, trunc, c.lambda, 3).unwrap();
            if !r.flagged {
                assert!(r.max_interior < 1e-6, "{r:?}");
            }
        }
    }
}

#[test]
fn decoupled_minus_side_has_no_jump_at_minus_one() {
    let p = ModelParams::new(1.3, 0.0, 1.0, 1.0).unwrap();
    let trunc = Truncation::rectangle(40, 3);
    let scan = scan_and_refine(&p, trunc, None, &ScanOptions::default()).unwrap();
    assert!(scan.crossing_count() >= 1);
    let r = residual_check(&p, trunc, scan.crossings[0].lambda, 9).unwrap();
    assert!(r.max_minus < 1e-8, "{r:?}");
}

#[test]
fn two_channel_case_is_exact() {
    for a in [0.3, 0.9, 1.4] {
        let p = ModelParams::new(a, 0.0, 1.0, 1.0).unwrap();
        let t = Truncation::rectangle(1, 0).with_origin(true);
        let l = two_channel_crossing(&p);
        let r = residual_check(&p, t, l, 1).unwrap();
        assert!(r.max_all <= 1e-12, "{r:?}");
        let scan = scan_and_refine(&p, t, None, &ScanOptions::default()).unwrap();
        assert_eq!(scan.crossing_count(), 1);
        assert!((scan.crossings[0].lambda - l).abs() <= 1e-10 * p.threshold() + 1e-15);
    }
}

#[test]
fn off_eigenvalue_vectors_violate_matching() {
    let p = ModelParams::from_eta(0.1, 0.1, 1.0, 1.0).unwrap();
    let t = Truncation::simplex(16).unwrap();
    let grid = default_grid(p.threshold(), 1e-6 * p.threshold(), 64);
    let r = residual_check(&p, t, grid[20], 5).unwrap();
    assert!(r.max_interior > 1e-2, "{r:?}");
}

#[test]
fn energies_above_the_margin_are_rejected() {
    let p = ModelParams::from_eta(0.1, 0.1, 1.0, 1.0).unwrap();
    let t = Truncation::simplex(4).unwrap().with_origin(true);
    assert!(count_at(&p, t, p.threshold(), &ScanOptions::default()).is_err());
    let grid = [0.0, p.threshold()];
    assert!(scan_and_refine(&p, t, Some(&grid), &ScanOptions::default()).is_err());
}

#[test]
fn one_oscillator_scan_is_exact() {
    let opts = ScanOptions::default();
    for eta in [0.3, 0.05, 0.01] {
        let alpha = 2f64.sqrt() / (1.0 + eta);
        let scan = scan_one_oscillator(alpha, 1.0, 2000, None, &opts).unwrap();
        let top = scan.points.last().unwrap().lambda;
        let direct = one_oscillator_count(alpha, 1.0, top).unwrap().count;
        assert_eq!(scan.crossing_count(), direct, "eta {eta}");
        assert!(scan.anomalies.is_empty());
    }
}
