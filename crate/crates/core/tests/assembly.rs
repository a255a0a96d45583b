use oscgraph_core::assembly::{
    assemble_b_doubleprime, assemble_b_prime, assemble_remainder, assemble_total, bs_operator, ChannelTable,
};
use oscgraph_core::linalg::dense;
use oscgraph_core::model::kappa;
use oscgraph_core::{ChannelIndex, Lattice, ModelParams, Side, Truncation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

/// Form value computed channel pair by channel pair from boundary values:
/// `‖𝒞‖² + α₊ Σ √(2m) u_{m,n}(1) u_{m−1,n}(1) + α₋ Σ √(2n) u_{m,n}(−1) u_{m,n−1}(−1)`
/// with `u(1) = (C⁺ − κC⁻)/ρ̂`, `u(−1) = (C⁻ − κC⁺)/ρ̂`.
fn literal_form(params: &ModelParams, table: &ChannelTable, c: &[f64]) -> f64 {
    let lat = &table.lattice;
    let at = |pos: usize, side: Side| -> f64 {
        let s = &table.scalars[pos];
        let (own, other) = match side {
            Side::Plus => (c[2 * pos], c[2 * pos + 1]),
            Side::Minus => (c[2 * pos + 1], c[2 * pos]),
        };
        (own - s.kappa * other) / s.rho_hat
    };
    let mut total: f64 = c.iter().map(|x| x * x).sum();
    for (p, ch) in lat.channels().iter().enumerate() {
        if ch.m > 0 {
            if let Some(q) = lat.position(ChannelIndex::new(ch.m - 1, ch.n)) {
                total += params.alpha_plus * (2.0 * ch.m as f64).sqrt() * at(p, Side::Plus) * at(q, Side::Plus);
            }
        }
        if ch.n > 0 {
            if let Some(q) = lat.position(ChannelIndex::new(ch.m, ch.n - 1)) {
                total += params.alpha_minus * (2.0 * ch.n as f64).sqrt() * at(p, Side::Minus) * at(q, Side::Minus);
            }
        }
    }
    total
}

#[test]
fn dof_layout_is_interleaved() {
    assert_eq!(Lattice::dof(3, Side::Plus), 6);
    assert_eq!(Lattice::dof(3, Side::Minus), 7);
}

#[test]
fn quadratic_form_matches_literal_sums() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for (mu_p, mu_m, nu_p, nu_m) in [(1.3, 1.1, 1.0, 1.0), (1.05, 2.0, 0.7, 1.4), (3.0, 1.01, 2.0, 0.5)] {
        let p = ModelParams::new(2f64.sqrt() * nu_p / mu_p, 2f64.sqrt() * nu_m / mu_m, nu_p, nu_m).unwrap();
        for trunc in [Truncation::simplex(9).unwrap(), Truncation::rectangle(5, 7)] {
            for energy in [p.threshold(), p.threshold() - 0.7] {
                let table = ChannelTable::new(&p, trunc, energy).unwrap();
                let op = assemble_total(&p, trunc, energy).unwrap();
                for _ in 0..5 {
                    let c: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let want = literal_form(&p, &table, &c);
                    let got = op.quadratic_form(&c);
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} {want}");
                }
            }
        }
    }
}

#[test]
fn swap_covariance() {
    let p = ModelParams::new(1.1, 0.6, 1.0, 1.3).unwrap();
    for trunc in [Truncation::simplex(8).unwrap(), Truncation::rectangle(4, 9)] {
        let a = assemble_total(&p, trunc, p.threshold()).unwrap();
        let b = assemble_total(&p.swapped(), trunc.mirrored(), p.threshold()).unwrap();
        let perm = Lattice::new(trunc).mirror_permutation();
        let moved = a.permuted(&perm).unwrap();
        assert_eq!(moved.to_dense(), b.to_dense());
        let ea = dense::eigenvalues(&a);
        let eb = dense::eigenvalues(&b);
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn sparsity_bounds() {
    let p = ModelParams::new(1.0, 0.9, 1.0, 1.0).unwrap();
    for trunc in [Truncation::simplex(15).unwrap(), Truncation::rectangle(6, 11)] {
        let cells = Lattice::new(trunc).len();
        for side in [Side::Plus, Side::Minus] {
            let bp = assemble_b_prime(&p, trunc, side, p.threshold()).unwrap();
            let bpp = assemble_b_doubleprime(&p, trunc, side, p.threshold()).unwrap();
            // stored entries are the upper triangle; count both triangles
            let full = |op: &oscgraph_core::SymmetricOperator| {
                op.entries().iter().map(|e| if e.row == e.col { 1 } else { 2 }).sum::<usize>()
            };
            assert!(full(&bp) <= 8 * cells);
            assert!(full(&bpp) <= 2 * cells);
        }
    }
}

#[test]
fn remainder_is_controlled_by_the_largest_kappa() {
    let p = ModelParams::new(1.2, 0.8, 1.0, 0.9).unwrap();
    let trunc = Truncation::simplex(20).unwrap();
    let table = ChannelTable::new(&p, trunc, p.threshold()).unwrap();
    let kmax = table.max_abs_kappa();
    let g_min = table.scalars.iter().map(|s| s.gamma).fold(f64::INFINITY, f64::min);
    assert_eq!(kmax, kappa(g_min).abs());
    let corner = [ChannelIndex::new(1, 0), ChannelIndex::new(0, 1)]
        .iter()
        .map(|&c| table.get(c).unwrap().gamma)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(g_min, corner);
    let x = assemble_remainder(&p, trunc, p.threshold()).unwrap();
    let bp = assemble_b_prime(&p, trunc, Side::Plus, p.threshold()).unwrap();
    let bm = assemble_b_prime(&p, trunc, Side::Minus, p.threshold()).unwrap();
    // `max coefficient` is the largest off-diagonal entry of B″, i.e. of B′
    // with the κ factors removed; it bounds the coupling scale c/2
    let tbl = &table;
    let coef = table
        .lattice
        .channels()
        .iter()
        .flat_map(|&ch| {
            let sp = *tbl.get(ch).unwrap();
            [ch.lower(Side::Plus), ch.lower(Side::Minus)]
                .into_iter()
                .zip([ch.m, ch.n])
                .filter_map(move |(q, k)| {
                    let sq = q.and_then(|q| tbl.get(q).copied())?;
                    Some(0.5 * (2.0 * k as f64).sqrt() / (sp.rho_hat * sq.rho_hat))
                })
                .collect::<Vec<_>>()
        })
        .fold(0.0f64, f64::max);
    let amax = p.alpha_plus.max(p.alpha_minus);
    assert!(x.max_abs_entry() <= amax * kmax * coef * (1.0 + 1e-12));
    assert!(bp.max_abs_entry() <= coef * (1.0 + 1e-12) && bm.max_abs_entry() <= coef * (1.0 + 1e-12));
}

#[test]
fn total_operator_is_bounded_below() {
    for mu in [1.0 + 1e-9, 1.01, 1.2, 2.0] {
        for (nu_p, nu_m) in [(1.0, 1.0), (0.5, 1.5)] {
            let p = ModelParams::new(2f64.sqrt() * nu_p / mu, 2f64.sqrt() * nu_m / mu, nu_p, nu_m).unwrap();
            for l in [4, 12, 24] {
                let op = assemble_total(&p, Truncation::simplex(l).unwrap(), p.threshold()).unwrap();
                let lo = dense::eigenvalues(&op)[0];
                assert!(lo >= -3.0, "mu {mu} L {l}: {lo}");
            }
        }
    }
}

#[test]
fn birman_schwinger_couplings_grow_with_energy() {
    let p = ModelParams::new(1.1, 1.2, 1.0, 1.0).unwrap();
    let trunc = Truncation::simplex(10).unwrap().with_origin(true);
    let grid: Vec<f64> = (0..12).map(|i| p.threshold() - 4.0 * 0.6f64.powi(i)).collect();
    let mut prev: Option<Vec<f64>> = None;
    for &l in &grid {
        let k = bs_operator(&p, trunc, l, 0.0).unwrap();
        let dense = k.to_dense();
        let vals: Vec<f64> = dense.iter().map(|x| x.abs()).collect();
        if let Some(prev) = prev {
            for (a, b) in prev.iter().zip(&vals) {
                assert!(*b >= *a * (1.0 - 1e-14), "{a} -> {b}");
            }
        }
        prev = Some(vals);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn total_is_identity_plus_couplings(a in 0.0f64..1.4, b in 0.0f64..1.4, l in 1usize..12) {
        let p = ModelParams::new(a, b, 1.0, 1.0).unwrap();
        let t = Truncation::simplex(l).unwrap();
        let total = assemble_total(&p, t, p.threshold()).unwrap();
        let bp = assemble_b_prime(&p, t, Side::Plus, p.threshold()).unwrap();
        let bm = assemble_b_prime(&p, t, Side::Minus, p.threshold()).unwrap();
        let d = total.to_dense();
        let want = nalgebra::DMatrix::<f64>::identity(d.nrows(), d.ncols()) + bp.to_dense() * a + bm.to_dense() * b;
        prop_assert!((d - want).abs().max() < 1e-14);
    }
}
