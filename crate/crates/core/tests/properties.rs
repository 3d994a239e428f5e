use proptest::prelude::*;

use fredholm_core::counterexample::{
    check_identity, find_root, p_explicit, p_series, p_wronskian, sample_points, solution,
    verify_counterexample, Tolerances, VerifyOptions,
};
use fredholm_core::kernel::{solve_gamma, validate_sets, KernelSpec};
use fredholm_core::operator::{
    apply_operator, min_singular_value, nystrom_matrix, nystrom_matrix_with, spectral_at, sweep,
    ApplyOptions, Assembly, SpectralOptions, SweepOptions,
};
use fredholm_core::riccati::{regular_recurrence, regular_series, Family, Ladder, Order};
use fredholm_core::QuadratureGrid;

const RADII: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];

fn spec0() -> KernelSpec {
    solve_gamma(validate_sets(&[0.0], &[2.0]).unwrap()).unwrap()
}

fn root() -> f64 {
    find_root(2.0, 2.5, 1e-12).unwrap().root
}

#[test]
fn recurrence_consistency() {
    for family in [Family::Regular, Family::Irregular] {
        for m in 1..=20u32 {
            for r in RADII {
                let next = Ladder::new(family, Order::new(m + 1), r)
                    .unwrap()
                    .value(m as i64 + 1);
                let here = Ladder::new(family, Order::new(m), r).unwrap();
                let gap =
                    next - (2 * m + 1) as f64 / r * here.value(m as i64) + here.value(m as i64 - 1);
                assert!(
                    gap.abs() <= 1e-10 * next.abs().max(1.0),
                    "{family:?} m={m} r={r}: {gap:e}"
                );
            }
        }
    }
}

#[test]
fn ode_residual_both_families() {
    for family in [Family::Regular, Family::Irregular] {
        for m in 0..=20u32 {
            for r in RADII {
                let l = Ladder::new(family, Order::new(m), r).unwrap();
                let k = m as i64;
                let f = l.value(k);
                let centrifugal = (m * (m + 1)) as f64 / (r * r) * f;
                let residual = l.second_derivative(k) + f - centrifugal;
                // terms of the irregular family grow like r^-m, so measure against their size
                let scale = centrifugal.abs().max(f.abs()).max(1.0);
                assert!(
                    residual.abs() <= 1e-8 * scale,
                    "{family:?} m={m} r={r}: {residual:e}"
                );
            }
        }
    }
}

#[test]
fn series_and_recurrence_overlap() {
    for m in 0..=2u32 {
        for i in 0..=40 {
            let r = 0.3 + 0.4 * i as f64 / 40.0;
            let a = regular_series(Order::new(m), r);
            let b = regular_recurrence(Order::new(m), r).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs(), "m={m} r={r}: {a} vs {b}");
        }
    }
}

#[test]
fn green_function_jump() {
    // g_0(s, t0) = u_0(min) v_0(max) solves g'' + g = 0 off the diagonal and its
    // s-derivative jumps by the Wronskian, 1, across s = t0
    let t0 = 1.3;
    let u0 = Ladder::new(Family::Regular, Order::new(0), t0).unwrap();
    let v0 = Ladder::new(Family::Irregular, Order::new(0), t0).unwrap();
    let right = u0.value(0) * v0.derivative(0);
    let left = u0.derivative(0) * v0.value(0);
    assert!((right - left - 1.0).abs() <= 1e-8);
    for s in [0.2, 0.9, 1.7, 4.0] {
        let (fixed, moving) = if s < t0 {
            (v0.value(0), Family::Regular)
        } else {
            (u0.value(0), Family::Irregular)
        };
        let l = Ladder::new(moving, Order::new(0), s).unwrap();
        let residual = fixed * (l.second_derivative(0) + l.value(0));
        assert!(residual.abs() <= 1e-8);
    }
}

#[test]
fn operator_identity_holds_at_every_radius() {
    let r_root = root();
    for r in [0.5, 1.0, 2.0, r_root, 3.0] {
        let res = check_identity(r, &sample_points(r, 20)).unwrap();
        assert!(res <= 1e-8, "r={r}: {res:e}");
    }
}

#[test]
fn apply_is_grid_converged() {
    let spec = spec0();
    let base = ApplyOptions::default();
    let doubled = ApplyOptions {
        panels: 2 * base.panels,
        ..base
    };
    for s in [0.1, 0.8, 1.6] {
        let h = |t: f64| t * (2.0 - t).cos();
        let a = apply_operator(&spec, 2.0, h, s, &base).unwrap();
        let b = apply_operator(&spec, 2.0, h, s, &doubled).unwrap();
        assert!((a - b).abs() <= 1e-9, "s={s}");
    }
}

#[test]
fn nystrom_agrees_with_apply() {
    let spec = spec0();
    let r = 1.7;
    let h = |t: f64| t * (1.0 + t * t).ln_1p();
    let gap = |assembly, panels| {
        let grid = QuadratureGrid::build(r, panels, 12, None).unwrap();
        let op = nystrom_matrix_with(&spec, &grid, assembly).unwrap();
        let samples: Vec<f64> = grid.nodes().iter().map(|&t| h(t)).collect();
        op.apply(&samples)
            .iter()
            .zip(grid.nodes())
            .map(|(a, &s)| {
                (a - apply_operator(&spec, r, h, s, &ApplyOptions::default()).unwrap()).abs()
            })
            .fold(0.0, f64::max)
    };
    let corrected = gap(Assembly::KinkCorrected, 8);
    assert!(corrected <= 1e-9, "{corrected:e}");
    let (coarse, fine) = (gap(Assembly::Plain, 8), gap(Assembly::Plain, 16));
    assert!(fine < 0.5 * coarse, "{coarse:e} -> {fine:e}");
}

#[test]
fn nystrom_symmetry() {
    let spec = solve_gamma(validate_sets(&[0.0, 1.0], &[2.0, 3.0]).unwrap()).unwrap();
    let grid = QuadratureGrid::build(2.0, 3, 4, None).unwrap();
    let op = nystrom_matrix(&spec, &grid).unwrap();
    let (t, w) = (grid.nodes(), grid.weights());
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let a = op.entry(i, j) * t[j] * t[j] / w[j];
            let b = op.entry(j, i) * t[i] * t[i] / w[i];
            assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
        }
    }
}

#[test]
fn spectral_certificate_is_consistent() {
    let spec = spec0();
    for r in [0.5, 1.2, root(), 3.0] {
        let res = spectral_at(&spec, r, &SpectralOptions::default()).unwrap();
        let norm: f64 = res.null_vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let rounding = 64.0 * f64::EPSILON * res.matrix_norm;
        assert!(
            res.residual_norm <= res.sigma_min * (1.0 + 1e-8) + rounding,
            "r={r}"
        );
    }
    let grid = QuadratureGrid::build(0.5, 8, 12, None).unwrap();
    let res =
        min_singular_value(&nystrom_matrix_with(&spec, &grid, Assembly::KinkCorrected).unwrap())
            .unwrap();
    assert!(res.sigma_min >= 0.5);
}

#[test]
fn sweep_well_conditioned_below_root() {
    let rep = sweep(&spec0(), 0.5, 1.5, 5, &SweepOptions::default()).unwrap();
    assert_eq!(rep.rows.len(), 5);
    assert!(rep.rows.iter().all(|row| row.sigma_min.unwrap() > 0.1));
}

#[test]
fn sweep_minimum_tracks_root() {
    let r_root = root();
    let rep = sweep(&spec0(), 2.0, 3.0, 101, &SweepOptions::default()).unwrap();
    let best = rep.argmin().unwrap();
    assert!(
        (best.r - r_root).abs() <= 0.02,
        "argmin {} vs root {r_root}",
        best.r
    );

    // a finer sweep around the first minimum lands closer
    let fine = sweep(
        &spec0(),
        best.r - 0.01,
        best.r + 0.01,
        201,
        &SweepOptions::default(),
    )
    .unwrap();
    let fine_best = fine.argmin().unwrap();
    assert!((fine_best.r - r_root).abs() <= (best.r - r_root).abs().max(1e-4));
    assert!((fine_best.r - r_root).abs() <= 1e-4);
}

#[test]
fn sweep_refinement_delta() {
    let opts = SweepOptions {
        refine: true,
        ..SweepOptions::default()
    };
    let rep = sweep(&spec0(), 1.0, 3.0, 3, &opts).unwrap();
    for row in &rep.rows {
        assert!(row.refinement_delta.unwrap() < 0.05);
    }
}

#[test]
fn verification_default_passes() {
    let report = verify_counterexample(&VerifyOptions::default()).unwrap();
    assert!(report.pass, "{}", report.summary());
    assert_eq!(report.gamma0, -6.0);
    assert!((report.root.root - 2.44).abs() < 0.005);
    assert!(report.summary().contains("R ≈ 2.44"));
}

#[test]
fn verification_at_wrong_radius_fails() {
    let opts = VerifyOptions {
        radius: Some(1.0),
        ..VerifyOptions::default()
    };
    let report = verify_counterexample(&opts).unwrap();
    assert!(!report.pass);
    assert!(report.failures.contains(&"equation".to_string()));
    // |p(1)| sin(1)
    let expected = 0.147_887_464_702_241_33 * 1f64.sin();
    assert!(
        (report.equation_residual - expected).abs() < 1e-8,
        "{}",
        report.equation_residual
    );
}

#[test]
fn verification_with_zero_tolerances_fails() {
    let opts = VerifyOptions {
        tolerances: Tolerances {
            gamma: 0.0,
            identity: 0.0,
            equation: 0.0,
            sigma: 0.0,
        },
        ..VerifyOptions::default()
    };
    assert!(!verify_counterexample(&opts).unwrap().pass);
}

#[test]
fn asymptotic_envelopes() {
    for i in 1..=30 {
        let r = 0.01 * i as f64;
        let v = p_explicit(r).unwrap().value;
        assert!((v + r * r / 5.0).abs() <= 0.1 * r.powi(4), "r={r}");
    }
    for i in 0..=200 {
        let r = 10.0 + i as f64;
        assert!(
            (p_explicit(r).unwrap().value - 1.0).abs() <= 7.0 / (r * r),
            "r={r}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn kernel_is_symmetric(s in 1e-6f64..=10.0, t in 1e-6f64..=10.0) {
        let k = spec0();
        prop_assert_eq!(k.eval(s, t).unwrap().to_bits(), k.eval(t, s).unwrap().to_bits());
    }
}

fn disjoint_integer_sets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                Just(n),
                Just((0..=12u32).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
        .prop_map(|(n, pool)| {
            let s = pool[..n].iter().map(|&x| x as f64).collect();
            let t = pool[n..2 * n].iter().map(|&x| x as f64).collect();
            (s, t)
        })
}

proptest! {
    #[test]
    fn gamma_residual_is_small((s, t) in disjoint_integer_sets()) {
        let spec = solve_gamma(validate_sets(&s, &t).unwrap()).unwrap();
        for res in spec.equation_residuals() {
            prop_assert!(res.abs() <= 1e-10, "S={:?} T={:?} residual {:e}", s, t, res);
        }
    }

    #[test]
    fn multi_term_kernel_is_symmetric((s, t) in disjoint_integer_sets(), x in 0.01f64..10.0, y in 0.01f64..10.0) {
        let spec = solve_gamma(validate_sets(&s, &t).unwrap()).unwrap();
        prop_assert_eq!(spec.eval(x, y).unwrap().to_bits(), spec.eval(y, x).unwrap().to_bits());
    }

    #[test]
    fn p_routes_agree(r in 0.2f64..50.0) {
        let e = p_explicit(r).unwrap().value;
        let w = p_wronskian(r).unwrap().value;
        prop_assert!((e - w).abs() <= 1e-9);
    }

    #[test]
    fn series_agrees_in_overlap(r in 0.25f64..=0.5) {
        let e = p_explicit(r).unwrap().value;
        let s = p_series(r).unwrap().value;
        prop_assert!((e - s).abs() <= 1e-9);
    }

    #[test]
    fn grid_invariants(
        r in 0.01f64..100.0,
        panels in 1usize..20,
        nodes in 1usize..16,
        split in proptest::option::of(0.01f64..0.99),
    ) {
        let split = split.map(|f| f * r);
        let grid = QuadratureGrid::build(r, panels, nodes, split).unwrap();
        let sum: f64 = grid.weights().iter().sum();
        prop_assert!((sum - r).abs() <= 1e-12 * r);
        prop_assert!(grid.nodes()[0] > 0.0);
        prop_assert!(grid.nodes().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(grid.weights().iter().all(|&w| w > 0.0));
        if let Some(x) = split {
            prop_assert!(grid.breakpoints().contains(&x));
        }
    }

    #[test]
    fn solution_tracks_itself_only_at_root(r in 0.6f64..2.2) {
        // p has no zero below the root, so K u_2 differs from u_2 there
        let spec = spec0();
        let s = r;
        let ku = apply_operator(&spec, r, solution, s, &ApplyOptions::default()).unwrap();
        prop_assert!((ku - solution(s)).abs() > 1e-3);
    }
}
