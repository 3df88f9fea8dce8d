mod common;

use nalgebra::DMatrix;
use polaron::engineered::Assembled;
use polaron::gross::{build_k, residual_sweep};
use polaron::oracle::{
    coefficient_order_fit, dense_levels, exact_levels, fluctuation_hamiltonian, growth_check,
    limit_spectrum, log_grid, loglog_fit, residual_order_fit, FitWindow, SchurOracle,
};
use polaron::series::SeriesContext;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn small() -> &'static Assembled {
    static A: OnceLock<Assembled> = OnceLock::new();
    A.get_or_init(|| common::small(3.0 * PI, 5, 2, 6))
}

#[test]
fn fluctuation_hamiltonian_symmetric_with_limit() {
    let a = small();
    let h = fluctuation_hamiltonian(&a.model, 30.0).unwrap();
    assert!((&h - h.transpose()).amax() < 1e-15);
    let far = fluctuation_hamiltonian(&a.model, 1e12).unwrap();
    let d = a.model.dim_fock();
    let limit = DMatrix::from_fn(far.nrows(), far.ncols(), |r, c| {
        if r == c {
            a.model.electron.g[r / d]
        } else {
            0.0
        }
    });
    assert!((far - limit).amax() < 1e-11);
    assert!(fluctuation_hamiltonian(&a.model, 0.0).is_err());
    assert!(fluctuation_hamiltonian(&a.model, f64::INFINITY).is_err());
}

#[test]
fn limit_spectrum_has_full_multiplicity() {
    let a = small();
    let l = limit_spectrum(&a.model);
    assert_eq!(l[0].0, 0.0);
    assert_eq!(l[0].1, a.model.dim_fock());
    assert!(l[1].0 > 0.0);
}

#[test]
fn schur_reduction_matches_dense_eigenvalues() {
    let a = small();
    let oracle = SchurOracle::new(&a.model, &a.spectrum);
    for alpha in [20.0, 50.0] {
        let dense = dense_levels(&a.model, alpha, 3).unwrap();
        for n in 1..=3 {
            let e0 = a.spectrum.eigenpair_group(n, 1e-9).unwrap().energy;
            let shift = oracle.level_shift(n, alpha, 1e-9).unwrap();
            let d = (e0 + shift - alpha * alpha * dense[n - 1]).abs();
            assert!(d < 1e-9, "alpha {alpha} level {n}: {d:e}");
        }
    }
}

#[test]
fn ground_level_two_term_asymptotics() {
    let a = small();
    let alpha = 50.0;
    let e = dense_levels(&a.model, alpha, 1).unwrap()[0];
    let e1 = a.spectrum.values[0];
    // next correction is E_2 alpha^-4
    assert!((e - e1 / (alpha * alpha)).abs() < 1.0 / alpha.powi(4));
}

#[test]
fn sweep_frame_consistent_with_dense() {
    let a = small();
    let oracle = SchurOracle::new(&a.model, &a.spectrum);
    let alphas = [25.0, 80.0];
    let sweep = exact_levels(&oracle, &[1, 2], &alphas, 1e-9).unwrap();
    for (ai, &alpha) in alphas.iter().enumerate() {
        let dense = dense_levels(&a.model, alpha, 2).unwrap();
        for i in 0..2 {
            let d = (sweep.eigenvalue(i, ai) - dense[i]).abs() * alpha * alpha;
            assert!(d < 1e-9);
        }
    }
    assert!(exact_levels(&oracle, &[1], &[], 1e-9).is_err());
}

#[test]
fn enlarging_fock_space_lowers_levels() {
    let lo = common::small(3.0 * PI, 5, 2, 4);
    let hi = small();
    let alpha = 30.0;
    let a = dense_levels(&lo.model, alpha, 3).unwrap();
    let b = dense_levels(&hi.model, alpha, 3).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(y <= &(x + 1e-13));
    }
}

#[test]
fn coefficient_fits_on_small_model() {
    let a = small();
    let oracle = SchurOracle::new(&a.model, &a.spectrum);
    let alphas = log_grid(20.0, 200.0, 16);
    let sweep = exact_levels(&oracle, &[1], &alphas, 1e-9).unwrap();
    let ctx = SeriesContext::new(&a.model, &a.spectrum, 1, 1e-9).unwrap();
    let s = ctx.coefficients_nondegenerate(4, 1e-9).unwrap();
    let w = FitWindow::default();
    for (b, target) in [(0usize, -2.0), (2, -4.0)] {
        let fit = coefficient_order_fit(&sweep, 0, &s.coefficients, b, w);
        let f = fit.fit.expect("points above floor");
        assert!(f.slope <= target + 0.3, "b={b}: slope {}", f.slope);
        assert!(fit.stability < 0.1, "b={b}: stability {}", fit.stability);
    }
    // a wrong E_2 is caught by the fit
    let mut wrong = s.coefficients.clone();
    wrong[2] += 1e-3;
    let fit = coefficient_order_fit(&sweep, 0, &wrong, 2, w);
    assert!(!fit.passes(-3.0 + 0.3));
}

#[test]
fn residual_fit_slope() {
    let a = small();
    let g = build_k(&a.basis, &a.model, f64::INFINITY).unwrap();
    let ctx = SeriesContext::new(&a.model, &a.spectrum, 1, 1e-9).unwrap();
    let e = ctx
        .coefficients_nondegenerate(2, 1e-9)
        .unwrap()
        .coefficients;
    let alphas = log_grid(20.0, 200.0, 16);
    let rows = residual_sweep(&g, &ctx, &e, 0, 1, &alphas).unwrap();
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.residual)).collect();
    let fit = residual_order_fit(&pts, 0, FitWindow::default())
        .fit
        .unwrap();
    assert!((fit.slope + 3.0).abs() < 0.2, "slope {}", fit.slope);
}

#[test]
fn growth_constant() {
    assert_eq!(growth_check(&[1.0, 0.0, 0.0, 0.0]).c_hat, 0.0);
    let a = small();
    let ctx = SeriesContext::new(&a.model, &a.spectrum, 1, 1e-9).unwrap();
    let s = ctx.coefficients_nondegenerate(6, 1e-9).unwrap();
    let g6 = growth_check(&s.coefficients);
    let g4 = growth_check(&s.coefficients[..5]);
    assert!(g6.c_hat.is_finite() && g6.c_hat > 0.0);
    assert!(g6.c_hat / g4.c_hat <= 2.0 && g4.c_hat <= g6.c_hat);
}

#[test]
fn loglog_fit_recovers_power() {
    let alphas = log_grid(10.0, 1000.0, 12);
    let vals: Vec<f64> = alphas.iter().map(|a| 3.0 * a.powf(-2.5)).collect();
    let f = loglog_fit(&alphas, &vals, 0, 10.0, 1000.0, 0.0);
    assert!((f.fit.unwrap().slope + 2.5).abs() < 1e-12);
    let zeros = vec![0.0; alphas.len()];
    let z = loglog_fit(&alphas, &zeros, 0, 10.0, 1000.0, 1e-17);
    assert!(z.fit.is_none() && z.below_floor && z.passes(-1.0));
}
