mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use polaron::basis::{build_basis, DomainSpec};
use polaron::model::ElectronModel;
use polaron::pekar::{solve_pekar, solve_pekar_scaled, symmetric_eigen_sorted, ScfOptions};
use polaron::quadratic::{hessian_g, hessian_matrix, reduced_field_energy, HessianModel};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn interaction_off_gives_identity_hessian() {
    let b = build_basis(&DomainSpec::interval(2.0, 6, 3)).unwrap();
    let sol = solve_pekar_scaled(&b, &ScfOptions::default(), 0.0).unwrap();
    let h = hessian_matrix(&sol).unwrap();
    assert!((&h.h - DMatrix::identity(3, 3)).amax() < 1e-15);
    for t in h.tau.iter() {
        assert_relative_eq!(*t, 1.0, epsilon = 1e-15);
    }
    assert!(h.b_kernel.amax() < 1e-15);
    assert_eq!(h.ground_energy(), 0.0);
}

#[test]
fn hessian_is_contractive() {
    let a = common::standard();
    let h = hessian_matrix(&a.sol).unwrap();
    let (gev, _) = symmetric_eigen_sorted(&h.g);
    assert!(gev[gev.len() - 1] <= 1e-14);
    assert!(h.tau[0] > 0.0 && h.tau[0] < h.tau[1] && h.tau[1] < 1.0);
}

#[test]
fn hessian_matches_finite_differences() {
    let b = build_basis(&DomainSpec::interval(3.0 * PI, 8, 3)).unwrap();
    let sol = solve_pekar(&b, &ScfOptions::default()).unwrap();
    let h = hessian_matrix(&sol).unwrap();
    let step = 1e-3;
    let m = sol.m();
    let f = |d: &DVector<f64>| reduced_field_energy(&sol, &(&sol.phi_p + d));
    for j in 0..m {
        for k in 0..m {
            let e = |a: f64, b: f64| {
                let mut d = DVector::zeros(m);
                d[j] += a * step;
                d[k] += b * step;
                f(&d)
            };
            let fd =
                (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * step * step);
            assert!(
                (fd - 2.0 * h.h[(j, k)]).abs() < 1e-5,
                "({j},{k}) fd {fd} vs {}",
                2.0 * h.h[(j, k)]
            );
        }
    }
}

#[test]
fn hessian_from_electron_model_agrees() {
    let a = common::standard();
    let g1 = hessian_g(&a.sol);
    let g2 = ElectronModel::from_solution(&a.sol).hessian_g();
    assert!((g1 - g2).amax() < 1e-13);
}

#[test]
fn single_mode_ground_energy() {
    let h = HessianModel::from_g(DMatrix::from_element(1, 1, (0.25 - 1.0) / 4.0)).unwrap();
    assert_relative_eq!(h.ground_energy(), -0.25, epsilon = 1e-15);
}

#[test]
fn kernel_at_one_sixteenth() {
    let h = HessianModel::from_g(DMatrix::from_element(1, 1, (1.0 / 16.0 - 1.0) / 4.0)).unwrap();
    assert_relative_eq!(h.b_kernel[(0, 0)], 0.75, epsilon = 1e-14);
    assert_relative_eq!(h.b_cosh[(0, 0)], 1.25, epsilon = 1e-14);
    assert_relative_eq!(h.squeeze()[0], 16f64.ln() / 4.0, epsilon = 1e-14);
}

#[test]
fn ladder_levels_on_two_modes() {
    let g = DMatrix::from_diagonal(&DVector::from_vec(vec![
        (0.25 - 1.0) / 4.0,
        (0.64 - 1.0) / 4.0,
    ]));
    let h = HessianModel::from_g(g).unwrap();
    let l = h.ladder_spectrum(4);
    let e1 = 0.5 * ((0.5 - 1.0) + (0.8 - 1.0));
    let want = [e1, e1 + 0.5, e1 + 0.8, e1 + 1.0];
    for (lv, w) in l.iter().zip(want) {
        assert_relative_eq!(lv.energy, w, epsilon = 1e-14);
        assert_eq!(lv.degeneracy, 1);
    }
    assert_eq!(l[1].occupation, vec![1, 0]);
    assert_eq!(l[3].occupation, vec![2, 0]);
}

#[test]
fn rejects_non_coercive_hessian() {
    assert!(HessianModel::from_g(DMatrix::from_element(1, 1, -0.3)).is_err());
    assert!(HessianModel::from_g(DMatrix::from_element(1, 1, 0.1)).is_err());
}

fn hessian_from(values: &[f64], angle: f64) -> HessianModel {
    let m = values.len();
    let mut q = DMatrix::identity(m, m);
    if m >= 2 {
        let (c, s) = (angle.cos(), angle.sin());
        q[(0, 0)] = c;
        q[(0, 1)] = -s;
        q[(1, 0)] = s;
        q[(1, 1)] = c;
    }
    let d = DVector::from_iterator(m, values.iter().map(|t| (t - 1.0) / 4.0));
    let g = &q * DMatrix::from_diagonal(&d) * q.transpose();
    HessianModel::from_g((&g + g.transpose()) * 0.5).unwrap()
}

proptest! {
    #[test]
    fn kernel_identities(taus in proptest::collection::vec(0.05f64..1.0, 1..5), angle in 0.0f64..6.3) {
        let h = hessian_from(&taus, angle);
        let m = taus.len();
        let i = DMatrix::<f64>::identity(m, m);
        // cosh^2 - sinh^2 = 1 in matrix form
        let d = &h.b_cosh * &h.b_cosh - &h.b_kernel * &h.b_kernel;
        prop_assert!((d - &i).amax() < 1e-10);
        prop_assert!((h.b_hs_squared() - h.b_kernel.norm_squared()).abs() < 1e-10 * (1.0 + h.b_hs_squared()));
        let c = h.b_squared_bound();
        let gap = (&i - &h.h) * c - &h.b_kernel * &h.b_kernel;
        let (ev, _) = symmetric_eigen_sorted(&((&gap + gap.transpose()) * 0.5));
        prop_assert!(ev[0] >= -1e-10);
    }

    #[test]
    fn ladder_is_sorted_and_starts_at_ground(taus in proptest::collection::vec(0.05f64..1.0, 1..4)) {
        let h = hessian_from(&taus, 0.0);
        let l = h.ladder_spectrum(10);
        prop_assert!((l[0].energy - h.ground_energy()).abs() < 1e-14);
        for w in l.windows(2) {
            prop_assert!(w[1].energy >= w[0].energy - 1e-14);
        }
        for lv in &l {
            let e: f64 = lv.occupation.iter().zip(h.tau.iter()).map(|(n, t)| *n as f64 * t.sqrt()).sum();
            prop_assert!((lv.energy - h.ground_energy() - e).abs() < 1e-12);
        }
    }
}
