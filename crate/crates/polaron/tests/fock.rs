mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use polaron::fock::{bogoliubov_unitary, build_fock, expm, FockSpectrum};
use polaron::quadratic::HessianModel;
use proptest::prelude::*;

fn two_mode_g() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[-0.08, 0.02, 0.02, -0.05])
}

#[test]
fn dimensions_are_binomial() {
    assert_eq!(build_fock(1, 3).unwrap().dim(), 4);
    assert_eq!(build_fock(2, 2).unwrap().dim(), 6);
    assert_eq!(build_fock(3, 4).unwrap().dim(), 35);
}

#[test]
fn rejects_oversized_space() {
    assert!(build_fock(40, 40).is_err());
}

#[test]
fn canonical_commutators_on_interior() {
    let f = build_fock(3, 5).unwrap();
    let interior = f.interior(1);
    for j in 0..3 {
        for k in 0..3 {
            let (aj, _) = f.ladder(j);
            let (_, akd) = f.ladder(k);
            let c = aj.matmul(&akd).sub(&akd.matmul(&aj)).to_dense();
            let (ak, _) = f.ladder(k);
            let cc = aj.matmul(&ak).sub(&ak.matmul(&aj)).to_dense();
            for &r in &interior {
                for &s in &interior {
                    let want = if j == k && r == s { 1.0 } else { 0.0 };
                    assert!((c[(r, s)] - want).abs() < 1e-14);
                    assert!(cc[(r, s)].abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn vacuum_and_number_operator() {
    let f = build_fock(2, 4).unwrap();
    let v = f.vacuum();
    assert_eq!(f.total(v), 0);
    let (a0, _) = f.ladder(0);
    let mut vac = DVector::zeros(f.dim());
    vac[v] = 1.0;
    assert!(a0.mul_vec(&vac).norm() == 0.0);
    let n = f.number();
    for i in 0..f.dim() {
        assert_eq!(n.get(i, i), f.total(i) as f64);
    }
    // N = sum_j a_j^+ a_j
    let mut sum = DMatrix::zeros(f.dim(), f.dim());
    for j in 0..2 {
        let (a, ad) = f.ladder(j);
        sum += ad.matmul(&a).to_dense();
    }
    assert!((sum - n.to_dense()).amax() < 1e-14);
}

#[test]
fn field_moments_in_vacuum() {
    let f = build_fock(2, 6).unwrap();
    let phi = f.field_operator(&DVector::from_vec(vec![0.6, -0.8]));
    let mut vac = DVector::zeros(f.dim());
    vac[f.vacuum()] = 1.0;
    let pv = phi.mul_vec(&vac);
    assert!(vac.dot(&pv).abs() < 1e-15);
    // <A(f)^2> = |f|^2 and <A(f)^4> = 3 |f|^4 for unnormalized fields
    assert_relative_eq!(pv.norm_squared(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(phi.mul_vec(&pv).norm_squared(), 3.0, epsilon = 1e-13);
}

#[test]
fn zero_hessian_gives_number_operator() {
    let f = build_fock(3, 3).unwrap();
    let h = f.bogoliubov_hamiltonian(&DMatrix::zeros(3, 3));
    assert!((h.to_dense() - f.number().to_dense()).amax() == 0.0);
}

#[test]
fn low_spectrum_matches_ladder() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = build_fock(2, 18).unwrap();
    let sp = FockSpectrum::new(&f.bogoliubov_hamiltonian(&hess.g));
    let ladder = hess.ladder_spectrum(4);
    for (i, l) in ladder.iter().enumerate() {
        assert!(
            (sp.values[i] - l.energy).abs() < 1e-7,
            "level {i}: {} vs {}",
            sp.values[i],
            l.energy
        );
    }
}

#[test]
fn ground_state_occupation_is_kernel_norm() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = build_fock(2, 18).unwrap();
    let sp = FockSpectrum::new(&f.bogoliubov_hamiltonian(&hess.g));
    let gamma = sp.vectors.column(0).into_owned();
    let n = f.number().mul_vec(&gamma);
    assert_relative_eq!(gamma.dot(&n), hess.b_hs_squared(), max_relative = 1e-7);
}

#[test]
fn level_group_projector_and_resolvent() {
    let a = common::standard();
    let sp = &a.spectrum;
    let grp = sp.eigenpair_group(1, 1e-9).unwrap();
    assert_eq!(grp.degeneracy(), 1);
    let p = grp.projector();
    assert!((&p * &p - &p).amax() < 1e-13);
    assert!((&p - p.transpose()).amax() < 1e-15);
    let res = sp.reduced_resolvent(&grp);
    let h = a
        .model
        .fock
        .bogoliubov_hamiltonian(&a.model.electron.hessian_g())
        .to_dense();
    let d = h.nrows();
    let u = DVector::from_fn(d, |i, _| ((i * 13 + 5) % 7) as f64 - 3.0);
    // R (H - E) u = -(1 - P) u
    let hu = &h * &u - &u * grp.energy;
    let lhs = res.apply(&hu);
    let q = DMatrix::identity(d, d) - &p;
    assert!((lhs + &q * &u).norm() < 1e-10 * u.norm());
    assert!(res.apply(&grp.gammas.column(0).into_owned()).norm() < 1e-12);
    assert!(u.dot(&res.apply(&u)) <= 0.0);
}

#[test]
fn group_index_outside_range_is_rejected() {
    let a = common::standard();
    assert!(a.spectrum.eigenpair_group(0, 1e-9).is_err());
    assert!(a
        .spectrum
        .eigenpair_group(a.spectrum.values.len() + 1, 1e-9)
        .is_err());
}

#[test]
fn bogoliubov_unitary_adjoint_maps_vacuum_to_ground_state() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = build_fock(2, 16).unwrap();
    let u = bogoliubov_unitary(&f, &hess);
    assert!(u.tail < 1e-13);
    let sp = FockSpectrum::new(&f.bogoliubov_hamiltonian(&hess.g));
    // U^* vac is row `vacuum` of the real matrix U
    let overlap = u
        .matrix
        .row(f.vacuum())
        .transpose()
        .dot(&sp.vectors.column(0));
    assert!((overlap.abs() - 1.0).abs() < 1e-9, "overlap {overlap}");
}

#[test]
fn bogoliubov_unitary_transforms_creators() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = build_fock(2, 12).unwrap();
    let u = bogoliubov_unitary(&f, &hess);
    let interior = f.interior(2);
    let mut worst: f64 = 0.0;
    for j in 0..2 {
        let (_, ad) = u.padded.ladder(j);
        let lhs = u.conjugate(&ad);
        let mut rhs = DMatrix::zeros(f.dim(), f.dim());
        for k in 0..2 {
            let (ak, akd) = f.ladder(k);
            rhs += akd.to_dense() * hess.b_cosh[(k, j)] + ak.to_dense() * hess.b_kernel[(k, j)];
        }
        for &r in &interior {
            for &c in &interior {
                worst = worst.max((lhs[(r, c)] - rhs[(r, c)]).abs());
            }
        }
    }
    assert!(worst < 1e-8, "relation residual {worst:e}");
}

#[test]
fn bogoliubov_unitary_diagonalizes_hamiltonian() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = build_fock(2, 12).unwrap();
    let u = bogoliubov_unitary(&f, &hess);
    let t = u.conjugate(&u.padded.bogoliubov_hamiltonian(&hess.g));
    let h_half =
        &hess.modes * DMatrix::from_diagonal(&hess.tau.map(f64::sqrt)) * hess.modes.transpose();
    let mut dg = DMatrix::identity(f.dim(), f.dim()) * hess.ground_energy();
    for j in 0..2 {
        for k in 0..2 {
            let (_, ajd) = f.ladder(j);
            let (ak, _) = f.ladder(k);
            dg += ajd.matmul(&ak).to_dense() * h_half[(j, k)];
        }
    }
    let interior = f.interior(2);
    let mut worst: f64 = 0.0;
    for &r in &interior {
        for &c in &interior {
            worst = worst.max((t[(r, c)] - dg[(r, c)]).abs());
        }
    }
    assert!(worst < 1e-8, "deviation {worst:e}");
}

#[test]
fn bogoliubov_unitary_leakage_bounds_defect() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = build_fock(2, 10).unwrap();
    let u = bogoliubov_unitary(&f, &hess);
    let defect = DMatrix::identity(f.dim(), f.dim()) - &u.matrix * u.matrix.transpose();
    for r in f.interior(2) {
        assert!(defect.column(r).norm() <= 2.0 * u.leakage + 1e-12);
    }
    assert!(u.leakage < 1.0);
}

#[test]
fn bogoliubov_unitary_trivial_kernel() {
    let hess = HessianModel::from_g(DMatrix::zeros(2, 2)).unwrap();
    let f = build_fock(2, 5).unwrap();
    let u = bogoliubov_unitary(&f, &hess);
    assert!((u.matrix - DMatrix::identity(f.dim(), f.dim())).amax() == 0.0);
    assert_eq!(u.leakage, 0.0);
}

#[test]
fn number_moments_transported_by_unitary() {
    let hess = HessianModel::from_g(two_mode_g()).unwrap();
    let f = &build_fock(2, 14).unwrap();
    let u = bogoliubov_unitary(f, &hess);
    let sp = FockSpectrum::new(&f.bogoliubov_hamiltonian(&hess.g));
    let bound = 3.0 * hess.b_hs_squared().sqrt() + 3.0;
    let n_small = f.number_diagonal();
    for i in 0..5 {
        // Gamma = U^* gamma with gamma = U Gamma
        let mut g_big = DVector::zeros(u.padded.dim());
        for (c, &p) in u.embedding.iter().enumerate() {
            g_big[p] = sp.vectors[(c, i)];
        }
        let gamma = u.apply_padded(&g_big);
        let lhs: f64 = sp
            .vectors
            .column(i)
            .iter()
            .zip(&n_small)
            .map(|(v, n)| v * v * (n + 1.0))
            .sum();
        assert!((gamma.norm() - 1.0).abs() < 1e-4);
        let rhs: f64 = gamma
            .iter()
            .zip(&n_small)
            .map(|(v, n)| v * v * (n + 1.0))
            .sum();
        assert!(lhs <= bound * rhs, "level {i}: {lhs} > {bound} * {rhs}");
    }
}

#[test]
fn matrix_exponential_of_rotation() {
    let t = 0.7;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
    let e = expm(&a);
    let want = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
    assert!((e - want).amax() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn index_round_trip(m in 1usize..4, n in 1usize..6) {
        let f = build_fock(m, n).unwrap();
        prop_assert_eq!(f.dim(), polaron::fock::binomial(m + n, m));
        for (i, s) in f.states.iter().enumerate() {
            prop_assert_eq!(f.index_of(s), Some(i));
        }
    }

    #[test]
    fn hamiltonian_symmetric(g00 in -0.2f64..0.0, g01 in -0.05f64..0.05, g11 in -0.2f64..0.0) {
        let f = build_fock(2, 6).unwrap();
        let g = DMatrix::from_row_slice(2, 2, &[g00, g01, g01, g11]);
        prop_assert!(f.bogoliubov_hamiltonian(&g).is_symmetric(1e-14));
    }
}
