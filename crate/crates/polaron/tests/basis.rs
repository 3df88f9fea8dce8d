use approx::assert_relative_eq;
use polaron::basis::{build_basis, DomainKind, DomainSpec};
use proptest::prelude::*;
use std::f64::consts::PI;

fn interval(l: f64, k: usize, m: usize) -> polaron::basis::Basis {
    build_basis(&DomainSpec::interval(l, k, m)).unwrap()
}

#[test]
fn interval_eigenvalues_at_pi() {
    let b = interval(PI, 3, 3);
    for (j, want) in [1.0, 4.0, 9.0].iter().enumerate() {
        assert_relative_eq!(b.eigenvalues[j], *want, max_relative = 1e-14);
    }
}

#[test]
fn interval_eigenvalues_at_unit_length() {
    let b = interval(1.0, 2, 2);
    assert_relative_eq!(b.eigenvalues[0], PI * PI, max_relative = 1e-14);
    assert_relative_eq!(b.eigenvalues[1], 4.0 * PI * PI, max_relative = 1e-14);
}

#[test]
fn ball_eigenvalues_match_finite_differences() {
    // radial u'' on (0, 1) with u(0) = u(1) = 0 via the second-difference matrix
    let b =
        build_basis(&DomainSpec::interval(1.0, 3, 3).with_kind(DomainKind::BallRadial)).unwrap();
    let n = 800;
    let h = 1.0 / n as f64;
    let mut t = nalgebra::DMatrix::zeros(n - 1, n - 1);
    for i in 0..n - 1 {
        t[(i, i)] = 2.0 / (h * h);
        if i + 1 < n - 1 {
            t[(i, i + 1)] = -1.0 / (h * h);
            t[(i + 1, i)] = -1.0 / (h * h);
        }
    }
    let mut ev: Vec<f64> = t.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for j in 0..3 {
        assert_relative_eq!(
            b.eigenvalues[j],
            ((j + 1) as f64 * PI).powi(2),
            max_relative = 1e-14
        );
        assert_relative_eq!(b.eigenvalues[j], ev[j], max_relative = 1e-4);
    }
}

#[test]
fn laplacian_power_diagonal() {
    let b = interval(PI, 4, 4);
    let p = b.laplacian_power(-0.5, 4);
    for j in 0..4 {
        assert_relative_eq!(p[j], 1.0 / (j + 1) as f64, max_relative = 1e-14);
    }
    let q = b.laplacian_power(1.0, 4);
    assert_relative_eq!(q[3], 16.0, max_relative = 1e-14);
}

#[test]
fn triple_overlap_closed_form() {
    let b = interval(PI, 3, 3);
    // int_0^pi (2/pi)^{3/2} sin^3 x dx = (2/pi)^{3/2} 4/3
    let want = 8.0 / (3.0 * PI) * (2.0 / PI).sqrt();
    assert_relative_eq!(b.triple_overlap(0, 0, 0), want, max_relative = 1e-13);
    assert!(b.triple_overlap(0, 0, 1).abs() < 1e-14);
}

#[test]
fn triple_overlap_symmetric() {
    let b = interval(2.3, 5, 5);
    for (i, j, k) in [(0, 1, 2), (1, 3, 4), (2, 2, 4), (0, 3, 3)] {
        let v = b.triple_overlap(i, j, k);
        for w in [
            b.triple_overlap(i, k, j),
            b.triple_overlap(j, i, k),
            b.triple_overlap(j, k, i),
            b.triple_overlap(k, i, j),
            b.triple_overlap(k, j, i),
        ] {
            assert!((v - w).abs() < 1e-14);
        }
    }
}

#[test]
fn coupling_matrices_symmetric_with_parity_zero() {
    let b = interval(PI, 4, 3);
    let bs = b.coupling_matrices();
    assert_eq!(bs.len(), 3);
    for m in &bs {
        assert!((m - m.transpose()).amax() < 1e-15);
    }
    // odd phonon mode couples only modes of opposite parity
    assert!(bs[1][(0, 0)].abs() < 1e-14);
    assert!(bs[1][(1, 1)].abs() < 1e-14);
}

#[test]
fn uv_projection_cases() {
    let b = interval(PI, 4, 4);
    assert_eq!(b.uv_projection(2.5), vec![true, true, false, false]);
    assert_eq!(b.uv_projection(0.0), vec![false; 4]);
    assert_eq!(b.uv_projection(f64::INFINITY), vec![true; 4]);
}

#[test]
fn square_modes_and_shell_validation() {
    let spec = DomainSpec::interval(PI, 3, 3).with_kind(DomainKind::Square);
    let b = build_basis(&spec).unwrap();
    assert_relative_eq!(b.eigenvalues[0], 2.0, max_relative = 1e-14);
    assert_relative_eq!(b.eigenvalues[1], 5.0, max_relative = 1e-14);
    assert_relative_eq!(b.eigenvalues[2], 5.0, max_relative = 1e-14);
    assert!(b.orthonormality_error() < 1e-13);
    for bad in [2, 5] {
        let spec = DomainSpec::interval(PI, 10, bad).with_kind(DomainKind::Square);
        assert!(build_basis(&spec).is_err());
    }
}

#[test]
fn rejects_bad_extent_and_sizes() {
    assert!(build_basis(&DomainSpec::interval(0.0, 3, 3)).is_err());
    assert!(build_basis(&DomainSpec::interval(f64::NAN, 3, 3)).is_err());
    assert!(build_basis(&DomainSpec::interval(1.0, 1, 3)).is_err());
    assert!(build_basis(&DomainSpec::interval(1.0, 3, 0)).is_err());
}

#[test]
fn laplacian_of_modes_from_derivatives() {
    // multiplication by -w_j'' equals lambda_j times multiplication by w_j
    let b = interval(2.0, 6, 3);
    for j in 0..3 {
        let lap = b.laplacian_multiplication_matrix(j).unwrap();
        let mul = b.multiplication_matrix(j) * b.eigenvalues[j];
        assert!((lap - mul).amax() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orthonormal_for_any_length(l in 0.3f64..20.0, k in 2usize..9) {
        let b = interval(l, k, k);
        prop_assert!(b.orthonormality_error() < 1e-12);
    }

    #[test]
    fn eigenvalues_scale_as_inverse_square(l in 0.3f64..20.0, s in 0.2f64..5.0) {
        let a = interval(l, 3, 3);
        let b = interval(l * s, 3, 3);
        for j in 0..3 {
            prop_assert!((a.eigenvalues[j] / b.eigenvalues[j] - s * s).abs() < 1e-10 * s * s);
        }
    }

    #[test]
    fn uv_projection_monotone(c1 in 0.0f64..10.0, c2 in 0.0f64..10.0) {
        let b = interval(PI, 6, 6);
        let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let kl = b.uv_projection(lo);
        let kh = b.uv_projection(hi);
        for (a, h) in kl.iter().zip(&kh) {
            prop_assert!(!a || *h);
        }
    }
}
