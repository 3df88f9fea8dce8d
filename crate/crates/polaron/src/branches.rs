//! Analytic eigenvalue branches of a hermitian matrix series `M(x) = sum_{k>=1} x^k M_k`.
//!
//! The eigenvalues of `M(x)/x = M_1 + x M_2 + ...` are split recursively: each cluster of the
//! leading matrix is reduced to a hermitian effective matrix series through the spectral
//! projection series `P(x)` (orthonormalized with `(P P(x) P)^{-1/2}`), shifted, divided by `x`
//! and split again.

use crate::pekar::symmetric_eigen_sorted;
use nalgebra::DMatrix;

/// One analytic branch: `coeffs[k]` multiplies `x^{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub coeffs: Vec<f64>,
    /// Branches sharing a group id were not separated at any computed order.
    pub group: usize,
}

type Series = Vec<DMatrix<f64>>;

fn mul(a: &Series, b: &Series, len: usize) -> Series {
    let n = a[0].nrows();
    (0..len)
        .map(|k| {
            let mut s = DMatrix::zeros(n, b[0].ncols());
            for i in 0..=k {
                if i < a.len() && k - i < b.len() {
                    s += &a[i] * &b[k - i];
                }
            }
            s
        })
        .collect()
}

/// Inverse of a series with `a_0 = 1`.
fn inv_unit(a: &Series) -> Series {
    let n = a[0].nrows();
    let mut out: Series = vec![DMatrix::identity(n, n)];
    for k in 1..a.len() {
        let mut s = DMatrix::zeros(n, n);
        for i in 1..=k {
            s -= &a[i] * &out[k - i];
        }
        out.push(s);
    }
    out
}

/// Square root of a series with `a_0 = 1`.
fn sqrt_unit(a: &Series) -> Series {
    let n = a[0].nrows();
    let mut out: Series = vec![DMatrix::identity(n, n)];
    for k in 1..a.len() {
        let mut s = a[k].clone();
        for i in 1..k {
            s -= &out[i] * &out[k - i];
        }
        out.push(s * 0.5);
    }
    out
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Splits `A(x) = sum_k x^k a[k]` into ascending analytic branches; coefficient lists have
/// length `a.len()` and start with the eigenvalues of `a[0]`.
fn split(a: &[DMatrix<f64>], tol: f64, next_group: &mut usize) -> Vec<Branch> {
    let d = a[0].nrows();
    let len = a.len();
    let scale = a.iter().map(|m| m.amax()).fold(1.0, f64::max);
    let (vals, vecs) = symmetric_eigen_sorted(&sym(a[0].clone()));
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < d {
        let mut j = i + 1;
        while j < d && vals[j] - vals[j - 1] <= tol * scale {
            j += 1;
        }
        clusters.push((i, j));
        i = j;
    }
    let mut out = Vec::new();
    for &(lo, hi) in &clusters {
        let m = hi - lo;
        let lam = (lo..hi).map(|i| vals[i]).sum::<f64>() / m as f64;
        if len == 1 {
            let g = *next_group;
            *next_group += 1;
            out.extend((0..m).map(|_| Branch {
                coeffs: vec![lam],
                group: g,
            }));
            continue;
        }
        if m == 1 && d == 1 {
            let g = *next_group;
            *next_group += 1;
            out.push(Branch {
                coeffs: a.iter().map(|x| x[(0, 0)]).collect(),
                group: g,
            });
            continue;
        }
        let heff = effective(a, &vecs, lo, hi, &vals);
        // H_eff(x) = lam + x (B_0 + x B_1 + ...)
        let b: Vec<DMatrix<f64>> = heff[1..].iter().cloned().map(sym).collect();
        for sub in split(&b, tol, next_group) {
            let mut coeffs = vec![lam];
            coeffs.extend(sub.coeffs);
            out.push(Branch {
                coeffs,
                group: sub.group,
            });
        }
    }
    out
}

/// Hermitian effective series on the cluster `lo..hi` of `a[0]`.
fn effective(
    a: &[DMatrix<f64>],
    vecs: &DMatrix<f64>,
    lo: usize,
    hi: usize,
    vals: &nalgebra::DVector<f64>,
) -> Series {
    let d = a[0].nrows();
    let len = a.len();
    let uc = vecs.columns(lo, hi - lo).into_owned();
    let p0 = &uc * uc.transpose();
    let q0 = DMatrix::identity(d, d) - &p0;
    let lam = (lo..hi).map(|i| vals[i]).sum::<f64>() / (hi - lo) as f64;
    // reduced resolvent of a[0] on the complement
    let mut s = DMatrix::zeros(d, d);
    for i in (0..lo).chain(hi..d) {
        let v = vecs.column(i);
        s += v * v.transpose() / (vals[i] - lam);
    }
    let mut p: Series = vec![p0.clone()];
    for k in 1..len {
        let mut c = DMatrix::zeros(d, d);
        for i in 1..=k {
            c += &a[i] * &p[k - i] - &p[k - i] * &a[i];
        }
        let mut pp = DMatrix::zeros(d, d);
        for i in 1..k {
            pp += &p[i] * &p[k - i];
        }
        let off = -&s * &c * &p0;
        let pk = -&p0 * &pp * &p0 + &q0 * &pp * &q0 + &off + off.transpose();
        p.push(sym(pk));
    }
    let ap = mul(&a.to_vec(), &p, len);
    let pap = mul(&p, &ap, len);
    let h: Series = pap.iter().map(|m| sym(uc.transpose() * m * &uc)).collect();
    let g: Series = p.iter().map(|m| sym(uc.transpose() * m * &uc)).collect();
    let t = sqrt_unit(&inv_unit(&g));
    let th = mul(&t, &h, len);
    mul(&th, &t, len).into_iter().map(sym).collect()
}

/// All branches of `M(x) = sum_{k=1}^{L} x^k M_k`, ascending as `x -> 0+`.
/// `coeffs[k - 1]` is the coefficient `mu_k` of `x^k`.
pub fn eigenvalue_branches(ms: &[DMatrix<f64>], tol: f64) -> Vec<Branch> {
    assert!(!ms.is_empty(), "need at least M_1");
    let mut next = 0;
    split(ms, tol, &mut next)
}

/// Coefficients `mu^(s)_1 .. mu^(s)_L` of the `s`-th ascending branch (`s` is 1-based).
pub fn eigenvalue_series(ms: &[DMatrix<f64>], s: usize, tol: f64) -> Vec<f64> {
    eigenvalue_branches(ms, tol)[s - 1].coeffs.clone()
}

/// Largest deviation between the numeric eigenvalues of `M(x)` and the branch partial sums,
/// divided by `x^{L+1}`, at the given `x`.
pub fn branch_consistency(ms: &[DMatrix<f64>], x: f64, tol: f64) -> f64 {
    let d = ms[0].nrows();
    let mut mx = DMatrix::zeros(d, d);
    for (k, m) in ms.iter().enumerate() {
        mx += m * x.powi(k as i32 + 1);
    }
    let (vals, _) = symmetric_eigen_sorted(&sym(mx));
    let br = eigenvalue_branches(ms, tol);
    let mut sums: Vec<f64> = br
        .iter()
        .map(|b| {
            b.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * x.powi(k as i32 + 1))
                .sum()
        })
        .collect();
    sums.sort_by(f64::total_cmp);
    let l = ms.len() as i32;
    vals.iter()
        .zip(&sums)
        .map(|(v, s)| (v - s).abs() / x.powi(l + 1))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn diagonal_series_sorted_per_order() {
        let m1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 1.0]));
        let m2 = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 0.0, -2.0]));
        let br = eigenvalue_branches(&[m1, m2], 1e-10);
        let c: Vec<Vec<f64>> = br.into_iter().map(|b| b.coeffs).collect();
        assert_eq!(c, vec![vec![-1.0, 0.0], vec![1.0, -2.0], vec![1.0, 5.0]]);
    }

    #[test]
    fn off_diagonal_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]);
        let br = eigenvalue_branches(&[m], 1e-12);
        assert!((br[0].coeffs[0] + 0.3).abs() < 1e-15);
        assert!((br[1].coeffs[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fully_degenerate_stays_shared() {
        let i = DMatrix::<f64>::identity(2, 2);
        let br = eigenvalue_branches(&[i.clone() * 0.5, i * 2.0], 1e-12);
        assert_eq!(br[0].group, br[1].group);
        assert_eq!(br[0].coeffs, br[1].coeffs);
    }
}
