//! Configurations with degenerate ladder levels.
//!
//! Two constructions:
//! - a resonant interval whose length is tuned so that `tau_2 = 4 tau_1` in the truncated model;
//!   the levels `2 x mode 1` and `1 x mode 2` then coincide but have opposite Fock parity, so the
//!   cubic vertex couples them and the degeneracy splits at first order;
//! - the square, where the mirror pair of phonon modes gives `tau_1 = tau_2` exactly; the
//!   degenerate states share their Fock parity and the first-order block vanishes.

use crate::basis::{build_basis, Basis, DomainKind, DomainSpec};
use crate::error::{config, numerical, Result};
use crate::fock::{build_fock, FockSpace, FockSpectrum};
use crate::model::CoupledModel;
use crate::oracle::SpectralSweep;
use crate::pekar::{solve_pekar, symmetric_eigen_sorted, PekarSolution, ScfOptions};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// A fully assembled model with its Fock spectrum.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub basis: Basis,
    pub sol: PekarSolution,
    pub model: CoupledModel,
    pub spectrum: FockSpectrum,
}

pub fn assemble(spec: &DomainSpec, n_max: usize, scf: &ScfOptions) -> Result<Assembled> {
    let basis = build_basis(spec)?;
    let sol = solve_pekar(&basis, scf)?;
    let model = CoupledModel::new(&sol, build_fock(spec.n_phonon, n_max)?);
    let spectrum = FockSpectrum::new(
        &model
            .fock
            .bogoliubov_hamiltonian(&model.electron.hessian_g()),
    );
    Ok(Assembled {
        basis,
        sol,
        model,
        spectrum,
    })
}

/// `(-1)^N` on the occupation basis.
pub fn fock_parity(fock: &FockSpace) -> Vec<f64> {
    (0..fock.dim())
        .map(|i| if fock.total(i).is_multiple_of(2) { 1.0 } else { -1.0 })
        .collect()
}

/// `<v, (-1)^N v>` for column `i` of the spectrum.
pub fn state_parity(spectrum: &FockSpectrum, parity: &[f64], i: usize) -> f64 {
    spectrum
        .vectors
        .column(i)
        .iter()
        .zip(parity)
        .map(|(v, p)| v * v * p)
        .sum()
}

/// Rotates an orthonormal set of Fock vectors so that each has definite Fock parity
/// (odd first).
pub fn parity_adapted(gammas: &DMatrix<f64>, parity: &[f64]) -> DMatrix<f64> {
    let d = gammas.ncols();
    let pm = DMatrix::from_fn(d, d, |r, t| {
        (0..gammas.nrows())
            .map(|i| gammas[(i, r)] * parity[i] * gammas[(i, t)])
            .sum()
    });
    let (_, vecs) = symmetric_eigen_sorted(&pm);
    gammas * vecs
}

#[derive(Debug, Clone)]
pub struct ResonantInterval {
    pub extent: f64,
    pub assembled: Assembled,
    /// First of the two coinciding levels (1-based).
    pub level: usize,
    /// `E_even - E_odd` of the pair at the returned extent.
    pub mismatch: f64,
    pub evaluations: usize,
}

/// Even-minus-odd energy of the Fock eigenstates `first - 1` and `first`.
fn pair_mismatch(a: &Assembled, first: usize) -> Result<f64> {
    let parity = fock_parity(&a.model.fock);
    let (i, j) = (first - 1, first);
    if j >= a.spectrum.values.len() {
        return config("Fock space too small for the requested pair");
    }
    let pi = state_parity(&a.spectrum, &parity, i);
    let pj = state_parity(&a.spectrum, &parity, j);
    if (pi - pj).abs() < 1.9 {
        return numerical(format!(
            "levels {first}, {} do not have opposite Fock parity",
            first + 1
        ));
    }
    let (ev, od) = if pi > 0.0 { (i, j) } else { (j, i) };
    Ok(a.spectrum.values[ev] - a.spectrum.values[od])
}

/// Tunes the interval length inside `bracket` so that levels `level` and `level + 1` coincide,
/// using the Illinois variant of regula falsi on the even-minus-odd energy difference.
pub fn resonant_interval(
    n_electron: usize,
    n_phonon: usize,
    n_max: usize,
    level: usize,
    bracket: (f64, f64),
    tol: f64,
) -> Result<ResonantInterval> {
    let scf = ScfOptions::default();
    let eval = |l: f64| -> Result<(Assembled, f64)> {
        let a = assemble(&DomainSpec::interval(l, n_electron, n_phonon), n_max, &scf)?;
        let f = pair_mismatch(&a, level)?;
        Ok((a, f))
    };
    let (mut lo, mut hi) = bracket;
    let (mut a_lo, mut f_lo) = eval(lo)?;
    let (_, mut f_hi) = eval(hi)?;
    let mut evaluations = 2;
    if f_lo.signum() == f_hi.signum() {
        return config(format!(
            "no sign change of the pair mismatch on [{lo}, {hi}]"
        ));
    }
    let mut side = 0i8;
    let mut best = (lo, f_lo);
    for _ in 0..200 {
        let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let (a, f) = eval(x)?;
        evaluations += 1;
        if f.abs() < best.1.abs() {
            best = (x, f);
            a_lo = a.clone();
        }
        if f.abs() <= tol || (hi - lo).abs() <= 1e-15 * x.abs() {
            return Ok(ResonantInterval {
                extent: x,
                assembled: a,
                level,
                mismatch: f,
                evaluations,
            });
        }
        if f.signum() == f_lo.signum() {
            lo = x;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    if best.1.abs() <= 1e3 * tol {
        return Ok(ResonantInterval {
            extent: best.0,
            assembled: a_lo,
            level,
            mismatch: best.1,
            evaluations,
        });
    }
    numerical(format!(
        "resonance search stalled at mismatch {:.3e}",
        best.1
    ))
}

/// Square of side `extent` with `n_phonon` modes; the mirror pair makes `tau_1 = tau_2`.
pub fn symmetric_square(
    extent: f64,
    n_electron: usize,
    n_phonon: usize,
    n_max: usize,
) -> Result<Assembled> {
    let spec = DomainSpec::interval(extent, n_electron, n_phonon).with_kind(DomainKind::Square);
    assemble(&spec, n_max, &ScfOptions::default())
}

/// `(M_1)_{rt} = sum_{jkl} t_jkl <Gamma_r, A_j A_k A_l Gamma_t>` with
/// `t_jkl = <c, D_j R D_k R D_l c>`, `D_j = B_j + phi^P_j`, assembled in the Dirichlet basis with
/// `R = -Q (H_0 + |c><c|)^{-1} Q`.
pub fn cubic_vertex_block(a: &Assembled, gammas: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sol = &a.sol;
    let k = sol.c.len();
    let c = &sol.c;
    let q = DMatrix::identity(k, k) - c * c.transpose();
    let shifted = &sol.h0 + c * c.transpose();
    let inv = shifted
        .try_inverse()
        .ok_or_else(|| crate::error::Error::Numerical("H_0 + |c><c| is singular".into()))?;
    let r = -(&q * inv * &q);
    let m = sol.m();
    let d: Vec<DMatrix<f64>> = (0..m)
        .map(|j| &sol.couplings[j] + DMatrix::identity(k, k) * sol.phi_p[j])
        .collect();
    let left: Vec<DVector<f64>> = d.iter().map(|dj| &r * dj * c).collect();
    let mut t = vec![0.0; m * m * m];
    for j in 0..m {
        for kk in 0..m {
            for l in 0..m {
                t[(j * m + kk) * m + l] = left[j].dot(&(&d[kk] * &left[l]));
            }
        }
    }
    let fields: Vec<DMatrix<f64>> = (0..m)
        .map(|j| a.model.fock.field_mode(j).to_dense())
        .collect();
    let dim = a.model.dim_fock();
    let mut op = DMatrix::zeros(dim, dim);
    for j in 0..m {
        for kk in 0..m {
            let ajk = &fields[j] * &fields[kk];
            for l in 0..m {
                let w = t[(j * m + kk) * m + l];
                if w != 0.0 {
                    op += &ajk * &fields[l] * w;
                }
            }
        }
    }
    let block = gammas.transpose() * op * gammas;
    Ok((&block + block.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplittingFit {
    /// Limit of `alpha * (E_hi - E_lo)` on the `alpha^2`-scaled eigenvalues.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Largest absolute fit residual.
    pub max_residual: f64,
    pub points: usize,
}

/// Least-squares fit of `alpha * (eps_hi - eps_lo) = c0 + c1 / alpha + c2 / alpha^2` over the
/// sweep, where `eps = alpha^2 E`; `c0` estimates `E_1(s=2) - E_1(s=1)`.
pub fn splitting_fit(
    sweep: &SpectralSweep,
    lo: usize,
    hi: usize,
    window: (f64, f64),
) -> Option<SplittingFit> {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (a, &alpha) in sweep.alphas.iter().enumerate() {
        if alpha < window.0 || alpha > window.1 {
            continue;
        }
        let split = (sweep.e0[hi] + sweep.shifts[hi][a]) - (sweep.e0[lo] + sweep.shifts[lo][a]);
        let x = 1.0 / alpha;
        rows.extend([1.0, x, x * x]);
        y.push(alpha * split);
    }
    let n = y.len();
    if n < 4 {
        return None;
    }
    let a = DMatrix::from_row_slice(n, 3, &rows);
    let y = DVector::from_vec(y);
    let coef = a.clone().svd(true, true).solve(&y, 1e-14).ok()?;
    let max_residual = (&a * &coef - &y).amax();
    Some(SplittingFit {
        c0: coef[0],
        c1: coef[1],
        c2: coef[2],
        max_residual,
        points: n,
    })
}
