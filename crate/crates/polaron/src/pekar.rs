//! Pekar minimizer by a damped self-consistent field iteration, the Pekar Hamiltonian
//! `H_0` and its reduced resolvent `R`.

use crate::basis::Basis;
use crate::error::{config, numerical, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScfOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
            damping: 0.5,
        }
    }
}

/// Gap threshold below which the reduced resolvent is refused.
pub const GAP_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PekarSolution {
    /// Minimizer coefficients, unit norm, positivity gauge.
    pub c: DVector<f64>,
    pub e_pek: f64,
    /// `phi^P_j = -c^T B_j c`.
    pub phi_p: DVector<f64>,
    pub mu_pek: f64,
    /// `lambda_j` for the electron modes.
    pub lambda: DVector<f64>,
    pub couplings: Vec<DMatrix<f64>>,
    /// `H_0 = diag(lambda) - 2 sum_j (c^T B_j c) B_j - mu`, with `H_0 c = 0`.
    pub h0: DMatrix<f64>,
    /// Eigenvalues of `H_0`, ascending; the first is the kernel.
    pub h0_eigenvalues: DVector<f64>,
    pub h0_eigenvectors: DMatrix<f64>,
    pub gap: f64,
    /// Self-consistency residual `|| H(c) c - <c, H(c) c> c ||`.
    pub residual: f64,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
}

fn quartic(couplings: &[DMatrix<f64>], c: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(couplings.len(), couplings.iter().map(|b| c.dot(&(b * c))))
}

/// `c^T diag(lambda) c - sum_j (c^T B_j c)^2`.
pub fn pekar_energy_with(
    lambda: &DVector<f64>,
    couplings: &[DMatrix<f64>],
    c: &DVector<f64>,
) -> f64 {
    let kin: f64 = c.iter().zip(lambda.iter()).map(|(c, l)| l * c * c).sum();
    kin - quartic(couplings, c).norm_squared()
}

pub fn pekar_energy(basis: &Basis, c: &DVector<f64>) -> Result<f64> {
    if (c.norm() - 1.0).abs() > 1e-10 {
        return config("pekar_energy expects a normalized coefficient vector");
    }
    if c.len() != basis.n_electron() {
        return config("coefficient vector length differs from K");
    }
    let lambda = basis.laplacian_power(1.0, basis.n_electron());
    Ok(pekar_energy_with(&lambda, &basis.coupling_matrices(), c))
}

/// SCF Hamiltonian `diag(lambda) - 2 sum_j (c^T B_j c) B_j`.
pub fn scf_hamiltonian(
    lambda: &DVector<f64>,
    couplings: &[DMatrix<f64>],
    c: &DVector<f64>,
) -> DMatrix<f64> {
    let mut h = DMatrix::from_diagonal(lambda);
    for (b, q) in couplings.iter().zip(quartic(couplings, c).iter()) {
        h -= b * (2.0 * q);
    }
    h
}

fn sorted_eigen(h: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

/// Ascending eigen-decomposition of a symmetric matrix.
pub fn symmetric_eigen_sorted(h: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    sorted_eigen(h)
}

/// Flips `c` so the sampled wave function is positive where its magnitude peaks.
fn gauge(basis: &Basis, c: &mut DVector<f64>) {
    let vals = basis.evaluate(c);
    let peak = vals
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if peak < 0.0 {
        c.neg_mut();
    }
}

fn ground_vector(h: &DMatrix<f64>) -> Result<(f64, DVector<f64>, f64)> {
    let (vals, vecs) = sorted_eigen(h);
    let gap = vals[1] - vals[0];
    if gap <= GAP_THRESHOLD {
        return numerical(format!("SCF ground state degenerate (gap {gap:.3e})"));
    }
    Ok((vals[0], vecs.column(0).into_owned(), gap))
}

fn residual_of(lambda: &DVector<f64>, couplings: &[DMatrix<f64>], c: &DVector<f64>) -> f64 {
    let h = scf_hamiltonian(lambda, couplings, c);
    let hc = &h * c;
    (&hc - c * c.dot(&hc)).norm()
}

/// Damped SCF from a given start; returns the converged coefficients, iteration count and energies.
pub fn scf_from(
    lambda: &DVector<f64>,
    couplings: &[DMatrix<f64>],
    start: &DVector<f64>,
    opts: &ScfOptions,
) -> Result<(DVector<f64>, usize, Vec<f64>)> {
    let mut c = start.normalize();
    let mut e = pekar_energy_with(lambda, couplings, &c);
    let mut trace = vec![e];
    for it in 0..opts.max_iter {
        if residual_of(lambda, couplings, &c) <= opts.tol {
            return Ok((c, it, trace));
        }
        let (_, mut target, _) = ground_vector(&scf_hamiltonian(lambda, couplings, &c))?;
        if target.dot(&c) < 0.0 {
            target.neg_mut();
        }
        let mut t = opts.damping;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = (&c * (1.0 - t) + &target * t).normalize();
            let et = pekar_energy_with(lambda, couplings, &trial);
            if et <= e + 1e-15 * e.abs().max(1.0) {
                c = trial;
                e = et;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // energy is flat to rounding; take the damped step and let the residual decide
            c = (&c * (1.0 - opts.damping) + &target * opts.damping).normalize();
            e = pekar_energy_with(lambda, couplings, &c);
        }
        trace.push(e);
    }
    let r = residual_of(lambda, couplings, &c);
    if r <= opts.tol {
        Ok((c, opts.max_iter, trace))
    } else {
        numerical(format!(
            "SCF did not converge in {} iterations (residual {r:.3e})",
            opts.max_iter
        ))
    }
}

/// Assembles the model-of-record data at a converged coefficient vector.
///
/// `c` is replaced by the exact ground vector of `H(c)`, so that `H_0 c = 0` holds to rounding
/// and `phi^P` is computed from the same vector.
pub fn finalize(
    basis: &Basis,
    lambda: DVector<f64>,
    couplings: Vec<DMatrix<f64>>,
    c_prev: &DVector<f64>,
    iterations: usize,
    energy_trace: Vec<f64>,
) -> Result<PekarSolution> {
    let h = scf_hamiltonian(&lambda, &couplings, c_prev);
    let (mu, mut c, _) = ground_vector(&h)?;
    gauge(basis, &mut c);
    let h0 = h - DMatrix::identity(c.len(), c.len()) * mu;
    let (mut vals, mut vecs) = sorted_eigen(&h0);
    // pin the kernel vector to c itself
    if vecs.column(0).dot(&c) < 0.0 {
        vecs.column_mut(0).neg_mut();
    }
    vecs.set_column(0, &c);
    vals[0] = 0.0;
    let gap = vals[1];
    if gap <= GAP_THRESHOLD {
        return numerical(format!("H0 gap {gap:.3e} below threshold"));
    }
    let phi_p = -quartic(&couplings, &c);
    let e_pek = pekar_energy_with(&lambda, &couplings, &c);
    let residual = residual_of(&lambda, &couplings, &c);
    Ok(PekarSolution {
        mu_pek: e_pek - phi_p.norm_squared(),
        c,
        e_pek,
        phi_p,
        lambda,
        couplings,
        h0,
        h0_eigenvalues: vals,
        h0_eigenvectors: vecs,
        gap,
        residual,
        iterations,
        energy_trace,
    })
}

pub fn solve_pekar(basis: &Basis, opts: &ScfOptions) -> Result<PekarSolution> {
    solve_pekar_scaled(basis, opts, 1.0)
}

/// As [`solve_pekar`] with all couplings multiplied by `scale` (test harness for
/// switching the interaction off or rescaling it).
pub fn solve_pekar_scaled(basis: &Basis, opts: &ScfOptions, scale: f64) -> Result<PekarSolution> {
    let k = basis.n_electron();
    let lambda = basis.laplacian_power(1.0, k);
    let couplings: Vec<_> = basis
        .coupling_matrices()
        .into_iter()
        .map(|b| b * scale)
        .collect();
    let mut start = DVector::zeros(k);
    start[0] = 1.0;
    let (c, it, trace) = scf_from(&lambda, &couplings, &start, opts)?;
    finalize(basis, lambda, couplings, &c, it, trace)
}

impl PekarSolution {
    pub fn k(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.couplings.len()
    }

    /// `R u = -Q (Q H_0 Q)^{-1} Q u`.
    pub fn reduced_resolvent_apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let v = &self.h0_eigenvectors;
        let mut coef = v.tr_mul(u);
        coef[0] = 0.0;
        for i in 1..coef.len() {
            coef[i] /= -self.h0_eigenvalues[i];
        }
        v * coef
    }

    /// Dense `R`.
    pub fn reduced_resolvent(&self) -> DMatrix<f64> {
        let v = &self.h0_eigenvectors;
        let mut d = DVector::zeros(self.k());
        for i in 1..self.k() {
            d[i] = -1.0 / self.h0_eigenvalues[i];
        }
        v * DMatrix::from_diagonal(&d) * v.transpose()
    }

    /// `|| H_0 c ||`.
    pub fn kernel_residual(&self) -> f64 {
        (&self.h0 * &self.c).norm()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub restarts: usize,
    pub converged_restarts: usize,
    /// Largest `min(|c_r - c|, |c_r + c|)` over converged restarts.
    pub max_deviation: f64,
    pub unique: bool,
    /// Largest `tau` such that `E(psi) - e_pek >= tau |psi - psi^P|_{H^1}^2` on all samples.
    pub tau_hat: f64,
    /// Smallest eigenvalue of the constrained Pekar Hessian relative to the `H^1` metric.
    pub tau_local: f64,
    pub gap: f64,
}

/// Multi-start uniqueness, sampled coercivity and the `H_0` gap.
pub fn verify_assumptions(sol: &PekarSolution, n_restarts: usize, seed: u64) -> AssumptionReport {
    let k = sol.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = ScfOptions {
        tol: 1e-11,
        ..ScfOptions::default()
    };
    let mut max_dev: f64 = 0.0;
    let mut converged = 0;
    for _ in 0..n_restarts {
        let start = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        if let Ok((c, _, _)) = scf_from(&sol.lambda, &sol.couplings, &start, &opts) {
            converged += 1;
            let d = (&c - &sol.c).norm().min((&c + &sol.c).norm());
            max_dev = max_dev.max(d);
        }
    }
    let h1 = |v: &DVector<f64>| -> f64 {
        v.iter()
            .zip(sol.lambda.iter())
            .map(|(x, l)| (l + 1.0) * x * x)
            .sum()
    };
    let mut tau_hat = f64::INFINITY;
    for i in 0..400 {
        let scale = if i % 2 == 0 { 0.05 } else { 1.0 };
        let dir = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let mut psi = (&sol.c + dir * scale).normalize();
        if psi.dot(&sol.c) < 0.0 {
            psi.neg_mut();
        }
        let lhs = pekar_energy_with(&sol.lambda, &sol.couplings, &psi) - sol.e_pek;
        let rhs = h1(&(&psi - &sol.c));
        if rhs > 1e-14 {
            tau_hat = tau_hat.min(lhs / rhs);
        }
    }
    // constrained Hessian: H_0 - 4 sum_j (B_j c)(B_j c)^T on the tangent space
    let mut hess = sol.h0.clone();
    for b in &sol.couplings {
        let bc = b * &sol.c;
        hess -= &bc * bc.transpose() * 4.0;
    }
    let q = &sol.h0_eigenvectors.columns(1, k - 1);
    let hq = q.transpose() * &hess * q;
    let mq = q.transpose() * DMatrix::from_diagonal(&sol.lambda.add_scalar(1.0)) * q;
    let tau_local = generalized_min(&hq, &mq);
    AssumptionReport {
        restarts: n_restarts,
        converged_restarts: converged,
        max_deviation: max_dev,
        unique: converged == n_restarts && max_dev <= 1e-8,
        tau_hat,
        tau_local,
        gap: sol.gap,
    }
}

/// Smallest eigenvalue of `A x = t M x` for symmetric `A` and positive definite `M`.
fn generalized_min(a: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let (mv, mvec) = sorted_eigen(m);
    let inv_sqrt = &mvec * DMatrix::from_diagonal(&mv.map(|x| 1.0 / x.sqrt())) * mvec.transpose();
    let c = &inv_sqrt * a * &inv_sqrt;
    sorted_eigen(&c).0[0]
}
