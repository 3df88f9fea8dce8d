//! Gross transformation at ultraviolet cutoff `Lambda`.
//!
//! With `X = sum_j G_j (x) (a_j^+ - a_j)`, `G_j = -lambda_j^{-3/2} w_j` for the modes outside
//! `Pi_Lambda`, the transformed operators are
//! `K_1 = V_1 + [H_0, X]`, `K_2 = N + [V_1, X] + [[H_0, X], X] / 2 - E_0`,
//! `K_3 = phi(g) - E_1`, `K_4 = |g|^2 - E_2`, `K_l = -E_{l-2}` for `l >= 5`.
//! `[H_0, G_j] (x) (a^+ - a)` is the momentum pair `2 a^*(p g) p + 2 p a(p g)` plus
//! `phi(p^2 g)`, and `[V_1, X]`, `[[H_0, X], X]` are `2 Re <v + phi^P, g>` and `phi(p g)^2`.
//! All products are taken between truncated matrices, so `PK_1P = 0` and the Bogoliubov
//! identity hold exactly in the model for every `Lambda`.

use crate::basis::Basis;
use crate::error::{config, Result};
use crate::fock::FockSpectrum;
use crate::model::CoupledModel;
use crate::pekar::symmetric_eigen_sorted;
use crate::series::{Perturbation, SeriesContext};
use crate::sparse::SparseMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Sum of products `E (x) F` plus a multiple of the identity.
#[derive(Debug, Clone)]
pub struct ProductOperator {
    pub terms: Vec<(DMatrix<f64>, SparseMatrix)>,
    pub shift: f64,
}

impl ProductOperator {
    pub fn new() -> Self {
        Self {
            terms: Vec::new(),
            shift: 0.0,
        }
    }

    pub fn push(&mut self, e: DMatrix<f64>, f: SparseMatrix) {
        if e.amax() != 0.0 && f.nnz() != 0 {
            self.terms.push((e, f));
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x * self.shift;
        for (e, f) in &self.terms {
            let xf = f.right_apply_transposed(x);
            out.gemm(1.0, e, &xf, 1.0);
        }
        out
    }

    /// Fock-sector block `P O P`.
    pub fn p_block(&self, dim: usize) -> SparseMatrix {
        let mut out = SparseMatrix::identity(dim).scale(self.shift);
        for (e, f) in &self.terms {
            if e[(0, 0)] != 0.0 {
                out = out.add(&f.scale(e[(0, 0)]));
            }
        }
        out
    }

    /// Largest `|<x, O y> - <O x, y>|` over random unit pairs.
    pub fn symmetry_defect(&self, k: usize, dim: usize, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = DMatrix::from_fn(k, dim, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let y = DMatrix::from_fn(k, dim, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            worst = worst.max((x.dot(&self.apply(&y)) - self.apply(&x).dot(&y)).abs());
        }
        worst
    }
}

impl Default for ProductOperator {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone)]
pub struct GrossContext {
    /// `Lambda`; `f64::INFINITY` keeps every mode.
    pub cutoff: f64,
    /// Modes outside `Pi_Lambda`.
    pub removed: Vec<bool>,
    /// `G_j` in the `H_0` eigenbasis (zero for kept modes).
    pub g: Vec<DMatrix<f64>>,
    /// `K_1 .. K_4` without their coefficient shifts.
    pub k_ops: Vec<ProductOperator>,
    h0: DVector<f64>,
    r: DVector<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    /// `max |PK_1P|`.
    pub pk1p: f64,
    /// `max |PK_1P + P(K_2 + K_1 R K_1)P - (HH_0 - E_0)|`.
    pub deviation: f64,
}

impl GrossContext {
    pub fn new(basis: &Basis, model: &CoupledModel, cutoff: f64) -> Result<Self> {
        if cutoff.is_nan() || cutoff < 0.0 {
            return config("cutoff must be non-negative");
        }
        let el = &model.electron;
        let (k, m) = (el.k(), el.m());
        let kept = basis.uv_projection(cutoff);
        let removed: Vec<bool> = kept.iter().map(|&p| !p).collect();
        let lam = basis.laplacian_power(1.0, m);
        let g: Vec<DMatrix<f64>> = (0..m)
            .map(|j| {
                if removed[j] {
                    let t = el.to_eigenbasis(&basis.multiplication_matrix(j));
                    (&t + t.transpose()) * (-0.5 * lam[j].powf(-1.5))
                } else {
                    DMatrix::zeros(k, k)
                }
            })
            .collect();
        let hc: Vec<DMatrix<f64>> = g
            .iter()
            .map(|gj| DMatrix::from_fn(k, k, |a, b| (el.g[a] - el.g[b]) * gj[(a, b)]))
            .collect();
        let fock = &model.fock;
        let dim = fock.dim();
        let ladders: Vec<(SparseMatrix, SparseMatrix)> = (0..m).map(|j| fock.ladder(j)).collect();
        let s: Vec<SparseMatrix> = ladders.iter().map(|(a, ad)| ad.sub(a)).collect();
        let fields = &model.fields;

        let mut k1 = ProductOperator::new();
        for j in 0..m {
            k1.push(el.couplings[j].clone(), fields[j].clone());
            k1.push(hc[j].clone(), s[j].clone());
        }
        let mut k2 = ProductOperator::new();
        k2.push(DMatrix::identity(k, k), fock.number());
        for j in 0..m {
            for l in 0..m {
                if !removed[l] {
                    continue;
                }
                k2.push(&el.couplings[j] * &g[l], fields[j].matmul(&s[l]));
                k2.push(-(&g[l] * &el.couplings[j]), s[l].matmul(&fields[j]));
                if removed[j] {
                    k2.push(&hc[j] * &g[l] * 0.5, s[j].matmul(&s[l]));
                    k2.push(&g[l] * &hc[j] * -0.5, s[l].matmul(&s[j]));
                }
            }
        }
        let mut k3 = ProductOperator::new();
        let mut gsq = DMatrix::zeros(k, k);
        for j in 0..m {
            k3.push(g[j].clone(), fields[j].clone());
            gsq += &g[j] * &g[j];
        }
        let mut k4 = ProductOperator::new();
        k4.push(gsq, SparseMatrix::identity(dim));
        Ok(Self {
            cutoff,
            removed,
            g,
            k_ops: vec![k1, k2, k3, k4],
            h0: el.g.clone(),
            r: el.r.clone(),
        })
    }

    /// `K_l X` with the coefficient shifts `-E_{l-2}`.
    pub fn apply_k(&self, l: usize, x: &DMatrix<f64>, e: &[f64]) -> DMatrix<f64> {
        let shift = if l >= 2 {
            e.get(l - 2).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        let base = match self.k_ops.get(l - 1) {
            Some(op) => op.apply(x),
            None => DMatrix::zeros(x.nrows(), x.ncols()),
        };
        base - x * shift
    }

    pub fn apply_h0(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (mut row, g) in out.row_iter_mut().zip(self.h0.iter()) {
            row *= *g;
        }
        out
    }

    pub fn apply_r(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (mut row, r) in out.row_iter_mut().zip(self.r.iter()) {
            row *= *r;
        }
        out
    }

    /// `K X = sum_{l=1}^{b+2} alpha^{-l} K_l X`.
    pub fn apply_k_sum(&self, x: &DMatrix<f64>, alpha: f64, b: usize, e: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for l in 1..=b + 2 {
            out += self.apply_k(l, x, e) * alpha.powi(-(l as i32));
        }
        out
    }

    /// Gross-transformed Hamiltonian `H_0 + sum_{l<=4} alpha^{-l} K_l` without coefficient shifts.
    pub fn apply_transformed(&self, x: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
        let mut out = self.apply_h0(x);
        for (l, op) in self.k_ops.iter().enumerate() {
            out += op.apply(x) * alpha.powi(-(l as i32 + 1));
        }
        out
    }

    /// Checks `PK_1P + P(K_2 + K_1 R K_1)P = P (x) (HH_0 - E_0)` on the Fock sector.
    pub fn verify_bogoliubov_identity(&self, model: &CoupledModel) -> IdentityReport {
        let dim = model.dim_fock();
        let k1 = &self.k_ops[0];
        let pk1p = k1.p_block(dim);
        let mut lhs = pk1p.add(&self.k_ops[1].p_block(dim));
        for (ea, fa) in &k1.terms {
            for (eb, fb) in &k1.terms {
                let c: f64 = (1..ea.nrows())
                    .map(|e| ea[(0, e)] * self.r[e] * eb[(e, 0)])
                    .sum();
                if c != 0.0 {
                    lhs = lhs.add(&fa.matmul(fb).scale(c));
                }
            }
        }
        // the E_0 shifts of both sides cancel
        let rhs = model
            .fock
            .bogoliubov_hamiltonian(&model.electron.hessian_g());
        IdentityReport {
            pk1p: pk1p.max_abs(),
            deviation: lhs.sub(&rhs).max_abs(),
        }
    }

    /// `max_j |(-Delta w_j) lambda_j^{-3/2} - lambda_j^{-1/2} w_j|` over removed modes, with the
    /// Laplacian assembled from derivatives: `p^2 g^Lambda = (Pi_Lambda - 1) v`.
    pub fn p2g_identity(&self, basis: &Basis) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for (j, &rm) in self.removed.iter().enumerate() {
            if !rm {
                continue;
            }
            let lam = basis.eigenvalues[j];
            let p2g = basis.laplacian_multiplication_matrix(j)? * -lam.powf(-1.5);
            let v = basis.multiplication_matrix(j) * -lam.powf(-0.5);
            worst = worst.max((p2g - v).amax());
        }
        Some(worst)
    }

    /// Relative distance between `K_1 - phi(v + phi^P + p^2 g)` and the momentum pair
    /// `2 a^*(pg) p + 2 p a(pg)` built from derivative matrices, on random states.
    /// Interval only; the two agree up to basis truncation.
    pub fn momentum_form_deviation(
        &self,
        basis: &Basis,
        model: &CoupledModel,
        seed: u64,
    ) -> Option<f64> {
        let d = model.electron.to_eigenbasis(&basis.derivative_matrix()?);
        let m = model.electron.m();
        let mut commutator = ProductOperator::new();
        let mut explicit = ProductOperator::new();
        for j in 0..m {
            if !self.removed[j] {
                continue;
            }
            let lam = basis.eigenvalues[j];
            let (a, ad) = model.fock.ladder(j);
            let hc = DMatrix::from_fn(self.h0.len(), self.h0.len(), |p, q| {
                (self.h0[p] - self.h0[q]) * self.g[j][(p, q)]
            });
            commutator.push(hc, ad.sub(&a));
            let bj = model
                .electron
                .to_eigenbasis(&basis.multiplication_matrix(j))
                / lam.sqrt();
            commutator.push(bj, model.fields[j].clone());
            let gp = model
                .electron
                .to_eigenbasis(&basis.derivative_multiplication_matrix(j)?)
                * -lam.powf(-1.5);
            explicit.push(&gp * &d * -2.0, ad);
            explicit.push(&d * &gp * 2.0, a);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (k, dim) = (self.h0.len(), model.dim_fock());
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for _ in 0..4 {
            let x = DMatrix::from_fn(k, dim, |_, _| rng.gen_range(-1.0..1.0));
            let a = commutator.apply(&x);
            num = num.max((&a - explicit.apply(&x)).norm());
            den = den.max(a.norm());
        }
        Some(if den > 0.0 { num / den } else { 0.0 })
    }

    /// `|g^Lambda|` summed over modes (Hilbert-Schmidt norm of the `G_j`).
    pub fn g_norm(&self) -> f64 {
        self.g.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
    }
}

/// `K_l` operators at cutoff `Lambda`.
pub fn build_k(basis: &Basis, model: &CoupledModel, cutoff: f64) -> Result<GrossContext> {
    GrossContext::new(basis, model, cutoff)
}

impl GrossContext {
    /// True when `Pi_Lambda` keeps every mode, so that `K_l = V_l`.
    pub fn is_trivial(&self) -> bool {
        self.removed.iter().all(|r| !r)
    }
}

/// Coefficients `E_0 .. E_b` of level `n` (branch `s`) generated by the `K` family.
pub fn k_based_coefficients(
    gross: &GrossContext,
    model: &CoupledModel,
    spectrum: &FockSpectrum,
    n: usize,
    s: usize,
    b: usize,
    cluster_tol: f64,
) -> Result<Vec<f64>> {
    let ctx = SeriesContext::new(model, spectrum, n, cluster_tol)?.with_family(gross);
    Ok(ctx.coefficients_degenerate(s, b, cluster_tol)?.coefficients)
}

impl Perturbation for GrossContext {
    fn apply(&self, k: usize, x: &DMatrix<f64>, e: &[f64]) -> DMatrix<f64> {
        self.apply_k(k, x, e)
    }
}

#[derive(Debug, Clone)]
pub struct ApproximateState {
    pub psi: DMatrix<f64>,
    pub norm: f64,
    /// Fock vector `xi_b`.
    pub xi: DVector<f64>,
}

/// `U Gamma` for branch `s`: an eigenvector of `M(x) = sum_{k<=b} x^k M_k` at `x = 1/alpha`.
fn rotated_gamma(ctx: &SeriesContext, e: &[f64], b: usize, alpha: f64, s: usize) -> DVector<f64> {
    let d = ctx.d();
    if d == 1 || b == 0 {
        return ctx.gamma(s - 1);
    }
    let mut mx = DMatrix::zeros(d, d);
    for k in 1..=b {
        mx += ctx.matrix_mk(k, e) * alpha.powi(-(k as i32));
    }
    let (_, vecs) = symmetric_eigen_sorted(&mx);
    &ctx.group.gammas * vecs.column(s - 1)
}

/// `Psi_b = sum_{i=0}^{2b+3} (R K)^i psi^P (x) xi_b`,
/// `xi_b = sum_{j=0}^{b} (RR VV)^j U Gamma`, `VV = sum_{l=1}^{b} alpha^{-l} VV_l` built from `K`.
/// `e` should hold the K-based coefficients (equal to the V-based ones at `Lambda = inf`).
pub fn approximate_eigenstate(
    gross: &GrossContext,
    ctx: &SeriesContext,
    e: &[f64],
    b: usize,
    alpha: f64,
    s: usize,
) -> Result<ApproximateState> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return config("alpha must be positive and finite");
    }
    if e.len() <= b {
        return config(format!("need coefficients E_0 .. E_{b}"));
    }
    // the nested operators VV_l are those of the K family
    let ctx = ctx.clone().with_family(gross);
    let ctx = &ctx;
    let start = rotated_gamma(ctx, e, b, alpha, s);
    let vv = |x: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        for l in 1..=b {
            out += ctx.nested_apply(x, l, e) * alpha.powi(-(l as i32));
        }
        out
    };
    let mut xi = start.clone();
    let mut term = start;
    for _ in 1..=b {
        term = ctx.resolvent.apply(&vv(&term));
        xi += &term;
    }
    let lifted = ctx.model.lift(&xi);
    let mut psi = lifted.clone();
    let mut chain = lifted;
    for _ in 1..=2 * b + 3 {
        chain = gross.apply_r(&gross.apply_k_sum(&chain, alpha, b, e));
        psi += &chain;
    }
    let norm = psi.norm();
    Ok(ApproximateState { psi, norm, xi })
}

/// `|| (H_0 + K) Psi_b ||` with `K = sum_{l=1}^{b+2} alpha^{-l} K_l`.
pub fn residual_norm(
    gross: &GrossContext,
    psi: &DMatrix<f64>,
    alpha: f64,
    b: usize,
    e: &[f64],
) -> f64 {
    (gross.apply_h0(psi) + gross.apply_k_sum(psi, alpha, b, e)).norm()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualRow {
    pub alpha: f64,
    pub b: usize,
    pub cutoff: f64,
    pub residual: f64,
    pub norm: f64,
}

/// Residuals of `Psi_b` over an `alpha` grid.
pub fn residual_sweep(
    gross: &GrossContext,
    ctx: &SeriesContext,
    e: &[f64],
    b: usize,
    s: usize,
    alphas: &[f64],
) -> Result<Vec<ResidualRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            let st = approximate_eigenstate(gross, ctx, e, b, alpha, s)?;
            Ok(ResidualRow {
                alpha,
                b,
                cutoff: gross.cutoff,
                residual: residual_norm(gross, &st.psi, alpha, b, e),
                norm: st.norm,
            })
        })
        .collect()
}
