//! Coefficients `E_l` of the strong-coupling expansion
//! `alpha^2 E(alpha) = alpha^2 e^Pek + sum_l alpha^{-l} E_l`.
//!
//! Nested operators are evaluated on vectors. For a Fock vector `xi` the electron-level chain
//! `T(0) = psi^P (x) xi`, `T(m) = sum_{k=1}^m R V_k T(m-k)` is memoized; every composition sum
//! of `PV(RV)...(RV)P` is a suffix of this table. The Fock-level chain
//! `TT(0) = Gamma`, `TT(m) = sum_{k=1}^m RR VV_k TT(m-k)` is memoized the same way.

use crate::branches::{eigenvalue_branches, Branch};
use crate::error::{config, numerical, Result};
use crate::fock::{FockResolvent, FockSpectrum, LevelGroup};
use crate::model::CoupledModel;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Guard on the expansion order.
pub const MAX_ORDER: usize = 10;

/// Compensated running sum of equally shaped matrices.
#[derive(Debug, Clone)]
pub struct KahanSum {
    sum: DMatrix<f64>,
    comp: DMatrix<f64>,
}

impl KahanSum {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            sum: DMatrix::zeros(rows, cols),
            comp: DMatrix::zeros(rows, cols),
        }
    }

    pub fn add(&mut self, x: &DMatrix<f64>) {
        for ((s, c), v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(x.iter()) {
            let y = v - *c;
            let t = *s + y;
            *c = (t - *s) - y;
            *s = t;
        }
    }

    pub fn value(self) -> DMatrix<f64> {
        self.sum
    }
}

fn kahan_vec(n: usize) -> KahanSum {
    KahanSum::new(n, 1)
}

/// Integer compositions of `n` with at least `min_parts` parts, ordered by (parts, lexicographic).
pub fn compositions(n: usize, min_parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for parts in min_parts.max(1)..=n {
        let mut cur = Vec::new();
        fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if parts == 0 {
                if left == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            for p in 1..=left.saturating_sub(parts - 1) {
                cur.push(p);
                rec(left - p, parts - 1, cur, out);
                cur.pop();
            }
        }
        rec(n, parts, &mut cur, &mut out);
    }
    out
}

/// Electron-level chain table for one Fock vector.
#[derive(Debug, Clone)]
struct Chain {
    t: Vec<DMatrix<f64>>,
}

/// Family of perturbations `W_k`, `k >= 1`, replacing `V_k` in every chain.
pub trait Perturbation {
    /// `W_k X`; may use `E_0 .. E_{k-2}`.
    fn apply(&self, k: usize, x: &DMatrix<f64>, e: &[f64]) -> DMatrix<f64>;
}

/// Level data: the cluster of the Fock-space `H_0` and its reduced resolvent.
#[derive(Clone)]
pub struct SeriesContext<'a> {
    pub model: &'a CoupledModel,
    pub group: LevelGroup,
    pub resolvent: FockResolvent,
    /// `None` selects `V_1 = phi(v + phi^P)`, `V_2 = N - E_0`, `V_k = -E_{k-2}`.
    pub family: Option<&'a dyn Perturbation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSeries {
    /// 1-based index of the lowest member of the level cluster.
    pub n: usize,
    /// 1-based branch index within the cluster.
    pub s: usize,
    pub d: usize,
    pub coefficients: Vec<f64>,
    /// Raw odd coefficients before they are recorded as zero (non-degenerate levels).
    pub raw: Vec<f64>,
    /// `M_1 .. M_b` used for this branch (row-major `d x d`).
    pub m_matrices: Vec<Vec<f64>>,
    /// Branch group within the cluster at the highest computed order.
    pub group: usize,
}

impl<'a> SeriesContext<'a> {
    pub fn new(
        model: &'a CoupledModel,
        spectrum: &FockSpectrum,
        n: usize,
        cluster_tol: f64,
    ) -> Result<Self> {
        let group = spectrum.eigenpair_group(n, cluster_tol)?;
        let resolvent = spectrum.reduced_resolvent(&group);
        Ok(Self {
            model,
            group,
            resolvent,
            family: None,
        })
    }

    pub fn with_family(mut self, family: &'a dyn Perturbation) -> Self {
        self.family = Some(family);
        self
    }

    pub fn with_gammas(mut self, gammas: DMatrix<f64>) -> Self {
        self.group.gammas = gammas;
        self
    }

    pub fn e0(&self) -> f64 {
        self.group.energy
    }

    pub fn d(&self) -> usize {
        self.group.gammas.ncols()
    }

    pub fn gamma(&self, t: usize) -> DVector<f64> {
        self.group.gammas.column(t).into_owned()
    }

    /// `V_k X` for `k >= 1`; needs `E_{k-2}`.
    pub fn apply_v(&self, k: usize, x: &DMatrix<f64>, e: &[f64]) -> DMatrix<f64> {
        if let Some(f) = self.family {
            return f.apply(k, x, e);
        }
        match k {
            1 => self.model.apply_v1(x),
            2 => self.model.apply_number(x) - x * coef(e, 0),
            _ => x * -coef(e, k - 2),
        }
    }

    fn extend(&self, chain: &mut Chain, upto: usize, e: &[f64]) {
        while chain.t.len() <= upto {
            let m = chain.t.len();
            let mut acc = KahanSum::new(chain.t[0].nrows(), chain.t[0].ncols());
            for k in 1..=m {
                let prev = &chain.t[m - k];
                if self.family.is_none() && k >= 3 && coef(e, k - 2) == 0.0 {
                    continue;
                }
                acc.add(&self.model.apply_r(&self.apply_v(k, prev, e)));
            }
            chain.t.push(acc.value());
        }
    }

    fn chain(&self, xi: &DVector<f64>) -> Chain {
        Chain {
            t: vec![self.model.lift(xi)],
        }
    }

    /// `VV_l xi` (or `VV~_l xi` when `tilde`) from a chain table.
    fn nested_from(&self, chain: &mut Chain, l: usize, e: &[f64], tilde: bool) -> DVector<f64> {
        let top = l + 2;
        self.extend(chain, top - 1, e);
        let n = chain.t[0].ncols();
        let mut acc = kahan_vec(n);
        for k in 1..=top {
            // the tilde variant drops the -E_l part of the single-factor term
            let v = if tilde && k == top {
                self.apply_v(k, &chain.t[0], &e[..l.min(e.len())])
            } else {
                self.apply_v(k, &chain.t[top - k], e)
            };
            acc.add(&self.model.project(&v).as_col());
        }
        acc.value().column(0).into_owned()
    }

    /// `VV_l xi`; needs `E_0 .. E_l`.
    pub fn nested_apply(&self, xi: &DVector<f64>, l: usize, e: &[f64]) -> DVector<f64> {
        self.nested_from(&mut self.chain(xi), l, e, false)
    }

    /// `VV~_l xi = VV_l xi + E_l xi`; needs `E_0 .. E_{l-2}`.
    pub fn nested_tilde_apply(&self, xi: &DVector<f64>, l: usize, e: &[f64]) -> DVector<f64> {
        self.nested_from(&mut self.chain(xi), l, e, true)
    }

    /// Dense Fock-sector matrices `(VV_l, VV~_l)`.
    pub fn nested_v(&self, l: usize, e: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if l > MAX_ORDER {
            return config(format!("order {l} above guard {MAX_ORDER}"));
        }
        let dim = self.model.dim_fock();
        let mut v = DMatrix::zeros(dim, dim);
        let mut vt = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut xi = DVector::zeros(dim);
            xi[i] = 1.0;
            let mut ch = self.chain(&xi);
            vt.set_column(i, &self.nested_from(&mut ch, l, e, true));
            v.set_column(i, &self.nested_from(&mut ch, l, e, false));
        }
        Ok((v, vt))
    }

    /// Bracket of order `l` applied to `gamma`:
    /// `VV~_l Gamma + sum_{k=1}^{l-1} VV_k TT(l-k)`. Needs `E_0 .. E_{l-1}`.
    pub fn bracket(&self, gamma: &DVector<f64>, l: usize, e: &[f64]) -> DVector<f64> {
        let n = gamma.len();
        // outer memo: TT(m) and its chain table
        let mut tt: Vec<DVector<f64>> = vec![gamma.clone()];
        let mut chains: Vec<Chain> = vec![self.chain(gamma)];
        for m in 1..l {
            let mut acc = kahan_vec(n);
            for k in 1..=m {
                let v = self.nested_from(&mut chains[m - k], k, e, false);
                acc.add(&self.resolvent.apply(&v).as_col());
            }
            let next = acc.value().column(0).into_owned();
            chains.push(self.chain(&next));
            tt.push(next);
        }
        let mut acc = kahan_vec(n);
        acc.add(&self.nested_from(&mut chains[0], l, e, true).as_col());
        for k in 1..l {
            acc.add(&self.nested_from(&mut chains[l - k], k, e, false).as_col());
        }
        acc.value().column(0).into_owned()
    }

    /// `(M_k)_{rt} = <Gamma_r, bracket_k Gamma_t>`, symmetrized.
    pub fn matrix_mk(&self, k: usize, e: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let cols: Vec<DVector<f64>> = (0..d).map(|t| self.bracket(&self.gamma(t), k, e)).collect();
        let m = DMatrix::from_fn(d, d, |r, t| self.group.gammas.column(r).dot(&cols[t]));
        (&m + m.transpose()) * 0.5
    }

    /// Non-degenerate recursion. Odd coefficients above tolerance abort the run.
    pub fn coefficients_nondegenerate(&self, b: usize, odd_tol: f64) -> Result<LevelSeries> {
        if self.d() != 1 {
            return config("level is degenerate; use the degenerate recursion");
        }
        if b > MAX_ORDER {
            return config(format!("order {b} above guard {MAX_ORDER}"));
        }
        let g = self.gamma(0);
        let mut e = vec![self.e0()];
        let mut raw = vec![self.e0()];
        let mut mats = Vec::new();
        for l in 1..=b {
            let v = g.dot(&self.bracket(&g, l, &e));
            raw.push(v);
            mats.push(vec![v]);
            if l % 2 == 1 {
                let bound = odd_tol * e[l - 1].abs().max(1.0);
                if v.abs() > bound {
                    return numerical(format!(
                        "E_{l} = {v:.3e} does not vanish (bound {bound:.1e})"
                    ));
                }
                e.push(0.0);
            } else {
                e.push(v);
            }
        }
        Ok(LevelSeries {
            n: self.group.first,
            s: 1,
            d: 1,
            coefficients: e,
            raw,
            m_matrices: mats,
            group: 0,
        })
    }

    /// Degenerate recursion for branch `s` (1-based): `E_l = mu^(s)_l` of `M_1 .. M_l`.
    pub fn coefficients_degenerate(
        &self,
        s: usize,
        b: usize,
        branch_tol: f64,
    ) -> Result<LevelSeries> {
        let d = self.d();
        if s == 0 || s > d {
            return config(format!("branch {s} outside 1..={d}"));
        }
        if b > MAX_ORDER {
            return config(format!("order {b} above guard {MAX_ORDER}"));
        }
        let mut e = vec![self.e0()];
        let mut ms: Vec<DMatrix<f64>> = Vec::new();
        let mut group = 0;
        for l in 1..=b {
            ms.push(self.matrix_mk(l, &e));
            let br: Vec<Branch> = eigenvalue_branches(&ms, branch_tol);
            e.push(br[s - 1].coeffs[l - 1]);
            group = br[s - 1].group;
        }
        Ok(LevelSeries {
            n: self.group.first,
            s,
            d,
            raw: e.clone(),
            coefficients: e,
            m_matrices: ms
                .iter()
                .map(|m| m.transpose().iter().copied().collect())
                .collect(),
            group,
        })
    }

    // ---- uncached reference path ------------------------------------------------------------

    /// `VV_l xi` by explicit enumeration of every composition, without memoization.
    pub fn nested_apply_uncached(
        &self,
        xi: &DVector<f64>,
        l: usize,
        e: &[f64],
        tilde: bool,
    ) -> DVector<f64> {
        let mut acc = kahan_vec(xi.len());
        for eps in compositions(l + 2, 1) {
            let ee = if tilde && eps.len() == 1 {
                &e[..l.min(e.len())]
            } else {
                e
            };
            let mut x = self.model.lift(xi);
            for (i, &k) in eps.iter().enumerate().rev() {
                x = self.apply_v(k, &x, ee);
                if i > 0 {
                    x = self.model.apply_r(&x);
                }
            }
            acc.add(&self.model.project(&x).as_col());
        }
        acc.value().column(0).into_owned()
    }

    /// Bracket by explicit enumeration of the outer compositions, without memoization.
    pub fn bracket_uncached(&self, gamma: &DVector<f64>, l: usize, e: &[f64]) -> DVector<f64> {
        let mut acc = kahan_vec(gamma.len());
        acc.add(&self.nested_apply_uncached(gamma, l, e, true).as_col());
        for eps in compositions(l, 2) {
            let mut x = gamma.clone();
            for (i, &k) in eps.iter().enumerate().rev() {
                x = self.nested_apply_uncached(&x, k, e, false);
                if i > 0 {
                    x = self.resolvent.apply(&x);
                }
            }
            acc.add(&x.as_col());
        }
        acc.value().column(0).into_owned()
    }
}

trait AsCol {
    fn as_col(&self) -> DMatrix<f64>;
}

impl AsCol for DVector<f64> {
    fn as_col(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.len(), 1, self.as_slice())
    }
}

fn coef(e: &[f64], i: usize) -> f64 {
    e.get(i).copied().unwrap_or(0.0)
}

/// Term-by-term evaluation of the explicit second- and fourth-order formulas.
pub mod explicit {
    use super::*;

    /// `phi = phi(v_x + phi^P)` is `V_1`. Returns
    /// `<phi R N R phi> + <phi R phi R phi R phi> + sign * E_0 <phi R^2 phi>
    ///  + <(phi R phi R phi) RR (phi R phi R phi)>` on `psi^P (x) Gamma`.
    pub fn e2_with_sign(ctx: &SeriesContext, sign: f64) -> f64 {
        let m = ctx.model;
        let g = ctx.gamma(0);
        let x0 = m.lift(&g);
        let rphi = m.apply_r(&m.apply_v1(&x0));
        let t1 = rphi.dot(&m.apply_number(&rphi));
        let t2 = rphi.dot(&m.apply_v1(&m.apply_r(&m.apply_v1(&rphi))));
        let t3 = rphi.norm_squared();
        let w = m.project(&m.apply_v1(&m.apply_r(&m.apply_v1(&rphi))));
        let t4 = w.dot(&ctx.resolvent.apply(&w));
        t1 + t2 + sign * ctx.e0() * t3 + t4
    }

    /// Second-order coefficient with the `-E_0 <phi R^2 phi>` term.
    pub fn explicit_e2(ctx: &SeriesContext) -> f64 {
        e2_with_sign(ctx, -1.0)
    }

    /// Fourth-order coefficient from `VV~_4 + VV~_2 RR VV~_2 + VV~_1 RR VV_2 RR VV~_1
    /// + VV~_1 RR VV_1 RR VV_1 RR VV~_1 + 2 Re(VV~_3 RR VV~_1 + VV~_1 RR VV_1 RR VV~_2)`,
    /// with every nested operator enumerated composition by composition.
    pub fn explicit_e4(ctx: &SeriesContext, e2: f64) -> f64 {
        let e = [ctx.e0(), 0.0, e2, 0.0];
        let g = ctx.gamma(0);
        let rr = |v: &DVector<f64>| ctx.resolvent.apply(v);
        let vt = |v: &DVector<f64>, l: usize| ctx.nested_apply_uncached(v, l, &e, true);
        let vv = |v: &DVector<f64>, l: usize| ctx.nested_apply_uncached(v, l, &e, false);
        let v1g = rr(&vt(&g, 1));
        let v2g = rr(&vt(&g, 2));
        let term_a = g.dot(&vt(&g, 4));
        let term_b = v2g.dot(&vt(&g, 2));
        let term_c = v1g.dot(&vv(&v1g, 2));
        let term_d = v1g.dot(&vv(&rr(&vv(&v1g, 1)), 1));
        let term_e = v1g.dot(&vt(&g, 3));
        let term_f = v1g.dot(&vv(&v2g, 1));
        term_a + term_b + term_c + term_d + 2.0 * (term_e + term_f)
    }
}
