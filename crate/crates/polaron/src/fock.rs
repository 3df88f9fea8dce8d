//! Truncated bosonic Fock space over `M` modes with a cap on the total occupation.

use crate::error::{config, numerical, Result};
use crate::pekar::symmetric_eigen_sorted;
use crate::quadratic::HessianModel;
use crate::sparse::SparseMatrix;
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Largest Fock dimension accepted by [`build_fock`].
pub const DIM_BUDGET: usize = 250_000;

#[derive(Debug, Clone)]
pub struct FockSpace {
    pub m: usize,
    pub n_max: usize,
    /// Occupation vectors in lexicographic order.
    pub states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

/// `n choose k`, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

pub fn build_fock(m: usize, n_max: usize) -> Result<FockSpace> {
    if m < 1 || n_max < 1 {
        return config("Fock space needs M >= 1 and N_max >= 1");
    }
    let dim = binomial(m + n_max, m);
    if dim > DIM_BUDGET {
        return config(format!("Fock dimension {dim} exceeds budget {DIM_BUDGET}"));
    }
    let mut states = Vec::with_capacity(dim);
    let mut cur = vec![0u16; m];
    fn rec(j: usize, left: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if j == cur.len() {
            out.push(cur.clone());
            return;
        }
        for n in 0..=left {
            cur[j] = n as u16;
            rec(j + 1, left - n, cur, out);
        }
        cur[j] = 0;
    }
    rec(0, n_max, &mut cur, &mut states);
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(FockSpace {
        m,
        n_max,
        states,
        index,
    })
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    pub fn vacuum(&self) -> usize {
        0
    }

    /// States with total occupation at most `N_max - margin`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        let cap = self.n_max.saturating_sub(margin);
        (0..self.dim()).filter(|&i| self.total(i) <= cap).collect()
    }

    /// Annihilator `a_j`; the creator is its transpose.
    pub fn annihilator(&self, j: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if s[j] > 0 {
                let mut lower = s.clone();
                lower[j] -= 1;
                let r = self.index[&lower];
                t.push((r, i, (s[j] as f64).sqrt()));
            }
        }
        SparseMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    pub fn ladder(&self, j: usize) -> (SparseMatrix, SparseMatrix) {
        let a = self.annihilator(j);
        let ad = a.transpose();
        (a, ad)
    }

    /// `A_j = a_j + a_j^dagger`.
    pub fn field_mode(&self, j: usize) -> SparseMatrix {
        let (a, ad) = self.ladder(j);
        a.add(&ad)
    }

    pub fn number_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.total(i) as f64).collect()
    }

    pub fn number(&self) -> SparseMatrix {
        SparseMatrix::diagonal(&self.number_diagonal())
    }

    /// `phi(f) = sum_j f_j (a_j + a_j^dagger)`.
    pub fn field_operator(&self, f: &DVector<f64>) -> SparseMatrix {
        let mut t = Vec::new();
        for j in 0..self.m {
            if f[j] != 0.0 {
                t.extend(self.field_mode(j).scale(f[j]).triplets());
            }
        }
        SparseMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    /// `N + sum_jk G_jk A_j A_k` with products of the truncated matrices.
    pub fn bogoliubov_hamiltonian(&self, g: &DMatrix<f64>) -> SparseMatrix {
        let fields: Vec<SparseMatrix> = (0..self.m).map(|j| self.field_mode(j)).collect();
        let mut t: Vec<(usize, usize, f64)> = self.number().triplets().collect();
        for j in 0..self.m {
            for k in 0..self.m {
                if g[(j, k)] != 0.0 {
                    t.extend(fields[j].matmul(&fields[k]).scale(g[(j, k)]).triplets());
                }
            }
        }
        let h = SparseMatrix::from_triplets(self.dim(), self.dim(), t);
        // symmetrize against rounding in the product sum
        h.add(&h.transpose()).scale(0.5)
    }
}

/// Dense spectral data of the Fock-space `H_0`.
#[derive(Debug, Clone)]
pub struct FockSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl FockSpectrum {
    pub fn new(h: &SparseMatrix) -> Self {
        let (values, vectors) = symmetric_eigen_sorted(&h.to_dense());
        Self { values, vectors }
    }

    /// Cluster containing the `n`-th eigenvalue (1-based, multiplicity counted).
    pub fn eigenpair_group(&self, n: usize, cluster_tol: f64) -> Result<LevelGroup> {
        let d = self.values.len();
        if n == 0 || n > d {
            return config(format!("level {n} outside 1..={d}"));
        }
        let e = self.values[n - 1];
        let tol = cluster_tol * e.abs().max(1.0);
        let mut lo = n - 1;
        while lo > 0 && (self.values[lo - 1] - e).abs() <= tol {
            lo -= 1;
        }
        let mut hi = n;
        while hi < d && (self.values[hi] - e).abs() <= tol {
            hi += 1;
        }
        let below = if lo > 0 {
            e - self.values[lo - 1]
        } else {
            f64::INFINITY
        };
        let above = if hi < d {
            self.values[hi] - e
        } else {
            f64::INFINITY
        };
        if below.min(above) < 1e3 * tol {
            return numerical(format!(
                "cluster boundary ambiguous at level {n}: neighbour gap {:.3e}",
                below.min(above)
            ));
        }
        let members: Vec<usize> = (lo..hi).collect();
        let energy = members.iter().map(|&i| self.values[i]).sum::<f64>() / members.len() as f64;
        let gammas = DMatrix::from_fn(d, members.len(), |r, c| self.vectors[(r, members[c])]);
        Ok(LevelGroup {
            first: lo + 1,
            energy,
            members,
            gammas,
        })
    }

    /// Reduced resolvent `-Q (Q (H_0 - E) Q)^{-1} Q` off the cluster.
    pub fn reduced_resolvent(&self, group: &LevelGroup) -> FockResolvent {
        let mut denom = DVector::zeros(self.values.len());
        for i in 0..self.values.len() {
            if !group.members.contains(&i) {
                denom[i] = -1.0 / (self.values[i] - group.energy);
            }
        }
        FockResolvent {
            vectors: self.vectors.clone(),
            denom,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelGroup {
    /// 1-based index of the lowest member.
    pub first: usize,
    pub energy: f64,
    pub members: Vec<usize>,
    /// Orthonormal eigenvectors, one column per member.
    pub gammas: DMatrix<f64>,
}

impl LevelGroup {
    pub fn degeneracy(&self) -> usize {
        self.members.len()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.gammas * self.gammas.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct FockResolvent {
    vectors: DMatrix<f64>,
    denom: DVector<f64>,
}

impl FockResolvent {
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut c = self.vectors.tr_mul(u);
        c.component_mul_assign(&self.denom);
        &self.vectors * c
    }

    pub fn apply_block(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut c = self.vectors.tr_mul(u);
        for mut col in c.column_iter_mut() {
            col.component_mul_assign(&self.denom);
        }
        &self.vectors * c
    }
}

/// Dense `exp(A)` by scaling and squaring with a Taylor kernel.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let x = a / 2f64.powi(s);
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &x / k as f64;
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Tail weight below which the padded space is taken to contain `U^* e_r` exactly.
pub const PADDING_TAIL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BogoliubovUnitary {
    /// Fock space with the enlarged occupancy cap on which the generator is exponentiated.
    pub padded: FockSpace,
    /// `embedding[i]` is the padded index of state `i` of the truncated space.
    pub embedding: Vec<usize>,
    /// Columns `U^* e_r` on the padded space, one per state `r` of the truncated space.
    pub adjoint_columns: DMatrix<f64>,
    /// `U` restricted to the truncated space.
    pub matrix: DMatrix<f64>,
    /// `max ||(1 - U U^*) e_r||` over states with occupancy at most `N_max - 2`.
    pub leakage: f64,
    /// Largest weight of a column of `adjoint_columns` on the two outermost padded shells.
    pub tail: f64,
}

impl BogoliubovUnitary {
    /// `U A U^*` on the truncated space for an operator `A` given on the padded space.
    pub fn conjugate(&self, op: &SparseMatrix) -> DMatrix<f64> {
        self.adjoint_columns.transpose() * op.mul_dense(&self.adjoint_columns)
    }

    /// `U v` for a vector on the padded space, restricted to the truncated space.
    pub fn apply_padded(&self, v: &DVector<f64>) -> DVector<f64> {
        self.adjoint_columns.tr_mul(v)
    }
}

fn generator(fock: &FockSpace, kappa: &DMatrix<f64>) -> SparseMatrix {
    let m = fock.m;
    let ladders: Vec<(SparseMatrix, SparseMatrix)> = (0..m).map(|j| fock.ladder(j)).collect();
    let mut t = Vec::new();
    for j in 0..m {
        for k in 0..m {
            let w = 0.5 * kappa[(j, k)];
            if w == 0.0 {
                continue;
            }
            let cc = ladders[j].1.matmul(&ladders[k].1);
            let aa = ladders[j].0.matmul(&ladders[k].0);
            t.extend(cc.sub(&aa).scale(w).triplets());
        }
    }
    SparseMatrix::from_triplets(fock.dim(), fock.dim(), t)
}

/// `exp(X) V` by substepping with a Taylor kernel.
fn expm_apply(x: &SparseMatrix, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut rows = vec![0.0; x.rows];
    for (r, _, w) in x.triplets() {
        rows[r] += w.abs();
    }
    let norm = rows.iter().fold(0.0f64, |a, b| a.max(*b));
    let steps = (norm / 0.5).ceil().max(1.0) as usize;
    let xs = x.scale(1.0 / steps as f64);
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut sum = out.clone();
        for k in 1..=40 {
            term = xs.mul_dense(&term) / k as f64;
            sum += &term;
            if term.amax() < 1e-18 * sum.amax() {
                break;
            }
        }
        out = sum;
    }
    out
}

/// `U = exp( (1/2) sum_jk kappa_jk (a_j^+ a_k^+ - a_j a_k) )` with
/// `kappa = sum_k (ln tau_k / 4) u_k u_k^T`: one-mode squeezers in the eigenbasis of `h`
/// rotated back to the mode basis, so that `U a^+(f) U^* = a^+((1 + B^2)^{1/2} f) + a(B f)`.
///
/// `U^* e_r` is computed on a space with a larger occupancy cap, grown until its tail weight
/// drops below [`PADDING_TAIL`] or the dimension budget is reached.
pub fn bogoliubov_unitary(fock: &FockSpace, hess: &HessianModel) -> BogoliubovUnitary {
    let r = hess.tau.map(|t| 0.25 * t.ln());
    let kappa = &hess.modes * DMatrix::from_diagonal(&r) * hess.modes.transpose();
    let mut pad = if r.amax() == 0.0 { 0 } else { 8 };
    loop {
        let padded = build_fock(fock.m, fock.n_max + pad).expect("padded cap within budget");
        let embedding: Vec<usize> = fock
            .states
            .iter()
            .map(|s| padded.index_of(s).expect("truncated state in padded space"))
            .collect();
        let mut start = DMatrix::zeros(padded.dim(), fock.dim());
        for (c, &i) in embedding.iter().enumerate() {
            start[(i, c)] = 1.0;
        }
        let adjoint_columns = if pad == 0 {
            start
        } else {
            expm_apply(&generator(&padded, &kappa).scale(-1.0), &start)
        };
        let outer: Vec<usize> = (0..padded.dim())
            .filter(|&i| pad > 0 && padded.total(i) + 2 > padded.n_max)
            .collect();
        let tail = adjoint_columns
            .column_iter()
            .map(|col| outer.iter().map(|&o| col[o].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let next = binomial(fock.m + fock.n_max + pad + 8, fock.m);
        if tail > PADDING_TAIL && next <= DIM_BUDGET / 10 {
            pad += 8;
            continue;
        }
        let matrix = DMatrix::from_fn(fock.dim(), fock.dim(), |row, col| {
            adjoint_columns[(embedding[col], row)]
        });
        let leakage = fock
            .interior(2)
            .iter()
            .map(|&row| {
                (1.0 - adjoint_columns
                    .column(row)
                    .select_rows(embedding.iter())
                    .norm_squared())
                .max(0.0)
                .sqrt()
            })
            .fold(0.0, f64::max);
        return BogoliubovUnitary {
            padded,
            embedding,
            adjoint_columns,
            matrix,
            leakage,
            tail,
        };
    }
}
