//! The truncated electron-phonon model in the eigenbasis of `H_0`.
//!
//! Electron index 0 is the Pekar state `psi^P`, so `P` is the projection on row 0 and the
//! reduced resolvent is diagonal. States on electron x Fock are `K x D` matrices: row `e`
//! holds the Fock vector attached to the electron eigenvector `e`.

use crate::fock::FockSpace;
use crate::pekar::PekarSolution;
use crate::sparse::SparseMatrix;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct ElectronModel {
    /// Eigenvalues of `H_0`; `g[0] = 0`.
    pub g: DVector<f64>,
    /// `C_j = U^T B_j U + phi^P_j` with `(C_j)_{00} = 0`.
    pub couplings: Vec<DMatrix<f64>>,
    /// Diagonal of `R` (zero on the kernel).
    pub r: DVector<f64>,
    /// Eigenvectors of `H_0` in the Dirichlet basis, column 0 is `c`.
    pub u: DMatrix<f64>,
}

impl ElectronModel {
    pub fn from_solution(sol: &PekarSolution) -> Self {
        let u = sol.h0_eigenvectors.clone();
        let k = sol.k();
        let couplings = sol
            .couplings
            .iter()
            .zip(sol.phi_p.iter())
            .map(|(b, &p)| {
                let mut c = u.transpose() * b * &u;
                c = (&c + c.transpose()) * 0.5;
                for i in 0..k {
                    c[(i, i)] += p;
                }
                c[(0, 0)] = 0.0;
                c
            })
            .collect();
        let g = sol.h0_eigenvalues.clone();
        let r = DVector::from_fn(k, |i, _| if i == 0 { 0.0 } else { -1.0 / g[i] });
        Self { g, couplings, r, u }
    }

    pub fn k(&self) -> usize {
        self.g.len()
    }

    pub fn m(&self) -> usize {
        self.couplings.len()
    }

    /// `G_jk = <psi^P, C_j R C_k psi^P>`.
    pub fn hessian_g(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut g = DMatrix::zeros(m, m);
        for j in 0..m {
            for l in j..m {
                let v: f64 = (1..self.k())
                    .map(|e| self.couplings[j][(0, e)] * self.r[e] * self.couplings[l][(0, e)])
                    .sum();
                g[(j, l)] = v;
                g[(l, j)] = v;
            }
        }
        g
    }

    /// Maps an operator given in the Dirichlet basis into this eigenbasis.
    pub fn to_eigenbasis(&self, op: &DMatrix<f64>) -> DMatrix<f64> {
        self.u.transpose() * op * &self.u
    }
}

/// Electron model together with the Fock-space field operators.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub electron: ElectronModel,
    pub fock: FockSpace,
    /// `A_j = a_j + a_j^dagger`.
    pub fields: Vec<SparseMatrix>,
    pub number: DVector<f64>,
}

impl CoupledModel {
    pub fn new(sol: &PekarSolution, fock: FockSpace) -> Self {
        Self::from_electron(ElectronModel::from_solution(sol), fock)
    }

    pub fn from_electron(electron: ElectronModel, fock: FockSpace) -> Self {
        assert_eq!(electron.m(), fock.m, "phonon mode counts differ");
        let fields = (0..fock.m).map(|j| fock.field_mode(j)).collect();
        let number = DVector::from_vec(fock.number_diagonal());
        Self {
            electron,
            fock,
            fields,
            number,
        }
    }

    pub fn k(&self) -> usize {
        self.electron.k()
    }

    pub fn dim_fock(&self) -> usize {
        self.fock.dim()
    }

    /// `psi^P (x) xi`.
    pub fn lift(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.k(), xi.len());
        x.row_mut(0).copy_from(&xi.transpose());
        x
    }

    /// Row 0, i.e. `P` followed by the identification `Ran P (x) F = F`.
    pub fn project(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x.row(0).transpose()
    }

    /// `V_1 X = sum_j (C_j (x) A_j) X`.
    pub fn apply_v1(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (c, a) in self.electron.couplings.iter().zip(&self.fields) {
            let xa = a.right_apply_transposed(x);
            out.gemm(1.0, c, &xa, 1.0);
        }
        out
    }

    /// `(1 (x) N) X`.
    pub fn apply_number(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (mut col, n) in out.column_iter_mut().zip(self.number.iter()) {
            col *= *n;
        }
        out
    }

    /// `(H_0 (x) 1) X`.
    pub fn apply_h0(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (mut row, g) in out.row_iter_mut().zip(self.electron.g.iter()) {
            row *= *g;
        }
        out
    }

    /// `(R (x) 1) X`.
    pub fn apply_r(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (mut row, r) in out.row_iter_mut().zip(self.electron.r.iter()) {
            row *= *r;
        }
        out
    }

    /// Fluctuation Hamiltonian `H_0 + V_1 / alpha + N / alpha^2` applied to `X`.
    pub fn apply_fluctuation(&self, x: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
        self.apply_h0(x) + self.apply_v1(x) / alpha + self.apply_number(x) / (alpha * alpha)
    }

    /// Dense fluctuation Hamiltonian on the product space, index `e * D + f`.
    pub fn dense_fluctuation(&self, alpha: f64) -> DMatrix<f64> {
        let (k, d) = (self.k(), self.dim_fock());
        let mut h = DMatrix::zeros(k * d, k * d);
        for e in 0..k {
            for f in 0..d {
                h[(e * d + f, e * d + f)] = self.electron.g[e] + self.number[f] / (alpha * alpha);
            }
        }
        for (c, a) in self.electron.couplings.iter().zip(&self.fields) {
            for (f1, f2, av) in a.triplets() {
                for e1 in 0..k {
                    for e2 in 0..k {
                        let cv = c[(e1, e2)];
                        if cv != 0.0 {
                            h[(e1 * d + f1, e2 * d + f2)] += cv * av / alpha;
                        }
                    }
                }
            }
        }
        h
    }
}
