//! Hessian `h = 1 + 4G` of the Pekar functional in phonon-mode coordinates, the Bogoliubov
//! kernel and the ladder spectrum of the quadratic fluctuation Hamiltonian.

use crate::error::{numerical, Result};
use crate::pekar::{symmetric_eigen_sorted, PekarSolution};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

/// Relative tolerance for clustering equal `tau_k` and equal ladder energies.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct HessianModel {
    /// `G_jk = c^T B_j R B_k c`.
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// Ascending eigenvalues of `h`.
    pub tau: DVector<f64>,
    /// Columns are the eigenvectors `u_k`.
    pub modes: DMatrix<f64>,
    /// `B = (h^{-1/4} - h^{1/4}) / 2`.
    pub b_kernel: DMatrix<f64>,
    /// `(1 + B^2)^{1/2} = (h^{-1/4} + h^{1/4}) / 2`.
    pub b_cosh: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderLevel {
    pub index: usize,
    pub energy: f64,
    /// Occupations of the eigenmodes of `h`, ascending `tau`.
    pub occupation: Vec<usize>,
    pub degeneracy: usize,
}

/// `G` from an explicit coupling family and electron data.
pub fn hessian_g(sol: &PekarSolution) -> DMatrix<f64> {
    let m = sol.m();
    let r = sol.reduced_resolvent();
    let bc: Vec<DVector<f64>> = sol.couplings.iter().map(|b| b * &sol.c).collect();
    let rbc: Vec<DVector<f64>> = bc.iter().map(|v| &r * v).collect();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = 0.5 * (bc[j].dot(&rbc[k]) + bc[k].dot(&rbc[j]));
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    g
}

pub fn hessian_matrix(sol: &PekarSolution) -> Result<HessianModel> {
    HessianModel::from_g(hessian_g(sol))
}

fn spectral(modes: &DMatrix<f64>, vals: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let d = DVector::from_iterator(modes.ncols(), vals);
    modes * DMatrix::from_diagonal(&d) * modes.transpose()
}

impl HessianModel {
    pub fn from_g(g: DMatrix<f64>) -> Result<Self> {
        let m = g.nrows();
        let h = DMatrix::identity(m, m) + &g * 4.0;
        let (tau, modes) = symmetric_eigen_sorted(&h);
        if tau[0] <= 0.0 {
            return numerical(format!("Hessian not coercive: tau_1 = {:.3e}", tau[0]));
        }
        if tau[m - 1] > 1.0 + 1e-10 {
            return numerical(format!("Hessian eigenvalue above one: {:.3e}", tau[m - 1]));
        }
        let b_kernel = spectral(
            &modes,
            tau.iter().map(|t| 0.5 * (t.powf(-0.25) - t.powf(0.25))),
        );
        let b_cosh = spectral(
            &modes,
            tau.iter().map(|t| 0.5 * (t.powf(-0.25) + t.powf(0.25))),
        );
        Ok(Self {
            g,
            h,
            tau,
            modes,
            b_kernel,
            b_cosh,
        })
    }

    pub fn m(&self) -> usize {
        self.g.nrows()
    }

    /// `E^(1) = (1/2) sum_k (tau_k^{1/2} - 1)`.
    pub fn ground_energy(&self) -> f64 {
        0.5 * self.tau.iter().map(|t| t.sqrt() - 1.0).sum::<f64>()
    }

    /// Squeeze parameters `r_k = -ln(tau_k) / 4` of the eigenmodes.
    pub fn squeeze(&self) -> DVector<f64> {
        self.tau.map(|t| -0.25 * t.ln())
    }

    /// `||B||_HS^2 = sum_k sinh^2 r_k`.
    pub fn b_hs_squared(&self) -> f64 {
        self.tau
            .iter()
            .map(|t| (0.5 * (t.powf(-0.25) - t.powf(0.25))).powi(2))
            .sum()
    }

    /// Smallest `C` with `B^2 <= C (1 - h)`; zero when `h = 1`.
    pub fn b_squared_bound(&self) -> f64 {
        self.tau
            .iter()
            .filter(|&&t| t < 1.0)
            .map(|t| (0.5 * (t.powf(-0.25) - t.powf(0.25))).powi(2) / (1.0 - t))
            .fold(0.0, f64::max)
    }

    /// The `count` lowest levels `E^(1) + sum_k nu_k tau_k^{1/2}` by best-first search.
    pub fn ladder_spectrum(&self, count: usize) -> Vec<LadderLevel> {
        let m = self.m();
        let freq: Vec<f64> = self.tau.iter().map(|t| t.sqrt()).collect();
        let e1 = self.ground_energy();
        let mut heap = BinaryHeap::new();
        let mut seen = HashSet::new();
        let zero = vec![0usize; m];
        seen.insert(zero.clone());
        heap.push(Node {
            energy: 0.0,
            occ: zero,
        });
        let mut out: Vec<LadderLevel> = Vec::new();
        // pull extra states so degeneracies at the cut are counted completely
        while let Some(Node { energy, occ }) = heap.pop() {
            if out.len() >= count {
                let last = out[out.len() - 1].energy - e1;
                if (energy - last).abs() > DEGENERACY_TOL * last.abs().max(1.0) {
                    break;
                }
            }
            for k in 0..m {
                let mut next = occ.clone();
                next[k] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Node {
                        energy: energy + freq[k],
                        occ: next,
                    });
                }
            }
            out.push(LadderLevel {
                index: out.len() + 1,
                energy: e1 + energy,
                occupation: occ,
                degeneracy: 1,
            });
        }
        let n = out.len();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n
                && (out[j].energy - out[i].energy).abs()
                    <= DEGENERACY_TOL * out[i].energy.abs().max(1.0)
            {
                j += 1;
            }
            for l in &mut out[i..j] {
                l.degeneracy = j - i;
            }
            i = j;
        }
        out.truncate(count.max(1));
        out
    }
}

#[derive(Debug, PartialEq)]
struct Node {
    energy: f64,
    occ: Vec<usize>,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .energy
            .total_cmp(&self.energy)
            .then_with(|| other.occ.cmp(&self.occ))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reduced field functional `phi -> inf spec(diag(lambda) + 2 sum_j phi_j B_j) + |phi|^2`,
/// whose Hessian at `phi^P` equals `2 h`.
pub fn reduced_field_energy(sol: &PekarSolution, phi: &DVector<f64>) -> f64 {
    let mut h = DMatrix::from_diagonal(&sol.lambda);
    for (b, f) in sol.couplings.iter().zip(phi.iter()) {
        h += b * (2.0 * f);
    }
    symmetric_eigen_sorted(&h).0[0] + phi.norm_squared()
}
