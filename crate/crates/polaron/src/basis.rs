//! Dirichlet-Laplacian eigenbasis, quadrature and the coupling tensor.
//!
//! Modes are indexed from zero in code; mode `j` here is the physical mode `j + 1`.

use crate::error::{config, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Interval `(0, L)`.
    Interval,
    /// Ball of radius `R`, radially symmetric sector.
    BallRadial,
    /// Square `(0, L)^2`; separable, used for symmetric configurations.
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Length of the interval, radius of the ball, side of the square.
    pub extent: f64,
    /// Electron modes `K`.
    pub n_electron: usize,
    /// Phonon modes `M`.
    pub n_phonon: usize,
    /// Quadrature nodes along one axis.
    pub quadrature_points: usize,
}

impl DomainSpec {
    pub fn interval(extent: f64, n_electron: usize, n_phonon: usize) -> Self {
        Self {
            kind: DomainKind::Interval,
            extent,
            n_electron,
            n_phonon,
            quadrature_points: 0,
        }
    }

    pub fn with_kind(mut self, kind: DomainKind) -> Self {
        self.kind = kind;
        self
    }

    fn n_modes(&self) -> usize {
        self.n_electron.max(self.n_phonon)
    }

    /// Quadrature nodes actually used: at least `8 * max(K, M)` per axis.
    pub fn effective_points(&self) -> usize {
        let need = 8 * self.n_modes().max(1);
        let req = self.quadrature_points.max(need);
        req.div_ceil(PANEL) * PANEL
    }
}

const PANEL: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `n` nodes in panels of 16.
pub fn composite_rule(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = n.div_ceil(PANEL).max(1);
    let (gx, gw) = gauss_legendre(PANEL);
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * PANEL);
    let mut w = Vec::with_capacity(panels * PANEL);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(lo + 0.5 * h * (xi + 1.0));
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}

/// Mode functions sampled on a one-dimensional grid.
#[derive(Debug, Clone)]
struct Grid1d {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Extra weight in cubic integrals (radial measure for the ball).
    cubic: Vec<f64>,
    /// `values[(mode, node)]`.
    values: DMatrix<f64>,
    /// Derivatives of the mode functions.
    derivs: DMatrix<f64>,
}

impl Grid1d {
    fn sine(extent: f64, modes: usize, points: usize, radial: bool) -> Self {
        let (nodes, weights) = composite_rule(0.0, extent, points);
        let norm = (2.0 / extent).sqrt();
        let values = DMatrix::from_fn(modes, nodes.len(), |j, p| {
            norm * ((j + 1) as f64 * PI * nodes[p] / extent).sin()
        });
        let derivs = DMatrix::from_fn(modes, nodes.len(), |j, p| {
            let k = (j + 1) as f64 * PI / extent;
            norm * k * (k * nodes[p]).cos()
        });
        // ball: psi = u / (r sqrt(4 pi)); int psi_a psi_b psi_c d^3x = (4 pi)^{-1/2} int u_a u_b u_c / r dr
        let cubic = nodes
            .iter()
            .map(|&r| {
                if radial {
                    1.0 / (r * (4.0 * PI).sqrt())
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            nodes,
            weights,
            cubic,
            values,
            derivs,
        }
    }

    fn triple(&self, a: usize, b: usize, c: usize) -> f64 {
        let mut s = 0.0;
        for p in 0..self.nodes.len() {
            s += self.weights[p]
                * self.cubic[p]
                * self.values[(a, p)]
                * self.values[(b, p)]
                * self.values[(c, p)];
        }
        s
    }

    /// `\int w_a' (w_b w_c)'`, which equals `\int (-w_a'') w_b w_c` under Dirichlet conditions.
    fn triple_by_parts(&self, a: usize, b: usize, c: usize) -> f64 {
        let (v, d) = (&self.values, &self.derivs);
        (0..self.nodes.len())
            .map(|p| self.weights[p] * d[(a, p)] * (d[(b, p)] * v[(c, p)] + v[(b, p)] * d[(c, p)]))
            .sum()
    }

    fn overlap(&self, a: usize, b: usize) -> f64 {
        (0..self.nodes.len())
            .map(|p| self.weights[p] * self.values[(a, p)] * self.values[(b, p)])
            .sum()
    }

    fn weighted(&self, a: usize, b: usize, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.nodes.len())
            .map(|p| self.weights[p] * f(p) * self.values[(a, p)] * self.values[(b, p)])
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Layout {
    Line(Grid1d),
    /// Modes are pairs of line modes; all integrals factorize.
    Square {
        line: Grid1d,
        modes: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone)]
pub struct Basis {
    pub spec: DomainSpec,
    /// Dirichlet eigenvalues `lambda_j` for `j < max(K, M)`, ascending.
    pub eigenvalues: Vec<f64>,
    layout: Layout,
}

pub fn build_basis(spec: &DomainSpec) -> Result<Basis> {
    if !(spec.extent.is_finite() && spec.extent > 0.0) {
        return config("domain extent must be positive and finite");
    }
    if spec.n_electron < 2 || spec.n_phonon < 1 {
        return config("need at least two electron modes and one phonon mode");
    }
    let n = spec.n_modes();
    let pts = spec.effective_points();
    let l = spec.extent;
    let (eigenvalues, layout) = match spec.kind {
        DomainKind::Interval | DomainKind::BallRadial => {
            let ev = (1..=n).map(|j| (j as f64 * PI / l).powi(2)).collect();
            let radial = spec.kind == DomainKind::BallRadial;
            (ev, Layout::Line(Grid1d::sine(l, n, pts, radial)))
        }
        DomainKind::Square => {
            let side = n + 1;
            let mut modes: Vec<(usize, usize)> = (0..side)
                .flat_map(|a| (0..side).map(move |b| (a, b)))
                .collect();
            let q = |&(a, b): &(usize, usize)| (a + 1).pow(2) + (b + 1).pow(2);
            modes.sort_by_key(|m| (q(m), m.0, m.1));
            for &cut in &[spec.n_electron, spec.n_phonon] {
                if cut < modes.len() && q(&modes[cut - 1]) == q(&modes[cut]) {
                    return config(format!(
                        "square domain: {cut} modes splits a degenerate shell"
                    ));
                }
            }
            modes.truncate(n);
            let ev = modes
                .iter()
                .map(|m| q(m) as f64 * (PI / l).powi(2))
                .collect();
            let line = Grid1d::sine(l, side, pts, false);
            (ev, Layout::Square { line, modes })
        }
    };
    Ok(Basis {
        spec: spec.clone(),
        eigenvalues,
        layout,
    })
}

impl Basis {
    pub fn n_electron(&self) -> usize {
        self.spec.n_electron
    }

    pub fn n_phonon(&self) -> usize {
        self.spec.n_phonon
    }

    /// `lambda_j^s` for the first `n` modes.
    pub fn laplacian_power(&self, s: f64, n: usize) -> DVector<f64> {
        DVector::from_iterator(n, self.eigenvalues[..n].iter().map(|l| l.powf(s)))
    }

    /// `\int w_j w_m w_n` over the domain.
    pub fn triple_overlap(&self, j: usize, m: usize, n: usize) -> f64 {
        match &self.layout {
            Layout::Line(g) => g.triple(j, m, n),
            Layout::Square { line, modes } => {
                let (a, b, c) = (modes[j], modes[m], modes[n]);
                line.triple(a.0, b.0, c.0) * line.triple(a.1, b.1, c.1)
            }
        }
    }

    /// Gram matrix of the first `n` modes by quadrature.
    pub fn gram(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |a, b| match &self.layout {
            Layout::Line(g) => g.overlap(a, b),
            Layout::Square { line, modes } => {
                let (p, q) = (modes[a], modes[b]);
                line.overlap(p.0, q.0) * line.overlap(p.1, q.1)
            }
        })
    }

    pub fn orthonormality_error(&self) -> f64 {
        let n = self.eigenvalues.len();
        (self.gram(n) - DMatrix::identity(n, n)).amax()
    }

    /// Electron-sector matrix of multiplication by `w_j`.
    pub fn multiplication_matrix(&self, j: usize) -> DMatrix<f64> {
        let k = self.n_electron();
        let mut t = DMatrix::zeros(k, k);
        for m in 0..k {
            for n in m..k {
                let v = self.triple_overlap(j, m, n);
                t[(m, n)] = v;
                t[(n, m)] = v;
            }
        }
        t
    }

    /// `B_j = lambda_j^{-1/2} \int w_j w_m w_n`, one `K x K` matrix per phonon mode.
    pub fn coupling_matrices(&self) -> Vec<DMatrix<f64>> {
        (0..self.n_phonon())
            .map(|j| self.multiplication_matrix(j) / self.eigenvalues[j].sqrt())
            .collect()
    }

    /// Phonon modes kept by the ultraviolet projection `Pi_Lambda`: `lambda_j <= Lambda^2`.
    /// `Lambda = inf` keeps every mode.
    pub fn uv_projection(&self, cutoff: f64) -> Vec<bool> {
        self.eigenvalues[..self.n_phonon()]
            .iter()
            .map(|&l| cutoff.is_infinite() || l <= cutoff * cutoff)
            .collect()
    }

    /// Electron-sector matrix of `d/dx`, `<w_m, w_n'>`; antisymmetric. Interval only.
    pub fn derivative_matrix(&self) -> Option<DMatrix<f64>> {
        let Layout::Line(g) = &self.layout else {
            return None;
        };
        if self.spec.kind != DomainKind::Interval {
            return None;
        }
        let k = self.n_electron();
        Some(DMatrix::from_fn(k, k, |m, n| {
            (0..g.nodes.len())
                .map(|p| g.weights[p] * g.values[(m, p)] * g.derivs[(n, p)])
                .sum()
        }))
    }

    /// Electron-sector matrix of multiplication by `w_j'`. Interval only.
    pub fn derivative_multiplication_matrix(&self, j: usize) -> Option<DMatrix<f64>> {
        let Layout::Line(g) = &self.layout else {
            return None;
        };
        if self.spec.kind != DomainKind::Interval {
            return None;
        }
        let k = self.n_electron();
        Some(DMatrix::from_fn(k, k, |m, n| {
            g.weighted(m, n, |p| g.derivs[(j, p)])
        }))
    }

    /// Electron-sector matrix of multiplication by `-Delta w_j`, assembled by integration by
    /// parts from first derivatives. Interval and square only.
    pub fn laplacian_multiplication_matrix(&self, j: usize) -> Option<DMatrix<f64>> {
        let k = self.n_electron();
        let entry = |m: usize, n: usize| -> Option<f64> {
            match &self.layout {
                Layout::Line(g) if self.spec.kind == DomainKind::Interval => {
                    Some(g.triple_by_parts(j, m, n))
                }
                Layout::Square { line, modes } => {
                    let (a, b, c) = (modes[j], modes[m], modes[n]);
                    Some(
                        line.triple_by_parts(a.0, b.0, c.0) * line.triple(a.1, b.1, c.1)
                            + line.triple(a.0, b.0, c.0) * line.triple_by_parts(a.1, b.1, c.1),
                    )
                }
                _ => None,
            }
        };
        let mut t = DMatrix::zeros(k, k);
        for m in 0..k {
            for n in m..k {
                let v = entry(m, n)?;
                t[(m, n)] = v;
                t[(n, m)] = v;
            }
        }
        Some(t)
    }

    /// Sample points used for gauge fixing and plotting (a 1D or tensor grid).
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        match &self.layout {
            Layout::Line(g) => g.nodes.iter().map(|&x| vec![x]).collect(),
            Layout::Square { line, .. } => line
                .nodes
                .iter()
                .step_by(2)
                .flat_map(|&x| line.nodes.iter().step_by(2).map(move |&y| vec![x, y]))
                .collect(),
        }
    }

    /// Value of the electron state `sum_m c_m w_m` at every sample point.
    pub fn evaluate(&self, coeffs: &DVector<f64>) -> Vec<f64> {
        let k = coeffs.len();
        match &self.layout {
            Layout::Line(g) => {
                let radial = self.spec.kind == DomainKind::BallRadial;
                (0..g.nodes.len())
                    .map(|p| {
                        let u: f64 = (0..k).map(|m| coeffs[m] * g.values[(m, p)]).sum();
                        if radial {
                            u / (g.nodes[p] * (4.0 * PI).sqrt())
                        } else {
                            u
                        }
                    })
                    .collect()
            }
            Layout::Square { line, modes } => {
                let n = line.nodes.len();
                let mut out = Vec::new();
                for px in (0..n).step_by(2) {
                    for py in (0..n).step_by(2) {
                        out.push(
                            (0..k)
                                .map(|m| {
                                    let (a, b) = modes[m];
                                    coeffs[m] * line.values[(a, px)] * line.values[(b, py)]
                                })
                                .sum(),
                        );
                    }
                }
                out
            }
        }
    }
}
