//! Reference eigenvalues of the fluctuation Hamiltonian
//! `H(alpha) = H_0 + V_1 / alpha + N / alpha^2` on electron x Fock, and order fits.
//!
//! Eigenvalues are returned on the scale `eps = alpha^2 E`. The electron kernel is eliminated
//! exactly: `eps` is an eigenvalue of `F(eps) = HH_0 + Delta(eps)` on the Fock space, where
//! `Delta = S^T A^{-1} B W S`, `A = H_0` on `Ran Q`, `B = Q V_1 Q / alpha + (N - eps) / alpha^2`,
//! `W = (A + B)^{-1}` and `S = Q V_1 P`. `F` is reduced once more onto a spectral window of
//! `HH_0` around the level, so `eps - E_0` is computed without cancellation against `E_0`.

use crate::error::{config, numerical, Result};
use crate::fock::FockSpectrum;
use crate::model::CoupledModel;
use crate::pekar::symmetric_eigen_sorted;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Largest product dimension accepted by the dense path.
pub const DENSE_LIMIT: usize = 6000;

/// Dense `H(alpha)`, index `e * D + f`.
pub fn fluctuation_hamiltonian(model: &CoupledModel, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return config("alpha must be positive and finite");
    }
    let dim = model.k() * model.dim_fock();
    if dim > DENSE_LIMIT {
        return config(format!(
            "product dimension {dim} above dense limit {DENSE_LIMIT}"
        ));
    }
    Ok(model.dense_fluctuation(alpha))
}

/// Lowest `count` eigenvalues of `H(alpha)` by dense diagonalization.
pub fn dense_levels(model: &CoupledModel, alpha: f64, count: usize) -> Result<Vec<f64>> {
    let h = fluctuation_hamiltonian(model, alpha)?;
    let (vals, _) = symmetric_eigen_sorted(&h);
    Ok(vals.iter().take(count).copied().collect())
}

/// Spectrum of `H_0 (x) 1`, the `alpha = infinity` limit: `(value, multiplicity)`.
pub fn limit_spectrum(model: &CoupledModel) -> Vec<(f64, usize)> {
    model
        .electron
        .g
        .iter()
        .map(|&g| (g, model.dim_fock()))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleOptions {
    /// Half-width of the `HH_0` window kept exactly in the second reduction.
    pub window: f64,
    /// Relative tolerance of the inner linear solves.
    pub solve_tol: f64,
    pub max_iter: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            window: 0.05,
            solve_tol: 1e-14,
            max_iter: 600,
        }
    }
}

/// Eliminates the electron kernel of `H(alpha)`.
pub struct SchurOracle<'a> {
    pub model: &'a CoupledModel,
    pub spectrum: &'a FockSpectrum,
    pub opts: OracleOptions,
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl<'a> SchurOracle<'a> {
    pub fn new(model: &'a CoupledModel, spectrum: &'a FockSpectrum) -> Self {
        Self {
            model,
            spectrum,
            opts: OracleOptions::default(),
        }
    }

    fn clear_p(x: &mut DMatrix<f64>) {
        x.row_mut(0).fill(0.0);
    }

    fn apply_a(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = self.model.apply_h0(x);
        Self::clear_p(&mut y);
        y
    }

    fn apply_a_inv(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x.clone();
        for (e, mut row) in y.row_iter_mut().enumerate() {
            if e == 0 {
                row.fill(0.0);
            } else {
                row /= self.model.electron.g[e];
            }
        }
        y
    }

    /// `B y = Q V_1 Q y t + (N - eps) y t^2`.
    fn apply_b(&self, y: &DMatrix<f64>, t: f64, eps: f64) -> DMatrix<f64> {
        let mut out = self.model.apply_v1(y) * t + (self.model.apply_number(y) - y * eps) * (t * t);
        Self::clear_p(&mut out);
        out
    }

    fn apply_ab(&self, y: &DMatrix<f64>, t: f64, eps: f64) -> DMatrix<f64> {
        self.apply_a(y) + self.apply_b(y, t, eps)
    }

    /// Preconditioned conjugate gradients for `(A + B) y = r`.
    fn pcg(&self, r0: &DMatrix<f64>, t: f64, eps: f64, rtol: f64) -> Result<DMatrix<f64>> {
        let mut x = DMatrix::zeros(r0.nrows(), r0.ncols());
        let mut r = r0.clone();
        let norm0 = r.norm();
        if norm0 == 0.0 {
            return Ok(x);
        }
        let mut z = self.apply_a_inv(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..self.opts.max_iter {
            let q = self.apply_ab(&p, t, eps);
            let pq = dot(&p, &q);
            if pq <= 0.0 {
                return numerical(
                    "electron block of the fluctuation Hamiltonian is not positive at this alpha",
                );
            }
            let step = rz / pq;
            x += &p * step;
            r -= &q * step;
            if r.norm() <= rtol * norm0 {
                return Ok(x);
            }
            z = self.apply_a_inv(&r);
            let rz_next = dot(&r, &z);
            p = &z + &p * (rz_next / rz);
            rz = rz_next;
        }
        numerical("conjugate gradients did not converge")
    }

    /// `W r` with iterative refinement.
    fn solve_w(&self, rhs: &DMatrix<f64>, t: f64, eps: f64) -> Result<DMatrix<f64>> {
        let mut y = self.pcg(rhs, t, eps, 1e-10)?;
        let norm = rhs.norm();
        let mut best = f64::INFINITY;
        for _ in 0..6 {
            let r = rhs - self.apply_ab(&y, t, eps);
            let rn = r.norm();
            if rn <= self.opts.solve_tol * 0.1 * norm || rn >= best {
                break;
            }
            best = rn;
            y += self.pcg(&r, t, eps, 1e-10)?;
        }
        Ok(y)
    }

    /// `Delta(eps) xi` on the Fock space.
    pub fn apply_delta(&self, xi: &DVector<f64>, alpha: f64, eps: f64) -> Result<DVector<f64>> {
        let t = 1.0 / alpha;
        let mut s = self.model.apply_v1(&self.model.lift(xi));
        Self::clear_p(&mut s);
        let y = self.solve_w(&s, t, eps)?;
        let z = self.apply_a_inv(&self.apply_b(&y, t, eps));
        Ok(self.model.project(&self.model.apply_v1(&z)))
    }

    /// Right-preconditioned restarted GMRES for `L z = b` on the masked coordinates.
    fn gmres(
        &self,
        op: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
        precond: &DVector<f64>,
        b: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = b.len();
        let bnorm = b.norm();
        let mut x = DVector::zeros(n);
        if bnorm == 0.0 {
            return Ok(x);
        }
        let restart = 60;
        for _ in 0..(self.opts.max_iter / restart).max(1) {
            let r = b - op(&x)?;
            let beta = r.norm();
            if beta <= self.opts.solve_tol * bnorm {
                return Ok(x);
            }
            let mut v: Vec<DVector<f64>> = vec![r / beta];
            let mut h = DMatrix::<f64>::zeros(restart + 1, restart);
            let mut cs = vec![0.0; restart];
            let mut sn = vec![0.0; restart];
            let mut g = DVector::<f64>::zeros(restart + 1);
            g[0] = beta;
            let mut used = 0;
            for j in 0..restart {
                let mut w = op(&v[j].component_mul(precond))?;
                for i in 0..=j {
                    h[(i, j)] = w.dot(&v[i]);
                    w -= &v[i] * h[(i, j)];
                }
                // second Gram-Schmidt pass
                for i in 0..=j {
                    let c = w.dot(&v[i]);
                    h[(i, j)] += c;
                    w -= &v[i] * c;
                }
                h[(j + 1, j)] = w.norm();
                for i in 0..j {
                    let tmp = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                    h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                    h[(i, j)] = tmp;
                }
                let den = h[(j, j)].hypot(h[(j + 1, j)]);
                cs[j] = h[(j, j)] / den;
                sn[j] = h[(j + 1, j)] / den;
                h[(j, j)] = den;
                h[(j + 1, j)] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] *= cs[j];
                used = j + 1;
                let wn = w.norm();
                if g[j + 1].abs() <= self.opts.solve_tol * 0.1 * bnorm || wn == 0.0 {
                    break;
                }
                v.push(w / wn);
            }
            let mut y = DVector::zeros(used);
            for i in (0..used).rev() {
                let mut s = g[i];
                for k in i + 1..used {
                    s -= h[(i, k)] * y[k];
                }
                y[i] = s / h[(i, i)];
            }
            let mut dz = DVector::zeros(n);
            for i in 0..used {
                dz += &v[i] * y[i];
            }
            x += dz.component_mul(precond);
        }
        let r = b - op(&x)?;
        if r.norm() <= 1e3 * self.opts.solve_tol * bnorm {
            Ok(x)
        } else {
            numerical(format!(
                "GMRES stalled at relative residual {:.2e}",
                r.norm() / bnorm
            ))
        }
    }

    /// Spectral window of `HH_0` around `e0` (indices ascending).
    fn window(&self, e0: f64, members: &[usize]) -> Vec<usize> {
        let w = &self.spectrum.values;
        let mut idx: Vec<usize> = (0..w.len())
            .filter(|&i| (w[i] - e0).abs() <= self.opts.window || members.contains(&i))
            .collect();
        idx.sort_unstable();
        idx
    }

    /// Effective window matrix `M(eps) - E_0` (symmetrized).
    fn effective(&self, win: &[usize], e0: f64, alpha: f64, eps: f64) -> Result<DMatrix<f64>> {
        let vecs = &self.spectrum.vectors;
        let vals = &self.spectrum.values;
        let dim = vals.len();
        let p = win.len();
        let mut mask = DVector::from_element(dim, 1.0);
        for &i in win {
            mask[i] = 0.0;
        }
        let precond = DVector::from_fn(dim, |i, _| {
            if mask[i] == 0.0 {
                0.0
            } else {
                1.0 / (vals[i] - eps).abs().max(1e-3)
            }
        });
        let op = |z: &DVector<f64>| -> Result<DVector<f64>> {
            let x = vecs * z.component_mul(&mask);
            let dz = vecs.tr_mul(&self.apply_delta(&x, alpha, eps)?);
            Ok(DVector::from_fn(dim, |i, _| {
                mask[i] * ((vals[i] - eps) * z[i] + dz[i])
            }))
        };
        let mut coords = Vec::with_capacity(p);
        for &k in win {
            let col = vecs.column(k).into_owned();
            coords.push(vecs.tr_mul(&self.apply_delta(&col, alpha, eps)?));
        }
        let mut m = DMatrix::zeros(p, p);
        for (k, ck) in coords.iter().enumerate() {
            let rhs = -ck.component_mul(&mask);
            let u = self.gmres(&op, &precond, &rhs)?;
            for (i, ci) in coords.iter().enumerate() {
                m[(i, k)] = ck[win[i]] + ci.dot(&u);
            }
            m[(k, k)] += vals[win[k]] - e0;
        }
        Ok((&m + m.transpose()) * 0.5)
    }

    /// `alpha^2 E^(n)(alpha) - E_0`, where `E_0` is the mean energy of the `HH_0` cluster of
    /// level `n` (1-based). The level keeps its rank inside the window.
    pub fn level_shift(&self, n: usize, alpha: f64, cluster_tol: f64) -> Result<f64> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return config("alpha must be positive and finite");
        }
        let group = self.spectrum.eigenpair_group(n, cluster_tol)?;
        let e0 = group.energy;
        let win = self.window(e0, &group.members);
        let rank = win
            .iter()
            .position(|&i| i == n - 1)
            .expect("level inside its window");
        let g = |delta: f64| -> Result<f64> {
            let m = self.effective(&win, e0, alpha, e0 + delta)?;
            let (vals, _) = symmetric_eigen_sorted(&m);
            Ok(vals[rank] - delta)
        };
        let mut xa = self.spectrum.values[n - 1] - e0;
        let mut ga = g(xa)?;
        let mut xb = xa + ga;
        let mut gb = g(xb)?;
        for _ in 0..40 {
            if gb == 0.0 || gb == ga {
                break;
            }
            let xc = xb - gb * (xb - xa) / (gb - ga);
            let step = (xc - xb).abs();
            xa = xb;
            ga = gb;
            xb = xc;
            if step <= 1e-21 + 4e-16 * xb.abs() {
                break;
            }
            gb = g(xb)?;
        }
        if !xb.is_finite() {
            return numerical(format!("level {n} shift diverged at alpha {alpha}"));
        }
        Ok(xb)
    }
}

/// Oracle eigenvalues of selected levels over an `alpha` grid.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSweep {
    pub alphas: Vec<f64>,
    pub levels: Vec<usize>,
    /// `E_0` per level.
    pub e0: Vec<f64>,
    /// `alpha^2 E^(n)(alpha) - E_0`, indexed `[level][alpha]`.
    pub shifts: Vec<Vec<f64>>,
}

impl SpectralSweep {
    /// Fluctuation-frame eigenvalue `E^(n)(alpha)` of level slot `i` at grid point `a`.
    pub fn eigenvalue(&self, i: usize, a: usize) -> f64 {
        (self.e0[i] + self.shifts[i][a]) / self.alphas[a].powi(2)
    }
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn exact_levels(
    oracle: &SchurOracle,
    levels: &[usize],
    alphas: &[f64],
    cluster_tol: f64,
) -> Result<SpectralSweep> {
    if alphas.is_empty() || levels.is_empty() {
        return config("sweep needs at least one alpha and one level");
    }
    let mut e0 = Vec::new();
    let mut shifts = Vec::new();
    for &n in levels {
        e0.push(oracle.spectrum.eigenpair_group(n, cluster_tol)?.energy);
        let row = alphas
            .iter()
            .map(|&a| oracle.level_shift(n, a, cluster_tol))
            .collect::<Result<Vec<f64>>>()?;
        shifts.push(row);
    }
    Ok(SpectralSweep {
        alphas: alphas.to_vec(),
        levels: levels.to_vec(),
        e0,
        shifts,
    })
}

/// Ordinary least squares `y = slope x + intercept` with `R^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderFit {
    pub b: usize,
    /// Points `(alpha, value)` inside the fit window.
    pub points: Vec<(f64, f64)>,
    /// `None` when every point lies below the floor.
    pub fit: Option<LineFit>,
    /// Change of the slope when the largest `alpha` is dropped.
    pub stability: f64,
    pub below_floor: bool,
}

impl OrderFit {
    /// Passes when the slope is at most `target`, or when every point is below the floor.
    pub fn passes(&self, target: f64) -> bool {
        match self.fit {
            Some(f) => f.slope <= target,
            None => self.below_floor,
        }
    }
}

/// Log-log fit of `|values|` against `alphas` inside `[lo, hi]`; points below `floor` are dropped.
pub fn loglog_fit(
    alphas: &[f64],
    values: &[f64],
    b: usize,
    lo: f64,
    hi: f64,
    floor: f64,
) -> OrderFit {
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .zip(values)
        .filter(|(a, _)| **a >= lo * (1.0 - 1e-12) && **a <= hi * (1.0 + 1e-12))
        .map(|(a, v)| (*a, *v))
        .collect();
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(_, v)| v.abs() > floor)
        .collect();
    if kept.len() < 3 {
        return OrderFit {
            b,
            points,
            fit: None,
            stability: 0.0,
            below_floor: kept.is_empty(),
        };
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.abs().ln()).collect();
    let fit = ols(&xs, &ys);
    let n = xs.len();
    let stability = if n > 3 {
        (ols(&xs[..n - 1], &ys[..n - 1]).slope - fit.slope).abs()
    } else {
        0.0
    };
    OrderFit {
        b,
        points,
        fit: Some(fit),
        stability,
        below_floor: false,
    }
}

/// Remainders `r_b(alpha) = alpha^2 E(alpha) - sum_{l<=b} alpha^{-l} E_l` for sweep slot `i`.
pub fn remainders(sweep: &SpectralSweep, i: usize, coefficients: &[f64], b: usize) -> Vec<f64> {
    sweep
        .alphas
        .iter()
        .zip(&sweep.shifts[i])
        .map(|(&a, &shift)| {
            // E_0 of the sweep is the same cluster energy; only its deviation enters
            let mut r = shift - (coefficients[0] - sweep.e0[i]);
            for (l, c) in coefficients.iter().enumerate().take(b + 1).skip(1) {
                r -= c * a.powi(-(l as i32));
            }
            r
        })
        .collect()
}

/// Fit window and floor used for the order fits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
    pub floor: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            lo: 60.0,
            hi: 200.0,
            floor: 1e-17,
        }
    }
}

/// Slope of `log |r_b|` against `log alpha`.
pub fn coefficient_order_fit(
    sweep: &SpectralSweep,
    i: usize,
    coefficients: &[f64],
    b: usize,
    window: FitWindow,
) -> OrderFit {
    let r = remainders(sweep, i, coefficients, b);
    loglog_fit(&sweep.alphas, &r, b, window.lo, window.hi, window.floor)
}

/// Slope of `log residual` against `log alpha` for rows `(alpha, residual)`.
pub fn residual_order_fit(rows: &[(f64, f64)], b: usize, window: FitWindow) -> OrderFit {
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let v: Vec<f64> = rows.iter().map(|r| r.1).collect();
    loglog_fit(&a, &v, b, window.lo, window.hi, window.floor)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// Smallest `C` with `|E_l| <= C^l sqrt(l!)` for all computed `l >= 1`.
    pub c_hat: f64,
    /// The same bound using only orders up to each `l`.
    pub running: Vec<f64>,
}

pub fn growth_check(coefficients: &[f64]) -> GrowthReport {
    let mut c_hat: f64 = 0.0;
    let mut running = Vec::new();
    let mut log_fact = 0.0;
    for (l, e) in coefficients.iter().enumerate().skip(1) {
        log_fact += (l as f64).ln();
        if *e != 0.0 {
            let c = ((e.abs().ln() - 0.5 * log_fact) / l as f64).exp();
            c_hat = c_hat.max(c);
        }
        running.push(c_hat);
    }
    GrowthReport { c_hat, running }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| -3.0 * v + 0.5).collect();
        let f = ols(&x, &y);
        assert!((f.slope + 3.0).abs() < 1e-14);
        assert!((f.intercept - 0.5).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn growth_of_zero_series() {
        assert_eq!(growth_check(&[0.3, 0.0, 0.0, 0.0, 0.0]).c_hat, 0.0);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(20.0, 200.0, 16);
        assert!((g[0] - 20.0).abs() < 1e-12 && (g[15] - 200.0).abs() < 1e-10);
    }
}
