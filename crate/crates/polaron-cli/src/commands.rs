//! Subcommand bodies.

use crate::config::{CutoffPolicy, RunConfig};
use crate::output::Sink;
use nalgebra::{DMatrix, DVector};
use polaron::basis::{build_basis, Basis};
use polaron::fock::{build_fock, FockSpectrum};
use polaron::gross::{k_based_coefficients, residual_sweep, GrossContext};
use polaron::model::CoupledModel;
use polaron::oracle::{
    coefficient_order_fit, exact_levels, growth_check, residual_order_fit, FitWindow, SchurOracle,
};
use polaron::pekar::{solve_pekar_scaled, verify_assumptions, PekarSolution, ScfOptions};
use polaron::quadratic::HessianModel;
use polaron::series::{LevelSeries, SeriesContext};
use polaron::validation::{self, Validation, ValidationConfig, CRITERIA};
use polaron::Error;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
    Acceptance(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Acceptance(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "output error: {m}"),
            Failure::Acceptance(m) => write!(f, "acceptance failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            Error::Numerical(m) => Failure::Numerical(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Out = Result<(), Failure>;

struct Setup {
    basis: Basis,
    sol: PekarSolution,
}

fn scf(cfg: &RunConfig) -> ScfOptions {
    ScfOptions {
        tol: cfg.tolerances.scf,
        ..ScfOptions::default()
    }
}

fn setup(cfg: &RunConfig) -> Result<Setup, Failure> {
    let basis = build_basis(&cfg.spec())?;
    let sol = solve_pekar_scaled(&basis, &scf(cfg), cfg.domain.coupling)?;
    Ok(Setup { basis, sol })
}

struct Coupled {
    setup: Setup,
    model: CoupledModel,
    spectrum: FockSpectrum,
}

fn coupled(cfg: &RunConfig) -> Result<Coupled, Failure> {
    let setup = setup(cfg)?;
    let model = CoupledModel::new(&setup.sol, build_fock(cfg.domain.n_phonon, cfg.fock.n_max)?);
    let spectrum = FockSpectrum::new(
        &model
            .fock
            .bogoliubov_hamiltonian(&model.electron.hessian_g()),
    );
    Ok(Coupled {
        setup,
        model,
        spectrum,
    })
}

fn require_unit_coupling(cfg: &RunConfig, what: &str) -> Out {
    if cfg.domain.coupling != 1.0 {
        return Err(Failure::Config(format!("{what} needs domain.coupling = 1")));
    }
    Ok(())
}

fn column(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

// ---- solve-pekar ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PekarReport {
    e_pek: f64,
    mu_pek: f64,
    gap: f64,
    residual: f64,
    kernel_residual: f64,
    iterations: usize,
    coefficients: Vec<f64>,
    phi_p: Vec<f64>,
    h0_eigenvalues: Vec<f64>,
    lambda: Vec<f64>,
    assumptions: polaron::pekar::AssumptionReport,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    energy: f64,
}

pub fn solve_pekar(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let Setup { basis, sol } = setup(cfg)?;
    let assumptions = verify_assumptions(&sol, cfg.run.restarts, cfg.run.seed);
    let report = PekarReport {
        e_pek: sol.e_pek,
        mu_pek: sol.mu_pek,
        gap: sol.gap,
        residual: sol.residual,
        kernel_residual: sol.kernel_residual(),
        iterations: sol.iterations,
        coefficients: column(&sol.c),
        phi_p: column(&sol.phi_p),
        h0_eigenvalues: column(&sol.h0_eigenvalues),
        lambda: column(&sol.lambda),
        assumptions,
    };
    sink.json("pekar.json", &report)?;
    let points = basis.sample_points();
    let values = basis.evaluate(&sol.c);
    let dims = points.first().map_or(1, Vec::len);
    let mut columns: Vec<String> = ["x", "y"]
        .iter()
        .take(dims)
        .map(|s| s.to_string())
        .collect();
    if cfg.domain.kind == polaron::basis::DomainKind::BallRadial {
        columns = vec!["r".into()];
    }
    columns.push("psi".into());
    let table: Vec<Vec<String>> = points
        .iter()
        .zip(&values)
        .map(|(p, v)| {
            p.iter()
                .chain(std::iter::once(v))
                .map(|x| num(*x))
                .collect()
        })
        .collect();
    sink.csv_columns("profile.csv", &columns, &table)?;
    let trace: Vec<TraceRow> = sol
        .energy_trace
        .iter()
        .enumerate()
        .map(|(iteration, &energy)| TraceRow { iteration, energy })
        .collect();
    sink.csv("scf_trace.csv", &trace)?;
    println!(
        "e_pek = {:.12}  gap = {:.6}  unique = {}",
        sol.e_pek, sol.gap, report.assumptions.unique
    );
    Ok(())
}

// ---- hessian -------------------------------------------------------------------------------

#[derive(Serialize)]
struct TauRow {
    k: usize,
    tau: f64,
    sqrt_tau: f64,
    squeeze: f64,
}

#[derive(Serialize)]
struct LadderRow {
    index: usize,
    energy: f64,
    degeneracy: usize,
    occupation: String,
}

#[derive(Serialize)]
struct HessianReport {
    g: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    tau: Vec<f64>,
    max_tau: f64,
    min_tau: f64,
    max_g_eigenvalue: f64,
    b_kernel: Vec<Vec<f64>>,
    b_hs_squared: f64,
    b_squared_bound: f64,
    ground_energy: f64,
}

fn ladder_rows(hess: &HessianModel, count: usize) -> Vec<LadderRow> {
    hess.ladder_spectrum(count)
        .into_iter()
        .map(|l| LadderRow {
            index: l.index,
            energy: l.energy,
            degeneracy: l.degeneracy,
            occupation: l
                .occupation
                .iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect()
}

pub fn hessian(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let Setup { sol, .. } = setup(cfg)?;
    let hess = polaron::quadratic::hessian_matrix(&sol)?;
    let squeeze = hess.squeeze();
    let tau: Vec<TauRow> = hess
        .tau
        .iter()
        .enumerate()
        .map(|(k, &t)| TauRow {
            k: k + 1,
            tau: t,
            sqrt_tau: t.sqrt(),
            squeeze: squeeze[k],
        })
        .collect();
    sink.csv("tau.csv", &tau)?;
    sink.csv("ladder.csv", &ladder_rows(&hess, cfg.series.ladder_levels))?;
    let g_eig = polaron::pekar::symmetric_eigen_sorted(&hess.g).0;
    let report = HessianReport {
        g: rows(&hess.g),
        h: rows(&hess.h),
        tau: column(&hess.tau),
        max_tau: hess.tau.max(),
        min_tau: hess.tau.min(),
        max_g_eigenvalue: g_eig.max(),
        b_kernel: rows(&hess.b_kernel),
        b_hs_squared: hess.b_hs_squared(),
        b_squared_bound: hess.b_squared_bound(),
        ground_energy: hess.ground_energy(),
    };
    sink.json("hessian.json", &report)?;
    println!(
        "tau in [{:.6}, {:.6}]  E^(1) = {:.12}",
        report.min_tau, report.max_tau, report.ground_energy
    );
    Ok(())
}

// ---- bogoliubov-spectrum -------------------------------------------------------------------

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    fock: f64,
    ladder: f64,
    rel_err: f64,
}

pub fn bogoliubov_spectrum(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let c = coupled(cfg)?;
    let hess = HessianModel::from_g(c.model.electron.hessian_g())?;
    let count = cfg.series.ladder_levels.min(c.spectrum.values.len());
    let ladder = hess.ladder_spectrum(count);
    let table: Vec<SpectrumRow> = ladder
        .iter()
        .zip(c.spectrum.values.iter())
        .enumerate()
        .map(|(i, (l, &f))| SpectrumRow {
            index: i + 1,
            fock: f,
            ladder: l.energy,
            rel_err: (l.energy - f).abs() / l.energy.abs().max(f64::MIN_POSITIVE),
        })
        .collect();
    let worst = table.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    sink.csv("spectrum.csv", &table)?;
    println!("max relative deviation over {count} levels: {worst:.3e}");
    Ok(())
}

// ---- series --------------------------------------------------------------------------------

/// 1-based first indices of the selected level clusters.
fn selected_levels(cfg: &RunConfig, spectrum: &FockSpectrum) -> Result<Vec<usize>, Failure> {
    let tol = cfg.tolerances.cluster;
    let Some([lo, hi]) = cfg.series.energy_window else {
        return Ok(vec![spectrum.eigenpair_group(cfg.series.level, tol)?.first]);
    };
    let mut out = Vec::new();
    let mut n = 1;
    while n <= spectrum.values.len() {
        let g = spectrum.eigenpair_group(n, tol)?;
        if g.energy > hi {
            break;
        }
        if g.energy >= lo {
            out.push(g.first);
        }
        n = g.first + g.degeneracy();
    }
    if out.is_empty() {
        return Err(Failure::Config(format!(
            "no level with E_0 in [{lo}, {hi}]"
        )));
    }
    Ok(out)
}

fn level_series(cfg: &RunConfig, ctx: &SeriesContext) -> Result<Vec<LevelSeries>, Failure> {
    let b = cfg.series.b_max;
    if ctx.d() == 1 {
        Ok(vec![ctx.coefficients_nondegenerate(b, cfg.tolerances.odd)?])
    } else {
        (1..=ctx.d())
            .map(|s| Ok(ctx.coefficients_degenerate(s, b, cfg.tolerances.cluster)?))
            .collect()
    }
}

#[derive(Serialize)]
struct CoefficientRow {
    l: usize,
    e_l: f64,
    raw: f64,
}

#[derive(Serialize)]
struct BranchReport {
    n: usize,
    s: usize,
    d: usize,
    group: usize,
    coefficients: Vec<f64>,
    m_matrices: Vec<Vec<f64>>,
    growth_c_hat: f64,
}

pub fn series(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let c = coupled(cfg)?;
    let mut report = Vec::new();
    for n in selected_levels(cfg, &c.spectrum)? {
        let ctx = SeriesContext::new(&c.model, &c.spectrum, n, cfg.tolerances.cluster)?;
        for ls in level_series(cfg, &ctx)? {
            let table: Vec<CoefficientRow> = ls
                .coefficients
                .iter()
                .zip(&ls.raw)
                .enumerate()
                .map(|(l, (&e_l, &raw))| CoefficientRow { l, e_l, raw })
                .collect();
            sink.csv(&format!("series_n{}_s{}.csv", ls.n, ls.s), &table)?;
            println!(
                "level {} branch {}/{}: {}",
                ls.n,
                ls.s,
                ls.d,
                ls.coefficients
                    .iter()
                    .map(|x| format!("{x:.6e}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            report.push(BranchReport {
                n: ls.n,
                s: ls.s,
                d: ls.d,
                group: ls.group,
                growth_c_hat: growth_check(&ls.coefficients).c_hat,
                coefficients: ls.coefficients,
                m_matrices: ls.m_matrices,
            });
        }
    }
    sink.json("m_matrices.json", &report)?;
    Ok(())
}

// ---- gross-check ---------------------------------------------------------------------------

fn cutoffs(cfg: &RunConfig, basis: &Basis) -> Vec<f64> {
    match cfg.cutoff.policy {
        CutoffPolicy::Infinite => vec![f64::INFINITY],
        CutoffPolicy::Explicit => cfg.cutoff.values.clone(),
        CutoffPolicy::Ladder => {
            let lam = &basis.eigenvalues;
            let m = cfg.domain.n_phonon;
            let h = (m / 2).max(1);
            let mid = if h < m {
                (0.5 * (lam[h - 1] + lam[h])).sqrt()
            } else {
                lam[h - 1].sqrt() * 1.5
            };
            vec![0.0, mid, f64::INFINITY]
        }
    }
}

fn window(cfg: &RunConfig) -> FitWindow {
    FitWindow {
        lo: cfg.alpha.fit_lo,
        hi: cfg.alpha.fit_hi,
        floor: cfg.alpha.fit_floor,
    }
}

#[derive(Serialize)]
struct FitReport {
    level: usize,
    b: usize,
    target_slope: f64,
    slope: Option<f64>,
    intercept: Option<f64>,
    r2: Option<f64>,
    stability: f64,
    points: usize,
    below_floor: bool,
    passed: bool,
}

impl FitReport {
    fn new(level: usize, fit: &polaron::oracle::OrderFit, target: f64) -> Self {
        Self {
            level,
            b: fit.b,
            target_slope: target,
            slope: fit.fit.map(|f| f.slope),
            intercept: fit.fit.map(|f| f.intercept),
            r2: fit.fit.map(|f| f.r2),
            stability: fit.stability,
            points: fit.points.len(),
            below_floor: fit.below_floor,
            passed: fit.passes(target),
        }
    }
}

#[derive(Serialize)]
struct CutoffReport {
    cutoff: f64,
    trivial: bool,
    removed_modes: usize,
    pk1p: f64,
    identity_deviation: f64,
    symmetry_defect: Vec<f64>,
    g_norm: f64,
    p2g_identity: Option<f64>,
    momentum_form_deviation: Option<f64>,
    /// `E_l(K) - E_l(V)` per branch of the selected level.
    k_minus_v: Vec<Vec<f64>>,
    residual_fits: Vec<FitReport>,
}

#[derive(Serialize)]
struct GrossReport {
    level: usize,
    cutoffs: Vec<CutoffReport>,
}

pub fn gross_check(cfg: &RunConfig, sink: &mut Sink) -> Out {
    require_unit_coupling(cfg, "gross-check")?;
    let c = coupled(cfg)?;
    let n = selected_levels(cfg, &c.spectrum)?[0];
    let ctx = SeriesContext::new(&c.model, &c.spectrum, n, cfg.tolerances.cluster)?;
    let v_series = level_series(cfg, &ctx)?;
    let b = cfg.series.b_max;
    let alphas = cfg.alphas();
    let mut residual_rows = Vec::new();
    let mut reports = Vec::new();
    for cut in cutoffs(cfg, &c.setup.basis) {
        let gross = GrossContext::new(&c.setup.basis, &c.model, cut)?;
        let id = gross.verify_bogoliubov_identity(&c.model);
        let defects = gross
            .k_ops
            .iter()
            .map(|op| op.symmetry_defect(c.model.k(), c.model.dim_fock(), 4, cfg.run.seed))
            .collect();
        let mut k_minus_v = Vec::new();
        let mut fits = Vec::new();
        for vs in &v_series {
            let kc = k_based_coefficients(
                &gross,
                &c.model,
                &c.spectrum,
                n,
                vs.s,
                b,
                cfg.tolerances.cluster,
            )?;
            k_minus_v.push(
                kc.iter()
                    .zip(&vs.coefficients)
                    .map(|(x, y)| x - y)
                    .collect(),
            );
            for rb in (0..=b.min(2)).step_by(2) {
                let rs = residual_sweep(&gross, &ctx, &kc, rb, vs.s, &alphas)?;
                let pts: Vec<(f64, f64)> = rs.iter().map(|r| (r.alpha, r.residual)).collect();
                let target = -(rb as f64 + 3.0) + cfg.tolerances.slope_margin;
                fits.push(FitReport::new(
                    n + vs.s - 1,
                    &residual_order_fit(&pts, rb, window(cfg)),
                    target,
                ));
                residual_rows.extend(rs.into_iter().map(|r| (vs.s, r)));
            }
        }
        reports.push(CutoffReport {
            cutoff: cut,
            trivial: gross.is_trivial(),
            removed_modes: gross.removed.iter().filter(|r| **r).count(),
            pk1p: id.pk1p,
            identity_deviation: id.deviation,
            symmetry_defect: defects,
            g_norm: gross.g_norm(),
            p2g_identity: gross.p2g_identity(&c.setup.basis),
            momentum_form_deviation: gross.momentum_form_deviation(
                &c.setup.basis,
                &c.model,
                cfg.run.seed,
            ),
            k_minus_v,
            residual_fits: fits,
        });
        println!(
            "cutoff {cut}: identity deviation {:.3e}, |PK1P| {:.3e}{}",
            id.deviation,
            id.pk1p,
            if gross.is_trivial() {
                " (trivial: K = V)"
            } else {
                ""
            }
        );
    }
    sink.json(
        "gross.json",
        &GrossReport {
            level: n,
            cutoffs: reports,
        },
    )?;
    #[derive(Serialize)]
    struct Row {
        s: usize,
        cutoff: f64,
        b: usize,
        alpha: f64,
        residual: f64,
        norm: f64,
    }
    let table: Vec<Row> = residual_rows
        .into_iter()
        .map(|(s, r)| Row {
            s,
            cutoff: r.cutoff,
            b: r.b,
            alpha: r.alpha,
            residual: r.residual,
            norm: r.norm,
        })
        .collect();
    sink.csv("residuals.csv", &table)?;
    Ok(())
}

// ---- sweep ---------------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepRow {
    level: usize,
    alpha: f64,
    e0: f64,
    shift: f64,
    eigenvalue: f64,
}

#[derive(Serialize)]
struct SweepReport {
    levels: Vec<usize>,
    coefficients: BTreeMap<usize, Vec<f64>>,
    fits: Vec<FitReport>,
}

pub fn sweep(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let c = coupled(cfg)?;
    let tol = cfg.tolerances.cluster;
    let levels: Vec<usize> = (1..=cfg.series.sweep_levels.min(c.spectrum.values.len())).collect();
    let oracle = SchurOracle::new(&c.model, &c.spectrum);
    let sw = exact_levels(&oracle, &levels, &cfg.alphas(), tol)?;
    let mut table = Vec::new();
    for (i, &n) in levels.iter().enumerate() {
        for (a, &alpha) in sw.alphas.iter().enumerate() {
            table.push(SweepRow {
                level: n,
                alpha,
                e0: sw.e0[i],
                shift: sw.shifts[i][a],
                eigenvalue: sw.eigenvalue(i, a),
            });
        }
    }
    sink.csv("sweep.csv", &table)?;
    let mut coefficients = BTreeMap::new();
    let mut fits = Vec::new();
    for (i, &n) in levels.iter().enumerate() {
        let ctx = SeriesContext::new(&c.model, &c.spectrum, n, tol)?;
        let s = n - ctx.group.first + 1;
        let ls = if ctx.d() == 1 {
            ctx.coefficients_nondegenerate(cfg.series.b_max, cfg.tolerances.odd)?
        } else {
            ctx.coefficients_degenerate(s, cfg.series.b_max, tol)?
        };
        for b in 0..=cfg.series.b_max {
            let fit = coefficient_order_fit(&sw, i, &ls.coefficients, b, window(cfg));
            let target = -(b as f64 + 1.0) + cfg.tolerances.slope_margin;
            let rep = FitReport::new(n, &fit, target);
            println!(
                "level {n} b={b}: slope {} (target <= {target:.2}) {}",
                rep.slope
                    .map_or("below floor".into(), |s| format!("{s:.4}")),
                if rep.passed { "ok" } else { "FAIL" }
            );
            fits.push(rep);
        }
        coefficients.insert(n, ls.coefficients);
    }
    sink.json(
        "fits.json",
        &SweepReport {
            levels,
            coefficients,
            fits,
        },
    )?;
    Ok(())
}

// ---- validate ------------------------------------------------------------------------------

fn validation_setup(
    cfg: &RunConfig,
) -> Result<(ValidationConfig, validation::Tolerances), Failure> {
    require_unit_coupling(cfg, "validate")?;
    if cfg.domain.kind != polaron::basis::DomainKind::Interval {
        return Err(Failure::Config(
            "validate runs on the interval domain".into(),
        ));
    }
    if cfg.alpha.count < 4 {
        return Err(Failure::Config(
            "validate needs at least four alpha points".into(),
        ));
    }
    let n = cfg.fock.n_max;
    let vc = ValidationConfig {
        extent: cfg.domain.extent,
        n_electron: cfg.domain.n_electron,
        n_phonon: cfg.domain.n_phonon,
        n_max: n,
        ladder_n_max: vec![n.saturating_sub(2).max(1), n, n + 2],
        ladder_levels: cfg.series.ladder_levels,
        alpha_lo: cfg.alpha.lo,
        alpha_hi: cfg.alpha.hi,
        alpha_count: cfg.alpha.count,
        window: window(cfg),
        levels: cfg.series.sweep_levels,
        orders: (0..=cfg.series.b_max).step_by(2).collect(),
        residual_orders: (0..=cfg.series.b_max.min(2)).step_by(2).collect(),
        cluster_tol: cfg.tolerances.cluster,
    };
    let t = &cfg.tolerances;
    let tol = validation::Tolerances {
        ladder_rel: t.ladder_rel,
        identity: t.identity,
        pk1p: t.pk1p,
        odd: t.odd,
        explicit_rel: t.explicit_rel,
        slope_margin: t.slope_margin,
        m1_diagonal: t.m1_diagonal,
        e1_match: t.e1_match,
        splitting_rel: t.splitting_rel,
        tau_upper: t.tau_upper,
        fault: t.fault,
        ..validation::Tolerances::default()
    };
    Ok((vc, tol))
}

/// Wall-clock metrics are printed but kept out of the files.
fn is_timing(key: &str) -> bool {
    key.ends_with("seconds")
}

#[derive(Serialize)]
struct CriterionOut {
    id: u8,
    name: &'static str,
    passed: bool,
    metrics: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct MetricRow<'a> {
    criterion: u8,
    name: &'a str,
    passed: bool,
    metric: &'a str,
    value: f64,
}

pub fn validate(cfg: &RunConfig, criteria: &[u8], sink: &mut Sink) -> Out {
    let ids: Vec<u8> = if criteria.is_empty() {
        CRITERIA.to_vec()
    } else {
        criteria.to_vec()
    };
    if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(i)) {
        return Err(Failure::Config(format!("no criterion {bad}")));
    }
    let (vc, tol) = validation_setup(cfg)?;
    let v = Validation::new(vc, tol)?;
    let mut reports = Vec::new();
    for &id in &ids {
        let r = v.run(id)?;
        println!("{}", r.line());
        reports.push(CriterionOut {
            id: r.id,
            name: r.name,
            passed: r.passed,
            metrics: r
                .metrics
                .into_iter()
                .filter(|(k, _)| !is_timing(k))
                .collect(),
        });
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let rows: Vec<MetricRow> = reports
        .iter()
        .flat_map(|r| {
            r.metrics.iter().map(move |(k, &value)| MetricRow {
                criterion: r.id,
                name: r.name,
                passed: r.passed,
                metric: k,
                value,
            })
        })
        .collect();
    sink.csv("validation.csv", &rows)?;
    sink.json("validation.json", &reports)?;
    println!(
        "acceptance: {} of {} criteria passed",
        reports.len() - failed.len(),
        reports.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = failed.iter().map(u8::to_string).collect();
        Err(Failure::Acceptance(format!(
            "criteria {} failed",
            list.join(", ")
        )))
    }
}
