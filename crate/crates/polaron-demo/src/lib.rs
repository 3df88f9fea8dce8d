//! Browser bindings: each call builds the model from scratch and returns JSON.

use polaron::basis::{build_basis, DomainKind, DomainSpec};
use polaron::fock::{binomial, build_fock, FockSpectrum};
use polaron::model::CoupledModel;
use polaron::pekar::{solve_pekar, PekarSolution, ScfOptions};
use polaron::quadratic::hessian_matrix;
use polaron::series::{SeriesContext, MAX_ORDER};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Fock dimension accepted by [`series_coefficients`]; keeps a call interactive.
pub const DEMO_FOCK_DIM: usize = 2000;

fn kind(name: &str) -> Result<DomainKind, String> {
    match name {
        "interval" => Ok(DomainKind::Interval),
        "ball_radial" => Ok(DomainKind::BallRadial),
        "square" => Ok(DomainKind::Square),
        _ => Err(format!("unknown domain kind {name:?}")),
    }
}

fn spec(
    domain: &str,
    extent: f64,
    n_electron: usize,
    n_phonon: usize,
) -> Result<DomainSpec, String> {
    if n_electron > 40 || n_phonon > 16 {
        return Err("demo limits: n_electron <= 40, n_phonon <= 16".into());
    }
    Ok(DomainSpec::interval(extent, n_electron, n_phonon).with_kind(kind(domain)?))
}

fn solve(
    domain: &str,
    extent: f64,
    n_electron: usize,
    n_phonon: usize,
) -> Result<(polaron::basis::Basis, PekarSolution), String> {
    let basis =
        build_basis(&spec(domain, extent, n_electron, n_phonon)?).map_err(|e| e.to_string())?;
    let sol = solve_pekar(&basis, &ScfOptions::default()).map_err(|e| e.to_string())?;
    Ok((basis, sol))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Profile {
    dims: usize,
    points: Vec<Vec<f64>>,
    psi: Vec<f64>,
    e_pek: f64,
    mu_pek: f64,
    gap: f64,
    iterations: usize,
}

/// Pekar minimizer sampled on the quadrature grid.
#[wasm_bindgen]
pub fn pekar_profile(
    domain: &str,
    extent: f64,
    n_electron: usize,
    n_phonon: usize,
) -> Result<String, String> {
    let (basis, sol) = solve(domain, extent, n_electron, n_phonon)?;
    let points = basis.sample_points();
    to_json(&Profile {
        dims: points.first().map_or(1, Vec::len),
        psi: basis.evaluate(&sol.c),
        points,
        e_pek: sol.e_pek,
        mu_pek: sol.mu_pek,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

#[derive(Serialize)]
struct Level {
    energy: f64,
    occupation: Vec<usize>,
    degeneracy: usize,
}

#[derive(Serialize)]
struct Ladder {
    tau: Vec<f64>,
    ground_energy: f64,
    levels: Vec<Level>,
}

/// Hessian eigenvalues `tau_k` and the lowest ladder levels.
#[wasm_bindgen]
pub fn ladder_spectrum(
    domain: &str,
    extent: f64,
    n_electron: usize,
    n_phonon: usize,
    count: usize,
) -> Result<String, String> {
    let (_, sol) = solve(domain, extent, n_electron, n_phonon)?;
    let hess = hessian_matrix(&sol).map_err(|e| e.to_string())?;
    let levels = hess
        .ladder_spectrum(count.clamp(1, 64))
        .into_iter()
        .map(|l| Level {
            energy: l.energy,
            occupation: l.occupation,
            degeneracy: l.degeneracy,
        })
        .collect();
    to_json(&Ladder {
        tau: hess.tau.iter().copied().collect(),
        ground_energy: hess.ground_energy(),
        levels,
    })
}

#[derive(Serialize)]
struct Branch {
    n: usize,
    s: usize,
    d: usize,
    coefficients: Vec<f64>,
}

/// Series coefficients `E_0 .. E_b` of every branch of level `level` (1-based).
#[wasm_bindgen]
pub fn series_coefficients(
    domain: &str,
    extent: f64,
    n_electron: usize,
    n_phonon: usize,
    n_max: usize,
    level: usize,
    b_max: usize,
) -> Result<String, String> {
    if b_max > MAX_ORDER {
        return Err(format!("b_max must be at most {MAX_ORDER}"));
    }
    if n_max == 0 || binomial(n_phonon + n_max, n_phonon) > DEMO_FOCK_DIM {
        return Err(format!(
            "need 1 <= n_max and C(M + N_max, M) <= {DEMO_FOCK_DIM}"
        ));
    }
    let (_, sol) = solve(domain, extent, n_electron, n_phonon)?;
    let fock = build_fock(n_phonon, n_max).map_err(|e| e.to_string())?;
    let model = CoupledModel::new(&sol, fock);
    let spectrum = FockSpectrum::new(
        &model
            .fock
            .bogoliubov_hamiltonian(&model.electron.hessian_g()),
    );
    let ctx = SeriesContext::new(&model, &spectrum, level, 1e-9).map_err(|e| e.to_string())?;
    let branches = if ctx.d() == 1 {
        vec![ctx
            .coefficients_nondegenerate(b_max, 1e-9)
            .map_err(|e| e.to_string())?]
    } else {
        (1..=ctx.d())
            .map(|s| {
                ctx.coefficients_degenerate(s, b_max, 1e-9)
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    to_json(
        &branches
            .into_iter()
            .map(|b| Branch {
                n: b.n,
                s: b.s,
                d: b.d,
                coefficients: b.coefficients,
            })
            .collect::<Vec<_>>(),
    )
}
