//! Run configuration read from TOML.

use polaron::basis::{DomainKind, DomainSpec};
use polaron::fock::binomial;
use polaron::oracle::log_grid;
use polaron::series::MAX_ORDER;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Largest Fock dimension `C(M + N_max, M)` accepted; the Fock Hamiltonian is diagonalized densely.
pub const MAX_FOCK_DIM: usize = 8000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Domain {
    pub kind: DomainKind,
    pub extent: f64,
    pub n_electron: usize,
    pub n_phonon: usize,
    pub quadrature_points: usize,
    /// Multiplies every coupling; `0` switches the interaction off.
    pub coupling: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self {
            kind: DomainKind::Interval,
            extent: 3.0 * std::f64::consts::PI,
            n_electron: 10,
            n_phonon: 4,
            quadrature_points: 0,
            coupling: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fock {
    pub n_max: usize,
}

impl Default for Fock {
    fn default() -> Self {
        Self { n_max: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Series {
    /// 1-based level index.
    pub level: usize,
    /// When set, every level cluster whose `E_0` lies in `[lo, hi]` replaces `level`.
    pub energy_window: Option<[f64; 2]>,
    pub b_max: usize,
    /// Number of ladder levels reported by `hessian` and `bogoliubov-spectrum`.
    pub ladder_levels: usize,
    /// Levels included in `sweep`.
    pub sweep_levels: usize,
}

impl Default for Series {
    fn default() -> Self {
        Self {
            level: 1,
            energy_window: None,
            b_max: 4,
            ladder_levels: 8,
            sweep_levels: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub fit_floor: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            lo: 20.0,
            hi: 200.0,
            count: 16,
            fit_lo: 60.0,
            fit_hi: 200.0,
            fit_floor: 1e-17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffPolicy {
    /// `Lambda = inf`: the transformation is the identity.
    Infinite,
    /// `0`, half the mode range and `inf`.
    Ladder,
    /// The listed values.
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cutoff {
    pub policy: CutoffPolicy,
    pub values: Vec<f64>,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self {
            policy: CutoffPolicy::Ladder,
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub scf: f64,
    pub cluster: f64,
    pub odd: f64,
    pub ladder_rel: f64,
    pub identity: f64,
    pub pk1p: f64,
    pub explicit_rel: f64,
    pub slope_margin: f64,
    pub m1_diagonal: f64,
    pub e1_match: f64,
    pub splitting_rel: f64,
    pub tau_upper: f64,
    pub fault: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let v = polaron::validation::Tolerances::default();
        Self {
            scf: 1e-12,
            cluster: 1e-9,
            odd: v.odd,
            ladder_rel: v.ladder_rel,
            identity: v.identity,
            pk1p: v.pk1p,
            explicit_rel: v.explicit_rel,
            slope_margin: v.slope_margin,
            m1_diagonal: v.m1_diagonal,
            e1_match: v.e1_match,
            splitting_rel: v.splitting_rel,
            tau_upper: v.tau_upper,
            fault: v.fault,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Run {
    pub seed: u64,
    pub restarts: usize,
    /// Output directory; relative paths are resolved against the output root.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
}

impl Default for Run {
    fn default() -> Self {
        Self {
            seed: 7,
            restarts: 8,
            output_dir: PathBuf::from("polaron-out"),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: Domain,
    pub fock: Fock,
    pub series: Series,
    pub alpha: AlphaGrid,
    pub cutoff: Cutoff,
    pub tolerances: Tolerances,
    pub run: Run,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        let d = &self.domain;
        if !(d.extent.is_finite() && d.extent > 0.0) {
            return Err("domain.extent must be positive and finite".into());
        }
        if !d.coupling.is_finite() {
            return Err("domain.coupling must be finite".into());
        }
        if d.n_electron < 2 || d.n_phonon < 1 {
            return Err("need domain.n_electron >= 2 and domain.n_phonon >= 1".into());
        }
        if self.fock.n_max < 1 {
            return Err("fock.n_max must be at least 1".into());
        }
        let dim = binomial(d.n_phonon + self.fock.n_max, d.n_phonon);
        if dim > MAX_FOCK_DIM {
            return Err(format!(
                "Fock dimension C(M+N_max, M) = {dim} exceeds {MAX_FOCK_DIM}"
            ));
        }
        let s = &self.series;
        if s.level < 1 {
            return Err("series.level is 1-based".into());
        }
        if let Some([lo, hi]) = s.energy_window {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err("series.energy_window must be a finite [lo, hi] with lo <= hi".into());
            }
        }
        if s.b_max > MAX_ORDER {
            return Err(format!("series.b_max must be at most {MAX_ORDER}"));
        }
        if s.ladder_levels < 1 || s.sweep_levels < 1 {
            return Err("series.ladder_levels and series.sweep_levels must be positive".into());
        }
        let a = &self.alpha;
        if a.count == 0 {
            return Err("alpha grid is empty".into());
        }
        if !(a.lo > 0.0 && a.hi >= a.lo && a.hi.is_finite()) {
            return Err("alpha grid needs 0 < lo <= hi < inf".into());
        }
        if !(a.fit_lo > 0.0 && a.fit_hi >= a.fit_lo) || !(a.fit_floor >= 0.0) {
            return Err("alpha fit window needs 0 < fit_lo <= fit_hi and fit_floor >= 0".into());
        }
        if self.cutoff.policy == CutoffPolicy::Explicit {
            if self.cutoff.values.is_empty() {
                return Err("cutoff.values is empty for the explicit policy".into());
            }
            if self.cutoff.values.iter().any(|v| v.is_nan() || *v < 0.0) {
                return Err("cutoff values must be non-negative".into());
            }
        }
        let t = &self.tolerances;
        let all = [
            ("scf", t.scf),
            ("cluster", t.cluster),
            ("odd", t.odd),
            ("ladder_rel", t.ladder_rel),
            ("identity", t.identity),
            ("pk1p", t.pk1p),
            ("explicit_rel", t.explicit_rel),
            ("slope_margin", t.slope_margin),
            ("m1_diagonal", t.m1_diagonal),
            ("e1_match", t.e1_match),
            ("splitting_rel", t.splitting_rel),
            ("tau_upper", t.tau_upper),
            ("fault", t.fault),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerances.{name} must be positive"));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> DomainSpec {
        let d = &self.domain;
        let mut s = DomainSpec::interval(d.extent, d.n_electron, d.n_phonon).with_kind(d.kind);
        s.quadrature_points = d.quadrature_points;
        s
    }

    pub fn alphas(&self) -> Vec<f64> {
        log_grid(self.alpha.lo, self.alpha.hi, self.alpha.count)
    }
}
