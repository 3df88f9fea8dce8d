#![allow(dead_code)]

use polaron::basis::DomainSpec;
use polaron::engineered::{assemble, Assembled};
use polaron::pekar::ScfOptions;
use std::f64::consts::PI;

pub fn small(extent: f64, k: usize, m: usize, n_max: usize) -> Assembled {
    assemble(
        &DomainSpec::interval(extent, k, m),
        n_max,
        &ScfOptions::default(),
    )
    .unwrap()
}

/// Interval of length `3 pi` with `K = 8`, `M = 3`, `N_max = 6`.
pub fn standard() -> Assembled {
    small(3.0 * PI, 8, 3, 6)
}
