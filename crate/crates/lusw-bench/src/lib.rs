//! Shared fixtures for the kernel benchmarks.

use lusw_core::model::{ModelParams, State};
use lusw_core::noise::{build_basis, NoiseBasis, NoiseSpec};
use lusw_core::GridSpec;

pub struct Fixture {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub basis: NoiseBasis,
    pub state: State,
}

/// A representative weak-regime configuration at dyadic level `j`.
pub fn fixture(j: u32) -> Fixture {
    let grid = GridSpec::with_default_points(j);
    let spec = NoiseSpec::stream_function(vec![(1, 0), (0, 1)], 2.0, 0.05);
    let basis = build_basis(&spec, &grid).expect("basis");
    let mut params = ModelParams::weak();
    params.g = 9.81;
    let state = State::random(7, j, (1 << j) / 2, 0.2, 1.0);
    Fixture {
        grid,
        params,
        basis,
        state,
    }
}
