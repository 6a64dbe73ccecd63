//! Fixtures shared by the benchmarks.

use gflow_core::flow::FlowState;
use gflow_core::grid_fields::GridSpec;
use gflow_core::presets;

/// Bump metric with the mixed scalar field on the `dim`-torus with `n` points per axis.
pub fn bump_state(dim: usize, n: usize) -> FlowState {
    let grid = GridSpec::torus(dim, n).expect("valid grid");
    let g = presets::bump_metric(grid, presets::METRIC_AMPLITUDE, 1.0).expect("positive metric");
    FlowState::new(g, presets::phi_mix(grid, presets::PHI_AMPLITUDE, 1.0))
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_builds_in_both_dimensions() {
        assert_eq!(super::bump_state(2, 16).g.grid().len(), 256);
        assert_eq!(super::bump_state(3, 8).phi.grid().len(), 512);
    }
}
