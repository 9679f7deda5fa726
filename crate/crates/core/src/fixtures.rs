//! Bundled example grids and requirements. The numbers are representative
//! desk-scale values, not measurements of a real network.

use crate::grid::GridSpec;

/// Five nodes, six lines, generous ratings: feasible under any profile walk.
pub const GRID5_JSON: &str = include_str!("../fixtures/grid5.json");
/// Same topology with tight ratings and livelier demand.
pub const GRID5_STRESS_JSON: &str = include_str!("../fixtures/grid5_stress.json");
/// Bounded overload for every line of the bundled grids and no blackout for
/// every consumer.
pub const SAFETY_MTL: &str = include_str!("../fixtures/safety.mtl");

pub fn grid5() -> GridSpec {
    GridSpec::from_json(GRID5_JSON).expect("bundled grid is valid")
}

pub fn grid5_stress() -> GridSpec {
    GridSpec::from_json(GRID5_STRESS_JSON).expect("bundled grid is valid")
}
