//! Shared setup for the benchmarks.

use grushin_core::SpaceParams;

pub fn space(alpha: f64) -> SpaceParams {
    SpaceParams::new(5, 1, alpha).expect("valid space")
}
