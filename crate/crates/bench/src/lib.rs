//! Benchmarks for the hardy-core pipelines live in `benches/`; this crate
//! only provides their shared fixtures.

use hardy_core::{builtin, BuiltinSpec, Grid, MollifierFamily, SampledFunction};

/// A builtin on a fresh `m`-point grid with the standard family for `p`.
pub fn fixture(dim: usize, m: usize, name: &str, p: f64) -> (SampledFunction, MollifierFamily) {
    let g = Grid::new(dim, 1.0, m).expect("valid grid");
    let f = builtin(g, &BuiltinSpec::named(name)).expect("builtin fits the grid");
    (f, MollifierFamily::standard(g, p).expect("standard family"))
}
