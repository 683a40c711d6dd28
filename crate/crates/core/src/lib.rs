//! Whitney decompositions, grand maximal functions and atomic decompositions
//! of Hardy-space distributions on uniform grids.

pub mod atoms;
pub mod builtins;
pub mod decompose;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod operators;
pub mod poly;
pub mod report;
pub mod whitney;

mod edt;
mod fft;

pub use atoms::{Atom, Ball, ValidationReport};
pub use builtins::{builtin, BuiltinSpec};
pub use decompose::{AtomicDecomposition, CZLevel, DecomposeOptions, PartitionOfUnity};
pub use error::{Error, Result};
pub use grid::{Grid, LocalFunction, SampledFunction};
pub use maximal::{FamilyConfig, LevelSetFamily, MollifierFamily, ProfileKind};
pub use operators::{BoundMode, HarnessReport, OperatorKind, OperatorSpec};
pub use poly::Polynomial;
pub use report::{KvDoc, Table};
pub use whitney::{DilatedCube, DyadicCube, OpenRegion, WhitneyFamily};
