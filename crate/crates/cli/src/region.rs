//! Region descriptions: unions of balls and boxes, or level sets of `Mf`.

use hardy_core::maximal::grand_maximal;
use hardy_core::whitney::OpenRegion;
use hardy_core::{builtin, BuiltinSpec, Grid, MollifierFamily};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Open Euclidean ball.
    Ball { center: [f64; 2], radius: f64 },
    /// Open box `lo < x < hi` coordinatewise.
    Box { lo: [f64; 2], hi: [f64; 2] },
}

impl Shape {
    /// Coordinates are in units of the half-width `L`.
    fn contains(&self, x: [f64; 2], dim: usize, l: f64) -> bool {
        match self {
            Shape::Ball { center, radius } => {
                (0..dim).map(|d| (x[d] / l - center[d]).powi(2)).sum::<f64>() < radius * radius
            }
            Shape::Box { lo, hi } => (0..dim).all(|d| x[d] / l > lo[d] && x[d] / l < hi[d]),
        }
    }

    pub fn random(rng: &mut impl Rng, dim: usize) -> Self {
        let mut center = [0.0; 2];
        for c in center.iter_mut().take(dim) {
            *c = rng.gen_range(-0.8..0.8);
        }
        if rng.gen_bool(0.5) {
            Shape::Ball { center, radius: rng.gen_range(0.03..0.4) }
        } else {
            let mut lo = [0.0; 2];
            let mut hi = [0.0; 2];
            for d in 0..dim {
                let half = rng.gen_range(0.03..0.4);
                lo[d] = center[d] - half;
                hi[d] = center[d] + half;
            }
            Shape::Box { lo, hi }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Union { shapes: Vec<Shape> },
    /// `{ Mf > 2^level }` for a builtin `f` and the standard family at `p`.
    Threshold { function: BuiltinSpec, p: f64, level: i32 },
}

impl RegionConfig {
    pub fn ball(center: [f64; 2], radius: f64) -> Self {
        RegionConfig::Union { shapes: vec![Shape::Ball { center, radius }] }
    }

    pub fn build(&self, grid: Grid) -> Result<OpenRegion, CliError> {
        match self {
            RegionConfig::Union { shapes } => {
                let l = grid.half_width();
                let dim = grid.dim();
                Ok(OpenRegion::from_predicate(grid, |x| shapes.iter().any(|s| s.contains(x, dim, l)))?)
            }
            RegionConfig::Threshold { function, p, level } => {
                let f = builtin(grid, function)?;
                let mf = grand_maximal(&f, &MollifierFamily::standard(grid, *p)?)?;
                let t = 2f64.powi(*level);
                Ok(OpenRegion::new(grid, mf.values().iter().map(|&v| v > t).collect())?)
            }
        }
    }
}

/// A union of one to five random shapes that is nonempty and proper on `grid`.
pub fn random_union(rng: &mut impl Rng, grid: Grid) -> (Vec<Shape>, OpenRegion) {
    loop {
        let n = rng.gen_range(1..=5);
        let shapes: Vec<Shape> = (0..n).map(|_| Shape::random(rng, grid.dim())).collect();
        if let Ok(r) = (RegionConfig::Union { shapes: shapes.clone() }).build(grid) {
            return (shapes, r);
        }
    }
}
