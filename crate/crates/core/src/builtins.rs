//! Named test functions with compact support and vanishing moments through
//! degree 1.
//!
//! Each builtin is a raw profile on its support minus the unit-weight
//! least-squares fit of degree 1 on the same cells, then scaled to the
//! requested amplitude.

use serde::{Deserialize, Serialize};

use crate::atoms::{random_atom_on, Ball};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction, BOUNDARY_MARGIN_CELLS};
use crate::poly::project_samples;

pub const BUILTIN_NAMES: [&str; 7] = ["haar", "mexican_hat", "dipole", "chirp", "ring", "bump_pair", "atom"];

/// A builtin function by name; omitted parameters take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub name: String,
    /// Center in units of the half-width `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    /// Support half-width (radius for radial profiles) in units of `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl BuiltinSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.to_string(), center: None, width: None, amplitude: None, seed: None }
    }

    /// Defaults keep the support inside one large dyadic cube away from its faces.
    pub fn center(&self, dim: usize) -> [f64; 2] {
        self.center.unwrap_or(if dim == 1 { [-0.1875, 0.0] } else { [-0.3, -0.3] })
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.width.unwrap_or(if dim == 1 { 0.12 } else { 0.15 })
    }
}

/// Samples the builtin on `grid`.
pub fn builtin(grid: Grid, spec: &BuiltinSpec) -> Result<SampledFunction> {
    let dim = grid.dim();
    let l = grid.half_width();
    let c0 = spec.center(dim);
    let w = spec.width(dim) * l;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("builtin width must be positive, got {}", spec.width(dim))));
    }
    let mut c = [0.0; 2];
    for d in 0..dim {
        c[d] = c0[d] * l;
        if (c[d].abs() + w) > l - (BOUNDARY_MARGIN_CELLS as f64 + 1.0) * grid.spacing() {
            return Err(Error::invalid(format!("builtin `{}` does not fit inside the boundary margin", spec.name)));
        }
    }
    let amplitude = spec.amplitude.unwrap_or(1.0);
    if spec.name == "atom" {
        let p = if dim == 1 { 0.5 } else { 2.0 / 3.0 };
        let ball = Ball::new(c, w)?;
        let a = random_atom_on(p, ball, spec.seed.unwrap_or(7), grid)?;
        return Ok(a.to_sampled().scaled(spec.amplitude.unwrap_or(10.0)));
    }
    let u = |x: [f64; 2]| {
        let mut u = [0.0; 2];
        for d in 0..dim {
            u[d] = (x[d] - c[d]) / w;
        }
        u
    };
    let r2 = |u: [f64; 2]| u[0] * u[0] + u[1] * u[1];
    let radial = |x: [f64; 2]| r2(u(x)) < 1.0;
    let boxed = |x: [f64; 2]| (0..dim).all(|d| u(x)[d].abs() < 1.0);
    type Profile<'a> = (Box<dyn Fn([f64; 2]) -> bool + 'a>, Box<dyn Fn([f64; 2]) -> f64 + 'a>);
    let (inside, raw): Profile = match spec.name.as_str() {
        "haar" => (Box::new(boxed), Box::new(move |x| if u(x)[0] < 0.0 { 1.0 } else { -1.0 })),
        "mexican_hat" => (
            Box::new(radial),
            Box::new(move |x| {
                let t = 9.0 * r2(u(x));
                (1.0 - t) * (-0.5 * t).exp()
            }),
        ),
        "dipole" => (Box::new(radial), Box::new(move |x| u(x)[0] * (1.0 - r2(u(x))).powi(3))),
        "chirp" => (
            Box::new(radial),
            Box::new(move |x| {
                let t = u(x)[0];
                (std::f64::consts::PI * 3.0 * t * (2.0 + t)).sin() * (1.0 - r2(u(x))).powi(2)
            }),
        ),
        "ring" => (
            Box::new(radial),
            Box::new(move |x| {
                let r = r2(u(x)).sqrt();
                if (0.5..0.75).contains(&r) {
                    1.0
                } else {
                    0.0
                }
            }),
        ),
        "bump_pair" => (
            Box::new(boxed),
            Box::new(move |x| {
                let v = u(x);
                let a = [v[0] + 0.5, v[1]];
                let b = [v[0] - 0.5, v[1]];
                let bump = |z: [f64; 2]| (1.0 - 4.0 * r2(z)).max(0.0).powi(2);
                bump(a) - 0.5 * bump(b)
            }),
        ),
        other => {
            return Err(Error::invalid(format!(
                "unknown builtin `{other}`; expected one of {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    let samples: Vec<(usize, f64, f64)> =
        (0..grid.len()).filter(|&i| inside(grid.point(i))).map(|i| (i, raw(grid.point(i)), 1.0)).collect();
    let fit = project_samples(&grid, &samples, 1)?;
    let mut values = vec![0.0; grid.len()];
    for &(i, v, _) in &samples {
        values[i] = v - fit.eval(grid.point(i));
    }
    let f = SampledFunction::new(grid, values)?;
    let max = f.max_abs();
    if max == 0.0 {
        return Err(Error::Degenerate(format!("builtin `{}` vanishes on this grid", spec.name)));
    }
    Ok(f.scaled(amplitude / max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::moments;

    #[test]
    fn builtins_have_vanishing_moments() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 1.0, if dim == 1 { 1024 } else { 128 }).unwrap();
            for name in BUILTIN_NAMES {
                let f = builtin(g, &BuiltinSpec::named(name)).unwrap();
                assert!(f.check_margin(BOUNDARY_MARGIN_CELLS).is_ok());
                let scale: f64 = f.values().iter().map(|v| v.abs()).sum::<f64>() * g.cell_volume();
                for (a, m) in moments(&f, 1) {
                    assert!(m.abs() < 1e-12 * scale, "{name} {dim}D {a:?}: {m}");
                }
            }
        }
    }

    #[test]
    fn rejects_unknown_and_misplaced() {
        let g = Grid::new(1, 1.0, 256).unwrap();
        assert!(builtin(g, &BuiltinSpec::named("nope")).is_err());
        let mut s = BuiltinSpec::named("haar");
        s.center = Some([0.95, 0.0]);
        assert!(builtin(g, &s).is_err());
    }
}
