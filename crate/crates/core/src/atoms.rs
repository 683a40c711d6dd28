//! (p, ∞)-atoms: balls, moments, validation and a seeded generator.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_power, Grid, LocalFunction, SampledFunction};
use crate::poly::{monomial, monomials, project_samples};
use crate::report::{pass_fail, KvDoc};

/// `floor(n (1/p - 1))`.
pub fn moment_degree(p: f64, dim: usize) -> Result<u32> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1], got {p}")));
    }
    Ok(moment_degree_unchecked(p, dim))
}

/// As [`moment_degree`] without the range check. The small offset keeps
/// exact ratios such as `p = 2/3` from rounding down.
pub(crate) fn moment_degree_unchecked(p: f64, dim: usize) -> u32 {
    (dim as f64 * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Euclidean volume `c_n r^n`.
    pub fn volume(&self, dim: usize) -> f64 {
        if dim == 1 {
            2.0 * self.radius
        } else {
            std::f64::consts::PI * self.radius * self.radius
        }
    }

    pub fn contains(&self, x: [f64; 2], dim: usize) -> bool {
        let d2: f64 = (0..dim).map(|d| (x[d] - self.center[d]).powi(2)).sum();
        d2 <= self.radius * self.radius * (1.0 + 1e-12)
    }

    pub fn inside_box(&self, grid: &Grid) -> bool {
        let l = grid.half_width();
        (0..grid.dim()).all(|d| self.center[d] - self.radius >= -l && self.center[d] + self.radius <= l)
    }

    /// Smallest enclosing ball of a point set (Welzl's algorithm on the
    /// points in the given order).
    pub fn enclosing(points: &[[f64; 2]], dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("no points to enclose"));
        }
        let b = if dim == 1 {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            Ball { center: [0.5 * (lo + hi), 0.0], radius: 0.5 * (hi - lo) }
        } else {
            welzl(points)
        };
        Ball::new(b.center, b.radius.max(f64::MIN_POSITIVE))
    }
}

fn circle2(a: [f64; 2], b: [f64; 2]) -> Ball {
    let c = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    Ball { center: c, radius: dist(c, a) }
}

fn circle3(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<Ball> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = [a[0] + ux, a[1] + uy];
    Some(Ball { center, radius: dist(center, a) })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn covers(b: &Ball, p: [f64; 2]) -> bool {
    dist(b.center, p) <= b.radius * (1.0 + 1e-12) + 1e-300
}

/// Iterative move-to-front Welzl for the plane.
fn welzl(points: &[[f64; 2]]) -> Ball {
    let mut b = Ball { center: points[0], radius: 0.0 };
    for i in 1..points.len() {
        if covers(&b, points[i]) {
            continue;
        }
        b = Ball { center: points[i], radius: 0.0 };
        for j in 0..i {
            if covers(&b, points[j]) {
                continue;
            }
            b = circle2(points[i], points[j]);
            for k in 0..j {
                if !covers(&b, points[k]) {
                    b = circle3(points[i], points[j], points[k]).unwrap_or_else(|| {
                        // Collinear triple: the widest pair spans it.
                        [circle2(points[i], points[j]), circle2(points[i], points[k]), circle2(points[j], points[k])]
                            .into_iter()
                            .max_by(|x, y| x.radius.total_cmp(&y.radius))
                            .unwrap()
                    });
                }
            }
        }
    }
    b
}

/// A candidate (p, ∞)-atom; validity is established by [`validate_atom`].
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub func: LocalFunction,
    pub ball: Ball,
    pub p: f64,
}

impl Atom {
    pub fn grid(&self) -> &Grid {
        self.func.grid()
    }

    pub fn to_sampled(&self) -> SampledFunction {
        self.func.to_sampled()
    }

    /// `||a||_p^p`.
    pub fn lp_power(&self) -> f64 {
        lp_power(self.func.values(), self.grid().cell_volume(), self.p).expect("atom exponent is positive")
    }

    /// Text header (`p`, ball) followed by the window record.
    pub fn write_record<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "HATM 1")?;
        writeln!(w, "p = {:e}", self.p)?;
        writeln!(w, "center = {:e} {:e}", self.ball.center[0], self.ball.center[1])?;
        writeln!(w, "radius = {:e}", self.ball.radius)?;
        self.func.write_record(w)
    }

    pub fn read_record<R: Read>(mut r: R) -> Result<Self> {
        let mut lines = Vec::new();
        for _ in 0..4 {
            let mut line = Vec::new();
            let mut byte = [0u8; 1];
            loop {
                r.read_exact(&mut byte)?;
                if byte[0] == b'\n' {
                    break;
                }
                line.push(byte[0]);
            }
            lines.push(String::from_utf8(line).map_err(|_| Error::Format("atom header is not UTF-8".into()))?);
        }
        if lines[0] != "HATM 1" {
            return Err(Error::Format("bad atom header".into()));
        }
        let value = |l: &str, key: &str| -> Result<Vec<f64>> {
            let rest = l
                .strip_prefix(key)
                .and_then(|s| s.strip_prefix(" = "))
                .ok_or_else(|| Error::Format(format!("expected `{key}` in atom header")))?;
            rest.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad number `{t}`"))))
                .collect()
        };
        let p = value(&lines[1], "p")?[0];
        let c = value(&lines[2], "center")?;
        let radius = value(&lines[3], "radius")?[0];
        let func = LocalFunction::read_record(r)?;
        Ok(Atom { func, ball: Ball::new([c[0], c[1]], radius)?, p })
    }
}

/// `int x^alpha f dx` for all `|alpha| <= max_degree`, monomials evaluated at cell centers.
pub fn moments(f: &SampledFunction, max_degree: u32) -> Vec<([u32; 2], f64)> {
    let g = f.grid();
    let vol = g.cell_volume();
    monomials(g.dim(), max_degree)
        .into_iter()
        .map(|a| {
            let s: f64 = f.values().iter().enumerate().map(|(i, &v)| if v == 0.0 { 0.0 } else { v * monomial(a, g.point(i)) }).sum();
            (a, vol * s)
        })
        .collect()
}

/// Moments of a windowed function about `center`.
pub(crate) fn local_moments(f: &LocalFunction, center: [f64; 2], max_degree: u32) -> Vec<([u32; 2], f64)> {
    let g = f.grid();
    let vol = g.cell_volume();
    let dim = g.dim();
    monomials(dim, max_degree)
        .into_iter()
        .map(|a| {
            let mut s = 0.0;
            for (gi, _, v) in f.iter() {
                if v != 0.0 {
                    let x = g.point(gi);
                    let mut u = [0.0; 2];
                    for d in 0..dim {
                        u[d] = x[d] - center[d];
                    }
                    s += v * monomial(a, u);
                }
            }
            (a, vol * s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub support: bool,
    pub size: bool,
    pub moments: bool,
    pub max_abs: f64,
    pub size_bound: f64,
    /// Largest `|int (x - c)^alpha a| / (||a||_inf |B| r^|alpha|)`.
    pub max_moment_residual: f64,
    pub tol: f64,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.support && self.size && self.moments
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("support", pass_fail(self.support))
            .push("size", pass_fail(self.size))
            .push("moments", pass_fail(self.moments))
            .push("max_abs", format!("{:e}", self.max_abs))
            .push("size_bound", format!("{:e}", self.size_bound))
            .push("max_moment_residual", format!("{:e}", self.max_moment_residual))
            .push("tol", format!("{:e}", self.tol))
            .push("pass", pass_fail(self.pass()));
        d
    }
}

/// Checks support, size and moment conditions. Moments are taken about the
/// ball center and scaled by their natural size.
pub fn validate_atom(a: &Atom, tol: f64) -> ValidationReport {
    let g = *a.grid();
    let dim = g.dim();
    let support = a.func.iter().all(|(gi, _, v)| v == 0.0 || a.ball.contains(g.point(gi), dim));
    let vol = a.ball.volume(dim);
    let size_bound = vol.powf(-1.0 / a.p);
    let max_abs = a.func.max_abs();
    let size = max_abs <= size_bound * (1.0 + tol);
    let degree = moment_degree_unchecked(a.p, dim);
    let mut worst: f64 = 0.0;
    if max_abs > 0.0 {
        for (alpha, m) in local_moments(&a.func, a.ball.center, degree) {
            let scale = max_abs * vol * a.ball.radius.powi((alpha[0] + alpha[1]) as i32);
            worst = worst.max(m.abs() / scale);
        }
    }
    ValidationReport {
        support,
        size,
        moments: worst <= tol,
        max_abs,
        size_bound,
        max_moment_residual: worst,
        tol,
    }
}

/// Seeded random atom: uniform values on the cells lying entirely inside a
/// random ball, moments projected out, rescaled to `||a||_inf = |B|^(-1/p)`.
pub fn random_atom(p: f64, seed: u64, grid: Grid) -> Result<Atom> {
    let degree = moment_degree(p, grid.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.spacing();
    let l = grid.half_width();
    let margin = crate::grid::BOUNDARY_MARGIN_CELLS as f64 * h;
    let r_min = (degree as f64 + 3.0) * h;
    let r_max = (0.25 * l).max(r_min);
    let radius = rng.gen_range(r_min..=r_max);
    let mut center = [0.0; 2];
    for c in center.iter_mut().take(grid.dim()) {
        let reach = l - radius - margin;
        if reach <= 0.0 {
            return Err(Error::precondition("grid too small for a random atom"));
        }
        *c = rng.gen_range(-reach..=reach);
    }
    let ball = Ball::new(center, radius)?;
    atom_on_ball(p, ball, grid, &mut rng, degree)
}

/// Random atom supported on a given ball.
pub fn random_atom_on(p: f64, ball: Ball, seed: u64, grid: Grid) -> Result<Atom> {
    let degree = moment_degree(p, grid.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    atom_on_ball(p, ball, grid, &mut rng, degree)
}

fn atom_on_ball(p: f64, ball: Ball, grid: Grid, rng: &mut ChaCha8Rng, degree: u32) -> Result<Atom> {
    let dim = grid.dim();
    let cells = cells_inside(&ball, &grid);
    let need = (degree as usize + 2).pow(dim as u32);
    if cells.len() < need {
        return Err(Error::Resolution {
            locus: crate::whitney::format_point(&ball.center, dim),
            detail: format!("ball of radius {} holds {} whole cells, need {need}", ball.radius, cells.len()),
        });
    }
    let samples: Vec<(usize, f64, f64)> = cells.iter().map(|&i| (i, rng.gen_range(-1.0..1.0), 1.0)).collect();
    let poly = project_samples(&grid, &samples, degree)?;
    let mut lo = [usize::MAX; 2];
    let mut hi = [0usize; 2];
    for &i in &cells {
        let idx = grid.multi(i);
        for d in 0..2 {
            lo[d] = lo[d].min(idx[d]);
            hi[d] = hi[d].max(idx[d] + 1);
        }
    }
    let mut func = LocalFunction::zeros(grid, lo, [hi[0] - lo[0], hi[1] - lo[1]]);
    for &(i, v, _) in &samples {
        let l = func.local_index(grid.multi(i)).expect("cell lies in window");
        func.values_mut()[l] = v - poly.eval(grid.point(i));
    }
    let max = func.max_abs();
    if max == 0.0 {
        return Err(Error::Degenerate("projected atom vanishes".into()));
    }
    func.scale(ball.volume(dim).powf(-1.0 / p) / max);
    Ok(Atom { func, ball, p })
}

/// Cells whose closed box lies inside the ball.
fn cells_inside(ball: &Ball, grid: &Grid) -> Vec<usize> {
    let dim = grid.dim();
    let h = grid.spacing();
    (0..grid.len())
        .filter(|&i| {
            let x = grid.point(i);
            // Farthest corner from the center.
            let d2: f64 = (0..dim).map(|d| ((x[d] - ball.center[d]).abs() + 0.5 * h).powi(2)).sum();
            d2 <= ball.radius * ball.radius
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, lp_quasinorm};

    #[test]
    fn degrees() {
        assert_eq!(moment_degree(1.0, 1).unwrap(), 0);
        assert_eq!(moment_degree(1.0, 2).unwrap(), 0);
        assert_eq!(moment_degree(0.5, 1).unwrap(), 1);
        assert_eq!(moment_degree(2.0 / 3.0, 2).unwrap(), 1);
        assert_eq!(moment_degree(2.0 / 3.0, 1).unwrap(), 0);
        assert!(moment_degree(0.0, 1).is_err());
        assert!(moment_degree(1.5, 1).is_err());
    }

    #[test]
    fn moment_examples() {
        let g = Grid::new(1, 2.0, 512).unwrap();
        let odd = SampledFunction::from_fn(g, |x| x[0] * (-x[0] * x[0]).exp()).unwrap();
        assert!(moments(&odd, 0)[0].1.abs() < 1e-14);
        let chi = SampledFunction::from_fn(g, |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        assert!((moments(&chi, 1)[1].1 - 0.5).abs() <= g.spacing());
    }

    #[test]
    fn corner_quadrature_agrees() {
        let g = Grid::new(2, 1.0, 128).unwrap();
        let f = |x: [f64; 2]| (2.0 * x[0]).cos() * (1.0 - x[1] * x[1]);
        let centered = moments(&SampledFunction::from_fn(g, f).unwrap(), 2);
        let h = g.spacing();
        for (alpha, m) in centered {
            let mut s = 0.0;
            for i in 0..g.len() {
                let idx = g.multi(i);
                let x = [g.edge(idx[0]), g.edge(idx[1])];
                s += f(x) * monomial(alpha, x);
            }
            assert!((m - s * h * h).abs() < 10.0 * h, "{alpha:?}");
        }
    }

    #[test]
    fn sign_atom_passes_and_indicator_fails() {
        let g = Grid::new(1, 1.0, 256).unwrap();
        let r = 0.25;
        let ball = Ball::new([0.0, 0.0], r).unwrap();
        let v = 1.0 / ball.volume(1);
        let sign = SampledFunction::from_fn(g, |x| if x[0].abs() < r { v * x[0].signum() } else { 0.0 }).unwrap();
        let a = Atom { func: LocalFunction::from_sampled(&sign).unwrap(), ball, p: 1.0 };
        assert!(validate_atom(&a, 1e-12).pass());
        let mut half = a.clone();
        half.func.scale(0.5);
        assert!(validate_atom(&half, 1e-12).pass());
        let chi = SampledFunction::from_fn(g, |x| if x[0].abs() < r { v } else { 0.0 }).unwrap();
        let b = Atom { func: LocalFunction::from_sampled(&chi).unwrap(), ball, p: 1.0 };
        let rep = validate_atom(&b, 1e-9);
        assert!(rep.support && rep.size && !rep.moments);
    }

    #[test]
    fn random_atoms_are_valid_and_reproducible() {
        for (dim, m) in [(1, 512), (2, 64)] {
            let g = Grid::new(dim, 1.0, m).unwrap();
            for p in [1.0, 2.0 / 3.0, 0.5] {
                for seed in 0..100 {
                    let a = random_atom(p, seed, g).unwrap();
                    let rep = validate_atom(&a, 1e-9);
                    assert!(rep.pass(), "dim {dim} p {p} seed {seed}: {rep:?}");
                    assert!(lp_quasinorm(&a.to_sampled(), p).unwrap() <= 1.0 + 1e-12);
                }
            }
            assert_eq!(random_atom(1.0, 7, g).unwrap(), random_atom(1.0, 7, g).unwrap());
        }
    }

    #[test]
    fn p_one_atoms_have_zero_mean() {
        let g = Grid::new(1, 1.0, 1024).unwrap();
        let a = random_atom(1.0, 3, g).unwrap();
        let s = a.to_sampled();
        assert!(integrate(&s).abs() <= 1e-13 * a.func.max_abs());
    }

    #[test]
    fn projection_is_idempotent() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let a = random_atom(0.5, 11, g).unwrap();
        let samples: Vec<_> = a.func.iter().filter(|s| s.2 != 0.0).map(|(gi, _, v)| (gi, v, 1.0)).collect();
        let poly = project_samples(&g, &samples, moment_degree(0.5, 2).unwrap()).unwrap();
        for &(gi, v, _) in &samples {
            assert!(poly.eval(g.point(gi)).abs() <= 1e-12 * v.abs().max(a.func.max_abs()));
        }
    }

    #[test]
    fn too_small_ball_is_a_resolution_error() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let ball = Ball::new([0.0, 0.0], 0.02).unwrap();
        assert!(matches!(random_atom_on(0.5, ball, 1, g), Err(Error::Resolution { .. })));
    }

    #[test]
    fn record_roundtrip() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let a = random_atom(1.0, 5, g).unwrap();
        let mut buf = Vec::new();
        a.write_record(&mut buf).unwrap();
        let b = Atom::read_record(buf.as_slice()).unwrap();
        assert_eq!(a.func, b.func);
        assert_eq!(a.ball, b.ball);
    }

    #[test]
    fn enclosing_balls() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]];
        let b = Ball::enclosing(&pts, 2).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-12 && (b.center[0] - 1.0).abs() < 1e-12);
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]];
        let b = Ball::enclosing(&tri, 2).unwrap();
        for p in tri {
            assert!(covers(&b, p));
        }
        assert!(b.radius < 0.8);
        let b1 = Ball::enclosing(&[[-1.0, 0.0], [3.0, 0.0]], 1).unwrap();
        assert_eq!((b1.center[0], b1.radius), (1.0, 2.0));
    }
}
