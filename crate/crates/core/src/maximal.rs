//! Finite-family approximate grand maximal operator, the H^p quasi-norm and
//! nested level sets `{Mf > 2^j}`.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{convolve_offsets_direct, FftConvolver, OffsetKernel, Spectrum};
use crate::grid::{lp_quasinorm, Grid, SampledFunction};
use crate::report::KvDoc;
use crate::whitney::OpenRegion;

/// Minimum number of profiles in a standard family.
pub const MIN_PROFILES: usize = 3;
/// Minimum number of scales in a standard family.
pub const MIN_SCALES: usize = 8;
/// Relative tolerance of the seminorm check.
pub const SEMINORM_TOLERANCE: f64 = 0.01;
/// Kernel spectra are cached while they fit in this many bytes.
const SPECTRUM_CACHE_BYTES: usize = 256 << 20;

/// Radial profile supported in the closed unit ball, before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `(1 - |x|^2)^power`; of class `C^(power - 1)`.
    PolyBump { power: u32 },
    /// `exp(-alpha |x|^2)` cut off outside the unit ball.
    Bell { alpha: f64 },
}

impl ProfileKind {
    fn raw(&self, r2: f64) -> f64 {
        match *self {
            ProfileKind::PolyBump { power } => {
                if r2 < 1.0 {
                    (1.0 - r2).powi(power as i32)
                } else {
                    0.0
                }
            }
            ProfileKind::Bell { alpha } => {
                if r2 <= 1.0 {
                    (-alpha * r2).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ProfileKind::PolyBump { power } => format!("poly_bump(power={power})"),
            ProfileKind::Bell { alpha } => format!("bell(alpha={alpha})"),
        }
    }

    fn validate(&self, order: u32) -> Result<()> {
        match *self {
            ProfileKind::PolyBump { power } if power <= order => Err(Error::invalid(format!(
                "poly_bump power {power} is not smooth to order {order}; need power > order"
            ))),
            ProfileKind::Bell { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(Error::invalid(format!("bell alpha must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

/// Univariate polynomial, coefficients in increasing degree.
#[derive(Debug, Clone)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        horner(&self.0, x)
    }

    fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }
}

/// Closed-form partial derivative `d^beta` of an unnormalized profile.
enum Derivative {
    /// Dense bivariate polynomial `sum c[i][j] x^i y^j`, valid on the unit ball.
    Poly(Vec<Vec<f64>>),
    /// `p(x) q(y) exp(-alpha |x|^2)` on the unit ball.
    Bell { alpha: f64, px: Poly, py: Poly },
}

impl Derivative {
    fn new(kind: &ProfileKind, dim: usize, beta: [u32; 2]) -> Self {
        match *kind {
            ProfileKind::PolyBump { power } => {
                let mut c = bump_coefficients(power, dim);
                for (axis, &b) in beta.iter().enumerate().take(dim) {
                    for _ in 0..b {
                        c = differentiate(&c, axis);
                    }
                }
                Derivative::Poly(c)
            }
            ProfileKind::Bell { alpha } => {
                // d/dx [p e^{-a x^2}] = (p' - 2 a x p) e^{-a x^2}
                let hermite = |k: u32| {
                    let mut p = Poly(vec![1.0]);
                    for _ in 0..k {
                        let mut next = p.derivative().0;
                        next.resize(p.0.len() + 1, 0.0);
                        for (i, &c) in p.0.iter().enumerate() {
                            next[i + 1] -= 2.0 * alpha * c;
                        }
                        p = Poly(next);
                    }
                    p
                };
                let py = if dim == 2 { hermite(beta[1]) } else { Poly(vec![1.0]) };
                Derivative::Bell { alpha, px: hermite(beta[0]), py }
            }
        }
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 > 1.0 {
            return 0.0;
        }
        match self {
            Derivative::Poly(c) => {
                c.iter().rev().fold(0.0, |acc, row| acc * x[0] + horner(row, x[1]))
            }
            Derivative::Bell { alpha, px, py } => px.eval(x[0]) * py.eval(x[1]) * (-alpha * r2).exp(),
        }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Coefficients of `(1 - x^2 - y^2)^k` (or `(1 - x^2)^k` in 1D).
fn bump_coefficients(k: u32, dim: usize) -> Vec<Vec<f64>> {
    let deg = 2 * k as usize;
    let mut c = vec![vec![0.0; if dim == 2 { deg + 1 } else { 1 }]; deg + 1];
    let binom = |n: u32, r: u32| -> f64 { (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    // (1 - s)^k = sum_b binom(k, b) (-s)^b, s = x^2 + y^2 = sum_c binom(b, c) x^{2(b-c)} y^{2c}
    for b in 0..=k {
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        if dim == 1 {
            c[2 * b as usize][0] += sign * binom(k, b);
        } else {
            for cc in 0..=b {
                c[2 * (b - cc) as usize][2 * cc as usize] += sign * binom(k, b) * binom(b, cc);
            }
        }
    }
    c
}

fn differentiate(c: &[Vec<f64>], axis: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; c[0].len()]; c.len()];
    for (i, row) in c.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if axis == 0 && i > 0 {
                out[i - 1][j] += i as f64 * v;
            } else if axis == 1 && j > 0 {
                out[i][j - 1] += j as f64 * v;
            }
        }
    }
    out
}

fn multi_indices(dim: usize, order: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for total in 0..=order {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for a in (0..=total).rev() {
                out.push([a, total - a]);
            }
        }
    }
    out
}

/// `sum_{|beta| <= N} sup_x (1 + |x|)^N |d^beta phi(x)|` of the unnormalized
/// profile, with the sup taken over a lattice of step `step` on the first
/// quadrant of the unit ball (all profiles are even in each coordinate).
pub fn seminorm(kind: &ProfileKind, dim: usize, order: u32, step: f64) -> f64 {
    let k = (1.0 / step).ceil() as usize;
    let mut pts = Vec::new();
    for a in 0..=k {
        let x = (a as f64 * step).min(1.0);
        if dim == 1 {
            pts.push([x, 0.0]);
        } else {
            for b in 0..=k {
                let y = (b as f64 * step).min(1.0);
                if x * x + y * y <= 1.0 {
                    pts.push([x, y]);
                }
            }
        }
    }
    multi_indices(dim, order)
        .par_iter()
        .map(|&beta| {
            let d = Derivative::new(kind, dim, beta);
            pts.iter()
                .map(|&x| (1.0 + (x[0] * x[0] + x[1] * x[1]).sqrt()).powi(order as i32) * d.eval(x).abs())
                .fold(0.0f64, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// A profile scaled so that its seminorm of order `N` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub kind: ProfileKind,
    /// Multiplier applied to the raw profile.
    pub scale: f64,
    /// Seminorm of the normalized profile on the verification lattice.
    pub verified_seminorm: f64,
}

impl Mollifier {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.scale * self.kind.raw(x[0] * x[0] + x[1] * x[1])
    }

    /// `t^-n phi(x / t)`.
    pub fn dilate(&self, x: [f64; 2], t: f64, dim: usize) -> f64 {
        self.eval([x[0] / t, x[1] / t]) / t.powi(dim as i32)
    }
}

/// `N = 2 (floor(n (1/p - 1)) + 1) + n + 1`, or 5 when `p` is unknown.
pub fn default_order(dim: usize, p: Option<f64>) -> u32 {
    match p {
        Some(p) => 2 * (crate::atoms::moment_degree_unchecked(p, dim) + 1) + dim as u32 + 1,
        None => 5,
    }
}

/// Geometric scales `2h, 2h sqrt(2), ...` up to `L`.
pub fn default_scales(grid: &Grid) -> Vec<f64> {
    let t0 = 2.0 * grid.spacing();
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = t0 * 2f64.powf(0.5 * k as f64);
        if t > grid.half_width() * (1.0 + 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

/// Default profiles for order `N`: two polynomial bumps and a truncated bell.
pub fn default_profiles(order: u32) -> Vec<ProfileKind> {
    vec![
        ProfileKind::PolyBump { power: order + 1 },
        ProfileKind::PolyBump { power: order + 3 },
        ProfileKind::Bell { alpha: 8.0 },
    ]
}

/// Serializable description of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub order: u32,
    pub profiles: Vec<ProfileKind>,
    /// Explicit scales; `None` selects the default geometric list.
    pub scales: Option<Vec<f64>>,
}

/// Finite family of normalized profiles and scales defining the operator.
#[derive(Clone)]
pub struct MollifierFamily {
    grid: Grid,
    order: u32,
    members: Vec<Mollifier>,
    scales: Vec<f64>,
    engine: Arc<OnceLock<Engine>>,
}

impl std::fmt::Debug for MollifierFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MollifierFamily")
            .field("grid", &self.grid)
            .field("order", &self.order)
            .field("members", &self.members)
            .field("scales", &self.scales)
            .finish()
    }
}

impl MollifierFamily {
    /// Standard family for exponent `p`: default order, profiles and scales.
    pub fn standard(grid: Grid, p: f64) -> Result<Self> {
        crate::atoms::moment_degree(p, grid.dim())?;
        let order = default_order(grid.dim(), Some(p));
        let fam = Self::new(grid, order, default_profiles(order), default_scales(&grid))?;
        fam.check_standard_size()?;
        Ok(fam)
    }

    pub fn from_config(grid: Grid, cfg: &FamilyConfig) -> Result<Self> {
        let scales = cfg.scales.clone().unwrap_or_else(|| default_scales(&grid));
        Self::new(grid, cfg.order, cfg.profiles.clone(), scales)
    }

    /// Normalizes each profile on a coarse lattice and verifies the seminorm
    /// on a finer one.
    pub fn new(grid: Grid, order: u32, profiles: Vec<ProfileKind>, scales: Vec<f64>) -> Result<Self> {
        if profiles.is_empty() || scales.is_empty() {
            return Err(Error::invalid("a family needs at least one profile and one scale"));
        }
        for t in &scales {
            if !(t.is_finite() && *t > 0.0) {
                return Err(Error::invalid(format!("scales must be positive, got {t}")));
            }
        }
        let dim = grid.dim();
        let (coarse, fine) = if dim == 1 { (1.0 / 500.0, 1.0 / 4000.0) } else { (1.0 / 60.0, 1.0 / 240.0) };
        let mut members = Vec::with_capacity(profiles.len());
        for kind in profiles {
            kind.validate(order)?;
            let scale = 1.0 / seminorm(&kind, dim, order, coarse);
            let verified = scale * seminorm(&kind, dim, order, fine);
            if verified > 1.0 + SEMINORM_TOLERANCE {
                return Err(Error::invariant(format!(
                    "profile {} has seminorm {verified} after normalization",
                    kind.name()
                )));
            }
            members.push(Mollifier { kind, scale, verified_seminorm: verified });
        }
        Ok(Self { grid, order, members, scales, engine: Arc::new(OnceLock::new()) })
    }

    fn check_standard_size(&self) -> Result<()> {
        if self.members.len() < MIN_PROFILES || self.scales.len() < MIN_SCALES {
            return Err(Error::invalid(format!(
                "family has {} profiles and {} scales; need at least {MIN_PROFILES} and {MIN_SCALES}",
                self.members.len(),
                self.scales.len()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn members(&self) -> &[Mollifier] {
        &self.members
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig {
            order: self.order,
            profiles: self.members.iter().map(|m| m.kind).collect(),
            scales: Some(self.scales.clone()),
        }
    }

    /// Same profiles and scale ratio on a different grid.
    pub fn on_grid(&self, grid: Grid) -> Result<Self> {
        Self::new(grid, self.order, self.members.iter().map(|m| m.kind).collect(), default_scales(&grid))
    }

    pub fn description(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("operator", "approximate grand maximal (finite family)");
        d.push("schwartz_order", self.order);
        d.push("profiles", self.members.len());
        for (i, m) in self.members.iter().enumerate() {
            d.push(format!("profile.{i}"), m.kind.name());
            d.push(format!("profile.{i}.scale"), m.scale);
            d.push(format!("profile.{i}.seminorm"), m.verified_seminorm);
        }
        d.push("scales", self.scales.len());
        d.push("scale_min", self.scales.iter().copied().fold(f64::INFINITY, f64::min));
        d.push("scale_max", self.scales.iter().copied().fold(0.0, f64::max));
        d
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for p in 0..self.members.len() {
            for s in 0..self.scales.len() {
                v.push((p, s));
            }
        }
        v
    }

    fn kernel(&self, profile: usize, scale: usize) -> OffsetKernel {
        let m = &self.members[profile];
        let t = self.scales[scale];
        let h = self.grid.spacing();
        let radius = ((t / h).ceil() as usize).min(self.grid.points_per_axis());
        let dim = self.grid.dim();
        OffsetKernel::from_fn(dim, radius, |o| m.dilate([o[0] as f64 * h, o[1] as f64 * h], t, dim))
    }

    fn max_radius(&self) -> usize {
        (0..self.scales.len()).map(|s| self.kernel(0, s).radius()).max().unwrap_or(0)
    }

    fn engine(&self) -> &Engine {
        self.engine.get_or_init(|| Engine::new(self))
    }
}

struct Engine {
    conv: FftConvolver,
    spectra: Option<Vec<Spectrum>>,
}

impl Engine {
    fn new(fam: &MollifierFamily) -> Self {
        let conv = FftConvolver::new(fam.grid, fam.max_radius());
        let pairs = fam.pairs();
        let bytes = pairs.len() * conv.padded_len().pow(fam.grid.dim() as u32) * 16;
        let spectra = (bytes <= SPECTRUM_CACHE_BYTES)
            .then(|| pairs.par_iter().map(|&(p, s)| conv.kernel_spectrum(&fam.kernel(p, s))).collect());
        Self { conv, spectra }
    }
}

fn check_grid(f: &SampledFunction, fam: &MollifierFamily) -> Result<()> {
    if f.grid() != fam.grid() {
        Err(Error::GridMismatch)
    } else {
        Ok(())
    }
}

/// `phi_t * f` for one member of the family, by FFT.
pub fn member_convolution(f: &SampledFunction, fam: &MollifierFamily, profile: usize, scale: usize) -> Result<SampledFunction> {
    check_grid(f, fam)?;
    let e = fam.engine();
    let spec = e.conv.forward(f.values());
    let vol = fam.grid.cell_volume();
    let out = convolve_member(fam, e, &spec, profile, scale, vol);
    SampledFunction::new(fam.grid, out)
}

/// `phi_t * f` for one member by direct summation.
pub fn member_convolution_direct(
    f: &SampledFunction,
    fam: &MollifierFamily,
    profile: usize,
    scale: usize,
) -> Result<SampledFunction> {
    check_grid(f, fam)?;
    SampledFunction::new(fam.grid, convolve_offsets_direct(&fam.grid, f.values(), &fam.kernel(profile, scale)))
}

fn convolve_member(fam: &MollifierFamily, e: &Engine, spec: &Spectrum, p: usize, s: usize, vol: f64) -> Vec<f64> {
    let raw = match &e.spectra {
        Some(all) => e.conv.apply_raw(spec, &all[p * fam.scales.len() + s]),
        None => e.conv.apply_raw(spec, &e.conv.kernel_spectrum(&fam.kernel(p, s))),
    };
    raw.into_iter().map(|v| v * vol).collect()
}

/// `Mf(x) = max_{phi, t} |phi_t * f|(x)` over the family.
pub fn grand_maximal(f: &SampledFunction, fam: &MollifierFamily) -> Result<SampledFunction> {
    check_grid(f, fam)?;
    if f.is_zero() {
        return Ok(SampledFunction::zeros(fam.grid));
    }
    let e = fam.engine();
    let spec = e.conv.forward(f.values());
    let vol = fam.grid.cell_volume();
    let parts: Vec<Vec<f64>> =
        fam.pairs().par_iter().map(|&(p, s)| convolve_member(fam, e, &spec, p, s, vol)).collect();
    let mut out = vec![0.0f64; fam.grid.len()];
    for part in &parts {
        for (o, v) in out.iter_mut().zip(part) {
            *o = o.max(v.abs());
        }
    }
    SampledFunction::new(fam.grid, out)
}

/// Reference [`grand_maximal`] by direct summation over every member.
pub fn grand_maximal_direct(f: &SampledFunction, fam: &MollifierFamily) -> Result<SampledFunction> {
    check_grid(f, fam)?;
    let mut out = vec![0.0f64; fam.grid.len()];
    for (p, s) in fam.pairs() {
        let c = convolve_offsets_direct(&fam.grid, f.values(), &fam.kernel(p, s));
        for (o, v) in out.iter_mut().zip(&c) {
            *o = o.max(v.abs());
        }
    }
    SampledFunction::new(fam.grid, out)
}

/// `||Mf||_p`.
pub fn hp_quasinorm(f: &SampledFunction, p: f64, fam: &MollifierFamily) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1], got {p}")));
    }
    lp_quasinorm(&grand_maximal(f, fam)?, p)
}

/// Regions `O_j = {Mf > 2^j}` for consecutive `j`.
#[derive(Debug, Clone)]
pub struct LevelSetFamily {
    j_min: i32,
    regions: Vec<Arc<OpenRegion>>,
    /// Whether `O_{j_max + 1}` is known to be empty.
    top_empty: bool,
}

impl LevelSetFamily {
    /// Builds a family from explicit regions, checking nestedness.
    pub fn from_regions(j_min: i32, regions: Vec<OpenRegion>, top_empty: bool) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::precondition("level range is empty"));
        }
        for w in regions.windows(2) {
            if !w[1].is_subset_of(&w[0]) {
                return Err(Error::precondition("level sets are not nested"));
            }
        }
        Ok(Self { j_min, regions: regions.into_iter().map(Arc::new).collect(), top_empty })
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_min + self.regions.len() as i32 - 1
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        self.j_min..=self.j_max()
    }

    pub fn region(&self, j: i32) -> &OpenRegion {
        &self.regions[(j - self.j_min) as usize]
    }

    pub fn region_arc(&self, j: i32) -> &Arc<OpenRegion> {
        &self.regions[(j - self.j_min) as usize]
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn top_is_empty(&self) -> bool {
        self.top_empty
    }

    /// Drops levels above `j_max`; the level above is no longer known empty.
    pub fn truncate_top(&mut self, j_max: i32) {
        if j_max < self.j_max() {
            self.regions.truncate((j_max - self.j_min + 1).max(0) as usize);
            self.top_empty = false;
        }
    }

    /// Drops levels below `j_min`.
    pub fn truncate_bottom(&mut self, j_min: i32) {
        if j_min > self.j_min {
            let k = ((j_min - self.j_min) as usize).min(self.regions.len());
            self.regions.drain(..k);
            self.j_min = j_min;
        }
    }
}

/// `O_j` for `j in [j_min, j_max]`, clipped to levels whose region is
/// nonempty and proper.
pub fn level_sets(mf: &SampledFunction, j_min: i32, j_max: i32) -> Result<LevelSetFamily> {
    if mf.values().iter().any(|&v| v < 0.0) {
        return Err(Error::precondition("maximal function must be nonnegative"));
    }
    if j_min > j_max {
        return Err(Error::invalid(format!("empty level range [{j_min}, {j_max}]")));
    }
    let grid = *mf.grid();
    let max = mf.max_abs();
    let min = mf.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = j_min;
    let mut hi = j_max;
    // Nonempty iff max > 2^j; proper iff min <= 2^j.
    while hi >= lo && max <= 2f64.powi(hi) {
        hi -= 1;
    }
    while lo <= hi && min > 2f64.powi(lo) {
        lo += 1;
    }
    if lo > hi {
        return Err(Error::precondition(format!(
            "no level in [{j_min}, {j_max}] gives a nonempty proper set (max Mf = {max:e})"
        )));
    }
    let mut regions = Vec::new();
    for j in lo..=hi {
        let t = 2f64.powi(j);
        regions.push(OpenRegion::new(grid, mf.values().iter().map(|&v| v > t).collect())?);
    }
    let top_empty = max <= 2f64.powi(hi + 1);
    LevelSetFamily::from_regions(lo, regions, top_empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    fn haar(grid: Grid) -> SampledFunction {
        SampledFunction::from_fn(grid, |x| {
            if (-0.25..0.0).contains(&x[0]) {
                1.0
            } else if (0.0..0.25).contains(&x[0]) {
                -1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn orders_and_scales() {
        assert_eq!(default_order(1, Some(1.0)), 4);
        assert_eq!(default_order(2, Some(2.0 / 3.0)), 7);
        assert_eq!(default_order(1, None), 5);
        let g = Grid::new(1, 1.0, 64).unwrap();
        let s = default_scales(&g);
        assert_eq!(s.len(), 9);
        assert!((s[0] - 2.0 * g.spacing()).abs() < 1e-15);
        assert!((s[8] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        for dim in [1, 2] {
            for kind in [ProfileKind::PolyBump { power: 6 }, ProfileKind::Bell { alpha: 8.0 }] {
                let x = [0.31, if dim == 2 { -0.22 } else { 0.0 }];
                let e = 1e-5;
                for axis in 0..dim {
                    let mut beta = [0, 0];
                    beta[axis] = 1;
                    let d1 = Derivative::new(&kind, dim, beta).eval(x);
                    let d0 = Derivative::new(&kind, dim, [0, 0]);
                    let mut xp = x;
                    let mut xm = x;
                    xp[axis] += e;
                    xm[axis] -= e;
                    let fd = (d0.eval(xp) - d0.eval(xm)) / (2.0 * e);
                    assert!((d1 - fd).abs() < 1e-6, "{kind:?} dim {dim}: {d1} vs {fd}");
                    assert!((d0.eval(x) - kind.raw(x[0] * x[0] + x[1] * x[1])).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn standard_family_is_normalized() {
        for (dim, p) in [(1, 1.0), (2, 2.0 / 3.0)] {
            let g = Grid::new(dim, 1.0, 64).unwrap();
            let fam = MollifierFamily::standard(g, p).unwrap();
            assert!(fam.members().len() >= MIN_PROFILES && fam.scales().len() >= MIN_SCALES);
            for m in fam.members() {
                assert!(m.verified_seminorm <= 1.0 + SEMINORM_TOLERANCE);
                assert!(m.verified_seminorm >= 0.99);
            }
        }
    }

    #[test]
    fn rejects_rough_bump() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        assert!(MollifierFamily::new(g, 4, vec![ProfileKind::PolyBump { power: 4 }], vec![0.5]).is_err());
    }

    #[test]
    fn single_member_matches_direct_convolution() {
        let g = Grid::new(1, 1.0, 256).unwrap();
        let fam = MollifierFamily::new(g, 4, vec![ProfileKind::PolyBump { power: 5 }], vec![0.3]).unwrap();
        let f = haar(g);
        let mf = grand_maximal(&f, &fam).unwrap();
        let direct = member_convolution_direct(&f, &fam, 0, 0).unwrap();
        for (a, b) in mf.values().iter().zip(direct.values()) {
            assert!((a - b.abs()).abs() <= 1e-12 * mf.max_abs());
        }
    }

    #[test]
    fn fft_maximal_matches_direct_and_golden() {
        let g = Grid::new(1, 1.0, 256).unwrap();
        let fam = MollifierFamily::standard(g, 1.0).unwrap();
        let f = haar(g);
        let fast = grand_maximal(&f, &fam).unwrap();
        let slow = grand_maximal_direct(&f, &fam).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() <= 1e-12 * slow.max_abs());
        }
        let q = lp_quasinorm(&slow, 1.0).unwrap();
        // Recorded from the direct oracle.
        let golden = 2.2383622236454357e-4_f64;
        assert!((q / golden - 1.0).abs() < 1e-9, "H^1 quasi-norm {q}");
    }

    #[test]
    fn homogeneity_and_zero() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let fam = MollifierFamily::standard(g, 1.0).unwrap();
        let f = SampledFunction::from_fn(g, |x| (3.0 * x[0]).sin() * (1.0 - x[1] * x[1]).max(0.0) * (x[0].abs() < 0.8) as u8 as f64).unwrap();
        let a = grand_maximal(&f, &fam).unwrap();
        let b = grand_maximal(&f.scaled(-3.0), &fam).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((3.0 * x - y).abs() <= 1e-12 * b.max_abs());
        }
        assert!(grand_maximal(&SampledFunction::zeros(g), &fam).unwrap().is_zero());
        assert_eq!(hp_quasinorm(&SampledFunction::zeros(g), 1.0, &fam).unwrap(), 0.0);
        assert!(hp_quasinorm(&f, 1.5, &fam).is_err());
    }

    #[test]
    fn profiles_have_positive_integral() {
        let g = Grid::new(1, 1.0, 1024).unwrap();
        let fam = MollifierFamily::standard(g, 1.0).unwrap();
        for m in fam.members() {
            let f = SampledFunction::from_fn(g, |x| m.eval(x)).unwrap();
            assert!(integrate(&f) > 0.0);
        }
    }

    #[test]
    fn plateau_level_sets() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        let mf = SampledFunction::from_fn(g, |x| if x[0].abs() < 0.5 { 5.0 } else { 0.0 }).unwrap();
        let fam = level_sets(&mf, -3, 6).unwrap();
        assert_eq!((fam.j_min(), fam.j_max()), (-3, 2));
        assert!(fam.top_is_empty());
        assert!(level_sets(&SampledFunction::zeros(g), -3, 3).is_err());
    }
}
