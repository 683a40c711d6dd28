//! Uniform grids on the box `[-L, L]^n` (n = 1 or 2) and functions sampled on them.
//!
//! Cell `i` along an axis is the half-open interval `[-L + i h, -L + (i + 1) h)`
//! and functions are sampled at cell centers. In two dimensions values are
//! stored row-major with axis 0 varying slowest: `flat = i0 * m + i1`.
//!
//! All reductions run sequentially in index order, so results are
//! bit-reproducible.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{FftConvolver, OffsetKernel};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS_PER_AXIS: usize = 64;

/// Cells along the box boundary on which input functions must vanish.
pub const BOUNDARY_MARGIN_CELLS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= {MIN_POINTS_PER_AXIS}, got {points_per_axis}"
            )));
        }
        Ok(Self { dim, half_width, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Cell width `h = 2L / m`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Extent per axis; the unused second axis of a 1D grid has extent 1.
    pub fn shape(&self) -> [usize; 2] {
        let m = self.points_per_axis;
        if self.dim == 1 {
            [m, 1]
        } else {
            [m, m]
        }
    }

    pub fn flat(&self, idx: [usize; 2]) -> usize {
        idx[0] * self.shape()[1] + idx[1]
    }

    pub fn multi(&self, flat: usize) -> [usize; 2] {
        let s = self.shape()[1];
        [flat / s, flat % s]
    }

    /// Lower edge of cell `i` along any axis.
    pub fn edge(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Center of cell `i` along any axis.
    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Cell-center coordinates of a flat index (second entry is 0 in 1D).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let idx = self.multi(flat);
        let mut x = [0.0; 2];
        for d in 0..self.dim {
            x[d] = self.center(idx[d]);
        }
        x
    }

    /// Index of the cell containing coordinate `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.spacing()).floor();
        i.clamp(0.0, (self.points_per_axis - 1) as f64) as usize
    }
}

/// Values of a function at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    /// Indicator of the half-open box `[lo, hi)`: a cell belongs to it when its
    /// lower corner does, so grid-aligned boxes integrate exactly.
    pub fn indicator_box(grid: Grid, lo: [f64; 2], hi: [f64; 2]) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let idx = grid.multi(i);
                let inside = (0..grid.dim()).all(|d| {
                    let e = grid.edge(idx[d]);
                    e >= lo[d] && e < hi[d]
                });
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: [usize; 2]) -> f64 {
        self.values[self.grid.flat(idx)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Checks that the function vanishes on a boundary margin of `cells` cells.
    pub fn check_margin(&self, cells: usize) -> Result<()> {
        let m = self.grid.points_per_axis();
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let idx = self.grid.multi(i);
            let near = (0..self.grid.dim()).any(|d| idx[d] < cells || idx[d] + cells >= m);
            if near {
                return Err(Error::precondition(format!(
                    "function is nonzero within {cells} cells of the boundary (cell {idx:?})"
                )));
            }
        }
        Ok(())
    }

    /// Writes the binary record described in the repository README.
    pub fn write_record<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SAMPLED_MAGIC)?;
        w.write_all(&RECORD_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&self.grid.half_width().to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_record<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SAMPLED_MAGIC {
            return Err(Error::Format("bad magic for sampled-function record".into()));
        }
        let grid = read_header(&mut r)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(read_f64(&mut r)?);
        }
        Self::new(grid, values)
    }
}

const SAMPLED_MAGIC: &[u8; 4] = b"HSFR";
const WINDOW_MAGIC: &[u8; 4] = b"HSFW";
const RECORD_VERSION: u32 = 1;

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R) -> Result<Grid> {
    let version = read_u32(r)?;
    if version != RECORD_VERSION {
        return Err(Error::Format(format!("unsupported record version {version}")));
    }
    let dim = read_u32(r)? as usize;
    let _reserved = read_u32(r)?;
    let half_width = read_f64(r)?;
    let m = read_u64(r)? as usize;
    Grid::new(dim, half_width, m)
}

/// A function that vanishes outside a rectangular window of grid cells.
///
/// Localized pieces of the decomposition (partition weights, bad parts,
/// atoms) live in windows instead of full-grid arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFunction {
    grid: Grid,
    lo: [usize; 2],
    shape: [usize; 2],
    values: Vec<f64>,
}

impl LocalFunction {
    pub fn zeros(grid: Grid, lo: [usize; 2], shape: [usize; 2]) -> Self {
        debug_assert!((0..2).all(|d| lo[d] + shape[d] <= grid.shape()[d]));
        Self { grid, lo, shape, values: vec![0.0; shape[0] * shape[1]] }
    }

    pub fn from_values(grid: Grid, lo: [usize; 2], shape: [usize; 2], values: Vec<f64>) -> Result<Self> {
        if values.len() != shape[0] * shape[1] || (0..2).any(|d| lo[d] + shape[d] > grid.shape()[d]) {
            return Err(Error::invalid("window does not fit the grid"));
        }
        Ok(Self { grid, lo, shape, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lo(&self) -> [usize; 2] {
        self.lo
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates over `(global flat index, local index, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let gs = self.grid.shape()[1];
        (0..self.values.len()).map(move |l| {
            let (a, b) = (l / self.shape[1], l % self.shape[1]);
            ((self.lo[0] + a) * gs + self.lo[1] + b, l, self.values[l])
        })
    }

    pub fn local_index(&self, idx: [usize; 2]) -> Option<usize> {
        let a = idx[0].checked_sub(self.lo[0])?;
        let b = idx[1].checked_sub(self.lo[1])?;
        (a < self.shape[0] && b < self.shape[1]).then(|| a * self.shape[1] + b)
    }

    pub fn get(&self, idx: [usize; 2]) -> f64 {
        self.local_index(idx).map_or(0.0, |l| self.values[l])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `target += c * self` on the full grid.
    pub fn add_into(&self, c: f64, target: &mut [f64]) {
        for (g, _, v) in self.iter() {
            target[g] += c * v;
        }
    }

    pub fn to_sampled(&self) -> SampledFunction {
        let mut values = vec![0.0; self.grid.len()];
        self.add_into(1.0, &mut values);
        SampledFunction { grid: self.grid, values }
    }

    /// Smallest window holding every nonzero value of `f`, or `None` if `f` is zero.
    pub fn from_sampled(f: &SampledFunction) -> Option<Self> {
        let g = *f.grid();
        let mut lo = [usize::MAX; 2];
        let mut hi = [0usize; 2];
        for (i, &v) in f.values().iter().enumerate() {
            if v != 0.0 {
                let idx = g.multi(i);
                for d in 0..2 {
                    lo[d] = lo[d].min(idx[d]);
                    hi[d] = hi[d].max(idx[d] + 1);
                }
            }
        }
        if lo[0] == usize::MAX {
            return None;
        }
        let shape = [hi[0] - lo[0], hi[1] - lo[1]];
        let mut out = Self::zeros(g, lo, shape);
        for l in 0..out.values.len() {
            let idx = [lo[0] + l / shape[1], lo[1] + l % shape[1]];
            out.values[l] = f.get(idx);
        }
        Some(out)
    }

    /// Windowed variant of the sampled-function record.
    pub fn write_record<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(WINDOW_MAGIC)?;
        w.write_all(&RECORD_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&self.grid.half_width().to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis() as u64).to_le_bytes())?;
        for d in 0..2 {
            w.write_all(&(self.lo[d] as u64).to_le_bytes())?;
        }
        for d in 0..2 {
            w.write_all(&(self.shape[d] as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_record<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != WINDOW_MAGIC {
            return Err(Error::Format("bad magic for window record".into()));
        }
        let grid = read_header(&mut r)?;
        let lo = [read_u64(&mut r)? as usize, read_u64(&mut r)? as usize];
        let shape = [read_u64(&mut r)? as usize, read_u64(&mut r)? as usize];
        let n = shape[0]
            .checked_mul(shape[1])
            .filter(|&n| n <= grid.len())
            .ok_or_else(|| Error::Format("window larger than grid".into()))?;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(read_f64(&mut r)?);
        }
        Self::from_values(grid, lo, shape, values)
    }
}

/// Riemann sum `h^n * sum(values)`.
pub fn integrate(f: &SampledFunction) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

/// `(h^n * sum |f|^p)^(1/p)`; a norm for `p >= 1`, a quasi-norm below.
pub fn lp_quasinorm(f: &SampledFunction, p: f64) -> Result<f64> {
    Ok(lp_power(f.values(), f.grid.cell_volume(), p)?.powf(1.0 / p))
}

/// `h^n * sum |v|^p`, the p-th power of the quasi-norm.
pub fn lp_power(values: &[f64], cell_volume: f64, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::invalid(format!("exponent must be positive, got {p}")));
    }
    let s: f64 = if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok(cell_volume * s)
}

pub fn sup_norm(f: &SampledFunction) -> f64 {
    f.max_abs()
}

/// Kernel cell `c` along an axis stands for the displacement `(c - m/2) h`,
/// i.e. the kernel is sampled at the lower edges of its cells and the cell
/// `[0, h)` carries the origin.
pub(crate) fn kernel_to_offsets(kernel: &SampledFunction) -> OffsetKernel {
    let g = kernel.grid();
    let m = g.points_per_axis();
    let r = m / 2;
    let dim = g.dim();
    OffsetKernel::from_fn(dim, r, |off| {
        let mut idx = [0usize; 2];
        for d in 0..dim {
            let c = off[d] + r as i64;
            if c < 0 || c >= m as i64 {
                return 0.0;
            }
            idx[d] = c as usize;
        }
        kernel.get(idx)
    })
}

/// `(f * k)(x_i) = h^n * sum_j f(x_j) k(x_i - x_j)` with zero extension
/// outside the box. Computed by FFT; [`convolve_direct`] is the reference
/// definition it must match.
pub fn convolve(f: &SampledFunction, kernel: &SampledFunction) -> Result<SampledFunction> {
    if f.grid != kernel.grid {
        return Err(Error::GridMismatch);
    }
    let k = kernel_to_offsets(kernel);
    let conv = FftConvolver::new(f.grid, k.radius());
    let spec = conv.forward(f.values());
    let mut out = conv.apply_raw(&spec, &conv.kernel_spectrum(&k));
    let vol = f.grid.cell_volume();
    for v in &mut out {
        *v *= vol;
    }
    SampledFunction::new(f.grid, out)
}

/// Direct double-loop evaluation of [`convolve`].
pub fn convolve_direct(f: &SampledFunction, kernel: &SampledFunction) -> Result<SampledFunction> {
    if f.grid != kernel.grid {
        return Err(Error::GridMismatch);
    }
    let k = kernel_to_offsets(kernel);
    let out = crate::fft::convolve_offsets_direct(&f.grid, f.values(), &k);
    SampledFunction::new(f.grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(m: usize) -> Grid {
        Grid::new(1, 1.0, m).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 1.0, 64).is_err());
        assert!(Grid::new(1, 0.0, 64).is_err());
        assert!(Grid::new(1, 1.0, 32).is_err());
        assert!(Grid::new(1, 1.0, 96).is_err());
        let g = Grid::new(2, 2.0, 64).unwrap();
        assert_eq!(g.spacing(), 4.0 / 64.0);
        assert_eq!(g.len(), 4096);
        assert_eq!(g.flat(g.multi(1234)), 1234);
    }

    #[test]
    fn integrate_zero_and_odd() {
        let g = grid1(128);
        assert_eq!(integrate(&SampledFunction::zeros(g)), 0.0);
        let odd = SampledFunction::from_fn(g, |x| x[0]).unwrap();
        assert!(integrate(&odd).abs() < 1e-14);
    }

    #[test]
    fn indicator_of_unit_interval_integrates_to_one() {
        // L = 2, m = 256: h = 1/64 divides 1.
        let g = Grid::new(1, 2.0, 256).unwrap();
        let f = SampledFunction::indicator_box(g, [0.0, 0.0], [1.0, 0.0]);
        assert_eq!(integrate(&f), 1.0);
    }

    #[test]
    fn quasinorm_of_indicator() {
        // |E| = 4 on a grid with h = 1/16: (4)^(1/p) = 16 at p = 1/2.
        let g = Grid::new(2, 4.0, 128).unwrap();
        let f = SampledFunction::indicator_box(g, [0.0, 0.0], [2.0, 2.0]);
        assert_eq!(integrate(&f), 4.0);
        let q = lp_quasinorm(&f, 0.5).unwrap();
        assert!((q - 16.0).abs() < 1e-12);
        assert!(lp_quasinorm(&f, 0.0).is_err());
        assert!(lp_quasinorm(&f, -1.0).is_err());
        assert_eq!(lp_quasinorm(&SampledFunction::zeros(g), 0.7).unwrap(), 0.0);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = grid1(64);
        let h = g.spacing();
        let mut k = SampledFunction::zeros(g);
        k.values_mut()[32] = 1.0 / h;
        let f = SampledFunction::from_fn(g, |x| (3.0 * x[0]).sin() * (1.0 - x[0] * x[0])).unwrap();
        let out = convolve(&f, &k).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn convolution_rejects_grid_mismatch() {
        let f = SampledFunction::zeros(grid1(64));
        let k = SampledFunction::zeros(grid1(128));
        assert!(matches!(convolve(&f, &k), Err(Error::GridMismatch)));
    }

    #[test]
    fn margin_check() {
        let g = grid1(64);
        let mut f = SampledFunction::zeros(g);
        f.values_mut()[2] = 1.0;
        assert!(f.check_margin(2).is_ok());
        f.values_mut()[1] = 1.0;
        assert!(f.check_margin(2).is_err());
    }

    #[test]
    fn sampled_record_roundtrip() {
        let g = Grid::new(2, 1.5, 64).unwrap();
        let f = SampledFunction::from_fn(g, |x| x[0] - 2.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        f.write_record(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * g.len());
        let back = SampledFunction::read_record(&buf[..]).unwrap();
        assert_eq!(back, f);
        buf[0] = b'X';
        assert!(SampledFunction::read_record(&buf[..]).is_err());
    }

    #[test]
    fn window_roundtrip() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let mut f = SampledFunction::zeros(g);
        f.values_mut()[g.flat([10, 20])] = 1.5;
        f.values_mut()[g.flat([12, 18])] = -2.0;
        let w = LocalFunction::from_sampled(&f).unwrap();
        assert_eq!(w.lo(), [10, 18]);
        assert_eq!(w.shape(), [3, 3]);
        assert_eq!(w.to_sampled(), f);
        let mut buf = Vec::new();
        w.write_record(&mut buf).unwrap();
        assert_eq!(LocalFunction::read_record(&buf[..]).unwrap(), w);
    }
}
