//! Zero-padded FFT convolution of grid functions with offset-indexed kernels.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Kernel values at integer displacements `-radius..=radius` (in cells) per axis.
#[derive(Debug, Clone)]
pub(crate) struct OffsetKernel {
    dim: usize,
    radius: usize,
    values: Vec<f64>,
}

impl OffsetKernel {
    pub(crate) fn from_fn(dim: usize, radius: usize, f: impl Fn([i64; 2]) -> f64) -> Self {
        let side = 2 * radius + 1;
        let r = radius as i64;
        let mut values = Vec::with_capacity(side.pow(dim as u32));
        if dim == 1 {
            for a in -r..=r {
                values.push(f([a, 0]));
            }
        } else {
            for a in -r..=r {
                for b in -r..=r {
                    values.push(f([a, b]));
                }
            }
        }
        Self { dim, radius, values }
    }

    pub(crate) fn radius(&self) -> usize {
        self.radius
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn at(&self, off: [i64; 2]) -> f64 {
        let r = self.radius as i64;
        if self.dim == 1 {
            self.values[(off[0] + r) as usize]
        } else {
            self.values[(off[0] + r) as usize * self.side() + (off[1] + r) as usize]
        }
    }

    fn offsets(&self) -> impl Iterator<Item = ([i64; 2], f64)> + '_ {
        let r = self.radius as i64;
        let side = self.side();
        self.values.iter().enumerate().map(move |(i, &v)| {
            if self.dim == 1 {
                ([i as i64 - r, 0], v)
            } else {
                ([(i / side) as i64 - r, (i % side) as i64 - r], v)
            }
        })
    }
}

/// Smallest 5-smooth integer `>= n`.
fn smooth_size(n: usize) -> usize {
    let mut k = n.max(1);
    loop {
        let mut x = k;
        for p in [2, 3, 5] {
            while x.is_multiple_of(p) {
                x /= p;
            }
        }
        if x == 1 {
            return k;
        }
        k += 1;
    }
}

pub(crate) type Spectrum = Vec<Complex<f64>>;

/// FFT engine for one grid and one maximal kernel radius.
///
/// The padded length `n >= m + radius` keeps circular wrap-around out of the
/// output window `[0, m)`.
#[derive(Clone)]
pub(crate) struct FftConvolver {
    grid: Grid,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftConvolver {
    pub(crate) fn new(grid: Grid, radius: usize) -> Self {
        let n = smooth_size(grid.points_per_axis() + radius);
        let mut planner = FftPlanner::new();
        Self { grid, n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub(crate) fn padded_len(&self) -> usize {
        self.n
    }

    fn transform(&self, buf: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        if self.grid.dim() == 1 {
            plan.process_with_scratch(buf, &mut scratch);
        } else {
            plan.process_with_scratch(buf, &mut scratch);
            transpose(buf, n);
            plan.process_with_scratch(buf, &mut scratch);
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Spectrum {
        let m = self.grid.points_per_axis();
        let n = self.n;
        let mut buf = vec![Complex::default(); n.pow(self.grid.dim() as u32)];
        if self.grid.dim() == 1 {
            for i in 0..m {
                buf[i].re = values[i];
            }
        } else {
            for i in 0..m {
                for j in 0..m {
                    buf[i * n + j].re = values[i * m + j];
                }
            }
        }
        self.transform(&mut buf, &self.fwd);
        buf
    }

    pub(crate) fn kernel_spectrum(&self, k: &OffsetKernel) -> Spectrum {
        assert!(self.grid.points_per_axis() + k.radius() <= self.n, "kernel radius exceeds padding");
        let n = self.n as i64;
        let mut buf = vec![Complex::default(); self.n.pow(self.grid.dim() as u32)];
        for (off, v) in k.offsets() {
            if v == 0.0 {
                continue;
            }
            let a = off[0].rem_euclid(n) as usize;
            if self.grid.dim() == 1 {
                buf[a].re += v;
            } else {
                let b = off[1].rem_euclid(n) as usize;
                buf[a * self.n + b].re += v;
            }
        }
        self.transform(&mut buf, &self.fwd);
        buf
    }

    /// Unscaled `sum_j f_j k_{i-j}` on the output window.
    pub(crate) fn apply_raw(&self, f: &Spectrum, k: &Spectrum) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = f.iter().zip(k).map(|(a, b)| a * b).collect();
        let n = self.n;
        let dim = self.grid.dim();
        let mut scratch = vec![Complex::default(); self.inv.get_inplace_scratch_len()];
        if dim == 1 {
            self.inv.process_with_scratch(&mut buf, &mut scratch);
        } else {
            self.inv.process_with_scratch(&mut buf, &mut scratch);
            transpose(&mut buf, n);
            self.inv.process_with_scratch(&mut buf, &mut scratch);
        }
        let norm = 1.0 / (n.pow(dim as u32) as f64);
        let m = self.grid.points_per_axis();
        if dim == 1 {
            buf[..m].iter().map(|c| c.re * norm).collect()
        } else {
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                out.extend(buf[i * n..i * n + m].iter().map(|c| c.re * norm));
            }
            out
        }
    }
}

fn transpose(buf: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Reference `h^n * sum_j f_j k_{i-j}` by direct summation.
pub(crate) fn convolve_offsets_direct(grid: &Grid, values: &[f64], k: &OffsetKernel) -> Vec<f64> {
    let m = grid.points_per_axis() as i64;
    let r = k.radius() as i64;
    let vol = grid.cell_volume();
    let mut out = vec![0.0; grid.len()];
    if grid.dim() == 1 {
        for i in 0..m {
            let mut s = 0.0;
            for j in (i - r).max(0)..=(i + r).min(m - 1) {
                s += values[j as usize] * k.at([i - j, 0]);
            }
            out[i as usize] = vol * s;
        }
    } else {
        for i0 in 0..m {
            for i1 in 0..m {
                let mut s = 0.0;
                for j0 in (i0 - r).max(0)..=(i0 + r).min(m - 1) {
                    for j1 in (i1 - r).max(0)..=(i1 + r).min(m - 1) {
                        s += values[(j0 * m + j1) as usize] * k.at([i0 - j0, i1 - j1]);
                    }
                }
                out[(i0 * m + i1) as usize] = vol * s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(96), 96);
        assert_eq!(smooth_size(97), 100);
        assert_eq!(smooth_size(6145), 6250);
    }

    #[test]
    fn fft_matches_direct_2d_asymmetric_kernel() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let k = OffsetKernel::from_fn(2, 5, |o| (o[0] as f64 + 0.3 * o[1] as f64).sin());
        let conv = FftConvolver::new(g, k.radius());
        let mut fast = conv.apply_raw(&conv.forward(&values), &conv.kernel_spectrum(&k));
        for v in &mut fast {
            *v *= g.cell_volume();
        }
        let slow = convolve_offsets_direct(&g, &values, &k);
        let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}
