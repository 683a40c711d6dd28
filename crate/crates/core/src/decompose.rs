//! Calderón–Zygmund levels, the functions `A_k^j`, and the (p, ∞)-atomic
//! decomposition built from them.
//!
//! At level `j` the Whitney cubes of `O_j = {Mf > 2^j}` carry a smooth
//! partition of unity `zeta_k`. Each resolved cube (side at least
//! [`RESOLUTION_FLOOR_CELLS`] cells) gets a local polynomial fit `P_k` and a
//! bad part `b_k = (f - P_k) zeta_k`; narrower cubes keep `b_k = 0`. With the
//! good part `g^j = f - sum_k b_k`,
//!
//! ```text
//! A_k^j = b_k^j - sum_i [ b_i^{j+1} zeta_k^j - P_{i,k} zeta_i^{j+1} ]
//! ```
//!
//! where `P_{i,k}` fits `(f - P_i^{j+1}) zeta_k^j` with weight `zeta_i^{j+1}`.
//! Then `sum_k A_k^j = g^{j+1} - g^j`, so the sum over `j >= J` equals
//! `f - g^J` exactly.

use std::sync::Arc;

use rayon::prelude::*;

use crate::atoms::{moment_degree, validate_atom, Atom, Ball};
use crate::error::{Error, Result};
use crate::grid::{lp_power, Grid, LocalFunction, SampledFunction, BOUNDARY_MARGIN_CELLS};
use crate::maximal::{grand_maximal, level_sets, LevelSetFamily, MollifierFamily};
use crate::poly::{monomial, monomials, project_samples, Polynomial};
use crate::report::{pass_fail, KvDoc, Table};
use crate::whitney::{self, neighbor_bound, DyadicCube, OpenRegion, WhitneyFamily, RESOLUTION_FLOOR_CELLS};

/// `S(t) = 6t^5 - 15t^4 + 10t^3`, a C² step from 0 to 1.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// One-dimensional factor of `eta`: 1 on `[a, b]`, 0 outside `(a - e, b + e)`.
fn plateau(x: f64, a: f64, b: f64, e: f64) -> f64 {
    if x < a {
        smoothstep((x - (a - e)) / e)
    } else if x > b {
        smoothstep(((b + e) - x) / e)
    } else {
        1.0
    }
}

/// Closed box of `Q*` in domain coordinates.
fn dilated_box(grid: &Grid, c: &DyadicCube, eps: f64) -> ([f64; 2], [f64; 2]) {
    let lo = c.lower(grid);
    let l = c.side(grid);
    let e = 0.5 * eps * l;
    let mut a = [0.0; 2];
    let mut b = [0.0; 2];
    for d in 0..grid.dim() {
        a[d] = lo[d] - e;
        b[d] = lo[d] + l + e;
    }
    (a, b)
}

/// Cells whose centers lie in the open box `(lo, hi)`: `(first, shape)`.
fn cell_window(grid: &Grid, lo: [f64; 2], hi: [f64; 2]) -> ([usize; 2], [usize; 2]) {
    let h = grid.spacing();
    let l = grid.half_width();
    let m = grid.points_per_axis() as f64;
    let mut first = [0usize; 2];
    let mut shape = [1usize; 2];
    for d in 0..grid.dim() {
        let a = (((lo[d] + l) / h - 0.5).floor() + 1.0).clamp(0.0, m);
        let b = ((hi[d] + l) / h - 0.5).ceil().clamp(0.0, m);
        first[d] = a as usize;
        shape[d] = (b - a).max(0.0) as usize;
    }
    (first, shape)
}

fn in_closed_box(x: [f64; 2], b: &([f64; 2], [f64; 2]), dim: usize) -> bool {
    (0..dim).all(|d| b.0[d] <= x[d] && x[d] <= b.1[d])
}

/// Smooth partition of unity subordinate to the dilated Whitney cubes.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    region: Arc<OpenRegion>,
    weights: Vec<LocalFunction>,
    cover_offsets: Vec<u32>,
    cover_ids: Vec<u32>,
}

impl PartitionOfUnity {
    pub fn region(&self) -> &OpenRegion {
        &self.region
    }

    /// `zeta_k` on its window.
    pub fn weight(&self, k: usize) -> &LocalFunction {
        &self.weights[k]
    }

    pub fn weights(&self) -> &[LocalFunction] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices `k` with `zeta_k > 0` at a cell, ascending.
    pub fn covering(&self, flat: usize) -> &[u32] {
        &self.cover_ids[self.cover_offsets[flat] as usize..self.cover_offsets[flat + 1] as usize]
    }

    /// Largest number of weights positive at one cell.
    pub fn max_overlap(&self) -> usize {
        self.cover_offsets.windows(2).map(|w| (w[1] - w[0]) as usize).max().unwrap_or(0)
    }

    /// `sum_k zeta_k` on the full grid.
    pub fn sum(&self) -> SampledFunction {
        let g = *self.region.grid();
        let mut v = vec![0.0; g.len()];
        for w in &self.weights {
            w.add_into(1.0, &mut v);
        }
        SampledFunction::new(g, v).expect("finite weights")
    }
}

/// `eta_k` is a tensor product of C² plateaus equal to 1 on `Q_k` and 0 on
/// `∂Q_k*`; `zeta_k = eta_k / sum_i eta_i` on the region and 0 elsewhere.
pub fn partition_of_unity(family: &WhitneyFamily) -> Result<PartitionOfUnity> {
    let grid = *family.grid();
    let dim = grid.dim();
    let region = family.region_arc().clone();
    let eps = family.epsilon();
    let mut weights: Vec<LocalFunction> = family
        .cubes()
        .par_iter()
        .map(|c| {
            let lo = c.lower(&grid);
            let l = c.side(&grid);
            let e = 0.5 * eps * l;
            let (a, b) = dilated_box(&grid, c, eps);
            let (first, shape) = cell_window(&grid, a, b);
            let mut w = LocalFunction::zeros(grid, first, shape);
            let ids: Vec<(usize, usize)> = w.iter().map(|(g, l, _)| (g, l)).collect();
            for (gi, li) in ids {
                if !region.is_member(gi) {
                    continue;
                }
                let x = grid.point(gi);
                let mut eta = 1.0;
                for d in 0..dim {
                    eta *= plateau(x[d], lo[d], lo[d] + l, e);
                }
                w.values_mut()[li] = eta;
            }
            w
        })
        .collect();
    let mut total = vec![0.0; grid.len()];
    for w in &weights {
        w.add_into(1.0, &mut total);
    }
    for i in 0..grid.len() {
        if region.is_member(i) && total[i] <= 0.0 {
            return Err(Error::invariant(format!(
                "partition of unity vanishes at region cell {:?}",
                grid.multi(i)
            )));
        }
    }
    weights.par_iter_mut().for_each(|w| {
        let ids: Vec<(usize, usize, f64)> = w.iter().collect();
        for (gi, li, v) in ids {
            if v != 0.0 {
                w.values_mut()[li] = v / total[gi];
            }
        }
    });
    let mut counts = vec![0u32; grid.len() + 1];
    for w in &weights {
        for (gi, _, v) in w.iter() {
            if v > 0.0 {
                counts[gi + 1] += 1;
            }
        }
    }
    for i in 0..grid.len() {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut ids = vec![0u32; counts[grid.len()] as usize];
    for (k, w) in weights.iter().enumerate() {
        for (gi, _, v) in w.iter() {
            if v > 0.0 {
                ids[fill[gi] as usize] = k as u32;
                fill[gi] += 1;
            }
        }
    }
    Ok(PartitionOfUnity { region, weights, cover_offsets: counts, cover_ids: ids })
}

/// Calderón–Zygmund decomposition of `f` at one level.
#[derive(Debug, Clone)]
pub struct CZLevel {
    pub j: i32,
    pub whitney: WhitneyFamily,
    pub pou: PartitionOfUnity,
    /// Whether each cube is wide enough to carry a local fit.
    pub resolved: Vec<bool>,
    pub projections: Vec<Polynomial>,
    pub bad_parts: Vec<LocalFunction>,
    pub good_part: SampledFunction,
}

impl CZLevel {
    pub fn resolved_count(&self) -> usize {
        self.resolved.iter().filter(|&&r| r).count()
    }
}

fn is_resolved(family: &WhitneyFamily, k: usize, floor: f64) -> bool {
    family.side_cells(k) >= floor
}

/// Decomposes `f = g + sum_k b_k` over the Whitney cubes of `region`.
pub fn cz_level(f: &SampledFunction, region: &OpenRegion, degree: u32) -> Result<CZLevel> {
    cz_level_on(f, whitney::whitney_decompose(region)?, degree, 0, RESOLUTION_FLOOR_CELLS as f64)
}

/// As [`cz_level`] with a precomputed family; `j` only labels the result.
/// Cubes narrower than `floor` cells keep `b_k = 0`, as do cubes below
/// [`RESOLUTION_FLOOR_CELLS`] whose fit is degenerate.
pub fn cz_level_on(f: &SampledFunction, family: WhitneyFamily, degree: u32, j: i32, floor: f64) -> Result<CZLevel> {
    if f.grid() != family.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *f.grid();
    let pou = partition_of_unity(&family)?;
    let parts: Vec<Option<(Polynomial, LocalFunction)>> = (0..family.len())
        .into_par_iter()
        .map(|k| {
            let w = pou.weight(k);
            if !is_resolved(&family, k, floor) {
                return Ok(None);
            }
            let samples: Vec<(usize, f64, f64)> =
                w.iter().filter(|s| s.2 > 0.0).map(|(gi, _, z)| (gi, f.values()[gi], z)).collect();
            let p = match project_samples(&grid, &samples, degree) {
                Ok(p) => p,
                Err(Error::Degenerate(_)) if !is_resolved(&family, k, RESOLUTION_FLOOR_CELLS as f64) => {
                    return Ok(None)
                }
                Err(e) => return Err(locate(e, &family, k)),
            };
            let mut b = LocalFunction::zeros(grid, w.lo(), w.shape());
            for (gi, li, z) in w.iter() {
                if z > 0.0 {
                    b.values_mut()[li] = (f.values()[gi] - p.eval(grid.point(gi))) * z;
                }
            }
            Ok(Some((p, b)))
        })
        .collect::<Result<_>>()?;
    let mut g = f.values().to_vec();
    let mut projections = Vec::with_capacity(parts.len());
    let mut bad_parts = Vec::with_capacity(parts.len());
    let mut resolved = Vec::with_capacity(parts.len());
    for (k, part) in parts.into_iter().enumerate() {
        resolved.push(part.is_some());
        let (p, b) = part.unwrap_or_else(|| {
            (Polynomial::zero(grid.dim(), degree), LocalFunction::zeros(grid, pou.weight(k).lo(), [0, 0]))
        });
        b.add_into(-1.0, &mut g);
        projections.push(p);
        bad_parts.push(b);
    }
    Ok(CZLevel {
        j,
        whitney: family,
        pou,
        resolved,
        projections,
        bad_parts,
        good_part: SampledFunction::new(grid, g)?,
    })
}

fn locate(e: Error, family: &WhitneyFamily, k: usize) -> Error {
    match e {
        Error::Degenerate(msg) => {
            let c = family.cubes()[k].center(family.grid());
            Error::Degenerate(format!("{msg} (cube at {})", whitney::format_point(&c, family.grid().dim())))
        }
        other => other,
    }
}

/// Largest relative moment residual `|sum v u^a| / sum |v u^a|` of a windowed
/// function, in coordinates centered at `center` and scaled by `scale`.
pub fn relative_moment_residual(v: &LocalFunction, center: [f64; 2], scale: f64, degree: u32) -> f64 {
    let g = v.grid();
    let dim = g.dim();
    let mut worst: f64 = 0.0;
    for a in monomials(dim, degree) {
        let mut s = 0.0;
        let mut t = 0.0;
        for (gi, _, x) in v.iter() {
            if x == 0.0 {
                continue;
            }
            let p = g.point(gi);
            let mut u = [0.0; 2];
            for d in 0..dim {
                u[d] = (p[d] - center[d]) / scale;
            }
            let q = x * monomial(a, u);
            s += q;
            t += q.abs();
        }
        if t > 0.0 {
            worst = worst.max(s.abs() / t);
        }
    }
    worst
}

/// Relative size below which a term is treated as rounding noise.
pub const NEGLIGIBLE: f64 = 1e-13;

/// Checks `f = g + sum b_k` and the moment conditions of every bad part
/// above rounding level.
/// Returns `(max |f - g - sum b| / ||f||_inf, max relative moment residual)`.
pub fn check_cz_level(f: &SampledFunction, level: &CZLevel, degree: u32) -> (f64, f64) {
    let grid = f.grid();
    let mut sum = level.good_part.values().to_vec();
    for b in &level.bad_parts {
        b.add_into(1.0, &mut sum);
    }
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    let err = sum.iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    let worst = level
        .bad_parts
        .par_iter()
        .enumerate()
        .filter(|(_, b)| b.max_abs() > NEGLIGIBLE * scale)
        .map(|(k, b)| {
            let c = level.whitney.cubes()[k];
            relative_moment_residual(b, c.center(grid), 0.5 * c.side(grid), degree)
        })
        .reduce(|| 0.0, f64::max);
    (err, worst)
}

/// The functions `A_k^j` of one level together with the fine cubes feeding each.
#[derive(Debug, Clone)]
pub struct LevelTerms {
    pub a: Vec<LocalFunction>,
    /// Fine cube indices `i` contributing to each `A_k`, ascending.
    pub partners: Vec<Vec<usize>>,
    /// Largest `|sum_k P_{i,k}|` relative to `max |f - P_i|` on `supp zeta_i`.
    pub projection_sum_residual: f64,
}

/// Builds `A_k^j` from level `j` and level `j + 1` (`None` when `O_{j+1}` is empty).
pub fn build_a(f: &SampledFunction, coarse: &CZLevel, fine: Option<&CZLevel>, degree: u32) -> Result<LevelTerms> {
    let grid = *f.grid();
    let kc = coarse.whitney.len();
    // Contributions c_{i,k} = b_i zeta_k - P_{i,k} zeta_i on the window of zeta_i.
    let mut contrib: Vec<Vec<(usize, LocalFunction)>> = vec![Vec::new(); kc];
    let mut proj_residual: f64 = 0.0;
    if let Some(fine) = fine {
        if fine.whitney.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let per_fine: Vec<(Vec<(usize, LocalFunction)>, f64)> = (0..fine.whitney.len())
            .into_par_iter()
            .map(|i| {
                if !fine.resolved[i] {
                    return Ok((Vec::new(), 0.0));
                }
                let zi = fine.pou.weight(i);
                let pi = &fine.projections[i];
                let cells: Vec<(usize, usize, f64, f64)> = zi
                    .iter()
                    .filter(|s| s.2 > 0.0)
                    .map(|(gi, li, z)| (gi, li, z, f.values()[gi] - pi.eval(grid.point(gi))))
                    .collect();
                let mut ks: Vec<u32> = cells.iter().flat_map(|c| coarse.pou.covering(c.0).iter().copied()).collect();
                ks.sort_unstable();
                ks.dedup();
                let mut out = Vec::with_capacity(ks.len());
                let mut psum = vec![0.0; cells.len()];
                for &k in &ks {
                    let zk = coarse.pou.weight(k as usize);
                    let samples: Vec<(usize, f64, f64)> = cells
                        .iter()
                        .map(|&(gi, _, z, r)| (gi, r * zk.get(grid.multi(gi)), z))
                        .collect();
                    let pik = project_samples(&grid, &samples, degree).map_err(|e| locate(e, &fine.whitney, i))?;
                    let mut c = LocalFunction::zeros(grid, zi.lo(), zi.shape());
                    for (n, &(gi, li, z, r)) in cells.iter().enumerate() {
                        let pv = pik.eval(grid.point(gi));
                        psum[n] += pv;
                        c.values_mut()[li] = r * z * zk.get(grid.multi(gi)) - pv * z;
                    }
                    out.push((k as usize, c));
                }
                let rmax = cells.iter().map(|c| c.3.abs()).fold(0.0, f64::max);
                let pmax = psum.iter().map(|v| v.abs()).fold(0.0, f64::max);
                Ok((out, if rmax > 0.0 { pmax / rmax } else { 0.0 }))
            })
            .collect::<Result<_>>()?;
        for (i, (list, r)) in per_fine.into_iter().enumerate() {
            proj_residual = proj_residual.max(r);
            for (k, c) in list {
                contrib[k].push((i, c));
            }
        }
    }
    let built: Vec<(LocalFunction, Vec<usize>)> = contrib
        .into_par_iter()
        .enumerate()
        .map(|(k, parts)| {
            let bk = &coarse.bad_parts[k];
            let zk = coarse.pou.weight(k);
            let mut lo = zk.lo();
            let mut hi = [zk.lo()[0] + zk.shape()[0], zk.lo()[1] + zk.shape()[1]];
            for (_, c) in &parts {
                for d in 0..2 {
                    lo[d] = lo[d].min(c.lo()[d]);
                    hi[d] = hi[d].max(c.lo()[d] + c.shape()[d]);
                }
            }
            let shape = [hi[0] - lo[0], hi[1] - lo[1]];
            let mut a = LocalFunction::zeros(grid, lo, shape);
            let local = |a: &LocalFunction, gi: usize| a.local_index(grid.multi(gi)).expect("window covers part");
            for (gi, _, v) in bk.iter() {
                let l = local(&a, gi);
                a.values_mut()[l] += v;
            }
            for (_, c) in &parts {
                for (gi, _, v) in c.iter() {
                    if v != 0.0 {
                        let l = local(&a, gi);
                        a.values_mut()[l] -= v;
                    }
                }
            }
            polish_moments(&mut a, degree);
            (a, parts.iter().map(|(i, _)| *i).collect())
        })
        .collect();
    let (a, partners) = built.into_iter().unzip();
    Ok(LevelTerms { a, partners, projection_sum_residual: proj_residual })
}

/// Removes the rounding-level moments left by cancellation in
/// `b_k - sum_i c_{i,k}` with a unit-weight fit on the nonzero cells.
fn polish_moments(a: &mut LocalFunction, degree: u32) {
    let grid = *a.grid();
    let samples: Vec<(usize, f64, f64)> = a.iter().filter(|s| s.2 != 0.0).map(|(gi, _, v)| (gi, v, 1.0)).collect();
    let Ok(q) = project_samples(&grid, &samples, degree) else {
        return;
    };
    let ids: Vec<(usize, usize, f64)> = a.iter().filter(|s| s.2 != 0.0).collect();
    for (gi, li, v) in ids {
        a.values_mut()[li] = v - q.eval(grid.point(gi));
    }
}

/// How the level range `[j_min, j_max]` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPolicy {
    /// Number of levels below the top one.
    pub span: u32,
    /// Smallest Whitney cube side, in cells, that carries a local fit.
    pub min_side_cells: f64,
    /// Fixed bounds; `None` selects them from `Mf`.
    pub j_min: Option<i32>,
    pub j_max: Option<i32>,
}

impl Default for LevelPolicy {
    fn default() -> Self {
        Self { span: 40, min_side_cells: RESOLUTION_FLOOR_CELLS as f64, j_min: None, j_max: None }
    }
}

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub policy: LevelPolicy,
    pub epsilon: f64,
    /// Tolerance for atom validation.
    pub atom_tol: f64,
    /// Terms with `||A||_inf` below this fraction of `||f||_inf` are rounding noise and dropped.
    pub negligible: f64,
    pub keep_atoms: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            policy: LevelPolicy::default(),
            epsilon: whitney::DEFAULT_EPSILON,
            atom_tol: 1e-10,
            negligible: NEGLIGIBLE,
            keep_atoms: true,
        }
    }
}

/// One term `lambda a` of the decomposition.
#[derive(Debug, Clone)]
pub struct Term {
    pub j: i32,
    pub k: usize,
    pub cube: DyadicCube,
    pub lambda: f64,
    /// `||A_k^j||_inf`.
    pub a_sup: f64,
    pub ball: Ball,
    /// The atom itself; absent when atoms were not kept.
    pub atom: Option<Atom>,
}

/// Per-level diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub j: i32,
    pub region_cells: usize,
    pub cubes: usize,
    pub resolved_cubes: usize,
    pub terms: usize,
    pub dropped: usize,
    pub max_a_over_2j: f64,
    /// `max_x sum_k |A_k(x)| / 2^j`.
    pub sum_abs_over_2j: f64,
    /// Largest number of nonzero `A_k` at one cell.
    pub a_overlap: usize,
    pub pou_overlap: usize,
    pub telescoping_error: f64,
    pub cz_error: f64,
    pub bad_moment_residual: f64,
    pub projection_sum_residual: f64,
    pub support_ok: bool,
    /// `sum_k |A_k^j| = 0` off `O_j`.
    pub vanishes_off_level: bool,
    /// `||g^j||_s`.
    pub good_norm: f64,
}

/// Aggregate pass/fail information for a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionChecks {
    pub atoms_checked: usize,
    pub atoms_failed: usize,
    pub max_atom_moment_residual: f64,
    pub max_atom_size_excess: f64,
    pub max_telescoping_error: f64,
    pub max_cz_error: f64,
    pub max_bad_moment_residual: f64,
    pub support_ok: bool,
    pub pou_overlap_ok: bool,
    /// `sum_k |A_k^j| <= measured_c 2^j chi_{O_j}` at every cell.
    pub domination_ok: bool,
    /// `max_x sum_{j,k} |A| / sum_j 2^j chi_{O_j \ O_{j+1}}`.
    pub chain_constant: f64,
    pub chain_ok: bool,
}

impl DecompositionChecks {
    pub fn invariants_pass(&self) -> bool {
        self.atoms_failed == 0
            && self.max_telescoping_error <= 1e-10
            && self.max_cz_error <= 1e-10
            && self.max_bad_moment_residual <= 1e-10
            && self.support_ok
            && self.pou_overlap_ok
            && self.domination_ok
            && self.chain_ok
    }
}

/// Result of [`atomic_decomposition`].
#[derive(Debug, Clone)]
pub struct AtomicDecomposition {
    pub grid: Grid,
    pub p: f64,
    pub s: f64,
    pub degree: u32,
    pub family: KvDoc,
    pub j_min: i32,
    pub j_max: i32,
    pub terms: Vec<Term>,
    /// `max_{j,x} sum_k |A_k^j(x)| / 2^j`, the smallest `c` with
    /// `sum_k |A_k^j| <= c 2^j chi_{O_j}`; it also bounds `|A_k^j| / 2^j`.
    pub measured_c: f64,
    /// `max_{j,k} ||A_k^j||_inf / 2^j`.
    pub sup_c: f64,
    pub sum_lambda_p: f64,
    pub hp_norm_p: f64,
    pub f_norm_s: f64,
    /// `||f - sum_{j >= J} lambda a||_s` for `J = j_max, ..., j_min`.
    pub errors: Vec<(i32, f64)>,
    pub levels: Vec<LevelDiagnostics>,
    pub checks: DecompositionChecks,
    pub lemma4: Lemma4Report,
}

impl AtomicDecomposition {
    /// `sum |lambda|^p / ||f||_{H^p}^p`.
    pub fn c_lambda(&self) -> f64 {
        self.sum_lambda_p / self.hp_norm_p
    }

    /// Error of the full computed range.
    pub fn reconstruction_floor(&self) -> f64 {
        self.errors.last().map_or(0.0, |e| e.1)
    }

    pub fn relative_floor(&self) -> f64 {
        if self.f_norm_s > 0.0 {
            self.reconstruction_floor() / self.f_norm_s
        } else {
            0.0
        }
    }

    pub fn manifest(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("p", self.p)
            .push("s", self.s)
            .push("moment_degree", self.degree)
            .push("dim", self.grid.dim())
            .push("half_width", self.grid.half_width())
            .push("points_per_axis", self.grid.points_per_axis())
            .push("j_min", self.j_min)
            .push("j_max", self.j_max)
            .push("terms", self.terms.len())
            .push("measured_c", format!("{:e}", self.measured_c))
            .push("sup_c", format!("{:e}", self.sup_c))
            .push("sum_lambda_p", format!("{:e}", self.sum_lambda_p))
            .push("hp_norm_p", format!("{:e}", self.hp_norm_p))
            .push("c_lambda", format!("{:e}", self.c_lambda()))
            .push("f_norm_s", format!("{:e}", self.f_norm_s))
            .push("reconstruction_floor", format!("{:e}", self.reconstruction_floor()))
            .push("relative_floor", format!("{:e}", self.relative_floor()));
        let c = &self.checks;
        d.push("atoms_checked", c.atoms_checked)
            .push("atoms_failed", c.atoms_failed)
            .push("max_atom_moment_residual", format!("{:e}", c.max_atom_moment_residual))
            .push("max_atom_size_excess", format!("{:e}", c.max_atom_size_excess))
            .push("max_telescoping_error", format!("{:e}", c.max_telescoping_error))
            .push("max_cz_error", format!("{:e}", c.max_cz_error))
            .push("max_bad_moment_residual", format!("{:e}", c.max_bad_moment_residual))
            .push("support", pass_fail(c.support_ok))
            .push("pou_overlap", pass_fail(c.pou_overlap_ok))
            .push("domination", pass_fail(c.domination_ok))
            .push("chain_constant", format!("{:e}", c.chain_constant))
            .push("chain", pass_fail(c.chain_ok))
            .push("invariants", pass_fail(c.invariants_pass()));
        d.extend_prefixed("lemma4", &self.lemma4.to_kv());
        d.extend_prefixed("family", &self.family);
        d
    }

    /// One row per term.
    pub fn diagnostics(&self) -> Table {
        let mut t = Table::new([
            "j", "k", "level", "side", "lambda", "a_sup", "ball_volume", "ball_radius", "ball_x", "ball_y", "cube_x",
            "cube_y",
        ]);
        for term in &self.terms {
            let lo = term.cube.lower(&self.grid);
            t.push_row([
                term.j.to_string(),
                term.k.to_string(),
                term.cube.level.to_string(),
                format!("{:e}", term.cube.side(&self.grid)),
                format!("{:e}", term.lambda),
                format!("{:e}", term.a_sup),
                format!("{:e}", term.ball.volume(self.grid.dim())),
                format!("{:e}", term.ball.radius),
                format!("{:e}", term.ball.center[0]),
                format!("{:e}", term.ball.center[1]),
                format!("{:e}", lo[0]),
                format!("{:e}", lo[1]),
            ]);
        }
        t
    }

    pub fn level_table(&self) -> Table {
        let mut t = Table::new([
            "j",
            "region_cells",
            "cubes",
            "resolved_cubes",
            "terms",
            "max_a_over_2j",
            "sum_abs_over_2j",
            "telescoping_error",
            "good_norm",
        ]);
        for l in &self.levels {
            t.push_row([
                l.j.to_string(),
                l.region_cells.to_string(),
                l.cubes.to_string(),
                l.resolved_cubes.to_string(),
                l.terms.to_string(),
                format!("{:e}", l.max_a_over_2j),
                format!("{:e}", l.sum_abs_over_2j),
                format!("{:e}", l.telescoping_error),
                format!("{:e}", l.good_norm),
            ]);
        }
        t
    }

    /// Reconstruction error against the number of levels included.
    pub fn error_table(&self) -> Table {
        let mut t = Table::new(["J", "levels", "error", "relative_error"]);
        for (n, &(j, e)) in self.errors.iter().enumerate() {
            let rel = if self.f_norm_s > 0.0 { e / self.f_norm_s } else { 0.0 };
            t.push_row([j.to_string(), (n + 1).to_string(), format!("{e:e}"), format!("{rel:e}")]);
        }
        t
    }

    /// Writes the manifest, tables and one record per atom into `dir`.
    pub fn write_dir(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("atoms"))?;
        std::fs::write(dir.join("manifest.txt"), self.manifest().render())?;
        std::fs::write(dir.join("terms.csv"), self.diagnostics().render())?;
        std::fs::write(dir.join("levels.csv"), self.level_table().render())?;
        std::fs::write(dir.join("reconstruction.csv"), self.error_table().render())?;
        for (n, term) in self.terms.iter().enumerate() {
            if let Some(a) = &term.atom {
                let mut buf = Vec::new();
                a.write_record(&mut buf)?;
                std::fs::write(dir.join("atoms").join(format!("{n:06}_j{}_k{}.atom", term.j, term.k)), buf)?;
            }
        }
        Ok(())
    }
}

/// Picks `[j_min, j_max]`: the top level is the highest one whose Whitney
/// family has a resolved cube; `j_min` lies `span` levels lower, raised to
/// the lowest level whose set is proper.
pub fn choose_levels(mf: &SampledFunction, policy: &LevelPolicy) -> Result<LevelSetFamily> {
    let max = mf.max_abs();
    if max == 0.0 {
        return Err(Error::precondition("maximal function vanishes; f must be nonzero"));
    }
    let min = mf.values().iter().copied().fold(f64::INFINITY, f64::min);
    let top = max.log2().ceil() as i32;
    let low = if min > 0.0 { min.log2().floor() as i32 } else { top - policy.span as i32 - 1 };
    let mut family = level_sets(mf, low.min(top), top)?;
    if let Some(j) = policy.j_max {
        family.truncate_top(j);
    }
    let mut j_max = family.j_max();
    while j_max >= family.j_min() {
        let fam = whitney::whitney_decompose(family.region(j_max))?;
        if (0..fam.len()).any(|k| is_resolved(&fam, k, policy.min_side_cells)) {
            break;
        }
        j_max -= 1;
    }
    if j_max < family.j_min() {
        let peak = mf.values().iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0;
        return Err(Error::Resolution {
            locus: whitney::format_point(&mf.grid().point(peak), mf.grid().dim()),
            detail: format!(
                "no level set of Mf has a Whitney cube of {} cells; refine the grid",
                policy.min_side_cells
            ),
        });
    }
    family.truncate_top(j_max);
    let j_min = policy.j_min.unwrap_or(j_max - policy.span as i32).max(family.j_min());
    family.truncate_bottom(j_min);
    if family.is_empty() {
        return Err(Error::precondition("level range is empty after clipping"));
    }
    Ok(family)
}

/// Runs the full pipeline with default options.
pub fn atomic_decomposition(f: &SampledFunction, p: f64, s: f64, fam: &MollifierFamily) -> Result<AtomicDecomposition> {
    atomic_decomposition_with(f, p, s, fam, &DecomposeOptions::default())
}

pub fn atomic_decomposition_with(
    f: &SampledFunction,
    p: f64,
    s: f64,
    fam: &MollifierFamily,
    opts: &DecomposeOptions,
) -> Result<AtomicDecomposition> {
    let degree = moment_degree(p, f.grid().dim())?;
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::invalid(format!("s must exceed 1, got {s}")));
    }
    if f.grid() != fam.grid() {
        return Err(Error::GridMismatch);
    }
    if f.is_zero() {
        return Err(Error::precondition("f must be nonzero"));
    }
    f.check_margin(BOUNDARY_MARGIN_CELLS)?;
    let grid = *f.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let mf = grand_maximal(f, fam)?;
    let levels = choose_levels(&mf, &opts.policy)?;
    let f_sup = f.max_abs();
    let f_norm_s = lp_power(f.values(), vol, s)?.powf(1.0 / s);

    let mut terms = Vec::new();
    let mut diags = Vec::new();
    let mut partial = vec![0.0; grid.len()];
    let mut errors = Vec::new();
    let mut abs_total = vec![0.0; grid.len()];
    let mut level_weight = vec![0.0; grid.len()];
    let mut upper: Option<CZLevel> = None;
    let mut checks = DecompositionChecks {
        atoms_checked: 0,
        atoms_failed: 0,
        max_atom_moment_residual: 0.0,
        max_atom_size_excess: 0.0,
        max_telescoping_error: 0.0,
        max_cz_error: 0.0,
        max_bad_moment_residual: 0.0,
        support_ok: true,
        pou_overlap_ok: true,
        domination_ok: true,
        chain_constant: 0.0,
        chain_ok: true,
    };
    for j in (levels.j_min()..=levels.j_max()).rev() {
        let region = levels.region_arc(j).clone();
        let wf = whitney::decompose_shared(region.clone())?.with_epsilon(opts.epsilon)?;
        let level = cz_level_on(f, wf, degree, j, opts.policy.min_side_cells)?;
        let (cz_err, bad_res) = check_cz_level(f, &level, degree);
        let built = build_a(f, &level, upper.as_ref(), degree)?;
        let two_j = 2f64.powi(j);

        // Telescoping against the good parts.
        let prev_g = upper.as_ref().map_or(f.values(), |u| u.good_part.values());
        let mut sum = vec![0.0; grid.len()];
        let mut sum_abs = vec![0.0; grid.len()];
        let mut count = vec![0u32; grid.len()];
        for a in &built.a {
            for (gi, _, v) in a.iter() {
                if v != 0.0 {
                    sum[gi] += v;
                    sum_abs[gi] += v.abs();
                    count[gi] += 1;
                }
            }
        }
        let tele = (0..grid.len())
            .map(|i| (sum[i] - (prev_g[i] - level.good_part.values()[i])).abs())
            .fold(0.0, f64::max)
            / f_sup;

        let vanishes_off_level = (0..grid.len()).all(|i| sum_abs[i] == 0.0 || region.is_member(i));
        let mut support_ok = vanishes_off_level;
        // Supports against the cube geometry.
        let eps = opts.epsilon;
        let support_geom = built.a.par_iter().enumerate().all(|(k, a)| {
            let own = dilated_box(&grid, &level.whitney.cubes()[k], eps);
            let boxes: Vec<_> = built.partners[k]
                .iter()
                .map(|&i| dilated_box(&grid, &upper.as_ref().unwrap().whitney.cubes()[i], eps))
                .collect();
            a.iter().all(|(gi, _, v)| {
                let x = grid.point(gi);
                v == 0.0 || in_closed_box(x, &own, dim) || boxes.iter().any(|b| in_closed_box(x, b, dim))
            })
        });
        support_ok &= support_geom;

        let max_sum_abs = sum_abs.iter().copied().fold(0.0, f64::max);
        let a_overlap = count.iter().copied().max().unwrap_or(0) as usize;
        for i in 0..grid.len() {
            abs_total[i] += sum_abs[i];
            if region.is_member(i) && !levels_contains(&levels, j + 1, i) {
                level_weight[i] += two_j;
            }
        }

        // Terms and atoms.
        let upper_ref = upper.as_ref();
        let made: Vec<Option<(Term, f64, f64, bool)>> = built
            .a
            .par_iter()
            .enumerate()
            .map(|(k, a)| {
                let sup = a.max_abs();
                if sup <= opts.negligible * f_sup {
                    return Ok(None);
                }
                let mut corners = Vec::new();
                push_corners(&mut corners, dilated_box(&grid, &level.whitney.cubes()[k], eps), dim);
                for &i in &built.partners[k] {
                    push_corners(&mut corners, dilated_box(&grid, &upper_ref.unwrap().whitney.cubes()[i], eps), dim);
                }
                let ball = Ball::enclosing(&corners, dim)?;
                let lambda = sup * ball.volume(dim).powf(1.0 / p);
                let mut func = a.clone();
                func.scale(1.0 / lambda);
                let atom = Atom { func, ball, p };
                let rep = validate_atom(&atom, opts.atom_tol);
                let excess = rep.max_abs / rep.size_bound - 1.0;
                let term = Term {
                    j,
                    k,
                    cube: level.whitney.cubes()[k],
                    lambda,
                    a_sup: sup,
                    ball,
                    atom: opts.keep_atoms.then_some(atom),
                };
                Ok(Some((term, rep.max_moment_residual, excess, rep.pass())))
            })
            .collect::<Result<_>>()?;
        let mut dropped = 0;
        let mut kept = 0;
        let mut max_a: f64 = 0.0;
        for (k, m) in made.into_iter().enumerate() {
            match m {
                None => {
                    if !built.a[k].is_zero() {
                        dropped += 1;
                    }
                }
                Some((term, res, excess, pass)) => {
                    checks.atoms_checked += 1;
                    if !pass {
                        checks.atoms_failed += 1;
                    }
                    checks.max_atom_moment_residual = checks.max_atom_moment_residual.max(res);
                    checks.max_atom_size_excess = checks.max_atom_size_excess.max(excess);
                    max_a = max_a.max(term.a_sup / two_j);
                    built.a[k].add_into(1.0, &mut partial);
                    kept += 1;
                    terms.push(term);
                }
            }
        }
        let err = lp_power(
            &partial.iter().zip(f.values()).map(|(a, b)| b - a).collect::<Vec<_>>(),
            vol,
            s,
        )?
        .powf(1.0 / s);
        errors.push((j, err));
        let good_norm = lp_power(level.good_part.values(), vol, s)?.powf(1.0 / s);

        let pou_overlap = level.pou.max_overlap();
        checks.pou_overlap_ok &= pou_overlap <= neighbor_bound(dim);
        checks.max_telescoping_error = checks.max_telescoping_error.max(tele);
        checks.max_cz_error = checks.max_cz_error.max(cz_err);
        checks.max_bad_moment_residual = checks.max_bad_moment_residual.max(bad_res);
        checks.support_ok &= support_ok;
        diags.push(LevelDiagnostics {
            j,
            region_cells: region.cell_count(),
            cubes: level.whitney.len(),
            resolved_cubes: level.resolved_count(),
            terms: kept,
            dropped,
            max_a_over_2j: max_a,
            sum_abs_over_2j: max_sum_abs / two_j,
            a_overlap,
            pou_overlap,
            telescoping_error: tele,
            cz_error: cz_err,
            bad_moment_residual: bad_res,
            projection_sum_residual: built.projection_sum_residual,
            support_ok,
            vanishes_off_level,
            good_norm,
        });
        upper = Some(level);
    }

    let measured_c = diags.iter().map(|d| d.sum_abs_over_2j).fold(0.0, f64::max);
    let sup_c = diags.iter().map(|d| d.max_a_over_2j).fold(0.0, f64::max);
    checks.domination_ok = measured_c.is_finite() && diags.iter().all(|d| d.vanishes_off_level);
    let mut chain: f64 = 0.0;
    for i in 0..grid.len() {
        if abs_total[i] > 0.0 {
            chain = chain.max(if level_weight[i] > 0.0 { abs_total[i] / level_weight[i] } else { f64::INFINITY });
        }
    }
    checks.chain_constant = chain;
    // The level-set chain inequality turns the per-level bound into this chain with constant 2 measured_c.
    checks.chain_ok = chain <= 2.0 * measured_c * (1.0 + 1e-12);

    let sum_lambda_p = terms.iter().map(|t| t.lambda.powf(p)).sum();
    let hp_norm_p = lp_power(mf.values(), vol, p)?;
    let lemma4 = check_lemma4(&with_empty_top(&levels));
    Ok(AtomicDecomposition {
        grid,
        p,
        s,
        degree,
        family: fam.description(),
        j_min: levels.j_min(),
        j_max: levels.j_max(),
        terms,
        measured_c,
        sup_c,
        sum_lambda_p,
        hp_norm_p,
        f_norm_s,
        errors,
        levels: diags,
        checks,
        lemma4,
    })
}

/// The decomposition treats the level above `j_max` as empty.
fn with_empty_top(levels: &LevelSetFamily) -> LevelSetFamily {
    let regions: Vec<OpenRegion> = levels.levels().map(|j| levels.region(j).clone()).collect();
    LevelSetFamily::from_regions(levels.j_min(), regions, true).expect("nested by construction")
}

fn levels_contains(levels: &LevelSetFamily, j: i32, cell: usize) -> bool {
    j <= levels.j_max() && j >= levels.j_min() && levels.region(j).is_member(cell)
}

fn push_corners(out: &mut Vec<[f64; 2]>, b: ([f64; 2], [f64; 2]), dim: usize) {
    if dim == 1 {
        out.push([b.0[0], 0.0]);
        out.push([b.1[0], 0.0]);
    } else {
        out.push([b.0[0], b.0[1]]);
        out.push([b.1[0], b.0[1]]);
        out.push([b.0[0], b.1[1]]);
        out.push([b.1[0], b.1[1]]);
    }
}

/// `||f - sum_{j >= J} lambda a||_s` recomputed from the stored atoms.
pub fn reconstruction_error(f: &SampledFunction, d: &AtomicDecomposition, j: i32, s: f64) -> Result<f64> {
    if j < d.j_min || j > d.j_max {
        return Err(Error::invalid(format!("J = {j} outside [{}, {}]", d.j_min, d.j_max)));
    }
    let mut r = f.values().to_vec();
    for t in d.terms.iter().filter(|t| t.j >= j) {
        let a = t.atom.as_ref().ok_or_else(|| Error::precondition("decomposition was built without atoms"))?;
        a.func.add_into(-t.lambda, &mut r);
    }
    Ok(lp_power(&r, f.grid().cell_volume(), s)?.powf(1.0 / s))
}

/// Outcome of the level-set chain check `sum 2^j chi_{O_j} <= 2 sum 2^j chi_{O_j \ O_{j+1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma4Report {
    /// The family ends in an empty level, so the intersection has measure zero.
    pub applicable: bool,
    pub cells: usize,
    /// Max of `sum_j 2^j chi_{O_j} / sum_j 2^j chi_{O_j \ O_{j+1}}` over the range.
    pub max_ratio: f64,
    /// Same with the levels below `j_min` bounded by their sum `2^{j_min}`.
    pub max_ratio_with_tail: f64,
}

impl Lemma4Report {
    pub fn pass(&self) -> bool {
        self.applicable && self.max_ratio <= 2.0 && self.max_ratio_with_tail <= 2.0
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("applicable", self.applicable)
            .push("cells", self.cells)
            .push("max_ratio", self.max_ratio)
            .push("max_ratio_with_tail", self.max_ratio_with_tail)
            .push("pass", pass_fail(self.pass()));
        d
    }
}

/// Evaluates both sides of the chain inequality at every cell of `O_{j_min}`.
pub fn check_lemma4(levels: &LevelSetFamily) -> Lemma4Report {
    let grid = *levels.region(levels.j_min()).grid();
    let base = levels.region(levels.j_min());
    let mut max_ratio: f64 = 0.0;
    let mut with_tail: f64 = 0.0;
    let mut cells = 0;
    for i in 0..grid.len() {
        if !base.is_member(i) {
            continue;
        }
        cells += 1;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in levels.levels() {
            if !levels.region(j).is_member(i) {
                break;
            }
            let w = 2f64.powi(j);
            lhs += w;
            let next = j < levels.j_max() && levels.region(j + 1).is_member(i);
            if !next {
                rhs += w;
            }
        }
        max_ratio = max_ratio.max(lhs / rhs);
        with_tail = with_tail.max((lhs + 2f64.powi(levels.j_min())) / rhs);
    }
    Lemma4Report { applicable: levels.top_is_empty(), cells, max_ratio, max_ratio_with_tail: with_tail }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whitney::whitney_decompose;

    #[test]
    fn smoothstep_is_c2_step() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        let e = 1e-6;
        for t in [0.0, 1.0] {
            let d1 = (smoothstep(t + e) - smoothstep(t - e)) / (2.0 * e);
            assert!(d1.abs() < 1e-9);
        }
    }

    fn region_1d(m: usize, pred: impl Fn(f64) -> bool) -> OpenRegion {
        OpenRegion::from_predicate(Grid::new(1, 1.0, m).unwrap(), |x| pred(x[0])).unwrap()
    }

    #[test]
    fn partition_sums_to_one() {
        for region in [
            region_1d(256, |x| x > -0.3 && x < 0.55),
            OpenRegion::from_predicate(Grid::new(2, 1.0, 64).unwrap(), |x| x[0] * x[0] + x[1] * x[1] < 0.5).unwrap(),
        ] {
            let fam = whitney_decompose(&region).unwrap();
            let pou = partition_of_unity(&fam).unwrap();
            let sum = pou.sum();
            for (i, &v) in sum.values().iter().enumerate() {
                if region.is_member(i) {
                    assert!((v - 1.0).abs() < 1e-12);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
            let g = region.grid();
            for (k, w) in pou.weights().iter().enumerate() {
                let b = dilated_box(g, &fam.cubes()[k], fam.epsilon());
                for (gi, _, v) in w.iter() {
                    assert!((0.0..=1.0).contains(&v));
                    if v > 0.0 {
                        assert!(in_closed_box(g.point(gi), &b, g.dim()));
                    }
                }
            }
            assert!(pou.max_overlap() <= neighbor_bound(g.dim()));
        }
    }

    #[test]
    fn single_cube_weight_is_one() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        let region = OpenRegion::from_predicate(g, |x| x[0] > 0.0).unwrap();
        let fam = whitney_decompose(&region).unwrap();
        let big = (0..fam.len()).max_by(|&a, &b| fam.side_cells(a).total_cmp(&fam.side_cells(b))).unwrap();
        let pou = partition_of_unity(&fam).unwrap();
        // Cells of the big cube away from its neighbor carry weight exactly one.
        let w = pou.weight(big);
        let c = fam.cubes()[big];
        for (gi, _, v) in w.iter() {
            let x = g.point(gi)[0];
            let lo = c.lower(&g)[0];
            if x > lo + 0.1 * c.side(&g) && x < lo + c.side(&g) {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn cz_level_identities() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, |x| (5.0 * x[0]).sin() * (3.0 * x[1]).cos()).unwrap();
        let region = OpenRegion::from_predicate(g, |x| x[0].abs() < 0.7 && x[1].abs() < 0.6).unwrap();
        let level = cz_level(&f, &region, 1).unwrap();
        let (err, res) = check_cz_level(&f, &level, 1);
        assert!(err < 1e-14, "{err}");
        assert!(res < 1e-10, "{res}");
        for i in 0..g.len() {
            if !region.is_member(i) {
                assert_eq!(level.good_part.values()[i], f.values()[i]);
            }
        }
    }

    #[test]
    fn top_level_terms_are_bad_parts() {
        let g = Grid::new(1, 1.0, 256).unwrap();
        let f = SampledFunction::from_fn(g, |x| x[0].cos()).unwrap();
        let region = region_1d(256, |x| x > -0.5 && x < 0.25);
        let level = cz_level(&f, &region, 0).unwrap();
        let t = build_a(&f, &level, None, 0).unwrap();
        for (a, b) in t.a.iter().zip(&level.bad_parts) {
            for (gi, _, v) in b.iter() {
                assert!((a.get(g.multi(gi)) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn telescoping_on_nested_regions() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, |x| (4.0 * x[0] + x[1]).sin() * (1.0 - x[0] * x[0])).unwrap();
        let outer = OpenRegion::from_predicate(g, |x| x[0] * x[0] + x[1] * x[1] < 0.64).unwrap();
        let inner = OpenRegion::from_predicate(g, |x| (x[0] - 0.1).powi(2) + x[1] * x[1] < 0.2).unwrap();
        let coarse = cz_level(&f, &outer, 1).unwrap();
        let fine = cz_level(&f, &inner, 1).unwrap();
        let t = build_a(&f, &coarse, Some(&fine), 1).unwrap();
        let mut sum = vec![0.0; g.len()];
        for a in &t.a {
            a.add_into(1.0, &mut sum);
        }
        for i in 0..g.len() {
            let want = fine.good_part.values()[i] - coarse.good_part.values()[i];
            assert!((sum[i] - want).abs() < 1e-12, "cell {i}");
        }
        assert!(t.projection_sum_residual < 1e-10);
        for (k, a) in t.a.iter().enumerate() {
            let c = coarse.whitney.cubes()[k];
            assert!(relative_moment_residual(a, c.center(&g), c.side(&g), 1) < 1e-10 || a.max_abs() < 1e-13);
        }
    }

    #[test]
    fn lemma4_single_level_and_chain() {
        let g = Grid::new(1, 1.0, 4096).unwrap();
        let single = LevelSetFamily::from_regions(3, vec![region_1d(4096, |x| x > 0.0 && x < 0.5)], true).unwrap();
        let r = check_lemma4(&single);
        assert_eq!(r.max_ratio, 1.0);
        assert!(r.pass());

        let regions: Vec<_> = (0..=10).map(|j| region_1d(4096, move |x| x > 0.0 && x < 2f64.powi(-j))).collect();
        let chain = LevelSetFamily::from_regions(0, regions, true).unwrap();
        let r = check_lemma4(&chain);
        // At the innermost cells the ratio is 2 - 2^{j_min - j_max}.
        assert_eq!(r.max_ratio, 2.0 - 2f64.powi(-10));
        assert_eq!(r.max_ratio_with_tail, 2.0);
        assert!(r.pass());
        let open = LevelSetFamily::from_regions(0, vec![region_1d(4096, |x| x > 0.0)], false).unwrap();
        assert!(!check_lemma4(&open).applicable);
        let _ = g;
    }
}
