//! Whitney decompositions of grid regions into dyadic cubes.
//!
//! Cubes live on the dyadic mesh rooted at the domain box. A cube is a
//! *candidate* when it lies in the region and `sqrt(n) l(Q) <= dist(Q, O^c)`,
//! where distances are exact Euclidean distances between cell centers. The
//! family is the set of maximal candidates.
//!
//! A region cell touching the complement sits at distance one cell, so in two
//! dimensions the candidate rule needs cubes of half a cell there. The mesh
//! therefore descends `sub_levels(n)` levels below the grid cell; a sub-cell
//! cube inherits the distance of the cell containing it. All geometric checks
//! run in integer "units" of `h / 2^sub_levels(n)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edt::squared_edt;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::report::{pass_fail, KvDoc, Table};

/// Default dilation parameter for `Q*`.
pub const DEFAULT_EPSILON: f64 = 0.125;

/// Side below which a cube carries too few samples for local projections.
pub const RESOLUTION_FLOOR_CELLS: usize = 4;

/// Number of dyadic levels below the grid cell needed so that every region
/// cell can be covered: `sqrt(n) * 2^-s <= 1`.
pub fn sub_levels(dim: usize) -> u32 {
    if dim == 1 {
        0
    } else {
        1
    }
}

/// `12^n`, the neighbor and overlap bound.
pub fn neighbor_bound(dim: usize) -> usize {
    12usize.pow(dim as u32)
}

/// `7^n`, the number of coarse cubes meeting a fine cube.
pub fn cover_bound(dim: usize) -> usize {
    7usize.pow(dim as u32)
}

/// `84^n`, the number of coarse dilated cubes meeting a fine dilated cube.
pub fn dilated_bound(dim: usize) -> usize {
    84usize.pow(dim as u32)
}

/// Dyadic cube `prod_d [-L + index_d l, -L + (index_d + 1) l]` with `l = 2L / 2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: [u64; 2],
}

impl DyadicCube {
    pub fn new(level: u32, index: [u64; 2]) -> Self {
        Self { level, index }
    }

    pub fn root() -> Self {
        Self { level: 0, index: [0, 0] }
    }

    pub fn side(&self, grid: &Grid) -> f64 {
        2.0 * grid.half_width() / (1u64 << self.level) as f64
    }

    pub fn lower(&self, grid: &Grid) -> [f64; 2] {
        let l = self.side(grid);
        let mut x = [0.0; 2];
        for d in 0..grid.dim() {
            x[d] = -grid.half_width() + self.index[d] as f64 * l;
        }
        x
    }

    pub fn center(&self, grid: &Grid) -> [f64; 2] {
        let l = self.side(grid);
        let mut x = self.lower(grid);
        for v in x.iter_mut().take(grid.dim()) {
            *v += 0.5 * l;
        }
        x
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self { level: self.level - 1, index: [self.index[0] / 2, self.index[1] / 2] })
    }

    fn children(&self, dim: usize) -> impl Iterator<Item = Self> + '_ {
        let n = 1u64 << dim;
        (0..n).map(move |c| {
            let (a, b) = if dim == 1 { (c, 0) } else { (c >> 1, c & 1) };
            Self { level: self.level + 1, index: [2 * self.index[0] + a, 2 * self.index[1] + b] }
        })
    }
}

/// `Q*`: same center as `base`, side `(1 + epsilon) l(base)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilatedCube {
    pub base: DyadicCube,
    pub epsilon: f64,
}

impl DilatedCube {
    pub fn new(base: DyadicCube, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { base, epsilon })
    }

    pub fn side(&self, grid: &Grid) -> f64 {
        (1.0 + self.epsilon) * self.base.side(grid)
    }

    /// Closed bounds `(lo, hi)` in domain coordinates.
    pub fn bounds(&self, grid: &Grid) -> ([f64; 2], [f64; 2]) {
        let c = self.base.center(grid);
        let r = 0.5 * self.side(grid);
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for d in 0..grid.dim() {
            lo[d] = c[d] - r;
            hi[d] = c[d] + r;
        }
        (lo, hi)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.25 {
        Ok(())
    } else {
        Err(Error::invalid(format!("dilation parameter must lie in (0, 1/4), got {epsilon}")))
    }
}

/// Integer coordinates of the finest dyadic mesh.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lattice {
    pub(crate) dim: usize,
    pub(crate) cell_level: u32,
    pub(crate) sub: u32,
    pub(crate) units: u64,
}

impl Lattice {
    pub(crate) fn new(grid: &Grid) -> Self {
        let m = grid.points_per_axis() as u64;
        let sub = sub_levels(grid.dim());
        Self { dim: grid.dim(), cell_level: m.trailing_zeros(), sub, units: m << sub }
    }

    pub(crate) fn max_level(&self) -> u32 {
        self.cell_level + self.sub
    }

    /// Side length in units.
    pub(crate) fn side(&self, c: &DyadicCube) -> u64 {
        1u64 << (self.max_level() - c.level)
    }

    pub(crate) fn lo(&self, c: &DyadicCube) -> [u64; 2] {
        let s = self.side(c);
        [c.index[0] * s, c.index[1] * s]
    }

    /// Half-open unit range `[lo, hi)` per axis; the unused axis is `[0, 1)`.
    pub(crate) fn unit_range(&self, c: &DyadicCube) -> ([u64; 2], [u64; 2]) {
        let s = self.side(c);
        let lo = self.lo(c);
        let mut hi = [lo[0] + s, 1];
        if self.dim == 2 {
            hi[1] = lo[1] + s;
        }
        (lo, hi)
    }

    /// Closed box in units, optionally dilated by `epsilon`.
    pub(crate) fn unit_box(&self, c: &DyadicCube, epsilon: f64) -> ([f64; 2], [f64; 2]) {
        let s = self.side(c) as f64;
        let lo = self.lo(c);
        let pad = 0.5 * epsilon * s;
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        for d in 0..self.dim {
            a[d] = lo[d] as f64 - pad;
            b[d] = lo[d] as f64 + s + pad;
        }
        (a, b)
    }

    /// Cells overlapped by the cube (the containing cell for sub-cell cubes).
    pub(crate) fn cell_range(&self, c: &DyadicCube) -> ([usize; 2], [usize; 2]) {
        let (lo, hi) = self.unit_range(c);
        let per = 1u64 << self.sub;
        let mut a = [0usize; 2];
        let mut b = [1usize; 2];
        for d in 0..self.dim {
            a[d] = (lo[d] / per) as usize;
            b[d] = (hi[d].div_ceil(per)) as usize;
        }
        (a, b)
    }

    pub(crate) fn shape(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.units as usize, 1]
        } else {
            [self.units as usize, self.units as usize]
        }
    }
}

/// Open subset of the domain given by whole grid cells, together with the
/// exact distance from each member cell center to the nearest non-member
/// cell center. Points outside the box are not part of the complement.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenRegion {
    grid: Grid,
    member: Vec<bool>,
    dist_sq: Vec<u64>,
}

impl OpenRegion {
    pub fn new(grid: Grid, member: Vec<bool>) -> Result<Self> {
        if member.len() != grid.len() {
            return Err(Error::invalid("membership mask does not match the grid"));
        }
        let count = member.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::precondition("region is empty"));
        }
        if count == member.len() {
            return Err(Error::precondition("region is the whole domain (not proper)"));
        }
        let complement: Vec<bool> = member.iter().map(|&b| !b).collect();
        let mut dist_sq = squared_edt(&complement, grid.shape());
        for (d, &b) in dist_sq.iter_mut().zip(&member) {
            if !b {
                *d = 0;
            }
        }
        Ok(Self { grid, member, dist_sq })
    }

    /// Cells whose centers satisfy `pred`.
    pub fn from_predicate(grid: Grid, pred: impl Fn([f64; 2]) -> bool) -> Result<Self> {
        let member = (0..grid.len()).map(|i| pred(grid.point(i))).collect();
        Self::new(grid, member)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_member(&self, flat: usize) -> bool {
        self.member[flat]
    }

    pub fn membership(&self) -> &[bool] {
        &self.member
    }

    pub fn cell_count(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self) -> f64 {
        self.cell_count() as f64 * self.grid.cell_volume()
    }

    /// Squared distance to the complement in cells squared (0 off the region).
    pub fn dist_sq_cells(&self, flat: usize) -> u64 {
        self.dist_sq[flat]
    }

    pub fn dist(&self, flat: usize) -> f64 {
        (self.dist_sq[flat] as f64).sqrt() * self.grid.spacing()
    }

    pub fn is_subset_of(&self, other: &OpenRegion) -> bool {
        self.grid == other.grid && self.member.iter().zip(&other.member).all(|(&a, &b)| !a || b)
    }

    /// SHA-256 over the grid parameters and the membership bits.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.grid.dim() as u64).to_le_bytes());
        h.update(self.grid.half_width().to_le_bytes());
        h.update((self.grid.points_per_axis() as u64).to_le_bytes());
        let bytes: Vec<u8> = self.member.iter().map(|&b| b as u8).collect();
        h.update(&bytes);
        hex::encode(h.finalize())
    }
}

/// `dist(Q, O^c)`: minimum of the distance field over the cells of `cube`.
pub fn distance_to_complement(region: &OpenRegion, cube: &DyadicCube) -> f64 {
    let lat = Lattice::new(&region.grid);
    (min_dist_sq(region, &lat, cube) as f64).sqrt() * region.grid.spacing()
}

fn min_dist_sq(region: &OpenRegion, lat: &Lattice, cube: &DyadicCube) -> u64 {
    let (a, b) = lat.cell_range(cube);
    let mut best = u64::MAX;
    for i0 in a[0]..b[0] {
        for i1 in a[1]..b[1] {
            best = best.min(region.dist_sq[region.grid.flat([i0, i1])]);
        }
    }
    best
}

/// Per-level min-pooling of membership and distance, used to evaluate the
/// candidate rule for every dyadic cube in O(1).
struct Pyramid {
    levels: Vec<PyramidLevel>,
}

struct PyramidLevel {
    per_axis: usize,
    all_member: Vec<bool>,
    any_member: Vec<bool>,
    min_dist: Vec<u64>,
}

impl Pyramid {
    fn new(region: &OpenRegion) -> Self {
        let g = region.grid;
        let dim = g.dim();
        let m = g.points_per_axis();
        let finest = PyramidLevel {
            per_axis: m,
            all_member: region.member.clone(),
            any_member: region.member.clone(),
            min_dist: region.dist_sq.clone(),
        };
        let mut levels = vec![finest];
        while levels.last().unwrap().per_axis > 1 {
            let prev = levels.last().unwrap();
            let pa = prev.per_axis / 2;
            let len = pa.pow(dim as u32);
            let mut next = PyramidLevel {
                per_axis: pa,
                all_member: vec![true; len],
                any_member: vec![false; len],
                min_dist: vec![u64::MAX; len],
            };
            for i in 0..prev.all_member.len() {
                let j = if dim == 1 {
                    i / 2
                } else {
                    let (r, c) = (i / prev.per_axis, i % prev.per_axis);
                    (r / 2) * pa + c / 2
                };
                next.all_member[j] &= prev.all_member[i];
                next.any_member[j] |= prev.any_member[i];
                next.min_dist[j] = next.min_dist[j].min(prev.min_dist[i]);
            }
            levels.push(next);
        }
        levels.reverse();
        Self { levels }
    }

    /// `(all_member, any_member, min_dist_sq)` of the cube, in cell units.
    fn query(&self, lat: &Lattice, c: &DyadicCube) -> (bool, bool, u64) {
        let (level, index) = if c.level <= lat.cell_level {
            (c.level as usize, c.index)
        } else {
            let shift = c.level - lat.cell_level;
            (lat.cell_level as usize, [c.index[0] >> shift, c.index[1] >> shift])
        };
        let l = &self.levels[level];
        let flat = if lat.dim == 1 { index[0] as usize } else { index[0] as usize * l.per_axis + index[1] as usize };
        (l.all_member[flat], l.any_member[flat], l.min_dist[flat])
    }

    fn is_candidate(&self, lat: &Lattice, c: &DyadicCube) -> bool {
        let (all, _, d) = self.query(lat, c);
        all && lower_bound_holds(lat, c, d)
    }
}

/// `n * l^2 <= dist^2` in exact integer arithmetic (units squared).
fn lower_bound_holds(lat: &Lattice, c: &DyadicCube, dist_sq_cells: u64) -> bool {
    let s = lat.side(c) as u128;
    (lat.dim as u128) * s * s <= (dist_sq_cells as u128) << (2 * lat.sub)
}

/// `dist^2 <= 16 n l^2` in exact integer arithmetic.
fn upper_bound_holds(lat: &Lattice, c: &DyadicCube, dist_sq_cells: u64) -> bool {
    let s = lat.side(c) as u128;
    (dist_sq_cells as u128) << (2 * lat.sub) <= 16 * (lat.dim as u128) * s * s
}

/// Whitney family of a region: maximal dyadic candidates plus the shared
/// dilation parameter.
#[derive(Debug, Clone)]
pub struct WhitneyFamily {
    region: Arc<OpenRegion>,
    cubes: Vec<DyadicCube>,
    epsilon: f64,
}

impl WhitneyFamily {
    pub fn region(&self) -> &OpenRegion {
        &self.region
    }

    pub fn region_arc(&self) -> &Arc<OpenRegion> {
        &self.region
    }

    pub fn grid(&self) -> &Grid {
        &self.region.grid
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn dilated(&self, k: usize) -> DilatedCube {
        DilatedCube { base: self.cubes[k], epsilon: self.epsilon }
    }

    /// Side of cube `k` in grid cells (fractional for sub-cell cubes).
    pub fn side_cells(&self, k: usize) -> f64 {
        let lat = Lattice::new(self.grid());
        lat.side(&self.cubes[k]) as f64 / (1u64 << lat.sub) as f64
    }

    /// Text record: header lines followed by one `level index...` line per cube.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        s.push_str("# whitney family v1\n");
        s.push_str(&format!("region_hash = {}\n", self.region.hash_hex()));
        s.push_str(&format!("epsilon = {}\n", self.epsilon));
        s.push_str(&format!("dim = {}\n", self.grid().dim()));
        s.push_str(&format!("half_width = {}\n", self.grid().half_width()));
        s.push_str(&format!("points_per_axis = {}\n", self.grid().points_per_axis()));
        s.push_str(&format!("cubes = {}\n", self.cubes.len()));
        for c in &self.cubes {
            if self.grid().dim() == 1 {
                s.push_str(&format!("{} {}\n", c.level, c.index[0]));
            } else {
                s.push_str(&format!("{} {} {}\n", c.level, c.index[0], c.index[1]));
            }
        }
        s
    }

    /// Rebuilds a family from its record; the region must match the stored hash.
    pub fn from_record(text: &str, region: &OpenRegion) -> Result<Self> {
        let mut epsilon = None;
        let mut hash = None;
        let mut cubes = Vec::new();
        for line in text.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once(" = ") {
                match k {
                    "epsilon" => epsilon = v.parse::<f64>().ok(),
                    "region_hash" => hash = Some(v.to_string()),
                    _ => {}
                }
                continue;
            }
            let nums: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|_| Error::Format(format!("bad cube line `{line}`"))))
                .collect::<Result<_>>()?;
            let c = match nums.as_slice() {
                [l, a] => DyadicCube::new(*l as u32, [*a, 0]),
                [l, a, b] => DyadicCube::new(*l as u32, [*a, *b]),
                _ => return Err(Error::Format(format!("bad cube line `{line}`"))),
            };
            cubes.push(c);
        }
        if hash.as_deref() != Some(region.hash_hex().as_str()) {
            return Err(Error::Format("region hash mismatch".into()));
        }
        let epsilon = epsilon.ok_or_else(|| Error::Format("missing epsilon".into()))?;
        check_epsilon(epsilon)?;
        Ok(Self { region: Arc::new(region.clone()), cubes, epsilon })
    }
}

/// Maximal dyadic candidates of `region`. Total on proper regions: the mesh
/// descends far enough that every member cell is covered.
pub fn whitney_decompose(region: &OpenRegion) -> Result<WhitneyFamily> {
    decompose_shared(Arc::new(region.clone()))
}

/// As [`whitney_decompose`], but fails when any cube is narrower than
/// `min_side_cells` grid cells.
pub fn whitney_decompose_with_floor(region: &OpenRegion, min_side_cells: usize) -> Result<WhitneyFamily> {
    let fam = whitney_decompose(region)?;
    for k in 0..fam.len() {
        if fam.side_cells(k) < min_side_cells as f64 {
            let c = fam.cubes[k].center(fam.grid());
            return Err(Error::Resolution {
                locus: format_point(&c, fam.grid().dim()),
                detail: format!(
                    "covering the region needs a cube of {} cells per side, below the floor of {min_side_cells}",
                    fam.side_cells(k)
                ),
            });
        }
    }
    Ok(fam)
}

pub(crate) fn format_point(x: &[f64; 2], dim: usize) -> String {
    if dim == 1 {
        format!("x = {:.6}", x[0])
    } else {
        format!("x = ({:.6}, {:.6})", x[0], x[1])
    }
}

pub(crate) fn decompose_shared(region: Arc<OpenRegion>) -> Result<WhitneyFamily> {
    let lat = Lattice::new(&region.grid);
    let pyr = Pyramid::new(&region);
    let mut cubes = Vec::new();
    let mut stack = vec![DyadicCube::root()];
    while let Some(c) = stack.pop() {
        let (_, any, _) = pyr.query(&lat, &c);
        if !any {
            continue;
        }
        if pyr.is_candidate(&lat, &c) {
            cubes.push(c);
            continue;
        }
        if c.level == lat.max_level() {
            return Err(Error::invariant(format!("finest cube {c:?} is not a candidate")));
        }
        // Reverse push keeps depth-first output in index order.
        let kids: Vec<_> = c.children(lat.dim).collect();
        stack.extend(kids.into_iter().rev());
    }
    Ok(WhitneyFamily { region, cubes, epsilon: DEFAULT_EPSILON })
}

/// Map from lattice unit to owning cube index.
pub(crate) struct OwnerMap {
    lat: Lattice,
    owner: Vec<u32>,
}

const NO_OWNER: u32 = u32::MAX;

impl OwnerMap {
    /// Fails if two cubes overlap.
    pub(crate) fn new(fam: &WhitneyFamily) -> Result<Self> {
        let lat = Lattice::new(fam.grid());
        let shape = lat.shape();
        let mut owner = vec![NO_OWNER; shape[0] * shape[1]];
        for (k, c) in fam.cubes.iter().enumerate() {
            let (lo, hi) = lat.unit_range(c);
            for a in lo[0]..hi[0] {
                for b in lo[1]..hi[1] {
                    let slot = &mut owner[a as usize * shape[1] + b as usize];
                    if *slot != NO_OWNER {
                        return Err(Error::invariant(format!("cubes {} and {k} overlap", *slot)));
                    }
                    *slot = k as u32;
                }
            }
        }
        Ok(Self { lat, owner })
    }

    /// Distinct owners of units in `[lo - w, hi + w)`, in first-seen order.
    fn owners_near(&self, lo: [u64; 2], hi: [u64; 2], w: u64, seen: &mut [u32], stamp: u32) -> Vec<usize> {
        let shape = self.lat.shape();
        let mut out = Vec::new();
        let mut a = [0usize; 2];
        let mut b = [1usize; 2];
        for d in 0..self.lat.dim {
            a[d] = lo[d].saturating_sub(w) as usize;
            b[d] = ((hi[d] + w) as usize).min(shape[d]);
        }
        for i in a[0]..b[0] {
            for j in a[1]..b[1] {
                let o = self.owner[i * shape[1] + j];
                if o != NO_OWNER && seen[o as usize] != stamp {
                    seen[o as usize] = stamp;
                    out.push(o as usize);
                }
            }
        }
        out
    }
}

fn boxes_meet(a: &([f64; 2], [f64; 2]), b: &([f64; 2], [f64; 2]), dim: usize) -> bool {
    (0..dim).all(|d| a.0[d] <= b.1[d] && b.0[d] <= a.1[d])
}

/// Pairs `(i, j)`, `i < j`, of cubes whose closed boxes intersect.
pub fn touching_pairs(family: &WhitneyFamily) -> Vec<(usize, usize)> {
    pairs_within(family, 0.0).expect("family cubes are disjoint")
}

/// Pairs of cubes whose dilations by `epsilon` intersect (`epsilon = 0`: touching).
fn pairs_within(fam: &WhitneyFamily, epsilon: f64) -> Result<Vec<(usize, usize)>> {
    let map = OwnerMap::new(fam)?;
    let lat = map.lat;
    let mut seen = vec![u32::MAX; fam.len()];
    let mut pairs = Vec::new();
    for (k, c) in fam.cubes.iter().enumerate() {
        let s = lat.side(c);
        let (lo, hi) = lat.unit_range(c);
        let w = (epsilon * s as f64).ceil() as u64 + 1;
        let bk = lat.unit_box(c, epsilon);
        for i in map.owners_near(lo, hi, w, &mut seen, k as u32) {
            if i == k {
                continue;
            }
            let si = lat.side(&fam.cubes[i]);
            // Each pair is examined from the side of the larger cube.
            if si > s || (si == s && i < k) {
                continue;
            }
            if boxes_meet(&bk, &lat.unit_box(&fam.cubes[i], epsilon), lat.dim) {
                pairs.push((k.min(i), k.max(i)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs)
}

/// Dilated cubes of the family at parameter `epsilon`.
pub fn dilate_family(family: &WhitneyFamily, epsilon: f64) -> Result<Vec<DilatedCube>> {
    check_epsilon(epsilon)?;
    Ok(family.cubes.iter().map(|&base| DilatedCube { base, epsilon }).collect())
}

/// Outcome of checking the Whitney properties on a family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCheck {
    pub dim: usize,
    pub cubes: usize,
    pub region_cells: usize,
    /// Union equals the region and interiors are disjoint (exact unit counts).
    pub partition: bool,
    /// `sqrt(n) l <= dist` for every cube.
    pub lower_bound: bool,
    /// `dist <= 4 sqrt(n) l` for every cube.
    pub upper_bound: bool,
    /// Every parent fails the candidate rule.
    pub maximal: bool,
    pub min_dist_ratio: f64,
    pub max_dist_ratio: f64,
    pub touching_pairs: usize,
    pub min_side_ratio: f64,
    pub max_side_ratio: f64,
    pub max_neighbors: usize,
    /// Touching iff dilations intersect.
    pub touch_iff_dilated: bool,
    /// Every cell center inside some `Q*` is a region cell.
    pub dilated_inside_region: bool,
    /// Every region cell center lies in at least one `Q*`.
    pub dilated_cover: bool,
    /// Largest number of `Q*` containing a sample point.
    pub max_dilated_overlap: usize,
    pub smallest_side_cells: f64,
}

impl FamilyCheck {
    pub fn side_ratio_ok(&self) -> bool {
        self.touching_pairs == 0 || (self.min_side_ratio >= 0.25 && self.max_side_ratio <= 4.0)
    }

    pub fn neighbors_ok(&self) -> bool {
        self.max_neighbors <= neighbor_bound(self.dim)
    }

    pub fn overlap_ok(&self) -> bool {
        self.max_dilated_overlap <= neighbor_bound(self.dim)
    }

    /// Properties (a)-(d) together with the dilation statements.
    pub fn all_pass(&self) -> bool {
        self.partition
            && self.lower_bound
            && self.upper_bound
            && self.maximal
            && self.side_ratio_ok()
            && self.neighbors_ok()
            && self.touch_iff_dilated
            && self.dilated_inside_region
            && self.dilated_cover
            && self.overlap_ok()
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("dim", self.dim)
            .push("cubes", self.cubes)
            .push("region_cells", self.region_cells)
            .push("partition", pass_fail(self.partition))
            .push("dist_lower_bound", pass_fail(self.lower_bound))
            .push("dist_upper_bound", pass_fail(self.upper_bound))
            .push("maximal", pass_fail(self.maximal))
            .push("min_dist_over_sqrt_n_side", self.min_dist_ratio)
            .push("max_dist_over_sqrt_n_side", self.max_dist_ratio)
            .push("touching_pairs", self.touching_pairs)
            .push("min_side_ratio", self.min_side_ratio)
            .push("max_side_ratio", self.max_side_ratio)
            .push("side_ratio_bound", pass_fail(self.side_ratio_ok()))
            .push("max_neighbors", self.max_neighbors)
            .push("neighbor_bound", neighbor_bound(self.dim))
            .push("neighbor_count", pass_fail(self.neighbors_ok()))
            .push("touch_iff_dilated_intersect", pass_fail(self.touch_iff_dilated))
            .push("dilated_inside_region", pass_fail(self.dilated_inside_region))
            .push("dilated_cover", pass_fail(self.dilated_cover))
            .push("max_dilated_overlap", self.max_dilated_overlap)
            .push("dilated_overlap_bound", pass_fail(self.overlap_ok()))
            .push("smallest_side_cells", self.smallest_side_cells)
            .push("all", pass_fail(self.all_pass()));
        d
    }
}

/// Verifies the Whitney properties of `family` exactly.
pub fn check_family(family: &WhitneyFamily) -> FamilyCheck {
    let grid = *family.grid();
    let lat = Lattice::new(&grid);
    let region = family.region();
    let pyr = Pyramid::new(region);

    let partition = partition_exact(family, &lat);

    let mut lower = true;
    let mut upper = true;
    let mut maximal = true;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut smallest = f64::INFINITY;
    let sqrt_n = (lat.dim as f64).sqrt();
    for c in &family.cubes {
        let d = min_dist_sq(region, &lat, c);
        lower &= lower_bound_holds(&lat, c, d);
        upper &= upper_bound_holds(&lat, c, d);
        maximal &= c.parent().is_some_and(|p| !pyr.is_candidate(&lat, &p));
        let side_cells = lat.side(c) as f64 / (1u64 << lat.sub) as f64;
        let ratio = (d as f64).sqrt() / (sqrt_n * side_cells);
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        smallest = smallest.min(side_cells);
    }

    let touching = touching_pairs(family);
    let dilated = pairs_within(family, family.epsilon).unwrap_or_default();
    let mut degree = vec![0usize; family.len()];
    let mut min_side_ratio = f64::INFINITY;
    let mut max_side_ratio: f64 = 0.0;
    for &(i, j) in &touching {
        degree[i] += 1;
        degree[j] += 1;
        let r = lat.side(&family.cubes[i]) as f64 / lat.side(&family.cubes[j]) as f64;
        min_side_ratio = min_side_ratio.min(r.min(1.0 / r));
        max_side_ratio = max_side_ratio.max(r.max(1.0 / r));
    }
    if touching.is_empty() {
        min_side_ratio = 1.0;
        max_side_ratio = 1.0;
    }

    let (inside, cover, overlap) = dilation_coverage(family, &lat);

    FamilyCheck {
        dim: lat.dim,
        cubes: family.len(),
        region_cells: region.cell_count(),
        partition,
        lower_bound: lower,
        upper_bound: upper,
        maximal,
        min_dist_ratio: min_ratio,
        max_dist_ratio: max_ratio,
        touching_pairs: touching.len(),
        min_side_ratio,
        max_side_ratio,
        max_neighbors: degree.iter().copied().max().unwrap_or(0),
        touch_iff_dilated: touching == dilated,
        dilated_inside_region: inside,
        dilated_cover: cover,
        max_dilated_overlap: overlap,
        smallest_side_cells: smallest,
    }
}

fn partition_exact(fam: &WhitneyFamily, lat: &Lattice) -> bool {
    let Ok(map) = OwnerMap::new(fam) else {
        return false;
    };
    let per = 1usize << lat.sub;
    let shape = lat.shape();
    let grid = fam.grid();
    for (u, &o) in map.owner.iter().enumerate() {
        let (a, b) = (u / shape[1], u % shape[1]);
        let cell = if lat.dim == 1 { [a / per, 0] } else { [a / per, b / per] };
        let member = fam.region().is_member(grid.flat(cell));
        if member != (o != NO_OWNER) {
            return false;
        }
    }
    true
}

/// Returns `(inside_region, covers_region, max_overlap)` for the dilated
/// cubes, sampling cell centers for the first two and the half-unit lattice
/// for the overlap count.
fn dilation_coverage(fam: &WhitneyFamily, lat: &Lattice) -> (bool, bool, usize) {
    let grid = fam.grid();
    let m = grid.points_per_axis();
    let per = (1u64 << lat.sub) as f64;
    let mut cell_hits = vec![0u32; grid.len()];
    let fine = 2 * lat.units as usize + 1;
    let fine_shape = if lat.dim == 1 { [fine, 1] } else { [fine, fine] };
    let mut fine_hits = vec![0u16; fine_shape[0] * fine_shape[1]];
    for c in &fam.cubes {
        let (lo, hi) = lat.unit_box(c, fam.epsilon);
        // Cell centers sit at units (i + 1/2) * per.
        let mut a = [0usize; 2];
        let mut b = [1usize; 2];
        let mut fa = [0usize; 2];
        let mut fb = [1usize; 2];
        for d in 0..lat.dim {
            let first = (lo[d] / per - 0.5).ceil().max(0.0);
            let last = (hi[d] / per - 0.5).floor().min((m - 1) as f64);
            a[d] = first as usize;
            b[d] = if last >= first { last as usize + 1 } else { first as usize };
            fa[d] = (2.0 * lo[d]).ceil().max(0.0) as usize;
            fb[d] = ((2.0 * hi[d]).floor() as usize + 1).min(fine_shape[d]);
        }
        for i in a[0]..b[0] {
            for j in a[1]..b[1] {
                cell_hits[grid.flat([i, j])] += 1;
            }
        }
        for i in fa[0]..fb[0] {
            for j in fa[1]..fb[1] {
                fine_hits[i * fine_shape[1] + j] += 1;
            }
        }
    }
    let mut inside = true;
    let mut cover = true;
    for (i, &h) in cell_hits.iter().enumerate() {
        let member = fam.region().is_member(i);
        if h > 0 && !member {
            inside = false;
        }
        if member && h == 0 {
            cover = false;
        }
    }
    let overlap = fine_hits.iter().copied().max().unwrap_or(0) as usize;
    (inside, cover, overlap.max(cell_hits.iter().copied().max().unwrap_or(0) as usize))
}

/// Statistics relating the decompositions of nested regions `O2 ⊆ O1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedStatsReport {
    pub dim: usize,
    pub coarse_cubes: usize,
    pub fine_cubes: usize,
    /// Max of `l(Q_i^2) / l(Q_k^1)` over intersecting pairs.
    pub max_length_ratio: f64,
    /// Max number of coarse cubes meeting a fine cube.
    pub max_cover_count: usize,
    /// Every fine cube lies in the union of the coarse cubes meeting it.
    pub cover_contains: bool,
    /// Every fine `Q*` lies in the union of those coarse cubes' dilations.
    pub dilated_cover_contains: bool,
    /// Max number of coarse `Q*` meeting a fine `Q*`.
    pub max_dilated_intersections: usize,
    pub per_fine: Table,
}

impl NestedStatsReport {
    pub fn length_ratio_ok(&self) -> bool {
        self.max_length_ratio <= 5.0
    }

    pub fn cover_ok(&self) -> bool {
        self.max_cover_count <= cover_bound(self.dim) && self.cover_contains
    }

    pub fn dilated_ok(&self) -> bool {
        self.max_dilated_intersections <= dilated_bound(self.dim)
    }

    pub fn all_pass(&self) -> bool {
        self.length_ratio_ok() && self.cover_ok() && self.dilated_ok()
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("dim", self.dim)
            .push("coarse_cubes", self.coarse_cubes)
            .push("fine_cubes", self.fine_cubes)
            .push("max_length_ratio", self.max_length_ratio)
            .push("length_ratio_bound", 5)
            .push("length_ratio", pass_fail(self.length_ratio_ok()))
            .push("max_cover_count", self.max_cover_count)
            .push("cover_count_bound", cover_bound(self.dim))
            .push("cover_contains", pass_fail(self.cover_contains))
            .push("cover_count", pass_fail(self.cover_ok()))
            .push("dilated_cover_contains", pass_fail(self.dilated_cover_contains))
            .push("max_dilated_intersections", self.max_dilated_intersections)
            .push("dilated_intersection_bound", dilated_bound(self.dim))
            .push("dilated_intersections", pass_fail(self.dilated_ok()))
            .push("all", pass_fail(self.all_pass()));
        d
    }
}

/// Exhaustive scan of coarse/fine cube relations for nested regions.
pub fn nested_stats(coarse: &WhitneyFamily, fine: &WhitneyFamily) -> Result<NestedStatsReport> {
    if coarse.grid() != fine.grid() {
        return Err(Error::GridMismatch);
    }
    if !fine.region().is_subset_of(coarse.region()) {
        return Err(Error::precondition("fine region is not contained in the coarse region"));
    }
    let lat = Lattice::new(coarse.grid());
    let cmap = OwnerMap::new(coarse)?;
    let fmap = OwnerMap::new(fine)?;
    let eps_c = coarse.epsilon;
    let eps_f = fine.epsilon;

    // Dilated intersections, discovered from the side of the larger cube.
    let mut dil: Vec<Vec<usize>> = vec![Vec::new(); fine.len()];
    let mut seen_c = vec![u32::MAX; coarse.len()];
    let mut seen_f = vec![u32::MAX; fine.len()];
    for (i, q) in fine.cubes.iter().enumerate() {
        let s = lat.side(q);
        let (lo, hi) = lat.unit_range(q);
        let w = (eps_f.max(eps_c) * s as f64).ceil() as u64 + 1;
        let bq = lat.unit_box(q, eps_f);
        for k in cmap.owners_near(lo, hi, w, &mut seen_c, i as u32) {
            let ck = &coarse.cubes[k];
            if lat.side(ck) <= s && boxes_meet(&bq, &lat.unit_box(ck, eps_c), lat.dim) {
                dil[i].push(k);
            }
        }
    }
    for (k, c) in coarse.cubes.iter().enumerate() {
        let s = lat.side(c);
        let (lo, hi) = lat.unit_range(c);
        let w = (eps_f.max(eps_c) * s as f64).ceil() as u64 + 1;
        let bc = lat.unit_box(c, eps_c);
        for i in fmap.owners_near(lo, hi, w, &mut seen_f, k as u32) {
            let fi = &fine.cubes[i];
            if lat.side(fi) < s && boxes_meet(&bc, &lat.unit_box(fi, eps_f), lat.dim) {
                dil[i].push(k);
            }
        }
    }

    let mut table = Table::new([
        "fine_index",
        "level",
        "side_cells",
        "max_length_ratio",
        "cover_count",
        "dilated_intersections",
    ]);
    let mut max_ratio: f64 = 0.0;
    let mut max_cover = 0;
    let mut contains = true;
    let mut dil_contains = true;
    let mut max_dil = 0;
    let mut seen = vec![u32::MAX; coarse.len()];
    for (i, q) in fine.cubes.iter().enumerate() {
        let s = lat.side(q);
        let (lo, hi) = lat.unit_range(q);
        let meeting = cmap.owners_near(lo, hi, 1, &mut seen, i as u32);
        let bq = lat.unit_box(q, 0.0);
        let meeting: Vec<usize> =
            meeting.into_iter().filter(|&k| boxes_meet(&bq, &lat.unit_box(&coarse.cubes[k], 0.0), lat.dim)).collect();
        let mut ratio: f64 = 0.0;
        let mut covered: u128 = 0;
        for &k in &meeting {
            let sk = lat.side(&coarse.cubes[k]);
            ratio = ratio.max(s as f64 / sk as f64);
            covered += overlap_units(&lat, q, &coarse.cubes[k]);
        }
        let volume = (s as u128).pow(lat.dim as u32);
        contains &= covered == volume;
        let boxes: Vec<_> = meeting.iter().map(|&k| lat.unit_box(&coarse.cubes[k], eps_c)).collect();
        dil_contains &= box_covered(&lat.unit_box(q, eps_f), &boxes, lat.dim);
        let mut ks = std::mem::take(&mut dil[i]);
        ks.sort_unstable();
        ks.dedup();
        max_ratio = max_ratio.max(ratio);
        max_cover = max_cover.max(meeting.len());
        max_dil = max_dil.max(ks.len());
        table.push_row([
            i.to_string(),
            q.level.to_string(),
            (s as f64 / (1u64 << lat.sub) as f64).to_string(),
            ratio.to_string(),
            meeting.len().to_string(),
            ks.len().to_string(),
        ]);
    }
    Ok(NestedStatsReport {
        dim: lat.dim,
        coarse_cubes: coarse.len(),
        fine_cubes: fine.len(),
        max_length_ratio: max_ratio,
        max_cover_count: max_cover,
        cover_contains: contains,
        dilated_cover_contains: dil_contains,
        max_dilated_intersections: max_dil,
        per_fine: table,
    })
}

fn overlap_units(lat: &Lattice, a: &DyadicCube, b: &DyadicCube) -> u128 {
    let (alo, ahi) = lat.unit_range(a);
    let (blo, bhi) = lat.unit_range(b);
    let mut v: u128 = 1;
    for d in 0..lat.dim {
        let lo = alo[d].max(blo[d]);
        let hi = ahi[d].min(bhi[d]);
        if hi <= lo {
            return 0;
        }
        v *= (hi - lo) as u128;
    }
    v
}

/// Whether the closed box `target` lies in the union of `boxes`, decided on
/// the arrangement induced by all box edges.
fn box_covered(target: &([f64; 2], [f64; 2]), boxes: &[([f64; 2], [f64; 2])], dim: usize) -> bool {
    let mut cuts: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for d in 0..dim {
        cuts[d].push(target.0[d]);
        cuts[d].push(target.1[d]);
        for b in boxes {
            for v in [b.0[d], b.1[d]] {
                if v > target.0[d] && v < target.1[d] {
                    cuts[d].push(v);
                }
            }
        }
        cuts[d].sort_by(f64::total_cmp);
        cuts[d].dedup();
    }
    if dim == 1 {
        cuts[1] = vec![0.0, 0.0];
    }
    // Test each arrangement cell at its midpoint, plus every vertex so that
    // closed coverage of the boundary is also checked.
    let pts = |v: &Vec<f64>| -> Vec<f64> {
        let mut p = v.clone();
        for w in v.windows(2) {
            p.push(0.5 * (w[0] + w[1]));
        }
        p
    };
    let xs = pts(&cuts[0]);
    let ys = if dim == 1 { vec![0.0] } else { pts(&cuts[1]) };
    for &x in &xs {
        for &y in &ys {
            let p = [x, y];
            let hit = boxes.iter().any(|b| (0..dim).all(|d| b.0[d] <= p[d] && p[d] <= b.1[d]));
            if !hit {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dim: usize, m: usize) -> Grid {
        Grid::new(dim, 1.0, m).unwrap()
    }

    /// Enumerates every dyadic cube and keeps candidates whose parent is not one.
    fn brute_force_family(region: &OpenRegion) -> Vec<DyadicCube> {
        let lat = Lattice::new(region.grid());
        let cand = |c: &DyadicCube| {
            let (a, b) = lat.cell_range(c);
            let mut all = true;
            let mut best = u64::MAX;
            for i in a[0]..b[0] {
                for j in a[1]..b[1] {
                    let f = region.grid().flat([i, j]);
                    all &= region.is_member(f);
                    best = best.min(region.dist_sq_cells(f));
                }
            }
            all && lower_bound_holds(&lat, c, best)
        };
        let mut out = Vec::new();
        for level in 0..=lat.max_level() {
            let per = 1u64 << level;
            let n1 = if lat.dim == 1 { 1 } else { per };
            for a in 0..per {
                for b in 0..n1 {
                    let c = DyadicCube::new(level, [a, b]);
                    if cand(&c) && c.parent().is_none_or(|p| !cand(&p)) {
                        out.push(c);
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn right_half_line_chain() {
        // Complement is the leftmost cell; cubes halve toward it with dist = l.
        let g = grid(1, 4096);
        let region = OpenRegion::new(g, (0..4096).map(|i| i > 0).collect()).unwrap();
        let fam = whitney_decompose(&region).unwrap();
        let mut got: Vec<_> = fam.cubes().to_vec();
        got.sort();
        assert_eq!(got, brute_force_family(&region));
        for c in fam.cubes() {
            let l = c.side(&g);
            let d = distance_to_complement(&region, c);
            assert!((d - l).abs() < 1e-12, "cube {c:?}: dist {d} vs side {l}");
        }
        // Chain [2L 2^-k-1, 2L 2^-k] in shifted coordinates: one cube per level.
        let mut levels: Vec<u32> = fam.cubes().iter().map(|c| c.level).collect();
        levels.sort();
        assert_eq!(levels, (1..=12).collect::<Vec<_>>());
        let chk = check_family(&fam);
        assert!(chk.all_pass(), "{chk:?}");
        assert_eq!(chk.min_dist_ratio, 1.0);
        let pairs = touching_pairs(&fam);
        assert_eq!(pairs.len(), 11);
        for (i, j) in pairs {
            let r = fam.cubes()[i].side(&g) / fam.cubes()[j].side(&g);
            assert!(r == 0.5 || r == 2.0);
        }
    }

    #[test]
    fn full_domain_is_rejected() {
        let g = grid(2, 64);
        assert!(OpenRegion::new(g, vec![true; g.len()]).is_err());
        assert!(OpenRegion::new(g, vec![false; g.len()]).is_err());
    }

    #[test]
    fn domain_minus_boundary_cell_2d() {
        let g = grid(2, 64);
        let mut mask = vec![true; g.len()];
        mask[g.flat([0, 17])] = false;
        let region = OpenRegion::new(g, mask).unwrap();
        let fam = whitney_decompose(&region).unwrap();
        let mut got = fam.cubes().to_vec();
        got.sort();
        assert_eq!(got, brute_force_family(&region));
        let chk = check_family(&fam);
        assert!(chk.all_pass(), "{chk:?}");
        assert_eq!(chk.smallest_side_cells, 0.5);
        assert!(fam.cubes().iter().any(|c| c.side(&g) >= 0.5));
    }

    #[test]
    fn floor_variant_reports_locus() {
        let g = grid(1, 256);
        let region = OpenRegion::new(g, (0..256).map(|i| i > 0).collect()).unwrap();
        match whitney_decompose_with_floor(&region, RESOLUTION_FLOOR_CELLS) {
            Err(Error::Resolution { locus, .. }) => {
                let x: f64 = locus.trim_start_matches("x = ").parse().unwrap();
                assert!(x < -0.98, "{locus}");
            }
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn distance_examples() {
        let g = grid(1, 256);
        let h = g.spacing();
        let region = OpenRegion::from_predicate(g, |x| x[0] > 0.0).unwrap();
        // Cube [0.25, 0.5]: nearest complement center is -h/2, nearest cube center 0.25 + h/2.
        let c = DyadicCube::new(3, [5, 0]);
        assert_eq!(c.lower(&g)[0], 0.25);
        assert!((distance_to_complement(&region, &c) - (0.25 + h)).abs() < 1e-12);
        let outside = DyadicCube::new(3, [1, 0]);
        assert_eq!(distance_to_complement(&region, &outside), 0.0);

        let g2 = grid(2, 128);
        let r = 0.5;
        let ball = OpenRegion::from_predicate(g2, |x| x[0] * x[0] + x[1] * x[1] < r * r).unwrap();
        let center_cell = DyadicCube::new(7, [64, 64]);
        assert!((distance_to_complement(&ball, &center_cell) - r).abs() <= g2.spacing());
    }

    #[test]
    fn single_cube_has_no_touching_pairs() {
        // Region = [0, 1/2) x [0, 1/2) far from its complement is not one cube,
        // so build the family directly.
        let g = grid(2, 64);
        let region = OpenRegion::from_predicate(g, |x| x[0] > 0.0).unwrap();
        let fam = WhitneyFamily { region: Arc::new(region), cubes: vec![DyadicCube::new(2, [2, 2])], epsilon: 0.125 };
        assert!(touching_pairs(&fam).is_empty());
    }

    #[test]
    fn chain_dilations_meet_only_consecutive() {
        let g = grid(1, 1024);
        let region = OpenRegion::new(g, (0..1024).map(|i| i > 0).collect()).unwrap();
        let fam = whitney_decompose(&region).unwrap();
        let dil = dilate_family(&fam, 0.125).unwrap();
        let mut order: Vec<usize> = (0..dil.len()).collect();
        order.sort_by(|&a, &b| dil[a].bounds(&g).0[0].total_cmp(&dil[b].bounds(&g).0[0]));
        for (x, &a) in order.iter().enumerate() {
            for (y, &b) in order.iter().enumerate() {
                if x == y {
                    continue;
                }
                let (la, ha) = dil[a].bounds(&g);
                let (lb, hb) = dil[b].bounds(&g);
                let meet = la[0] <= hb[0] && lb[0] <= ha[0];
                assert_eq!(meet, x.abs_diff(y) == 1, "cubes {a} {b}");
            }
        }
        assert!(dilate_family(&fam, 0.25).is_err());
        assert!(dilate_family(&fam, 0.0).is_err());
    }

    #[test]
    fn nested_identical_regions() {
        let g = grid(2, 64);
        let region = OpenRegion::from_predicate(g, |x| x[0] * x[0] + x[1] * x[1] < 0.4).unwrap();
        let fam = whitney_decompose(&region).unwrap();
        let rep = nested_stats(&fam, &fam).unwrap();
        // Every cube meets itself and its touching neighbors.
        assert!(rep.max_length_ratio >= 1.0 && rep.max_length_ratio <= 4.0);
        assert!(rep.max_cover_count >= 2);
        assert!(rep.cover_contains && rep.dilated_cover_contains);
        assert!(rep.all_pass());
    }

    #[test]
    fn nested_rejects_non_subset() {
        let g = grid(1, 64);
        let a = whitney_decompose(&OpenRegion::from_predicate(g, |x| x[0] > 0.0).unwrap()).unwrap();
        let b = whitney_decompose(&OpenRegion::from_predicate(g, |x| x[0] > -0.5).unwrap()).unwrap();
        assert!(nested_stats(&a, &b).is_err());
        assert!(nested_stats(&b, &a).is_ok());
    }

    #[test]
    fn record_roundtrip() {
        let g = grid(2, 64);
        let region = OpenRegion::from_predicate(g, |x| x[0] + x[1] < 0.3).unwrap();
        let fam = whitney_decompose(&region).unwrap();
        let text = fam.to_record();
        let back = WhitneyFamily::from_record(&text, &region).unwrap();
        assert_eq!(back.cubes(), fam.cubes());
        let other = OpenRegion::from_predicate(g, |x| x[0] < 0.0).unwrap();
        assert!(WhitneyFamily::from_record(&text, &other).is_err());
    }

    #[test]
    fn box_cover_arrangement() {
        let t = ([0.0, 0.0], [2.0, 2.0]);
        let halves = [([0.0, 0.0], [1.0, 2.0]), ([1.0, 0.0], [2.0, 2.0])];
        assert!(box_covered(&t, &halves, 2));
        assert!(!box_covered(&t, &halves[..1], 2));
        let gap = [([0.0, 0.0], [0.9, 2.0]), ([1.0, 0.0], [2.0, 2.0])];
        assert!(!box_covered(&t, &gap, 2));
    }
}
