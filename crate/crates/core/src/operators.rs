//! Concrete operators bounded on `L^s` and the harness that checks uniform
//! bounds on atoms and the extension inequalities built on them.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::random_atom;
use crate::decompose::{atomic_decomposition, AtomicDecomposition};
use crate::error::{Error, Result};
use crate::fft::{convolve_offsets_direct, FftConvolver, OffsetKernel, Spectrum};
use crate::grid::{kernel_to_offsets, lp_power, Grid, SampledFunction};
use crate::maximal::{grand_maximal, MollifierFamily};
use crate::report::{pass_fail, KvDoc, Table};

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    Zero,
    Scalar(f64),
    /// `f -> f * kernel`, with the kernel laid out as for [`crate::grid::convolve`].
    Convolution(SampledFunction),
    /// Principal-value sum of `f(x - y) / (pi y)` over `|y| > cutoff`;
    /// `None` means two cells.
    TruncatedHilbert { cutoff: Option<f64> },
    /// Applied left to right: the first entry acts first.
    Composition(Vec<OperatorKind>),
}

impl OperatorKind {
    fn validate(&self) -> Result<()> {
        match self {
            OperatorKind::Scalar(c) if !c.is_finite() => Err(Error::invalid("scalar must be finite")),
            OperatorKind::TruncatedHilbert { cutoff: Some(e) } if !(*e >= 0.0 && e.is_finite()) => {
                Err(Error::invalid(format!("Hilbert cutoff must be nonnegative, got {e}")))
            }
            OperatorKind::Composition(list) => list.iter().try_for_each(|k| k.validate()),
            _ => Ok(()),
        }
    }

    fn young(&self) -> Option<f64> {
        match self {
            OperatorKind::Identity => Some(1.0),
            OperatorKind::Zero => Some(0.0),
            OperatorKind::Scalar(c) => Some(c.abs()),
            OperatorKind::Convolution(k) => {
                Some(k.values().iter().map(|v| v.abs()).sum::<f64>() * k.grid().cell_volume())
            }
            OperatorKind::TruncatedHilbert { .. } => None,
            OperatorKind::Composition(list) => list.iter().map(|k| k.young()).product(),
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Identity => write!(f, "identity"),
            OperatorKind::Zero => write!(f, "zero"),
            OperatorKind::Scalar(c) => write!(f, "scalar({c})"),
            OperatorKind::Convolution(_) => write!(f, "convolution"),
            OperatorKind::TruncatedHilbert { cutoff: None } => write!(f, "truncated_hilbert"),
            OperatorKind::TruncatedHilbert { cutoff: Some(e) } => write!(f, "truncated_hilbert({e})"),
            OperatorKind::Composition(list) => {
                let names: Vec<String> = list.iter().map(|k| k.to_string()).collect();
                write!(f, "composition({})", names.join(", "))
            }
        }
    }
}

/// An operator together with the exponent `s` on which it is declared bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub declared_s: f64,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, declared_s: f64) -> Result<Self> {
        if !(declared_s > 1.0 && declared_s.is_finite()) {
            return Err(Error::invalid(format!("declared s must lie in (1, inf), got {declared_s}")));
        }
        kind.validate()?;
        Ok(Self { kind, declared_s })
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    /// `||T||_{L^s -> L^s} <= ||kernel||_1` for convolution-type operators.
    pub fn young_bound(&self) -> Option<f64> {
        self.kind.young()
    }

    /// Precomputes kernel spectra for repeated application on `grid`.
    pub fn prepare(&self, grid: Grid) -> Result<PreparedOperator> {
        let mut steps = Vec::new();
        flatten(&self.kind, grid, &mut steps)?;
        Ok(PreparedOperator { grid, steps })
    }
}

enum Step {
    Scale(f64),
    Zero,
    Convolve { kernel: OffsetKernel, conv: FftConvolver, spectrum: Spectrum, factor: f64 },
}

fn flatten(kind: &OperatorKind, grid: Grid, out: &mut Vec<Step>) -> Result<()> {
    match kind {
        OperatorKind::Identity => {}
        OperatorKind::Zero => out.push(Step::Zero),
        OperatorKind::Scalar(c) => out.push(Step::Scale(*c)),
        OperatorKind::Convolution(k) => {
            if k.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            let kernel = kernel_to_offsets(k);
            let conv = FftConvolver::new(grid, kernel.radius());
            let spectrum = conv.kernel_spectrum(&kernel);
            out.push(Step::Convolve { kernel, conv, spectrum, factor: grid.cell_volume() });
        }
        OperatorKind::TruncatedHilbert { cutoff } => {
            if grid.dim() != 1 {
                return Err(Error::invalid("the truncated Hilbert transform is defined in one dimension only"));
            }
            let kernel = hilbert_kernel(grid, cutoff.unwrap_or(2.0 * grid.spacing()));
            let conv = FftConvolver::new(grid, kernel.radius());
            let spectrum = conv.kernel_spectrum(&kernel);
            out.push(Step::Convolve { kernel, conv, spectrum, factor: grid.spacing() });
        }
        OperatorKind::Composition(list) => {
            for k in list {
                flatten(k, grid, out)?;
            }
        }
    }
    Ok(())
}

/// `1 / (pi d h)` at displacement `d` cells when `|d| h > cutoff`.
fn hilbert_kernel(grid: Grid, cutoff: f64) -> OffsetKernel {
    let h = grid.spacing();
    let m = grid.points_per_axis();
    OffsetKernel::from_fn(1, m - 1, |d| {
        let y = d[0] as f64 * h;
        if y.abs() > cutoff {
            1.0 / (std::f64::consts::PI * y)
        } else {
            0.0
        }
    })
}

/// An operator ready to apply on one grid.
pub struct PreparedOperator {
    grid: Grid,
    steps: Vec<Step>,
}

impl PreparedOperator {
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        self.run(f, false)
    }

    /// Same as [`PreparedOperator::apply`] with every convolution summed directly.
    pub fn apply_direct(&self, f: &SampledFunction) -> Result<SampledFunction> {
        self.run(f, true)
    }

    fn run(&self, f: &SampledFunction, direct: bool) -> Result<SampledFunction> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut v = f.values().to_vec();
        for step in &self.steps {
            match step {
                Step::Scale(c) => v.iter_mut().for_each(|x| *x *= c),
                Step::Zero => v.iter_mut().for_each(|x| *x = 0.0),
                Step::Convolve { kernel, conv, spectrum, factor } => {
                    if v.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    v = if direct {
                        let vol = self.grid.cell_volume();
                        convolve_offsets_direct(&self.grid, &v, kernel).into_iter().map(|x| x / vol * factor).collect()
                    } else {
                        conv.apply_raw(&conv.forward(&v), spectrum).into_iter().map(|x| x * factor).collect()
                    };
                }
            }
        }
        SampledFunction::new(self.grid, v)
    }
}

/// `T f` on the grid of `f`.
pub fn apply(t: &OperatorSpec, f: &SampledFunction) -> Result<SampledFunction> {
    t.prepare(*f.grid())?.apply(f)
}

/// Which size of `T a` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `||T a||_p`.
    Lp,
    /// `||M(T a)||_p`.
    Hp,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMode::Lp => "lp",
            BoundMode::Hp => "hp",
        })
    }
}

/// One side-by-side comparison `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Margin {
    pub fn new(label: &str, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        Self { label: label.to_string(), lhs, rhs, ratio }
    }
}

/// Outcome of a harness run.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessReport {
    pub operator: String,
    pub mode: BoundMode,
    pub p: f64,
    /// Largest observed size of `T a`: a lower estimate of the true supremum.
    pub sup_atom_bound: f64,
    pub trials: usize,
    /// `(seed or term index, size of T a)` per trial.
    pub trial_values: Vec<(u64, f64)>,
    /// Inequalities that must hold.
    pub margins: Vec<Margin>,
    /// Comparisons reported without a pass criterion.
    pub reported: Vec<Margin>,
    pub tol: f64,
    pub pass: bool,
}

impl HarnessReport {
    fn finish(mut self) -> Self {
        self.pass = self.margins.iter().all(|m| m.ratio <= 1.0 + self.tol);
        self
    }

    /// Re-evaluates `pass` with slack `tol` on every ratio.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.finish()
    }

    pub fn margin(&self, label: &str) -> Option<&Margin> {
        self.margins.iter().chain(&self.reported).find(|m| m.label == label)
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("operator", &self.operator)
            .push("mode", self.mode)
            .push("p", self.p)
            .push("sup_atom_bound", format!("{:e}", self.sup_atom_bound))
            .push("trials", self.trials)
            .push("tol", format!("{:e}", self.tol));
        for m in self.margins.iter().chain(&self.reported) {
            d.push(format!("{}.lhs", m.label), format!("{:e}", m.lhs))
                .push(format!("{}.rhs", m.label), format!("{:e}", m.rhs))
                .push(format!("{}.ratio", m.label), format!("{:e}", m.ratio));
        }
        d.push("pass", pass_fail(self.pass));
        d
    }

    pub fn trial_table(&self) -> Table {
        let mut t = Table::new(["trial", "id", "value"]);
        for (n, (id, v)) in self.trial_values.iter().enumerate() {
            t.push_row([n.to_string(), id.to_string(), format!("{v:e}")]);
        }
        t
    }
}

/// Per-trial seeds: the first `n` draws of a generator seeded by `master`,
/// so a longer run extends a shorter one.
pub fn trial_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.gen()).collect()
}

fn size(g: &SampledFunction, p: f64, mode: BoundMode, fam: &MollifierFamily) -> Result<f64> {
    let v = match mode {
        BoundMode::Lp => lp_power(g.values(), g.grid().cell_volume(), p)?,
        BoundMode::Hp => lp_power(grand_maximal(g, fam)?.values(), g.grid().cell_volume(), p)?,
    };
    Ok(v.powf(1.0 / p))
}

/// Largest `||T a||_p` (or `||M(T a)||_p`) over `trials` random atoms on the
/// family's grid.
pub fn uniform_atom_bound(
    t: &OperatorSpec,
    p: f64,
    trials: usize,
    seed: u64,
    mode: BoundMode,
    fam: &MollifierFamily,
) -> Result<HarnessReport> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let grid = *fam.grid();
    let op = t.prepare(grid)?;
    let seeds = trial_seeds(seed, trials);
    let values: Vec<(u64, f64)> = seeds
        .par_iter()
        .map(|&s| {
            let a = random_atom(p, s, grid)?;
            Ok((s, size(&op.apply(&a.to_sampled())?, p, mode, fam)?))
        })
        .collect::<Result<_>>()?;
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.1));
    Ok(HarnessReport {
        operator: t.name(),
        mode,
        p,
        sup_atom_bound: sup,
        trials,
        trial_values: values,
        margins: Vec::new(),
        reported: Vec::new(),
        tol: 1e-9,
        pass: true,
    }
    .finish())
}

/// Decomposes `f` and checks the extension chain for `T`.
pub fn extension_check(
    t: &OperatorSpec,
    f: &SampledFunction,
    p: f64,
    s: f64,
    fam: &MollifierFamily,
) -> Result<HarnessReport> {
    let d = atomic_decomposition(f, p, s, fam)?;
    extension_check_on(t, f, &d, fam, BoundMode::Lp)
}

/// As [`extension_check`] with every size measured through the maximal function.
pub fn hp_extension_check(
    t: &OperatorSpec,
    f: &SampledFunction,
    p: f64,
    s: f64,
    fam: &MollifierFamily,
) -> Result<HarnessReport> {
    let d = atomic_decomposition(f, p, s, fam)?;
    extension_check_on(t, f, &d, fam, BoundMode::Hp)
}

/// Checks, for the truncated sum `f_J = sum lambda a` of `d`,
/// 1. `|T f_J| <= sum |lambda| |T a|` at every cell (with `M` applied in `Hp` mode),
/// 2. `||T f_J||_p^p <= sum |lambda|^p ||T a||_p^p <= sum |lambda|^p max ||T a||_p^p`,
///
/// and reports `||T f||_p^p / ||f||_{H^p}^p` against `sup^p c_lambda`.
pub fn extension_check_on(
    t: &OperatorSpec,
    f: &SampledFunction,
    d: &AtomicDecomposition,
    fam: &MollifierFamily,
    mode: BoundMode,
) -> Result<HarnessReport> {
    let grid = *f.grid();
    let p = d.p;
    let vol = grid.cell_volume();
    let op = t.prepare(grid)?;
    let measure = |g: &SampledFunction| -> Result<SampledFunction> {
        match mode {
            BoundMode::Lp => Ok(g.clone()),
            BoundMode::Hp => grand_maximal(g, fam),
        }
    };

    let mut fj = vec![0.0; grid.len()];
    for term in &d.terms {
        let a = term.atom.as_ref().ok_or_else(|| Error::precondition("decomposition was built without atoms"))?;
        a.func.add_into(term.lambda, &mut fj);
    }
    let fj = SampledFunction::new(grid, fj)?;
    let lhs_field = measure(&op.apply(&fj)?)?;

    let mut rhs_field = vec![0.0; grid.len()];
    let mut values = Vec::with_capacity(d.terms.len());
    let mut weighted = 0.0;
    let mut lambda_p = 0.0;
    for chunk in d.terms.chunks(64) {
        let parts: Vec<SampledFunction> = chunk
            .par_iter()
            .map(|term| measure(&op.apply(&term.atom.as_ref().expect("checked above").to_sampled())?))
            .collect::<Result<_>>()?;
        for (term, ta) in chunk.iter().zip(parts) {
            let lam = term.lambda.abs();
            for (r, v) in rhs_field.iter_mut().zip(ta.values()) {
                *r += lam * v.abs();
            }
            let np = lp_power(ta.values(), vol, p)?;
            values.push((values.len() as u64, np.powf(1.0 / p)));
            weighted += lam.powf(p) * np;
            lambda_p += lam.powf(p);
        }
    }
    let max_np = values.iter().fold(0.0f64, |m, v| m.max(v.1.powf(p)));

    let rhs_max = rhs_field.iter().fold(0.0f64, |m, v| m.max(*v));
    let slack = 1e-12 * rhs_max;
    let lhs_max = lhs_field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = lhs_field
        .values()
        .iter()
        .zip(&rhs_field)
        .map(|(l, r)| if l.abs() <= slack { 0.0 } else { l.abs() / (r + slack) })
        .fold(0.0f64, f64::max);
    let mut pointwise = Margin::new("pointwise", lhs_max, rhs_max);
    pointwise.ratio = worst;

    let lhs_np = lp_power(lhs_field.values(), vol, p)?;
    let tf = measure(&op.apply(f)?)?;
    let tf_np = lp_power(tf.values(), vol, p)?;
    let margins = vec![
        pointwise,
        Margin::new("p_triangle", lhs_np, weighted),
        Margin::new("quasi_norm", lhs_np, lambda_p * max_np),
    ];
    let reported = vec![Margin::new("corollary", tf_np / d.hp_norm_p, max_np * d.c_lambda())];
    Ok(HarnessReport {
        operator: t.name(),
        mode,
        p,
        sup_atom_bound: max_np.powf(1.0 / p),
        trials: values.len(),
        trial_values: values,
        margins,
        reported,
        tol: 1e-9,
        pass: true,
    }
    .finish())
}

/// Largest `||T g||_s / ||g||_s` over random test functions: a lower estimate
/// of the operator norm on `L^s`.
pub fn lower_norm_estimate(t: &OperatorSpec, grid: Grid, s: f64, trials: usize, seed: u64) -> Result<f64> {
    let op = t.prepare(grid)?;
    let vol = grid.cell_volume();
    let ratios: Vec<f64> = trial_seeds(seed, trials)
        .par_iter()
        .map(|&sd| {
            let mut rng = ChaCha8Rng::seed_from_u64(sd);
            let m = grid.points_per_axis();
            let margin = crate::grid::BOUNDARY_MARGIN_CELLS;
            let mut lo = [0usize; 2];
            let mut hi = [1usize; 2];
            for d in 0..grid.dim() {
                let a = rng.gen_range(margin..m - margin - 1);
                let b = rng.gen_range(a + 1..m - margin);
                lo[d] = a;
                hi[d] = b;
            }
            let v: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let idx = grid.multi(i);
                    let inside = (0..2).all(|d| idx[d] >= lo[d] && idx[d] < hi[d]);
                    if inside {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let g = SampledFunction::new(grid, v)?;
            let num = lp_power(op.apply(&g)?.values(), vol, s)?.powf(1.0 / s);
            let den = lp_power(g.values(), vol, s)?.powf(1.0 / s);
            Ok(if den > 0.0 { num / den } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(m: usize) -> Grid {
        Grid::new(1, 1.0, m).unwrap()
    }

    fn gaussian_kernel(grid: Grid, width: f64) -> SampledFunction {
        let h = grid.spacing();
        let m = grid.points_per_axis();
        // Kernel cell c stands for displacement (c - m/2) h.
        let mut v = vec![0.0; grid.len()];
        for (i, x) in v.iter_mut().enumerate() {
            let idx = grid.multi(i);
            let mut r2 = 0.0;
            for d in 0..grid.dim() {
                let y = (idx[d] as f64 - (m / 2) as f64) * h;
                r2 += y * y;
            }
            *x = (-r2 / (width * width)).exp();
        }
        SampledFunction::new(grid, v).unwrap()
    }

    #[test]
    fn trivial_kinds() {
        let g = grid1(64);
        let f = SampledFunction::from_fn(g, |x| x[0].sin()).unwrap();
        let id = OperatorSpec::new(OperatorKind::Identity, 2.0).unwrap();
        assert_eq!(apply(&id, &f).unwrap(), f);
        let zero = OperatorSpec::new(OperatorKind::Zero, 2.0).unwrap();
        assert!(apply(&zero, &f).unwrap().is_zero());
        let three = OperatorSpec::new(OperatorKind::Scalar(3.0), 2.0).unwrap();
        assert_eq!(apply(&three, &f).unwrap(), f.scaled(3.0));
        assert!(OperatorSpec::new(OperatorKind::Identity, 1.0).is_err());
    }

    #[test]
    fn hilbert_matches_direct_and_flips_parity() {
        let g = grid1(256);
        let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: None }, 2.0).unwrap();
        let op = t.prepare(g).unwrap();
        let bump = SampledFunction::from_fn(g, |x| (1.0 - 4.0 * x[0] * x[0]).max(0.0).powi(2)).unwrap();
        let fast = op.apply(&bump).unwrap();
        let slow = op.apply_direct(&bump).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let m = g.points_per_axis();
        let scale = slow.max_abs();
        for i in 0..m {
            assert!((slow.values()[i] + slow.values()[m - 1 - i]).abs() <= 1e-13 * scale);
        }
        let g2 = Grid::new(2, 1.0, 64).unwrap();
        assert!(t.prepare(g2).is_err());
    }

    #[test]
    fn hilbert_of_direct_sum_oracle() {
        let g = grid1(64);
        let h = g.spacing();
        let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: Some(2.5 * h) }, 2.0).unwrap();
        let f = SampledFunction::from_fn(g, |x| (3.0 * x[0]).cos() * (1.0 - x[0] * x[0])).unwrap();
        let out = apply(&t, &f).unwrap();
        for i in 0..64 {
            let mut want = 0.0;
            for j in 0..64 {
                let y = (i as f64 - j as f64) * h;
                if y.abs() > 2.5 * h {
                    want += f.values()[j] / (std::f64::consts::PI * y) * h;
                }
            }
            assert!((out.values()[i] - want).abs() < 1e-12, "{i}");
        }
    }

    #[test]
    fn linearity_of_every_kind() {
        let g = grid1(128);
        let kernel = gaussian_kernel(g, 0.05);
        let kinds = vec![
            OperatorKind::Identity,
            OperatorKind::Zero,
            OperatorKind::Scalar(-1.5),
            OperatorKind::Convolution(kernel.clone()),
            OperatorKind::TruncatedHilbert { cutoff: None },
            OperatorKind::Composition(vec![OperatorKind::Convolution(kernel), OperatorKind::TruncatedHilbert { cutoff: None }]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in kinds {
            let t = OperatorSpec::new(kind, 2.0).unwrap();
            let f = SampledFunction::new(g, (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let h = SampledFunction::new(g, (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let lhs = apply(&t, &f.add(&h).unwrap()).unwrap();
            let rhs = apply(&t, &f).unwrap().add(&apply(&t, &h).unwrap()).unwrap();
            let scale = rhs.max_abs().max(1.0);
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                assert!((a - b).abs() <= 1e-10 * scale, "{}", t.name());
            }
        }
    }

    #[test]
    fn young_bound_holds() {
        for g in [grid1(256), Grid::new(2, 1.0, 64).unwrap()] {
            let t = OperatorSpec::new(OperatorKind::Convolution(gaussian_kernel(g, 0.1)), 2.0).unwrap();
            let est = lower_norm_estimate(&t, g, 2.0, 16, 11).unwrap();
            assert!(est > 0.0);
            assert!(est <= t.young_bound().unwrap() + 1e-8);
        }
    }

    #[test]
    fn identity_and_zero_atom_bounds() {
        let g = grid1(512);
        let fam = MollifierFamily::standard(g, 1.0).unwrap();
        let id = OperatorSpec::new(OperatorKind::Identity, 2.0).unwrap();
        let r = uniform_atom_bound(&id, 1.0, 20, 5, BoundMode::Lp, &fam).unwrap();
        assert!(r.sup_atom_bound <= 1.0 + 1e-9);
        let zero = OperatorSpec::new(OperatorKind::Zero, 2.0).unwrap();
        let r = uniform_atom_bound(&zero, 1.0, 5, 5, BoundMode::Hp, &fam).unwrap();
        assert_eq!(r.sup_atom_bound, 0.0);
    }

    #[test]
    fn more_trials_never_lower_the_bound() {
        let g = grid1(512);
        let fam = MollifierFamily::standard(g, 1.0).unwrap();
        let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: None }, 2.0).unwrap();
        let a = uniform_atom_bound(&t, 1.0, 10, 9, BoundMode::Lp, &fam).unwrap();
        let b = uniform_atom_bound(&t, 1.0, 25, 9, BoundMode::Lp, &fam).unwrap();
        assert!(b.sup_atom_bound >= a.sup_atom_bound);
        assert_eq!(&b.trial_values[..10], &a.trial_values[..]);
    }

    #[test]
    fn trial_seeds_extend() {
        assert_eq!(trial_seeds(4, 3), trial_seeds(4, 7)[..3].to_vec());
    }
}
