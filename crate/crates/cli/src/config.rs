//! The run configuration: one TOML document, unknown keys rejected.

use std::path::{Path, PathBuf};

use hardy_core::decompose::{DecomposeOptions, LevelPolicy};
use hardy_core::maximal::{default_order, default_profiles, default_scales};
use hardy_core::operators::BoundMode;
use hardy_core::whitney::DEFAULT_EPSILON;
use hardy_core::{BuiltinSpec, FamilyConfig, Grid, MollifierFamily, OperatorKind, OperatorSpec, ProfileKind, SampledFunction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::region::RegionConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub p: f64,
    pub s: f64,
    pub epsilon: f64,
    /// Output directory; not part of the config hash.
    pub out: PathBuf,
    pub grid: GridConfig,
    pub family: FamilySection,
    pub levels: LevelsConfig,
    pub tolerances: Tolerances,
    pub whitney: WhitneyConfig,
    pub input: InputConfig,
    pub harness: HarnessConfig,
    pub suite: SuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            p: 1.0,
            s: 2.0,
            epsilon: DEFAULT_EPSILON,
            out: PathBuf::from("hardy-out"),
            grid: GridConfig::default(),
            family: FamilySection::default(),
            levels: LevelsConfig::default(),
            tolerances: Tolerances::default(),
            whitney: WhitneyConfig::default(),
            input: InputConfig::default(),
            harness: HarnessConfig::default(),
            suite: SuiteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 1, half_width: 1.0, points_per_axis: 1024 }
    }
}

/// Omitted entries take the standard family for the configured `p`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<ProfileKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsConfig {
    pub span: u32,
    pub min_side_cells: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_min: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_max: Option<i32>,
}

impl Default for LevelsConfig {
    fn default() -> Self {
        let p = LevelPolicy::default();
        Self { span: p.span, min_side_cells: p.min_side_cells, j_min: None, j_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative moment residual allowed in atom validation.
    pub atom: f64,
    /// Largest relative `L^s` reconstruction floor accepted by `decompose`.
    pub reconstruction: f64,
    /// Slack on harness ratios.
    pub harness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { atom: 1e-10, reconstruction: 0.02, harness: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WhitneyConfig {
    pub region: RegionConfig,
    /// Optional subregion for nested statistics; absent unless given
    /// whenever `[whitney]` appears in the document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<RegionConfig>,
}

impl Default for WhitneyConfig {
    fn default() -> Self {
        Self { region: RegionConfig::ball([0.0, 0.0], 0.5), inner: Some(RegionConfig::ball([0.1, 0.0], 0.25)) }
    }
}

/// Exactly one of `builtin` and `file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinSpec>,
    /// A `SampledFunction` record.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self { builtin: Some(BuiltinSpec::named("haar")), file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Identity,
    Zero,
    Scalar { c: f64 },
    /// Convolution with a unit-mass kernel of the given width (in units of `L`).
    Convolution { profile: KernelProfile, width: f64 },
    TruncatedHilbert {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
    /// Applied in list order.
    Composition { operators: Vec<OperatorConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelProfile {
    Gaussian,
    Box,
}

impl OperatorConfig {
    pub fn to_kind(&self, grid: Grid) -> Result<OperatorKind, CliError> {
        Ok(match self {
            OperatorConfig::Identity => OperatorKind::Identity,
            OperatorConfig::Zero => OperatorKind::Zero,
            OperatorConfig::Scalar { c } => OperatorKind::Scalar(*c),
            OperatorConfig::Convolution { profile, width } => OperatorKind::Convolution(kernel(grid, *profile, *width)?),
            OperatorConfig::TruncatedHilbert { cutoff } => OperatorKind::TruncatedHilbert { cutoff: *cutoff },
            OperatorConfig::Composition { operators } => {
                OperatorKind::Composition(operators.iter().map(|o| o.to_kind(grid)).collect::<Result<_, _>>()?)
            }
        })
    }

    /// Short file-name friendly label.
    pub fn label(&self) -> String {
        match self {
            OperatorConfig::Identity => "identity".into(),
            OperatorConfig::Zero => "zero".into(),
            OperatorConfig::Scalar { .. } => "scalar".into(),
            OperatorConfig::Convolution { profile: KernelProfile::Gaussian, .. } => "gaussian_convolution".into(),
            OperatorConfig::Convolution { profile: KernelProfile::Box, .. } => "box_convolution".into(),
            OperatorConfig::TruncatedHilbert { .. } => "truncated_hilbert".into(),
            OperatorConfig::Composition { .. } => "composition".into(),
        }
    }
}

/// Unit-mass kernel laid out with displacement `(c - m/2) h` at cell `c`.
fn kernel(grid: Grid, profile: KernelProfile, width: f64) -> Result<SampledFunction, CliError> {
    let w = width * grid.half_width();
    if !(w > 0.0 && w.is_finite()) {
        return Err(CliError::config(format!("kernel width must be positive, got {width}")));
    }
    let m = grid.points_per_axis();
    let h = grid.spacing();
    let mut v = vec![0.0; grid.len()];
    for (i, x) in v.iter_mut().enumerate() {
        let idx = grid.multi(i);
        let mut r2 = 0.0;
        let mut inside = true;
        for d in 0..grid.dim() {
            let y = (idx[d] as f64 - (m / 2) as f64) * h;
            r2 += y * y;
            inside &= y.abs() <= w;
        }
        *x = match profile {
            KernelProfile::Gaussian => (-r2 / (w * w)).exp(),
            KernelProfile::Box => f64::from(u8::from(inside)),
        };
    }
    let mass: f64 = v.iter().sum::<f64>() * grid.cell_volume();
    v.iter_mut().for_each(|x| *x /= mass);
    Ok(SampledFunction::new(grid, v)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub operators: Vec<OperatorConfig>,
    pub modes: Vec<BoundMode>,
    pub trials: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            operators: vec![OperatorConfig::Identity, OperatorConfig::TruncatedHilbert { cutoff: None }],
            modes: vec![BoundMode::Lp, BoundMode::Hp],
            trials: 100,
        }
    }
}

/// Sizes of the acceptance suite run by `verify-all`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub whitney_regions: usize,
    pub whitney_points_1d: usize,
    pub whitney_points_2d: usize,
    pub nested_pairs: usize,
    pub lemma4_families: usize,
    pub decompose_points_1d: usize,
    pub decompose_points_2d: usize,
    pub builtins_1d: Vec<String>,
    pub builtins_2d: Vec<String>,
    pub exponents: Vec<f64>,
    pub refinement_limit: f64,
    pub operator_points: usize,
    pub operator_batch: usize,
    pub stability: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let all: Vec<String> = hardy_core::builtins::BUILTIN_NAMES.iter().map(|s| s.to_string()).collect();
        Self {
            whitney_regions: 50,
            whitney_points_1d: 4096,
            whitney_points_2d: 256,
            nested_pairs: 20,
            lemma4_families: 20,
            decompose_points_1d: 4096,
            decompose_points_2d: 256,
            builtins_1d: all.clone(),
            builtins_2d: all,
            exponents: vec![1.0, 2.0 / 3.0],
            refinement_limit: 2.0,
            operator_points: 4096,
            operator_batch: 100,
            stability: 0.2,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    /// Fills every defaulted family entry with its concrete value.
    pub fn resolved(&self) -> Result<Self, CliError> {
        let mut c = self.clone();
        let grid = c.grid()?;
        if c.family.order.is_none() {
            c.family.order = Some(default_order(grid.dim(), Some(c.p)));
        }
        if c.family.profiles.is_none() {
            c.family.profiles = Some(default_profiles(c.family.order.unwrap_or_default()));
        }
        if c.family.scales.is_none() {
            c.family.scales = Some(default_scales(&grid));
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved document with `out` cleared.
    pub fn hash(&self) -> Result<String, CliError> {
        let mut c = self.resolved()?;
        c.out = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml().as_bytes())))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.grid.dim, self.grid.half_width, self.grid.points_per_axis)?)
    }

    pub fn family(&self, grid: Grid) -> Result<MollifierFamily, CliError> {
        if self.family == FamilySection::default() {
            return Ok(MollifierFamily::standard(grid, self.p)?);
        }
        let r = self.resolved()?;
        let cfg = FamilyConfig {
            order: r.family.order.unwrap_or_default(),
            profiles: r.family.profiles.unwrap_or_default(),
            scales: self.family.scales.clone(),
        };
        Ok(MollifierFamily::from_config(grid, &cfg)?)
    }

    pub fn decompose_options(&self) -> DecomposeOptions {
        DecomposeOptions {
            policy: LevelPolicy {
                span: self.levels.span,
                min_side_cells: self.levels.min_side_cells,
                j_min: self.levels.j_min,
                j_max: self.levels.j_max,
            },
            epsilon: self.epsilon,
            atom_tol: self.tolerances.atom,
            ..DecomposeOptions::default()
        }
    }

    pub fn operator(&self, op: &OperatorConfig, grid: Grid) -> Result<OperatorSpec, CliError> {
        Ok(OperatorSpec::new(op.to_kind(grid)?, self.s)?)
    }

    /// The input function named by `[input]`.
    pub fn input_function(&self, grid: Grid) -> Result<SampledFunction, CliError> {
        match (&self.input.builtin, &self.input.file) {
            (Some(b), None) => Ok(hardy_core::builtin(grid, b)?),
            (None, Some(path)) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))?;
                let f = SampledFunction::read_record(std::io::BufReader::new(file))?;
                if f.grid() != &grid {
                    return Err(CliError::config("input file grid differs from [grid]"));
                }
                Ok(f)
            }
            _ => Err(CliError::config("[input] needs exactly one of `builtin` and `file`")),
        }
    }
}
