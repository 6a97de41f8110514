//! Run configuration: TOML schema, defaults and semantic validation.

use std::fmt;
use std::path::{Path, PathBuf};

use gapbif::blochtest::Cutoff;
use gapbif::branch::RateTolerances;
use gapbif::nonlinearity::{Family, Weight};
use gapbif::solver::{LinkingConfig, SolverConfig};
use gapbif::spectral::{GapShift, PeriodicPotential};
use gapbif::suites::{BlochParams, GradientParams, LpParams, MinorantParams, ModelSpec, SpectralParams, SweepParams, ZetaParams};
use serde::{Deserialize, Serialize};

/// A malformed or inconsistent configuration; `key` is the dotted path of the offending entry.
#[derive(Debug)]
pub enum ConfigError {
    Read { path: PathBuf, source: std::io::Error },
    Parse(String),
    Invalid { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Read { path, source } => write!(f, "cannot read config {}: {source}", path.display()),
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::Invalid { key, message } => write!(f, "invalid value for `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Read { source, .. } => Some(source),
            _ => None,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Radial profile of the cutoff used to build `Ψ_R` and `ζ_λ`.
    pub cutoff: Cutoff,
    pub potential: PotentialSection,
    pub grid: GridSection,
    pub gap: GapSection,
    pub nonlinearity: NonlinearitySection,
    pub solver: SolverSection,
    pub linking: LinkingSection,
    pub sweep: SweepSection,
    pub checks: ChecksSection,
    pub spectral: SpectralSection,
    pub bloch: BlochSection,
    pub zeta: ZetaSection,
    pub minorant: MinorantSection,
    pub gradient: GradientSection,
    pub lp: LpSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            output_dir: PathBuf::from("gapbif-out"),
            cutoff: Cutoff::SmoothStep,
            potential: PotentialSection::default(),
            grid: GridSection::default(),
            gap: GapSection::default(),
            nonlinearity: NonlinearitySection::default(),
            solver: SolverSection::default(),
            linking: LinkingSection::default(),
            sweep: SweepSection::default(),
            checks: ChecksSection::default(),
            spectral: SpectralSection::default(),
            bloch: BlochSection::default(),
            zeta: ZetaSection::default(),
            minorant: MinorantSection::default(),
            gradient: GradientSection::default(),
            lp: LpSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    Mathieu,
    Constant,
    Table,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub name: PotentialName,
    pub q: f64,
    pub value: f64,
    pub values: Vec<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { name: PotentialName::Mathieu, q: 1.0, value: 0.0, values: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub points_per_cell: usize,
    /// Cells of the truncated domain used by the splitting checks.
    pub cells: usize,
    pub bands: usize,
    pub k_points: usize,
    /// Supercell factor of the dense eigenvalue oracle.
    pub oracle_factor: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { points_per_cell: 32, cells: 8, bands: 6, k_points: 65, oracle_factor: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftRule {
    Midpoint,
    Fraction,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSection {
    pub index: usize,
    pub threshold: f64,
    pub shift: ShiftRule,
    pub shift_value: f64,
}

impl Default for GapSection {
    fn default() -> Self {
        Self { index: 0, threshold: 1e-3, shift: ShiftRule::Midpoint, shift_value: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightName {
    OnePlusCos,
    Constant,
    Table,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearitySection {
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    pub weight: WeightName,
    pub weight_value: f64,
    pub weight_values: Vec<f64>,
    pub dim: usize,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            family: "pure_power".into(),
            alpha: 4.0,
            beta: 4.0,
            weight: WeightName::OnePlusCos,
            weight_value: 1.0,
            weight_values: Vec::new(),
            dim: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub trivial_threshold: f64,
    pub use_symmetry: bool,
    /// Relative tail left outside the solver domain.
    pub tail: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            damping: s.damping,
            trivial_threshold: s.trivial_threshold,
            use_symmetry: s.use_symmetry,
            tail: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkingSection {
    pub ascent_iters: usize,
    pub boundary_samples: usize,
}

impl Default for LinkingSection {
    fn default() -> Self {
        let l = LinkingConfig::default();
        Self { ascent_iters: l.ascent_iters, boundary_samples: l.boundary_samples }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// `d = b − λ` range as fractions of the gap width.
    pub d_max: f64,
    pub d_min: f64,
    pub points: usize,
    pub continuation: bool,
    pub fit_d_max: f64,
    pub norm_tolerance: f64,
    pub energy_tolerance: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let p = SweepParams::default();
        Self {
            d_max: p.d_max,
            d_min: p.d_min,
            points: p.points,
            continuation: p.continuation,
            fit_d_max: p.fit_d_max,
            norm_tolerance: p.tolerances.norm,
            energy_tolerance: p.tolerances.energy,
        }
    }
}

/// Which suites `full-report` runs.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSection {
    pub spectral: bool,
    pub bloch: bool,
    pub zeta: bool,
    pub minorant: bool,
    pub gradient: bool,
    pub sweep: bool,
    pub lp: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self { spectral: true, bloch: true, zeta: true, minorant: true, gradient: true, sweep: true, lp: true }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub lambdas: usize,
    pub samples: usize,
    pub slack: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        let p = SpectralParams::default();
        Self { lambdas: p.lambdas, samples: p.samples, slack: p.slack }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlochSection {
    pub radii: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for BlochSection {
    fn default() -> Self {
        let p = BlochParams::default();
        Self { radii: p.radii, gammas: p.gammas }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZetaSection {
    /// Values of `b − λ` (absolute, in the shifted frame).
    pub distances: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for ZetaSection {
    fn default() -> Self {
        let p = ZetaParams::default();
        Self { distances: p.distances, gammas: p.gammas }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinorantSection {
    pub pairs: usize,
    pub samples: usize,
}

impl Default for MinorantSection {
    fn default() -> Self {
        let p = MinorantParams::default();
        Self { pairs: p.pairs, samples: p.samples }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientSection {
    pub pairs: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub cells: usize,
}

impl Default for GradientSection {
    fn default() -> Self {
        let p = GradientParams::default();
        Self { pairs: p.pairs, epsilon: p.epsilon, tolerance: p.tolerance, cells: p.cells }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpSection {
    pub cells: usize,
    pub bumps: usize,
    pub spread: f64,
    pub translates: i64,
    pub packet_radii: Vec<f64>,
    pub pairs: usize,
    pub riesz_orders: Vec<usize>,
    pub riesz_vectors: usize,
}

impl Default for LpSection {
    fn default() -> Self {
        let p = LpParams::default();
        Self {
            cells: p.cells,
            bumps: p.bumps,
            spread: p.spread,
            translates: p.translates,
            packet_radii: p.packet_radii,
            pairs: p.pairs,
            riesz_orders: p.riesz_orders,
            riesz_vectors: p.riesz_vectors,
        }
    }
}

fn finite(key: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite, got {x}")))
    }
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {x}")))
    }
}

fn at_least(key: &str, n: usize, min: usize) -> Result<(), ConfigError> {
    if n >= min {
        Ok(())
    } else {
        Err(invalid(key, format!("must be at least {min}, got {n}")))
    }
}

fn all_positive(key: &str, xs: &[f64]) -> Result<(), ConfigError> {
    if xs.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    xs.iter().try_for_each(|&x| positive(key, x))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    /// Checks every key that the parser alone cannot reject.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.potential;
        match p.name {
            PotentialName::Mathieu => finite("potential.q", p.q)?,
            PotentialName::Constant => finite("potential.value", p.value)?,
            PotentialName::Table => {
                if p.values.is_empty() {
                    return Err(invalid("potential.values", "a table potential needs at least one value"));
                }
                p.values.iter().try_for_each(|&v| finite("potential.values", v))?;
            }
        }

        let g = &self.grid;
        at_least("grid.points_per_cell", g.points_per_cell, 4)?;
        at_least("grid.cells", g.cells, 2)?;
        at_least("grid.bands", g.bands, 2)?;
        if g.bands > g.points_per_cell {
            return Err(invalid("grid.bands", format!("cannot exceed grid.points_per_cell = {}", g.points_per_cell)));
        }
        at_least("grid.k_points", g.k_points, 8)?;
        at_least("grid.oracle_factor", g.oracle_factor, 1)?;

        positive("gap.threshold", self.gap.threshold)?;
        if self.gap.index + 1 >= g.bands {
            return Err(invalid("gap.index", format!("gap {} lies above the {} computed bands", self.gap.index, g.bands)));
        }
        match self.gap.shift {
            ShiftRule::Midpoint => {}
            ShiftRule::Fraction => {
                let t = self.gap.shift_value;
                if !(t > 0.0 && t < 1.0) {
                    return Err(invalid("gap.shift_value", format!("a fractional shift must lie in (0, 1), got {t}")));
                }
            }
            ShiftRule::Absolute => finite("gap.shift_value", self.gap.shift_value)?,
        }

        let n = &self.nonlinearity;
        let family = Family::parse(&n.family)
            .ok_or_else(|| invalid("nonlinearity.family", format!("expected pure_power or minorant, got {:?}", n.family)))?;
        if family == Family::Custom {
            return Err(invalid("nonlinearity.family", "custom nonlinearities are only available through the library"));
        }
        if n.dim != 1 {
            return Err(invalid("nonlinearity.dim", format!("only dimension 1 is implemented, got {}", n.dim)));
        }
        let critical = 2.0 + 4.0 / n.dim as f64;
        if !(n.alpha > 2.0 && n.alpha <= n.beta && n.beta < critical) {
            let key = if n.alpha > 2.0 && n.alpha <= n.beta { "nonlinearity.beta" } else { "nonlinearity.alpha" };
            return Err(invalid(key, format!("need 2 < alpha <= beta < {critical}, got alpha = {}, beta = {}", n.alpha, n.beta)));
        }
        match n.weight {
            WeightName::OnePlusCos => {}
            WeightName::Constant => positive("nonlinearity.weight_value", n.weight_value)?,
            WeightName::Table => {
                if n.weight_values.is_empty() || n.weight_values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(invalid("nonlinearity.weight_values", "a table weight needs finite nonnegative values"));
                }
            }
        }

        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        at_least("solver.max_iter", s.max_iter, 1)?;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(invalid("solver.damping", format!("must lie in (0, 1], got {}", s.damping)));
        }
        positive("solver.trivial_threshold", s.trivial_threshold)?;
        if !(s.tail > 0.0 && s.tail < 1.0) {
            return Err(invalid("solver.tail", format!("must lie in (0, 1), got {}", s.tail)));
        }
        at_least("linking.ascent_iters", self.linking.ascent_iters, 1)?;
        at_least("linking.boundary_samples", self.linking.boundary_samples, 1)?;

        let w = &self.sweep;
        if !(w.d_max > 0.0 && w.d_max < 1.0) {
            return Err(invalid("sweep.d_max", format!("must lie in (0, 1), got {}", w.d_max)));
        }
        if !(w.d_min > 0.0 && w.d_min < w.d_max) {
            return Err(invalid("sweep.d_min", format!("must lie in (0, sweep.d_max), got {}", w.d_min)));
        }
        at_least("sweep.points", w.points, 4)?;
        positive("sweep.fit_d_max", w.fit_d_max)?;
        positive("sweep.norm_tolerance", w.norm_tolerance)?;
        positive("sweep.energy_tolerance", w.energy_tolerance)?;

        at_least("spectral.lambdas", self.spectral.lambdas, 1)?;
        at_least("spectral.samples", self.spectral.samples, 1)?;
        if self.spectral.slack.is_nan() || self.spectral.slack < 0.0 {
            return Err(invalid("spectral.slack", "must be nonnegative"));
        }
        all_positive("bloch.radii", &self.bloch.radii)?;
        all_positive("bloch.gammas", &self.bloch.gammas)?;
        all_positive("zeta.distances", &self.zeta.distances)?;
        all_positive("zeta.gammas", &self.zeta.gammas)?;
        at_least("minorant.pairs", self.minorant.pairs, 1)?;
        at_least("minorant.samples", self.minorant.samples, 1)?;
        at_least("gradient.pairs", self.gradient.pairs, 1)?;
        positive("gradient.epsilon", self.gradient.epsilon)?;
        positive("gradient.tolerance", self.gradient.tolerance)?;
        at_least("gradient.cells", self.gradient.cells, 4)?;
        at_least("lp.cells", self.lp.cells, 2)?;
        at_least("lp.bumps", self.lp.bumps, 1)?;
        positive("lp.spread", self.lp.spread)?;
        all_positive("lp.packet_radii", &self.lp.packet_radii)?;
        at_least("lp.pairs", self.lp.pairs, 1)?;
        if self.lp.riesz_orders.len() < 2 || self.lp.riesz_orders.windows(2).any(|w| w[1] != 2 * w[0]) || self.lp.riesz_orders[0] == 0 {
            return Err(invalid("lp.riesz_orders", "need at least two positive orders, each double the previous"));
        }
        at_least("lp.riesz_vectors", self.lp.riesz_vectors, 1)?;
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        let p = &self.potential;
        let potential = match p.name {
            PotentialName::Mathieu => PeriodicPotential::mathieu(p.q),
            PotentialName::Constant => PeriodicPotential::constant(p.value),
            PotentialName::Table => PeriodicPotential::from_table(p.values.clone()),
        }
        .map_err(|e| invalid("potential", e.to_string()))?;
        let shift = match self.gap.shift {
            ShiftRule::Midpoint => GapShift::Midpoint,
            ShiftRule::Fraction => GapShift::Fraction(self.gap.shift_value),
            ShiftRule::Absolute => GapShift::Absolute(self.gap.shift_value),
        };
        let n = &self.nonlinearity;
        let weight = match n.weight {
            WeightName::OnePlusCos => Weight::OnePlusCos,
            WeightName::Constant => Weight::constant(n.weight_value).map_err(|e| invalid("nonlinearity.weight_value", e.to_string()))?,
            WeightName::Table => Weight::table(n.weight_values.clone()).map_err(|e| invalid("nonlinearity.weight_values", e.to_string()))?,
        };
        let family = Family::parse(&n.family).ok_or_else(|| invalid("nonlinearity.family", format!("unknown family {:?}", n.family)))?;
        Ok(ModelSpec {
            potential,
            points_per_cell: self.grid.points_per_cell,
            bands: self.grid.bands,
            k_points: self.grid.k_points,
            gap_index: self.gap.index,
            gap_threshold: self.gap.threshold,
            shift,
            family,
            alpha: n.alpha,
            beta: n.beta,
            weight,
            dim: n.dim,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig { tol: s.tol, max_iter: s.max_iter, damping: s.damping, trivial_threshold: s.trivial_threshold, use_symmetry: s.use_symmetry }
    }

    pub fn linking_config(&self) -> LinkingConfig {
        LinkingConfig { ascent_iters: self.linking.ascent_iters, boundary_samples: self.linking.boundary_samples }
    }

    pub fn spectral_params(&self) -> SpectralParams {
        SpectralParams {
            cells: self.grid.cells,
            oracle_factor: self.grid.oracle_factor,
            lambdas: self.spectral.lambdas,
            samples: self.spectral.samples,
            slack: self.spectral.slack,
        }
    }

    pub fn bloch_params(&self) -> BlochParams {
        BlochParams { radii: self.bloch.radii.clone(), gammas: self.bloch.gammas.clone(), cutoff: self.cutoff }
    }

    pub fn zeta_params(&self) -> ZetaParams {
        ZetaParams { distances: self.zeta.distances.clone(), gammas: self.zeta.gammas.clone(), cutoff: self.cutoff }
    }

    pub fn minorant_params(&self) -> MinorantParams {
        MinorantParams { pairs: self.minorant.pairs, samples: self.minorant.samples }
    }

    pub fn gradient_params(&self) -> GradientParams {
        let g = &self.gradient;
        GradientParams { pairs: g.pairs, epsilon: g.epsilon, tolerance: g.tolerance, cells: g.cells }
    }

    pub fn sweep_params(&self) -> SweepParams {
        let w = &self.sweep;
        SweepParams {
            d_max: w.d_max,
            d_min: w.d_min,
            points: w.points,
            tail: self.solver.tail,
            continuation: w.continuation,
            fit_d_max: w.fit_d_max,
            cutoff: self.cutoff,
            tolerances: RateTolerances { norm: w.norm_tolerance, energy: w.energy_tolerance },
        }
    }

    pub fn lp_params(&self) -> LpParams {
        let l = &self.lp;
        LpParams {
            cells: l.cells,
            bumps: l.bumps,
            spread: l.spread,
            translates: l.translates,
            packet_radii: l.packet_radii.clone(),
            pairs: l.pairs,
            riesz_orders: l.riesz_orders.clone(),
            riesz_vectors: l.riesz_vectors,
        }
    }
}
