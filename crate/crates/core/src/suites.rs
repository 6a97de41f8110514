//! Verification campaigns assembled from the module-level checks.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::blochtest::{edge_bloch_wave, gap_direction, verify_bloch_properties, verify_zeta_estimates, BlochError, BlochWave, Cutoff};
use crate::branch::{check_theorem, stretch_predictor, sweep, BranchError, BranchPoint, BranchProblem, RateTolerances, Schedule, SweepConfig, TheoremReport};
use crate::domain::{cells_for_radius, Domain, DomainCache};
use crate::lpcheck::{lp_continuity_scan, lp_direct_sum_check, riesz_check, LpError, LpProbeSet};
use crate::nonlinearity::{
    builtin_nonlinearity, check_assumptions, check_minorant_properties, energy, energy_gradient, AssumptionReport, ConvexMinorant, Family,
    Nonlinearity, NonlinearityError, SampleGrid, Weight,
};
use crate::report::{PropertyReport, Verdict};
use crate::solver::{
    envelope_width, initial_guess, linking_upper_bound, refined_guess, solve_critical_point, solver_cells, trivial_threshold, CriticalPoint,
    LinkingBound, LinkingConfig, SolverConfig, SolverError,
};
use crate::spectral::{
    band_curvature, bloch_bands, coercivity, find_gaps, h1_norm, quadratic_form, shift_to_gap, BandStructure, DiscreteOperator, GapShift,
    PeriodicPotential, SpectralError, SpectralGap,
};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Bloch(#[from] BlochError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Everything needed to set up the model problem.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub potential: PeriodicPotential,
    pub points_per_cell: usize,
    pub bands: usize,
    pub k_points: usize,
    pub gap_index: usize,
    pub gap_threshold: f64,
    pub shift: GapShift,
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    pub weight: Weight,
    pub dim: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            potential: PeriodicPotential::mathieu(1.0).expect("q = 1 is valid"),
            points_per_cell: 32,
            bands: 6,
            k_points: 65,
            gap_index: 0,
            gap_threshold: 1e-3,
            shift: GapShift::Midpoint,
            family: Family::PurePower,
            alpha: 4.0,
            beta: 4.0,
            weight: Weight::OnePlusCos,
            dim: 1,
        }
    }
}

/// Bands, the chosen gap moved to contain `0`, the edge wave and the nonlinearity.
pub struct Model {
    pub spec: ModelSpec,
    pub bands: BandStructure,
    /// The gap in the frame of the unshifted potential.
    pub raw_gap: SpectralGap,
    pub shift: f64,
    /// `V − s0`.
    pub potential: PeriodicPotential,
    /// The gap in the shifted frame.
    pub gap: SpectralGap,
    pub wave: BlochWave,
    /// `E''` of the upper band at its minimum.
    pub curvature: f64,
    pub nl: Nonlinearity,
    pub cache: DomainCache,
}

impl Model {
    pub fn build(spec: ModelSpec) -> Result<Self, SuiteError> {
        if spec.dim != 1 {
            return Err(SuiteError::Invalid(format!("only dimension 1 is implemented, got {}", spec.dim)));
        }
        let bands = bloch_bands(&spec.potential, spec.points_per_cell, spec.bands, spec.k_points)?;
        let gaps = find_gaps(&bands, spec.gap_threshold);
        let raw_gap = *gaps.get(spec.gap_index).ok_or_else(|| {
            SuiteError::Invalid(format!("gap index {} requested but only {} gaps wider than {} found", spec.gap_index, gaps.len(), spec.gap_threshold))
        })?;
        let shift = spec.shift.amount(&raw_gap);
        let (potential, gap) = shift_to_gap(&spec.potential, &raw_gap, spec.shift);
        if !gap.contains_zero {
            return Err(SuiteError::Invalid(format!("shift {shift} does not move 0 into the gap ({}, {})", raw_gap.a, raw_gap.b)));
        }
        let wave = edge_bloch_wave(&bands, &gap)?;
        let curvature = band_curvature(bands.cell(), gap.upper_band, gap.k_upper);
        let nl = builtin_nonlinearity(spec.family, spec.alpha, spec.beta, spec.weight.clone(), spec.dim)?;
        let cache = DomainCache::new(potential.clone(), spec.points_per_cell);
        Ok(Self { spec, bands, raw_gap, shift, potential, gap, wave, curvature, nl, cache })
    }

    pub fn operator(&self, cells: usize) -> Result<DiscreteOperator, SuiteError> {
        Ok(DiscreteOperator::new(self.potential.clone(), cells, self.spec.points_per_cell)?)
    }
}

fn verdict(name: &str, anchor: &str, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Verdict {
    Verdict { name: name.into(), anchor: anchor.into(), passed, value, threshold, detail: detail.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralParams {
    /// Cells of the truncated domain used for the splitting.
    pub cells: usize,
    /// The dense oracle uses `oracle_factor · cells` cells.
    pub oracle_factor: usize,
    pub lambdas: usize,
    pub samples: usize,
    pub slack: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self { cells: 8, oracle_factor: 4, lambdas: 9, samples: 100, slack: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub raw_gap: SpectralGap,
    pub gap: SpectralGap,
    pub shift: f64,
    pub oracle_a: f64,
    pub oracle_b: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub dim_y: usize,
    pub dim_z: usize,
    pub curvature: f64,
}

/// Gap edges against a dense supercell eigensolve, the constant-shift
/// identity, and the coercivity inequalities on random `y ∈ Y`, `z ∈ Z`.
pub fn spectral_suite(model: &Model, params: SpectralParams, seed: u64) -> Result<(PropertyReport, SpectralSummary), SuiteError> {
    let m = model.spec.points_per_cell;
    let columns = ["lambda", "alpha", "beta", "N", "max Q(y)+alpha|y|^2", "max beta|z|^2-Q(z)", "max N|y+z|^2-Q(z)+Q(y)"];
    let mut report = PropertyReport::new("spectral splitting", "Lemma 1.1", columns.iter().map(|s| s.to_string()).collect());

    // every band contributes one eigenvalue per cell of the supercell
    let cells = params.cells * params.oracle_factor;
    let dense = DiscreteOperator::new(model.spec.potential.clone(), cells, m)?.dense();
    let mut ev: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let j = model.raw_gap.lower_band + 1;
    let (oracle_a, oracle_b) = (ev[j * cells - 1], ev[j * cells]);
    let rel = ((oracle_a - model.raw_gap.a).abs() / oracle_a.abs().max(1.0)).max((oracle_b - model.raw_gap.b).abs() / oracle_b.abs().max(1.0));
    report.push(verdict(
        "gap edges vs dense oracle",
        "spectral gap",
        rel <= 1e-6,
        rel,
        1e-6,
        format!("band solve ({:.12}, {:.12}), dense {cells}-cell supercell ({oracle_a:.12}, {oracle_b:.12})", model.raw_gap.a, model.raw_gap.b),
    ));

    let c = 0.7;
    let flat = bloch_bands(&PeriodicPotential::zero(), m, model.spec.bands, 17)?;
    let lifted = bloch_bands(&PeriodicPotential::constant(c)?, m, model.spec.bands, 17)?;
    let mut shift_err: f64 = 0.0;
    for (e0, e1) in flat.energies.iter().zip(&lifted.energies) {
        for (x, y) in e0.iter().zip(e1) {
            shift_err = shift_err.max((y - x - c).abs() / y.abs().max(1.0));
        }
    }
    report.push(verdict("constant potential shifts bands", "spectral gap", shift_err <= 1e-12, shift_err, 1e-12, format!("V = {c} against V = 0")));
    report.push(verdict(
        "0 in shifted gap",
        "Lemma 1.1",
        model.gap.contains_zero,
        model.shift,
        0.0,
        format!("shifted gap ({}, {})", model.gap.a, model.gap.b),
    ));

    let domain = model.cache.get(params.cells)?;
    let op = &domain.op;
    let split = &domain.split;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [f64::NEG_INFINITY; 3];
    for i in 1..=params.lambdas {
        let lambda = model.gap.a + model.gap.width() * i as f64 / (params.lambdas + 1) as f64;
        let coer = coercivity(lambda, split, &model.gap)?;
        let mut row_worst = [f64::NEG_INFINITY; 3];
        for _ in 0..params.samples {
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..op.len()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let y = split.apply_p(&draw(&mut rng))?;
            let z = split.apply_q(&draw(&mut rng))?;
            let (ny, nz) = (h1_norm(&y, op)?, h1_norm(&z, op)?);
            let y: Vec<f64> = y.iter().map(|v| v / ny).collect();
            let z: Vec<f64> = z.iter().map(|v| v / nz).collect();
            let qy = quadratic_form(&y, lambda, op)?;
            let qz = quadratic_form(&z, lambda, op)?;
            let sum: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a + b).collect();
            let ns = h1_norm(&sum, op)?;
            let vals = [qy + coer.alpha, coer.beta - qz, coer.n_lambda * ns * ns - (qz - qy)];
            for k in 0..3 {
                row_worst[k] = row_worst[k].max(vals[k]);
            }
        }
        for k in 0..3 {
            worst[k] = worst[k].max(row_worst[k]);
        }
        report.rows.push(vec![lambda, coer.alpha, coer.beta, coer.n_lambda, row_worst[0], row_worst[1], row_worst[2]]);
    }
    for (k, name) in ["Q(y) <= -alpha|y|^2", "Q(z) >= beta|z|^2", "Q(z) - Q(y) >= N|y+z|^2"].iter().enumerate() {
        report.push(verdict(
            name,
            "Lemma 1.1",
            worst[k] <= params.slack,
            worst[k],
            params.slack,
            format!("{} samples x {} lambda values, unit H1 norms", params.samples, params.lambdas),
        ));
    }
    let summary = SpectralSummary {
        raw_gap: model.raw_gap,
        gap: model.gap,
        shift: model.shift,
        oracle_a,
        oracle_b,
        alpha0: split.alpha0,
        beta0: split.beta0,
        dim_y: split.dim_y,
        dim_z: split.dim_z,
        curvature: model.curvature,
    };
    Ok((report, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlochParams {
    pub radii: Vec<f64>,
    pub gammas: Vec<f64>,
    pub cutoff: Cutoff,
}

impl Default for BlochParams {
    fn default() -> Self {
        Self { radii: vec![8.0, 16.0, 32.0, 64.0], gammas: vec![2.0, 4.0], cutoff: Cutoff::SmoothStep }
    }
}

pub fn bloch_suite(model: &Model, params: &BlochParams) -> Result<PropertyReport, SuiteError> {
    let largest = params.radii.iter().cloned().fold(0.0, f64::max);
    if !(largest > 0.0) {
        return Err(SuiteError::Invalid("bloch radii must be positive".into()));
    }
    let op = model.operator(cells_for_radius(largest))?;
    let mut report = verify_bloch_properties(&model.wave, params.cutoff, &params.radii, &model.spec.weight, &params.gammas, &op);
    report.notes.push(format!("edge wave at k* = {}, residual {:e}", model.wave.k_star, model.wave.residual));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaParams {
    pub distances: Vec<f64>,
    pub gammas: Vec<f64>,
    pub cutoff: Cutoff,
}

impl Default for ZetaParams {
    fn default() -> Self {
        Self {
            distances: [-1.0, -1.5, -2.0, -2.5, -3.0].iter().map(|e| 10f64.powf(*e)).collect(),
            gammas: vec![4.0],
            cutoff: Cutoff::SmoothStep,
        }
    }
}

pub fn zeta_suite(model: &Model, params: &ZetaParams) -> Result<PropertyReport, SuiteError> {
    let lambdas: Vec<f64> = params.distances.iter().map(|d| model.gap.b - d).collect();
    for l in &lambdas {
        model.gap.check_lambda(*l)?;
    }
    let report = verify_zeta_estimates(&lambdas, &model.cache, &model.wave, params.cutoff, &model.spec.weight, &params.gammas)?;
    model.cache.clear();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinorantParams {
    pub pairs: usize,
    pub samples: usize,
}

impl Default for MinorantParams {
    fn default() -> Self {
        Self { pairs: 10, samples: 10_000 }
    }
}

/// Random exponent pairs `2 < α ≤ β < 6`, each checked on `samples` draws.
pub fn minorant_suite(params: MinorantParams, seed: u64) -> Result<PropertyReport, SuiteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport::new("convex minorant", "Lemma B.1", vec!["alpha".into(), "beta".into(), "passed".into()]);
    for k in 0..params.pairs {
        let alpha = rng.gen_range(2.0..6.0f64);
        let beta = rng.gen_range(alpha..6.0f64);
        let m = ConvexMinorant::new(alpha, beta)?;
        let sub = check_minorant_properties(&m, params.samples, &mut rng);
        report.rows.push(vec![alpha, beta, if sub.passed() { 1.0 } else { 0.0 }]);
        for v in sub.verdicts {
            report.push(Verdict { name: format!("pair {k}: {}", v.name), ..v });
        }
        report.notes.extend(sub.notes.into_iter().map(|n| format!("pair {k}: {n}")));
    }
    Ok(report)
}

pub fn assumption_report(model: &Model) -> AssumptionReport {
    check_assumptions(&model.nl, &SampleGrid::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientParams {
    pub pairs: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub cells: usize,
}

impl Default for GradientParams {
    fn default() -> Self {
        Self { pairs: 20, epsilon: 1e-5, tolerance: 1e-6, cells: 8 }
    }
}

/// `h⟨∇E(u), v⟩` against the central difference of `E` along `v`.
pub fn gradient_suite(model: &Model, params: GradientParams, seed: u64) -> Result<PropertyReport, SuiteError> {
    let op = model.operator(params.cells)?;
    let h = op.spacing();
    let lambda = model.gap.b - 0.25 * model.gap.width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = params.cells as f64 / 2.0 - 1.0;
    let bumps = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let b: Vec<(f64, f64, f64)> =
            (0..4).map(|_| (rng.gen_range(-span..span), rng.gen_range(0.1..1.0), rng.gen_range(-2.0..2.0))).collect();
        (0..op.len()).map(|n| b.iter().map(|(c, w, a)| a * (-((op.x_centered(n) - c) / w).powi(2)).exp()).sum()).collect()
    };
    let columns = ["analytic", "central difference", "relative error"].iter().map(|s| s.to_string()).collect();
    let mut report = PropertyReport::new("energy gradient", "energy functional", columns);
    let mut worst: f64 = 0.0;
    for _ in 0..params.pairs {
        let u = bumps(&mut rng);
        let v = bumps(&mut rng);
        let g = energy_gradient(&u, lambda, &op, &model.nl)?;
        let analytic = h * g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let shifted = |t: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + t * b).collect() };
        let fd = (energy(&shifted(params.epsilon), lambda, &op, &model.nl)? - energy(&shifted(-params.epsilon), lambda, &op, &model.nl)?)
            / (2.0 * params.epsilon);
        let rel = (analytic - fd).abs() / analytic.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        report.rows.push(vec![analytic, fd, rel]);
    }
    report.push(verdict(
        "gradient matches central differences",
        "energy functional",
        worst < params.tolerance,
        worst,
        params.tolerance,
        format!("{} random pairs, epsilon = {:e}", params.pairs, params.epsilon),
    ));
    Ok(report)
}

/// Critical point at one `λ` with its linking bound.
pub struct SingleSolve {
    pub point: CriticalPoint,
    pub domain: Arc<Domain>,
    pub bound: LinkingBound,
    pub seed_kind: &'static str,
}

/// Cells for a solve at `lambda`; deep in the gap the decay is set by whichever edge is closer.
fn solve_cells(model: &Model, lambda: f64, tail: f64) -> usize {
    let d = model.gap.b - lambda;
    let lower = band_curvature(model.bands.cell(), model.gap.lower_band, model.gap.k_lower).abs();
    let width = envelope_width(model.curvature, d).max(envelope_width(lower, lambda - model.gap.a));
    solver_cells(d.powf(-0.5), width, tail)
}

/// Distance from the edge, as a fraction of the gap, where a continuation chain starts.
const CHAIN_START: f64 = 0.2;
/// Largest ratio between consecutive distances of a chain.
const CHAIN_STEP: f64 = 0.6;

/// Solution at `lambda` reached by continuation from `d = CHAIN_START (b − a)`.
fn continuation_chain(model: &Model, lambda: f64, domain: &Domain, solver: SolverConfig, cutoff: Cutoff, tail: f64) -> Result<CriticalPoint, SuiteError> {
    let d = model.gap.b - lambda;
    let d0 = CHAIN_START * model.gap.width();
    if d >= d0 {
        return Err(SuiteError::Invalid(format!("no continuation needed at distance {d}")));
    }
    let steps = ((d0 / d).ln() / (1.0 / CHAIN_STEP).ln()).ceil().max(1.0) as usize;
    let ratio = (d / d0).powf(1.0 / steps as f64);
    let beta = model.nl.beta;
    let config_at = |dist: f64| SolverConfig { trivial_threshold: trivial_threshold(solver.trivial_threshold, dist, beta, model.spec.dim), ..solver };

    let start = model.cache.get(solve_cells(model, model.gap.b - d0, tail))?;
    let guess = refined_guess(model.gap.b - d0, &start, &model.wave, cutoff, &model.nl)?.1;
    let mut point = solve_critical_point(model.gap.b - d0, &guess, &start, &model.nl, &config_at(d0))?;
    let mut prev_op = start.op.clone();
    let mut d_prev = d0;
    for j in 1..=steps {
        let dj = if j == steps { d } else { d0 * ratio.powi(j as i32) };
        let step_domain = if j == steps { Arc::new(domain.clone()) } else { model.cache.get(solve_cells(model, model.gap.b - dj, tail))? };
        let guess = stretch_predictor(&point.u, &prev_op, &step_domain.op, &model.wave, d_prev, dj, beta);
        point = solve_critical_point(model.gap.b - dj, &guess, &step_domain, &model.nl, &config_at(dj))?;
        prev_op = step_domain.op.clone();
        d_prev = dj;
    }
    Ok(point)
}

/// Seeds tried in order: the refined gap direction, a continuation chain from
/// further inside the gap, then the plain gap direction.
pub fn solve_at(model: &Model, lambda: f64, solver: SolverConfig, linking: LinkingConfig, cutoff: Cutoff, tail: f64) -> Result<SingleSolve, SuiteError> {
    model.gap.check_lambda(lambda)?;
    let d = model.gap.b - lambda;
    let domain = model.cache.get(solve_cells(model, lambda, tail))?;
    let dir = gap_direction(lambda, &domain, &model.wave, cutoff, &[])?;
    let cfg = SolverConfig { trivial_threshold: trivial_threshold(solver.trivial_threshold, d, model.nl.beta, model.spec.dim), ..solver };
    let refined = refined_guess(lambda, &domain, &model.wave, cutoff, &model.nl)?.1;
    let (point, seed_kind) = match solve_critical_point(lambda, &refined, &domain, &model.nl, &cfg) {
        Ok(p) => (p, "refined_direction"),
        Err(_) => match continuation_chain(model, lambda, &domain, solver, cutoff, tail) {
            Ok(p) => (p, "continuation"),
            Err(_) => {
                let guess = initial_guess(lambda, &dir.zeta, &domain.op, &model.nl)?;
                (solve_critical_point(lambda, &guess, &domain, &model.nl, &cfg)?, "gap_direction")
            }
        },
    };
    let bound = linking_upper_bound(lambda, &domain, &dir.zeta, &model.nl, linking.ascent_iters)?;
    Ok(SingleSolve { point, domain, bound, seed_kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepParams {
    /// Largest and smallest `d` as fractions of `b − a`.
    pub d_max: f64,
    pub d_min: f64,
    pub points: usize,
    pub tail: f64,
    pub continuation: bool,
    /// Fits use points with `d ≤ fit_d_max · (b − a)`.
    pub fit_d_max: f64,
    pub cutoff: Cutoff,
    pub tolerances: RateTolerances,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            d_max: 0.2,
            d_min: 1e-3,
            points: 12,
            tail: 1e-6,
            continuation: true,
            fit_d_max: 0.1,
            cutoff: Cutoff::SmoothStep,
            tolerances: RateTolerances::default(),
        }
    }
}

pub fn sweep_suite(
    model: &Model,
    params: SweepParams,
    solver: SolverConfig,
    linking: LinkingConfig,
    seed: u64,
) -> Result<(Vec<BranchPoint>, TheoremReport), SuiteError> {
    let schedule = Schedule::relative(&model.gap, params.d_max, params.d_min, params.points)?;
    let problem = BranchProblem {
        cache: &model.cache,
        gap: &model.gap,
        wave: &model.wave,
        curvature: model.curvature,
        nl: &model.nl,
        dim: model.spec.dim,
    };
    let cfg = SweepConfig { schedule, cutoff: params.cutoff, tail: params.tail, continuation: params.continuation, solver, linking, seed };
    let points = sweep(&problem, &cfg);
    model.cache.clear();
    let points = points?;
    let theorem = check_theorem(&points, &model.nl, model.spec.dim, params.tolerances, params.fit_d_max * model.gap.width());
    Ok((points, theorem))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpParams {
    pub cells: usize,
    pub bumps: usize,
    pub spread: f64,
    pub translates: i64,
    pub packet_radii: Vec<f64>,
    pub pairs: usize,
    pub riesz_orders: Vec<usize>,
    pub riesz_vectors: usize,
}

impl Default for LpParams {
    fn default() -> Self {
        Self {
            cells: 16,
            bumps: 20,
            spread: 3.0,
            translates: 2,
            packet_radii: vec![1.5, 3.0],
            pairs: 100,
            riesz_orders: vec![2, 4, 8, 16],
            riesz_vectors: 20,
        }
    }
}

pub fn lp_suite(model: &Model, params: &LpParams, seed: u64) -> Result<Vec<PropertyReport>, SuiteError> {
    let probes = LpProbeSet::generate(seed, params.bumps, params.spread, params.translates, &params.packet_radii)?;
    let m = model.spec.points_per_cell;
    let mut reports = vec![lp_continuity_scan(&model.potential, params.cells, m, &probes)?];
    for &p in &probes.exponents {
        reports.push(lp_direct_sum_check(&model.potential, params.cells, m, &probes, p, params.pairs)?);
    }
    let domain = model.cache.get(params.cells)?;
    reports.push(riesz_check(&domain, &params.riesz_orders, params.riesz_vectors, seed)?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model() -> Model {
        Model::build(ModelSpec { points_per_cell: 16, k_points: 17, ..ModelSpec::default() }).unwrap()
    }

    #[test]
    fn model_puts_zero_in_the_gap() {
        let m = small_model();
        assert!(m.gap.contains_zero);
        assert!((m.gap.a + m.gap.b).abs() < 1e-12);
        assert!((m.wave.k_star - std::f64::consts::PI).abs() < 1e-15);
        assert!(m.curvature > 0.0);
    }

    #[test]
    fn rejects_other_dimensions_and_missing_gaps() {
        assert!(matches!(Model::build(ModelSpec { dim: 2, ..ModelSpec::default() }), Err(SuiteError::Invalid(_))));
        let spec = ModelSpec { points_per_cell: 16, k_points: 17, gap_index: 9, ..ModelSpec::default() };
        assert!(matches!(Model::build(spec), Err(SuiteError::Invalid(_))));
    }

    #[test]
    fn gradient_suite_passes_on_small_grid() {
        let r = gradient_suite(&small_model(), GradientParams { pairs: 5, ..GradientParams::default() }, 1).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
    }

    #[test]
    fn spectral_suite_small() {
        let params = SpectralParams { cells: 4, lambdas: 3, samples: 10, ..SpectralParams::default() };
        let (r, s) = spectral_suite(&small_model(), params, 2).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert!(s.alpha0 > 0.0 && s.beta0 > 0.0);
        assert_eq!(r.rows.len(), 3);
    }

    #[test]
    fn solve_outside_gap_is_rejected() {
        let m = small_model();
        match solve_at(&m, m.gap.b + 0.1, SolverConfig::default(), LinkingConfig::default(), Cutoff::SmoothStep, 1e-6) {
            Err(e) => assert!(e.to_string().contains("not in gap"), "{e}"),
            Ok(_) => panic!("lambda above b accepted"),
        }
    }
}
