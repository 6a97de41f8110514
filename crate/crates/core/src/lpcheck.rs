//! `L^p` behaviour of the spectral projectors on probe families, and an
//! independent contour-integral projector.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::blochtest::{edge_bloch_wave, make_psi_r, BlochError, BlochWave, Cutoff};
use crate::domain::Domain;
use crate::linalg::{self, CyclicTridiag, LinalgError};
use crate::report::{PropertyReport, Verdict};
use crate::spectral::{bloch_bands, find_gaps, DiscreteOperator, PeriodicPotential, SpectralError, SpectralSplit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("probe is identically zero")]
    ZeroInput,
    #[error("invalid contour: {0}")]
    Contour(String),
    #[error("resolvent solve failed at node z = {z}: {source}; move the contour away from the spectrum")]
    Resolvent { z: Complex64, source: LinalgError },
    #[error("no gap containing 0 at {points_per_cell} points per cell")]
    NoGap { points_per_cell: usize },
    #[error("invalid probe set: {0}")]
    Probe(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Bloch(#[from] BlochError),
}

/// Discrete `|u|_p`; `p = ∞` gives the grid maximum.
pub fn lp(u: &[f64], p: f64, h: f64) -> f64 {
    if p.is_infinite() {
        linalg::sup_norm(u)
    } else {
        linalg::lp_norm(u, p, h)
    }
}

/// `|P u|_p / |u|_p`.
pub fn lp_projection_ratio(split: &SpectralSplit, u: &[f64], p: f64) -> Result<f64, LpError> {
    let h = split.spacing();
    let norm = lp(u, p, h);
    if norm == 0.0 {
        return Err(LpError::ZeroInput);
    }
    Ok(lp(&split.apply_p(u)?, p, h) / norm)
}

/// One member of a probe family, defined independently of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    /// `exp(−((x − center)/width)²)`.
    Bump { center: f64, width: f64 },
    /// The reference bump moved by whole cells.
    Translate { cells: i64 },
    /// `Ψ_R` built from the edge Bloch wave at the grid's resolution.
    BlochPacket { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpProbeSet {
    pub seed: u64,
    pub probes: Vec<Probe>,
    /// `f64::INFINITY` stands for the grid max-norm.
    pub exponents: Vec<f64>,
    pub reference: (f64, f64),
}

impl LpProbeSet {
    /// Random bumps inside `|x| ≤ spread`, translates `−k..=k` of a reference
    /// bump, and Bloch packets of the given radii.
    pub fn generate(seed: u64, bumps: usize, spread: f64, translates: i64, radii: &[f64]) -> Result<Self, LpError> {
        if !(spread > 0.0) {
            return Err(LpError::Probe(format!("spread must be positive, got {spread}")));
        }
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(LpError::Probe("packet radii must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes: Vec<Probe> = (0..bumps)
            .map(|_| Probe::Bump { center: rng.gen_range(-spread..spread), width: rng.gen_range(0.05..1.0) })
            .collect();
        probes.extend((-translates..=translates).map(|c| Probe::Translate { cells: c }));
        probes.extend(radii.iter().map(|&radius| Probe::BlochPacket { radius }));
        Ok(Self { seed, probes, exponents: vec![2.0, 3.0, 4.0, 6.0, f64::INFINITY], reference: (0.3, 0.4) })
    }

    pub fn sample(&self, probe: &Probe, op: &DiscreteOperator, wave: &BlochWave) -> Result<Vec<f64>, LpError> {
        let gauss = |c: f64, w: f64| -> Vec<f64> { (0..op.len()).map(|n| (-((op.x_centered(n) - c) / w).powi(2)).exp()).collect() };
        let u = match *probe {
            Probe::Bump { center, width } => gauss(center, width),
            Probe::Translate { cells } => gauss(self.reference.0 + cells as f64, self.reference.1),
            Probe::BlochPacket { radius } => make_psi_r(wave, Cutoff::SmoothStep, radius, op)?.values,
        };
        if u.iter().all(|v| *v == 0.0) {
            return Err(LpError::ZeroInput);
        }
        Ok(u)
    }
}

/// Edge wave above the gap containing `0`, computed at `points_per_cell`.
pub fn edge_wave_at(potential: &PeriodicPotential, points_per_cell: usize) -> Result<BlochWave, LpError> {
    let bands = bloch_bands(potential, points_per_cell, 4, 33)?;
    let gap = find_gaps(&bands, 1e-6)
        .into_iter()
        .find(|g| g.contains_zero)
        .ok_or(LpError::NoGap { points_per_cell })?;
    Ok(edge_bloch_wave(&bands, &gap)?)
}

/// Grid, spectral splitting and edge wave for one scan level.
pub struct Level {
    pub domain: Domain,
    pub wave: BlochWave,
}

impl Level {
    pub fn new(potential: &PeriodicPotential, cells: usize, points_per_cell: usize) -> Result<Self, LpError> {
        let op = DiscreteOperator::new(potential.clone(), cells, points_per_cell)?;
        Ok(Self { domain: Domain::new(op)?, wave: edge_wave_at(potential, points_per_cell)? })
    }
}

fn probe_ratios(level: &Level, probes: &LpProbeSet) -> Result<Vec<Vec<f64>>, LpError> {
    probes
        .probes
        .par_iter()
        .map(|probe| {
            let u = probes.sample(probe, &level.domain.op, &level.wave)?;
            let pu = level.domain.split.apply_p(&u)?;
            let h = level.domain.spacing();
            Ok(probes.exponents.iter().map(|&p| lp(&pu, p, h) / lp(&u, p, h)).collect())
        })
        .collect()
}

/// Largest allowed growth of a probe maximum under one refinement or doubling.
pub const STABLE_GROWTH: f64 = 1.5;

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// Probe maxima of `|Pu|_p/|u|_p` on the base grid, one refinement `m → 2m`
/// and one domain doubling, with stability verdicts.
pub fn lp_continuity_scan(
    potential: &PeriodicPotential,
    cells: usize,
    points_per_cell: usize,
    probes: &LpProbeSet,
) -> Result<PropertyReport, LpError> {
    let anchor = "Prop. A.1";
    let columns = ["p", "cells", "points_per_cell", "max_ratio"].iter().map(|s| s.to_string()).collect();
    let mut report = PropertyReport::new("L^p continuity of P", anchor, columns);
    let shapes = [(cells, points_per_cell), (cells, 2 * points_per_cell), (2 * cells, points_per_cell)];
    let mut maxima = Vec::new();
    let mut base_ratios = Vec::new();
    for (i, &(c, m)) in shapes.iter().enumerate() {
        let level = Level::new(potential, c, m)?;
        let ratios = probe_ratios(&level, probes)?;
        let per_p: Vec<f64> = (0..probes.exponents.len())
            .map(|j| ratios.iter().map(|r| r[j]).fold(0.0, f64::max))
            .collect();
        for (p, mx) in probes.exponents.iter().zip(&per_p) {
            report.rows.push(vec![*p, c as f64, m as f64, *mx]);
        }
        maxima.push(per_p);
        if i == 0 {
            base_ratios = ratios;
        }
    }
    for (j, &p) in probes.exponents.iter().enumerate() {
        let label = p_label(p);
        if p == 2.0 {
            let worst = maxima.iter().map(|m| m[j]).fold(0.0, f64::max);
            report.push(Verdict {
                name: "p=2 ratio <= 1".into(),
                anchor: anchor.into(),
                passed: worst <= 1.0 + 1e-10,
                value: worst,
                threshold: 1.0 + 1e-10,
                detail: "orthogonal projector in the grid L^2 product".into(),
            });
            continue;
        }
        for (name, k) in [("refinement", 1), ("domain doubling", 2)] {
            let growth = maxima[k][j] / maxima[0][j];
            report.push(Verdict {
                name: format!("stable under {name}: p={label}"),
                anchor: anchor.into(),
                passed: growth < STABLE_GROWTH,
                value: growth,
                threshold: STABLE_GROWTH,
                detail: format!("max ratio {:.6e} -> {:.6e}", maxima[0][j], maxima[k][j]),
            });
        }
    }
    // whole-cell translates see the same operator
    let translates: Vec<usize> =
        probes.probes.iter().enumerate().filter(|(_, p)| matches!(p, Probe::Translate { .. })).map(|(i, _)| i).collect();
    if let Some(&first) = translates.first() {
        let mut worst: f64 = 0.0;
        for &i in &translates {
            for (r, r0) in base_ratios[i].iter().zip(&base_ratios[first]) {
                worst = worst.max((r - r0).abs());
            }
        }
        report.push(Verdict {
            name: "translation invariance".into(),
            anchor: anchor.into(),
            passed: worst < 1e-6,
            value: worst,
            threshold: 1e-6,
            detail: format!("{} whole-cell translates on the base grid", translates.len()),
        });
    }
    Ok(report)
}

/// Rectangle `[left, right] × [−half_height, half_height]` traversed
/// counter-clockwise, each side split into Gauss–Legendre panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    pub left: f64,
    pub right: f64,
    pub half_height: f64,
    /// Nodes per panel.
    pub order: usize,
    /// Longest allowed panel.
    pub panel_length: f64,
}

/// Required distance between the real-axis crossings and the spectrum.
pub const CONTOUR_MARGIN: f64 = 1e-6;

impl ContourSpec {
    /// Contour around the negative spectrum of `split`: left edge one unit
    /// below the bottom, right edge at `0`, half-height `1`.
    pub fn enclosing_negative(split: &SpectralSplit, order: usize) -> Self {
        Self { left: split.spectrum_min - 1.0, right: 0.0, half_height: 1.0, order, panel_length: 1.0 }
    }

    pub fn validate(&self, eigenvalues: &[f64]) -> Result<(), LpError> {
        if self.order == 0 || !(self.panel_length > 0.0) || !(self.half_height > 0.0) || !(self.left < self.right) {
            return Err(LpError::Contour(format!("degenerate contour {self:?}")));
        }
        for x in [self.left, self.right] {
            if let Some(ev) = eigenvalues.iter().find(|ev| (*ev - x).abs() < CONTOUR_MARGIN) {
                return Err(LpError::Contour(format!("crossing {x} lies within {CONTOUR_MARGIN:e} of eigenvalue {ev}")));
            }
        }
        Ok(())
    }

    /// Quadrature nodes `z_j` and weights `w_j` (including `dz`) on the contour.
    pub fn nodes(&self) -> Vec<(Complex64, Complex64)> {
        let (gx, gw) = linalg::gauss_legendre(self.order);
        let (l, r, hh) = (self.left, self.right, self.half_height);
        let corners = [
            Complex64::new(l, -hh),
            Complex64::new(r, -hh),
            Complex64::new(r, hh),
            Complex64::new(l, hh),
        ];
        let mut out = Vec::new();
        for side in 0..4 {
            let (a, b) = (corners[side], corners[(side + 1) % 4]);
            let panels = ((b - a).norm() / self.panel_length).ceil().max(1.0) as usize;
            for k in 0..panels {
                let p0 = a + (b - a) * (k as f64 / panels as f64);
                let p1 = a + (b - a) * ((k + 1) as f64 / panels as f64);
                let (mid, half) = ((p0 + p1) * 0.5, (p1 - p0) * 0.5);
                for (x, w) in gx.iter().zip(&gw) {
                    out.push((mid + half * *x, half * *w));
                }
            }
        }
        out
    }
}

/// `P = (2πi)^{-1} ∮ (z − D)^{-1} dz` by quadrature, with one factorised
/// resolvent per node.
pub struct RieszProjector {
    pub contour: ContourSpec,
    nodes: Vec<(Complex64, Complex64)>,
    solvers: Vec<CyclicTridiag<Complex64>>,
}

impl RieszProjector {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, LpError> {
        let rhs: Vec<Complex64> = v.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let scale = Complex64::new(0.0, 2.0 * PI).inv();
        let parts = self
            .nodes
            .par_iter()
            .zip(self.solvers.par_iter())
            .map(|((z, w), solver)| {
                let x = solver.solve(&rhs).map_err(|source| LpError::Resolvent { z: *z, source })?;
                Ok(x.into_iter().map(|xi| (xi * w * scale).re).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>, LpError>>()?;
        let mut out = vec![0.0; v.len()];
        for part in parts {
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
        }
        Ok(out)
    }
}

pub fn riesz_projector(op: &DiscreteOperator, eigenvalues: &[f64], contour: ContourSpec) -> Result<RieszProjector, LpError> {
    contour.validate(eigenvalues)?;
    let nodes = contour.nodes();
    let n = op.len();
    let inv_h2 = 1.0 / (op.spacing() * op.spacing());
    let off = Complex64::new(inv_h2, 0.0);
    let solvers = nodes
        .par_iter()
        .map(|(z, _)| {
            let diag: Vec<Complex64> = (0..n).map(|i| z - (2.0 * inv_h2 + op.potential_at(i))).collect();
            CyclicTridiag::new(vec![off; n - 1], diag, vec![off; n - 1], off, off)
                .map_err(|source| LpError::Resolvent { z: *z, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RieszProjector { contour, nodes, solvers })
}

/// Agreement of the contour projector with the eigendecomposition projector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszComparison {
    pub order: usize,
    pub nodes: usize,
    /// Largest `‖(P_riesz − P_eig)v‖₂/‖v‖₂` over the test vectors.
    pub max_error: f64,
    /// Largest `‖P_riesz(P_riesz v) − P_riesz v‖₂/‖v‖₂`.
    pub idempotence: f64,
}

pub fn compare_riesz(domain: &Domain, contour: ContourSpec, vectors: usize, seed: u64) -> Result<RieszComparison, LpError> {
    let eigenvalues = domain.split.eigenvalues();
    let riesz = riesz_projector(&domain.op, &eigenvalues, contour)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = domain.spacing();
    let (mut max_error, mut idempotence) = (0.0f64, 0.0f64);
    for _ in 0..vectors {
        let v: Vec<f64> = (0..domain.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = linalg::lp_norm(&v, 2.0, h);
        let pr = riesz.apply(&v)?;
        let pe = domain.split.apply_p(&v)?;
        let diff: Vec<f64> = pr.iter().zip(&pe).map(|(a, b)| a - b).collect();
        max_error = max_error.max(linalg::lp_norm(&diff, 2.0, h) / norm);
        let prr = riesz.apply(&pr)?;
        let diff: Vec<f64> = prr.iter().zip(&pr).map(|(a, b)| a - b).collect();
        idempotence = idempotence.max(linalg::lp_norm(&diff, 2.0, h) / norm);
    }
    Ok(RieszComparison { order: contour.order, nodes: riesz.node_count(), max_error, idempotence })
}

/// Below this level a disagreement counts as round-off, not quadrature error.
pub const RIESZ_FLOOR: f64 = 1e-12;

/// Contour projector at per-panel orders `orders` (each double the last) with
/// verdicts on the finest agreement, idempotence and error decrease.
pub fn riesz_check(domain: &Domain, orders: &[usize], vectors: usize, seed: u64) -> Result<PropertyReport, LpError> {
    let anchor = "Riesz projector";
    let columns = ["order", "nodes", "max_error", "idempotence"].iter().map(|s| s.to_string()).collect();
    let mut report = PropertyReport::new("Riesz projector vs eigendecomposition", anchor, columns);
    let mut errors = Vec::new();
    for &order in orders {
        let c = compare_riesz(domain, ContourSpec::enclosing_negative(&domain.split, order), vectors, seed)?;
        report.rows.push(vec![order as f64, c.nodes as f64, c.max_error, c.idempotence]);
        errors.push((c.max_error, c.idempotence));
    }
    let Some(&(finest, idem)) = errors.last() else {
        return Err(LpError::Contour("no quadrature orders given".into()));
    };
    report.push(Verdict {
        name: "contour projector matches P".into(),
        anchor: anchor.into(),
        passed: finest <= 1e-8,
        value: finest,
        threshold: 1e-8,
        detail: format!("{vectors} random vectors at order {}", orders[orders.len() - 1]),
    });
    report.push(Verdict {
        name: "contour projector idempotent".into(),
        anchor: anchor.into(),
        passed: idem <= 1e-8,
        value: idem,
        threshold: 1e-8,
        detail: String::new(),
    });
    let decreasing = errors.windows(2).all(|w| w[1].0 < w[0].0 || w[1].0 <= RIESZ_FLOOR);
    report.push(Verdict {
        name: "error decreases as nodes double".into(),
        anchor: anchor.into(),
        passed: decreasing && errors.len() >= 2,
        value: errors.first().map_or(f64::NAN, |e| e.0),
        threshold: RIESZ_FLOOR,
        detail: format!("errors {:?}", errors.iter().map(|e| e.0).collect::<Vec<_>>()),
    });
    Ok(report)
}

/// Normalised `Y`/`Z` pair drawn from random bump combinations.
fn random_pair(level: &Level, p: f64, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>), LpError> {
    let op = &level.domain.op;
    let h = op.spacing();
    let half = op.cells() as f64 / 4.0;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let bumps: Vec<(f64, f64, f64)> =
            (0..3).map(|_| (rng.gen_range(-half..half), rng.gen_range(0.05..1.0), rng.gen_range(-1.0..1.0))).collect();
        (0..op.len())
            .map(|n| bumps.iter().map(|(c, w, a)| a * (-((op.x_centered(n) - c) / w).powi(2)).exp()).sum())
            .collect()
    };
    let y = level.domain.split.apply_p(&draw(rng))?;
    let z = level.domain.split.apply_q(&draw(rng))?;
    let (ny, nz) = (lp(&y, p, h), lp(&z, p, h));
    if ny == 0.0 || nz == 0.0 {
        return Err(LpError::ZeroInput);
    }
    Ok((y.iter().map(|v| v / ny).collect(), z.iter().map(|v| v / nz).collect()))
}

/// Reconstruction `u = Pu + Qu` in `L^p` on the probes, and the smallest
/// `|y − z|_p` over random normalised pairs, on the base and refined grids.
pub fn lp_direct_sum_check(
    potential: &PeriodicPotential,
    cells: usize,
    points_per_cell: usize,
    probes: &LpProbeSet,
    p: f64,
    pairs: usize,
) -> Result<PropertyReport, LpError> {
    if !probes.exponents.contains(&p) {
        return Err(LpError::Probe(format!("p = {p} is not in the probe exponent list")));
    }
    let anchor = "Corollary A.2";
    let columns = ["points_per_cell", "reconstruction", "margin"].iter().map(|s| s.to_string()).collect();
    let mut report = PropertyReport::new(format!("L^p direct sum, p = {}", p_label(p)), anchor, columns);
    let mut margins = Vec::new();
    let mut worst_rec: f64 = 0.0;
    for m in [points_per_cell, 2 * points_per_cell] {
        let level = Level::new(potential, cells, m)?;
        let h = level.domain.spacing();
        let mut rec: f64 = 0.0;
        for probe in &probes.probes {
            let u = probes.sample(probe, &level.domain.op, &level.wave)?;
            let pu = level.domain.split.apply_p(&u)?;
            let qu = level.domain.split.apply_function(&u, |mu| if mu < 0.0 { 0.0 } else { 1.0 })?;
            let r: Vec<f64> = u.iter().zip(&pu).zip(&qu).map(|((a, b), c)| a - b - c).collect();
            rec = rec.max(lp(&r, p, h) / lp(&u, p, h));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(probes.seed ^ 0x5eed);
        let mut margin = f64::INFINITY;
        for _ in 0..pairs {
            let (y, z) = random_pair(&level, p, &mut rng)?;
            let d: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
            margin = margin.min(lp(&d, p, h));
        }
        report.rows.push(vec![m as f64, rec, margin]);
        worst_rec = worst_rec.max(rec);
        margins.push(margin);
    }
    report.push(Verdict {
        name: "u = Pu + Qu".into(),
        anchor: anchor.into(),
        passed: worst_rec <= 1e-10,
        value: worst_rec,
        threshold: 1e-10,
        detail: "Q applied as its own spectral function".into(),
    });
    let change = margins[1] / margins[0];
    report.push(Verdict {
        name: "transversality margin positive and stable".into(),
        anchor: anchor.into(),
        passed: margins.iter().all(|m| *m > 0.0) && change < STABLE_GROWTH && change > 1.0 / STABLE_GROWTH,
        value: margins[0].min(margins[1]),
        threshold: 0.0,
        detail: format!("margin {:.6e} -> {:.6e} under refinement", margins[0], margins[1]),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GapShift, shift_to_gap};

    fn mathieu() -> PeriodicPotential {
        let v = PeriodicPotential::mathieu(1.0).unwrap();
        let bands = bloch_bands(&v, 16, 4, 17).unwrap();
        let gap = find_gaps(&bands, 1e-3)[0];
        shift_to_gap(&v, &gap, GapShift::Midpoint).0
    }

    #[test]
    fn ratio_on_y_and_z() {
        let d = Domain::new(DiscreteOperator::new(mathieu(), 6, 16).unwrap()).unwrap();
        let h = d.spacing();
        let u: Vec<f64> = (0..d.len()).map(|n| (-(d.op.x_centered(n) / 0.7).powi(2)).exp()).collect();
        let y = d.split.apply_p(&u).unwrap();
        let z = d.split.apply_q(&u).unwrap();
        assert!((lp_projection_ratio(&d.split, &y, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(lp_projection_ratio(&d.split, &z, 2.0).unwrap() < 1e-12);
        assert!(matches!(lp_projection_ratio(&d.split, &vec![0.0; d.len()], 3.0), Err(LpError::ZeroInput)));
        assert!(lp(&u, f64::INFINITY, h) <= 1.0);
    }

    #[test]
    fn riesz_on_two_by_two_diagonal() {
        // scalar resolvents: the contour around −1 returns 1 for that entry and 0 for the other
        let c = ContourSpec { left: -2.0, right: 0.0, half_height: 1.0, order: 16, panel_length: 0.5 };
        let scale = Complex64::new(0.0, 2.0 * PI).inv();
        let coeff = |mu: f64| -> f64 { c.nodes().iter().map(|(z, w)| (w / (z - mu) * scale).re).sum() };
        assert!((coeff(-1.0) - 1.0).abs() < 1e-10);
        assert!(coeff(1.0).abs() < 1e-10);
    }

    #[test]
    fn contour_rejects_crossing_on_eigenvalue() {
        let c = ContourSpec { left: -3.0, right: 0.0, half_height: 1.0, order: 4, panel_length: 1.0 };
        assert!(matches!(c.validate(&[-2.0, 0.0]), Err(LpError::Contour(_))));
        assert!(c.validate(&[-2.0, 1.0]).is_ok());
    }

    #[test]
    fn riesz_matches_eigendecomposition() {
        let d = Domain::new(DiscreteOperator::new(mathieu(), 8, 16).unwrap()).unwrap();
        let c = compare_riesz(&d, ContourSpec::enclosing_negative(&d.split, 16), 5, 3).unwrap();
        assert!(c.max_error < 1e-8, "{c:?}");
        assert!(c.idempotence < 1e-8);
        let coarse = compare_riesz(&d, ContourSpec::enclosing_negative(&d.split, 4), 5, 3).unwrap();
        assert!(coarse.max_error > c.max_error);
    }

    #[test]
    fn probes_are_reproducible() {
        let a = LpProbeSet::generate(11, 5, 2.0, 1, &[1.0]).unwrap();
        let b = LpProbeSet::generate(11, 5, 2.0, 1, &[1.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.probes.len(), 5 + 3 + 1);
        assert!(LpProbeSet::generate(11, 5, 0.0, 1, &[]).is_err());
    }

    #[test]
    fn direct_sum_at_p2_is_orthogonal() {
        let probes = LpProbeSet::generate(5, 3, 1.0, 0, &[]).unwrap();
        let r = lp_direct_sum_check(&mathieu(), 8, 16, &probes, 2.0, 10).unwrap();
        let margin = r.column("margin").unwrap();
        for m in margin {
            assert!((m - 2f64.sqrt()).abs() < 1e-10, "{m}");
        }
        assert!(r.passed(), "{:?}", r.verdicts);
    }
}
