//! One function per subcommand; each writes its artifacts and returns the verdict summary.

use std::time::Instant;

use anyhow::{Context, Result};
use gapbif::branch::{BranchPoint, TheoremReport};
use gapbif::nonlinearity::AssumptionReport;
use gapbif::report::PropertyReport;
use gapbif::spectral::{find_gaps, SpectralGap};
use gapbif::suites::{self, Model, SpectralSummary, SuiteError};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, Artifacts};
use crate::plot::{self, Guide, Series};

/// Pass/fail of one suite with the anchors of its failing verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub passed: bool,
    pub failing: Vec<String>,
}

impl SuiteOutcome {
    fn from_reports(suite: &str, reports: &[&PropertyReport]) -> Self {
        let failing: Vec<String> = reports
            .iter()
            .flat_map(|r| r.verdicts.iter().filter(|v| !v.passed).map(move |v| format!("{} [{}]: {}", v.anchor, r.title, v.name)))
            .collect();
        Self { suite: suite.into(), passed: failing.is_empty(), failing }
    }

    fn always(suite: &str) -> Self {
        Self { suite: suite.into(), passed: true, failing: Vec::new() }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub suites: Vec<SuiteOutcome>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    fn single(s: SuiteOutcome) -> Self {
        Self { suites: vec![s] }
    }
}

/// Builds the model; settings the parser accepts but that select no usable gap become config errors.
pub fn build_model(cfg: &RunConfig) -> Result<Model> {
    let spec = cfg.model_spec()?;
    match Model::build(spec) {
        Ok(m) => Ok(m),
        Err(SuiteError::Invalid(msg)) => {
            let key = if msg.starts_with("gap index") {
                "gap.index"
            } else if msg.starts_with("shift") {
                "gap.shift_value"
            } else if msg.contains("dimension") {
                "nonlinearity.dim"
            } else {
                "config"
            };
            Err(ConfigError::Invalid { key: key.into(), message: msg }.into())
        }
        Err(e) => Err(e).context("building the model"),
    }
}

#[derive(Serialize)]
struct GapsFile<'a> {
    gaps: &'a [SpectralGap],
    selected: &'a SpectralGap,
    shift: f64,
    shifted: &'a SpectralGap,
    curvature: f64,
    k_star: f64,
    edge_residual: f64,
}

fn write_bands(model: &Model, art: &mut Artifacts, threshold: f64) -> Result<()> {
    let bands = &model.bands;
    let n = bands.n_bands();
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|j| format!("E_{j}")));
    let rows: Vec<Vec<String>> = bands
        .ks
        .iter()
        .zip(&bands.energies)
        .map(|(k, e)| std::iter::once(num(*k)).chain(e.iter().map(|x| num(*x))).collect())
        .collect();
    art.csv("bands.csv", &header, &rows)?;
    let gaps = find_gaps(bands, threshold);
    art.json(
        "gaps.json",
        &GapsFile {
            gaps: &gaps,
            selected: &model.raw_gap,
            shift: model.shift,
            shifted: &model.gap,
            curvature: model.curvature,
            k_star: model.wave.k_star,
            edge_residual: model.wave.residual,
        },
    )?;
    let series: Vec<Series> = (0..n).map(|j| Series::new(format!("E_{j}"), bands.ks.iter().cloned().zip(bands.band(j)).collect())).collect();
    let path = art.path("bands.svg");
    plot::linear(&path, "Bloch bands", "k", "E", &series)?;
    art.record(path);
    Ok(())
}

pub fn cmd_bands(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    write_bands(model, art, cfg.gap.threshold)?;
    Ok(Outcome::single(SuiteOutcome::always("bands")))
}

#[derive(Serialize)]
struct SplitFile<'a> {
    summary: &'a SpectralSummary,
    report: &'a PropertyReport,
}

fn run_split(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<(PropertyReport, SpectralSummary)> {
    let (report, summary) = suites::spectral_suite(model, cfg.spectral_params(), cfg.seed)?;
    art.report_csv("coercivity.csv", &report)?;
    art.json("split.json", &SplitFile { summary: &summary, report: &report })?;
    Ok((report, summary))
}

pub fn cmd_split(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    let (report, _) = run_split(cfg, model, art)?;
    Ok(Outcome::single(SuiteOutcome::from_reports("spectral", &[&report])))
}

/// One log–log curve per report column against the first column.
fn report_plot(art: &mut Artifacts, name: &str, report: &PropertyReport, x_label: &str, skip: &[&str]) -> Result<()> {
    let xs = report.column(&report.columns[0]).unwrap_or_default();
    let series: Vec<Series> = report.columns[1..]
        .iter()
        .filter(|c| !skip.contains(&c.as_str()))
        .map(|c| Series::new(c.clone(), xs.iter().cloned().zip(report.column(c).unwrap_or_default()).collect()))
        .collect();
    let path = art.path(name);
    plot::loglog(&path, &report.title, x_label, "scaled quantity", &series, &[])?;
    art.record(path);
    Ok(())
}

fn run_bloch(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<PropertyReport> {
    let report = suites::bloch_suite(model, &cfg.bloch_params())?;
    art.report_csv("bloch.csv", &report)?;
    art.json("bloch.json", &report)?;
    report_plot(art, "bloch.svg", &report, "R", &[])?;
    Ok(report)
}

pub fn cmd_bloch_check(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    let report = run_bloch(cfg, model, art)?;
    Ok(Outcome::single(SuiteOutcome::from_reports("bloch", &[&report])))
}

fn run_zeta(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<PropertyReport> {
    let report = suites::zeta_suite(model, &cfg.zeta_params())?;
    art.report_csv("zeta.csv", &report)?;
    art.json("zeta.json", &report)?;
    report_plot(art, "zeta.svg", &report, "b - lambda", &["cells", "leak"])?;
    Ok(report)
}

pub fn cmd_zeta_check(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    let report = run_zeta(cfg, model, art)?;
    Ok(Outcome::single(SuiteOutcome::from_reports("zeta", &[&report])))
}

fn run_minorant(cfg: &RunConfig, art: &mut Artifacts) -> Result<PropertyReport> {
    let report = suites::minorant_suite(cfg.minorant_params(), cfg.seed)?;
    art.report_csv("minorant.csv", &report)?;
    art.json("minorant.json", &report)?;
    Ok(report)
}

pub fn cmd_minorant_check(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let report = run_minorant(cfg, art)?;
    Ok(Outcome::single(SuiteOutcome::from_reports("minorant", &[&report])))
}

fn run_gradient(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<PropertyReport> {
    let report = suites::gradient_suite(model, cfg.gradient_params(), cfg.seed)?;
    art.report_csv("gradient.csv", &report)?;
    art.json("gradient.json", &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    lambda: f64,
    gap: &'a SpectralGap,
    distance_to_edge: f64,
    cells: usize,
    points_per_cell: usize,
    seed_kind: &'a str,
    point: &'a gapbif::solver::CriticalPoint,
    bound: &'a gapbif::solver::LinkingBound,
}

pub fn cmd_solve(cfg: &RunConfig, model: &Model, lambda: f64, art: &mut Artifacts) -> Result<Outcome> {
    if !model.gap.contains(lambda) {
        return Err(ConfigError::Invalid {
            key: "--lambda".into(),
            message: format!("lambda not in gap: {lambda} is outside the shifted gap ({}, {})", model.gap.a, model.gap.b),
        }
        .into());
    }
    let s = suites::solve_at(model, lambda, cfg.solver_config(), cfg.linking_config(), cfg.cutoff, cfg.solver.tail)
        .with_context(|| format!("solving at lambda = {lambda}"))?;
    let op = &s.domain.op;
    let rows: Vec<Vec<String>> = s.point.u.iter().enumerate().map(|(n, u)| vec![num(op.x_centered(n)), num(*u)]).collect();
    art.csv("solution.csv", &["x".into(), "u".into()], &rows)?;
    art.json(
        "solution.json",
        &SolutionFile {
            lambda,
            gap: &model.gap,
            distance_to_edge: model.gap.b - lambda,
            cells: s.domain.cells(),
            points_per_cell: cfg.grid.points_per_cell,
            seed_kind: s.seed_kind,
            point: &s.point,
            bound: &s.bound,
        },
    )?;
    let below = s.point.energy <= s.bound.c_ub + 1e-6;
    let outcome = SuiteOutcome {
        suite: "solve".into(),
        passed: below,
        failing: if below { Vec::new() } else { vec![format!("linking set M: E(u) = {} exceeds c_ub = {}", s.point.energy, s.bound.c_ub)] },
    };
    Ok(Outcome::single(outcome))
}

#[derive(Serialize)]
struct FitsFile<'a> {
    theorem: &'a TheoremReport,
    points: &'a [BranchPoint],
}

fn branch_rows(points: &[BranchPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                num(p.lambda),
                num(p.d),
                num(p.h1_norm),
                num(p.l2_norm),
                num(p.linf_norm),
                num(p.energy),
                num(p.c_ub),
                num(p.n_lambda),
                if p.converged { "1" } else { "0" }.to_string(),
            ]
        })
        .collect()
}

fn run_sweep(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<(Vec<BranchPoint>, TheoremReport)> {
    let (points, theorem) = suites::sweep_suite(model, cfg.sweep_params(), cfg.solver_config(), cfg.linking_config(), cfg.seed)?;
    let header: Vec<String> =
        ["lambda", "d", "h1_norm", "l2_norm", "linf_norm", "energy", "c_ub", "N_lambda", "converged"].iter().map(|s| s.to_string()).collect();
    art.csv("branch.csv", &header, &branch_rows(&points))?;
    art.json("fits.json", &FitsFile { theorem: &theorem, points: &points })?;

    let conv: Vec<&BranchPoint> = points.iter().filter(|p| p.converged).collect();
    let curve = |f: fn(&BranchPoint) -> f64| -> Vec<(f64, f64)> { conv.iter().map(|p| (p.d, f(p))).collect() };
    let anchor_of = |pts: &[(f64, f64)]| pts.last().copied().unwrap_or((0.0, 0.0));

    let norm = curve(|p| p.h1_norm);
    let guide = Guide { label: format!("reference slope {:.3}", theorem.reference_norm), slope: theorem.reference_norm, anchor: anchor_of(&norm) };
    let path = art.path("branch_norm.svg");
    plot::loglog(&path, "H1 norm along the branch", "b - lambda", "|u|", &[Series::new("h1_norm", norm)], &[guide])?;
    art.record(path);

    let energy = curve(|p| p.energy);
    let c_ub = curve(|p| p.c_ub);
    let guide = Guide { label: format!("reference slope {:.3}", theorem.reference_energy), slope: theorem.reference_energy, anchor: anchor_of(&energy) };
    let path = art.path("branch_energy.svg");
    plot::loglog(&path, "energy along the branch", "b - lambda", "E", &[Series::new("energy", energy), Series::new("c_ub", c_ub)], &[guide])?;
    art.record(path);
    Ok((points, theorem))
}

fn sweep_outcome(points: &[BranchPoint], theorem: &TheoremReport) -> SuiteOutcome {
    let mut out = SuiteOutcome::from_reports("sweep", &[&theorem.report]);
    for p in points.iter().filter(|p| !p.converged) {
        out.failing.push(format!("Theorem 1.1: no converged solution at lambda = {} ({})", p.lambda, p.message));
    }
    out.passed = out.failing.is_empty();
    out
}

pub fn cmd_sweep(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    let (points, theorem) = run_sweep(cfg, model, art)?;
    Ok(Outcome::single(sweep_outcome(&points, &theorem)))
}

fn run_lp(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Vec<PropertyReport>> {
    let reports = suites::lp_suite(model, &cfg.lp_params(), cfg.seed)?;
    let find = |anchor: &str| reports.iter().filter(|r| r.anchor == anchor).collect::<Vec<_>>();
    if let Some(scan) = find("Prop. A.1").first() {
        art.report_csv("lp_scan.csv", scan)?;
    }
    let direct = find("Corollary A.2");
    if let Some(first) = direct.first() {
        let mut header = vec!["p".to_string()];
        header.extend(first.columns.iter().cloned());
        let mut rows = Vec::new();
        for (r, p) in direct.iter().zip(&probe_exponents(cfg)?) {
            for row in &r.rows {
                rows.push(std::iter::once(num(*p)).chain(row.iter().map(|x| num(*x))).collect());
            }
        }
        art.csv("lp_direct_sum.csv", &header, &rows)?;
    }
    if let Some(riesz) = find("Riesz projector").first() {
        art.report_csv("riesz.csv", riesz)?;
    }
    art.json("lp.json", &serde_json::json!({ "reports": &reports }))?;
    Ok(reports)
}

/// Exponents in the order `lp_suite` emits its direct-sum reports.
fn probe_exponents(cfg: &RunConfig) -> Result<Vec<f64>> {
    let lp = cfg.lp_params();
    let probes = gapbif::lpcheck::LpProbeSet::generate(cfg.seed, lp.bumps, lp.spread, lp.translates, &lp.packet_radii)?;
    Ok(probes.exponents)
}

pub fn cmd_lp_check(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    let reports = run_lp(cfg, model, art)?;
    let refs: Vec<&PropertyReport> = reports.iter().collect();
    Ok(Outcome::single(SuiteOutcome::from_reports("lp", &refs)))
}

#[derive(Serialize)]
struct SuiteSection {
    outcome: SuiteOutcome,
    seconds: f64,
    reports: Vec<PropertyReport>,
}

#[derive(Serialize)]
struct FullReport<'a> {
    config: &'a RunConfig,
    passed: bool,
    spectral_summary: Option<SpectralSummary>,
    suites: Vec<SuiteSection>,
    theorem: Option<TheoremReport>,
    /// Advisory: reported, never gating.
    assumptions: AssumptionReport,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

/// Every enabled suite, their artifacts, `full_report.json` and `summary.txt`.
pub fn cmd_full_report(cfg: &RunConfig, model: &Model, art: &mut Artifacts) -> Result<Outcome> {
    let mut sections = Vec::new();
    let mut spectral_summary = None;
    let mut theorem = None;
    write_bands(model, art, cfg.gap.threshold)?;

    let c = &cfg.checks;
    if c.minorant {
        let (r, t) = timed(|| run_minorant(cfg, art))?;
        sections.push(SuiteSection { outcome: SuiteOutcome::from_reports("minorant", &[&r]), seconds: t, reports: vec![r] });
    }
    if c.spectral {
        let ((r, s), t) = timed(|| run_split(cfg, model, art))?;
        spectral_summary = Some(s);
        sections.push(SuiteSection { outcome: SuiteOutcome::from_reports("spectral", &[&r]), seconds: t, reports: vec![r] });
    }
    if c.bloch {
        let (r, t) = timed(|| run_bloch(cfg, model, art))?;
        sections.push(SuiteSection { outcome: SuiteOutcome::from_reports("bloch", &[&r]), seconds: t, reports: vec![r] });
    }
    if c.zeta {
        let (r, t) = timed(|| run_zeta(cfg, model, art))?;
        sections.push(SuiteSection { outcome: SuiteOutcome::from_reports("zeta", &[&r]), seconds: t, reports: vec![r] });
    }
    if c.gradient {
        let (r, t) = timed(|| run_gradient(cfg, model, art))?;
        sections.push(SuiteSection { outcome: SuiteOutcome::from_reports("gradient", &[&r]), seconds: t, reports: vec![r] });
    }
    if c.sweep {
        let ((points, th), t) = timed(|| run_sweep(cfg, model, art))?;
        sections.push(SuiteSection { outcome: sweep_outcome(&points, &th), seconds: t, reports: vec![th.report.clone()] });
        theorem = Some(th);
    }
    if c.lp {
        let (rs, t) = timed(|| run_lp(cfg, model, art))?;
        let refs: Vec<&PropertyReport> = rs.iter().collect();
        let outcome = SuiteOutcome::from_reports("lp", &refs);
        sections.push(SuiteSection { outcome, seconds: t, reports: rs });
    }

    let assumptions = suites::assumption_report(model);
    let outcome = Outcome { suites: sections.iter().map(|s| s.outcome.clone()).collect() };
    let summary = summary_text(cfg, model, &sections, theorem.as_ref(), &assumptions, outcome.passed());
    let full = FullReport { config: cfg, passed: outcome.passed(), spectral_summary, suites: sections, theorem, assumptions };
    art.json("full_report.json", &full)?;
    art.text("summary.txt", &summary)?;
    Ok(outcome)
}

fn summary_text(
    cfg: &RunConfig,
    model: &Model,
    sections: &[SuiteSection],
    theorem: Option<&TheoremReport>,
    assumptions: &AssumptionReport,
    passed: bool,
) -> String {
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!("gapbif full report (seed {})", cfg.seed));
    line(format!(
        "gap ({:.10}, {:.10}) shifted by {:.10}; model {} alpha={} beta={}",
        model.gap.a, model.gap.b, model.shift, cfg.nonlinearity.family, cfg.nonlinearity.alpha, cfg.nonlinearity.beta
    ));
    line(String::new());
    for sec in sections {
        let o = &sec.outcome;
        line(format!("[{}] {:<10} {:>8.2}s", if o.passed { "PASS" } else { "FAIL" }, o.suite, sec.seconds));
        for f in &o.failing {
            line(format!("       failing: {f}"));
        }
    }
    if let Some(th) = theorem {
        line(String::new());
        line("Theorem 1.1 rate fits:".into());
        for (name, reference, fit) in
            [("norm", th.reference_norm, &th.norm_fit), ("energy", th.reference_energy, &th.energy_fit), ("c_ub", th.reference_energy, &th.c_fit)]
        {
            match fit {
                Some(f) => line(format!("  theta_{name:<7} = {:.4} (reference {reference:.4}, r^2 = {:.5}, {} points)", f.theta, f.r_squared, f.points)),
                None => line(format!("  theta_{name:<7} unavailable")),
            }
        }
    }
    line(String::new());
    line(format!("assumptions on the nonlinearity (advisory, {}):", assumptions.nonlinearity));
    for c in &assumptions.checks {
        line(format!("  [{}] {} (worst {:e} at x = {}, u = {:e}; {})", if c.passed { "ok" } else { "no" }, c.name, c.worst_value, c.worst_x, c.worst_u, c.window));
    }
    line(String::new());
    line(format!("overall: {}", if passed { "PASS" } else { "FAIL" }));
    s
}
