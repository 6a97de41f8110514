//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N (...): PASS|FAIL` line with the measured values.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gapbif::nonlinearity::{energy, energy_gradient, ConvexMinorant};
use gapbif::report::PropertyReport;
use gapbif::suites::{self, BlochParams, GradientParams, LpParams, MinorantParams, Model, ModelSpec, SpectralParams, ZetaParams};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

// criterion 1
const MINORANT_PAIRS: usize = 10;
const MINORANT_SAMPLES: usize = 10_000;
const QUADRATURE_POINTS: usize = 1_000;
const QUADRATURE_TOL: f64 = 1e-10;
const MINORANT_SECONDS: f64 = 5.0;
// criterion 2
const ORACLE_TOL: f64 = 1e-6;
const SPECTRAL_SECONDS: f64 = 30.0;
// criteria 3 and 4
const BOUNDED_RATIO: f64 = 10.0;
const FLOOR: f64 = 1e-3;
const BLOCH_SECONDS: f64 = 60.0;
const ZETA_SECONDS: f64 = 120.0;
// criterion 5
const THETA_NORM_TOL: f64 = 0.10;
const THETA_ENERGY_TOL: f64 = 0.20;
const ENERGY_SLACK: f64 = 1e-6;
const FIT_WINDOW: f64 = 0.1;
const RATIO_TAIL: usize = 5;
const SWEEP_SECONDS: f64 = 600.0;
// criterion 6
const P2_SLACK: f64 = 1e-10;
const GROWTH: f64 = 1.5;
const RIESZ_TOL: f64 = 1e-8;
const RECONSTRUCTION_TOL: f64 = 1e-10;
const LP_SECONDS: f64 = 120.0;
// criterion 7
const GRADIENT_PAIRS: usize = 20;
const GRADIENT_EPS: f64 = 1e-5;
const GRADIENT_TOL: f64 = 1e-6;

fn announce(n: usize, name: &str, checks: &[(String, bool)]) -> bool {
    let passed = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks.iter().map(|(d, ok)| format!("{}{d}", if *ok { "" } else { "!! " })).collect();
    println!("criterion {n} ({name}): {} | {}", if passed { "PASS" } else { "FAIL" }, detail.join("; "));
    passed
}

fn default_model() -> Model {
    Model::build(ModelSpec::default()).expect("default model builds")
}

fn failing(report: &PropertyReport) -> Vec<String> {
    report.verdicts.iter().filter(|v| !v.passed).map(|v| format!("{}: {}", v.anchor, v.name)).collect()
}

/// `max|x|/min|x|` over the last `n` entries.
fn tail_ratio(xs: &[f64], n: usize) -> f64 {
    let w = &xs[xs.len().saturating_sub(n)..];
    let max = w.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let min = w.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `∫_0^u h` by Simpson's rule; `t ↦ t^4` removes the power singularity at 0.
fn integral_of_h(m: &ConvexMinorant, u: f64) -> f64 {
    let inner = u.min(m.rho);
    let top = inner.powf(0.25);
    let mut total = simpson(|t| m.h(t.powi(4)) * 4.0 * t.powi(3), 0.0, top, 4000);
    if u > m.rho {
        total += simpson(|x| m.h(x), m.rho, u, 4000);
    }
    total
}

#[test]
fn criterion_1_minorant() {
    let start = Instant::now();
    let report = suites::minorant_suite(MinorantParams { pairs: MINORANT_PAIRS, samples: MINORANT_SAMPLES }, SEED).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let alphas = report.column("alpha").unwrap();
    let betas = report.column("beta").unwrap();
    let exponents_ok = alphas.iter().zip(&betas).all(|(a, b)| 2.0 < *a && a <= b && *b < 6.0);

    let mut worst: f64 = 0.0;
    for (a, b) in alphas.iter().zip(&betas) {
        let m = ConvexMinorant::new(*a, *b).unwrap();
        for i in 1..=QUADRATURE_POINTS / MINORANT_PAIRS {
            let u = 10.0 * i as f64 / (QUADRATURE_POINTS / MINORANT_PAIRS) as f64;
            let exact = m.H(u);
            worst = worst.max((exact - integral_of_h(&m, u)).abs() / exact.abs().max(1.0));
        }
    }
    let fails = failing(&report);
    let ok = announce(
        1,
        "convex minorant",
        &[
            (format!("{} pairs with 2 < alpha <= beta < 6", alphas.len()), exponents_ok && alphas.len() == MINORANT_PAIRS),
            (format!("properties (i)-(v) on {MINORANT_SAMPLES} samples, failing {fails:?}"), fails.is_empty()),
            (format!("H vs Simpson quadrature of h: {worst:.2e} <= {QUADRATURE_TOL:e}"), worst <= QUADRATURE_TOL),
            (format!("runtime {seconds:.2}s < {MINORANT_SECONDS}s"), seconds < MINORANT_SECONDS),
        ],
    );
    assert!(ok);
}

/// Eigenvalues of the periodic finite-difference operator on `cells` Mathieu cells, built from scratch.
fn dense_mathieu_eigenvalues(q: f64, cells: usize, m: usize) -> Vec<f64> {
    let n = cells * m;
    let h = 1.0 / m as f64;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let x = (i % m) as f64 * h;
        a[(i, i)] = 2.0 / (h * h) + 2.0 * q * (2.0 * std::f64::consts::PI * x).cos();
        a[(i, (i + 1) % n)] = -1.0 / (h * h);
        a[((i + 1) % n, i)] = -1.0 / (h * h);
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn criterion_2_spectral() {
    let start = Instant::now();
    let model = default_model();
    let params = SpectralParams::default();
    let (report, summary) = suites::spectral_suite(&model, params, SEED).unwrap();
    let seconds = start.elapsed().as_secs_f64();

    let cells = params.cells * 4;
    let ev = dense_mathieu_eigenvalues(1.0, cells, model.spec.points_per_cell);
    let (a, b) = (ev[cells - 1], ev[cells]);
    let rel = ((a - summary.raw_gap.a) / a).abs().max(((b - summary.raw_gap.b) / b).abs());
    let shift = report.verdict("constant potential shifts bands").unwrap();
    let lemma: Vec<_> = ["Q(y) <= -alpha|y|^2", "Q(z) >= beta|z|^2", "Q(z) - Q(y) >= N|y+z|^2"].iter().map(|n| report.verdict(n).unwrap()).collect();
    let ok = announce(
        2,
        "spectral splitting",
        &[
            (format!("gap ({:.9}, {:.9}) vs independent {cells}-cell dense oracle: rel {rel:.2e}", summary.raw_gap.a, summary.raw_gap.b), rel <= ORACLE_TOL),
            (format!("constant-shift identity {:.2e} <= 1e-12", shift.value), shift.passed && shift.threshold == 1e-12),
            (
                format!(
                    "Lemma 1.1 worst excess {:.2e}, {:.2e}, {:.2e} over {} lambdas x {} samples",
                    lemma[0].value, lemma[1].value, lemma[2].value, params.lambdas, params.samples
                ),
                lemma.iter().all(|v| v.passed && v.threshold == 1e-8) && params.lambdas == 9 && params.samples == 100,
            ),
            (format!("runtime {seconds:.2}s < {SPECTRAL_SECONDS}s"), seconds < SPECTRAL_SECONDS),
        ],
    );
    assert!(ok);
}

#[test]
fn criterion_3_bloch() {
    let start = Instant::now();
    let model = default_model();
    let params = BlochParams::default();
    assert_eq!(params.radii, vec![8.0, 16.0, 32.0, 64.0]);
    let report = suites::bloch_suite(&model, &params).unwrap();
    let seconds = start.elapsed().as_secs_f64();

    let mut checks = Vec::new();
    for col in &report.columns[1..] {
        let r = tail_ratio(&report.column(col).unwrap(), 3);
        checks.push((format!("{col} ratio {r:.3}"), r < BOUNDED_RATIO));
    }
    for col in report.columns.iter().filter(|c| c.contains("int_B")) {
        let min = report.column(col).unwrap().iter().rev().take(3).cloned().fold(f64::INFINITY, f64::min);
        checks.push((format!("(B5) {col} min {min:.3}"), min >= FLOOR));
    }
    checks.push((format!("suite verdicts failing {:?}", failing(&report)), report.passed()));
    checks.push((format!("runtime {seconds:.2}s < {BLOCH_SECONDS}s"), seconds < BLOCH_SECONDS));
    assert!(announce(3, "Bloch packets", &checks));
}

#[test]
fn criterion_4_zeta() {
    let start = Instant::now();
    let model = default_model();
    let params = ZetaParams::default();
    let expected = [-1.0, -1.5, -2.0, -2.5, -3.0];
    assert!(params.distances.iter().zip(expected).all(|(d, e)| (d.log10() - e).abs() < 1e-12));
    let report = suites::zeta_suite(&model, &params).unwrap();
    let seconds = start.elapsed().as_secs_f64();

    let mut checks = Vec::new();
    for col in ["norm", "Q_lambda(zeta)/(b-lambda)", "sup*(b-lambda)^(-1/4)", "|P Psi_R|/(b-lambda)"] {
        let r = tail_ratio(&report.column(col).unwrap(), 3);
        checks.push((format!("{col} ratio {r:.3}"), r < BOUNDED_RATIO));
    }
    let col = "(b-lambda)^(-(g-2)/4)*int_B|zeta|^g[g=4]";
    let min = report.column(col).unwrap().iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push((format!("gamma = 4 weighted integral min {min:.3}"), min >= FLOOR));
    checks.push((format!("suite verdicts failing {:?}", failing(&report)), report.passed()));
    checks.push((format!("runtime {seconds:.2}s < {ZETA_SECONDS}s"), seconds < ZETA_SECONDS));
    assert!(announce(4, "gap direction estimates", &checks));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# seed="));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn gapbif() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gapbif"))
}

fn default_config() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml")
}

#[test]
fn criterion_5_bifurcation_rates() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let status = gapbif().args(["sweep", "--jobs", "1", "--config"]).arg(default_config()).arg("--out").arg(dir.path()).output().unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let (header, rows) = read_csv(&dir.path().join("branch.csv"));
    let col = |name: &str| -> Vec<f64> {
        let i = header.iter().position(|h| h == name).unwrap();
        rows.iter().map(|r| r[i]).collect()
    };
    let (lambda, d, norm, en, c_ub, n_lambda, conv) = (col("lambda"), col("d"), col("h1_norm"), col("energy"), col("c_ub"), col("N_lambda"), col("converged"));

    // b and the gap width from the sweep itself: b = lambda + d, b - a = d_max / 0.2
    let width = d[0] / 0.2;
    let beta = 4.0;
    let dim = 1.0;
    let ref_norm = 1.0 / (beta - 2.0) - dim / 4.0;
    let ref_energy = beta / (beta - 2.0) - dim / 2.0;

    let idx: Vec<usize> = (0..d.len()).filter(|&i| conv[i] == 1.0 && d[i] <= FIT_WINDOW * width).collect();
    let fit = |y: &[f64]| -> f64 {
        let xs: Vec<f64> = idx.iter().map(|&i| d[i].ln()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i].ln()).collect();
        ols(&xs, &ys).0
    };
    let (t_norm, t_energy, t_c) = (fit(&norm), fit(&en), fit(&c_ub));
    let converged: Vec<usize> = (0..d.len()).filter(|&i| conv[i] == 1.0).collect();
    let worst_excess = converged.iter().map(|&i| en[i] - c_ub[i]).fold(f64::NEG_INFINITY, f64::max);
    let min_energy = converged.iter().map(|&i| en[i]).fold(f64::INFINITY, f64::min);
    let ratios: Vec<f64> = converged.iter().map(|&i| n_lambda[i] * norm[i] * norm[i] / c_ub[i]).collect();
    let ratio = tail_ratio(&ratios, RATIO_TAIL);
    let schedule_ok = d.len() == 12 && (d[11] / d[0] - 1e-3 / 0.2).abs() < 1e-9 && lambda.iter().zip(&d).all(|(l, dd)| (l + dd - (lambda[0] + d[0])).abs() < 1e-12);

    let ok = announce(
        5,
        "bifurcation rates",
        &[
            (format!("12-point geometric schedule over [1e-3, 0.2](b-a), {} converged", converged.len()), schedule_ok && converged.len() == 12),
            (format!("theta_norm {t_norm:.4} vs {ref_norm} +- {THETA_NORM_TOL}"), (t_norm - ref_norm).abs() <= THETA_NORM_TOL),
            (format!("theta_energy {t_energy:.4} vs {ref_energy} +- {THETA_ENERGY_TOL}"), (t_energy - ref_energy).abs() <= THETA_ENERGY_TOL),
            (format!("theta_c {t_c:.4} vs {ref_energy} +- {THETA_ENERGY_TOL}"), (t_c - ref_energy).abs() <= THETA_ENERGY_TOL),
            (
                format!("0 <= E <= c_ub + 1e-6: min E {min_energy:.3e}, max E - c_ub {worst_excess:.3e}"),
                min_energy >= 0.0 && worst_excess <= ENERGY_SLACK,
            ),
            (format!("N|u|^2/c_ub tail ratio {ratio:.3} < {BOUNDED_RATIO}"), ratio < BOUNDED_RATIO),
            (format!("single-threaded runtime {seconds:.1}s < {SWEEP_SECONDS}s (exit {:?})", status.status.code()), seconds < SWEEP_SECONDS),
        ],
    );
    assert!(ok);
}

#[test]
fn criterion_6_lp_direct_sum() {
    let start = Instant::now();
    let model = default_model();
    let params = LpParams::default();
    let reports = suites::lp_suite(&model, &params, SEED).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let mut checks = Vec::new();

    let scan = reports.iter().find(|r| r.anchor == "Prop. A.1").unwrap();
    let (p, cells, ppc, ratio) = (scan.column("p").unwrap(), scan.column("cells").unwrap(), scan.column("points_per_cell").unwrap(), scan.column("max_ratio").unwrap());
    let base = |i: usize| cells[i] == cells[0] && ppc[i] == ppc[0];
    let p2 = (0..p.len()).filter(|&i| p[i] == 2.0).map(|i| ratio[i]).fold(0.0, f64::max);
    checks.push((format!("p = 2 max ratio {p2:.6} <= 1 + 1e-10"), p2 <= 1.0 + P2_SLACK));
    let mut worst_growth: f64 = 0.0;
    for i in (0..p.len()).filter(|&i| base(i) && p[i] != 2.0) {
        for j in (0..p.len()).filter(|&j| p[j] == p[i] && !base(j)) {
            worst_growth = worst_growth.max(ratio[j] / ratio[i]);
        }
    }
    checks.push((format!("p in {{3,4,6,inf}} growth under refinement and doubling {worst_growth:.4} < {GROWTH}"), worst_growth > 0.0 && worst_growth < GROWTH));

    let riesz = reports.iter().find(|r| r.anchor == "Riesz projector").unwrap();
    let errors = riesz.column("max_error").unwrap();
    let finest = *errors.last().unwrap();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0] || w[1] <= 1e-12);
    checks.push((format!("Riesz vs eigenprojector {finest:.2e} on {} vectors, errors {errors:?}", params.riesz_vectors), finest <= RIESZ_TOL && decreasing));

    let recon = reports.iter().filter(|r| r.anchor == "Corollary A.2").flat_map(|r| r.column("reconstruction").unwrap()).fold(0.0, f64::max);
    checks.push((format!("|u - Pu - Qu|_p / |u|_p {recon:.2e} <= {RECONSTRUCTION_TOL:e}"), recon <= RECONSTRUCTION_TOL));
    let fails: Vec<String> = reports.iter().flat_map(failing).collect();
    checks.push((format!("suite verdicts failing {fails:?}"), fails.is_empty()));
    checks.push((format!("runtime {seconds:.2}s < {LP_SECONDS}s"), seconds < LP_SECONDS));
    assert!(announce(6, "L^p projector", &checks));
}

#[test]
fn criterion_7_gradient() {
    let model = default_model();
    let params = GradientParams { pairs: GRADIENT_PAIRS, epsilon: GRADIENT_EPS, tolerance: GRADIENT_TOL, cells: 8 };
    let report = suites::gradient_suite(&model, params, SEED).unwrap();
    let suite_worst = report.column("relative error").unwrap().iter().cloned().fold(0.0, f64::max);

    // separate pairs: random trigonometric sums, lambda in the lower half of the gap
    let op = model.operator(8).unwrap();
    let h = op.spacing();
    let lambda = model.gap.a + 0.3 * model.gap.width();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x9e37);
    let len = op.len() as f64;
    let mut draw = || -> Vec<f64> {
        let modes: Vec<(f64, f64, f64)> = (0..6).map(|_| (rng.gen_range(1..40) as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3))).collect();
        (0..op.len()).map(|n| modes.iter().map(|(k, a, ph)| a * (2.0 * std::f64::consts::PI * k * n as f64 / len + ph).sin()).sum()).collect()
    };
    let mut own_worst: f64 = 0.0;
    for _ in 0..GRADIENT_PAIRS {
        let (u, v) = (draw(), draw());
        let g = energy_gradient(&u, lambda, &op, &model.nl).unwrap();
        let analytic: f64 = h * g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let at = |t: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + t * b).collect() };
        let fd = (energy(&at(GRADIENT_EPS), lambda, &op, &model.nl).unwrap() - energy(&at(-GRADIENT_EPS), lambda, &op, &model.nl).unwrap()) / (2.0 * GRADIENT_EPS);
        own_worst = own_worst.max((analytic - fd).abs() / analytic.abs());
    }
    let ok = announce(
        7,
        "gradient consistency",
        &[
            (format!("suite: {} pairs, worst relative error {suite_worst:.2e}", report.rows.len()), report.rows.len() == GRADIENT_PAIRS && suite_worst < GRADIENT_TOL),
            (format!("independent pairs: worst relative error {own_worst:.2e} < {GRADIENT_TOL:e}"), own_worst < GRADIENT_TOL),
        ],
    );
    assert!(ok);
}

#[test]
fn criterion_8_end_to_end() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let codes: Vec<Option<i32>> = dirs
        .iter()
        .map(|d| gapbif().arg("full-report").arg("--config").arg(default_config()).arg("--out").arg(d.path()).output().unwrap().status.code())
        .collect();
    let mut csvs: Vec<String> = fs::read_dir(dirs[0].path())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();
    let differing: Vec<&String> = csvs.iter().filter(|n| fs::read(dirs[0].path().join(n)).ok() != fs::read(dirs[1].path().join(n)).ok()).collect();
    let summary = fs::read_to_string(dirs[0].path().join("summary.txt")).unwrap_or_default();
    let failing_lines: Vec<&str> = summary.lines().filter(|l| l.contains("failing:")).map(str::trim).collect();
    let ok = announce(
        8,
        "end-to-end full report",
        &[
            (format!("exit codes {codes:?}, expected Some(0); {failing_lines:?}"), codes.iter().all(|c| *c == Some(0))),
            (format!("{} CSV files byte-identical across runs, differing {differing:?}", csvs.len()), csvs.len() >= 10 && differing.is_empty()),
            ("full_report.json written".into(), dirs[0].path().join("full_report.json").exists()),
        ],
    );
    assert!(ok);
}
