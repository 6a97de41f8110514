//! Gap edges of the Mathieu operator against the characteristic-value series.
//!
//! With `x = t/π`, `−u'' + 2q cos(2πx) u = E u` becomes the Mathieu equation
//! `y'' + (a − 2 q' cos 2t) y = 0` with `a = E/π²`, `q' = q/π²`. The first gap
//! sits at the antiperiodic characteristic values `b₁(q') < a₁(q')`.

use std::f64::consts::PI;

use gapbif::spectral::{bloch_bands, find_gaps, PeriodicPotential};

fn a1(q: f64) -> f64 {
    1.0 + q - q * q / 8.0 - q.powi(3) / 64.0 - q.powi(4) / 1536.0 + 11.0 * q.powi(5) / 36864.0
}

fn b1(q: f64) -> f64 {
    1.0 - q - q * q / 8.0 + q.powi(3) / 64.0 - q.powi(4) / 1536.0 - 11.0 * q.powi(5) / 36864.0
}

fn first_gap(q: f64, m: usize) -> (f64, f64) {
    let bands = bloch_bands(&PeriodicPotential::mathieu(q).unwrap(), m, 4, 33).unwrap();
    let g = find_gaps(&bands, 1e-6)[0];
    (g.a, g.b)
}

#[test]
fn richardson_extrapolated_edges_match_series() {
    let q = 1.0;
    let (a32, b32) = first_gap(q, 32);
    let (a64, b64) = first_gap(q, 64);
    // second-order scheme: halving h cuts the error by four
    let a = (4.0 * a64 - a32) / 3.0;
    let b = (4.0 * b64 - b32) / 3.0;
    let qm = q / (PI * PI);
    let (lower, upper) = (PI * PI * b1(qm), PI * PI * a1(qm));
    assert!(((a - lower) / lower).abs() < 2e-5, "lower edge {a} vs {lower}");
    assert!(((b - upper) / upper).abs() < 2e-5, "upper edge {b} vs {upper}");
    // the raw m = 32 edges sit below by the O(h²) truncation, about E² h² / 12
    assert!(a32 < lower && b32 < upper);
    assert!((upper - b32) / upper < 2.0 * upper / (12.0 * 32.0 * 32.0));
}

#[test]
fn gap_width_grows_linearly_for_small_q() {
    // first-order perturbation: the gap opens as 2|q|
    for q in [0.01, 0.02, 0.04] {
        let (a, b) = first_gap(q, 64);
        assert!(((b - a) / (2.0 * q) - 1.0).abs() < 0.01, "q = {q}: width {}", b - a);
    }
}
