//! Gamma function via the Lanczos approximation.
//!
//! The rational constants Γ(1/3), Γ(2/3), Γ(4/3), Γ(5/3) entering the
//! spectral assemblies and the normalization Λ are evaluated through this
//! routine once and cached by the callers. Accuracy is checked in the tests
//! against the reflection identity Γ(1/3)Γ(2/3) = 2π/√3.

use std::f64::consts::PI;

// Lanczos g = 7, n = 9 (Godfrey coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma function for real arguments, poles at 0, -1, -2, ... return NaN.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1-x) = π / sin(πx)
        if x == x.floor() {
            return f64::NAN;
        }
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let z = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS[1..].iter().enumerate() {
        sum += c / (z + (i + 1) as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * sum
}
