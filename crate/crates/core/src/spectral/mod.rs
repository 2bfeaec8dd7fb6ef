//! Discrete spectrum of the linearized mean-field operator.
//!
//! Linearizing the Fokker–Planck system around its neutral stationary
//! state reduces the eigenvalue problem to locating the zeros of one
//! holomorphic function per tail exponent:
//!
//! ```text
//! H_{β,1}(λ) = H₁(λ)[−4β − λ³√(π/2)] + √(2π)λ² − 4βλ + 2β√(2π)
//!
//! H_{β,2}(λ) = H₂(λ)[12β − λ⁴Λ + 6βλΛ − 6βλ·3^{1/3}Γ(4/3)
//!              + 3βλ²·3^{2/3}Γ(5/3) − 6βλ²Γ(2/3)/3^{1/3}]
//!              + 2Λλ³ − 12βΛ + 12βλΓ(2/3)/3^{1/3} − 6βλ²
//! ```
//!
//! with Λ = Γ(1/3)/3^{2/3}. Beyond Newton iteration and continuation in β,
//! zero counts come from the argument principle over rectangles, which
//! cross-checks every root scan.
//!
//! One structural fact the eigenvalue-level operations must know: λ = 0 is
//! a zero of H_{β,γ} of multiplicity γ+1 for *every* β. It is introduced
//! by clearing the 1/λ powers of the intermediate linear-system solution
//! and is not an eigenvalue (the auxiliary constant k of the derivation is
//! undefined there). Scans report it separately and never list it as a
//! root; winding counts, which necessarily see it, are reconciled against
//! scans through its known multiplicity.

mod hopf;
mod newton;
pub mod series;
mod winding;

pub use hopf::find_hopf;
pub use newton::newton_root;
pub use winding::{count_zeros_rect, scan_roots, Rect, RootScan};

use num_complex::Complex64;
use thiserror::Error;

use crate::special;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("spectral assemblies only exist for gamma in {{1, 2}}, got {0}")]
    UnsupportedGamma(u32),
    #[error("bracket invalid: Re λ = {re_lo} at β_lo and {re_hi} at β_hi must straddle 0")]
    BracketInvalid { re_lo: f64, re_hi: f64 },
    #[error("no eigenvalue branch found near β = {beta} to seed the continuation")]
    SeedNotFound { beta: f64 },
    #[error("a zero sits on the contour; still detected after {retries} perturbation retries")]
    ContourOnZero { retries: u32 },
    #[error("lost the eigenvalue branch while continuing to β = {beta}")]
    TraceLost { beta: f64 },
}

/// A complex eigenvalue approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub lambda: Complex64,
    /// |H_{β,γ}(λ)| at the returned point.
    pub residual: f64,
    /// When set, the residual is below 1e-10 of the local function scale.
    pub converged: bool,
    pub iterations: u32,
}

/// The located Hopf crossing: β_c with ω_c = Im λ at the crossing.
#[derive(Debug, Clone)]
pub struct HopfResult {
    pub beta_c: f64,
    pub omega_c: f64,
    /// Final bisection bracket; Re λ < 0 at .0 and > 0 at .1.
    pub bracket: (f64, f64),
    /// Every root accepted along the continuation, in evaluation order.
    pub path: Vec<(f64, RootResult)>,
}

/// Multiplicity of the structural (non-eigenvalue) zero at λ = 0.
pub fn origin_multiplicity(gamma: u32) -> usize {
    gamma as usize + 1
}

pub(crate) struct Constants {
    pub lambda1: f64,
    pub lambda2: f64,
    pub sqrt_2pi: f64,
    /// 3^{1/3} Γ(4/3)
    pub c_g43: f64,
    /// 3^{2/3} Γ(5/3)
    pub c_g53: f64,
    /// Γ(2/3) / 3^{1/3}
    pub c_g23: f64,
}

pub(crate) fn constants() -> &'static Constants {
    use std::sync::OnceLock;
    static CONSTS: OnceLock<Constants> = OnceLock::new();
    CONSTS.get_or_init(|| {
        let third = 3.0f64.powf(1.0 / 3.0);
        Constants {
            lambda1: (std::f64::consts::PI / 2.0).sqrt(),
            lambda2: crate::model::normalization_lambda(2),
            sqrt_2pi: (2.0 * std::f64::consts::PI).sqrt(),
            c_g43: third * special::gamma(4.0 / 3.0),
            c_g53: third * third * special::gamma(5.0 / 3.0),
            c_g23: special::gamma(2.0 / 3.0) / third,
        }
    })
}

/// H_{β,γ}(λ), assembled exactly as the propositions state it.
pub fn eval_hbg(beta: f64, gamma: u32, lambda: Complex64) -> Result<Complex64, SpectralError> {
    Ok(eval_hbg_with_scale(beta, gamma, lambda)?.0)
}

/// (H_{β,γ}(λ), local scale), the scale being the sum of the magnitudes of
/// the assembled terms. Residual tolerances are relative to it.
pub fn eval_hbg_with_scale(
    beta: f64,
    gamma: u32,
    lambda: Complex64,
) -> Result<(Complex64, f64), SpectralError> {
    let c = constants();
    let lam = lambda;
    match gamma {
        1 => {
            let h1 = series::h1(lam);
            let bracket = -4.0 * beta - lam * lam * lam * c.lambda1;
            let value = h1 * bracket
                + c.sqrt_2pi * lam * lam
                - 4.0 * beta * lam
                + 2.0 * beta * c.sqrt_2pi;
            let scale = h1.norm() * bracket.norm()
                + c.sqrt_2pi * lam.norm_sqr()
                + 4.0 * beta * lam.norm()
                + 2.0 * beta * c.sqrt_2pi;
            Ok((value, scale.max(1e-30)))
        }
        2 => {
            let h2 = series::h2(lam);
            let l = c.lambda2;
            let lam2 = lam * lam;
            let bracket = 12.0 * beta - lam2 * lam2 * l + 6.0 * beta * lam * l
                - 6.0 * beta * lam * c.c_g43
                + 3.0 * beta * lam2 * c.c_g53
                - 6.0 * beta * lam2 * c.c_g23;
            let rest = 2.0 * l * lam * lam2 - 12.0 * beta * l + 12.0 * beta * c.c_g23 * lam
                - 6.0 * beta * lam2;
            let value = h2 * bracket + rest;
            let scale = h2.norm() * bracket.norm()
                + 2.0 * l * lam.norm().powi(3)
                + 12.0 * beta * l
                + 12.0 * beta * c.c_g23 * lam.norm()
                + 6.0 * beta * lam.norm_sqr();
            Ok((value, scale.max(1e-30)))
        }
        g => Err(SpectralError::UnsupportedGamma(g)),
    }
}

/// d/dλ H_{β,γ}, with H′ from the active evaluation branch.
pub fn eval_hbg_deriv(
    beta: f64,
    gamma: u32,
    lambda: Complex64,
) -> Result<Complex64, SpectralError> {
    let c = constants();
    let lam = lambda;
    match gamma {
        1 => {
            let (h1, dh1) = series::h1_with_deriv(lam);
            let bracket = -4.0 * beta - lam * lam * lam * c.lambda1;
            let dbracket = -3.0 * lam * lam * c.lambda1;
            Ok(dh1 * bracket + h1 * dbracket + 2.0 * c.sqrt_2pi * lam - 4.0 * beta)
        }
        2 => {
            let (h2, dh2) = series::h2_with_deriv(lam);
            let l = c.lambda2;
            let lam2 = lam * lam;
            let bracket = 12.0 * beta - lam2 * lam2 * l + 6.0 * beta * lam * l
                - 6.0 * beta * lam * c.c_g43
                + 3.0 * beta * lam2 * c.c_g53
                - 6.0 * beta * lam2 * c.c_g23;
            let dbracket = -4.0 * lam * lam2 * l + 6.0 * beta * l - 6.0 * beta * c.c_g43
                + 6.0 * beta * lam * c.c_g53
                - 12.0 * beta * lam * c.c_g23;
            let drest = 6.0 * l * lam2 + 12.0 * beta * c.c_g23 - 12.0 * beta * lam;
            Ok(dh2 * bracket + h2 * dbracket + drest)
        }
        g => Err(SpectralError::UnsupportedGamma(g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbg1_vanishes_at_origin_for_beta_zero() {
        let v = eval_hbg(0.0, 1, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hbg_vanishes_at_origin_for_all_beta() {
        // the structural zero from clearing denominators, multiplicity γ+1
        for &beta in &[0.1, 0.5, 0.769, 2.0] {
            for gamma in [1u32, 2] {
                let (v, scale) =
                    eval_hbg_with_scale(beta, gamma, Complex64::new(0.0, 0.0)).unwrap();
                assert!(v.norm() < 1e-14 * scale, "β={beta} γ={gamma}: {v}");
            }
        }
    }

    #[test]
    fn near_root_from_paper_three_digit_values() {
        // (β, λ) = (0.769, 1.171i) is a root of H_{β,1} to the paper's
        // printed precision
        let (v, scale) = eval_hbg_with_scale(0.769, 1, Complex64::new(0.0, 1.171)).unwrap();
        assert!(v.norm() < 1e-2 * scale, "|H| = {} vs scale {scale}", v.norm());
    }

    #[test]
    fn gamma2_matches_independent_assembly() {
        // regrouped polynomial form of the same function, with H₂ by
        // quadrature: an independent route to the same value
        let beta = 0.5;
        let lam = Complex64::new(1.0, 0.5);
        let got = eval_hbg(beta, 2, lam).unwrap();

        let c = constants();
        let h2 = series::h2_quadrature(lam);
        let l = c.lambda2;
        // −ΛH₂λ⁴ + 2Λλ³ + λ²[−6β − 6β(Γ(2/3)/3^{1/3})H₂ + 3βH₂·3^{2/3}Γ(5/3)]
        // + λ[6βΛH₂ − 6βH₂·3^{1/3}Γ(4/3) + 12βΓ(2/3)/3^{1/3}] + 12βH₂ − 12βΛ
        let independent = -l * h2 * lam.powu(4)
            + 2.0 * l * lam.powu(3)
            + lam.powu(2)
                * (-6.0 * beta - 6.0 * beta * c.c_g23 * h2 + 3.0 * beta * h2 * c.c_g53)
            + lam * (6.0 * beta * l * h2 - 6.0 * beta * h2 * c.c_g43 + 12.0 * beta * c.c_g23)
            + 12.0 * beta * h2
            - 12.0 * beta * l;
        assert!((got - independent).norm() < 1e-11, "{got} vs {independent}");

        // frozen value from a high-precision evaluation
        let frozen = Complex64::new(0.268_631_468_883_377, 0.946_984_278_612_060_8);
        assert!((got - frozen).norm() < 1e-11, "{got} vs frozen {frozen}");
    }

    #[test]
    fn rejects_unsupported_gamma() {
        assert_eq!(
            eval_hbg(0.5, 0, Complex64::new(1.0, 0.0)).unwrap_err(),
            SpectralError::UnsupportedGamma(0)
        );
        assert!(eval_hbg(0.5, 3, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn conjugate_symmetry_of_assembly() {
        for gamma in [1u32, 2] {
            for &(re, im) in &[(0.4, 1.3), (-1.0, 2.2), (3.0, 4.0)] {
                let lam = Complex64::new(re, im);
                let a = eval_hbg(0.7, gamma, lam).unwrap();
                let b = eval_hbg(0.7, gamma, lam.conj()).unwrap();
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), (-b.im).to_bits());
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for gamma in [1u32, 2] {
            for &(re, im) in &[(0.2, 1.0), (-0.8, 1.9), (0.5, 0.0)] {
                let lam = Complex64::new(re, im);
                let d = eval_hbg_deriv(0.6, gamma, lam).unwrap();
                let h = 1e-6;
                let num = (eval_hbg(0.6, gamma, lam + h).unwrap()
                    - eval_hbg(0.6, gamma, lam - h).unwrap())
                    / (2.0 * h);
                assert!(
                    (d - num).norm() < 1e-6 * (1.0 + d.norm()),
                    "γ={gamma} λ={lam}: {d} vs {num}"
                );
            }
        }
    }
}
