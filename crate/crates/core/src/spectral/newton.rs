//! Newton iteration on H_{β,γ}.

use num_complex::Complex64;

use super::{eval_hbg_deriv, eval_hbg_with_scale, RootResult, SpectralError};

const MAX_ITERATIONS: u32 = 100;
const RESIDUAL_REL_TOL: f64 = 1e-10;

/// Newton iteration from `lambda0`. Non-convergence is reported through
/// `converged = false`, never as an error; only an unsupported γ errors.
pub fn newton_root(
    beta: f64,
    gamma: u32,
    lambda0: Complex64,
) -> Result<RootResult, SpectralError> {
    let mut lam = lambda0;
    let mut iterations = 0;
    let (mut value, mut scale) = eval_hbg_with_scale(beta, gamma, lam)?;
    while iterations < MAX_ITERATIONS {
        if !lam.is_finite() || lam.norm() > 1e9 {
            return Ok(RootResult { lambda: lam, residual: value.norm(), converged: false, iterations });
        }
        if value.norm() <= RESIDUAL_REL_TOL * scale {
            // one final damped polish step, kept only if it helps
            let deriv = eval_hbg_deriv(beta, gamma, lam)?;
            if deriv.norm() > 0.0 {
                let candidate = lam - 0.5 * value / deriv;
                let (cv, _) = eval_hbg_with_scale(beta, gamma, candidate)?;
                if cv.norm() < value.norm() {
                    lam = candidate;
                    value = cv;
                }
            }
            return Ok(RootResult {
                lambda: lam,
                residual: value.norm(),
                converged: true,
                iterations,
            });
        }
        let deriv = eval_hbg_deriv(beta, gamma, lam)?;
        if !deriv.is_finite() || deriv.norm() == 0.0 {
            return Ok(RootResult { lambda: lam, residual: value.norm(), converged: false, iterations });
        }
        lam -= value / deriv;
        iterations += 1;
        let next = eval_hbg_with_scale(beta, gamma, lam)?;
        value = next.0;
        scale = next.1;
    }
    Ok(RootResult { lambda: lam, residual: value.norm(), converged: false, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_to_paper_crossing_gamma1() {
        // β = 0.769 (the paper's rounded β_c), start 1.2i
        let r = newton_root(0.769, 1, Complex64::new(0.0, 1.2)).unwrap();
        assert!(r.converged);
        assert!(r.lambda.re.abs() < 5e-3, "Re λ = {}", r.lambda.re);
        assert!((r.lambda.im - 1.171).abs() < 5e-3, "Im λ = {}", r.lambda.im);
    }

    #[test]
    fn converges_to_paper_crossing_gamma2() {
        let r = newton_root(0.362, 2, Complex64::new(0.0, 2.0)).unwrap();
        assert!(r.converged);
        assert!(r.lambda.re.abs() < 5e-3, "Re λ = {}", r.lambda.re);
        assert!((r.lambda.im - 1.978).abs() < 5e-3, "Im λ = {}", r.lambda.im);
    }

    #[test]
    fn conjugate_seed_gives_conjugate_root_bit_exact() {
        for gamma in [1u32, 2] {
            let seed = Complex64::new(-0.2, 1.4);
            let a = newton_root(0.55, gamma, seed).unwrap();
            let b = newton_root(0.55, gamma, seed.conj()).unwrap();
            assert!(a.converged && b.converged);
            assert_eq!(a.lambda.re.to_bits(), b.lambda.re.to_bits());
            assert_eq!(a.lambda.im.to_bits(), (-b.lambda.im).to_bits());
            assert_eq!(a.iterations, b.iterations);
        }
    }

    #[test]
    fn residual_satisfies_scale_aware_bound() {
        // every converged root obeys |H| < 1e-8 (1 + |λ|)^4
        for &(beta, gamma, im0) in &[(0.4, 1u32, 1.6), (0.25, 2u32, 2.1), (0.9, 1u32, 0.8)] {
            let r = newton_root(beta, gamma, Complex64::new(-0.3, im0)).unwrap();
            if r.converged {
                let bound = 1e-8 * (1.0 + r.lambda.norm()).powi(4);
                assert!(r.residual < bound, "residual {} vs {bound}", r.residual);
            }
        }
    }

    #[test]
    fn nonconvergence_is_flagged_not_thrown() {
        // a hopeless start very far away either converges somewhere or
        // reports converged = false; it must not error
        let r = newton_root(0.5, 1, Complex64::new(80.0, 80.0)).unwrap();
        if !r.converged {
            assert!(r.iterations > 0);
        }
    }
}
