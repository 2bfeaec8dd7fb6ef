//! Evaluation of the entire functions
//!
//! ```text
//! H₁(λ) = ∫₀^∞ e^{−y²/2} e^{−λy} dy      H₂(λ) = ∫₀^∞ e^{−y³/3} e^{−λy} dy
//! ```
//!
//! by power series near the origin and adaptive quadrature along the real
//! axis beyond a switch radius. The two branches agree on an overlap
//! annulus, which the tests check.
//!
//! Series forms:
//!
//! ```text
//! H₁(λ) = √(π/2) Σ λ^{2m}/(2m)!!  −  λ Σ (2λ)^{2m} m! / ((2m+1)! 2^m)
//! H₂(λ) = Σ (−1)^n λ^n/n! · 3^{(n−2)/3} Γ((n+1)/3)
//! ```
//!
//! H₂'s terms alternate and grow before they decay, so it is summed with
//! compensated (Kahan) accumulation; its three residue classes mod 3 share
//! the term recurrence t_{n+3} = t_n · (−λ)³ / ((n+2)(n+3)).

use num_complex::Complex64;

use crate::special;

/// Series/quadrature switch radius for H₁.
pub const R_SWITCH_H1: f64 = 4.0;
/// Series/quadrature switch radius for H₂.
pub const R_SWITCH_H2: f64 = 2.5;

const SERIES_EPS: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 400;

/// H₁(λ), branch chosen by |λ|.
pub fn h1(lambda: Complex64) -> Complex64 {
    if lambda.norm() <= R_SWITCH_H1 {
        h1_series(lambda).0
    } else {
        h1_quadrature(lambda)
    }
}

/// H₁ and H₁′. The series branch differentiates term-wise; the quadrature
/// branch uses central differences with step 1e-6·(1+|λ|).
pub fn h1_with_deriv(lambda: Complex64) -> (Complex64, Complex64) {
    if lambda.norm() <= R_SWITCH_H1 {
        h1_series(lambda)
    } else {
        let h = 1e-6 * (1.0 + lambda.norm());
        let value = h1_quadrature(lambda);
        let deriv = (h1_quadrature(lambda + h) - h1_quadrature(lambda - h)) / (2.0 * h);
        (value, deriv)
    }
}

/// H₂(λ), branch chosen by |λ|.
pub fn h2(lambda: Complex64) -> Complex64 {
    if lambda.norm() <= R_SWITCH_H2 {
        h2_series(lambda).0
    } else {
        h2_quadrature(lambda)
    }
}

/// H₂ and H₂′, same branch structure as [`h1_with_deriv`].
pub fn h2_with_deriv(lambda: Complex64) -> (Complex64, Complex64) {
    if lambda.norm() <= R_SWITCH_H2 {
        h2_series(lambda)
    } else {
        let h = 1e-6 * (1.0 + lambda.norm());
        let value = h2_quadrature(lambda);
        let deriv = (h2_quadrature(lambda + h) - h2_quadrature(lambda - h)) / (2.0 * h);
        (value, deriv)
    }
}

/// Power-series evaluation of (H₁, H₁′).
pub fn h1_series(lambda: Complex64) -> (Complex64, Complex64) {
    let lam2 = lambda * lambda;
    let sqrt_pi_half = (std::f64::consts::PI / 2.0).sqrt();

    // even sum A = Σ λ^{2m}/(2m)!! and its derivative
    let mut a_term = Complex64::new(1.0, 0.0);
    let mut a_sum = a_term;
    // dA: terms 2m λ^{2m−1}/(2m)!!, first nonzero at m = 1
    let mut da_term = lambda;
    let mut da_sum = da_term;
    // odd sum B = Σ λ^{2m} 2^m m!/(2m+1)! and its derivative
    let mut b_term = Complex64::new(1.0, 0.0);
    let mut b_sum = b_term;
    let mut db_term = 2.0 * lambda / 3.0;
    let mut db_sum = db_term;

    for m in 1..SERIES_MAX_TERMS {
        let mf = m as f64;
        a_term *= lam2 / (2.0 * mf);
        a_sum += a_term;
        if m >= 2 {
            da_term *= lam2 / (2.0 * (mf - 1.0));
            da_sum += da_term;
            db_term *= lam2 * (mf / (mf - 1.0)) / (2.0 * mf + 1.0);
            db_sum += db_term;
        }
        b_term *= lam2 / (2.0 * mf + 1.0);
        b_sum += b_term;

        let small = |t: Complex64, s: Complex64| t.norm() < SERIES_EPS * (s.norm() + 1e-300);
        if m >= 2
            && small(a_term, a_sum)
            && small(b_term, b_sum)
            && small(da_term, da_sum)
            && small(db_term, db_sum)
        {
            break;
        }
    }
    let value = sqrt_pi_half * a_sum - lambda * b_sum;
    let deriv = sqrt_pi_half * da_sum - b_sum - lambda * db_sum;
    (value, deriv)
}

/// Power-series evaluation of (H₂, H₂′) with compensated summation.
pub fn h2_series(lambda: Complex64) -> (Complex64, Complex64) {
    let c = constants();
    let minus_lam3 = -(lambda * lambda * lambda);
    // residue-class seeds: t_0 = Λ₂, t_1 = −λ 3^{−1/3}Γ(2/3), t_2 = λ²/2
    let mut t = [
        Complex64::new(c.lambda2, 0.0),
        -lambda * c.h2_c1,
        lambda * lambda * 0.5,
    ];
    // derivative terms u_n = d t_n / dλ
    let mut u = [
        Complex64::new(0.0, 0.0),
        Complex64::new(-c.h2_c1, 0.0),
        lambda,
    ];
    let mut value = KahanComplex::default();
    let mut deriv = KahanComplex::default();
    for k in 0..3 {
        value.add(t[k]);
        deriv.add(u[k]);
    }
    let mut n = 0usize;
    while n < SERIES_MAX_TERMS {
        let mut all_small = true;
        for k in 0..3 {
            let nn = (n + k) as f64;
            let denom = (nn + 2.0) * (nn + 3.0);
            // u_{n+3} = (u_n·(−λ³) − 3λ² t_n)/((n+2)(n+3)) before t is updated
            u[k] = (u[k] * minus_lam3 - 3.0 * lambda * lambda * t[k]) / denom;
            t[k] = t[k] * minus_lam3 / denom;
            value.add(t[k]);
            deriv.add(u[k]);
            if t[k].norm() >= SERIES_EPS * (value.sum().norm() + 1e-300)
                || u[k].norm() >= SERIES_EPS * (deriv.sum().norm() + 1e-300)
            {
                all_small = false;
            }
        }
        n += 3;
        if all_small && n >= 9 {
            break;
        }
    }
    (value.sum(), deriv.sum())
}

/// Kahan-compensated accumulator over the real and imaginary parts.
#[derive(Default)]
struct KahanComplex {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl KahanComplex {
    #[inline]
    fn add(&mut self, z: Complex64) {
        let y = z.re - self.c_re;
        let t = self.sum_re + y;
        self.c_re = (t - self.sum_re) - y;
        self.sum_re = t;
        let y = z.im - self.c_im;
        let t = self.sum_im + y;
        self.c_im = (t - self.sum_im) - y;
        self.sum_im = t;
    }

    #[inline]
    fn sum(&self) -> Complex64 {
        Complex64::new(self.sum_re, self.sum_im)
    }
}

struct H2Constants {
    lambda2: f64,
    /// 3^{−1/3} Γ(2/3), the n = 1 series coefficient.
    h2_c1: f64,
}

fn constants() -> &'static H2Constants {
    use std::sync::OnceLock;
    static CONSTS: OnceLock<H2Constants> = OnceLock::new();
    CONSTS.get_or_init(|| H2Constants {
        lambda2: crate::model::normalization_lambda(2),
        h2_c1: 3.0f64.powf(-1.0 / 3.0) * special::gamma(2.0 / 3.0),
    })
}

/// Adaptive-quadrature evaluation of H₁ along the real axis.
pub fn h1_quadrature(lambda: Complex64) -> Complex64 {
    h_quadrature(1, lambda)
}

/// Adaptive-quadrature evaluation of H₂ along the real axis.
pub fn h2_quadrature(lambda: Complex64) -> Complex64 {
    h_quadrature(2, lambda)
}

fn h_quadrature(gamma: u32, lambda: Complex64) -> Complex64 {
    let g1 = (gamma + 1) as f64;
    let exponent = move |y: f64| -y.powi(g1 as i32) / g1 - lambda * y;
    let f = move |y: f64| exponent(y).exp();

    let a = lambda.re;
    let y_up = upper_limit(gamma, a);
    // peak magnitude of the integrand, for scaling the absolute tolerance
    let peak = if a >= 0.0 {
        1.0
    } else {
        let y_star = (-a).powf(1.0 / gamma as f64);
        (y_star.powi(g1 as i32) / g1 + a * y_star).abs().exp()
    };
    let tol = 1e-14 * peak.max(1.0);
    // enough initial panels to resolve the e^{−i Im(λ) y} oscillation
    let n_panels = (8.0_f64).max((lambda.im.abs() * y_up / std::f64::consts::PI).ceil()) as usize;
    let mut total = Complex64::new(0.0, 0.0);
    let panel = y_up / n_panels as f64;
    for k in 0..n_panels {
        let lo = k as f64 * panel;
        total += adaptive_simpson(&f, lo, lo + panel, tol / n_panels as f64, 28);
    }
    total
}

/// Smallest y beyond which the integrand magnitude is below e^{−45}.
fn upper_limit(gamma: u32, re: f64) -> f64 {
    let g1 = (gamma + 1) as f64;
    let g = |y: f64| y.powi(g1 as i32) / g1 + re * y;
    // start past the magnitude peak, then double and bisect on g = 45
    let mut lo = if re < 0.0 { (-re).powf(1.0 / gamma as f64) } else { 0.0 };
    let mut hi = (lo + 1.0) * 2.0;
    while g(hi) < 45.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 45.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    fn simpson(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
    ) -> (Complex64, f64, Complex64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
        whole: Complex64,
        m: f64,
        fm: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let err = left + right - whole;
        if depth == 0 || err.norm() <= 15.0 * tol {
            left + right + err / 15.0
        } else {
            rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA1: f64 = 1.253_314_137_315_500_3; // √(π/2)

    #[test]
    fn h1_at_zero_is_gaussian_integral() {
        let v = h1(Complex64::new(0.0, 0.0));
        assert!((v.re - LAMBDA1).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn h1_derivative_at_zero_is_minus_one() {
        // central differences at h = 1e-5 against the analytic series value
        let h = 1e-5;
        let num = (h1(Complex64::new(h, 0.0)) - h1(Complex64::new(-h, 0.0))) / (2.0 * h);
        assert!((num.re + 1.0).abs() < 1e-9, "numeric H1'(0) = {num}");
        let (_, d) = h1_with_deriv(Complex64::new(0.0, 0.0));
        assert!((d.re + 1.0).abs() < 1e-14);
        assert_eq!(d.im, 0.0);
    }

    #[test]
    fn h1_frozen_reference_values() {
        // from an independent high-precision evaluation of the integral
        let v = h1(Complex64::new(1.0, 0.0));
        assert!((v.re - 0.655_679_542_418_798_5).abs() < 1e-13);
        let v = h1(Complex64::new(0.5, 2.0));
        let expected = Complex64::new(0.258_942_892_967_501_66, -0.484_981_727_045_219_67);
        assert!((v - expected).norm() < 1e-12, "got {v}");
        let v = h1(Complex64::new(4.0, 0.0));
        assert!((v.re - 0.236_652_382_913_560_67).abs() < 1e-12);
    }

    #[test]
    fn h1_erfc_identity_at_one() {
        // H₁(λ) = √(π/2) e^{λ²/2} erfc(λ/√2) at λ = 1, erfc by an
        // independent continued-fraction routine (Lentz)
        fn erfc_cf(x: f64) -> f64 {
            // erfc(x) = e^{−x²}/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
            let mut f = x;
            for k in (1..=120).rev() {
                f = x + (k as f64 / 2.0) / f;
            }
            (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
        }
        let lhs = h1(Complex64::new(1.0, 0.0)).re;
        let rhs = LAMBDA1 * (0.5f64).exp() * erfc_cf(1.0 / 2.0f64.sqrt());
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn h2_at_zero_is_lambda2() {
        let v = h2(Complex64::new(0.0, 0.0));
        assert!((v.re - 1.287_899_316_854_069).abs() < 1e-13);
    }

    #[test]
    fn h2_derivative_at_zero_is_minus_first_coefficient() {
        let (_, d) = h2_with_deriv(Complex64::new(0.0, 0.0));
        assert!((d.re + 0.938_892_940_101_744_6).abs() < 1e-13, "{d}");
    }

    #[test]
    fn h2_frozen_reference_values() {
        let v = h2(Complex64::new(1.0, 1.0));
        let expected = Complex64::new(0.556_081_473_528_028_49, -0.311_581_049_869_698_55);
        assert!((v - expected).norm() < 1e-12, "got {v}");
        let v = h2(Complex64::new(-1.0, 2.5));
        let expected = Complex64::new(-0.748_613_263_440_353_45, -0.723_994_426_517_112_08);
        assert!((v - expected).norm() < 1e-11, "got {v}");
        let v = h2(Complex64::new(0.0, 2.5));
        let expected = Complex64::new(-0.006_135_794_732_853_059, -0.596_902_119_589_586_57);
        assert!((v - expected).norm() < 1e-11, "got {v}");
    }

    #[test]
    fn branch_agreement_on_annulus() {
        // series and quadrature agree to 1e-10 relative on
        // 0.8·R ≤ |λ| ≤ 1.2·R
        for &(r_switch, is_h1) in &[(R_SWITCH_H1, true), (R_SWITCH_H2, false)] {
            for &scale in &[0.8, 1.0, 1.2] {
                let r = r_switch * scale;
                for k in 0..12 {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / 12.0;
                    let lam = Complex64::from_polar(r, th);
                    let (s, q) = if is_h1 {
                        (h1_series(lam).0, h1_quadrature(lam))
                    } else {
                        (h2_series(lam).0, h2_quadrature(lam))
                    };
                    let rel = (s - q).norm() / q.norm().max(1e-300);
                    assert!(
                        rel < 1e-10,
                        "H{} at r={r} th={th}: series {s} quad {q} rel {rel}",
                        if is_h1 { 1 } else { 2 }
                    );
                }
            }
        }
    }

    #[test]
    fn conjugate_symmetry_bit_exact() {
        for &(re, im) in &[(0.3, 1.7), (-1.2, 0.4), (2.0, 2.0), (5.0, 3.0), (-0.5, 4.5)] {
            let lam = Complex64::new(re, im);
            let a = h1(lam);
            let b = h1(lam.conj());
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), (-b.im).to_bits());
            let a = h2(lam);
            let b = h2(lam.conj());
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), (-b.im).to_bits());
        }
    }

    #[test]
    fn integration_by_parts_identities() {
        // ∫ y e^{−y²/2−λy} = 1 − λH₁(λ) and ∫ y² e^{−y³/3−λy} = 1 − λH₂(λ)
        let moment = |gamma: u32, lam: Complex64| {
            let g1 = (gamma + 1) as f64;
            let f = move |y: f64| {
                Complex64::new(y.powi(gamma as i32), 0.0)
                    * (Complex64::new(-y.powi(g1 as i32) / g1, 0.0) - lam * y).exp()
            };
            let y_up = upper_limit(gamma, lam.re) + 2.0;
            let n = (16.0_f64).max(lam.im.abs() * y_up).ceil() as usize;
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let lo = y_up * k as f64 / n as f64;
                let hi = y_up * (k + 1) as f64 / n as f64;
                s += adaptive_simpson(&f, lo, hi, 1e-14, 24);
            }
            s
        };
        let samples = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.171),
            Complex64::new(-0.5, 1.0),
            Complex64::new(0.7, -0.9),
            Complex64::new(1.5, 1.5),
            Complex64::new(-1.0, 0.3),
            Complex64::new(2.0, 0.5),
            Complex64::new(0.2, 2.2),
            Complex64::new(-0.3, -1.8),
        ];
        for &lam in &samples {
            let lhs1 = moment(1, lam);
            let rhs1 = Complex64::new(1.0, 0.0) - lam * h1(lam);
            assert!((lhs1 - rhs1).norm() < 1e-9, "H1 IBP at {lam}: {lhs1} vs {rhs1}");
            let lhs2 = moment(2, lam);
            let rhs2 = Complex64::new(1.0, 0.0) - lam * h2(lam);
            assert!((lhs2 - rhs2).norm() < 1e-9, "H2 IBP at {lam}: {lhs2} vs {rhs2}");
        }
    }
}
