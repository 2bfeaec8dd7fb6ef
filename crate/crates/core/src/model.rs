//! Domain types and the hazard/survival laws shared by all engines.
//!
//! A particle is a pair (σ, y): a spin σ ∈ {−1, +1} and an age y, the time
//! elapsed since its last flip. A particle of age y flips with hazard rate
//!
//! ```text
//! λ(σ, y, m) = y^γ · exp(−(γ+1) β σ m)
//! ```
//!
//! where m is the empirical magnetization. Interarrival times at m = 0 have
//! survival function φ(t) = exp(−t^(γ+1)/(γ+1)).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special;

/// Errors from parameter validation and waiting-time inversion.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("rate scale must be positive, got c = {c}")]
    RateScaleNotPositive { c: f64 },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

/// Spin value, ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    /// σ = +1
    Up,
    /// σ = −1
    Down,
}

impl Spin {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    #[inline]
    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    #[inline]
    pub fn is_up(self) -> bool {
        matches!(self, Spin::Up)
    }
}

/// Parameters governing all three engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Tail exponent γ ∈ ℕ of the hazard F(y) = y^γ. γ = 0 is the
    /// Curie–Weiss (memoryless) consistency mode.
    pub gamma: u32,
    /// Inverse temperature β ≥ 0 tuning the interaction.
    pub beta: f64,
    /// Number of particles N ≥ 1.
    pub n_particles: usize,
    /// Time horizon T > 0.
    pub t_final: f64,
    /// Master seed for all randomness in a run.
    pub seed: u64,
}

impl ModelParams {
    pub fn new(gamma: u32, beta: f64, n_particles: usize, t_final: f64, seed: u64) -> Self {
        Self { gamma, beta, n_particles, t_final, seed }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "beta must be a finite nonnegative real, got {}",
                self.beta
            )));
        }
        if self.n_particles == 0 {
            return Err(ModelError::InvalidParams("n_particles must be >= 1".into()));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "t_final must be a finite positive real, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

/// One particle: spin and age. The age is the time since the last flip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub sigma: Spin,
    pub y: f64,
}

/// The simulator's mutable core: N particles, the clock, and the
/// magnetization maintained exactly through an integer up-spin count.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    particles: Vec<ParticleState>,
    t: f64,
    m: f64,
    flip_count: u64,
    n_up: usize,
    age_sum: f64,
}

impl SystemState {
    /// Build a state at time `t0`. Ages must not exceed `t0`.
    pub fn new(particles: Vec<ParticleState>, t0: f64) -> Self {
        let n_up = particles.iter().filter(|p| p.sigma.is_up()).count();
        let age_sum = particles.iter().map(|p| p.y).sum();
        let n = particles.len();
        let mut s = Self { particles, t: t0, m: 0.0, flip_count: 0, n_up, age_sum };
        s.m = Self::magnetization_from_count(s.n_up, n);
        s
    }

    #[inline]
    fn magnetization_from_count(n_up: usize, n: usize) -> f64 {
        (2.0 * n_up as f64 - n as f64) / n as f64
    }

    #[inline]
    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Magnetization m = (1/N) Σ σ_i; N·m is always an integer.
    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn flip_count(&self) -> u64 {
        self.flip_count
    }

    #[inline]
    pub fn particles(&self) -> &[ParticleState] {
        &self.particles
    }

    /// Mean of the ages y_i at the current time.
    #[inline]
    pub fn mean_age(&self) -> f64 {
        self.age_sum / self.particles.len() as f64
    }

    /// Advance the clock; every age grows with unit slope.
    pub fn advance_to(&mut self, t_new: f64) {
        debug_assert!(t_new >= self.t);
        let dt = t_new - self.t;
        if dt > 0.0 {
            for p in &mut self.particles {
                p.y += dt;
            }
            self.age_sum += dt * self.particles.len() as f64;
            self.t = t_new;
        }
    }

    /// Flip particle `index` at the current time: σ ↦ −σ, y ↦ 0.
    pub fn flip(&mut self, index: usize) {
        let n = self.particles.len();
        let p = &mut self.particles[index];
        self.age_sum -= p.y;
        p.y = 0.0;
        match p.sigma {
            Spin::Up => self.n_up -= 1,
            Spin::Down => self.n_up += 1,
        }
        p.sigma = p.sigma.flipped();
        self.m = Self::magnetization_from_count(self.n_up, n);
        self.flip_count += 1;
    }
}

/// y^γ by repeated multiplication for small γ, generic integer power beyond.
#[inline]
pub fn age_power(y: f64, gamma: u32) -> f64 {
    match gamma {
        0 => 1.0,
        1 => y,
        2 => y * y,
        3 => y * y * y,
        g if g <= 8 => {
            let mut acc = 1.0;
            for _ in 0..g {
                acc *= y;
            }
            acc
        }
        g => y.powi(g as i32),
    }
}

/// Flip rate λ(σ, y, m) = y^γ exp(−(γ+1) β σ m).
#[inline]
pub fn hazard_rate(sigma: Spin, y: f64, m: f64, params: &ModelParams) -> f64 {
    age_power(y, params.gamma) * rate_scale(sigma, m, params)
}

/// The m-dependent factor exp(−(γ+1) β σ m) of the flip rate.
#[inline]
pub fn rate_scale(sigma: Spin, m: f64, params: &ModelParams) -> f64 {
    (-((params.gamma + 1) as f64) * params.beta * sigma.value() * m).exp()
}

/// Interarrival survival φ(t) = exp(−t^(γ+1)/(γ+1)).
#[inline]
pub fn survival(gamma: u32, t: f64) -> f64 {
    (-age_power(t, gamma + 1) / (gamma + 1) as f64).exp()
}

/// Invert the integrated hazard: the smallest τ > 0 with
/// c·[(y0+τ)^(γ+1) − y0^(γ+1)]/(γ+1) = e_mark, for a unit-exponential mark.
///
/// Closed forms via sqrt/cbrt for γ ∈ {1, 2}; the generic branch uses a
/// log1p/expm1 arrangement so τ stays accurate when y0^(γ+1) dwarfs the mark.
pub fn sample_flip_time(gamma: u32, y0: f64, c: f64, e_mark: f64) -> Result<f64, ModelError> {
    if !(c > 0.0) {
        return Err(ModelError::RateScaleNotPositive { c });
    }
    debug_assert!(y0 >= 0.0 && e_mark > 0.0);
    let budget = (gamma + 1) as f64 * e_mark / c;
    let tau = match gamma {
        0 => budget,
        // τ = sqrt(y0² + 2e/c) − y0, written without cancellation
        1 => budget / ((y0 * y0 + budget).sqrt() + y0),
        // τ = cbrt(y0³ + 3e/c) − y0, via a³ − b³ = (a − b)(a² + ab + b²)
        2 => {
            let a = (y0 * y0 * y0 + budget).cbrt();
            budget / (a * a + a * y0 + y0 * y0)
        }
        g => {
            if y0 == 0.0 {
                budget.powf(1.0 / (g + 1) as f64)
            } else {
                // y0·((1 + w)^{1/(γ+1)} − 1) with w = budget / y0^(γ+1)
                let w = budget / age_power(y0, g + 1);
                y0 * (w.ln_1p() / (g + 1) as f64).exp_m1()
            }
        }
    };
    Ok(tau)
}

/// Λ(γ) = ∫₀^∞ exp(−y^(γ+1)/(γ+1)) dy = (γ+1)^(1/(γ+1)−1) Γ(1/(γ+1)).
pub fn normalization_lambda(gamma: u32) -> f64 {
    let p = (gamma + 1) as f64;
    p.powf(1.0 / p - 1.0) * special::gamma(1.0 / p)
}
