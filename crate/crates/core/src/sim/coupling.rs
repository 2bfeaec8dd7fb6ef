//! Common-randomness coupling of the interacting system with N independent
//! mean-field copies, for empirical propagation-of-chaos measurements.
//!
//! Both systems are driven by the same per-particle noise, realized by
//! thinning against a shared dominating Poisson stream: within a lookahead
//! window of width W starting when particle i's window is refreshed, the
//! rate bound
//!
//! ```text
//! Λ_i = (max(y_i, ỹ_i) + W)^γ · exp((γ+1)β)
//! ```
//!
//! dominates both systems' flip rates (ages grow by at most W before the
//! next refresh, and |m| ≤ 1 bounds the exponential factor). At each
//! dominating event both systems consult the same uniform mark, so equal
//! states make identical accept/reject decisions. The mean-field copies
//! read their magnetization from a caller-supplied path instead of the
//! empirical average.
//!
//! The per-particle distance |σ_i − σ̃_i| + |y_i − ỹ_i| is piecewise
//! constant between particle-i decisions (both ages grow with unit slope),
//! so its running supremum only needs updating at those decisions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{age_power, ModelParams, Spin, SystemState};
use crate::rng::RngStreams;
use crate::sim::{build_initial, InitialCondition};

/// Lookahead window width for the dominating-rate refresh.
const LOOKAHEAD: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum CouplingError {
    #[error("mean-field path ends at t = {path_end} but the horizon is {t_final}")]
    PathTooShort { path_end: f64, t_final: f64 },
}

/// How path samples are read between knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathInterp {
    /// Piecewise-constant, left-continuous: eval(t) is the value at the last
    /// knot strictly before t. Event records from a simulation use this so
    /// that evaluation at an event time yields the pre-event value.
    Step,
    /// Piecewise-linear between knots (PDE output).
    Linear,
}

/// A time-indexed magnetization m(t) on [0, t_end].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationPath {
    times: Vec<f64>,
    values: Vec<f64>,
    interp: PathInterp,
}

impl MagnetizationPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, interp: PathInterp) -> Self {
        assert_eq!(times.len(), values.len());
        assert!(!times.is_empty());
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        Self { times, values, interp }
    }

    pub fn constant(value: f64) -> Self {
        Self { times: vec![0.0], values: vec![value], interp: PathInterp::Step }
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Whether the path is defined on all of [0, t_final]. Constant paths
    /// (a single knot at 0 with step interpolation) cover any horizon.
    pub fn covers(&self, t_final: f64) -> bool {
        self.times[0] <= 0.0
            && (self.t_end() >= t_final || (self.interp == PathInterp::Step))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.interp {
            PathInterp::Step => {
                // last knot strictly before t (left limit)
                let idx = self.times.partition_point(|&u| u < t);
                if idx == 0 {
                    self.values[0]
                } else {
                    self.values[idx - 1]
                }
            }
            PathInterp::Linear => {
                if t <= self.times[0] {
                    return self.values[0];
                }
                if t >= self.t_end() {
                    return *self.values.last().unwrap();
                }
                let idx = self.times.partition_point(|&u| u <= t);
                let (t0, t1) = (self.times[idx - 1], self.times[idx]);
                let (v0, v1) = (self.values[idx - 1], self.values[idx]);
                if t1 > t0 {
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                } else {
                    v0
                }
            }
        }
    }
}

/// The coupling experiment's summary: D(N) and its per-particle terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub n: usize,
    /// D(N) = (1/N) Σ_i sup_t (|σ_i − σ̃_i| + |y_i − ỹ_i|).
    pub distance: f64,
    pub per_particle_sup: Vec<f64>,
}

/// Output of a coupled run: the stats plus the interacting system's
/// magnetization record (step path over flip times), which can be fed back
/// as the mean-field drive.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub stats: CouplingStats,
    pub interacting_m: MagnetizationPath,
    pub interacting_flips: u64,
    pub mean_field_flips: u64,
}

struct Clock {
    /// Next dominating event time for this particle.
    t_next: f64,
    /// End of the current lookahead window.
    window_end: f64,
    /// Dominating rate valid on (position, window_end].
    rate: f64,
}

#[derive(PartialEq)]
struct HeapEntry {
    t: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap over (t, idx): reverse the natural order
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Run the interacting system and its N coupled mean-field copies to the
/// horizon, both started from `initial` (the copies share the interacting
/// system's initial states, a chaotic i.i.d. draw).
pub fn simulate_coupled(
    params: &ModelParams,
    initial: InitialCondition,
    mean_field_m: &MagnetizationPath,
) -> Result<CoupledRun, CouplingError> {
    if !mean_field_m.covers(params.t_final) {
        return Err(CouplingError::PathTooShort {
            path_end: mean_field_m.t_end(),
            t_final: params.t_final,
        });
    }
    let n = params.n_particles;
    let mut rng = RngStreams::new(params.seed, n);
    let state0 = build_initial(initial, params, &mut rng);
    let t0 = state0.t();

    // interacting system
    let mut int_state = state0.clone();
    // mean-field copies: spins and last-flip times (ages derived)
    let mut mf_sigma: Vec<Spin> = state0.particles().iter().map(|p| p.sigma).collect();
    let mut mf_last_flip: Vec<f64> = state0.particles().iter().map(|p| t0 - p.y).collect();
    let mut int_last_flip: Vec<f64> = mf_last_flip.clone();

    let gamma = params.gamma;
    let g1 = (gamma + 1) as f64;
    let rate_cap = (g1 * params.beta).exp();

    let mut sup = vec![0.0f64; n];
    let mut clocks: Vec<Clock> = (0..n)
        .map(|_| Clock { t_next: t0, window_end: t0, rate: 0.0 })
        .collect();
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(n);

    let refresh_and_schedule = |i: usize,
                                from: f64,
                                clocks: &mut Vec<Clock>,
                                rng: &mut RngStreams,
                                int_last_flip: &[f64],
                                mf_last_flip: &[f64]|
     -> f64 {
        let c = &mut clocks[i];
        let mut pos = from;
        loop {
            if pos >= c.window_end {
                // refresh: bound both systems' ages through the next window
                let y_int = pos - int_last_flip[i];
                let y_mf = pos - mf_last_flip[i];
                let y_bound = y_int.max(y_mf) + LOOKAHEAD;
                c.rate = age_power(y_bound, gamma) * rate_cap;
                c.window_end = pos + LOOKAHEAD;
            }
            let gap = rng.unit_exponential(i) / c.rate;
            let cand = pos + gap;
            if cand <= c.window_end {
                c.t_next = cand;
                return cand;
            }
            // discard the residual beyond the window; memorylessness makes
            // the restart at the boundary exact
            pos = c.window_end;
        }
    };

    for i in 0..n {
        let t = refresh_and_schedule(i, t0, &mut clocks, &mut rng, &int_last_flip, &mf_last_flip);
        heap.push(HeapEntry { t, idx: i });
    }

    let mut m_times = vec![t0];
    let mut m_values = vec![int_state.m()];
    let mut mf_flips = 0u64;

    while let Some(HeapEntry { t, idx: i }) = heap.pop() {
        if t > params.t_final {
            break;
        }
        let cap = clocks[i].rate;
        let u = rng.uniform(i);

        // interacting system decision at rate y^γ e^{−(γ+1)βσm^N(t^-)}
        let y_int = t - int_last_flip[i];
        let sigma_int = int_state.particles()[i].sigma;
        let rate_int =
            age_power(y_int, gamma) * (-g1 * params.beta * sigma_int.value() * int_state.m()).exp();
        debug_assert!(rate_int <= cap * (1.0 + 1e-12));

        // mean-field copy decision at rate ỹ^γ e^{−(γ+1)βσ̃m(t)}
        let y_mf = t - mf_last_flip[i];
        let m_drive = mean_field_m.eval(t);
        let rate_mf =
            age_power(y_mf, gamma) * (-g1 * params.beta * mf_sigma[i].value() * m_drive).exp();
        debug_assert!(rate_mf <= cap * (1.0 + 1e-12));

        let mut changed = false;
        if u * cap < rate_int {
            int_state.advance_to(t);
            int_state.flip(i);
            int_last_flip[i] = t;
            m_times.push(t);
            m_values.push(int_state.m());
            changed = true;
        }
        if u * cap < rate_mf {
            mf_sigma[i] = mf_sigma[i].flipped();
            mf_last_flip[i] = t;
            mf_flips += 1;
            changed = true;
        }
        if changed {
            let spin_dist =
                if int_state.particles()[i].sigma == mf_sigma[i] { 0.0 } else { 2.0 };
            let age_dist = ((t - int_last_flip[i]) - (t - mf_last_flip[i])).abs();
            let d = spin_dist + age_dist;
            if d > sup[i] {
                sup[i] = d;
            }
        }

        let t_next =
            refresh_and_schedule(i, t, &mut clocks, &mut rng, &int_last_flip, &mf_last_flip);
        heap.push(HeapEntry { t: t_next, idx: i });
    }

    let distance = sup.iter().sum::<f64>() / n as f64;
    Ok(CoupledRun {
        stats: CouplingStats { n, distance, per_particle_sup: sup },
        interacting_m: MagnetizationPath::new(m_times, m_values, PathInterp::Step),
        interacting_flips: int_state.flip_count(),
        mean_field_flips: mf_flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_path() {
        let params = ModelParams::new(1, 0.5, 4, 10.0, 1);
        let path = MagnetizationPath::new(
            vec![0.0, 5.0],
            vec![0.0, 0.1],
            PathInterp::Linear,
        );
        let err = simulate_coupled(&params, InitialCondition::FairSpins, &path).unwrap_err();
        assert_eq!(err, CouplingError::PathTooShort { path_end: 5.0, t_final: 10.0 });
    }

    #[test]
    fn interaction_off_couples_exactly() {
        // β = 0: rates never depend on m, so the copies coincide and D = 0
        for gamma in [0u32, 1, 2] {
            let params = ModelParams::new(gamma, 0.0, 64, 15.0, 33 + gamma as u64);
            let path = MagnetizationPath::constant(0.37); // value irrelevant at β=0
            let run = simulate_coupled(&params, InitialCondition::FairSpins, &path).unwrap();
            assert_eq!(run.stats.distance, 0.0, "gamma={gamma}");
            assert!(run.stats.per_particle_sup.iter().all(|&d| d == 0.0));
            assert_eq!(run.interacting_flips, run.mean_field_flips);
        }
    }

    #[test]
    fn single_particle_self_drive_is_exact() {
        // feed the recorded m^1(t) back as the drive: D(1) = 0
        let params = ModelParams::new(1, 0.9, 1, 25.0, 4242);
        let first =
            simulate_coupled(&params, InitialCondition::AllPlus, &MagnetizationPath::constant(0.0))
                .unwrap();
        assert!(first.interacting_flips > 0, "horizon too short for the test");
        let second =
            simulate_coupled(&params, InitialCondition::AllPlus, &first.interacting_m).unwrap();
        assert_eq!(second.stats.distance, 0.0);
        // the interacting trajectory itself is reproduced bit-exactly
        assert_eq!(first.interacting_m, second.interacting_m);
    }

    #[test]
    fn step_path_evaluates_left_limit() {
        let p = MagnetizationPath::new(
            vec![0.0, 1.0, 2.0],
            vec![0.5, -0.5, 0.25],
            PathInterp::Step,
        );
        assert_eq!(p.eval(0.0), 0.5);
        assert_eq!(p.eval(1.0), 0.5); // left limit at the jump
        assert_eq!(p.eval(1.0 + 1e-12), -0.5);
        assert_eq!(p.eval(5.0), 0.25);
    }

    #[test]
    fn linear_path_interpolates() {
        let p = MagnetizationPath::new(vec![0.0, 2.0], vec![0.0, 1.0], PathInterp::Linear);
        assert_eq!(p.eval(1.0), 0.5);
        assert_eq!(p.eval(2.0), 1.0);
        assert!(p.covers(2.0));
        assert!(!p.covers(3.0));
    }

    #[test]
    fn distance_positive_when_interacting() {
        // with β > 0 and finite N the empirical m fluctuates around the
        // drive, so some decoupling must occur
        let params = ModelParams::new(1, 0.8, 32, 20.0, 7);
        let run = simulate_coupled(
            &params,
            InitialCondition::FairSpins,
            &MagnetizationPath::constant(0.0),
        )
        .unwrap();
        assert!(run.stats.distance > 0.0);
        let mean = run.stats.per_particle_sup.iter().sum::<f64>() / 32.0;
        assert!((run.stats.distance - mean).abs() < 1e-15);
    }
}
