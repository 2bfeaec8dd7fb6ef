//! Exact event-driven simulation of the N-particle spin-renewal dynamics.
//!
//! Between flips every age grows with unit slope, so each particle's next
//! candidate flip time has a closed-form inverse (see
//! [`sample_flip_time`]). The engine races all N candidate clocks: the
//! minimum wins, the spin flips, its age resets, and — because the
//! magnetization changed — all candidates are redrawn from fresh
//! exponential marks. By the strong Markov property of (σ, y, m) this
//! redraw is distributionally exact. O(N) work per event.
//!
//! Each particle draws only from its own [`RngStreams`] stream, which makes
//! runs bit-reproducible and particle outputs exchangeable.

pub mod coupling;

use serde::{Deserialize, Serialize};

use crate::model::{
    age_power, rate_scale, sample_flip_time, ModelParams, ParticleState, Spin, SystemState,
};
use crate::rng::RngStreams;

/// Sampled observables of one run, on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub magnetization: Vec<f64>,
    pub mean_age: Vec<f64>,
    pub flip_count: u64,
}

/// How the N particles start. The dynamics leaves the initial ages
/// unspecified; age 0 (as if every particle had just flipped) is the
/// default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// σ_i(0) = +1, y_i(0) = 0 for all i.
    AllPlus,
    /// i.i.d. fair spins, ages 0.
    FairSpins,
    /// i.i.d. fair spins, ages drawn from the stationary age density
    /// φ(y)/Λ.
    FairSpinsStationaryAges,
}

/// Build the initial system state, consuming only the dedicated
/// initial-condition stream.
pub fn build_initial(
    cond: InitialCondition,
    params: &ModelParams,
    rng: &mut RngStreams,
) -> SystemState {
    use rand::Rng;
    let n = params.n_particles;
    let particles: Vec<ParticleState> = match cond {
        InitialCondition::AllPlus => vec![ParticleState { sigma: Spin::Up, y: 0.0 }; n],
        InitialCondition::FairSpins => {
            let r = rng.init_stream();
            (0..n)
                .map(|_| ParticleState {
                    sigma: if r.gen::<bool>() { Spin::Up } else { Spin::Down },
                    y: 0.0,
                })
                .collect()
        }
        InitialCondition::FairSpinsStationaryAges => {
            let table = StationaryAgeTable::new(params.gamma);
            let r = rng.init_stream();
            (0..n)
                .map(|_| {
                    let sigma = if r.gen::<bool>() { Spin::Up } else { Spin::Down };
                    let y = table.sample(r.gen::<f64>());
                    ParticleState { sigma, y }
                })
                .collect()
        }
    };
    // stationary ages can exceed t=0; the state clock starts at the largest
    // age so that the age-law invariant y_i <= t holds
    let t0 = match cond {
        InitialCondition::FairSpinsStationaryAges => particles
            .iter()
            .map(|p| p.y)
            .fold(0.0, f64::max),
        _ => 0.0,
    };
    SystemState::new(particles, t0)
}

/// Inverse-CDF table for the stationary age density φ(y)/Λ.
struct StationaryAgeTable {
    ys: Vec<f64>,
    cdf: Vec<f64>,
}

impl StationaryAgeTable {
    fn new(gamma: u32) -> Self {
        // truncate where φ < 1e-14
        let y_cap = ((gamma + 1) as f64 * 32.25).powf(1.0 / (gamma + 1) as f64);
        let n = 4096;
        let dy = y_cap / n as f64;
        let mut ys = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let phi = |y: f64| crate::model::survival(gamma, y);
        ys.push(0.0);
        cdf.push(0.0);
        for k in 0..n {
            let a = k as f64 * dy;
            let b = a + dy;
            acc += dy / 6.0 * (phi(a) + 4.0 * phi(0.5 * (a + b)) + phi(b));
            ys.push(b);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        Self { ys, cdf }
    }

    fn sample(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c < u);
        if idx == 0 {
            return 0.0;
        }
        if idx >= self.cdf.len() {
            return *self.ys.last().unwrap();
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (y0, y1) = (self.ys[idx - 1], self.ys[idx]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        y0 + w * (y1 - y0)
    }
}

/// Candidate flip times for every particle from hand-set exponential marks.
/// Pure; used by [`next_event`] and directly by tests.
pub fn candidate_flip_times(state: &SystemState, params: &ModelParams, marks: &[f64]) -> Vec<f64> {
    assert_eq!(marks.len(), state.n_particles());
    let c_up = rate_scale(Spin::Up, state.m(), params);
    let c_down = rate_scale(Spin::Down, state.m(), params);
    state
        .particles()
        .iter()
        .zip(marks)
        .map(|(p, &e)| {
            let c = if p.sigma.is_up() { c_up } else { c_down };
            if c <= 0.0 {
                f64::INFINITY
            } else {
                sample_flip_time(params.gamma, p.y, c, e).expect("positive rate scale")
            }
        })
        .collect()
}

/// Race the N candidate clocks: draw one exponential mark per particle,
/// invert the integrated hazard, and return the winning particle and its
/// absolute event time. Ties resolve to the lowest index. Returns `None`
/// when the earliest candidate falls beyond the horizon.
pub fn next_event(
    state: &SystemState,
    params: &ModelParams,
    rng: &mut RngStreams,
) -> Option<(usize, f64)> {
    let c_up = rate_scale(Spin::Up, state.m(), params);
    let c_down = rate_scale(Spin::Down, state.m(), params);
    let mut best_tau = f64::INFINITY;
    let mut best_idx = usize::MAX;
    for (i, p) in state.particles().iter().enumerate() {
        let e = rng.unit_exponential(i);
        let c = if p.sigma.is_up() { c_up } else { c_down };
        if c <= 0.0 {
            continue;
        }
        let tau = sample_flip_time(params.gamma, p.y, c, e).expect("positive rate scale");
        if tau < best_tau {
            best_tau = tau;
            best_idx = i;
        }
    }
    let t_event = state.t() + best_tau;
    if best_idx == usize::MAX || t_event > params.t_final {
        None
    } else {
        Some((best_idx, t_event))
    }
}

/// Flip particle `index`: σ ↦ −σ, y ↦ 0, m and flip count updated.
#[inline]
pub fn apply_flip(state: &mut SystemState, index: usize) {
    state.flip(index);
}

/// Run the event loop to the horizon, recording m and the mean age on a
/// uniform grid. Deterministic given (params.seed, initial).
pub fn simulate(params: &ModelParams, initial: SystemState, sample_dt: f64) -> Trajectory {
    assert!(sample_dt > 0.0, "sample_dt must be positive");
    let mut rng = RngStreams::new(params.seed, params.n_particles);
    simulate_with_streams(params, initial, sample_dt, &mut rng)
}

/// As [`simulate`], but drawing from caller-supplied streams (used by the
/// exchangeability tests and by callers that build initial conditions from
/// the same stream family).
pub fn simulate_with_streams(
    params: &ModelParams,
    initial: SystemState,
    sample_dt: f64,
    rng: &mut RngStreams,
) -> Trajectory {
    let mut state = initial;
    let t0 = state.t();
    let n_samples = ((params.t_final - t0) / sample_dt + 1e-9).floor() as usize;
    let mut traj = Trajectory {
        sample_times: Vec::with_capacity(n_samples + 1),
        magnetization: Vec::with_capacity(n_samples + 1),
        mean_age: Vec::with_capacity(n_samples + 1),
        flip_count: 0,
    };
    let mut next_sample = 0usize;
    let mut record_until = |state: &SystemState, t_limit: f64, traj: &mut Trajectory| {
        while next_sample <= n_samples {
            let ts = (t0 + next_sample as f64 * sample_dt).min(params.t_final);
            if ts > t_limit {
                break;
            }
            traj.sample_times.push(ts);
            traj.magnetization.push(state.m());
            traj.mean_age.push(state.mean_age() + (ts - state.t()));
            next_sample += 1;
        }
    };
    loop {
        match next_event(&state, params, rng) {
            Some((idx, t_event)) => {
                // sample points strictly before the event keep the pre-flip m
                record_until(&state, t_event - f64::EPSILON * t_event.abs(), &mut traj);
                state.advance_to(t_event);
                apply_flip(&mut state, idx);
            }
            None => {
                record_until(&state, params.t_final, &mut traj);
                break;
            }
        }
    }
    traj.flip_count = state.flip_count();
    traj
}

/// Interarrival times (the age at the moment of each flip) from one run,
/// up to `max_flips` of them or the horizon, whichever comes first.
pub fn collect_interarrivals(params: &ModelParams, max_flips: usize) -> Vec<f64> {
    let mut rng = RngStreams::new(params.seed, params.n_particles);
    let mut state = build_initial(InitialCondition::FairSpins, params, &mut rng);
    let mut out = Vec::with_capacity(max_flips);
    while out.len() < max_flips {
        match next_event(&state, params, &mut rng) {
            Some((idx, t_event)) => {
                state.advance_to(t_event);
                out.push(state.particles()[idx].y);
                apply_flip(&mut state, idx);
            }
            None => break,
        }
    }
    out
}

/// Ages of all particles snapshot at times burn_in, burn_in + stride, ...
/// within the horizon.
pub fn stationary_ages(params: &ModelParams, burn_in: f64, snapshot_stride: f64) -> Vec<f64> {
    assert!(snapshot_stride > 0.0);
    let mut rng = RngStreams::new(params.seed, params.n_particles);
    let mut state = build_initial(InitialCondition::FairSpins, params, &mut rng);
    let mut out = Vec::new();
    let mut next_snap = burn_in;
    loop {
        let ev = next_event(&state, params, &mut rng);
        let t_limit = ev.map_or(params.t_final, |(_, t)| t);
        while next_snap <= t_limit && next_snap <= params.t_final {
            let lag = next_snap - state.t();
            out.extend(state.particles().iter().map(|p| p.y + lag));
            next_snap += snapshot_stride;
        }
        match ev {
            Some((idx, t_event)) => {
                state.advance_to(t_event);
                apply_flip(&mut state, idx);
            }
            None => break,
        }
    }
    out
}

/// Binned age density with the raw (sorted) samples it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgeHistogram {
    /// n_bins + 1 edges, uniformly spaced on [0, max age].
    pub edges: Vec<f64>,
    /// Normalized so that Σ density·width = 1.
    pub density: Vec<f64>,
    /// All sampled ages, sorted ascending.
    pub samples: Vec<f64>,
}

/// Histogram of particle ages sampled after burn-in (snapshots every 5 time
/// units), comparable against the stationary density φ(y)/Λ.
pub fn stationary_age_histogram(params: &ModelParams, burn_in: f64, n_bins: usize) -> AgeHistogram {
    assert!(n_bins > 0);
    let mut samples = stationary_ages(params, burn_in, 5.0);
    samples.sort_by(f64::total_cmp);
    let max = samples.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let width = max / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &y in &samples {
        let k = ((y / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let norm = samples.len() as f64 * width;
    AgeHistogram {
        edges: (0..=n_bins).map(|k| k as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        samples,
    }
}
