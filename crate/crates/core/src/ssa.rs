//! Stochastic simulation oracle.
//!
//! Each ultrapeer life starts with no leaves and runs the direct-method
//! Gillespie loop over competing exponential clocks: one per admissible
//! arrival class, one per occupied class, and death at rate theta. The time
//! spent at each leaf degree, summed over independent lives, estimates the
//! finite-life equilibrium without touching the linear-algebra path.
//!
//! Life `i` draws from its own stream seeded with `seed ^ i`. Lives are
//! accumulated in blocks of [`BLOCK`] and blocks are combined in index
//! order, so results do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::equilibrium::Support;
use crate::error::{Error, Result};
use crate::model::{Dynamics, ModelKind, State};
use crate::{Distribution, RateParams};

/// Lives per accumulation block.
pub const BLOCK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub lifetimes: u64,
    pub seed: u64,
    pub max_events_per_life: u64,
}

impl SimConfig {
    pub fn new(lifetimes: u64, seed: u64) -> Self {
        Self {
            lifetimes,
            seed,
            max_events_per_life: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    /// Time-weighted degree distribution.
    pub dist: Distribution,
    /// Standard error of each entry of `dist`.
    pub std_errors: Vec<f64>,
    /// Time-averaged count per connection class, in state-coordinate order.
    pub class_means: Vec<f64>,
    pub total_time: f64,
    pub events: u64,
}

impl SimEstimate {
    pub fn mean_std_error(&self) -> f64 {
        self.std_errors.iter().sum::<f64>() / self.std_errors.len() as f64
    }
}

fn rng_for(seed: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ stream)
}

/// Exponential variate by inverse CDF; `1 - u` lies in `(0, 1]`.
fn exp_sample(rng: &mut Xoshiro256PlusPlus, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Moved(State),
    Died,
}

/// One Gillespie step: holding time at `state` and what happened next.
fn step(
    dynamics: &Dynamics<f64>,
    theta: f64,
    state: State,
    rng: &mut Xoshiro256PlusPlus,
) -> (f64, Step) {
    let moves = dynamics.outgoing(state);
    let total = moves.iter().map(|t| t.rate).sum::<f64>() + theta;
    let dt = exp_sample(rng, total);
    let mut u = rng.random::<f64>() * total;
    for t in &moves {
        if u < t.rate {
            return (dt, Step::Moved(t.target));
        }
        u -= t.rate;
    }
    if theta > 0.0 {
        (dt, Step::Died)
    } else {
        // Rounding left `u` past the last clock.
        (dt, Step::Moved(moves.last().expect("a move exists").target))
    }
}

/// Path of one life as `(entry time, state)` pairs, ending with the state
/// occupied at death. Reproduces exactly what [`simulate`] sees for life
/// `life` under `seed`.
pub fn life_trajectory(
    kind: ModelKind,
    rates: &RateParams,
    seed: u64,
    life: u64,
    max_events: u64,
) -> Result<Vec<(f64, State)>> {
    let (dynamics, theta) = prepare(kind, rates)?;
    let mut rng = rng_for(seed, life);
    let mut state = State::ZERO;
    let mut t = 0.0;
    let mut path = vec![(0.0, state)];
    for _ in 0..max_events {
        let (dt, next) = step(&dynamics, theta, state, &mut rng);
        t += dt;
        match next {
            Step::Died => return Ok(path),
            Step::Moved(s) => {
                state = s;
                path.push((t, state));
            }
        }
    }
    Err(Error::EventCapExceeded {
        life,
        cap: max_events,
    })
}

fn prepare(kind: ModelKind, rates: &RateParams) -> Result<(Dynamics<f64>, f64)> {
    let dynamics = Dynamics::new(kind, *rates)?;
    let theta = rates.theta().unwrap_or(0.0);
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::NonPositiveTheta(theta));
    }
    Ok((dynamics, theta))
}

/// Running sums for the ratio estimator `p_d = sum(t_d) / sum(L)` over
/// lives with time `t_d` at degree `d` and length `L`.
#[derive(Debug, Clone)]
struct Accumulator {
    time: Vec<f64>,
    time_sq: Vec<f64>,
    time_life: Vec<f64>,
    class_time: [f64; 3],
    life: f64,
    life_sq: f64,
    lives: u64,
    events: u64,
}

impl Accumulator {
    fn new(bins: usize) -> Self {
        Self {
            time: vec![0.0; bins],
            time_sq: vec![0.0; bins],
            time_life: vec![0.0; bins],
            class_time: [0.0; 3],
            life: 0.0,
            life_sq: 0.0,
            lives: 0,
            events: 0,
        }
    }

    fn merge(&mut self, o: &Accumulator) {
        for d in 0..self.time.len() {
            self.time[d] += o.time[d];
            self.time_sq[d] += o.time_sq[d];
            self.time_life[d] += o.time_life[d];
        }
        for c in 0..3 {
            self.class_time[c] += o.class_time[c];
        }
        self.life += o.life;
        self.life_sq += o.life_sq;
        self.lives += o.lives;
        self.events += o.events;
    }
}

/// Time-averaged degree distribution over `cfg.lifetimes` finite lives.
pub fn simulate(kind: ModelKind, rates: &RateParams, cfg: &SimConfig) -> Result<SimEstimate> {
    let (dynamics, theta) = prepare(kind, rates)?;
    if cfg.lifetimes == 0 {
        return Err(Error::InvalidOption(
            "at least one lifetime is required".into(),
        ));
    }
    let bins = kind.caps.c_m() as usize + 1;
    let mut total = Accumulator::new(bins);
    let mut per_life = vec![0.0; bins];
    let mut block_start = 0;
    while block_start < cfg.lifetimes {
        let block_end = (block_start + BLOCK).min(cfg.lifetimes);
        let mut block = Accumulator::new(bins);
        for life in block_start..block_end {
            per_life.iter_mut().for_each(|t| *t = 0.0);
            let mut rng = rng_for(cfg.seed, life);
            let mut state = State::ZERO;
            let mut length = 0.0;
            let mut events = 0u64;
            loop {
                debug_assert!(kind.admits_state(state), "visited {state}");
                if events >= cfg.max_events_per_life {
                    return Err(Error::EventCapExceeded {
                        life,
                        cap: cfg.max_events_per_life,
                    });
                }
                let (dt, next) = step(&dynamics, theta, state, &mut rng);
                events += 1;
                length += dt;
                per_life[state.degree() as usize] += dt;
                for c in 0..3 {
                    block.class_time[c] += dt * state.0[c] as f64;
                }
                match next {
                    Step::Died => break,
                    Step::Moved(s) => state = s,
                }
            }
            for (d, &t) in per_life.iter().enumerate() {
                block.time[d] += t;
                block.time_sq[d] += t * t;
                block.time_life[d] += t * length;
            }
            block.life += length;
            block.life_sq += length * length;
            block.lives += 1;
            block.events += events;
        }
        total.merge(&block);
        block_start = block_end;
    }

    let n = total.lives as f64;
    let dist = Distribution::from_weights(Support::Degrees, total.time.clone())?;
    let mean_life = total.life / n;
    let std_errors = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(d, &p)| {
            if total.lives < 2 {
                return 0.0;
            }
            // sum_i (t_i - p L_i)^2
            let ss =
                (total.time_sq[d] - 2.0 * p * total.time_life[d] + p * p * total.life_sq).max(0.0);
            (ss / (n * (n - 1.0))).sqrt() / mean_life
        })
        .collect();
    let arity = kind.model.arity();
    Ok(SimEstimate {
        dist,
        std_errors,
        class_means: total.class_time[..arity]
            .iter()
            .map(|t| t / total.life)
            .collect(),
        total_time: total.life,
        events: total.events,
    })
}

/// Batches used for the standard errors of a single long trajectory.
pub const TIME_BATCHES: usize = 32;

/// Time average of one trajectory of length `total_time`, started empty,
/// with ultrapeer death switched off.
pub fn simulate_infinite_life(
    kind: ModelKind,
    rates: &RateParams,
    total_time: f64,
    seed: u64,
    max_events: u64,
) -> Result<SimEstimate> {
    let dynamics = Dynamics::new(kind, *rates)?;
    if total_time <= 0.0 || !total_time.is_finite() {
        return Err(Error::InvalidOption(format!(
            "simulated time must be positive, got {total_time}"
        )));
    }
    let bins = kind.caps.c_m() as usize + 1;
    let batch_len = total_time / TIME_BATCHES as f64;
    let mut batches = vec![vec![0.0; bins]; TIME_BATCHES];
    let mut class_time = [0.0; 3];
    let mut rng = rng_for(seed, 0);
    let mut state = State::ZERO;
    let mut t = 0.0;
    let mut events = 0u64;
    while t < total_time {
        debug_assert!(kind.admits_state(state), "visited {state}");
        if events >= max_events {
            return Err(Error::EventCapExceeded {
                life: 0,
                cap: max_events,
            });
        }
        let (dt, next) = step(&dynamics, 0.0, state, &mut rng);
        events += 1;
        let end = (t + dt).min(total_time);
        let d = state.degree() as usize;
        for (acc, &k) in class_time.iter_mut().zip(&state.0) {
            *acc += (end - t) * k as f64;
        }
        // Spread the holding interval over the batches it overlaps.
        let mut s = t;
        while s < end {
            let b = ((s / batch_len) as usize).min(TIME_BATCHES - 1);
            let stop = if b + 1 == TIME_BATCHES {
                end
            } else {
                end.min((b + 1) as f64 * batch_len)
            };
            batches[b][d] += stop - s;
            s = stop;
        }
        t = end;
        if let Step::Moved(next) = next {
            state = next;
        }
    }

    let mut time = vec![0.0; bins];
    for b in &batches {
        for (acc, v) in time.iter_mut().zip(b) {
            *acc += v;
        }
    }
    let dist = Distribution::from_weights(Support::Degrees, time)?;
    let k = TIME_BATCHES as f64;
    let std_errors = (0..bins)
        .map(|d| {
            let fr: Vec<f64> = batches.iter().map(|b| b[d] / batch_len).collect();
            let m = fr.iter().sum::<f64>() / k;
            let var = fr.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();
    let arity = kind.model.arity();
    Ok(SimEstimate {
        dist,
        std_errors,
        class_means: class_time[..arity].iter().map(|c| c / total_time).collect(),
        total_time,
        events,
    })
}
