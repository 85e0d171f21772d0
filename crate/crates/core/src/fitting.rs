//! Rate fitting against an empirical degree histogram.
//!
//! The objective is the L1 distance between the model's equilibrium degree
//! marginal and the histogram. It is minimized with a Nelder-Mead simplex
//! over log-rates, so every candidate is strictly positive, with log-rates
//! clamped to `[ln 1e-4, ln 1e3]`. Several restarts are run from jittered
//! copies of the initial point and the best one wins.
//!
//! Multiplying every rate (theta included) by a common factor only changes
//! the time unit, so the equilibrium and the objective are unchanged: only
//! rate ratios are identifiable from a degree histogram.

use rand::SeedableRng;
use rand_distr::{Distribution as _, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::equilibrium::{degree_marginal, equilibrium, l1_distance, Support};
use crate::error::{Error, Result};
use crate::model::{enumerate_states, ModelKind, QueueModel, StateSpace};
use crate::{Distribution, RateParams};

pub const MIN_RATE: f64 = 1e-4;
pub const MAX_RATE: f64 = 1e3;

/// Empirical degree distribution over `0..=c_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHistogram {
    dist: Distribution,
    samples: Option<f64>,
}

impl DegreeHistogram {
    /// From raw counts; the sample size is kept.
    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        Self::check(&counts)?;
        let samples = counts.iter().sum();
        Ok(Self {
            dist: Distribution::from_weights(Support::Degrees, counts)?,
            samples: Some(samples),
        })
    }

    /// From probabilities (renormalized if they drift from 1).
    pub fn from_probabilities(probs: Vec<f64>) -> Result<Self> {
        Self::check(&probs)?;
        Ok(Self {
            dist: Distribution::from_weights(Support::Degrees, probs)?,
            samples: None,
        })
    }

    fn check(v: &[f64]) -> Result<()> {
        if v.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidDistribution(
                "histogram entries must be finite and non-negative".into(),
            ));
        }
        if !v.iter().any(|x| *x > 0.0) {
            return Err(Error::InvalidDistribution(
                "histogram has no positive entry".into(),
            ));
        }
        Ok(())
    }

    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }

    pub fn samples(&self) -> Option<f64> {
        self.samples
    }

    /// Largest degree in the support.
    pub fn max_degree(&self) -> usize {
        self.dist.len() - 1
    }
}

impl From<Distribution> for DegreeHistogram {
    fn from(dist: Distribution) -> Self {
        Self {
            dist,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once the objective spread over the simplex drops below this.
    pub tolerance: f64,
    pub restarts: usize,
    /// Initial simplex edge, in log-rate units.
    pub initial_scale: f64,
    /// Standard deviation of the log-normal restart jitter.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-6,
            restarts: 5,
            initial_scale: 0.25,
            jitter: 0.25,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidOption(
                "iterations and restarts must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("initial_scale", self.initial_scale),
            ("jitter", self.jitter),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidOption(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub start: RateParams,
    pub best: RateParams,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: RateParams,
    /// Degree marginal at `params`.
    pub fitted: Distribution,
    /// L1 distance between `fitted` and the histogram.
    pub objective: f64,
    /// Iterations summed over restarts.
    pub iterations: usize,
    /// Whether the restart that produced `params` converged.
    pub converged: bool,
    pub restarts: Vec<RestartTrace>,
}

/// Fitted degree marginal of `params`, or an error if the solve fails.
pub fn fitted_marginal(space: &StateSpace, params: &RateParams) -> Result<Distribution> {
    degree_marginal(&equilibrium(space, params)?, space)
}

/// L1 objective at `params`; `+inf` wherever the model cannot be solved.
pub fn objective(space: &StateSpace, empirical: &DegreeHistogram, params: &RateParams) -> f64 {
    fitted_marginal(space, params)
        .and_then(|q| l1_distance(&q, empirical.distribution()))
        .ok()
        .filter(|d| d.is_finite())
        .unwrap_or(f64::INFINITY)
}

pub fn fit(
    kind: ModelKind,
    empirical: &DegreeHistogram,
    init: &RateParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    init.ensure_model(kind.model)?;
    init.validate()?;
    let want = kind.caps.c_m() as usize;
    if empirical.max_degree() != want {
        return Err(Error::LengthMismatch {
            left: empirical.max_degree() + 1,
            right: want + 1,
        });
    }
    let space = enumerate_states(kind);
    let model = kind.model;
    let (lo, hi) = (MIN_RATE.ln(), MAX_RATE.ln());
    let to_params = |y: &[f64]| {
        let rates: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        RateParams::from_values(model, &rates).expect("dimension fixed by model")
    };
    let base: Vec<f64> = init.values().iter().map(|v| v.ln().clamp(lo, hi)).collect();
    let normal = Normal::new(0.0, opts.jitter).map_err(|e| Error::InvalidOption(e.to_string()))?;

    let mut restarts = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let start: Vec<f64> = if r == 0 {
            base.clone()
        } else {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed ^ r as u64);
            base.iter()
                .map(|&v| (v + normal.sample(&mut rng)).clamp(lo, hi))
                .collect()
        };
        let mut f = |y: &[f64]| objective(&space, empirical, &to_params(y));
        let run = nelder_mead(&mut f, &start, opts, lo, hi);
        restarts.push(RestartTrace {
            start: to_params(&start),
            best: to_params(&run.x),
            objective: run.fx,
            iterations: run.iterations,
            evaluations: run.evaluations,
            converged: run.converged,
            history: run.history,
        });
    }

    let best = restarts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let params = restarts[best].best;
    let (fitted, objective) = match fitted_marginal(&space, &params) {
        Ok(q) => {
            let d = l1_distance(&q, empirical.distribution())?;
            (q, d)
        }
        // Every candidate failed to solve.
        Err(_) => (empirical.distribution().clone(), f64::INFINITY),
    };
    Ok(FitResult {
        params,
        fitted,
        objective,
        iterations: restarts.iter().map(|t| t.iterations).sum(),
        converged: restarts[best].converged && objective.is_finite(),
        restarts,
    })
}

struct NmRun {
    x: Vec<f64>,
    fx: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Box-clamped Nelder-Mead with dimension-adaptive coefficients.
fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &FitOptions,
    lo: f64,
    hi: f64,
) -> NmRun {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let clamp = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x.clamp(lo, hi)).collect() };
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let p0 = clamp(x0.to_vec());
    let f0 = eval(&p0, &mut evaluations);
    simplex.push((p0, f0));
    for i in 0..n {
        let mut p = x0.to_vec();
        // Step inward when the axis is pinned at the upper bound.
        p[i] += if p[i] + opts.initial_scale > hi {
            -opts.initial_scale
        } else {
            opts.initial_scale
        };
        let p = clamp(p);
        let fp = eval(&p, &mut evaluations);
        simplex.push((p, fp));
    }

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread < opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(p, _)| p[d]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evaluations);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, &mut evaluations);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(alpha * rho);
                let fc = eval(&xc, &mut evaluations);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evaluations);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (p, fp) in simplex.iter_mut().skip(1) {
                    *p = clamp(
                        best.iter()
                            .zip(p.iter())
                            .map(|(b, x)| b + sigma * (x - b))
                            .collect(),
                    );
                    *fp = eval(p, &mut evaluations);
                }
            }
        }
        let best = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        history.push(best);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NmRun {
        x,
        fx,
        iterations,
        evaluations,
        converged,
        history,
    }
}

/// Initial LNL rates from a GBN fit: LimeWire above the threshold behaves
/// like good leaves, below it LimeWire arrivals are good plus bad.
pub fn lnl_init_from_gbn(gbn: &RateParams) -> Result<RateParams> {
    match *gbn {
        RateParams::Gbn {
            lambda_g,
            lambda_b,
            lambda_n,
            mu_g,
            mu_b,
            mu_n,
            theta,
        } => Ok(RateParams::Lnl {
            lambda_a: lambda_g,
            lambda_b: lambda_g + lambda_b,
            lambda_n,
            mu_a: mu_g,
            mu_b,
            mu_n,
            theta,
        }),
        other => Err(Error::RateShapeMismatch {
            expected: QueueModel::Gbn,
            got: other.model(),
        }),
    }
}

/// Non-LimeWire to LimeWire arrival ratio `lambda_n / (lambda_g + lambda_b)`.
pub fn limewire_ratio(params: &RateParams) -> Result<f64> {
    match *params {
        RateParams::Gbn {
            lambda_g,
            lambda_b,
            lambda_n,
            ..
        } => Ok(lambda_n / (lambda_g + lambda_b)),
        other => Err(Error::RateShapeMismatch {
            expected: QueueModel::Gbn,
            got: other.model(),
        }),
    }
}
