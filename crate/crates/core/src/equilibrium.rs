//! Equilibrium distributions, marginals and the L1 distance.
//!
//! For a finite-life model the equilibrium is the expected time spent in
//! each state over one ultrapeer life started empty, normalized:
//! `x = (theta*I - A)^{-1} e0`, `q = x / sum(x)`.

use crate::error::{Error, Result};
use crate::linalg::{dense_solve, ProfileLu};
use crate::model::{build_generator, ConnClass, Generator, QueueModel, RateParams, StateSpace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Indexed like a [`StateSpace`].
    States,
    /// Indexed by leaf degree `0..=c_m`.
    Degrees,
}

/// Non-negative vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    support: Support,
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn new(support: Support, probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| **p < T::zero() || !p.is_finite())
        {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::norm_tol() {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { support, probs })
    }

    /// Normalize non-negative weights. Negative entries within rounding
    /// (`norm_tol` relative to the total) are clamped to zero.
    pub fn from_weights(support: Support, mut weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().filter(|w| *w > T::zero()).sum();
        if total <= T::zero() || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!("weight total {total}")));
        }
        for w in &mut weights {
            if *w < T::zero() && *w >= -T::norm_tol() * total {
                *w = T::zero();
            }
        }
        for w in &mut weights {
            *w = *w / total;
        }
        Self::new(support, weights)
    }

    pub fn point_mass(support: Support, len: usize, at: usize) -> Self {
        let mut probs = vec![T::zero(); len];
        probs[at] = T::one();
        Self { support, probs }
    }

    pub fn uniform(support: Support, len: usize) -> Self {
        let p = T::one() / T::from_count(len);
        Self {
            support,
            probs: vec![p; len],
        }
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `sum_i i * p_i`; the mean degree for a degree-indexed distribution.
    pub fn mean_index(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| T::from_count(i) * p)
            .sum()
    }

    /// Index of the largest entry (the first one on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn cast<U: Scalar>(&self) -> Distribution<U> {
        Distribution {
            support: self.support,
            probs: self
                .probs
                .iter()
                .map(|p| U::from_f64(p.to_f64().unwrap_or(0.0)).unwrap_or(U::zero()))
                .collect(),
        }
    }
}

/// Truncated-Poisson equilibrium of the M/M/n/n loss queue, proportional
/// to `(lambda/mu)^i / i!` on `0..=n`.
pub fn closed_form_mmmm<T: Scalar>(lambda: T, mu: T, n: u32) -> Result<Distribution<T>> {
    for (name, v) in [("lambda", lambda), ("mu", mu)] {
        if v <= T::zero() || !v.is_finite() {
            return Err(Error::InvalidRate {
                name,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    if n == 0 {
        return Err(Error::InvalidOption(
            "loss queue needs at least one server".into(),
        ));
    }
    let log_rho = (lambda / mu).ln();
    let mut log_fact = T::zero();
    let logs: Vec<T> = (0..=n as usize)
        .map(|i| {
            if i > 0 {
                log_fact = log_fact + T::from_count(i).ln();
            }
            T::from_count(i) * log_rho - log_fact
        })
        .collect();
    let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let weights = logs.into_iter().map(|l| (l - top).exp()).collect();
    Distribution::from_weights(Support::Degrees, weights)
}

/// Finite-life equilibrium: normalized solution of `(theta*I - A) x = e0`.
///
/// Only states reachable from the empty state carry mass; the system is
/// solved on that closed subset and the rest is left at zero. The residual
/// of the full system is checked before returning.
pub fn solve_finite_life<T: Scalar>(gen: &Generator<T>, theta: T) -> Result<Distribution<T>> {
    if theta <= T::zero() || !theta.is_finite() {
        return Err(Error::NonPositiveTheta(theta.to_f64().unwrap_or(f64::NAN)));
    }
    let n = gen.dim();
    let m = gen.matrix().shifted_negation(theta);
    let live = m.reachable_from(0);
    let lu = ProfileLu::factor(&m.principal_submatrix(&live))?;
    let mut rhs = vec![T::zero(); live.len()];
    rhs[0] = T::one();
    let sub = lu.solve(&rhs);

    let mut x = vec![T::zero(); n];
    for (&i, &v) in live.iter().zip(&sub) {
        x[i] = v;
    }
    let mut r = m.mul_vec(&x);
    r[0] = r[0] - T::one();
    let residual = r.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if residual.is_nan() || residual > T::residual_tol() {
        return Err(Error::Residual {
            residual: residual.to_f64().unwrap_or(f64::NAN),
            tolerance: T::residual_tol().to_f64().unwrap_or(0.0),
        });
    }
    Distribution::from_weights(Support::States, x)
}

/// Infinite-life equilibrium: the normalized null vector of `A`, found by a
/// dense pivoted solve with the last balance equation replaced by
/// `sum(q) = 1`.
pub fn null_space_equilibrium<T: Scalar>(gen: &Generator<T>) -> Result<Distribution<T>> {
    let n = gen.dim();
    let mut a = gen.matrix().to_dense();
    a[n - 1] = vec![T::one(); n];
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let q = dense_solve(a, b)?;
    Distribution::from_weights(Support::States, q)
}

/// State-resolved equilibrium of any model: closed form for the infinite-
/// life loss queue, finite-life solve otherwise.
pub fn equilibrium<T: Scalar>(
    space: &StateSpace,
    rates: &RateParams<T>,
) -> Result<Distribution<T>> {
    rates.ensure_model(space.kind().model)?;
    match *rates {
        RateParams::Simple { lambda, mu } => {
            let d = closed_form_mmmm(lambda, mu, space.kind().caps.c_m())?;
            Ok(Distribution {
                support: Support::States,
                probs: d.probs,
            })
        }
        _ => {
            let theta = rates.theta().expect("finite-life shape");
            solve_finite_life(&build_generator(space, rates)?, theta)
        }
    }
}

fn check_len<T>(dist: &Distribution<T>, space: &StateSpace) -> Result<()> {
    if dist.probs.len() != space.len() {
        return Err(Error::LengthMismatch {
            left: dist.probs.len(),
            right: space.len(),
        });
    }
    Ok(())
}

/// Distribution of the total leaf degree, over `0..=c_m`.
pub fn degree_marginal<T: Scalar>(
    dist: &Distribution<T>,
    space: &StateSpace,
) -> Result<Distribution<T>> {
    check_len(dist, space)?;
    let mut probs = vec![T::zero(); space.kind().caps.c_m() as usize + 1];
    for (s, &p) in space.states().iter().zip(&dist.probs) {
        let d = s.degree() as usize;
        probs[d] = probs[d] + p;
    }
    Ok(Distribution {
        support: Support::Degrees,
        probs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMarginal<T> {
    pub class: ConnClass,
    pub dist: Distribution<T>,
    pub mean: T,
}

/// Per-class and total-degree marginals of a multi-class equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport<T> {
    pub classes: Vec<ClassMarginal<T>>,
    pub total: Distribution<T>,
    pub total_mean: T,
}

pub fn class_marginals<T: Scalar>(
    dist: &Distribution<T>,
    space: &StateSpace,
) -> Result<MarginalReport<T>> {
    let model = space.kind().model;
    if matches!(model, QueueModel::Simple | QueueModel::FiniteLife) {
        return Err(Error::NotMultiClass(model));
    }
    check_len(dist, space)?;
    let len = space.kind().caps.c_m() as usize + 1;
    let classes = model
        .classes()
        .iter()
        .enumerate()
        .map(|(coord, &class)| {
            let mut probs = vec![T::zero(); len];
            for (s, &p) in space.states().iter().zip(&dist.probs) {
                let k = s.0[coord] as usize;
                probs[k] = probs[k] + p;
            }
            let dist = Distribution {
                support: Support::Degrees,
                probs,
            };
            let mean = dist.mean_index();
            ClassMarginal { class, dist, mean }
        })
        .collect();
    let total = degree_marginal(dist, space)?;
    let total_mean = total.mean_index();
    Ok(MarginalReport {
        classes,
        total,
        total_mean,
    })
}

/// `sum_i |p_i - q_i|`.
pub fn l1_distance<T: Scalar>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .map(|(&a, &b)| (a - b).abs())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_states, CapacityConfig, ModelKind, State};

    fn two_state() -> Generator<f64> {
        let kind = ModelKind::new(QueueModel::Simple, CapacityConfig::single_class(1).unwrap());
        build_generator(
            &enumerate_states(kind),
            &RateParams::Simple {
                lambda: 1.0,
                mu: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn closed_form_small_cases() {
        let d = closed_form_mmmm(2.0f64, 2.0, 1).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-15);
        let d = closed_form_mmmm(1e-12, 1.0, 30).unwrap();
        assert!(d.probs()[0] > 1.0 - 1e-11);
        let d = closed_form_mmmm(48.7979, 1.0, 30).unwrap();
        assert_eq!(d.mode(), 30);
    }

    #[test]
    fn closed_form_rejects_bad_rates() {
        assert!(closed_form_mmmm(0.0, 1.0, 3).is_err());
        assert!(closed_form_mmmm(1.0, -1.0, 3).is_err());
        assert!(closed_form_mmmm(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn finite_life_limits() {
        let g = two_state();
        let d = solve_finite_life(&g, 1e-9).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-8);
        let d = solve_finite_life(&g, 1e9).unwrap();
        assert!(d.probs()[0] > 1.0 - 1e-8);
        // Exact: x = (1+theta, 1) / det, so q0 = (1+theta)/(2+theta).
        let d = solve_finite_life(&g, 0.5).unwrap();
        assert!((d.probs()[0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn finite_life_rejects_nonpositive_theta() {
        let g = two_state();
        assert!(matches!(
            solve_finite_life(&g, 0.0),
            Err(Error::NonPositiveTheta(_))
        ));
        assert!(solve_finite_life(&g, -1.0).is_err());
    }

    #[test]
    fn null_space_two_state() {
        let d = null_space_equilibrium(&two_state()).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn marginal_of_point_masses() {
        let space = enumerate_states(ModelKind::with_defaults(QueueModel::Gbn));
        let at = space.index_of(&State([2, 1, 0])).unwrap();
        let d = Distribution::<f64>::point_mass(Support::States, space.len(), at);
        let m = degree_marginal(&d, &space).unwrap();
        assert_eq!(m.probs()[3], 1.0);

        let at = space.index_of(&State([5, 0, 3])).unwrap();
        let d = Distribution::<f64>::point_mass(Support::States, space.len(), at);
        let r = class_marginals(&d, &space).unwrap();
        let means: Vec<f64> = r.classes.iter().map(|c| c.mean).collect();
        assert_eq!(means, vec![5.0, 0.0, 3.0]);
        assert_eq!(r.total_mean, 8.0);
    }

    #[test]
    fn lnl_uniform_pair() {
        let space = enumerate_states(ModelKind::with_defaults(QueueModel::Lnl));
        let mut probs = vec![0.0; space.len()];
        probs[space.index_of(&State([0, 1, 0])).unwrap()] = 0.5;
        probs[space.index_of(&State([1, 0, 0])).unwrap()] = 0.5;
        let d = Distribution::new(Support::States, probs).unwrap();
        let m = degree_marginal(&d, &space).unwrap();
        assert_eq!(m.probs()[1], 1.0);
    }

    #[test]
    fn marginal_errors() {
        let space = enumerate_states(ModelKind::with_defaults(QueueModel::FiniteLife));
        let d = Distribution::<f64>::uniform(Support::States, space.len());
        assert!(matches!(
            class_marginals(&d, &space),
            Err(Error::NotMultiClass(_))
        ));
        let short = Distribution::<f64>::uniform(Support::States, 3);
        assert!(matches!(
            degree_marginal(&short, &space),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn l1_basics() {
        let a = Distribution::new(Support::Degrees, vec![0.5, 0.5]).unwrap();
        let b = Distribution::point_mass(Support::Degrees, 2, 0);
        let c = Distribution::point_mass(Support::Degrees, 2, 1);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(l1_distance(&b, &c).unwrap(), 2.0);
        assert_eq!(l1_distance(&a, &b).unwrap(), 1.0);
        let d = Distribution::<f64>::uniform(Support::Degrees, 3);
        assert!(l1_distance(&a, &d).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(Support::Degrees, vec![0.6, 0.6]).is_err());
        assert!(Distribution::new(Support::Degrees, vec![1.1, -0.1]).is_err());
        assert!(Distribution::<f64>::new(Support::Degrees, vec![]).is_err());
        assert!(Distribution::from_weights(Support::Degrees, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn f32_pipeline() {
        let space = enumerate_states(ModelKind::with_defaults(QueueModel::FiniteLife));
        let r: RateParams<f32> = RateParams::FITTED_FINITE_LIFE.cast();
        let d32 = equilibrium(&space, &r).unwrap();
        let d64 = equilibrium(&space, &RateParams::FITTED_FINITE_LIFE).unwrap();
        let diff = l1_distance(&d32.cast::<f64>(), &d64).unwrap();
        assert!(diff < 1e-4, "{diff}");
    }
}
