//! Queue models of an ultrapeer's leaf slots.
//!
//! Four models share one representation. A state counts admitted leaf
//! connections per class, arrivals are Poisson per class and gated by the
//! admission rules, and every admitted connection leaves independently at
//! its class rate. The generator is stored column-wise: entry `(i, j)` is
//! the rate of moving from state `j` into state `i`, and the diagonal holds
//! minus the total outflow so each column sums to zero. Ultrapeer death
//! (`theta`) is not part of the generator; solvers apply it as `A - theta*I`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::linalg::CscMatrix;
use crate::scalar::Scalar;

/// Admission capacities of an ultrapeer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CapacityConfig {
    c_m: u32,
    c_g: u32,
    c_n: u32,
}

impl CapacityConfig {
    /// LimeWire defaults: 30 leaf slots, good-leaf threshold 15, 3 slots
    /// reserved for non-LimeWire leaves.
    pub const DEFAULT: CapacityConfig = CapacityConfig {
        c_m: 30,
        c_g: 15,
        c_n: 3,
    };

    pub fn new(c_m: u32, c_g: u32, c_n: u32) -> Result<Self> {
        if c_n == 0 || c_n >= c_g || c_g >= c_m {
            return Err(Error::InvalidCapacity { c_m, c_g, c_n });
        }
        Ok(Self { c_m, c_g, c_n })
    }

    /// Capacities for the single-class models, which only use `c_m`. The
    /// class thresholds are pinned to `c_g = c_m`, `c_n = 0`.
    pub fn single_class(c_m: u32) -> Result<Self> {
        if c_m == 0 {
            return Err(Error::InvalidCapacity {
                c_m,
                c_g: c_m,
                c_n: 0,
            });
        }
        Ok(Self {
            c_m,
            c_g: c_m,
            c_n: 0,
        })
    }

    /// Maximum number of leaf connections.
    pub fn c_m(&self) -> u32 {
        self.c_m
    }

    /// Fill level beyond which only good leaves are admitted.
    pub fn c_g(&self) -> u32 {
        self.c_g
    }

    /// Slots reserved for non-LimeWire leaves.
    pub fn c_n(&self) -> u32 {
        self.c_n
    }

    /// Cap on LimeWire connections, `c_m - c_n`.
    pub fn c_gb(&self) -> u32 {
        self.c_m - self.c_n
    }
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueueModel {
    /// Infinite-life M/M/m/m loss queue.
    Simple,
    /// M/M/m/m loss queue whose server dies at rate theta.
    FiniteLife,
    /// Good / bad LimeWire / non-LimeWire classes with full admission rules.
    Gbn,
    /// LimeWire / non-LimeWire classes with threshold-switched LimeWire rates.
    Lnl,
}

impl QueueModel {
    pub const ALL: [QueueModel; 4] = [Self::Simple, Self::FiniteLife, Self::Gbn, Self::Lnl];

    /// Number of coordinates in a state tuple.
    pub fn arity(self) -> usize {
        self.classes().len()
    }

    /// Connection classes, in state-coordinate order.
    pub fn classes(self) -> &'static [ConnClass] {
        match self {
            Self::Simple | Self::FiniteLife => &[ConnClass::Single],
            Self::Gbn => &[ConnClass::Good, ConnClass::Bad, ConnClass::NonLimeWire],
            Self::Lnl => &[ConnClass::LimeWire, ConnClass::NonLimeWire],
        }
    }

    pub fn coordinate(self, class: ConnClass) -> Result<usize> {
        self.classes()
            .iter()
            .position(|&c| c == class)
            .ok_or(Error::UnknownClass { class, model: self })
    }

    /// Whether the model includes ultrapeer death.
    pub fn is_finite_life(self) -> bool {
        !matches!(self, Self::Simple)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::FiniteLife => "finite-life",
            Self::Gbn => "gbn",
            Self::Lnl => "lnl",
        }
    }
}

impl fmt::Display for QueueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueueModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" | "mmmm" | "infinite-life" => Ok(Self::Simple),
            "finite-life" | "finitelife" | "fl" => Ok(Self::FiniteLife),
            "gbn" => Ok(Self::Gbn),
            "lnl" => Ok(Self::Lnl),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

/// A model together with its capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelKind {
    pub model: QueueModel,
    pub caps: CapacityConfig,
}

impl ModelKind {
    pub fn new(model: QueueModel, caps: CapacityConfig) -> Self {
        Self { model, caps }
    }

    pub fn with_defaults(model: QueueModel) -> Self {
        Self::new(model, CapacityConfig::DEFAULT)
    }

    /// Whether `state` belongs to the model's constraint set.
    pub fn admits_state(&self, state: State) -> bool {
        let CapacityConfig { c_m, c_g, .. } = self.caps;
        let c_gb = self.caps.c_gb();
        let [a, b, c] = state.0;
        match self.model {
            QueueModel::Simple | QueueModel::FiniteLife => b == 0 && c == 0 && a <= c_m,
            QueueModel::Gbn => a + b + c <= c_m && a + b <= c_gb && b <= c_g && c <= c_g,
            QueueModel::Lnl => c == 0 && a + b <= c_m && a <= c_gb && b <= c_g,
        }
    }
}

/// Leaf connection class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnClass {
    /// The only class of the single-class models.
    Single,
    /// Good LimeWire leaf.
    Good,
    /// Bad LimeWire leaf.
    Bad,
    NonLimeWire,
    /// Any LimeWire leaf (LNL model).
    LimeWire,
}

impl ConnClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Single => "leaf",
            Self::Good => "good",
            Self::Bad => "bad",
            Self::NonLimeWire => "non_limewire",
            Self::LimeWire => "limewire",
        }
    }
}

/// Per-class connection counts. Coordinates past the model's arity are 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct State(pub [u32; 3]);

impl State {
    pub const ZERO: State = State([0; 3]);

    /// Leaf degree: total admitted connections.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn components(&self, arity: usize) -> &[u32] {
        &self.0[..arity]
    }

    fn bumped(mut self, coord: usize, up: bool) -> Self {
        if up {
            self.0[coord] += 1;
        } else {
            self.0[coord] -= 1;
        }
        self
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Rate parameters; one shape per model. Time unit is the caller's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateParams<T> {
    Simple {
        lambda: T,
        mu: T,
    },
    FiniteLife {
        lambda: T,
        mu: T,
        theta: T,
    },
    Gbn {
        lambda_g: T,
        lambda_b: T,
        lambda_n: T,
        mu_g: T,
        mu_b: T,
        mu_n: T,
        theta: T,
    },
    Lnl {
        lambda_a: T,
        lambda_b: T,
        lambda_n: T,
        mu_a: T,
        mu_b: T,
        mu_n: T,
        theta: T,
    },
}

const SIMPLE_KEYS: &[&str] = &["lambda", "mu"];
const FINITE_LIFE_KEYS: &[&str] = &["lambda", "mu", "theta"];
const GBN_KEYS: &[&str] = &[
    "lambda_g", "lambda_b", "lambda_n", "mu_g", "mu_b", "mu_n", "theta",
];
const LNL_KEYS: &[&str] = &[
    "lambda_a", "lambda_b", "lambda_n", "mu_a", "mu_b", "mu_n", "theta",
];

impl<T: Scalar> RateParams<T> {
    pub fn model(&self) -> QueueModel {
        match self {
            Self::Simple { .. } => QueueModel::Simple,
            Self::FiniteLife { .. } => QueueModel::FiniteLife,
            Self::Gbn { .. } => QueueModel::Gbn,
            Self::Lnl { .. } => QueueModel::Lnl,
        }
    }

    pub fn theta(&self) -> Option<T> {
        match *self {
            Self::Simple { .. } => None,
            Self::FiniteLife { theta, .. } | Self::Gbn { theta, .. } | Self::Lnl { theta, .. } => {
                Some(theta)
            }
        }
    }

    /// Parameter names in canonical order, as used by rates files.
    pub fn keys(model: QueueModel) -> &'static [&'static str] {
        match model {
            QueueModel::Simple => SIMPLE_KEYS,
            QueueModel::FiniteLife => FINITE_LIFE_KEYS,
            QueueModel::Gbn => GBN_KEYS,
            QueueModel::Lnl => LNL_KEYS,
        }
    }

    /// Values in the order of [`RateParams::keys`].
    pub fn values(&self) -> Vec<T> {
        match *self {
            Self::Simple { lambda, mu } => vec![lambda, mu],
            Self::FiniteLife { lambda, mu, theta } => vec![lambda, mu, theta],
            Self::Gbn {
                lambda_g,
                lambda_b,
                lambda_n,
                mu_g,
                mu_b,
                mu_n,
                theta,
            } => vec![lambda_g, lambda_b, lambda_n, mu_g, mu_b, mu_n, theta],
            Self::Lnl {
                lambda_a,
                lambda_b,
                lambda_n,
                mu_a,
                mu_b,
                mu_n,
                theta,
            } => vec![lambda_a, lambda_b, lambda_n, mu_a, mu_b, mu_n, theta],
        }
    }

    /// Inverse of [`RateParams::values`]. Does not validate positivity.
    pub fn from_values(model: QueueModel, v: &[T]) -> Result<Self> {
        let want = Self::keys(model).len();
        if v.len() != want {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: want,
            });
        }
        Ok(match model {
            QueueModel::Simple => Self::Simple {
                lambda: v[0],
                mu: v[1],
            },
            QueueModel::FiniteLife => Self::FiniteLife {
                lambda: v[0],
                mu: v[1],
                theta: v[2],
            },
            QueueModel::Gbn => Self::Gbn {
                lambda_g: v[0],
                lambda_b: v[1],
                lambda_n: v[2],
                mu_g: v[3],
                mu_b: v[4],
                mu_n: v[5],
                theta: v[6],
            },
            QueueModel::Lnl => Self::Lnl {
                lambda_a: v[0],
                lambda_b: v[1],
                lambda_n: v[2],
                mu_a: v[3],
                mu_b: v[4],
                mu_n: v[5],
                theta: v[6],
            },
        })
    }

    /// Every rate must be strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::keys(self.model()).iter().zip(self.values()) {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidRate {
                    name,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// All rates, theta included, multiplied by `c` (a change of time unit).
    pub fn scaled(&self, c: T) -> Self {
        let v: Vec<T> = self.values().into_iter().map(|x| x * c).collect();
        Self::from_values(self.model(), &v).expect("same shape")
    }

    pub fn cast<U: Scalar>(&self) -> RateParams<U> {
        let v: Vec<U> = self
            .values()
            .into_iter()
            .map(|x| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
            .collect();
        RateParams::from_values(self.model(), &v).expect("same shape")
    }

    pub fn ensure_model(&self, model: QueueModel) -> Result<()> {
        if self.model() != model {
            return Err(Error::RateShapeMismatch {
                expected: model,
                got: self.model(),
            });
        }
        Ok(())
    }
}

impl RateParams<f64> {
    /// Best finite-life M/M/m/m fit reported for the measured network
    /// (time unit 0.5 h).
    pub const FITTED_FINITE_LIFE: RateParams<f64> = RateParams::FiniteLife {
        lambda: 10.5179,
        mu: 0.2116,
        theta: 0.0374,
    };

    /// Best GBN fit reported for the measured network.
    pub const FITTED_GBN: RateParams<f64> = RateParams::Gbn {
        lambda_g: 11.0926,
        lambda_b: 5.6722,
        lambda_n: 3.5248,
        mu_g: 0.1824,
        mu_b: 0.1828,
        mu_n: 0.2980,
        theta: 0.0714,
    };

    /// Best LNL fit reported for the measured network.
    pub const FITTED_LNL: RateParams<f64> = RateParams::Lnl {
        lambda_a: 11.1363,
        lambda_b: 19.7656,
        lambda_n: 3.5906,
        mu_a: 0.1849,
        mu_b: 0.5330,
        mu_n: 0.2984,
        theta: 0.0707,
    };
}

/// All admissible states of a model, in lexicographic order.
#[derive(Debug, Clone)]
pub struct StateSpace {
    kind: ModelKind,
    states: Vec<State>,
    index: HashMap<State, usize>,
}

impl StateSpace {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.kind.model.arity()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> State {
        self.states[i]
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &State) -> bool {
        self.index.contains_key(s)
    }
}

/// Enumerate the model's constraint set in lexicographic order; the empty
/// state comes first.
pub fn enumerate_states(kind: ModelKind) -> StateSpace {
    let caps = kind.caps;
    let (c_m, c_g, c_gb) = (caps.c_m(), caps.c_g(), caps.c_gb());
    let mut states = Vec::new();
    match kind.model {
        QueueModel::Simple | QueueModel::FiniteLife => {
            states.extend((0..=c_m).map(|k| State([k, 0, 0])));
        }
        QueueModel::Gbn => {
            for g in 0..=c_gb {
                for b in 0..=c_g.min(c_gb - g) {
                    for n in 0..=c_g.min(c_m - g - b) {
                        states.push(State([g, b, n]));
                    }
                }
            }
        }
        QueueModel::Lnl => {
            for l in 0..=c_gb {
                for n in 0..=c_g.min(c_m - l) {
                    states.push(State([l, n, 0]));
                }
            }
        }
    }
    debug_assert!(states.iter().all(|&s| kind.admits_state(s)));
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    StateSpace {
        kind,
        states,
        index,
    }
}

/// Whether a connection of `class` arriving in `state` is accepted.
pub fn can_admit(kind: ModelKind, state: State, class: ConnClass) -> Result<bool> {
    let coord = kind.model.coordinate(class)?;
    let caps = kind.caps;
    let (c_m, c_g, c_n, c_gb) = (caps.c_m(), caps.c_g(), caps.c_n(), caps.c_gb());
    let total = state.degree();
    let k = state.0;
    let non_lw = |k_n: u32| k_n < c_n || total < c_g;
    Ok(match kind.model {
        QueueModel::Simple | QueueModel::FiniteLife => total < c_m,
        QueueModel::Gbn => match coord {
            0 => k[0] + k[1] < c_gb && total < c_m,
            1 => total < c_g,
            _ => non_lw(k[2]),
        },
        QueueModel::Lnl => match coord {
            0 => total < c_g || (k[0] < c_gb && total < c_m),
            _ => non_lw(k[1]),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Arrival,
    Departure,
}

/// One exit from a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub target: State,
    pub rate: T,
    pub class: ConnClass,
    pub direction: Direction,
}

/// A model with rates whose shape and positivity have been checked.
#[derive(Debug, Clone, Copy)]
pub struct Dynamics<T> {
    kind: ModelKind,
    rates: RateParams<T>,
}

impl<T: Scalar> Dynamics<T> {
    pub fn new(kind: ModelKind, rates: RateParams<T>) -> Result<Self> {
        rates.ensure_model(kind.model)?;
        rates.validate()?;
        Ok(Self { kind, rates })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn rates(&self) -> &RateParams<T> {
        &self.rates
    }

    /// Rate at which `class` connections arrive and are admitted in `state`.
    pub fn arrival_rate(&self, state: State, class: ConnClass) -> T {
        if !can_admit(self.kind, state, class).unwrap_or(false) {
            return T::zero();
        }
        let above = state.degree() >= self.kind.caps.c_g();
        match (self.rates, class) {
            (RateParams::Simple { lambda, .. }, _) | (RateParams::FiniteLife { lambda, .. }, _) => {
                lambda
            }
            (RateParams::Gbn { lambda_g, .. }, ConnClass::Good) => lambda_g,
            (RateParams::Gbn { lambda_b, .. }, ConnClass::Bad) => lambda_b,
            (RateParams::Gbn { lambda_n, .. }, _) => lambda_n,
            (
                RateParams::Lnl {
                    lambda_a, lambda_b, ..
                },
                ConnClass::LimeWire,
            ) => {
                if above {
                    lambda_a
                } else {
                    lambda_b
                }
            }
            (RateParams::Lnl { lambda_n, .. }, _) => lambda_n,
        }
    }

    /// Total rate at which `class` connections leave `state`.
    pub fn departure_rate(&self, state: State, class: ConnClass) -> T {
        let Ok(coord) = self.kind.model.coordinate(class) else {
            return T::zero();
        };
        let k = T::from_count(state.0[coord] as usize);
        let above = state.degree() >= self.kind.caps.c_g();
        let mu = match (self.rates, coord) {
            (RateParams::Simple { mu, .. }, _) | (RateParams::FiniteLife { mu, .. }, _) => mu,
            (RateParams::Gbn { mu_g, .. }, 0) => mu_g,
            (RateParams::Gbn { mu_b, .. }, 1) => mu_b,
            (RateParams::Gbn { mu_n, .. }, _) => mu_n,
            (RateParams::Lnl { mu_a, mu_b, .. }, 0) => {
                if above {
                    mu_a
                } else {
                    mu_b
                }
            }
            (RateParams::Lnl { mu_n, .. }, _) => mu_n,
        };
        k * mu
    }

    /// Every nonzero-rate transition out of `state`, arrivals first.
    pub fn outgoing(&self, state: State) -> ArrayVec<Transition<T>, 6> {
        let mut out = ArrayVec::new();
        let classes = self.kind.model.classes();
        for (coord, &class) in classes.iter().enumerate() {
            let rate = self.arrival_rate(state, class);
            if rate > T::zero() {
                out.push(Transition {
                    target: state.bumped(coord, true),
                    rate,
                    class,
                    direction: Direction::Arrival,
                });
            }
        }
        for (coord, &class) in classes.iter().enumerate() {
            if state.0[coord] > 0 {
                out.push(Transition {
                    target: state.bumped(coord, false),
                    rate: self.departure_rate(state, class),
                    class,
                    direction: Direction::Departure,
                });
            }
        }
        out
    }
}

/// Sparse transition-rate matrix over a [`StateSpace`].
#[derive(Debug, Clone)]
pub struct Generator<T> {
    matrix: CscMatrix<T>,
}

impl<T: Scalar> Generator<T> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Rate into state `i` from state `j` (or minus the outflow of `j` on
    /// the diagonal).
    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }

    pub fn matrix(&self) -> &CscMatrix<T> {
        &self.matrix
    }

    pub fn column_sums(&self) -> Vec<T> {
        (0..self.dim())
            .map(|j| self.matrix.column(j).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }
}

/// Build the column-conservative generator of `kind` at `rates`.
///
/// Life termination is left out; see [`crate::equilibrium::solve_finite_life`].
pub fn build_generator<T: Scalar>(
    space: &StateSpace,
    rates: &RateParams<T>,
) -> Result<Generator<T>> {
    let dynamics = Dynamics::new(space.kind(), *rates)?;
    let columns = space
        .states()
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let mut col: Vec<(usize, T)> = Vec::with_capacity(7);
            let mut outflow = T::zero();
            for t in dynamics.outgoing(s) {
                let i = space
                    .index_of(&t.target)
                    .ok_or_else(|| Error::StateOutOfSpace(t.target.to_string()))?;
                col.push((i, t.rate));
                outflow = outflow + t.rate;
            }
            col.push((j, -outflow));
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Generator {
        matrix: CscMatrix::from_columns(space.len(), columns),
    })
}
