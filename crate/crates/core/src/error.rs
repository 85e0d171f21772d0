use thiserror::Error;

use crate::model::{ConnClass, QueueModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid capacities c_m={c_m}, c_g={c_g}, c_n={c_n}: need 0 < c_n < c_g < c_m")]
    InvalidCapacity { c_m: u32, c_g: u32, c_n: u32 },

    #[error("rate `{name}` must be positive and finite, got {value}")]
    InvalidRate { name: &'static str, value: f64 },

    #[error("rates of shape {got:?} supplied to a {expected:?} model")]
    RateShapeMismatch {
        expected: QueueModel,
        got: QueueModel,
    },

    #[error("connection class {class:?} does not exist in the {model:?} model")]
    UnknownClass { class: ConnClass, model: QueueModel },

    #[error("{0:?} has a single connection class; class marginals need a multi-class model")]
    NotMultiClass(QueueModel),

    #[error("state {0} is outside the state space")]
    StateOutOfSpace(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("death rate theta must be positive, got {0}")]
    NonPositiveTheta(f64),

    #[error("singular system: pivot {pivot} at position {index}")]
    Singular { index: usize, pivot: f64 },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("life {life} exceeded the cap of {cap} events; check rate units")]
    EventCapExceeded { life: u64, cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),
}

pub type Result<T> = std::result::Result<T, Error>;
