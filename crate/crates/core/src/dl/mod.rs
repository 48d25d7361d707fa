//! Description-logic features: concept and role expressions, their
//! denotations, and bounded feature pools.

pub mod eval;
pub mod expr;
pub mod pool;

use thiserror::Error;

pub use eval::Evaluator;
pub use expr::{Concept, Expr, Feature, FeatureKind, Role};
pub use pool::{generate_pool, FeaturePool, PoolConfig, PoolFeature, Sample};

/// Feature value: Booleans are 0/1, numbers are naturals with [`INFINITY`] on top.
pub type Value = u32;

pub const INFINITY: Value = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DlError {
    #[error("feature syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("grammar restriction violated: {0}")]
    Grammar(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("predicate `{pred}` of arity {arity} used at an invalid position")]
    BadPosition { pred: String, arity: usize },
    #[error("feature pool exceeds the cap of {0} candidates")]
    PoolExplosion(usize),
    #[error("problem `{problem}` has {count} objects; pool generation supports at most 64")]
    TooManyObjects { problem: String, count: usize },
    #[error("pool generation needs at least one sample state")]
    NoSamples,
}

/// Renders a value for reports: `inf` for [`INFINITY`].
pub fn show_value(v: Value) -> String {
    if v == INFINITY {
        "inf".to_string()
    } else {
        v.to_string()
    }
}
