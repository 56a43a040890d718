//! Distributionally robust safe screening for weighted SVMs.
//!
//! Given a model trained at sample weights `w̃`, the rules in [`screening`]
//! identify training samples (hinge loss, L2 penalty) or features (squared
//! hinge, L1 penalty) that stay inactive for every weight vector in the ball
//! `‖w − w̃‖₂ ≤ S`. The worst-case duality gap over the ball is found exactly
//! by [`ballmax`].

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ballmax;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod models;
pub mod screening;
pub mod solver;

pub use error::{Error, Result};
