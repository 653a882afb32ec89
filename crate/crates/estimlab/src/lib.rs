//! estimlab: exact and Monte-Carlo laboratory for the limits of loss
//! estimation in overparameterized learning.
//!
//! The crate has two halves that check each other:
//!
//! - closed-form, arbitrary-precision probability computations
//!   ([`exactprob`]), built on exact linear algebra over prime fields
//!   ([`ffmat`], [`linclass`]) and a shattered-domain model ([`shattered`]);
//! - a seeded, reproducible Monte-Carlo harness ([`expharness`]) that runs
//!   (distribution, learner, estimator) trials ([`learners`], [`estimators`])
//!   and compares empirical rates against the closed forms.
//!
//! See the `examples/` directory for one runnable walk-through per
//! capability, and the `estimlab` binary for the command-line front end.

pub mod error;
pub mod estimators;
pub mod exactprob;
pub mod expharness;
pub mod ffmat;
pub mod learners;
pub mod linclass;
pub mod shattered;

pub mod cli;

pub use error::{Error, Result};
