//! General Effect Modelling: decompose multivariate response data into
//! per-variable effect matrices plus residuals through a general linear
//! model, then explore each effect-plus-residual (ER) matrix with PCA, PLS
//! (cross-validation, jackknife, shaving) or the elastic net.
//!
//! The crate is organized around the two pipeline steps:
//!
//! * step 1 — [`dataset`], [`design`] and [`gem`] load the data, build the
//!   sum-coded design matrix and fit the decomposition;
//! * step 2 — [`pca`], [`pls`] and [`enet`] analyse ER matrices against the
//!   design variables.
//!
//! [`oracle`] generates seeded synthetic designs and carries independent
//! brute-force reference implementations used by the test suite, and
//! [`report`] plus [`cli`] drive the `gem` command-line front end.

pub mod cli;
pub mod cv;
pub mod dataset;
pub mod design;
pub mod enet;
pub mod error;
pub mod gem;
pub mod linalg;
pub mod oracle;
pub mod pca;
pub mod pls;
pub mod report;
pub mod rng;
pub mod util;

pub use error::{Error, Result};
