//! Differentially private release of linear queries through the
//! exponential mechanism over sparse synthetic databases.
//!
//! The crate bundles the release mechanisms ([`mechanisms`]), a search for
//! the fat-shattering dimension of a query class ([`fsd`]), the
//! reconstruction attack that turns a shattered set into a lower bound
//! ([`attack`]), and brute-force checks of privacy and approximation claims
//! on small instances ([`oracle`]). The [`cli`] module drives all of them
//! from the `fsdp` binary.

pub mod attack;
pub mod calibration;
pub mod cli;
pub mod combinatorics;
pub mod data;
pub mod error;
pub mod fsd;
pub mod io;
pub mod mechanisms;
pub mod oracle;
pub mod rng;

pub use data::{
    evaluate, l1_norm, max_error, rescale, Database, LinearQuery, QueryClass,
    SparseSyntheticDatabase,
};
pub use error::{Error, Result};
pub use mechanisms::{ExponentRule, L1Handling, PrivacyParams, ReleaseOutput};
