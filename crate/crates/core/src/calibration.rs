//! Frozen constants for quantities whose theory only fixes them up to
//! `O(·)`.

/// Multiplier in [`choose_m`](crate::fsd::choose_m) used by the sparse
/// approximation and utility checks.
pub const C_M: f64 = 1.0;

/// Multiplier in [`utility_threshold`](crate::mechanisms::utility_threshold).
pub const C_U: f64 = 4.0;

/// Fraction of `α` spent on the private L1-norm estimate.
pub const PRIVATE_L1_SHARE: f64 = 0.1;
