//! K-fusion frames in finite dimensions.
//!
//! A weighted family of subspaces `{(W_i, ω_i)}` of ℝⁿ is a K-fusion frame
//! when `A‖K*f‖² ≤ Σω_i²‖π_{W_i}f‖² ≤ B‖f‖²` for all `f`. The crate
//! verifies this with optimal bounds, solves the Douglas equation
//! `T_W X = K`, builds QK-duals, K-duals and resolutions of `K`, and
//! certifies robustness under perturbation.
//!
//! All operators are dense matrices; every rank decision goes through one
//! [`ToleranceProfile`].

pub mod certificate;
pub mod duality;
pub mod error;
pub mod exec;
pub mod factorization;
pub mod frames;
pub mod golden;
pub mod numerics;
pub mod perturbation;
pub mod random;
pub mod resolution;

pub use certificate::Certificate;
pub use error::{Error, Result};
pub use exec::Exec;
pub use frames::{BlockVector, FrameBounds, FusionSystem, KFrame, Subspace};
pub use numerics::{Mat, ToleranceProfile, Vector};
