//! Subspaces, weighted fusion systems and K-fusion frame verification.

mod kframe;
mod subspace;
mod system;
mod transforms;
mod verify;

pub use kframe::{verify_k_frame, KFrame};
pub use subspace::Subspace;
pub use system::{BlockVector, FrameBounds, FusionSystem, Member};
pub use transforms::{
    k_image_frame, restricted_inverse, transform_kdag, transform_q, transform_sinv, weaken_to_q,
    ImageMode, QTransform, Transformed,
};
pub use verify::{
    fusion_bounds_on, is_exact, is_minimal, verify_k_fusion, ExactnessReport, KFusionCheck,
};
