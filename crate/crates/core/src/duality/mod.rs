//! QK-duals, K-duals, the canonical K-dual and the local-frame (discrete)
//! view of duality.

mod kdual;
mod local;
mod qk;

pub use kdual::{
    canonical_k_dual, check_sws_range_condition, enlarge_dual, is_k_dual, k_dual_reconstruction,
    minimal_dual_test, BesselReport, CanonicalDual, MinimalDualReport, PhiOperator, SwsReport,
};
pub use local::{
    kframe_from_local, kframe_projection_dual, local_duality_equiv, local_duality_equiv_basis,
    weighted_projection_frame, LocalDualityReport, LocalFrameSystem, ProjectionDual,
    ReconstructionCheck,
};
pub use qk::{
    component_preserving_duals, is_qk_dual, qk_dual_from_x, qk_dual_from_xw, ComponentPreserving,
    QkDual, QkDualReport,
};

use crate::numerics::{Mat, ToleranceProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualKind {
    Qk,
    K,
    Approximate,
}

/// Residual `‖K − reconstruction‖` and the verdict drawn from it.
#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub kind: DualKind,
    pub residual: f64,
    pub pass: bool,
    pub operator_q: Option<Mat>,
}

impl DualCertificate {
    /// Exact duality: `residual ≤ eq_abs (1 + ‖K‖)`.
    pub fn exact(kind: DualKind, residual: f64, k_norm: f64, tol: &ToleranceProfile) -> Self {
        Self {
            kind,
            residual,
            pass: tol.residual_ok(residual, k_norm),
            operator_q: None,
        }
    }

    /// Approximate duality: `residual < 1`.
    pub fn approximate(residual: f64) -> Self {
        Self {
            kind: DualKind::Approximate,
            residual,
            pass: residual < 1.0,
            operator_q: None,
        }
    }

    pub fn with_q(mut self, q: Mat) -> Self {
        self.operator_q = Some(q);
        self
    }
}
