use crate::frames::FrameBounds;
use crate::numerics::Vector;

/// Outcome of a verification: a verdict plus the numbers that decided it.
#[derive(Clone, Debug, Default)]
pub struct Certificate {
    pub pass: bool,
    pub bounds: Option<FrameBounds>,
    pub residual: Option<f64>,
    /// A vector that demonstrates failure, when one is available.
    pub witness: Option<Vector>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn passed() -> Self {
        Self {
            pass: true,
            ..Self::default()
        }
    }

    pub fn failed(note: impl Into<String>) -> Self {
        Self {
            pass: false,
            notes: vec![note.into()],
            ..Self::default()
        }
    }

    pub fn with_bounds(mut self, bounds: FrameBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = Some(residual);
        self
    }

    pub fn with_witness(mut self, witness: Option<Vector>) -> Self {
        self.witness = witness;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
