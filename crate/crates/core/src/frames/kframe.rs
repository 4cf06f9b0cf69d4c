use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::frames::FrameBounds;
use crate::numerics::{self, Mat, ToleranceProfile, Vector};

/// A finite vector family `{f_i}` in ℝⁿ, stored as the columns of `T_F`.
#[derive(Clone, Debug)]
pub struct KFrame {
    synthesis: Mat,
}

impl KFrame {
    pub fn new(ambient_dim: usize, vectors: &[Vector]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch(format!(
                "frame vectors must have length {ambient_dim}"
            )));
        }
        let synthesis = if vectors.is_empty() {
            Mat::zeros(ambient_dim, 0)
        } else {
            Mat::from_columns(vectors)
        };
        numerics::check_finite(&synthesis)?;
        Ok(Self { synthesis })
    }

    pub fn from_synthesis(synthesis: Mat) -> Result<Self> {
        numerics::check_finite(&synthesis)?;
        Ok(Self { synthesis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.synthesis.nrows()
    }

    pub fn len(&self) -> usize {
        self.synthesis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vector(&self, i: usize) -> Vector {
        self.synthesis.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    pub fn synthesis(&self) -> &Mat {
        &self.synthesis
    }

    /// `S_F = T_F T_F*`.
    pub fn frame_operator(&self) -> Mat {
        &self.synthesis * self.synthesis.transpose()
    }

    /// `Σ ⟨f, g_i⟩ f_i` with `self = {f_i}` and `dual = {g_i}`.
    pub fn reconstruct(&self, dual: &KFrame, f: &Vector) -> Vector {
        &self.synthesis * (dual.synthesis.transpose() * f)
    }

    /// `T_F T_G*`.
    pub fn reconstruction_operator(&self, dual: &KFrame) -> Mat {
        &self.synthesis * dual.synthesis.transpose()
    }

    pub fn concat(frames: &[KFrame]) -> Result<Self> {
        let blocks: Vec<&Mat> = frames.iter().map(|f| &f.synthesis).collect();
        Self::from_synthesis(numerics::hstack(&blocks)?)
    }
}

/// Optimal bounds of `A‖K*f‖² ≤ Σ|⟨f,f_i⟩|² ≤ B‖f‖²`, or a failure with a
/// column of `K` the family cannot see.
pub fn verify_k_frame(frame: &KFrame, k: &Mat, tol: &ToleranceProfile) -> Result<Certificate> {
    if k.nrows() != frame.ambient_dim() {
        return Err(Error::DimensionMismatch(
            "K and frame have different ambient dimensions".into(),
        ));
    }
    let s = frame.frame_operator();
    let upper = numerics::spectral_norm(&s)?;
    let inc = numerics::range_inclusion(k, frame.synthesis(), tol)?;
    if !inc.included {
        return Ok(
            Certificate::failed("R(K) is not contained in span{f_i}").with_witness(inc.witness)
        );
    }
    let alpha = numerics::max_rayleigh(&(k * k.transpose()), &s, tol)?;
    Ok(Certificate::passed().with_bounds(FrameBounds {
        lower: 1.0 / alpha,
        upper,
        optimal: true,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn orthonormal_basis_is_parseval() {
        let f = KFrame::from_synthesis(Mat::identity(3, 3)).unwrap();
        let b = verify_k_frame(&f, &Mat::identity(3, 3), &tol())
            .unwrap()
            .bounds
            .unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_axis_misses_diagonal_projection() {
        let f = KFrame::new(2, &[Vector::from_row_slice(&[1., 0.])]).unwrap();
        let k = Mat::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let c = verify_k_frame(&f, &k, &tol()).unwrap();
        assert!(!c.pass);
        assert!(c.witness.is_some());
    }
}
