use log::warn;

use crate::error::{Error, Result};
use crate::numerics::{self, hstack, Mat, ToleranceProfile, Vector};

/// A subspace of ℝⁿ stored as an orthonormal basis (`ambient_dim × dim`).
///
/// The zero subspace is a valid value with `dim() == 0`.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    /// Span of a nonempty list of vectors; dimension is the numerical rank.
    pub fn from_spanning(vectors: &[Vector], tol: &ToleranceProfile) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty spanning set".into()))?;
        let n = first.len();
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch(
                "spanning vectors have different lengths".into(),
            ));
        }
        let m = Mat::from_columns(vectors);
        let s = Self::span_of(&m, tol)?;
        if s.is_zero() {
            warn!("spanning set is numerically zero; using the zero subspace");
        }
        Ok(s)
    }

    /// Column space of `m`.
    pub fn span_of(m: &Mat, tol: &ToleranceProfile) -> Result<Self> {
        Ok(Self {
            basis: numerics::range_basis(m, tol)?,
        })
    }

    /// Wraps a basis that is already orthonormal (checked to `eq_abs`).
    pub fn from_orthonormal(basis: Mat, tol: &ToleranceProfile) -> Result<Self> {
        numerics::check_finite(&basis)?;
        let d = basis.ncols();
        let gram = basis.transpose() * &basis;
        let err = (gram - Mat::identity(d, d)).amax();
        if err > tol.eq_abs {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: Mat::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: Mat::identity(ambient_dim, ambient_dim),
        }
    }

    /// Span of the standard basis vectors with the given (0-based) indices.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut basis = Mat::zeros(ambient_dim, indices.len());
        for (k, &i) in indices.iter().enumerate() {
            basis[(i, k)] = 1.0;
        }
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// Orthogonal projector `basis · basisᵀ`.
    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, f: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * f)
    }

    /// Image `op(V)` of this subspace under a linear map.
    pub fn image(&self, op: &Mat, tol: &ToleranceProfile) -> Result<Self> {
        if op.ncols() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator with {} columns applied to a subspace of ℝ^{}",
                op.ncols(),
                self.ambient_dim()
            )));
        }
        if self.is_zero() {
            return Ok(Self::zero(op.nrows()));
        }
        Self::span_of(&(op * &self.basis), tol)
    }

    pub fn orthogonal_complement(&self) -> Result<Self> {
        Ok(Self {
            basis: numerics::complement(&self.basis)?,
        })
    }

    fn check_same_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "subspaces of ℝ^{} and ℝ^{}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok(())
    }

    /// `self ⊆ other`.
    pub fn is_contained_in(&self, other: &Self, tol: &ToleranceProfile) -> Result<bool> {
        self.check_same_ambient(other)?;
        if self.is_zero() {
            return Ok(true);
        }
        if self.dim() > other.dim() {
            return Ok(false);
        }
        Ok(numerics::range_inclusion(&self.basis, &other.basis, tol)?.included)
    }

    pub fn equals(&self, other: &Self, tol: &ToleranceProfile) -> Result<bool> {
        Ok(self.dim() == other.dim()
            && self.is_contained_in(other, tol)?
            && other.is_contained_in(self, tol)?)
    }

    pub fn sum(&self, other: &Self, tol: &ToleranceProfile) -> Result<Self> {
        self.check_same_ambient(other)?;
        Self::span_of(&hstack(&[&self.basis, &other.basis])?, tol)
    }

    /// `self ∩ other`, from the null space of `[A | -B]`.
    pub fn intersection(&self, other: &Self, tol: &ToleranceProfile) -> Result<Self> {
        self.check_same_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ambient_dim()));
        }
        let joint = hstack(&[&self.basis, &(-&other.basis)])?;
        let null = numerics::null_basis(&joint, tol)?;
        if null.ncols() == 0 {
            return Ok(Self::zero(self.ambient_dim()));
        }
        let coeffs = null.rows(0, self.dim()).into_owned();
        Self::span_of(&(&self.basis * coeffs), tol)
    }

    /// `dim(self ∩ other)` by the rank identity `dA + dB − dim(A + B)`.
    pub fn intersection_dim(&self, other: &Self, tol: &ToleranceProfile) -> Result<usize> {
        let sum = self.sum(other, tol)?;
        Ok(self.dim() + other.dim() - sum.dim())
    }

    pub fn is_orthogonal_to(&self, other: &Self, tol: &ToleranceProfile) -> Result<bool> {
        self.check_same_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(true);
        }
        Ok((self.basis.transpose() * &other.basis).amax() <= tol.eq_abs)
    }
}
