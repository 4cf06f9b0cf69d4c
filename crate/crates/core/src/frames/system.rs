use crate::error::{Error, Result};
use crate::frames::Subspace;
use crate::numerics::{Mat, Vector};

#[derive(Clone, Debug)]
pub struct Member {
    pub subspace: Subspace,
    pub weight: f64,
}

/// A weighted family `{(W_i, ω_i)}` of subspaces of a common ℝⁿ.
///
/// Coordinates on the direct sum `Σ⊕W_i` are the stacked coefficient
/// vectors of each block in its member's orthonormal basis.
#[derive(Clone, Debug)]
pub struct FusionSystem {
    ambient_dim: usize,
    members: Vec<Member>,
}

impl FusionSystem {
    pub fn new(ambient_dim: usize, members: Vec<(Subspace, f64)>) -> Result<Self> {
        let mut out = Vec::with_capacity(members.len());
        for (index, (subspace, weight)) in members.into_iter().enumerate() {
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidWeight { index, weight });
            }
            if subspace.ambient_dim() != ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "member {index} lives in ℝ^{}, system in ℝ^{ambient_dim}",
                    subspace.ambient_dim()
                )));
            }
            out.push(Member { subspace, weight });
        }
        Ok(Self {
            ambient_dim,
            members: out,
        })
    }

    /// All weights equal to one.
    pub fn uniform(ambient_dim: usize, subspaces: Vec<Subspace>) -> Result<Self> {
        Self::new(
            ambient_dim,
            subspaces.into_iter().map(|s| (s, 1.0)).collect(),
        )
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Member {
        &self.members[i]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    pub fn subspaces(&self) -> impl Iterator<Item = &Subspace> {
        self.members.iter().map(|m| &m.subspace)
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.subspace.dim()).collect()
    }

    /// Dimension of `Σ⊕W_i`.
    pub fn total_dim(&self) -> usize {
        self.block_dims().iter().sum()
    }

    /// Column offset of each block inside the coefficient space.
    pub fn block_offsets(&self) -> Vec<usize> {
        self.block_dims()
            .iter()
            .scan(0, |acc, &d| {
                let at = *acc;
                *acc += d;
                Some(at)
            })
            .collect()
    }

    pub fn sum_weights_sq(&self) -> f64 {
        self.members.iter().map(|m| m.weight * m.weight).sum()
    }

    /// `T_W`: block `i` of columns is `ω_i · basis_i`.
    pub fn synthesis(&self) -> Mat {
        let mut t = Mat::zeros(self.ambient_dim, self.total_dim());
        for (m, at) in self.members.iter().zip(self.block_offsets()) {
            let d = m.subspace.dim();
            t.columns_mut(at, d)
                .copy_from(&(m.subspace.basis() * m.weight));
        }
        t
    }

    /// `T_W* = T_Wᵀ` in coefficient coordinates.
    pub fn analysis(&self) -> Mat {
        self.synthesis().transpose()
    }

    /// `S_W = Σ ω_i² π_{W_i}`.
    pub fn frame_operator(&self) -> Mat {
        let n = self.ambient_dim;
        self.members.iter().fold(Mat::zeros(n, n), |acc, m| {
            acc + m.subspace.projector() * (m.weight * m.weight)
        })
    }

    /// `Σ ω_i² ‖π_{W_i} f‖²`.
    pub fn energy(&self, f: &Vector) -> f64 {
        self.members
            .iter()
            .map(|m| m.weight * m.weight * (m.subspace.basis().transpose() * f).norm_squared())
            .sum()
    }

    /// `T_W* f` as a block vector.
    pub fn analyze(&self, f: &Vector) -> BlockVector {
        BlockVector::from_flat(self, &(self.analysis() * f))
            .expect("analysis output matches block layout")
    }

    /// `T_W {f_i} = Σ ω_i f_i`.
    pub fn synthesize(&self, blocks: &BlockVector) -> Result<Vector> {
        Ok(self.synthesis() * blocks.to_flat_checked(self)?)
    }

    /// The system with member `j` removed.
    pub fn without(&self, j: usize) -> Self {
        let mut members = self.members.clone();
        members.remove(j);
        Self {
            ambient_dim: self.ambient_dim,
            members,
        }
    }

    /// Same subspaces, new weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} members",
                weights.len(),
                self.len()
            )));
        }
        Self::new(
            self.ambient_dim,
            self.members
                .iter()
                .zip(weights)
                .map(|(m, &w)| (m.subspace.clone(), w))
                .collect(),
        )
    }

    /// Family of images `{(op·W_i, ω_i)}`.
    pub fn map_subspaces(&self, op: &Mat, tol: &crate::ToleranceProfile) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|m| Ok((m.subspace.image(op, tol)?, m.weight)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(op.nrows(), members)
    }

    pub(crate) fn check_ambient(&self, n: usize, what: &str) -> Result<()> {
        if self.ambient_dim != n {
            return Err(Error::DimensionMismatch(format!(
                "{what} has dimension {n}, system lives in ℝ^{}",
                self.ambient_dim
            )));
        }
        Ok(())
    }

    pub(crate) fn check_same_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "systems have {} and {} members",
                self.len(),
                other.len()
            )));
        }
        self.check_ambient(other.ambient_dim, "other system")
    }
}

/// Element of `Σ⊕W_i`: one coefficient vector per member, in that member's
/// orthonormal basis. Coefficients are unweighted.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    pub blocks: Vec<Vector>,
}

impl BlockVector {
    pub fn from_flat(system: &FusionSystem, flat: &Vector) -> Result<Self> {
        if flat.len() != system.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector of length {} for a direct sum of dimension {}",
                flat.len(),
                system.total_dim()
            )));
        }
        let blocks = system
            .block_dims()
            .into_iter()
            .zip(system.block_offsets())
            .map(|(d, at)| flat.rows(at, d).into_owned())
            .collect();
        Ok(Self { blocks })
    }

    pub fn zeros(system: &FusionSystem) -> Self {
        Self {
            blocks: system.block_dims().into_iter().map(Vector::zeros).collect(),
        }
    }

    pub fn to_flat(&self) -> Vector {
        let total: usize = self.blocks.iter().map(|b| b.len()).sum();
        let mut out = Vector::zeros(total);
        let mut at = 0;
        for b in &self.blocks {
            out.rows_mut(at, b.len()).copy_from(b);
            at += b.len();
        }
        out
    }

    fn to_flat_checked(&self, system: &FusionSystem) -> Result<Vector> {
        if self.blocks.len() != system.len()
            || self
                .blocks
                .iter()
                .zip(system.block_dims())
                .any(|(b, d)| b.len() != d)
        {
            return Err(Error::DimensionMismatch(
                "block vector does not match the system's block layout".into(),
            ));
        }
        Ok(self.to_flat())
    }

    pub fn norm_squared(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// The blocks as vectors of the ambient space (`basis_i · block_i`).
    pub fn ambient_components(&self, system: &FusionSystem) -> Vec<Vector> {
        self.blocks
            .iter()
            .zip(system.subspaces())
            .map(|(b, s)| s.basis() * b)
            .collect()
    }
}

/// Frame bounds `(A, B)` of an inequality `A‖K*f‖² ≤ Σω_i²‖π_{W_i}f‖² ≤ B‖f‖²`.
///
/// For a general `K` nothing forces `A ≤ B` (shrinking `K` grows `A`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub optimal: bool,
}
