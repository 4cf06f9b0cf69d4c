//! Douglas factorization `L₁ = L₂X` and the distinguished solution `X_w` of
//! `T_W X = K`.

use crate::error::{Error, Result};
use crate::frames::{BlockVector, FusionSystem, Subspace};
use crate::numerics::{self, Mat, RangeInclusion, ToleranceProfile, Vector};

/// The minimal-norm solution of `L₂X = L₁` with its three certificates.
#[derive(Clone, Debug)]
pub struct DouglasSolution {
    pub x: Mat,
    /// `‖X‖²`.
    pub norm_sq: f64,
    /// `inf{α : L₁L₁* ≤ α L₂L₂*}`.
    pub alpha_inf: f64,
    /// `N(X) = N(L₁)`.
    pub nullspace_match: bool,
    /// `R(X) ⊆ R(L₂*)`.
    pub range_containment: bool,
    /// `‖L₂X − L₁‖`.
    pub residual: f64,
}

impl DouglasSolution {
    /// `‖X‖² = α_inf` to `eq_rel`.
    pub fn norm_matches(&self, tol: &ToleranceProfile) -> bool {
        tol.rel_eq(self.norm_sq, self.alpha_inf)
    }

    pub fn certified(&self, tol: &ToleranceProfile) -> bool {
        self.norm_matches(tol) && self.nullspace_match && self.range_containment
    }
}

/// `R(L₁) ⊆ R(L₂)`, with a witness column of `L₁` on failure.
pub fn range_included(l1: &Mat, l2: &Mat, tol: &ToleranceProfile) -> Result<RangeInclusion> {
    numerics::range_inclusion(l1, l2, tol)
}

/// `X = pinv(L₂)L₁` with the norm, null-space and range certificates.
pub fn douglas_solve(l1: &Mat, l2: &Mat, tol: &ToleranceProfile) -> Result<DouglasSolution> {
    let inc = range_included(l1, l2, tol)?;
    if !inc.included {
        return Err(Error::Hypothesis(format!(
            "R(L1) is not contained in R(L2) (residual {:e})",
            inc.witness_residual
        )));
    }
    let x = numerics::pinv(l2, tol)? * l1;
    let residual = numerics::spectral_norm(&(l2 * &x - l1))?;
    let norm_sq = numerics::spectral_norm(&x)?.powi(2);
    let alpha_inf = numerics::max_rayleigh(&(l1 * l1.transpose()), &(l2 * l2.transpose()), tol)?;

    let nullspace_match = if numerics::numerical_rank(l1, tol)? == 0 {
        numerics::numerical_rank(&x, tol)? == 0
    } else {
        Subspace::span_of(&l1.transpose(), tol)?
            .equals(&Subspace::span_of(&x.transpose(), tol)?, tol)?
    };
    let range_containment = numerics::numerical_rank(&x, tol)? == 0
        || numerics::range_inclusion(&x, &l2.transpose(), tol)?.included;

    Ok(DouglasSolution {
        x,
        norm_sq,
        alpha_inf,
        nullspace_match,
        range_containment,
        residual,
    })
}

/// `X_w = pinv(T_W)K` read block by block.
#[derive(Clone, Debug)]
pub struct XwSolution {
    pub douglas: DouglasSolution,
    system: FusionSystem,
}

impl XwSolution {
    pub fn x(&self) -> &Mat {
        &self.douglas.x
    }

    pub fn system(&self) -> &FusionSystem {
        &self.system
    }

    /// Rows of `X_w` belonging to block `i` (`d_i × n`).
    pub fn block(&self, i: usize) -> Mat {
        let at = self.system.block_offsets()[i];
        let d = self.system.member(i).subspace.dim();
        self.douglas.x.rows(at, d).into_owned()
    }

    /// `X_i` as a map ℝⁿ → W_i ⊆ ℝⁿ (`basis_i · block_i`).
    pub fn component(&self, i: usize) -> Mat {
        self.system.member(i).subspace.basis() * self.block(i)
    }

    pub fn components(&self) -> Vec<Mat> {
        (0..self.system.len()).map(|i| self.component(i)).collect()
    }

    /// `X_w f` as an element of `Σ⊕W_i`.
    pub fn apply(&self, f: &Vector) -> BlockVector {
        BlockVector::from_flat(&self.system, &(&self.douglas.x * f)).expect("layout of T_W")
    }
}

/// Solves `T_W X = K`; fails when `W` is not a K-fusion frame.
pub fn x_w(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<XwSolution> {
    w.check_ambient(k.nrows(), "K")?;
    let douglas = douglas_solve(k, &w.synthesis(), tol)?;
    Ok(XwSolution {
        douglas,
        system: w.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn invertible_self_factor_is_identity() {
        let l = Mat::from_row_slice(2, 2, &[2., 1., 0., 3.]);
        let s = douglas_solve(&l, &l, &tol()).unwrap();
        assert!((&s.x - Mat::identity(2, 2)).amax() < 1e-12);
        assert!((s.norm_sq - 1.0).abs() < 1e-12);
        assert!(s.certified(&tol()));
    }

    #[test]
    fn rank_one_cannot_cover_identity() {
        let l2 = Mat::from_row_slice(2, 2, &[1., 0., 0., 0.]);
        let inc = range_included(&Mat::identity(2, 2), &l2, &tol()).unwrap();
        assert!(!inc.included);
        assert!(inc.witness.is_some());
        assert!(douglas_solve(&Mat::identity(2, 2), &l2, &tol()).is_err());
    }

    #[test]
    fn example002_factor_matches_displayed_blocks() {
        let (w, k) = golden::r3_instance();
        let xw = x_w(&w, &k, &tol()).unwrap();
        assert!((xw.douglas.norm_sq - 1.0).abs() < 1e-12);
        assert!(xw.douglas.certified(&tol()));
        let (a, b, c) = (0.3, -1.7, 2.2);
        let f = Vector::from_row_slice(&[a, b, c]);
        let comps: Vec<Vector> = xw.apply(&f).ambient_components(&w);
        let expect = [
            Vector::from_row_slice(&[a / 2., a / 2., b / 2.]),
            Vector::from_row_slice(&[0., 0., b / 2.]),
            Vector::from_row_slice(&[a / 2., a / 2., 0.]),
        ];
        for (got, want) in comps.iter().zip(&expect) {
            assert!((got - want).amax() < 1e-12, "{got} vs {want}");
        }
        let kernel = Vector::from_row_slice(&[0., 0., 1.]);
        assert!(xw.apply(&kernel).norm() < 1e-12);
    }

    #[test]
    fn identity_case_is_analysis_of_inverse() {
        let (w, _) = golden::r3_instance();
        let w = FusionSystem::new(
            3,
            w.members()
                .iter()
                .map(|m| (m.subspace.clone(), m.weight))
                .chain([(Subspace::coordinate(3, &[0]), 0.7)])
                .collect(),
        )
        .unwrap();
        let xw = x_w(&w, &Mat::identity(3, 3), &tol()).unwrap();
        let s_inv = w.frame_operator().try_inverse().unwrap();
        assert!((xw.x() - w.analysis() * s_inv).amax() < 1e-10);
    }
}
