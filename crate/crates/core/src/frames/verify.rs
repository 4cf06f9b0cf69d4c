use log::warn;

use crate::error::{Error, Result};
use crate::frames::{FrameBounds, FusionSystem, Subspace};
use crate::numerics::{self, Mat, ToleranceProfile, Vector};

/// Result of testing `A‖K*f‖² ≤ Σω_i²‖π_{W_i}f‖² ≤ B‖f‖²`.
#[derive(Clone, Debug)]
pub struct KFusionCheck {
    /// Optimal upper bound `‖S_W‖`.
    pub upper: f64,
    /// `R(K) ⊆ R(T_W)`.
    pub range_covered: bool,
    /// Optimal lower bound from the pencil `KK* ≤ α S_W`; zero when not covered.
    pub lower_pencil: f64,
    /// Optimal lower bound `‖pinv(T_W)K‖⁻²`; zero when not covered.
    pub lower_douglas: f64,
    /// The two lower bounds agree to `eq_rel`.
    pub lower_agree: bool,
    /// Column of `K` outside `R(T_W)`.
    pub witness: Option<Vector>,
    /// A direction `f` with `T_W* f = 0` and `K* f ≠ 0`.
    pub violating_direction: Option<Vector>,
}

impl KFusionCheck {
    pub fn is_k_fusion(&self) -> bool {
        self.range_covered
    }

    pub fn bounds(&self) -> Option<FrameBounds> {
        self.range_covered.then_some(FrameBounds {
            lower: self.lower_pencil,
            upper: self.upper,
            optimal: true,
        })
    }
}

fn warn_zero_members(w: &FusionSystem) {
    for (i, m) in w.members().iter().enumerate() {
        if m.subspace.is_zero() {
            warn!("member {i} is the zero subspace and contributes nothing");
        }
    }
}

/// Optimal K-fusion bounds of `w`, or a failure with a witness.
pub fn verify_k_fusion(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<KFusionCheck> {
    w.check_ambient(k.nrows(), "K")?;
    numerics::check_finite(k)?;
    if numerics::numerical_rank(k, tol)? == 0 {
        return Err(Error::ZeroOperator);
    }
    warn_zero_members(w);

    let t = w.synthesis();
    let s = w.frame_operator();
    let upper = numerics::spectral_norm(&s)?;
    let inc = numerics::range_inclusion(k, &t, tol)?;

    if !inc.included {
        let violating = inc.witness.as_ref().map(|col| {
            let q = numerics::range_basis(&t, tol).unwrap_or_else(|_| Mat::zeros(t.nrows(), 0));
            col - &q * (q.transpose() * col)
        });
        return Ok(KFusionCheck {
            upper,
            range_covered: false,
            lower_pencil: 0.0,
            lower_douglas: 0.0,
            lower_agree: true,
            witness: inc.witness,
            violating_direction: violating,
        });
    }

    let kkt = k * k.transpose();
    let alpha = numerics::max_rayleigh(&kkt, &s, tol)?;
    let lower_pencil = 1.0 / alpha;
    let x = numerics::pinv(&t, tol)? * k;
    let lower_douglas = numerics::spectral_norm(&x)?.powi(-2);

    Ok(KFusionCheck {
        upper,
        range_covered: true,
        lower_pencil,
        lower_douglas,
        lower_agree: tol.rel_eq(lower_pencil, lower_douglas),
        witness: None,
        violating_direction: None,
    })
}

/// Optimal fusion-frame bounds of `w` for the subspace `m`: the extreme
/// values of `⟨S_W f, f⟩` over unit `f ∈ m`.
///
/// The family is a fusion frame for `m` iff the returned lower bound is
/// positive (see [`FrameBounds::is_positive`]).
pub fn fusion_bounds_on(w: &FusionSystem, m: &Subspace) -> Result<FrameBounds> {
    w.check_ambient(m.ambient_dim(), "target subspace")?;
    let s = w.frame_operator();
    Ok(FrameBounds {
        lower: numerics::restricted_min_eigen(&s, m.basis())?.max(0.0),
        upper: numerics::restricted_max_eigen(&s, m.basis())?,
        optimal: true,
    })
}

impl FrameBounds {
    /// Lower bound is nonzero relative to the upper one at rank tolerance.
    pub fn is_positive(&self, tol: &ToleranceProfile) -> bool {
        self.lower > tol.rank_rel * self.upper.max(1.0)
    }
}

/// `W_i ∩ span{W_j : j ≠ i} = {0}` for every `i`.
pub fn is_minimal(w: &FusionSystem, tol: &ToleranceProfile) -> Result<bool> {
    for i in 0..w.len() {
        let wi = &w.member(i).subspace;
        if wi.is_zero() {
            continue;
        }
        let others: Vec<&Mat> = (0..w.len())
            .filter(|&j| j != i)
            .map(|j| w.member(j).subspace.basis())
            .collect();
        if others.is_empty() {
            continue;
        }
        let rest = Subspace::span_of(&numerics::hstack(&others)?, tol)?;
        if wi.intersection_dim(&rest, tol)? > 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct ExactnessReport {
    pub exact: bool,
    /// Bounds of `W` without member `j`, when that subfamily is still a
    /// K-fusion frame.
    pub removable: Vec<Option<FrameBounds>>,
}

/// Exact iff removing any single member destroys the K-fusion property.
pub fn is_exact(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<ExactnessReport> {
    if !verify_k_fusion(w, k, tol)?.is_k_fusion() {
        return Err(Error::Hypothesis("W is not a K-fusion frame".into()));
    }
    let removable = (0..w.len())
        .map(|j| Ok(verify_k_fusion(&w.without(j), k, tol)?.bounds()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactnessReport {
        exact: removable.iter().all(Option::is_none),
        removable,
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
    fn r4_example_bounds_and_structure() {
        let (w, k) = golden::r4_instance();
        let c = verify_k_fusion(&w, &k, &tol()).unwrap();
        let b = c.bounds().unwrap();
        assert!((b.lower - 0.5).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
        assert!(c.lower_agree);
        assert!(is_minimal(&w, &tol()).unwrap());
        let ex = is_exact(&w, &k, &tol()).unwrap();
        assert!(!ex.exact);
        assert!(ex.removable[0].is_none());
        let b1 = ex.removable[1].unwrap();
        assert!((b1.lower - 0.5).abs() < 1e-12 && (b1.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example002_bounds_and_removability() {
        let (w, k) = golden::r3_instance();
        let b = verify_k_fusion(&w, &k, &tol()).unwrap().bounds().unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
        assert!(!is_minimal(&w, &tol()).unwrap());
        let ex = is_exact(&w, &k, &tol()).unwrap();
        assert!(!ex.exact);
        assert!(ex.removable.iter().all(Option::is_some));
    }

    #[test]
    fn parseval_identity_case() {
        let w = FusionSystem::uniform(
            3,
            vec![
                Subspace::coordinate(3, &[0, 1]),
                Subspace::coordinate(3, &[2]),
            ],
        )
        .unwrap();
        let b = verify_k_fusion(&w, &Mat::identity(3, 3), &tol())
            .unwrap()
            .bounds()
            .unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncovered_range_gives_witness() {
        let w = FusionSystem::uniform(3, vec![Subspace::coordinate(3, &[0])]).unwrap();
        let c = verify_k_fusion(&w, &Mat::identity(3, 3), &tol()).unwrap();
        assert!(!c.is_k_fusion());
        let f = c.violating_direction.unwrap();
        assert!(f.norm() > 0.5);
        assert!((w.analysis() * &f).norm() < 1e-12);
    }

    #[test]
    fn duplicated_line_is_not_minimal() {
        let l = Subspace::coordinate(2, &[0]);
        let w = FusionSystem::uniform(2, vec![l.clone(), l]).unwrap();
        assert!(!is_minimal(&w, &tol()).unwrap());
    }

    #[test]
    fn single_member_covering_range_is_exact() {
        let k = Mat::from_diagonal(&Vector::from_row_slice(&[1.0, 0.0]));
        let w = FusionSystem::uniform(2, vec![Subspace::coordinate(2, &[0])]).unwrap();
        assert!(is_exact(&w, &k, &tol()).unwrap().exact);
    }

    #[test]
    fn zero_operator_is_rejected() {
        let w = FusionSystem::uniform(2, vec![Subspace::full(2)]).unwrap();
        assert!(matches!(
            verify_k_fusion(&w, &Mat::zeros(2, 2), &tol()),
            Err(Error::ZeroOperator)
        ));
    }
}
