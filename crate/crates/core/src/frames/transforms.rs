use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::frames::verify::{fusion_bounds_on, verify_k_fusion, KFusionCheck};
use crate::frames::{FrameBounds, FusionSystem, Subspace};
use crate::numerics::{self, Mat, ToleranceProfile};

/// A derived family together with the certificate for its claimed property.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub system: FusionSystem,
    pub certificate: Certificate,
}

fn subspace_certificate(
    system: &FusionSystem,
    target: &Subspace,
    tol: &ToleranceProfile,
) -> Result<Certificate> {
    let bounds = fusion_bounds_on(system, target)?;
    let cert = if bounds.is_positive(tol) {
        Certificate::passed()
    } else {
        Certificate::failed("family does not bound the target subspace from below")
    };
    Ok(cert.with_bounds(bounds))
}

fn k_fusion_certificate(check: &KFusionCheck) -> Certificate {
    match check.bounds() {
        Some(b) => Certificate::passed().with_bounds(b),
        None => Certificate::failed("not a K-fusion frame")
            .with_witness(check.violating_direction.clone()),
    }
}

/// `{(K†W_i, ω_i)}` as a fusion frame for `R(K*)`.
pub fn transform_kdag(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<Transformed> {
    w.check_ambient(k.nrows(), "K")?;
    let svd = numerics::svd(k)?;
    if svd.rank(tol) == 0 {
        return Err(Error::ZeroOperator);
    }
    let system = w.map_subspaces(&svd.pinv(tol), tol)?;
    let target = Subspace::span_of(&k.transpose(), tol)?;
    let certificate = subspace_certificate(&system, &target, tol)?;
    Ok(Transformed {
        system,
        certificate,
    })
}

/// `pinv(S_W π_{R(K)})`, the matrix realizing `S_W⁻¹ π_{S_W(R(K))}`.
pub fn restricted_inverse(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<Mat> {
    w.check_ambient(k.nrows(), "K")?;
    let pr = numerics::range_projector(k, tol)?;
    numerics::pinv(&(w.frame_operator() * pr), tol)
}

/// `{(S_W⁻¹π_{S_W(R(K))}W_i, ω_i)}` as a fusion frame for `R(K)`.
pub fn transform_sinv(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<Transformed> {
    if !verify_k_fusion(w, k, tol)?.is_k_fusion() {
        return Err(Error::Hypothesis("W is not a K-fusion frame".into()));
    }
    let system = w.map_subspaces(&restricted_inverse(w, k, tol)?, tol)?;
    let target = Subspace::span_of(k, tol)?;
    let certificate = subspace_certificate(&system, &target, tol)?;
    Ok(Transformed {
        system,
        certificate,
    })
}

#[derive(Clone, Debug)]
pub struct QTransform {
    pub system: FusionSystem,
    /// `QW` checked against `QK`.
    pub qk: KFusionCheck,
    /// `‖KQ − QK‖ ≤ eq_abs`.
    pub commutes: bool,
    /// `QW` checked against `K`, when `Q` commutes with `K`.
    pub k: Option<KFusionCheck>,
}

/// `{(QW_i, ω_i)}` for invertible `Q`.
pub fn transform_q(
    w: &FusionSystem,
    q: &Mat,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<QTransform> {
    w.check_ambient(k.nrows(), "K")?;
    let n = w.ambient_dim();
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "Q must be {n}x{n}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if numerics::numerical_rank(q, tol)? < n {
        return Err(Error::Singular("Q is not invertible".into()));
    }
    let system = w.map_subspaces(q, tol)?;
    let qk = verify_k_fusion(&system, &(q * k), tol)?;
    let commutes = numerics::spectral_norm(&(k * q - q * k))? <= tol.eq_abs;
    let k_check = if commutes {
        Some(verify_k_fusion(&system, k, tol)?)
    } else {
        None
    };
    Ok(QTransform {
        system,
        qk,
        commutes,
        k: k_check,
    })
}

/// Passes when `R(Q) ⊆ R(K)`; the bounds are the optimal Q-fusion bounds of
/// `W`, and the note records the guaranteed floor `A/λ²`.
pub fn weaken_to_q(
    w: &FusionSystem,
    k: &Mat,
    q: &Mat,
    tol: &ToleranceProfile,
) -> Result<Certificate> {
    w.check_ambient(k.nrows(), "K")?;
    w.check_ambient(q.nrows(), "Q")?;
    let inc = numerics::range_inclusion(q, k, tol)?;
    if !inc.included {
        return Ok(Certificate::failed("R(Q) is not contained in R(K)").with_witness(inc.witness));
    }
    let base = verify_k_fusion(w, k, tol)?;
    let Some(kb) = base.bounds() else {
        return Ok(k_fusion_certificate(&base));
    };
    let lambda_sq = numerics::max_rayleigh(&(q * q.transpose()), &(k * k.transpose()), tol)?;
    let floor = kb.lower / lambda_sq;
    let qb = verify_k_fusion(w, q, tol)?
        .bounds()
        .expect("R(Q) ⊆ R(K) ⊆ R(T_W)");
    let ok = qb.lower >= floor * (1.0 - tol.eq_rel);
    let cert = if ok {
        Certificate::passed()
    } else {
        Certificate::failed("Q-fusion lower bound below A/λ²")
    };
    Ok(cert
        .with_bounds(qb)
        .note(format!("lambda^2 = {lambda_sq:e}, A/lambda^2 = {floor:e}")))
}

/// How the input of [`k_image_frame`] is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageMode {
    /// The input is a fusion frame for `R(K*)`.
    Relative,
    /// The input is a fusion frame for the whole space and is first
    /// intersected with `R(K*)`.
    Intersect,
}

/// `{(K W_i, ω_i)}` with its K-fusion certificate.
///
/// In [`ImageMode::Intersect`] the intersected family is not always a fusion
/// frame for `R(K*)`; the certificate then fails and says so.
pub fn k_image_frame(
    w: &FusionSystem,
    k: &Mat,
    mode: ImageMode,
    tol: &ToleranceProfile,
) -> Result<Transformed> {
    w.check_ambient(k.ncols(), "domain of K")?;
    let rk_star = Subspace::span_of(&k.transpose(), tol)?;
    let (source, mut notes) = match mode {
        ImageMode::Relative => (w.clone(), Vec::new()),
        ImageMode::Intersect => {
            let full = fusion_bounds_on(w, &Subspace::full(w.ambient_dim()))?;
            if !full.is_positive(tol) {
                return Err(Error::Hypothesis("W is not a fusion frame".into()));
            }
            let members = w
                .members()
                .iter()
                .map(|m| Ok((m.subspace.intersection(&rk_star, tol)?, m.weight)))
                .collect::<Result<Vec<_>>>()?;
            (FusionSystem::new(w.ambient_dim(), members)?, Vec::new())
        }
    };
    let on_target: FrameBounds = fusion_bounds_on(&source, &rk_star)?;
    if !on_target.is_positive(tol) {
        match mode {
            ImageMode::Relative => {
                return Err(Error::Hypothesis(
                    "W is not a fusion frame for R(K*)".into(),
                ));
            }
            ImageMode::Intersect => {
                notes.push("the family W_i ∩ R(K*) is not a fusion frame for R(K*)".to_string())
            }
        }
    }
    let system = source.map_subspaces(k, tol)?;
    let mut certificate = k_fusion_certificate(&verify_k_fusion(&system, k, tol)?);
    certificate.notes.extend(notes);
    Ok(Transformed {
        system,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::numerics::Vector;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn line(x: &[f64]) -> Subspace {
        Subspace::from_spanning(&[Vector::from_row_slice(x)], &tol()).unwrap()
    }

    #[test]
    fn kdag_of_example002_member() {
        let (w, k) = golden::r3_instance();
        let t = transform_kdag(&w, &k, &tol()).unwrap();
        assert!(t
            .system
            .member(1)
            .subspace
            .equals(&line(&[0., 1., 0.]), &tol())
            .unwrap());
        assert!(t.certificate.pass);
    }

    #[test]
    fn kdag_identity_returns_w() {
        let (w, _) = golden::r3_instance();
        let t = transform_kdag(&w, &Mat::identity(3, 3), &tol()).unwrap();
        for (a, b) in t.system.subspaces().zip(w.subspaces()) {
            assert!(a.equals(b, &tol()).unwrap());
        }
    }

    #[test]
    fn sinv_fixes_example_members() {
        let (w, k) = golden::r3_instance();
        let t = transform_sinv(&w, &k, &tol()).unwrap();
        for (a, b) in t.system.subspaces().zip(w.subspaces()) {
            assert!(a.equals(b, &tol()).unwrap());
        }
        assert!(t.certificate.pass);
    }

    #[test]
    fn doubling_q_quarters_the_lower_bound() {
        let (w, k) = golden::r3_instance();
        let q = Mat::identity(3, 3) * 2.0;
        let t = transform_q(&w, &q, &k, &tol()).unwrap();
        let b = t.qk.bounds().unwrap();
        assert!((b.lower - 0.25).abs() < 1e-12);
        assert!((b.upper - 2.0).abs() < 1e-12);
        assert!(t.commutes);
        assert!(t.k.unwrap().is_k_fusion());
    }

    #[test]
    fn singular_q_is_rejected() {
        let (w, k) = golden::r3_instance();
        let q = Mat::from_diagonal(&Vector::from_row_slice(&[1., 1., 0.]));
        assert!(matches!(
            transform_q(&w, &q, &k, &tol()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn weaken_to_subrange_and_failure() {
        let (w, k) = golden::r3_instance();
        assert!(weaken_to_q(&w, &k, &k, &tol()).unwrap().pass);
        let pk = numerics::range_projector(&k, &tol()).unwrap() * &k;
        assert!(weaken_to_q(&w, &k, &pk, &tol()).unwrap().pass);
        let p = Mat::from_diagonal(&Vector::from_row_slice(&[1., 0.]));
        let w2 = FusionSystem::uniform(2, vec![Subspace::coordinate(2, &[0])]).unwrap();
        let c = weaken_to_q(&w2, &p, &Mat::identity(2, 2), &tol()).unwrap();
        assert!(!c.pass);
        assert!(c.witness.is_some());
    }

    #[test]
    fn image_of_line_under_k() {
        let (_, k) = golden::r3_instance();
        let w = FusionSystem::uniform(
            3,
            vec![Subspace::coordinate(3, &[0]), Subspace::coordinate(3, &[1])],
        )
        .unwrap();
        let t = k_image_frame(&w, &k, ImageMode::Relative, &tol()).unwrap();
        assert!(t
            .system
            .member(0)
            .subspace
            .equals(&line(&[1., 1., 0.]), &tol())
            .unwrap());
        assert!(t.certificate.pass);
    }

    #[test]
    fn intersect_mode_can_lose_the_range() {
        // Coordinate axes meet the diagonal line only at 0.
        let k = Mat::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let w = FusionSystem::uniform(
            2,
            vec![Subspace::coordinate(2, &[0]), Subspace::coordinate(2, &[1])],
        )
        .unwrap();
        let t = k_image_frame(&w, &k, ImageMode::Intersect, &tol()).unwrap();
        assert!(!t.certificate.pass);
    }
}
