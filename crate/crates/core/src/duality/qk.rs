use crate::error::{Error, Result};
use crate::factorization::XwSolution;
use crate::frames::{verify_k_fusion, FrameBounds, FusionSystem, Subspace};
use crate::numerics::{self, Mat, ToleranceProfile};

use super::{DualCertificate, DualKind};

/// `T_W Q* T_V* = K`, together with the K*-fusion bounds `(C, D)` of `V`
/// and the inequalities `C ≥ 1/(B‖Q‖²)`, `D ≥ 1/(A‖Q‖²)`.
#[derive(Clone, Debug)]
pub struct QkDualReport {
    pub certificate: DualCertificate,
    pub q_norm: f64,
    /// Bounds of `W` as a K-fusion frame.
    pub w_bounds: Option<FrameBounds>,
    /// Bounds of `V` as a K*-fusion frame.
    pub v_bounds: Option<FrameBounds>,
    /// `C − 1/(B‖Q‖²)`.
    pub lower_margin: Option<f64>,
    /// `D − 1/(A‖Q‖²)`.
    pub upper_margin: Option<f64>,
}

/// `q` maps `Σ⊕W_i` coefficients to `Σ⊕V_i` coefficients.
pub fn is_qk_dual(
    w: &FusionSystem,
    v: &FusionSystem,
    q: &Mat,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<QkDualReport> {
    w.check_ambient(k.nrows(), "K")?;
    v.check_ambient(k.nrows(), "K")?;
    if q.shape() != (v.total_dim(), w.total_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "Q must be {}x{}, got {}x{}",
            v.total_dim(),
            w.total_dim(),
            q.nrows(),
            q.ncols()
        )));
    }
    let recon = w.synthesis() * q.transpose() * v.analysis();
    let k_norm = numerics::spectral_norm(k)?;
    let residual = numerics::spectral_norm(&(recon - k))?;
    let certificate = DualCertificate::exact(DualKind::Qk, residual, k_norm, tol).with_q(q.clone());

    let q_norm = numerics::spectral_norm(q)?;
    let w_bounds = verify_k_fusion(w, k, tol)?.bounds();
    let v_bounds = verify_k_fusion(v, &k.transpose(), tol)?.bounds();
    let (lower_margin, upper_margin) = match (w_bounds, v_bounds) {
        (Some(wb), Some(vb)) if q_norm > 0.0 => (
            Some(vb.lower - 1.0 / (wb.upper * q_norm * q_norm)),
            Some(vb.upper - 1.0 / (wb.lower * q_norm * q_norm)),
        ),
        _ => (None, None),
    };
    Ok(QkDualReport {
        certificate,
        q_norm,
        w_bounds,
        v_bounds,
        lower_margin,
        upper_margin,
    })
}

#[derive(Clone, Debug)]
pub struct QkDual {
    /// `Ŵ_i = X_i* W_i`, unit weights.
    pub system: FusionSystem,
    /// `Q = Γ*` with `Γ = X pinv(T_Ŵ*)`.
    pub q: Mat,
    pub report: QkDualReport,
}

/// The QK-dual `{X_i* W_i}` built from any solution `x` of `T_W X = K`
/// (coefficient rows laid out as in `T_W*`).
pub fn qk_dual_from_x(
    w: &FusionSystem,
    k: &Mat,
    x: &Mat,
    tol: &ToleranceProfile,
) -> Result<QkDual> {
    w.check_ambient(k.nrows(), "K")?;
    if x.shape() != (w.total_dim(), k.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "X must be {}x{}, got {}x{}",
            w.total_dim(),
            k.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    let residual = numerics::spectral_norm(&(w.synthesis() * x - k))?;
    let k_norm = numerics::spectral_norm(k)?;
    if !tol.residual_ok(residual, k_norm) {
        return Err(Error::InvalidArgument(format!(
            "T_W X differs from K by {residual:e}"
        )));
    }
    let members = w
        .block_dims()
        .into_iter()
        .zip(w.block_offsets())
        .map(|(d, at)| Ok((Subspace::span_of(&x.rows(at, d).transpose(), tol)?, 1.0)))
        .collect::<Result<Vec<_>>>()?;
    let system = FusionSystem::new(w.ambient_dim(), members)?;
    let gamma = x * numerics::pinv(&system.analysis(), tol)?;
    let q = gamma.transpose();
    let report = is_qk_dual(w, &system, &q, k, tol)?;
    Ok(QkDual { system, q, report })
}

/// [`qk_dual_from_x`] with the minimal-norm solution.
pub fn qk_dual_from_xw(xw: &XwSolution, k: &Mat, tol: &ToleranceProfile) -> Result<QkDual> {
    qk_dual_from_x(xw.system(), k, xw.x(), tol)
}

#[derive(Clone, Debug)]
pub struct ComponentPreserving {
    pub system: FusionSystem,
    /// Block-diagonal `Q` with blocks `U_{V_i}* Ψ_i`.
    pub q: Mat,
    pub report: QkDualReport,
}

/// `V_i = Ψ(W_i-block)` for `Ψ T_W* = K*`, with its block-diagonal `Q`.
pub fn component_preserving_duals(
    w: &FusionSystem,
    psi: &Mat,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<ComponentPreserving> {
    w.check_ambient(k.nrows(), "K")?;
    if psi.shape() != (k.ncols(), w.total_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "Psi must be {}x{}, got {}x{}",
            k.ncols(),
            w.total_dim(),
            psi.nrows(),
            psi.ncols()
        )));
    }
    let residual = numerics::spectral_norm(&(psi * w.analysis() - k.transpose()))?;
    if residual > tol.eq_abs * (1.0 + numerics::spectral_norm(k)?) {
        return Err(Error::InvalidArgument(format!(
            "Psi T_W* differs from K* by {residual:e}"
        )));
    }
    let dims = w.block_dims();
    let offsets = w.block_offsets();
    let blocks: Vec<Mat> = dims
        .iter()
        .zip(&offsets)
        .map(|(&d, &at)| psi.columns(at, d).into_owned())
        .collect();
    let members = blocks
        .iter()
        .map(|b| Ok((Subspace::span_of(b, tol)?, 1.0)))
        .collect::<Result<Vec<_>>>()?;
    let system = FusionSystem::new(w.ambient_dim(), members)?;

    let mut q = Mat::zeros(system.total_dim(), w.total_dim());
    for ((b, v_at), (w_at, member)) in blocks
        .iter()
        .zip(system.block_offsets())
        .zip(offsets.iter().zip(system.members()))
    {
        let qi = member.subspace.basis().transpose() * b;
        q.view_mut((v_at, *w_at), qi.shape()).copy_from(&qi);
    }
    let report = is_qk_dual(w, &system, &q, k, tol)?;
    Ok(ComponentPreserving { system, q, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::x_w;
    use crate::golden;
    use crate::random;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn example002_qk_dual_subspaces() {
        let (w, k) = golden::r3_instance();
        let xw = x_w(&w, &k, &tol()).unwrap();
        let d = qk_dual_from_xw(&xw, &k, &tol()).unwrap();
        let expect = golden::r3_canonical_dual();
        for (a, b) in d.system.subspaces().zip(expect.subspaces()) {
            assert!(a.equals(b, &tol()).unwrap());
        }
        assert!(d.report.certificate.pass);
        assert!(d.report.lower_margin.unwrap() >= -1e-7);
        assert!(d.report.upper_margin.unwrap() >= -1e-7);
    }

    #[test]
    fn identity_case_gives_inverse_images() {
        let mut r = random::rng(11);
        let (w, k) = random::k_fusion_instance(&mut r, 4, 3, 4).unwrap();
        let k = Mat::identity(4, 4) + &k * 0.0;
        let xw = x_w(&w, &k, &tol()).unwrap();
        let d = qk_dual_from_xw(&xw, &k, &tol()).unwrap();
        let s_inv = w.frame_operator().try_inverse().unwrap();
        for (a, m) in d.system.subspaces().zip(w.members()) {
            let b = m.subspace.image(&s_inv, &tol()).unwrap();
            assert!(a.equals(&b, &tol()).unwrap());
        }
        assert!(d.report.certificate.pass);
    }

    #[test]
    fn zero_q_fails_with_residual_norm_k() {
        let (w, k) = golden::r3_instance();
        let q = Mat::zeros(w.total_dim(), w.total_dim());
        let r = is_qk_dual(&w, &w, &q, &k, &tol()).unwrap();
        assert!(!r.certificate.pass);
        assert!((r.certificate.residual - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn component_preserving_from_perturbed_psi() {
        let mut r = random::rng(5);
        let (w, k) = random::k_fusion_instance(&mut r, 5, 4, 3).unwrap();
        let xw = x_w(&w, &k, &tol()).unwrap();
        let t_star = w.analysis();
        let proj = Mat::identity(w.total_dim(), w.total_dim())
            - &t_star * numerics::pinv(&t_star, &tol()).unwrap();
        let z = random::gaussian_matrix(&mut r, 5, w.total_dim());
        let psi = xw.x().transpose() + z * proj;
        let c = component_preserving_duals(&w, &psi, &k, &tol()).unwrap();
        assert!(
            c.report.certificate.pass,
            "residual {}",
            c.report.certificate.residual
        );
    }
}
