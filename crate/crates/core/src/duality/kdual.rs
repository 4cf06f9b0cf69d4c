use crate::error::{Error, Result};
use crate::factorization::x_w;
use crate::frames::{is_minimal, restricted_inverse, verify_k_fusion, FusionSystem, Subspace};
use crate::numerics::{self, Mat, ToleranceProfile};

use super::{DualCertificate, DualKind};

/// `φ_vw{f_i} = {π_{W_i}(S_W⁻¹)*K f_i}` in coefficient coordinates: block
/// `i` is `U_{W_i}* Pᵀ K U_{V_i}` with `P = pinv(S_W π_{R(K)})`.
#[derive(Clone, Debug)]
pub struct PhiOperator {
    pub blocks: Vec<Mat>,
}

impl PhiOperator {
    pub fn new(
        w: &FusionSystem,
        v: &FusionSystem,
        k: &Mat,
        tol: &ToleranceProfile,
    ) -> Result<Self> {
        w.check_same_len(v)?;
        w.check_ambient(k.nrows(), "K")?;
        let core = restricted_inverse(w, k, tol)?.transpose() * k;
        let blocks = w
            .subspaces()
            .zip(v.subspaces())
            .map(|(wi, vi)| wi.basis().transpose() * &core * vi.basis())
            .collect();
        Ok(Self { blocks })
    }

    /// Block-diagonal matrix from `Σ⊕V_i` to `Σ⊕W_i` coefficients.
    pub fn matrix(&self) -> Mat {
        let rows: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let cols: usize = self.blocks.iter().map(|b| b.ncols()).sum();
        let mut out = Mat::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in &self.blocks {
            out.view_mut((r, c), b.shape()).copy_from(b);
            r += b.nrows();
            c += b.ncols();
        }
        out
    }
}

/// `π_{R(K)} T_W φ_vw T_V*`.
pub fn k_dual_reconstruction(
    w: &FusionSystem,
    v: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<Mat> {
    let phi = PhiOperator::new(w, v, k, tol)?;
    let pr = numerics::range_projector(k, tol)?;
    Ok(pr * w.synthesis() * phi.matrix() * v.analysis())
}

/// `K = π_{R(K)} T_W φ_vw T_V*`, with `V`'s own weights.
pub fn is_k_dual(
    w: &FusionSystem,
    v: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<DualCertificate> {
    let recon = k_dual_reconstruction(w, v, k, tol)?;
    let residual = numerics::spectral_norm(&(recon - k))?;
    Ok(DualCertificate::exact(
        DualKind::K,
        residual,
        numerics::spectral_norm(k)?,
        tol,
    ))
}

/// Bessel bound of the canonical K-dual against the a-priori estimate
/// `B‖K‖²‖K†‖²‖S_W‖²‖S_W⁻¹‖²`.
#[derive(Clone, Debug)]
pub struct BesselReport {
    /// Optimal Bessel bound `‖S_W̃‖`.
    pub bessel_bound: f64,
    /// Estimate with `B` the Bessel bound of `{(π_{S_W(R(K))}W_i, ω_i)}`.
    pub estimate: f64,
    /// Same product with `B = ‖S_W‖`; not an upper bound in general.
    pub estimate_with_w_bound: f64,
    pub within_estimate: bool,
}

#[derive(Clone, Debug)]
pub struct CanonicalDual {
    pub system: FusionSystem,
    pub certificate: DualCertificate,
    pub bessel: BesselReport,
}

fn require_k_fusion(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<()> {
    if verify_k_fusion(w, k, tol)?.is_k_fusion() {
        Ok(())
    } else {
        Err(Error::Hypothesis("W is not a K-fusion frame".into()))
    }
}

/// `W̃_i = K* S_W⁻¹ π_{S_W(R(K))} W_i` with weights `ω_i`.
pub fn canonical_k_dual(
    w: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<CanonicalDual> {
    require_k_fusion(w, k, tol)?;
    let p = restricted_inverse(w, k, tol)?;
    let system = w.map_subspaces(&(k.transpose() * &p), tol)?;
    let certificate = is_k_dual(w, &system, k, tol)?;

    let s = w.frame_operator();
    let s_norm = numerics::spectral_norm(&s)?;
    let pr = numerics::range_projector(k, tol)?;
    let target = numerics::range_projector(&(&s * pr), tol)?;
    let projected_bound =
        numerics::spectral_norm(&w.map_subspaces(&target, tol)?.frame_operator())?;
    let factor = numerics::spectral_norm(k)?.powi(2)
        * numerics::spectral_norm(&numerics::pinv(k, tol)?)?.powi(2)
        * s_norm.powi(2)
        * numerics::spectral_norm(&p)?.powi(2);
    let bessel_bound = numerics::spectral_norm(&system.frame_operator())?;
    let estimate = projected_bound * factor;
    let bessel = BesselReport {
        bessel_bound,
        estimate,
        estimate_with_w_bound: s_norm * factor,
        within_estimate: bessel_bound <= estimate * (1.0 + tol.eq_rel) + tol.eq_abs,
    };
    Ok(CanonicalDual {
        system,
        certificate,
        bessel,
    })
}

/// Replaces `V_j` of `base` by `V_j ⊕ U_j` for `U_j ⊥ V_j`.
pub fn enlarge_dual(
    w: &FusionSystem,
    k: &Mat,
    base: &FusionSystem,
    j: usize,
    u_j: &Subspace,
    tol: &ToleranceProfile,
) -> Result<(FusionSystem, DualCertificate)> {
    w.check_same_len(base)?;
    if j >= base.len() {
        return Err(Error::InvalidArgument(format!(
            "member index {j} out of range"
        )));
    }
    let current = &base.member(j).subspace;
    if !current.is_orthogonal_to(u_j, tol)? {
        return Err(Error::InvalidArgument(format!(
            "added subspace is not orthogonal to the dual member at index {j}"
        )));
    }
    let enlarged = current.sum(u_j, tol)?;
    let members = base
        .members()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            (
                if i == j {
                    enlarged.clone()
                } else {
                    m.subspace.clone()
                },
                m.weight,
            )
        })
        .collect();
    let v = FusionSystem::new(base.ambient_dim(), members)?;
    let cert = is_k_dual(w, &v, k, tol)?;
    Ok((v, cert))
}

#[derive(Clone, Debug)]
pub struct SwsReport {
    /// `S_W(S_W(R(K))) ⊆ R(K)`.
    pub condition: bool,
    /// `W̃_i = (X_w*)_i W_i` for each `i`.
    pub per_member: Vec<bool>,
    pub families_equal: bool,
    pub agree: bool,
    /// `X_w = T_W* (S_W⁻¹)* K` as operators.
    pub operators_equal: bool,
    pub operator_agree: bool,
}

/// The canonical K-dual coincides with `{X_i* W_i}` iff
/// `S_W(S_W(R(K))) ⊆ R(K)`; both sides are computed independently.
pub fn check_sws_range_condition(
    w: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<SwsReport> {
    let canonical = canonical_k_dual(w, k, tol)?;
    let xw = x_w(w, k, tol)?;
    let rk = numerics::range_basis(k, tol)?;
    let s = w.frame_operator();
    let condition = numerics::range_inclusion(&(&s * &s * &rk), &rk, tol)?.included;
    let per_member = (0..w.len())
        .map(|i| {
            let xi = Subspace::span_of(&xw.block(i).transpose(), tol)?;
            xi.equals(&canonical.system.member(i).subspace, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let families_equal = per_member.iter().all(|&b| b);
    let m = w.analysis() * restricted_inverse(w, k, tol)?.transpose() * k;
    let operators_equal = tol.residual_ok(
        numerics::spectral_norm(&(xw.x() - m))?,
        numerics::spectral_norm(xw.x())?,
    );
    Ok(SwsReport {
        condition,
        per_member,
        families_equal,
        agree: condition == families_equal,
        operators_equal,
        operator_agree: condition == operators_equal,
    })
}

#[derive(Clone, Debug)]
pub struct MinimalDualReport {
    pub minimal: bool,
    /// `span{W_i} ∩ R(K)^⊥ = {0}`.
    pub span_hypothesis: bool,
    pub is_dual: DualCertificate,
    /// `W̃_i ⊆ V_i` for each `i`.
    pub per_member: Vec<bool>,
    pub contains: bool,
    pub agree: bool,
}

impl MinimalDualReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.minimal && self.span_hypothesis
    }
}

/// For minimal `W` with `span{W_i} ∩ R(K)^⊥ = {0}`: `V` is a K-dual iff it
/// contains the canonical K-dual memberwise. Both sides are evaluated even
/// when the hypotheses fail.
pub fn minimal_dual_test(
    w: &FusionSystem,
    k: &Mat,
    v: &FusionSystem,
    tol: &ToleranceProfile,
) -> Result<MinimalDualReport> {
    let minimal = is_minimal(w, tol)?;
    let span_w = Subspace::span_of(&w.synthesis(), tol)?;
    let rk_perp = Subspace::span_of(k, tol)?.orthogonal_complement()?;
    let span_hypothesis = span_w.intersection_dim(&rk_perp, tol)? == 0;
    let canonical = canonical_k_dual(w, k, tol)?;
    let is_dual = is_k_dual(w, v, k, tol)?;
    let per_member = canonical
        .system
        .subspaces()
        .zip(v.subspaces())
        .map(|(c, vi)| c.is_contained_in(vi, tol))
        .collect::<Result<Vec<_>>>()?;
    let contains = per_member.iter().all(|&b| b);
    Ok(MinimalDualReport {
        minimal,
        span_hypothesis,
        agree: is_dual.pass == contains,
        is_dual,
        per_member,
        contains,
    })
}
