use crate::error::{Error, Result};
use crate::factorization::XwSolution;
use crate::frames::{
    restricted_inverse, verify_k_frame, FrameBounds, FusionSystem, KFrame, Subspace,
};
use crate::numerics::{self, Mat, ToleranceProfile};
use crate::random;

use super::kdual::is_k_dual;
use super::DualCertificate;

const RECONSTRUCTION_SAMPLES: usize = 50;

/// A fusion system with a frame `{g_{i,j}}_j` for each member.
#[derive(Clone, Debug)]
pub struct LocalFrameSystem {
    pub fusion: FusionSystem,
    pub local_frames: Vec<KFrame>,
    /// Frame bounds of each local frame within its subspace.
    pub local_bounds: Vec<FrameBounds>,
}

impl LocalFrameSystem {
    pub fn new(
        fusion: FusionSystem,
        local_frames: Vec<KFrame>,
        tol: &ToleranceProfile,
    ) -> Result<Self> {
        if local_frames.len() != fusion.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} local frames for {} members",
                local_frames.len(),
                fusion.len()
            )));
        }
        let mut local_bounds = Vec::with_capacity(fusion.len());
        for (i, (frame, m)) in local_frames.iter().zip(fusion.members()).enumerate() {
            fusion.check_ambient(frame.ambient_dim(), "local frame")?;
            let spans = if frame.is_empty() {
                m.subspace.is_zero()
            } else {
                Subspace::span_of(frame.synthesis(), tol)?.equals(&m.subspace, tol)?
            };
            if !spans {
                return Err(Error::InvalidArgument(format!(
                    "local frame {i} does not span its subspace"
                )));
            }
            let s = frame.frame_operator();
            let basis = m.subspace.basis();
            local_bounds.push(FrameBounds {
                lower: numerics::restricted_min_eigen(&s, basis)?,
                upper: numerics::restricted_max_eigen(&s, basis)?,
                optimal: true,
            });
        }
        Ok(Self {
            fusion,
            local_frames,
            local_bounds,
        })
    }

    /// Each member's orthonormal basis as its local frame.
    pub fn orthonormal(fusion: FusionSystem, tol: &ToleranceProfile) -> Result<Self> {
        let frames = fusion
            .subspaces()
            .map(|s| KFrame::from_synthesis(s.basis().clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(fusion, frames, tol)
    }

    /// `{π_{W_i} e_j}_j` as the local frame of member `i`.
    pub fn standard(fusion: FusionSystem, tol: &ToleranceProfile) -> Result<Self> {
        let frames = fusion
            .subspaces()
            .map(|s| {
                if s.is_zero() {
                    KFrame::from_synthesis(Mat::zeros(s.ambient_dim(), 0))
                } else {
                    KFrame::from_synthesis(s.projector())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fusion, frames, tol)
    }

    /// Canonical local duals `{S_i⁻¹ g_{i,j}}`, with `S_i⁻¹` taken on `W_i`.
    pub fn canonical_duals(&self, tol: &ToleranceProfile) -> Result<Vec<KFrame>> {
        self.local_frames
            .iter()
            .map(|g| {
                let s_inv = numerics::pinv(&g.frame_operator(), tol)?;
                KFrame::from_synthesis(s_inv * g.synthesis())
            })
            .collect()
    }
}

/// `T_F T_G* = K`, tested as an operator identity and on random unit `f`.
#[derive(Clone, Debug)]
pub struct ReconstructionCheck {
    pub operator_residual: f64,
    /// Largest `‖Σ⟨f,g_k⟩f_k − Kf‖` over the sampled unit vectors.
    pub sample_residual: f64,
    pub samples: usize,
    pub pass: bool,
}

fn reconstruction_check(
    f: &KFrame,
    g: &KFrame,
    k: &Mat,
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<ReconstructionCheck> {
    let op = f.reconstruction_operator(g);
    let operator_residual = numerics::spectral_norm(&(&op - k))?;
    let mut r = random::rng(seed);
    let sample_residual = (0..RECONSTRUCTION_SAMPLES)
        .map(|_| {
            let x = random::unit_vector(&mut r, k.ncols());
            (f.reconstruct(g, &x) - k * &x).norm()
        })
        .fold(0.0, f64::max);
    let k_norm = numerics::spectral_norm(k)?;
    Ok(ReconstructionCheck {
        operator_residual,
        sample_residual,
        samples: RECONSTRUCTION_SAMPLES,
        pass: tol.residual_ok(operator_residual, k_norm)
            && tol.residual_ok(sample_residual, k_norm),
    })
}

#[derive(Clone, Debug)]
pub struct ProjectionDual {
    /// `{π_{R(K)} f_i}`.
    pub projected: KFrame,
    /// `{K* S_F⁻¹ π_{S_F(R(K))} f_i}`.
    pub dual: KFrame,
    pub check: ReconstructionCheck,
}

/// The projected K-frame and its K-dual.
pub fn kframe_projection_dual(
    frame: &KFrame,
    k: &Mat,
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<ProjectionDual> {
    if !verify_k_frame(frame, k, tol)?.pass {
        return Err(Error::Hypothesis("F is not a K-frame".into()));
    }
    let pr = numerics::range_projector(k, tol)?;
    let p = numerics::pinv(&(frame.frame_operator() * &pr), tol)?;
    let projected = KFrame::from_synthesis(&pr * frame.synthesis())?;
    let dual = KFrame::from_synthesis(k.transpose() * p * frame.synthesis())?;
    let check = reconstruction_check(&projected, &dual, k, seed, tol)?;
    Ok(ProjectionDual {
        projected,
        dual,
        check,
    })
}

#[derive(Clone, Debug)]
pub struct LocalDualityReport {
    pub fusion_dual: DualCertificate,
    /// `‖T_F T_G* − K‖` for the discrete families.
    pub discrete_residual: f64,
    pub discrete_pass: bool,
    pub agree: bool,
    pub f: KFrame,
    pub g: KFrame,
}

fn discrete_report(
    w: &FusionSystem,
    v: &FusionSystem,
    k: &Mat,
    pieces: Vec<(KFrame, KFrame)>,
    tol: &ToleranceProfile,
) -> Result<LocalDualityReport> {
    let (fs, gs): (Vec<_>, Vec<_>) = pieces.into_iter().unzip();
    let f = KFrame::concat(&fs)?;
    let g = KFrame::concat(&gs)?;
    let discrete_residual = numerics::spectral_norm(&(f.reconstruction_operator(&g) - k))?;
    let discrete_pass = tol.residual_ok(discrete_residual, numerics::spectral_norm(k)?);
    let fusion_dual = is_k_dual(w, v, k, tol)?;
    Ok(LocalDualityReport {
        agree: fusion_dual.pass == discrete_pass,
        fusion_dual,
        discrete_residual,
        discrete_pass,
        f,
        g,
    })
}

/// `V` is a K-dual of `W` iff `G = {υ_i g_{i,j}}` is a K-dual of
/// `F = {ω_i π_{R(K)} π_{W_i} (S_W⁻¹)* K g̃_{i,j}}`, with `g̃` the canonical
/// local duals of the local frames of `V`.
pub fn local_duality_equiv(
    w: &FusionSystem,
    locals: &LocalFrameSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<LocalDualityReport> {
    let v = &locals.fusion;
    w.check_same_len(v)?;
    let pr = numerics::range_projector(k, tol)?;
    let core = restricted_inverse(w, k, tol)?.transpose() * k;
    let duals = locals.canonical_duals(tol)?;
    let pieces = (0..w.len())
        .map(|i| {
            let (wm, vm) = (w.member(i), v.member(i));
            let map = &pr * wm.subspace.projector() * &core * wm.weight;
            Ok((
                KFrame::from_synthesis(map * duals[i].synthesis())?,
                KFrame::from_synthesis(locals.local_frames[i].synthesis() * vm.weight)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    discrete_report(w, v, k, pieces, tol)
}

/// Standard-basis form: `G = {υ_i π_{V_i} e_j}` against
/// `F = {ω_i π_{R(K)} π_{W_i} (S_W⁻¹)* K e_j}`.
pub fn local_duality_equiv_basis(
    w: &FusionSystem,
    v: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<LocalDualityReport> {
    w.check_same_len(v)?;
    let pr = numerics::range_projector(k, tol)?;
    let core = restricted_inverse(w, k, tol)?.transpose() * k;
    let pieces = (0..w.len())
        .map(|i| {
            let (wm, vm) = (w.member(i), v.member(i));
            Ok((
                KFrame::from_synthesis(&pr * wm.subspace.projector() * &core * wm.weight)?,
                KFrame::from_synthesis(vm.subspace.projector() * vm.weight)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    discrete_report(w, v, k, pieces, tol)
}

/// `F = {ω_i f_{i,j}}` is a K-frame with K-dual `G = {X_i* f̃_{i,j}}`.
pub fn kframe_from_local(
    locals: &LocalFrameSystem,
    xw: &XwSolution,
    k: &Mat,
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<(KFrame, KFrame, ReconstructionCheck)> {
    let w = &locals.fusion;
    if xw.system().len() != w.len() {
        return Err(Error::DimensionMismatch(
            "X_w belongs to a different system".into(),
        ));
    }
    let duals = locals.canonical_duals(tol)?;
    let (fs, gs): (Vec<_>, Vec<_>) = (0..w.len())
        .map(|i| {
            Ok((
                KFrame::from_synthesis(locals.local_frames[i].synthesis() * w.member(i).weight)?,
                KFrame::from_synthesis(xw.component(i).transpose() * duals[i].synthesis())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let f = KFrame::concat(&fs)?;
    let g = KFrame::concat(&gs)?;
    let check = reconstruction_check(&f, &g, k, seed, tol)?;
    Ok((f, g, check))
}

/// `{ω_i π_{W_i} e_j}` as a single vector family.
pub fn weighted_projection_frame(w: &FusionSystem) -> Result<KFrame> {
    let parts = w
        .members()
        .iter()
        .map(|m| KFrame::from_synthesis(m.subspace.projector() * m.weight))
        .collect::<Result<Vec<_>>>()?;
    KFrame::concat(&parts)
}
