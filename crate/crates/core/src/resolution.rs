//! l²-resolutions `Σω_i²θ_i = K`, the frames they generate, the minimal-norm
//! property of `X_w`, and the pseudo-inverse of `π_{R(K)}T_W`.

use log::warn;
use rand::Rng;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::factorization::XwSolution;
use crate::frames::Subspace;
use crate::frames::{restricted_inverse, verify_k_fusion, BlockVector, FrameBounds, FusionSystem};
use crate::numerics::{self, Mat, ToleranceProfile, Vector};
use crate::random;

/// Operators `θ_i` on ℝⁿ paired with weights `ω_i`.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub thetas: Vec<Mat>,
    pub weights: Vec<f64>,
}

impl Resolution {
    pub fn new(thetas: Vec<Mat>, weights: Vec<f64>) -> Result<Self> {
        if thetas.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} operators for {} weights",
                thetas.len(),
                weights.len()
            )));
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidWeight { index, weight });
            }
        }
        if let Some(first) = thetas.first() {
            let shape = first.shape();
            if shape.0 != shape.1 || thetas.iter().any(|t| t.shape() != shape) {
                return Err(Error::DimensionMismatch(
                    "resolution operators must share one square shape".into(),
                ));
            }
        }
        Ok(Self { thetas, weights })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// `Σω_i²θ_i`.
    pub fn sum(&self, n: usize) -> Mat {
        self.thetas
            .iter()
            .zip(&self.weights)
            .fold(Mat::zeros(n, n), |acc, (t, w)| acc + t * (w * w))
    }

    /// `Σω_i²θ_iᵀθ_i`, the Gram operator of `f ↦ {ω_iθ_if}`.
    pub fn gram(&self, n: usize) -> Mat {
        self.thetas
            .iter()
            .zip(&self.weights)
            .fold(Mat::zeros(n, n), |acc, (t, w)| {
                acc + t.transpose() * t * (w * w)
            })
    }
}

#[derive(Clone, Debug)]
pub struct ResolutionCheck {
    pub pass: bool,
    /// `‖Σω_i²θ_i − K‖`.
    pub residual: f64,
    /// Optimal `B` in `Σω_i²‖θ_if‖² ≤ B‖f‖²`.
    pub upper: f64,
    /// Optimal `A` in `A‖Kf‖² ≤ Σω_i²‖θ_if‖²`; zero when no positive `A` exists.
    pub lower: f64,
}

impl ResolutionCheck {
    pub fn bounds(&self) -> FrameBounds {
        FrameBounds {
            lower: self.lower,
            upper: self.upper,
            optimal: true,
        }
    }
}

pub fn verify_resolution(
    r: &Resolution,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<ResolutionCheck> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::DimensionMismatch("K must be square".into()));
    }
    if r.thetas.iter().any(|t| t.shape() != (n, n)) {
        return Err(Error::DimensionMismatch(format!(
            "resolution operators must be {n}x{n}"
        )));
    }
    let residual = numerics::spectral_norm(&(r.sum(n) - k))?;
    let pass = tol.residual_ok(residual, numerics::spectral_norm(k)?);
    let gram = r.gram(n);
    let upper = numerics::spectral_norm(&gram)?;
    let alpha = numerics::max_rayleigh(&(k.transpose() * k), &gram, tol)?;
    let lower = if alpha > 0.0 {
        1.0 / alpha
    } else {
        f64::INFINITY
    };
    Ok(ResolutionCheck {
        pass,
        residual,
        upper,
        lower,
    })
}

/// `θ_i = X_i` (the `i`-th component of `X_w`) with weights `√ω_i`.
pub fn resolution_from_x(xw: &XwSolution) -> Result<Resolution> {
    let w = xw.system();
    Resolution::new(
        xw.components(),
        w.weights().iter().map(|x| x.sqrt()).collect(),
    )
}

fn require_k_fusion(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<()> {
    if verify_k_fusion(w, k, tol)?.is_k_fusion() {
        Ok(())
    } else {
        Err(Error::Hypothesis("W is not a K-fusion frame".into()))
    }
}

/// `θ_i = π_{R(K)} π_{W_i} (S_W⁻¹)* K` with weights `ω_i`.
pub fn resolution_b(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<Resolution> {
    require_k_fusion(w, k, tol)?;
    let pr = numerics::range_projector(k, tol)?;
    let tail = restricted_inverse(w, k, tol)?.transpose() * k;
    let thetas = w.subspaces().map(|s| &pr * s.projector() * &tail).collect();
    Resolution::new(thetas, w.weights())
}

/// `θ_i = S_W⁻¹ π_{S_W(R(K))} π_{W_i} K` with weights `ω_i`.
pub fn resolution_c(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<Resolution> {
    require_k_fusion(w, k, tol)?;
    let p = restricted_inverse(w, k, tol)?;
    let thetas = w.subspaces().map(|s| &p * s.projector() * k).collect();
    Resolution::new(thetas, w.weights())
}

/// `{(R(θ_i), ω_i)}` with its K-fusion certificate.
pub fn frame_from_resolution(
    r: &Resolution,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<(FusionSystem, Certificate)> {
    let n = k.nrows();
    let members = r
        .thetas
        .iter()
        .zip(&r.weights)
        .map(|(t, &w)| Ok((Subspace::span_of(t, tol)?, w)))
        .collect::<Result<Vec<_>>>()?;
    let system = FusionSystem::new(n, members)?;
    let check = verify_k_fusion(&system, k, tol)?;
    let cert = match check.bounds() {
        Some(b) => Certificate::passed().with_bounds(b),
        None => Certificate::failed("ranges of the resolution do not cover R(K)")
            .with_witness(check.violating_direction),
    };
    Ok((system, cert))
}

/// Ambient components of a coefficient-space operator `Θ : ℝⁿ → Σ⊕W_i`.
pub fn components_of(w: &FusionSystem, theta: &Mat) -> Result<Vec<Mat>> {
    if theta.nrows() != w.total_dim() || theta.ncols() != w.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient operator must be {}x{}",
            w.total_dim(),
            w.ambient_dim()
        )));
    }
    Ok(w.subspaces()
        .zip(w.block_offsets())
        .map(|(s, at)| s.basis() * theta.rows(at, s.dim()))
        .collect())
}

/// `X_w + (I − pinv(T_W)T_W)R`, another solution of `T_W Θ = K`, as
/// ambient components.
pub fn null_space_perturbation(
    xw: &XwSolution,
    r: &Mat,
    tol: &ToleranceProfile,
) -> Result<Vec<Mat>> {
    let w = xw.system();
    let t = w.synthesis();
    let m = w.total_dim();
    let null_proj = Mat::identity(m, m) - numerics::pinv(&t, tol)? * &t;
    components_of(w, &(xw.x() + null_proj * r))
}

#[derive(Clone, Debug)]
pub struct MinimalNormReport {
    pub samples: usize,
    /// Smallest `Σ‖θ_if‖² − Σ‖(X_wf)_i‖²` over the samples.
    pub min_margin: f64,
    /// Smallest margin of the inequality shifted by `ω_iπ_{W_i}f`.
    pub min_margin_shifted: f64,
    pub max_margin: f64,
    /// `‖Σω_iθ_i − K‖`, the residual of `T_Wθ = K`.
    pub hypothesis_residual: f64,
    pub pass: bool,
}

/// Compares `X_w` with a solution `θ` of `T_Wθ = K` on random unit vectors.
///
/// `thetas[i]` must map into `W_i`.
pub fn minimal_norm_check(
    w: &FusionSystem,
    k: &Mat,
    thetas: &[Mat],
    samples: usize,
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<MinimalNormReport> {
    w.check_ambient(k.nrows(), "K")?;
    if thetas.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} operators for {} members",
            thetas.len(),
            w.len()
        )));
    }
    for (i, (t, s)) in thetas.iter().zip(w.subspaces()).enumerate() {
        if numerics::numerical_rank(t, tol)? > 0
            && !numerics::range_inclusion(t, s.basis(), tol)?.included
        {
            return Err(Error::Hypothesis(format!(
                "theta_{i} does not map into W_{i}"
            )));
        }
    }
    let n = w.ambient_dim();
    let sum = thetas
        .iter()
        .zip(w.weights())
        .fold(Mat::zeros(n, n), |acc, (t, wt)| acc + t * wt);
    let hypothesis_residual = numerics::spectral_norm(&(sum - k))?;
    if !tol.residual_ok(hypothesis_residual, numerics::spectral_norm(k)?) {
        return Err(Error::Hypothesis(format!(
            "theta does not solve T_W theta = K (residual {hypothesis_residual:e})"
        )));
    }

    let xs = crate::factorization::x_w(w, k, tol)?.components();
    let shifts: Vec<Mat> = w
        .members()
        .iter()
        .map(|m| m.subspace.projector() * m.weight)
        .collect();
    let mut rng = random::rng(seed);
    let (mut min_margin, mut min_shifted, mut max_margin) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut pass = true;
    for _ in 0..samples {
        let f = random::unit_vector(&mut rng, n);
        let sq = |ops: &[Mat], shift: bool| -> f64 {
            ops.iter()
                .zip(&shifts)
                .map(|(op, p)| {
                    let v: Vector = op * &f;
                    if shift { v - p * &f } else { v }.norm_squared()
                })
                .sum()
        };
        let (lhs, rhs) = (sq(&xs, false), sq(thetas, false));
        let (lhs_s, rhs_s) = (sq(&xs, true), sq(thetas, true));
        let (m1, m2) = (rhs - lhs, rhs_s - lhs_s);
        pass &= m1 >= -tol.eq_rel * rhs.max(1.0) && m2 >= -tol.eq_rel * rhs_s.max(1.0);
        min_margin = min_margin.min(m1);
        min_shifted = min_shifted.min(m2);
        max_margin = max_margin.max(m1);
    }
    Ok(MinimalNormReport {
        samples,
        min_margin,
        min_margin_shifted: min_shifted,
        max_margin,
        hypothesis_residual,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct PinvReport {
    /// `{(X_w K†f)_i}`, the minimal-norm blocks.
    pub blocks: BlockVector,
    /// `{ω_i (X_w K†f)_i}`, the blocks with the weight inside.
    pub weighted_blocks: BlockVector,
    /// `pinv(π_{R(K)}T_W) f`, computed directly.
    pub oracle: BlockVector,
    pub agrees: bool,
    pub weighted_agrees: bool,
    /// `S_W(R(K)) ⊆ R(K)`.
    pub sws_condition: bool,
    /// `f` had a component outside `R(K)` that was dropped.
    pub projected: bool,
}

/// `(π_{R(K)}T_W)† f` through `X_w`, checked against a direct pseudo-inverse.
pub fn pinv_via_xw(
    w: &FusionSystem,
    k: &Mat,
    f: &Vector,
    tol: &ToleranceProfile,
) -> Result<PinvReport> {
    w.check_ambient(k.nrows(), "K")?;
    w.check_ambient(f.len(), "f")?;
    let xw = crate::factorization::x_w(w, k, tol)?;
    let pr = numerics::range_projector(k, tol)?;
    let fr = &pr * f;
    let projected = (f - &fr).norm() > tol.eq_abs * f.norm().max(1.0);
    if projected {
        warn!("f is not in R(K); using its projection");
    }
    let g = numerics::pinv(k, tol)? * &fr;
    let blocks = xw.apply(&g);
    let weighted_blocks = BlockVector {
        blocks: blocks
            .blocks
            .iter()
            .zip(w.weights())
            .map(|(b, wt)| b * wt)
            .collect(),
    };
    let oracle = BlockVector::from_flat(w, &(numerics::pinv(&(&pr * w.synthesis()), tol)? * &fr))?;
    let close = |a: &BlockVector| {
        let d = (a.to_flat() - oracle.to_flat()).norm();
        d <= tol.eq_abs + tol.eq_rel * oracle.norm()
    };
    let s = w.frame_operator();
    let sws_condition = numerics::numerical_rank(k, tol)? == 0
        || numerics::range_inclusion(&(&s * &pr), k, tol)?.included;
    Ok(PinvReport {
        agrees: close(&blocks),
        weighted_agrees: close(&weighted_blocks),
        blocks,
        weighted_blocks,
        oracle,
        sws_condition,
        projected,
    })
}

/// A random solution of `T_Wθ = K` other than `X_w`, as ambient components.
pub fn random_resolution_into_members<R: Rng + ?Sized>(
    rng: &mut R,
    xw: &XwSolution,
    tol: &ToleranceProfile,
) -> Result<Vec<Mat>> {
    let w = xw.system();
    let r = random::gaussian_matrix(rng, w.total_dim(), w.ambient_dim());
    null_space_perturbation(xw, &r, tol)
}
