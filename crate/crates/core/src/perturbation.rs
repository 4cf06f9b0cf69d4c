//! Stability of K-fusion frames and their K-duals under perturbation.

use crate::duality::k_dual_reconstruction;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frames::{restricted_inverse, verify_k_fusion, FrameBounds, FusionSystem};
use crate::numerics::{self, Mat, ToleranceProfile, Vector};
use crate::random;

/// Samples drawn per member index by the falsifier.
pub const FALSIFIER_SAMPLES: usize = 10_000;
const CHUNKS: usize = 16;

/// Which phase of [`certify_perturbation`] decided the hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// The per-index sufficient certificate holds.
    Certified,
    /// A sampled `f` violates the inequality.
    Falsified,
    /// Neither phase was conclusive.
    Undecided,
}

#[derive(Clone, Debug)]
pub struct PerturbationReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub epsilon: f64,
    /// `(1−λ₁)√A / (‖K‖(Σω_i²)^{1/2})`.
    pub epsilon_threshold: f64,
    pub predicted_bounds: FrameBounds,
    /// Optimal bounds of `Z`, when it is a K-fusion frame.
    pub actual_bounds: Option<FrameBounds>,
    pub phase: Phase,
    /// Hypothesis certified and `ε` below the threshold.
    pub certified: bool,
    /// Member index and unit vector violating the hypothesis.
    pub falsified_witness: Option<(usize, Vector)>,
    /// Actual bounds lie inside the predicted ones.
    pub dominates: bool,
    /// Largest per-index value of the sufficient certificate (≤ 1 passes).
    pub certificate_ratio: f64,
    pub notes: Vec<String>,
}

fn k_fusion_bounds(w: &FusionSystem, k: &Mat, tol: &ToleranceProfile) -> Result<FrameBounds> {
    verify_k_fusion(w, k, tol)?
        .bounds()
        .ok_or_else(|| Error::Hypothesis("W is not a K-fusion frame".into()))
}

fn check_fraction(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in (0, 1), got {x}"
        )))
    }
}

fn dominated(actual: &FrameBounds, predicted: &FrameBounds, tol: &ToleranceProfile) -> bool {
    let slack = |x: f64| tol.eq_rel * x.abs().max(1.0);
    actual.lower >= predicted.lower - slack(predicted.lower)
        && actual.upper <= predicted.upper + slack(predicted.upper)
}

/// Tests `‖(ω_iπ_{W_i}−z_iπ_{Z_i})f‖ ≤ λ₁‖ω_iπ_{W_i}f‖ + λ₂‖z_iπ_{Z_i}f‖ + εω_i‖K*f‖`
/// for every `i` and `f`, then compares `Z`'s bounds with the predicted ones.
///
/// Phase one is sufficient: it bounds the left side squared by
/// `λ₁²ω_i²‖π_{W_i}f‖² + λ₂²z_i²‖π_{Z_i}f‖² + ε²ω_i²‖K*f‖²` as a pencil.
/// Phase two samples [`FALSIFIER_SAMPLES`] unit vectors per index.
#[allow(clippy::too_many_arguments)]
pub fn certify_perturbation(
    w: &FusionSystem,
    z: &FusionSystem,
    k: &Mat,
    lambda1: f64,
    lambda2: f64,
    epsilon: f64,
    seed: u64,
    exec: Exec,
    tol: &ToleranceProfile,
) -> Result<PerturbationReport> {
    check_fraction("lambda1", lambda1)?;
    check_fraction("lambda2", lambda2)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    w.check_same_len(z)?;
    w.check_ambient(k.nrows(), "K")?;
    let wb = k_fusion_bounds(w, k, tol)?;
    let k_norm = numerics::spectral_norm(k)?;
    let root_sum = w.sum_weights_sq().sqrt();
    let epsilon_threshold = (1.0 - lambda1) * wb.lower.sqrt() / (k_norm * root_sum);
    let mut notes = Vec::new();

    let kkt = k * k.transpose();
    let diffs: Vec<Mat> = w
        .members()
        .iter()
        .zip(z.members())
        .map(|(a, b)| a.subspace.projector() * a.weight - b.subspace.projector() * b.weight)
        .collect();

    let ratios = exec.try_map(w.len(), |i| {
        let (a, b) = (w.member(i), z.member(i));
        let m = a.subspace.projector() * (lambda1 * a.weight).powi(2)
            + b.subspace.projector() * (lambda2 * b.weight).powi(2)
            + &kkt * (epsilon * a.weight).powi(2);
        numerics::max_rayleigh(&(diffs[i].transpose() * &diffs[i]), &m, tol)
    })?;
    let certificate_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let sufficient = certificate_ratio <= 1.0 + tol.eq_rel;

    let n = w.ambient_dim();
    let per_chunk = FALSIFIER_SAMPLES.div_ceil(CHUNKS);
    let hits = exec.map(w.len() * CHUNKS, |job| {
        let i = job / CHUNKS;
        let (a, b) = (w.member(i), z.member(i));
        let (pw, pz) = (a.subspace.projector(), b.subspace.projector());
        let mut rng = random::stream(seed, job as u64);
        (0..per_chunk).find_map(|_| {
            let f = random::unit_vector(&mut rng, n);
            let lhs = (&diffs[i] * &f).norm();
            let rhs = lambda1 * a.weight * (&pw * &f).norm()
                + lambda2 * b.weight * (&pz * &f).norm()
                + epsilon * a.weight * (k.transpose() * &f).norm();
            (lhs > rhs * (1.0 + tol.eq_rel) + tol.eq_abs).then_some((i, f))
        })
    });
    let falsified_witness = hits.into_iter().flatten().next();

    let phase = match (sufficient, &falsified_witness) {
        (true, _) => Phase::Certified,
        (false, Some(_)) => Phase::Falsified,
        (false, None) => Phase::Undecided,
    };
    if sufficient && falsified_witness.is_some() {
        notes.push("sampler found a violation despite the sufficient certificate".into());
    }

    let applies = epsilon < epsilon_threshold;
    if !applies {
        notes.push(format!(
            "epsilon {epsilon:e} is not below the threshold {epsilon_threshold:e}; the theorem does not apply"
        ));
    }
    let shift = epsilon * k_norm * root_sum;
    let lower_root = (1.0 - lambda1) * wb.lower.sqrt() - shift;
    let predicted_bounds = FrameBounds {
        lower: if lower_root > 0.0 {
            (lower_root / (1.0 + lambda2)).powi(2)
        } else {
            0.0
        },
        upper: (((1.0 + lambda1) * wb.upper.sqrt() + shift) / (1.0 - lambda2)).powi(2),
        optimal: false,
    };
    let actual_bounds = verify_k_fusion(z, k, tol)?.bounds();
    let dominates = actual_bounds.is_some_and(|a| dominated(&a, &predicted_bounds, tol));
    let certified = phase == Phase::Certified && applies;
    if certified && !dominates {
        notes.push("actual bounds of Z fall outside the predicted ones".into());
    }
    Ok(PerturbationReport {
        lambda1,
        lambda2,
        epsilon,
        epsilon_threshold,
        predicted_bounds,
        actual_bounds,
        phase,
        certified,
        falsified_witness,
        dominates,
        certificate_ratio,
        notes,
    })
}

/// Least `ε` with `‖(T_W*−T_Z*)f‖ ≤ ε‖K*f‖`, comparing `{ω_iπ_{W_i}f}` and
/// `{z_iπ_{Z_i}f}` in ambient coordinates. `+∞` when no such `ε` exists.
pub fn analysis_epsilon(
    w: &FusionSystem,
    z: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<f64> {
    w.check_same_len(z)?;
    w.check_ambient(k.nrows(), "K")?;
    let n = w.ambient_dim();
    let gram = w
        .members()
        .iter()
        .zip(z.members())
        .fold(Mat::zeros(n, n), |acc, (a, b)| {
            let d = a.subspace.projector() * a.weight - b.subspace.projector() * b.weight;
            acc + d.transpose() * d
        });
    Ok(numerics::max_rayleigh(&gram, &(k * k.transpose()), tol)?.sqrt())
}

#[derive(Clone, Debug)]
pub struct PerturbedBounds {
    /// `((√A−ε)², (√B+ε‖K‖)²)`.
    pub predicted: FrameBounds,
    pub actual: Option<FrameBounds>,
    pub dominates: bool,
    /// `ε` is at least the measured [`analysis_epsilon`].
    pub hypothesis_holds: bool,
    pub measured_epsilon: f64,
}

pub fn perturbed_bounds(
    w: &FusionSystem,
    z: &FusionSystem,
    k: &Mat,
    epsilon: f64,
    tol: &ToleranceProfile,
) -> Result<PerturbedBounds> {
    let wb = k_fusion_bounds(w, k, tol)?;
    if !(epsilon >= 0.0 && epsilon < wb.lower.sqrt()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, sqrt(A)) = [0, {:e})",
            wb.lower.sqrt()
        )));
    }
    let measured_epsilon = analysis_epsilon(w, z, k, tol)?;
    let predicted = FrameBounds {
        lower: (wb.lower.sqrt() - epsilon).powi(2),
        upper: (wb.upper.sqrt() + epsilon * numerics::spectral_norm(k)?).powi(2),
        optimal: false,
    };
    let actual = verify_k_fusion(z, k, tol)?.bounds();
    Ok(PerturbedBounds {
        dominates: actual.is_some_and(|a| dominated(&a, &predicted, tol)),
        hypothesis_holds: measured_epsilon <= epsilon * (1.0 + tol.eq_rel) + tol.eq_abs,
        predicted,
        actual,
        measured_epsilon,
    })
}

#[derive(Clone, Debug)]
pub struct ApproximateDual {
    /// `‖K − π_{R(K)}T_Zφ_{vz}T_V*‖`.
    pub norm: f64,
    pub pass: bool,
}

/// Distance from `K` of the reconstruction of `V` against `Z`; `V` is an
/// approximate K-dual of `Z` when it is below one.
pub fn approximate_dual_norm(
    z: &FusionSystem,
    v: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<ApproximateDual> {
    let recon = k_dual_reconstruction(z, v, k, tol)?;
    let norm = numerics::spectral_norm(&(k - recon))?;
    Ok(ApproximateDual {
        norm,
        pass: norm < 1.0,
    })
}

#[derive(Clone, Debug)]
pub struct Threshold {
    /// `min(√A, numerator / (‖(S_Z⁻¹)*K‖²‖K‖²))`.
    pub threshold: f64,
    pub sqrt_a: f64,
    /// `‖((S_W⁻¹)* − (S_Z⁻¹)*)K‖`.
    pub deviation_norm: f64,
    /// `‖(S_Z⁻¹)*K‖`.
    pub z_norm: f64,
    pub k_norm: f64,
    /// `1/2 − ‖((S_W⁻¹)* − (S_Z⁻¹)*)K‖²B`.
    pub numerator: f64,
    /// The numerator is not positive, so no `ε` qualifies.
    pub vacuous: bool,
}

pub fn epsilon_threshold(
    w: &FusionSystem,
    z: &FusionSystem,
    k: &Mat,
    tol: &ToleranceProfile,
) -> Result<Threshold> {
    w.check_same_len(z)?;
    let wb = k_fusion_bounds(w, k, tol)?;
    k_fusion_bounds(z, k, tol)
        .map_err(|_| Error::Hypothesis("Z is not a K-fusion frame".into()))?;
    let pw = restricted_inverse(w, k, tol)?;
    let pz = restricted_inverse(z, k, tol)?;
    let deviation_norm = numerics::spectral_norm(&((pw - &pz).transpose() * k))?;
    let z_norm = numerics::spectral_norm(&(pz.transpose() * k))?;
    let k_norm = numerics::spectral_norm(k)?;
    let numerator = 0.5 - deviation_norm.powi(2) * wb.upper;
    let sqrt_a = wb.lower.sqrt();
    Ok(Threshold {
        threshold: sqrt_a.min(numerator / (z_norm * k_norm).powi(2)),
        sqrt_a,
        deviation_norm,
        z_norm,
        k_norm,
        numerator,
        vacuous: numerator <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::canonical_k_dual;
    use crate::frames::Subspace;
    use crate::golden;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn rotated_member_two(angle: f64) -> FusionSystem {
        let (w, _) = golden::r3_instance();
        // W₂ = span{e3} tilted toward e1 + e2.
        let (c, s) = (angle.cos(), angle.sin() / 2f64.sqrt());
        let line = Subspace::from_spanning(&[Vector::from_row_slice(&[s, s, c])], &tol()).unwrap();
        FusionSystem::uniform(
            3,
            vec![
                w.member(0).subspace.clone(),
                line,
                w.member(2).subspace.clone(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identical_systems() {
        let (w, k) = golden::r3_instance();
        assert_eq!(analysis_epsilon(&w, &w, &k, &tol()).unwrap(), 0.0);
        let r = certify_perturbation(&w, &w, &k, 0.5, 0.5, 0.1, 1, Exec::Parallel, &tol()).unwrap();
        assert_eq!(r.phase, Phase::Certified);
        let a = r.actual_bounds.unwrap();
        assert!(r.predicted_bounds.lower <= a.lower);
        let pb = perturbed_bounds(&w, &w, &k, 0.0, &tol()).unwrap();
        assert!(
            (pb.predicted.lower - 1.0).abs() < 1e-12 && (pb.predicted.upper - 2.0).abs() < 1e-12
        );
    }

    #[test]
    fn tiny_rotation_is_certified_and_sandwiched() {
        let (w, k) = golden::r3_instance();
        let z = rotated_member_two(1e-3);
        let r =
            certify_perturbation(&w, &z, &k, 0.1, 0.1, 0.01, 7, Exec::Parallel, &tol()).unwrap();
        assert_eq!(r.phase, Phase::Certified);
        assert!(r.certified);
        assert!(r.dominates);
    }

    #[test]
    fn orthogonal_swap_is_falsified() {
        let (w, k) = golden::r3_instance();
        let z = FusionSystem::uniform(
            3,
            vec![
                w.member(0).subspace.clone(),
                Subspace::from_spanning(&[Vector::from_row_slice(&[1., -1., 0.])], &tol()).unwrap(),
                w.member(2).subspace.clone(),
            ],
        )
        .unwrap();
        let r =
            certify_perturbation(&w, &z, &k, 0.1, 0.1, 0.01, 7, Exec::Parallel, &tol()).unwrap();
        assert_eq!(r.phase, Phase::Falsified);
        assert_eq!(r.falsified_witness.unwrap().0, 1);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (w, k) = golden::r3_instance();
        let z = rotated_member_two(0.3);
        let a =
            certify_perturbation(&w, &z, &k, 0.2, 0.2, 0.05, 3, Exec::Sequential, &tol()).unwrap();
        let b =
            certify_perturbation(&w, &z, &k, 0.2, 0.2, 0.05, 3, Exec::Parallel, &tol()).unwrap();
        assert_eq!(a.phase, b.phase);
        assert_eq!(a.falsified_witness, b.falsified_witness);
        assert_eq!(a.certificate_ratio, b.certificate_ratio);
    }

    #[test]
    fn lambda_out_of_range() {
        let (w, k) = golden::r3_instance();
        assert!(
            certify_perturbation(&w, &w, &k, 1.0, 0.5, 0.1, 1, Exec::Sequential, &tol()).is_err()
        );
    }

    #[test]
    fn difference_on_kernel_of_k_adjoint() {
        let (w, k) = golden::r3_instance();
        let extra =
            Subspace::from_spanning(&[Vector::from_row_slice(&[1., -1., 0.])], &tol()).unwrap();
        let z = FusionSystem::uniform(
            3,
            vec![
                w.member(0).subspace.sum(&extra, &tol()).unwrap(),
                w.member(1).subspace.clone(),
                w.member(2).subspace.clone(),
            ],
        )
        .unwrap();
        assert!(analysis_epsilon(&w, &z, &k, &tol()).unwrap().is_infinite());
    }

    #[test]
    fn final_example_values() {
        let (w, k) = golden::r3_instance();
        let z = golden::r3_perturbed();
        let eps = analysis_epsilon(&w, &z, &k, &tol()).unwrap();
        assert!((eps - 0.5f64.sqrt()).abs() < 1e-12);
        let t = epsilon_threshold(&w, &z, &k, &tol()).unwrap();
        assert!((t.deviation_norm - 2f64.sqrt() / 6.0).abs() < 1e-12);
        assert!((t.z_norm - 0.5).abs() < 1e-12);
        assert!((t.k_norm - 2f64.sqrt()).abs() < 1e-12);
        assert!((t.threshold - 7.0 / 9.0).abs() < 1e-12);
        let v = canonical_k_dual(&w, &k, &tol()).unwrap().system;
        let a = approximate_dual_norm(&z, &v, &k, &tol()).unwrap();
        assert!((a.norm - 2f64.sqrt() / 3.0).abs() < 1e-12);
        assert!(a.pass);
        let pb = perturbed_bounds(&w, &z, &k, 0.5, &tol()).unwrap();
        assert!((pb.predicted.lower - 0.25).abs() < 1e-12);
        assert!(pb.dominates);
        assert!(!pb.hypothesis_holds);
    }

    #[test]
    fn exact_dual_of_itself_has_zero_distance() {
        let (w, k) = golden::r3_instance();
        let v = canonical_k_dual(&w, &k, &tol()).unwrap().system;
        assert!(approximate_dual_norm(&w, &v, &k, &tol()).unwrap().norm < 1e-12);
        let zero = FusionSystem::uniform(3, vec![Subspace::zero(3); 3]).unwrap();
        let a = approximate_dual_norm(&w, &zero, &k, &tol()).unwrap();
        assert!((a.norm - 2f64.sqrt()).abs() < 1e-12);
        assert!(!a.pass);
    }

    #[test]
    fn inflated_weights_make_threshold_vacuous() {
        let (w, k) = golden::r3_instance();
        let z = w.with_weights(&[0.1, 0.1, 0.1]).unwrap();
        let t = epsilon_threshold(&w, &z, &k, &tol()).unwrap();
        assert!(t.vacuous);
    }
}
