//! Seeded generators for random instances. Every draw comes from a
//! `ChaCha8Rng`, so a seed fixes the instance on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::frames::{FusionSystem, Subspace};
use crate::numerics::{self, Mat, ToleranceProfile, Vector};

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of `seed`, for per-task generators.
pub fn stream(seed: u64, stream: u64) -> InstanceRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// `n × d` matrix with orthonormal columns, uniformly distributed.
pub fn orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Mat {
    assert!(d <= n, "cannot fit {d} orthonormal columns in ℝ^{n}");
    if d == 0 {
        return Mat::zeros(n, 0);
    }
    let qr = gaussian_matrix(rng, n, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, d).into_owned();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn subspace<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Subspace {
    Subspace::from_orthonormal(orthonormal(rng, n, d), &ToleranceProfile::default())
        .expect("QR factor is orthonormal")
}

/// Random orthogonal matrix.
pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    orthonormal(rng, n, n)
}

/// `n × n` operator of exact numerical rank `rank`: `U diag(s) Vᵀ` with
/// singular values drawn from `[0.5, 2]`.
pub fn operator_of_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> Result<Mat> {
    if rank > n {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} exceeds dimension {n}"
        )));
    }
    let u = orthonormal(rng, n, rank);
    let v = orthonormal(rng, n, rank);
    let s = Mat::from_diagonal(&Vector::from_fn(rank, |_, _| rng.random_range(0.5..2.0)));
    Ok(u * s * v.transpose())
}

/// Weighted family of `members` random subspaces with dimensions drawn from
/// `1..=max_dim` and weights from `[0.5, 2]`.
pub fn fusion_system<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    members: usize,
    max_dim: usize,
) -> FusionSystem {
    let max_dim = max_dim.clamp(1, n);
    let ms = (0..members)
        .map(|_| {
            let d = rng.random_range(1..=max_dim);
            (subspace(rng, n, d), rng.random_range(0.5..2.0))
        })
        .collect();
    FusionSystem::new(n, ms).expect("generated weights are positive")
}

/// A random K-fusion instance: rank-`rank` `K` and a family whose members
/// jointly span at least `R(K)`.
pub fn k_fusion_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    members: usize,
    rank: usize,
) -> Result<(FusionSystem, Mat)> {
    let tol = ToleranceProfile::default();
    let k = operator_of_rank(rng, n, rank)?;
    loop {
        let w = fusion_system(
            rng,
            n,
            members,
            n.div_ceil(2).max(n.div_ceil(members.max(1))),
        );
        if numerics::range_inclusion(&k, &w.synthesis(), &tol)?.included {
            return Ok((w, k));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_columns() {
        let q = orthonormal(&mut rng(7), 6, 3);
        assert!((q.transpose() * &q - Mat::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn prescribed_rank() {
        let k = operator_of_rank(&mut rng(1), 5, 2).unwrap();
        assert_eq!(
            numerics::numerical_rank(&k, &ToleranceProfile::default()).unwrap(),
            2
        );
    }

    #[test]
    fn seed_determinism() {
        let a = gaussian_matrix(&mut rng(3), 4, 4);
        let b = gaussian_matrix(&mut rng(3), 4, 4);
        assert_eq!(a, b);
        let c = gaussian_matrix(&mut stream(3, 1), 4, 4);
        assert_ne!(a, c);
    }
}
