//! Dense-matrix kernel and the tolerance policy shared by every module.
//!
//! Every rank decision in the crate goes through [`Svd::rank`] (or a helper
//! built on it) with the same [`ToleranceProfile`]; downstream code never
//! invents its own cut-off.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Cut-offs used for rank decisions and residual comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceProfile {
    /// Singular values at or below `rank_rel * s_max` count as zero.
    pub rank_rel: f64,
    /// Absolute residual tolerance.
    pub eq_abs: f64,
    /// Relative residual tolerance.
    pub eq_rel: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            rank_rel: 1e-10,
            eq_abs: 1e-9,
            eq_rel: 1e-8,
        }
    }
}

impl ToleranceProfile {
    pub fn new(rank_rel: f64, eq_abs: f64, eq_rel: f64) -> Result<Self> {
        let t = Self {
            rank_rel,
            eq_abs,
            eq_rel,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.rank_rel) && ok(self.eq_abs) && ok(self.eq_rel)) {
            return Err(Error::InvalidTolerance(
                "all tolerances must be positive and finite".into(),
            ));
        }
        if self.rank_rel >= 1.0 {
            return Err(Error::InvalidTolerance("rank_rel must be < 1".into()));
        }
        Ok(())
    }

    /// Residual test for an exact identity whose natural scale is `scale`:
    /// `residual <= eq_abs * (1 + scale)`.
    pub fn residual_ok(&self, residual: f64, scale: f64) -> bool {
        residual <= self.eq_abs * (1.0 + scale)
    }

    /// `a` and `b` agree to `eq_rel` relative to the larger magnitude.
    pub fn rel_eq(&self, a: f64, b: f64) -> bool {
        if a.is_infinite() || b.is_infinite() {
            return a == b;
        }
        (a - b).abs() <= self.eq_rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Full singular value decomposition `m = u * diag(s) * vᵀ`.
///
/// `u` is `rows × rows`, `v` is `cols × cols`, and `singular_values` holds
/// the `min(rows, cols)` values in nonincreasing order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn s_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, tol: &ToleranceProfile) -> usize {
        let cut = tol.rank_rel * self.s_max();
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }

    /// Orthonormal basis of the column space (first `rank` columns of `u`).
    pub fn range_basis(&self, tol: &ToleranceProfile) -> Mat {
        let r = self.rank(tol);
        self.u.columns(0, r).into_owned()
    }

    /// Orthonormal basis of the null space (trailing columns of `v`).
    pub fn null_basis(&self, tol: &ToleranceProfile) -> Mat {
        let r = self.rank(tol);
        let n = self.v.ncols();
        self.v.columns(r, n - r).into_owned()
    }

    /// Orthonormal basis of the row space (leading columns of `v`).
    pub fn row_basis(&self, tol: &ToleranceProfile) -> Mat {
        let r = self.rank(tol);
        self.v.columns(0, r).into_owned()
    }

    pub fn pinv(&self, tol: &ToleranceProfile) -> Mat {
        let r = self.rank(tol);
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut out = Mat::zeros(n, m);
        for k in 0..r {
            let inv = 1.0 / self.singular_values[k];
            out += self.v.column(k) * self.u.column(k).transpose() * inv;
        }
        out
    }
}

pub fn check_finite(m: &Mat) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Full SVD with singular values sorted nonincreasing.
pub fn svd(m: &Mat) -> Result<Svd> {
    check_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Svd {
            u: Mat::identity(rows, rows),
            singular_values: Vec::new(),
            v: Mat::identity(cols, cols),
        });
    }
    let dec = to_faer(m)
        .svd()
        .map_err(|_| Error::NoConvergence { what: "SVD" })?;
    let s = dec.S().column_vector();
    Ok(Svd {
        u: from_faer(dec.U()),
        singular_values: (0..s.nrows()).map(|i| s[i].max(0.0)).collect(),
        v: from_faer(dec.V()),
    })
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q`.
pub fn complement(q: &Mat) -> Result<Mat> {
    let n = q.nrows();
    if q.ncols() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let residual = Mat::identity(n, n) - q * q.transpose();
    let (vals, vecs) = sym_eigen(&residual)?;
    let cols: Vec<Vector> = vals
        .iter()
        .zip(vecs.column_iter())
        .filter(|(&l, _)| l > 0.5)
        .map(|(_, c)| c.into_owned())
        .collect();
    Ok(if cols.is_empty() {
        Mat::zeros(n, 0)
    } else {
        Mat::from_columns(&cols)
    })
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues nonincreasing.
pub fn sym_eigen(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    check_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let sym = (m + m.transpose()) * 0.5;
    let dec = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence {
            what: "symmetric eigensolver",
        })?;
    let s = dec.S().column_vector();
    let u = dec.U();
    let vals = (0..n).rev().map(|i| s[i]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals, vecs))
}

pub fn numerical_rank(m: &Mat, tol: &ToleranceProfile) -> Result<usize> {
    Ok(svd(m)?.rank(tol))
}

/// Moore–Penrose pseudo-inverse by SVD truncation at the numerical rank.
pub fn pinv(m: &Mat, tol: &ToleranceProfile) -> Result<Mat> {
    Ok(svd(m)?.pinv(tol))
}

pub fn spectral_norm(m: &Mat) -> Result<f64> {
    Ok(svd(m)?.s_max())
}

/// Orthonormal basis of the column space of `m`.
pub fn range_basis(m: &Mat, tol: &ToleranceProfile) -> Result<Mat> {
    Ok(svd(m)?.range_basis(tol))
}

/// Orthonormal basis of the null space of `m`.
pub fn null_basis(m: &Mat, tol: &ToleranceProfile) -> Result<Mat> {
    Ok(svd(m)?.null_basis(tol))
}

/// Orthogonal projector onto the column space of `m`.
pub fn range_projector(m: &Mat, tol: &ToleranceProfile) -> Result<Mat> {
    let q = range_basis(m, tol)?;
    Ok(&q * q.transpose())
}

fn normalized(m: &Mat) -> Result<Mat> {
    let n = spectral_norm(m)?;
    Ok(if n > 0.0 { m / n } else { m.clone() })
}

pub fn hstack(blocks: &[&Mat]) -> Result<Mat> {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    if blocks.iter().any(|b| b.nrows() != rows) {
        return Err(Error::DimensionMismatch(
            "horizontal concatenation of matrices with different row counts".into(),
        ));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    Ok(out)
}

/// Result of a column-space inclusion test `R(inner) ⊆ R(outer)`.
#[derive(Clone, Debug)]
pub struct RangeInclusion {
    pub included: bool,
    /// Column of `inner` with the largest component outside `R(outer)`.
    pub witness: Option<Vector>,
    /// Norm of that component.
    pub witness_residual: f64,
}

/// Rank test `rank([outer | inner]) == rank(outer)`.
///
/// Both blocks are scaled to unit spectral norm first, so the decision does
/// not depend on their relative magnitude.
pub fn range_inclusion(inner: &Mat, outer: &Mat, tol: &ToleranceProfile) -> Result<RangeInclusion> {
    if inner.nrows() != outer.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "range inclusion needs equal row counts ({} vs {})",
            inner.nrows(),
            outer.nrows()
        )));
    }
    let inner_n = normalized(inner)?;
    let outer_n = normalized(outer)?;
    let outer_svd = svd(&outer_n)?;
    let outer_rank = outer_svd.rank(tol);
    let joint_rank = numerical_rank(&hstack(&[&outer_n, &inner_n])?, tol)?;
    let included = joint_rank == outer_rank;

    let q = outer_svd.range_basis(tol);
    let resid = inner - &q * (q.transpose() * inner);
    let (best, best_norm) = resid
        .column_iter()
        .enumerate()
        .map(|(j, c)| (j, c.norm()))
        .fold(
            (None, 0.0),
            |(bj, bn), (j, n)| if n > bn { (Some(j), n) } else { (bj, bn) },
        );

    Ok(RangeInclusion {
        included,
        witness: if included {
            None
        } else {
            best.map(|j| inner.column(j).into_owned())
        },
        witness_residual: best_norm,
    })
}

pub fn is_symmetric(m: &Mat, tol: &ToleranceProfile) -> Result<bool> {
    Ok(asymmetry(m)? <= tol.eq_abs * spectral_norm(m)?.max(1.0))
}

fn asymmetry(m: &Mat) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    spectral_norm(&(m - m.transpose()))
}

/// `sup ⟨a f, f⟩ / ⟨b f, f⟩` over `f ∉ N(b)` for symmetric PSD `a`, `b`.
///
/// This is the least `α` with `a ≤ α b`. Returns `+∞` when `N(b) ⊄ N(a)`.
/// The pencil is restricted to `R(b)` and whitened there.
pub fn max_rayleigh(a: &Mat, b: &Mat, tol: &ToleranceProfile) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "pencil operands have shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    for m in [a, b] {
        let asym = asymmetry(m)?;
        if asym > tol.eq_abs * spectral_norm(m)?.max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
    }
    let a = (a + a.transpose()) * 0.5;
    let b = (b + b.transpose()) * 0.5;

    if numerical_rank(&a, tol)? == 0 {
        return Ok(0.0);
    }
    if !range_inclusion(&a, &b, tol)?.included {
        return Ok(f64::INFINITY);
    }
    let b_svd = svd(&b)?;
    let r = b_svd.rank(tol);
    let mut w = b_svd.u.columns(0, r).into_owned();
    for k in 0..r {
        let scale = 1.0 / b_svd.singular_values[k].sqrt();
        w.column_mut(k).scale_mut(scale);
    }
    let c = w.transpose() * a * w;
    let (vals, _) = sym_eigen(&c)?;
    Ok(vals.first().copied().unwrap_or(0.0).max(0.0))
}

/// Smallest eigenvalue of `bᵀ m b` for orthonormal `b`: the best lower
/// constant of `⟨m f, f⟩ ≥ c ‖f‖²` on the subspace spanned by `b`.
pub fn restricted_min_eigen(m: &Mat, basis: &Mat) -> Result<f64> {
    if basis.ncols() == 0 {
        return Ok(0.0);
    }
    let c = basis.transpose() * m * basis;
    let (vals, _) = sym_eigen(&c)?;
    Ok(*vals.last().expect("nonempty"))
}

/// Largest eigenvalue of `bᵀ m b` for orthonormal `b`.
pub fn restricted_max_eigen(m: &Mat, basis: &Mat) -> Result<f64> {
    if basis.ncols() == 0 {
        return Ok(0.0);
    }
    let c = basis.transpose() * m * basis;
    let (vals, _) = sym_eigen(&c)?;
    Ok(vals[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Mat {
        Mat::from_row_slice(rows, cols, data)
    }

    #[test]
    fn identity_singular_values() {
        let s = svd(&Mat::identity(3, 3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn rank_one_symmetric() {
        let s = svd(&mat(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_relative_eq!(s.singular_values[0], 2.0, epsilon = 1e-14);
        assert!(s.singular_values[1].abs() < 1e-14);
    }

    #[test]
    fn frame_operator_spectrum() {
        // characteristic polynomial of [[1,1,0],[1,1,0],[0,0,2]] is
        // λ(λ-2)(λ-2): eigenvalues 2, 2, 0
        let s = svd(&mat(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
        assert_relative_eq!(s.singular_values[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.singular_values[1], 2.0, epsilon = 1e-14);
        assert!(s.singular_values[2].abs() < 1e-14);
    }

    #[test]
    fn full_factors_are_square_and_orthonormal() {
        let m = mat(2, 4, &[1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let s = svd(&m).unwrap();
        assert_eq!(s.u.shape(), (2, 2));
        assert_eq!(s.v.shape(), (4, 4));
        let vtv = s.v.transpose() * &s.v;
        assert!((vtv - Mat::identity(4, 4)).norm() < 1e-12);
        assert_eq!(s.null_basis(&tol()).ncols(), 2);
        assert!((&m * s.null_basis(&tol())).norm() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        assert_eq!(numerical_rank(&Mat::zeros(3, 4), &tol()).unwrap(), 0);
        assert_eq!(numerical_rank(&Mat::zeros(0, 4), &tol()).unwrap(), 0);
    }

    #[test]
    fn rank_of_operator_with_two_nonzero_columns() {
        // columns e1+e2, e3, 0
        let k = mat(3, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(numerical_rank(&k, &tol()).unwrap(), 2);
    }

    #[test]
    fn pinv_of_diagonal() {
        let p = pinv(&mat(2, 2, &[2.0, 0.0, 0.0, 0.0]), &tol()).unwrap();
        assert!((p - mat(2, 2, &[0.5, 0.0, 0.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn pinv_of_restricted_frame_operators() {
        let sw = mat(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let expect = mat(3, 3, &[0.25, 0.25, 0.0, 0.25, 0.25, 0.0, 0.0, 0.0, 0.5]);
        assert!((pinv(&sw, &tol()).unwrap() - expect).amax() < 1e-12);

        let sz = mat(3, 3, &[1.5, 1.5, 0.0, 1.5, 1.5, 0.0, 0.0, 0.0, 2.0]);
        let sixth = 1.0 / 6.0;
        let expect = mat(3, 3, &[sixth, sixth, 0.0, sixth, sixth, 0.0, 0.0, 0.0, 0.5]);
        assert!((pinv(&sz, &tol()).unwrap() - expect).amax() < 1e-12);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let m = mat(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(svd(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn rayleigh_identity_pencil() {
        let i = Mat::identity(4, 4);
        assert_relative_eq!(max_rayleigh(&i, &i, &tol()).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rayleigh_infinite_when_null_spaces_mismatch() {
        let a = mat(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(max_rayleigh(&a, &b, &tol()).unwrap().is_infinite());
        // the other way round is finite: b ≤ 1·a
        assert_relative_eq!(max_rayleigh(&b, &a, &tol()).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rayleigh_diagonal_brute_force() {
        // for commuting diagonal pencils the supremum is attained on a basis
        // direction, so the oracle is the largest ratio a_ii / b_ii
        let a = Mat::from_diagonal(&Vector::from_vec(vec![0.3, 2.0, 0.0, 1.1]));
        let b = Mat::from_diagonal(&Vector::from_vec(vec![1.0, 4.0, 0.0, 0.5]));
        let oracle = (0..4)
            .filter(|&i| b[(i, i)] > 0.0)
            .map(|i| a[(i, i)] / b[(i, i)])
            .fold(0.0_f64, f64::max);
        assert_relative_eq!(
            max_rayleigh(&a, &b, &tol()).unwrap(),
            oracle,
            epsilon = 1e-13
        );
    }

    #[test]
    fn rayleigh_rejects_asymmetric() {
        let a = mat(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = Mat::identity(2, 2);
        assert!(matches!(
            max_rayleigh(&a, &b, &tol()),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn inclusion_witness_points_outside() {
        let outer = mat(2, 1, &[1.0, 1.0]);
        let inner = Mat::identity(2, 2);
        let inc = range_inclusion(&inner, &outer, &tol()).unwrap();
        assert!(!inc.included);
        let w = inc.witness.unwrap();
        let q = outer.normalize();
        assert!((&w - &q * (q.transpose() * &w)).norm() > 0.5);
        assert!(range_inclusion(&outer, &outer, &tol()).unwrap().included);
    }

    #[test]
    fn tolerance_profile_validation() {
        assert!(ToleranceProfile::new(1e-10, 1e-9, 1e-8).is_ok());
        assert!(ToleranceProfile::new(1.0, 1e-9, 1e-8).is_err());
        assert!(ToleranceProfile::new(1e-10, 0.0, 1e-8).is_err());
    }

    #[test]
    fn complement_spans_the_rest() {
        let q = mat(3, 1, &[1.0, 0.0, 0.0]);
        let c = complement(&q).unwrap();
        assert_eq!(c.ncols(), 2);
        assert!((q.transpose() * &c).norm() < 1e-14);
    }
}
