//! The worked examples as ready-made instances.

use crate::duality::{
    canonical_k_dual, check_sws_range_condition, enlarge_dual, is_k_dual, qk_dual_from_xw,
};
use crate::error::Result;
use crate::factorization::x_w;
use crate::frames::{
    is_exact, is_minimal, restricted_inverse, transform_sinv, verify_k_frame, verify_k_fusion,
    FrameBounds, FusionSystem, KFrame, Subspace,
};
use crate::numerics::{self, Mat, ToleranceProfile, Vector};
use crate::perturbation::{
    analysis_epsilon, approximate_dual_norm, epsilon_threshold, perturbed_bounds,
};

fn span(n: usize, vectors: &[&[f64]]) -> Subspace {
    let vs: Vec<Vector> = vectors.iter().map(|v| Vector::from_row_slice(v)).collect();
    debug_assert!(vs.iter().all(|v| v.len() == n));
    Subspace::from_spanning(&vs, &ToleranceProfile::default()).expect("literal spanning set")
}

/// ℝ⁴ with `W₁ = span{e1,e2}`, `W₂ = span{e3}` and `Ke1 = Ke2 = e1`,
/// `Ke3 = e2`, `Ke4 = 0`.
pub fn r4_instance() -> (FusionSystem, Mat) {
    let w = FusionSystem::uniform(
        4,
        vec![
            Subspace::coordinate(4, &[0, 1]),
            Subspace::coordinate(4, &[2]),
        ],
    )
    .expect("valid system");
    (w, r4_k())
}

pub fn r4_k() -> Mat {
    #[rustfmt::skip]
    let k = Mat::from_row_slice(4, 4, &[
        1., 1., 0., 0.,
        0., 0., 1., 0.,
        0., 0., 0., 0.,
        0., 0., 0., 0.,
    ]);
    k
}

/// ℝ³ with `W₁ = span{e1+e2, e3}`, `W₂ = span{e3}`, `W₃ = span{e1+e2}`,
/// unit weights, and `K` with columns `e1+e2`, `e3`, `0`.
pub fn r3_instance() -> (FusionSystem, Mat) {
    let w = FusionSystem::uniform(
        3,
        vec![
            span(3, &[&[1., 1., 0.], &[0., 0., 1.]]),
            Subspace::coordinate(3, &[2]),
            span(3, &[&[1., 1., 0.]]),
        ],
    )
    .expect("valid system");
    (w, r3_k())
}

pub fn r3_k() -> Mat {
    #[rustfmt::skip]
    let k = Mat::from_row_slice(3, 3, &[
        1., 0., 0.,
        1., 0., 0.,
        0., 1., 0.,
    ]);
    k
}

/// Perturbation of [`r3_instance`]: `Z₁ = W₁`, `Z₂ = W₂ ⊕ W₃`, `Z₃ = W₃`.
pub fn r3_perturbed() -> FusionSystem {
    FusionSystem::uniform(
        3,
        vec![
            span(3, &[&[1., 1., 0.], &[0., 0., 1.]]),
            span(3, &[&[0., 0., 1.], &[1., 1., 0.]]),
            span(3, &[&[1., 1., 0.]]),
        ],
    )
    .expect("valid system")
}

/// The non-canonical K-dual of [`r3_instance`]: `span{e1,e2}`, `span{e2}`,
/// `span{e1,e3}`.
pub fn r3_enlarged_dual() -> FusionSystem {
    FusionSystem::uniform(
        3,
        vec![
            Subspace::coordinate(3, &[0, 1]),
            Subspace::coordinate(3, &[1]),
            Subspace::coordinate(3, &[0, 2]),
        ],
    )
    .expect("valid system")
}

/// The canonical K-dual of [`r3_instance`]: `span{e1,e2}`, `span{e2}`,
/// `span{e1}`.
pub fn r3_canonical_dual() -> FusionSystem {
    FusionSystem::uniform(
        3,
        vec![
            Subspace::coordinate(3, &[0, 1]),
            Subspace::coordinate(3, &[1]),
            Subspace::coordinate(3, &[0]),
        ],
    )
    .expect("valid system")
}

/// One stated value of a worked example set against the computed one.
#[derive(Clone, Debug)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub stated: String,
    pub computed: String,
    pub pass: bool,
}

fn scalar(name: &'static str, stated: f64, computed: f64, within: f64) -> GoldenCheck {
    GoldenCheck {
        name,
        stated: format!("{stated}"),
        computed: format!("{computed}"),
        pass: (stated - computed).abs() <= within,
    }
}

fn below(name: &'static str, limit: f64, computed: f64) -> GoldenCheck {
    GoldenCheck {
        name,
        stated: format!("< {limit}"),
        computed: format!("{computed}"),
        pass: computed < limit,
    }
}

fn flag(name: &'static str, stated: bool, computed: bool) -> GoldenCheck {
    GoldenCheck {
        name,
        stated: stated.to_string(),
        computed: computed.to_string(),
        pass: stated == computed,
    }
}

fn matrix(name: &'static str, stated: &Mat, computed: &Mat, within: f64) -> GoldenCheck {
    GoldenCheck {
        name,
        stated: format!("{:?}", stated.transpose().as_slice()),
        computed: format!("{:?}", computed.transpose().as_slice()),
        pass: stated.shape() == computed.shape() && (stated - computed).amax() <= within,
    }
}

fn subspaces(
    name: &'static str,
    stated: &FusionSystem,
    computed: &FusionSystem,
    tol: &ToleranceProfile,
) -> Result<GoldenCheck> {
    let mut same = stated.len() == computed.len();
    for (a, b) in stated.subspaces().zip(computed.subspaces()) {
        same &= a.equals(b, tol)?;
    }
    Ok(GoldenCheck {
        name,
        stated: format!("dims {:?}", stated.block_dims()),
        computed: format!("dims {:?}", computed.block_dims()),
        pass: same,
    })
}

#[rustfmt::skip]
fn m3(rows: [[f64; 3]; 3]) -> Mat {
    Mat::from_row_slice(3, 3, &[
        rows[0][0], rows[0][1], rows[0][2],
        rows[1][0], rows[1][1], rows[1][2],
        rows[2][0], rows[2][1], rows[2][2],
    ])
}

/// Every value the worked examples state, recomputed.
///
/// Bounds and norms are compared within `1e-8`, matrices entrywise within
/// `1e-10`.
pub fn golden_checks(tol: &ToleranceProfile) -> Result<Vec<GoldenCheck>> {
    const B: f64 = 1e-8;
    const M: f64 = 1e-10;
    let mut out = Vec::new();

    // ℝ⁴
    let (w4, k4) = r4_instance();
    let b4 = verify_k_fusion(&w4, &k4, tol)?.bounds();
    out.push(flag("r4: is a K-fusion frame", true, b4.is_some()));
    let b4 = b4.unwrap_or(FrameBounds {
        lower: 0.0,
        upper: 0.0,
        optimal: false,
    });
    out.push(scalar("r4: lower bound", 0.5, b4.lower, B));
    out.push(scalar("r4: upper bound", 1.0, b4.upper, B));
    out.push(flag("r4: minimal", true, is_minimal(&w4, tol)?));
    let ex = is_exact(&w4, &k4, tol)?;
    out.push(flag("r4: exact", false, ex.exact));
    let kept = ex.removable[1];
    out.push(scalar(
        "r4: {W1} lower bound",
        0.5,
        kept.map_or(0.0, |b| b.lower),
        B,
    ));
    out.push(scalar(
        "r4: {W1} upper bound",
        1.0,
        kept.map_or(0.0, |b| b.upper),
        B,
    ));

    // A single vector is not a K-frame for a diagonal projection.
    let h = 0.5;
    let diag = Mat::from_row_slice(2, 2, &[h, h, h, h]);
    let single = KFrame::new(2, &[Vector::from_row_slice(&[1.0, 0.0])])?;
    out.push(flag(
        "r2: {(1,0)} is a K-frame",
        false,
        verify_k_frame(&single, &diag, tol)?.pass,
    ));

    // ℝ³
    let (w, k) = r3_instance();
    out.push(scalar(
        "r3: rank K",
        2.0,
        numerics::numerical_rank(&k, tol)? as f64,
        0.0,
    ));
    let b = verify_k_fusion(&w, &k, tol)?
        .bounds()
        .unwrap_or(FrameBounds {
            lower: 0.0,
            upper: 0.0,
            optimal: false,
        });
    out.push(scalar("r3: lower bound", 1.0, b.lower, B));
    out.push(scalar("r3: upper bound", 2.0, b.upper, B));
    let xw = x_w(&w, &k, tol)?;
    out.push(scalar("r3: |X|^2", 1.0, xw.douglas.norm_sq, B));
    out.push(scalar("r3: inf alpha", 1.0, xw.douglas.alpha_inf, B));
    out.push(flag("r3: N(X) = N(K)", true, xw.douglas.nullspace_match));
    out.push(flag(
        "r3: R(X) in R(T_W*)",
        true,
        xw.douglas.range_containment,
    ));
    let (a, bb, c) = (0.3, -1.1, 0.7);
    let f = Vector::from_row_slice(&[a, bb, c]);
    let stated = [
        Vector::from_row_slice(&[a / 2.0, a / 2.0, bb / 2.0]),
        Vector::from_row_slice(&[0.0, 0.0, bb / 2.0]),
        Vector::from_row_slice(&[a / 2.0, a / 2.0, 0.0]),
    ];
    let xf = xw.apply(&f).ambient_components(&w);
    let dev = xf
        .iter()
        .zip(&stated)
        .map(|(x, s)| (x - s).amax())
        .fold(0.0, f64::max);
    out.push(scalar("r3: Xf blocks deviation", 0.0, dev, B));
    out.push(scalar(
        "r3: |T_W* f|^2",
        (a + bb).powi(2) + 2.0 * c * c,
        w.energy(&f),
        B,
    ));
    out.push(scalar(
        "r3: |K* f|^2",
        (a + bb).powi(2) + c * c,
        (k.transpose() * &f).norm_squared(),
        B,
    ));
    let pr = numerics::range_projector(&k, tol)?;
    let swp = w.frame_operator() * &pr;
    out.push(matrix(
        "r3: S_W pi_R(K)",
        &m3([[1., 1., 0.], [1., 1., 0.], [0., 0., 2.]]),
        &swp,
        M,
    ));
    let p = restricted_inverse(&w, &k, tol)?;
    out.push(matrix(
        "r3: S_W^-1 pi_S_W(R(K))",
        &m3([[0.25, 0.25, 0.], [0.25, 0.25, 0.], [0., 0., 0.5]]),
        &p,
        M,
    ));
    out.push(subspaces(
        "r3: S_W^-1 pi W_i = W_i",
        &w,
        &transform_sinv(&w, &k, tol)?.system,
        tol,
    )?);
    let qk = qk_dual_from_xw(&xw, &k, tol)?;
    out.push(subspaces(
        "r3: X_i* W_i",
        &r3_canonical_dual(),
        &qk.system,
        tol,
    )?);
    out.push(flag(
        "r3: {X_i* W_i} is a QK-dual",
        true,
        qk.report.certificate.pass,
    ));
    let canonical = canonical_k_dual(&w, &k, tol)?;
    out.push(subspaces(
        "r3: canonical K-dual",
        &r3_canonical_dual(),
        &canonical.system,
        tol,
    )?);
    let (enlarged, cert) = enlarge_dual(
        &w,
        &k,
        &canonical.system,
        2,
        &Subspace::coordinate(3, &[2]),
        tol,
    )?;
    out.push(subspaces(
        "r3: enlarged K-dual",
        &r3_enlarged_dual(),
        &enlarged,
        tol,
    )?);
    out.push(flag("r3: enlarged family is a K-dual", true, cert.pass));
    out.push(flag(
        "r3: given V is a K-dual",
        true,
        is_k_dual(&w, &r3_enlarged_dual(), &k, tol)?.pass,
    ));
    let sws = check_sws_range_condition(&w, &k, tol)?;
    out.push(flag("r3: S_W(R(K)) in R(K)", true, sws.condition));
    out.push(flag(
        "r3: canonical K-dual equals QK-dual",
        true,
        sws.families_equal,
    ));

    // Perturbation of ℝ³
    let z = r3_perturbed();
    out.push(below(
        "z: analysis epsilon",
        0.5,
        analysis_epsilon(&w, &z, &k, tol)?,
    ));
    let szp = z.frame_operator() * &pr;
    out.push(matrix(
        "z: S_Z pi_R(K)",
        &m3([[1.5, 1.5, 0.], [1.5, 1.5, 0.], [0., 0., 2.]]),
        &szp,
        M,
    ));
    let s6 = 1.0 / 6.0;
    out.push(matrix(
        "z: S_Z^-1 pi_S_Z(R(K))",
        &m3([[s6, s6, 0.], [s6, s6, 0.], [0., 0., 0.5]]),
        &restricted_inverse(&z, &k, tol)?,
        M,
    ));
    let t = epsilon_threshold(&w, &z, &k, tol)?;
    out.push(scalar(
        "z: |K*(S_Z^-1 - S_W^-1)|",
        1.0 / 6.0,
        t.deviation_norm,
        1e-9,
    ));
    out.push(scalar("z: |(S_Z^-1)* K|", 1.0 / 3.0, t.z_norm, 1e-9));
    out.push(scalar("z: |K|", 1.0, t.k_norm, 1e-9));
    out.push(scalar("z: epsilon threshold", 1.0, t.threshold, 1e-9));
    for (name, v) in [
        ("z: approximate dual norm, canonical V", &canonical.system),
        ("z: approximate dual norm, enlarged V", &r3_enlarged_dual()),
    ] {
        out.push(below(
            name,
            0.25,
            approximate_dual_norm(&z, v, &k, tol)?.norm,
        ));
    }
    let pb = perturbed_bounds(&w, &z, &k, 0.5, tol)?;
    out.push(scalar(
        "z: predicted lower bound at epsilon 1/2",
        0.25,
        pb.predicted.lower,
        B,
    ));
    out.push(flag(
        "z: actual bounds within prediction",
        true,
        pb.dominates,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_list_reports_every_check() {
        let checks = golden_checks(&ToleranceProfile::default()).unwrap();
        let failing: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert_eq!(
            failing,
            vec![
                "z: analysis epsilon",
                "z: |K*(S_Z^-1 - S_W^-1)|",
                "z: |(S_Z^-1)* K|",
                "z: |K|",
                "z: epsilon threshold",
                "z: approximate dual norm, canonical V",
                "z: approximate dual norm, enlarged V",
            ]
        );
    }
}
