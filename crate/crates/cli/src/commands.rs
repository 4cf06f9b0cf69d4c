use kfusion::duality::{
    canonical_k_dual, check_sws_range_condition, enlarge_dual, is_k_dual, qk_dual_from_xw,
};
use kfusion::factorization::x_w;
use kfusion::frames::{is_exact, is_minimal, verify_k_fusion};
use kfusion::golden::golden_checks;
use kfusion::numerics::Vector;
use kfusion::perturbation::{
    analysis_epsilon, approximate_dual_norm, certify_perturbation, epsilon_threshold,
    perturbed_bounds,
};
use kfusion::resolution::{
    minimal_norm_check, random_resolution_into_members, resolution_b, resolution_c,
    resolution_from_x, verify_resolution, Resolution,
};
use kfusion::{random, Exec, FusionSystem, Mat, Subspace, ToleranceProfile};
use serde_json::{json, Value};

use crate::error::{CliError, Context};
use crate::instance::{self, Literal, ProblemInstance};
use crate::report::{self, bounds, matrix, num, opt_bounds, vector, Report};
use crate::{Command, Common};

struct Ctx<'a> {
    common: &'a Common,
    tol: ToleranceProfile,
    seed: u64,
    instance: Option<ProblemInstance>,
}

impl Ctx<'_> {
    fn instance(&self) -> Result<&ProblemInstance, CliError> {
        self.instance
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs --in <file>".into()))
    }

    fn w_and_k(&self) -> Result<(&FusionSystem, &Mat), CliError> {
        let inst = self.instance()?;
        Ok((inst.system(&self.common.system)?, &inst.k))
    }

    fn system(&self, name: &str) -> Result<&FusionSystem, CliError> {
        self.instance()?.system(name)
    }

    fn report(&self, name: &str, params: Value, results: Value, pass: bool) -> Report {
        let inputs = json!({
            "command": name,
            "instance": self.instance.as_ref().map(|i| serde_json::to_value(&i.file).expect("instance serializes")),
            "system": self.common.system,
            "seed": self.seed,
            "tolerance": [num(self.tol.rank_rel), num(self.tol.eq_abs), num(self.tol.eq_rel)],
            "params": params,
        });
        Report {
            command: name.to_string(),
            inputs_digest: report::digest(&inputs),
            results,
            pass,
        }
    }
}

fn tolerance(
    common: &Common,
    inst: Option<&ProblemInstance>,
) -> Result<ToleranceProfile, CliError> {
    let mut t = ToleranceProfile::default();
    let tol = common.tol.or(inst.and_then(|i| i.tol));
    if let Some(x) = tol {
        t.eq_abs = x;
        t.eq_rel = x;
    }
    if let Some(x) = common.rank_tol.or(inst.and_then(|i| i.rank_tol)) {
        t.rank_rel = x;
    }
    t.validate().map_err(|e| CliError::core("tolerance", e))?;
    Ok(t)
}

fn context(common: &Common) -> Result<Ctx<'_>, CliError> {
    let loaded = match &common.input {
        Some(src) => {
            // Rank decisions on load need the final rank tolerance, and
            // the file may carry its own.
            let text = instance::read(src)?;
            let file = instance::parse(&text).map_err(|e| e.context(src))?;
            let first = instance::validate(file.clone(), &ToleranceProfile::default())
                .map_err(|e| e.context(src))?;
            let tol = tolerance(common, Some(&first))?;
            Some(instance::validate(file, &tol).map_err(|e| e.context(src))?)
        }
        None => None,
    };
    let tol = tolerance(common, loaded.as_ref())?;
    let seed = common
        .seed
        .or(loaded.as_ref().and_then(|i| i.seed))
        .unwrap_or(0);
    Ok(Ctx {
        common,
        tol,
        seed,
        instance: loaded,
    })
}

pub fn run(command: &Command) -> Result<Report, CliError> {
    let (common, name) = match command {
        Command::Verify(c) => (c, "verify"),
        Command::Bounds(c) => (c, "bounds"),
        Command::Douglas(c) => (c, "douglas"),
        Command::QkDual(c) => (c, "qk-dual"),
        Command::KDual { common, .. } => (common, "k-dual"),
        Command::CanonicalDual(c) => (c, "canonical-dual"),
        Command::EnlargeDual { common, .. } => (common, "enlarge-dual"),
        Command::Resolution(c) => (c, "resolution"),
        Command::MinimalNorm { common, .. } => (common, "minimal-norm"),
        Command::Perturb { common, .. } => (common, "perturb"),
        Command::ApproxDual { common, .. } => (common, "approx-dual"),
        Command::Examples(c) => (c, "examples"),
        Command::Random { common, .. } => (common, "random"),
    };
    let ctx = context(common)?;
    let report = match command {
        Command::Verify(_) => verify(&ctx, name)?,
        Command::Bounds(_) => bounds_cmd(&ctx, name)?,
        Command::Douglas(_) => douglas(&ctx, name)?,
        Command::QkDual(_) => qk_dual(&ctx, name)?,
        Command::KDual { dual, .. } => k_dual(&ctx, name, dual)?,
        Command::CanonicalDual(_) => canonical(&ctx, name)?,
        Command::EnlargeDual {
            dual, member, with, ..
        } => enlarge(&ctx, name, dual.as_deref(), *member, with)?,
        Command::Resolution(_) => resolution(&ctx, name)?,
        Command::MinimalNorm { samples, .. } => minimal_norm(&ctx, name, *samples)?,
        Command::Perturb {
            perturbed,
            lambda1,
            lambda2,
            epsilon,
            ..
        } => perturb(&ctx, name, perturbed, lambda1.zip(*lambda2).zip(*epsilon))?,
        Command::ApproxDual {
            perturbed, dual, ..
        } => approx_dual(&ctx, name, perturbed, dual.as_deref())?,
        Command::Examples(_) => examples(&ctx, name)?,
        Command::Random {
            dim,
            members,
            rank,
            save,
            ..
        } => random_cmd(&ctx, name, *dim, *members, *rank, save.as_deref())?,
    };
    if let Some(path) = &common.out {
        instance::write(path, &report.to_json())?;
    }
    Ok(report)
}

fn verify(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let tol = &ctx.tol;
    let check = verify_k_fusion(w, k, tol).ctx("verify_k_fusion")?;
    let exact = if check.is_k_fusion() {
        let ex = is_exact(w, k, tol).ctx("is_exact")?;
        json!({
            "exact": ex.exact,
            "removable": ex.removable.iter().map(opt_bounds).collect::<Vec<_>>(),
        })
    } else {
        Value::Null
    };
    let results = json!({
        "k_fusion": check.is_k_fusion(),
        "bounds": opt_bounds(&check.bounds()),
        "lower_douglas": num(check.lower_douglas),
        "lower_agree": check.lower_agree,
        "uncovered_column": check.witness.as_ref().map(vector),
        "violating_direction": check.violating_direction.as_ref().map(vector),
        "minimal": is_minimal(w, tol).ctx("is_minimal")?,
        "exactness": exact,
    });
    Ok(ctx.report(name, Value::Null, results, check.is_k_fusion()))
}

fn bounds_cmd(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let check = verify_k_fusion(w, k, &ctx.tol).ctx("verify_k_fusion")?;
    let results = json!({
        "bounds": opt_bounds(&check.bounds()),
        "violating_direction": check.violating_direction.as_ref().map(vector),
    });
    Ok(ctx.report(name, Value::Null, results, check.is_k_fusion()))
}

fn douglas(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let xw = x_w(w, k, &ctx.tol).ctx("x_w")?;
    let d = &xw.douglas;
    let certified = d.certified(&ctx.tol);
    let results = json!({
        "x": matrix(&d.x),
        "norm_sq": num(d.norm_sq),
        "alpha_inf": num(d.alpha_inf),
        "nullspace_match": d.nullspace_match,
        "range_containment": d.range_containment,
        "residual": num(d.residual),
        "certified": certified,
    });
    Ok(ctx.report(name, Value::Null, results, certified))
}

fn qk_dual(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let xw = x_w(w, k, &ctx.tol).ctx("x_w")?;
    let qk = qk_dual_from_xw(&xw, k, &ctx.tol).ctx("qk_dual_from_xw")?;
    let r = &qk.report;
    let results = json!({
        "dual": report::system(&qk.system),
        "q": matrix(&qk.q),
        "q_norm": num(r.q_norm),
        "residual": num(r.certificate.residual),
        "w_bounds": opt_bounds(&r.w_bounds),
        "dual_bounds": opt_bounds(&r.v_bounds),
        "lower_margin": r.lower_margin.map(num),
        "upper_margin": r.upper_margin.map(num),
    });
    Ok(ctx.report(name, Value::Null, results, r.certificate.pass))
}

fn k_dual(ctx: &Ctx, name: &str, dual: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let v = ctx.system(dual)?;
    let cert = is_k_dual(w, v, k, &ctx.tol).ctx("is_k_dual")?;
    let results = json!({"residual": num(cert.residual)});
    Ok(ctx.report(name, json!({"dual": dual}), results, cert.pass))
}

fn canonical(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let c = canonical_k_dual(w, k, &ctx.tol).ctx("canonical_k_dual")?;
    let sws = check_sws_range_condition(w, k, &ctx.tol).ctx("check_sws_range_condition")?;
    let results = json!({
        "dual": report::system(&c.system),
        "residual": num(c.certificate.residual),
        "bessel": {
            "bound": num(c.bessel.bessel_bound),
            "estimate": num(c.bessel.estimate),
            "within_estimate": c.bessel.within_estimate,
        },
        "sws_condition": sws.condition,
        "equals_qk_dual": sws.families_equal,
        "operators_equal": sws.operators_equal,
    });
    Ok(ctx.report(name, Value::Null, results, c.certificate.pass))
}

fn parse_vector(text: &str, n: usize) -> Result<Vector, CliError> {
    let xs = text
        .split(',')
        .map(|s| {
            Literal::Text(s.to_string())
                .value()
                .map_err(|e| CliError::Input(format!("--with {text:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if xs.len() != n {
        return Err(CliError::Input(format!(
            "--with {text:?}: expected {n} entries, got {}",
            xs.len()
        )));
    }
    Ok(Vector::from_vec(xs))
}

fn enlarge(
    ctx: &Ctx,
    name: &str,
    dual: Option<&str>,
    member: usize,
    with: &[String],
) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let base = match dual {
        Some(d) => ctx.system(d)?.clone(),
        None => {
            canonical_k_dual(w, k, &ctx.tol)
                .ctx("canonical_k_dual")?
                .system
        }
    };
    if member == 0 || member > base.len() {
        return Err(CliError::Input(format!(
            "--member {member}: expected 1..={}",
            base.len()
        )));
    }
    let vectors = with
        .iter()
        .map(|s| parse_vector(s, w.ambient_dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let u = Subspace::from_spanning(&vectors, &ctx.tol).ctx("--with")?;
    let (v, cert) =
        enlarge_dual(w, k, &base, member - 1, &u, &ctx.tol).ctx(&format!("--member {member}"))?;
    let results = json!({
        "dual": report::system(&v),
        "residual": num(cert.residual),
    });
    let params = json!({"dual": dual, "member": member, "with": with});
    Ok(ctx.report(name, params, results, cert.pass))
}

fn resolution(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let tol = &ctx.tol;
    let xw = x_w(w, k, tol).ctx("x_w")?;
    let entries: [(&str, Resolution); 3] = [
        ("from_x", resolution_from_x(&xw).ctx("resolution_from_x")?),
        (
            "projected_dual",
            resolution_b(w, k, tol).ctx("resolution_b")?,
        ),
        (
            "restricted_inverse",
            resolution_c(w, k, tol).ctx("resolution_c")?,
        ),
    ];
    let mut results = serde_json::Map::new();
    let mut pass = true;
    for (label, r) in entries {
        let c = verify_resolution(&r, k, tol).ctx(label)?;
        pass &= c.pass;
        results.insert(
            label.to_string(),
            json!({"residual": num(c.residual), "bounds": bounds(&c.bounds()), "pass": c.pass}),
        );
    }
    Ok(ctx.report(name, Value::Null, Value::Object(results), pass))
}

fn minimal_norm(ctx: &Ctx, name: &str, samples: usize) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let xw = x_w(w, k, &ctx.tol).ctx("x_w")?;
    let thetas = random_resolution_into_members(&mut random::rng(ctx.seed), &xw, &ctx.tol)
        .ctx("random_resolution_into_members")?;
    let r =
        minimal_norm_check(w, k, &thetas, samples, ctx.seed, &ctx.tol).ctx("minimal_norm_check")?;
    let results = json!({
        "samples": r.samples,
        "min_margin": num(r.min_margin),
        "min_margin_shifted": num(r.min_margin_shifted),
        "max_margin": num(r.max_margin),
        "hypothesis_residual": num(r.hypothesis_residual),
    });
    Ok(ctx.report(name, json!({"samples": samples}), results, r.pass))
}

fn perturb(
    ctx: &Ctx,
    name: &str,
    perturbed: &str,
    lambdas: Option<((f64, f64), f64)>,
) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let z = ctx.system(perturbed)?;
    let tol = &ctx.tol;
    let params = json!({"perturbed": perturbed, "lambdas": lambdas.map(|((a, b), e)| [a, b, e])});
    if let Some(((l1, l2), eps)) = lambdas {
        let r = certify_perturbation(w, z, k, l1, l2, eps, ctx.seed, Exec::Sequential, tol)
            .ctx("certify_perturbation")?;
        let results = json!({
            "phase": format!("{:?}", r.phase).to_lowercase(),
            "certificate_ratio": num(r.certificate_ratio),
            "epsilon_threshold": num(r.epsilon_threshold),
            "predicted_bounds": bounds(&r.predicted_bounds),
            "actual_bounds": opt_bounds(&r.actual_bounds),
            "dominates": r.dominates,
            "witness": r.falsified_witness.as_ref().map(|(i, f)| json!({"member": i + 1, "f": vector(f)})),
            "notes": r.notes,
        });
        return Ok(ctx.report(name, params, results, r.certified && r.dominates));
    }
    let eps = analysis_epsilon(w, z, k, tol).ctx("analysis_epsilon")?;
    let sqrt_a = verify_k_fusion(w, k, tol)
        .ctx("verify_k_fusion")?
        .bounds()
        .ok_or_else(|| {
            CliError::core(
                "perturb",
                kfusion::Error::Hypothesis("W is not a K-fusion frame".into()),
            )
        })?
        .lower
        .sqrt();
    let (predicted, pass) = if eps < sqrt_a {
        let p = perturbed_bounds(w, z, k, eps, tol).ctx("perturbed_bounds")?;
        let v = json!({"predicted": bounds(&p.predicted), "actual": opt_bounds(&p.actual), "dominates": p.dominates});
        (v, p.dominates)
    } else {
        (Value::Null, false)
    };
    let results = json!({
        "analysis_epsilon": num(eps),
        "sqrt_a": num(sqrt_a),
        "perturbed_bounds": predicted,
    });
    Ok(ctx.report(name, params, results, pass))
}

fn approx_dual(
    ctx: &Ctx,
    name: &str,
    perturbed: &str,
    dual: Option<&str>,
) -> Result<Report, CliError> {
    let (w, k) = ctx.w_and_k()?;
    let z = ctx.system(perturbed)?;
    let tol = &ctx.tol;
    let v = match dual {
        Some(d) => ctx.system(d)?.clone(),
        None => canonical_k_dual(w, k, tol).ctx("canonical_k_dual")?.system,
    };
    let a = approximate_dual_norm(z, &v, k, tol).ctx("approximate_dual_norm")?;
    let eps = analysis_epsilon(w, z, k, tol).ctx("analysis_epsilon")?;
    let t = epsilon_threshold(w, z, k, tol).ctx("epsilon_threshold")?;
    let results = json!({
        "norm": num(a.norm),
        "analysis_epsilon": num(eps),
        "threshold": {
            "value": num(t.threshold),
            "sqrt_a": num(t.sqrt_a),
            "deviation_norm": num(t.deviation_norm),
            "z_norm": num(t.z_norm),
            "k_norm": num(t.k_norm),
            "vacuous": t.vacuous,
        },
        "below_threshold": eps < t.threshold,
    });
    Ok(ctx.report(
        name,
        json!({"perturbed": perturbed, "dual": dual}),
        results,
        a.pass,
    ))
}

fn examples(ctx: &Ctx, name: &str) -> Result<Report, CliError> {
    let checks = golden_checks(&ctx.tol).ctx("golden_checks")?;
    let pass = checks.iter().all(|c| c.pass);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let results = json!({
        "total": checks.len(),
        "failed": failed,
        "checks": checks.iter().map(|c| json!({
            "name": c.name, "stated": c.stated, "computed": c.computed, "pass": c.pass,
        })).collect::<Vec<_>>(),
    });
    Ok(ctx.report(name, Value::Null, results, pass))
}

fn random_cmd(
    ctx: &Ctx,
    name: &str,
    dim: usize,
    members: usize,
    rank: usize,
    save: Option<&std::path::Path>,
) -> Result<Report, CliError> {
    let file = instance::random_instance(ctx.seed, dim, members, rank)?;
    let text = instance::save(&file);
    let inst = instance::validate(file, &ctx.tol)?;
    if let Some(path) = save {
        instance::write(path, &text)?;
    }
    let w = inst.system("W")?;
    let check = verify_k_fusion(w, &inst.k, &ctx.tol).ctx("verify_k_fusion")?;
    let results = json!({
        "instance_digest": report::digest(&serde_json::to_value(&inst.file).expect("instance serializes")),
        "k_fusion": check.is_k_fusion(),
        "bounds": opt_bounds(&check.bounds()),
    });
    let params = json!({"dim": dim, "members": members, "rank": rank});
    Ok(ctx.report(name, params, results, check.is_k_fusion()))
}
