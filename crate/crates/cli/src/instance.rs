//! Instance files: one JSON document with `K`, named fusion systems and
//! optional overrides.
//!
//! Numbers may be JSON numbers or strings holding exact rationals (`"1/2"`)
//! or decimals (`"0.25"`). The literal text is kept, so saving a loaded
//! instance reproduces it.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use kfusion::numerics::{Mat, Vector};
use kfusion::{random, FusionSystem, Subspace, ToleranceProfile};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

const EXAMPLE_R3: &str = include_str!("../instances/example_r3.json");
const EXAMPLE_R4: &str = include_str!("../instances/example_r4.json");

/// Bundled instances addressable as `@name`.
pub const BUNDLED: [(&str, &str); 2] = [("example_r3", EXAMPLE_R3), ("example_r4", EXAMPLE_R4)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Number(serde_json::Number),
    Text(String),
}

impl Literal {
    pub fn value(&self) -> Result<f64, String> {
        let x = match self {
            Literal::Number(n) => n
                .as_f64()
                .ok_or_else(|| format!("{n} is not representable"))?,
            Literal::Text(s) => parse_text(s.trim())?,
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("{x} is not finite"))
        }
    }

    fn from_f64(x: f64) -> Self {
        serde_json::Number::from_f64(x)
            .map_or_else(|| Literal::Text(x.to_string()), Literal::Number)
    }
}

fn parse_text(s: &str) -> Result<f64, String> {
    if s.contains('/') {
        let r = Ratio::<i64>::from_str(s).map_err(|e| format!("bad rational {s:?}: {e}"))?;
        r.to_f64()
            .ok_or_else(|| format!("{s} is not representable"))
    } else {
        f64::from_str(s).map_err(|_| format!("bad number {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    /// Spanning vectors, not necessarily orthonormal or independent.
    pub span: Vec<Vec<Literal>>,
    pub weight: Literal,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Options {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// The file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub ambient_dim: usize,
    pub k: MatrixSpec,
    pub systems: BTreeMap<String, Vec<MemberSpec>>,
    #[serde(default, skip_serializing_if = "Options::is_empty")]
    pub options: Options,
}

/// A validated instance with orthonormalized members.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub file: InstanceFile,
    pub k: Mat,
    pub systems: BTreeMap<String, FusionSystem>,
    pub tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub seed: Option<u64>,
}

impl ProblemInstance {
    pub fn system(&self, name: &str) -> Result<&FusionSystem, CliError> {
        self.systems.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.systems.keys().map(String::as_str).collect();
            CliError::Input(format!("no system named {name:?} (have {known:?})"))
        })
    }
}

pub fn parse(text: &str) -> Result<InstanceFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("field {path}: {}", e.into_inner()))
    })
}

pub fn read(source: &str) -> Result<String, CliError> {
    if let Some(name) = source.strip_prefix('@') {
        return BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| CliError::Input(format!("no bundled instance named {name:?}")));
    }
    std::fs::read_to_string(source).map_err(|e| CliError::Input(format!("{source}: {e}")))
}

fn literal(field: &str, x: &Literal) -> Result<f64, CliError> {
    x.value()
        .map_err(|e| CliError::Input(format!("field {field}: {e}")))
}

pub fn validate(file: InstanceFile, tol: &ToleranceProfile) -> Result<ProblemInstance, CliError> {
    let n = file.ambient_dim;
    if n == 0 {
        return Err(CliError::Input(
            "field ambient_dim: must be at least 1".into(),
        ));
    }
    let spec = &file.k;
    if spec.rows != n {
        return Err(CliError::Input(format!(
            "field k.rows: {} does not match ambient_dim {n}",
            spec.rows
        )));
    }
    if spec.cols == 0 || spec.data.len() != spec.rows * spec.cols {
        return Err(CliError::Input(format!(
            "field k.data: expected {} entries for a {}x{} matrix, got {}",
            spec.rows * spec.cols,
            spec.rows,
            spec.cols,
            spec.data.len()
        )));
    }
    let entries = spec
        .data
        .iter()
        .enumerate()
        .map(|(i, x)| literal(&format!("k.data[{i}]"), x))
        .collect::<Result<Vec<_>, _>>()?;
    let k = Mat::from_row_slice(spec.rows, spec.cols, &entries);

    if !file.systems.contains_key("W") {
        return Err(CliError::Input(
            "field systems: a system named \"W\" is required".into(),
        ));
    }
    let mut systems = BTreeMap::new();
    for (name, members) in &file.systems {
        let mut built = Vec::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            let at = format!("systems.{name}[{i}]");
            let weight = literal(&format!("{at}.weight"), &m.weight)?;
            if weight <= 0.0 {
                return Err(CliError::Input(format!(
                    "field {at}.weight: member {i} of {name} has weight {weight}, which is not positive"
                )));
            }
            let mut vectors = Vec::with_capacity(m.span.len());
            for (j, v) in m.span.iter().enumerate() {
                if v.len() != n {
                    return Err(CliError::Input(format!(
                        "field {at}.span[{j}]: expected {n} entries, got {}",
                        v.len()
                    )));
                }
                let xs = v
                    .iter()
                    .enumerate()
                    .map(|(c, x)| literal(&format!("{at}.span[{j}][{c}]"), x))
                    .collect::<Result<Vec<_>, _>>()?;
                vectors.push(Vector::from_vec(xs));
            }
            let subspace = if vectors.is_empty() {
                Subspace::zero(n)
            } else {
                Subspace::from_spanning(&vectors, tol).map_err(|e| CliError::core(&at, e))?
            };
            built.push((subspace, weight));
        }
        if built.is_empty() {
            return Err(CliError::Input(format!("field systems.{name}: no members")));
        }
        let system = FusionSystem::new(n, built)
            .map_err(|e| CliError::core(&format!("systems.{name}"), e))?;
        systems.insert(name.clone(), system);
    }
    let opt = &file.options;
    let tol_override = opt
        .tol
        .as_ref()
        .map(|x| literal("options.tol", x))
        .transpose()?;
    let rank_override = opt
        .rank_tol
        .as_ref()
        .map(|x| literal("options.rank_tol", x))
        .transpose()?;
    let seed = opt.seed;
    Ok(ProblemInstance {
        file,
        k,
        systems,
        tol: tol_override,
        rank_tol: rank_override,
        seed,
    })
}

/// Canonical text of an instance or report: sorted keys, two-space indent,
/// arrays without objects on one line.
pub fn render(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn has_object(v: &Value) -> bool {
    match v {
        Value::Object(_) => true,
        Value::Array(xs) => xs.iter().any(has_object),
        _ => false,
    }
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        Value::Array(xs) if has_object(v) => {
            out.push_str("[\n");
            for (i, x) in xs.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(x, depth + 1, out);
                out.push_str(if i + 1 < xs.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Array(xs) => {
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, depth, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn save(file: &InstanceFile) -> String {
    render(&serde_json::to_value(file).expect("instance serializes"))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Seeded random instance: `K = U·diag·V*` of the given rank and a system `W`
/// of Gaussian subspaces.
pub fn random_instance(
    seed: u64,
    ambient_dim: usize,
    member_count: usize,
    rank_k: usize,
) -> Result<InstanceFile, CliError> {
    if ambient_dim == 0 || member_count == 0 || rank_k == 0 || rank_k > ambient_dim {
        return Err(CliError::Input(format!(
            "infeasible dimensions: dim {ambient_dim}, members {member_count}, rank {rank_k} \
             (need dim, members >= 1 and 1 <= rank <= dim)"
        )));
    }
    let mut rng = random::rng(seed);
    let k = random::operator_of_rank(&mut rng, ambient_dim, rank_k)
        .map_err(|e| CliError::core("random K", e))?;
    let max_dim = ambient_dim
        .div_ceil(2)
        .max(ambient_dim.div_ceil(member_count));
    let w = random::fusion_system(&mut rng, ambient_dim, member_count, max_dim);
    let members = w
        .members()
        .iter()
        .map(|m| MemberSpec {
            span: m
                .subspace
                .basis()
                .column_iter()
                .map(|c| c.iter().copied().map(Literal::from_f64).collect())
                .collect(),
            weight: Literal::from_f64(m.weight),
        })
        .collect();
    Ok(InstanceFile {
        comment: Some(format!(
            "random instance: seed {seed}, dim {ambient_dim}, {member_count} members, rank {rank_k}"
        )),
        ambient_dim,
        k: MatrixSpec {
            rows: ambient_dim,
            cols: ambient_dim,
            data: k
                .transpose()
                .iter()
                .copied()
                .map(Literal::from_f64)
                .collect(),
        },
        systems: BTreeMap::from([("W".to_string(), members)]),
        options: Options {
            seed: Some(seed),
            ..Options::default()
        },
    })
}
