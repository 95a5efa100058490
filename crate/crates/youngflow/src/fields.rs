//! Fields addressable by name, plus polynomial fields read from JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use youngflow_core::field::{self, Monomial, PolynomialField};
use youngflow_core::{LipschitzField, WorkingBox};

use crate::error::{CliError, CliResult};

/// A field by registry name and parameters, as it appears in configs and on
/// the command line (`--field rotation --field-param omega=2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Overrides the declared regularity exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Inline coefficients for `name = "polynomial"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<PolynomialSpec>,
    /// File holding a [`PolynomialSpec`] for `name = "polynomial"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<WorkingBox>,
}

impl FieldSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), params: BTreeMap::new(), alpha: None, polynomial: None, file: None, domain: None }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }
}

/// Declarative polynomial field: `entries[i * driver_dim + a]` lists the
/// monomials of the matrix entry `f_{ia}(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub state_dim: usize,
    pub driver_dim: usize,
    pub alpha: f64,
    pub entries: Vec<Vec<MonomialSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

pub struct RegistryEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// Parameters with defaults.
    pub params: &'static [(&'static str, f64)],
}

pub const REGISTRY: &[RegistryEntry] = &[
    RegistryEntry { name: "zero", summary: "f = 0 (d x n)", params: &[("d", 1.0), ("n", 1.0)] },
    RegistryEntry {
        name: "constant",
        summary: "f = c times the d x n matrix of ones on the diagonal",
        params: &[("c", 1.0), ("d", 1.0), ("n", 1.0)],
    },
    RegistryEntry { name: "identity", summary: "f = I (d x d)", params: &[("d", 1.0)] },
    RegistryEntry {
        name: "linear",
        summary: "f(y) = c y, one driver coordinate; unbounded, local on a working box",
        params: &[("c", 1.0), ("d", 1.0)],
    },
    RegistryEntry {
        name: "sine",
        summary: "scalar f(y) = a sin(w y)",
        params: &[("amplitude", 1.0), ("frequency", 1.0)],
    },
    RegistryEntry {
        name: "rotation",
        summary: "planar rotation with a Gaussian envelope, one driver coordinate",
        params: &[("omega", 1.0), ("width", 1.0)],
    },
    RegistryEntry {
        name: "coupled",
        summary: "rotation plus a bounded shear on a second driver coordinate",
        params: &[("omega", 1.0), ("width", 1.0), ("coupling", 0.5)],
    },
    RegistryEntry { name: "polynomial", summary: "coefficients from `polynomial` or `file` (JSON)", params: &[] },
];

fn dim_param(spec: &FieldSpec, key: &str, default: f64) -> CliResult<usize> {
    let v = spec.params.get(key).copied().unwrap_or(default);
    if !(v >= 1.0 && v.fract() == 0.0 && v <= 64.0) {
        return Err(CliError::Config(format!("field parameter {key} must be a positive integer, got {v}")));
    }
    Ok(v as usize)
}

pub fn load_polynomial(file: &std::path::Path) -> CliResult<PolynomialSpec> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(file, e))
}

pub fn build_polynomial(spec: &PolynomialSpec) -> CliResult<LipschitzField> {
    let entries = spec
        .entries
        .iter()
        .map(|e| e.iter().map(|m| Monomial { coefficient: m.coefficient, powers: m.powers.clone() }).collect())
        .collect();
    let poly = PolynomialField::new(spec.state_dim, spec.driver_dim, entries)?;
    Ok(field::polynomial(poly, spec.alpha)?)
}

/// Builds the field named in `spec`. Unknown names or parameters are rejected.
pub fn build_field(spec: &FieldSpec) -> CliResult<LipschitzField> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == spec.name)
        .ok_or_else(|| CliError::Config(format!("unknown field `{}` (see `youngflow fields`)", spec.name)))?;
    if let Some(bad) = spec.params.keys().find(|k| !entry.params.iter().any(|(name, _)| name == k)) {
        return Err(CliError::Config(format!("field `{}` has no parameter `{bad}`", spec.name)));
    }
    if spec.name != "polynomial" && (spec.polynomial.is_some() || spec.file.is_some()) {
        return Err(CliError::Config("polynomial coefficients given for a non-polynomial field".into()));
    }
    let get = |key: &str| {
        spec.params
            .get(key)
            .copied()
            .unwrap_or_else(|| entry.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).expect("registered"))
    };
    let built = match spec.name.as_str() {
        "zero" => field::zero(dim_param(spec, "d", 1.0)?, dim_param(spec, "n", 1.0)?),
        "constant" => {
            let (d, n) = (dim_param(spec, "d", 1.0)?, dim_param(spec, "n", 1.0)?);
            let c = get("c");
            let matrix = (0..d * n).map(|k| if k / n == k % n { c } else { 0.0 }).collect();
            field::constant(d, n, matrix)?
        }
        "identity" => field::identity(dim_param(spec, "d", 1.0)?),
        "linear" => {
            let d = dim_param(spec, "d", 1.0)?;
            let c = get("c");
            if d == 1 {
                field::linear_scalar(c)
            } else {
                let m = (0..d * d).map(|k| if k / d == k % d { c } else { 0.0 }).collect();
                field::linear(d, vec![m])?
            }
        }
        "sine" => field::sine(get("amplitude"), get("frequency")),
        "rotation" => field::rotation(get("omega"), get("width")),
        "coupled" => field::coupled(get("omega"), get("width"), get("coupling")),
        "polynomial" => {
            let poly = match (&spec.polynomial, &spec.file) {
                (Some(p), None) => p.clone(),
                (None, Some(f)) => load_polynomial(f)?,
                _ => {
                    return Err(CliError::Config(
                        "a polynomial field needs exactly one of `polynomial` and `file`".into(),
                    ))
                }
            };
            build_polynomial(&poly)?
        }
        _ => unreachable!("registry names are matched above"),
    };
    let built = match spec.alpha {
        Some(a) => built.with_alpha(a)?,
        None => built,
    };
    Ok(match &spec.domain {
        Some(b) => built.with_domain(b.clone()),
        None => built,
    })
}

/// Parses `key=value` pairs from the command line.
pub fn parse_params(pairs: &[String]) -> CliResult<BTreeMap<String, f64>> {
    pairs
        .iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("expected key=value, got `{kv}`")))?;
            let v: f64 =
                v.trim().parse().map_err(|_| CliError::Config(format!("`{v}` is not a number in `{kv}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}
