//! Model documents.
//!
//! A document is a JSON object (JSON5 syntax is accepted, so `Infinity` and
//! `NaN` tokens parse and are then rejected as non-finite). Tables are arrays
//! of rows, row = current state.
//!
//! ```json
//! {"kind": "chain", "n_states": 2, "length": 10, "homogeneous": true,
//!  "h": [[0e0, 0e0], [1e0, 2e-1]], "h_last": [[0e0, 1e0], [1e0, 1.2e0]]}
//! {"kind": "chain", "n_states": 3, "length": 4, "h_list": [[[...]], [[...]], [[...]]]}
//! {"kind": "singleton_pair", "n_states": 2, "length": 10, "homogeneous": true,
//!  "theta": [0e0, 1e0], "psi": [[0e0, 0e0], [0e0, -8e-1]]}
//! {"kind": "singleton_pair", ..., "theta_list": [[...], ...], "psi_list": [[[...]], ...]}
//! {"kind": "r_range", "n_states": 2, "length": 6, "range": 2, "factors": [[...8 reals], ...]}
//! {"kind": "r_range", ..., "homogeneous": true, "factor": [...]}
//! {"kind": "spatial_ising", "m": 3, "T": 4, "alpha": 5e-1, "beta": 3e-1, "delta": -2e-1}
//! ```
//!
//! Factor tables of r-range models are flat, in lexicographic tuple order.
//! Serialization writes every real in shortest round-trip scientific
//! notation, so parsing a serialized model gives back the same bits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{ChainModel, LogTable, PerSite, Potentials, RRangeModel, SingletonPairModel};
use crate::spatial::SpatialIsingModel;

/// Any model a document can describe.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelDocument {
    Chain(ChainModel),
    SingletonPair(SingletonPairModel),
    RRange(RRangeModel),
    SpatialIsing(SpatialIsingModel),
}

#[derive(Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Chain,
    SingletonPair,
    RRange,
    SpatialIsing,
}

type Table = Vec<Vec<f64>>;

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Kind,
    n_states: Option<usize>,
    length: Option<usize>,
    #[serde(default)]
    homogeneous: bool,
    labels: Option<Vec<String>>,
    h: Option<Table>,
    h_last: Option<Table>,
    h_list: Option<Vec<Table>>,
    theta: Option<Vec<f64>>,
    psi: Option<Table>,
    theta_list: Option<Vec<Vec<f64>>>,
    psi_list: Option<Vec<Table>>,
    range: Option<usize>,
    factor: Option<Vec<f64>>,
    factors: Option<Vec<Vec<f64>>>,
    m: Option<usize>,
    #[serde(rename = "T")]
    columns: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    delta: Option<f64>,
}

fn need<T>(field: Option<T>, name: &str) -> Result<T> {
    field.ok_or_else(|| Error::Malformed(format!("missing field `{name}`")))
}

fn finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn table(rows: Table, n: usize, what: &str) -> Result<LogTable> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("{what} must be {n}x{n}")));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    finite(&flat, what)?;
    LogTable::new(n, flat)
}

fn vector(values: Vec<f64>, n: usize, what: &str) -> Result<Vec<f64>> {
    if values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} entries, expected {n}",
            values.len()
        )));
    }
    finite(&values, what)?;
    Ok(values)
}

fn check_length(length: usize) -> Result<usize> {
    if length < 2 {
        return Err(Error::TooShort(length));
    }
    Ok(length)
}

fn build(raw: RawModel) -> Result<ModelDocument> {
    if raw.kind == Kind::SpatialIsing {
        let (a, b, d) = (need(raw.alpha, "alpha")?, need(raw.beta, "beta")?, need(raw.delta, "delta")?);
        finite(&[a, b, d], "lattice parameters")?;
        let t = check_length(need(raw.columns, "T")?)?;
        return Ok(ModelDocument::SpatialIsing(SpatialIsingModel::new(
            need(raw.m, "m")?,
            t,
            a,
            b,
            d,
        )?));
    }
    let n = need(raw.n_states, "n_states")?;
    let length = check_length(need(raw.length, "length")?)?;
    match raw.kind {
        Kind::Chain => {
            let model = if raw.homogeneous {
                let body = table(need(raw.h, "h")?, n, "h")?;
                match raw.h_last {
                    Some(last) => {
                        ChainModel::homogeneous_with_last(length, body, table(last, n, "h_last")?)?
                    }
                    None => ChainModel::homogeneous(length, body)?,
                }
            } else {
                let list = need(raw.h_list, "h_list")?;
                if list.len() + 1 != length {
                    return Err(Error::DimensionMismatch(format!(
                        "{} tables for {length} sites",
                        list.len()
                    )));
                }
                ChainModel::explicit(
                    list.into_iter()
                        .map(|t| table(t, n, "h_list entry"))
                        .collect::<Result<_>>()?,
                )?
            };
            Ok(ModelDocument::Chain(match raw.labels {
                Some(l) => model.with_labels(l)?,
                None => model,
            }))
        }
        Kind::SingletonPair => {
            let model = if raw.homogeneous {
                SingletonPairModel::homogeneous(
                    length,
                    vector(need(raw.theta, "theta")?, n, "theta")?,
                    table(need(raw.psi, "psi")?, n, "psi")?,
                )?
            } else {
                let theta = need(raw.theta_list, "theta_list")?
                    .into_iter()
                    .map(|t| vector(t, n, "theta_list entry"))
                    .collect::<Result<Vec<_>>>()?;
                let psi = need(raw.psi_list, "psi_list")?
                    .into_iter()
                    .map(|t| table(t, n, "psi_list entry"))
                    .collect::<Result<Vec<_>>>()?;
                if theta.len() != length {
                    return Err(Error::DimensionMismatch(format!(
                        "{} singleton vectors for {length} sites",
                        theta.len()
                    )));
                }
                SingletonPairModel::explicit(theta, psi)?
            };
            Ok(ModelDocument::SingletonPair(model))
        }
        Kind::RRange => {
            let range = need(raw.range, "range")?;
            let factors = if raw.homogeneous {
                let f = need(raw.factor, "factor")?;
                finite(&f, "factor")?;
                PerSite::Shared(f)
            } else {
                let fs = need(raw.factors, "factors")?;
                for f in &fs {
                    finite(f, "factors entry")?;
                }
                PerSite::Varying(fs)
            };
            Ok(ModelDocument::RRange(RRangeModel::new(n, length, range, factors)?))
        }
        Kind::SpatialIsing => unreachable!("handled above"),
    }
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<ModelDocument> {
    let raw: RawModel = json5::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    build(raw)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

fn real(x: f64) -> String {
    format!("{x:e}")
}

fn reals(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| real(x)).collect();
    format!("[{}]", items.join(", "))
}

fn rows(t: &LogTable) -> String {
    let n = t.n();
    let items: Vec<String> = t.values().chunks(n).map(reals).collect();
    format!("[{}]", items.join(", "))
}

fn list<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let items: Vec<String> = items.into_iter().map(f).collect();
    format!("[\n    {}\n  ]", items.join(",\n    "))
}

fn quoted(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Writes a model document that [`parse_model`] reads back unchanged.
pub fn serialize_model(doc: &ModelDocument) -> String {
    let mut fields: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| fields.push((k.to_string(), v));
    match doc {
        ModelDocument::Chain(m) => {
            put("kind", quoted("chain"));
            put("n_states", m.n_states().to_string());
            put("length", m.length().to_string());
            if let Some(labels) = m.labels() {
                let items: Vec<String> = labels.iter().map(|l| quoted(l)).collect();
                put("labels", format!("[{}]", items.join(", ")));
            }
            match m.potentials() {
                Potentials::Homogeneous { body, last } => {
                    put("homogeneous", "true".into());
                    put("h", rows(body));
                    if let Some(l) = last {
                        put("h_last", rows(l));
                    }
                }
                Potentials::Explicit(ts) => put("h_list", list(ts, rows)),
            }
        }
        ModelDocument::SingletonPair(m) => {
            put("kind", quoted("singleton_pair"));
            put("n_states", m.n_states().to_string());
            put("length", m.length().to_string());
            if m.is_homogeneous() {
                put("homogeneous", "true".into());
                put("theta", reals(m.theta(1)));
                put("psi", rows(m.psi(1)));
            } else {
                put("theta_list", list(1..=m.length(), |t| reals(m.theta(t))));
                put("psi_list", list(1..m.length(), |t| rows(m.psi(t))));
            }
        }
        ModelDocument::RRange(m) => {
            put("kind", quoted("r_range"));
            put("n_states", m.n_states().to_string());
            put("length", m.length().to_string());
            put("range", m.range().to_string());
            match m.factors() {
                PerSite::Shared(f) => {
                    put("homogeneous", "true".into());
                    put("factor", reals(f));
                }
                PerSite::Varying(fs) => put("factors", list(fs, |f| reals(f))),
            }
        }
        ModelDocument::SpatialIsing(m) => {
            put("kind", quoted("spatial_ising"));
            put("m", m.rows().to_string());
            put("T", m.columns().to_string());
            put("alpha", real(m.alpha()));
            put("beta", real(m.beta()));
            put("delta", real(m.delta()));
        }
    }
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("  {}: {v}", quoted(k)))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}

impl ModelDocument {
    /// The chain form of a chain or singleton/pair model.
    pub fn to_chain(&self) -> Result<ChainModel> {
        match self {
            ModelDocument::Chain(m) => Ok(m.clone()),
            ModelDocument::SingletonPair(m) => Ok(m.to_chain_form()),
            ModelDocument::RRange(_) => Err(Error::InvalidArgument(
                "r-range models must be lifted before use as a chain".into(),
            )),
            ModelDocument::SpatialIsing(_) => Err(Error::InvalidArgument(
                "lattice models are handled by the spatial commands".into(),
            )),
        }
    }

    pub fn length(&self) -> usize {
        match self {
            ModelDocument::Chain(m) => m.length(),
            ModelDocument::SingletonPair(m) => m.length(),
            ModelDocument::RRange(m) => m.length(),
            ModelDocument::SpatialIsing(m) => m.columns(),
        }
    }

    /// Same model with another length; only homogeneous models qualify.
    pub fn with_length(&self, length: usize) -> Result<Self> {
        match self {
            ModelDocument::Chain(m) => m.with_length(length).map(ModelDocument::Chain),
            ModelDocument::SingletonPair(m) => m.with_length(length).map(ModelDocument::SingletonPair),
            ModelDocument::RRange(m) => match m.factors() {
                PerSite::Shared(_) => RRangeModel::new(m.n_states(), length, m.range(), m.factors().clone())
                    .map(ModelDocument::RRange),
                PerSite::Varying(_) => Err(Error::InvalidArgument(
                    "only homogeneous models can change length".into(),
                )),
            },
            ModelDocument::SpatialIsing(m) => m.with_length(length).map(ModelDocument::SpatialIsing),
        }
    }
}

/// Example 1: binary chain on `{0, 1}` with `θ(z) = z`, `Ψ(z, z') = −0.8 z z'`.
pub const EXAMPLE_ONE: &str = include_str!("../models/example1.json");

/// Example 2: bivariate binary chain on `{0, 1}²`, `θ(x, y) = x − 0.8y − 0.5xy`,
/// `Ψ = 0.04(x x' + y y')`.
pub const EXAMPLE_TWO: &str = include_str!("../models/example2.json");

/// A bundled model by name (`example1`, `example2`).
pub fn bundled(name: &str) -> Result<ModelDocument> {
    match name {
        "example1" => parse_model(EXAMPLE_ONE),
        "example2" => parse_model(EXAMPLE_TWO),
        _ => Err(Error::InvalidArgument(format!("no bundled model named `{name}`"))),
    }
}
