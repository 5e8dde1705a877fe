//! JSON model files: parsing with document paths in every error, and a
//! canonical serializer (sorted keys, reduced rationals).
//!
//! All numbers travel as exact rational strings `"num/den"` (`"num"` when the
//! denominator is one); floats appear only under keys suffixed `_approx`.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use buildings::harmonic::{Edge, TargetPoint, VoltageGraph, WeightedGraph};
use buildings::matrix::Matrix;
use buildings::monodromy::{GroupPresentation, GroupRep, ResidueMultiset, Word};
use buildings::norms::DiagNorm;
use buildings::scalars::{NfElem, NumberField, PrimePlace, Rat};

pub const SCHEMA_VERSION: u64 = 1;

/// A parse failure: where in the document, and why.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub path: String,
    pub reason: String,
}

impl ParseError {
    fn new(path: &str, reason: impl Into<String>) -> Self {
        ParseError {
            path: path.to_string(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Any of the model payloads a file can carry.
#[derive(Debug, Clone)]
pub enum ModelFile {
    Norm(DiagNorm),
    Graph {
        graph: WeightedGraph,
        boundary_values: BTreeMap<usize, TargetPoint>,
    },
    VoltageGraph(VoltageGraph),
    Rep(ParsedRep),
    Residues(ResidueMultiset),
}

/// Representations come with rational or number-field coefficients.
#[derive(Debug, Clone)]
pub enum ParsedRep {
    Rational(GroupRep<Rat>),
    NumberField(GroupRep<NfElem>),
}

pub fn parse_rational(s: &str, path: &str) -> ParseResult<Rat> {
    let parts: Vec<&str> = s.split('/').collect();
    let parse_int = |t: &str| -> ParseResult<BigInt> {
        BigInt::from_str(t.trim())
            .map_err(|_| ParseError::new(path, format!("invalid integer {t:?}")))
    };
    match parts.as_slice() {
        [n] => Ok(Rat::from_integer(parse_int(n)?)),
        [n, d] => {
            let num = parse_int(n)?;
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(ParseError::new(path, "invalid rational: zero denominator"));
            }
            Ok(Rat::new(num, den))
        }
        _ => Err(ParseError::new(path, format!("invalid rational {s:?}"))),
    }
}

pub fn rational_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn get<'a>(v: &'a Value, key: &str, path: &str) -> ParseResult<&'a Value> {
    v.get(key)
        .ok_or_else(|| ParseError::new(path, format!("missing field {key:?}")))
}

fn as_str<'a>(v: &'a Value, path: &str) -> ParseResult<&'a str> {
    v.as_str()
        .ok_or_else(|| ParseError::new(path, "expected a string"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> ParseResult<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| ParseError::new(path, "expected an array"))
}

fn as_u64(v: &Value, path: &str) -> ParseResult<u64> {
    v.as_u64()
        .ok_or_else(|| ParseError::new(path, "expected a nonnegative integer"))
}

fn rational_at(v: &Value, path: &str) -> ParseResult<Rat> {
    parse_rational(as_str(v, path)?, path)
}

fn check_header(v: &Value, expected_kind: &str) -> ParseResult<()> {
    let kind = as_str(get(v, "kind", "$")?, "$.kind")?;
    if kind != expected_kind {
        return Err(ParseError::new(
            "$.kind",
            format!("expected {expected_kind:?}, found {kind:?}"),
        ));
    }
    let version = as_u64(get(v, "schema_version", "$")?, "$.schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(ParseError::new(
            "$.schema_version",
            format!("unsupported schema version {version}"),
        ));
    }
    Ok(())
}

fn parse_rat_matrix(v: &Value, path: &str) -> ParseResult<Matrix<Rat>> {
    let rows = as_array(v, path)?;
    let mut parsed = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let cells = as_array(row, &rp)?;
        let mut out = Vec::with_capacity(cells.len());
        for (j, cell) in cells.iter().enumerate() {
            out.push(rational_at(cell, &format!("{rp}[{j}]"))?);
        }
        parsed.push(out);
    }
    Matrix::from_rows(parsed).map_err(|e| ParseError::new(path, e.to_string()))
}

fn parse_place(v: &Value, path: &str) -> ParseResult<PrimePlace> {
    let p_raw = match v {
        Value::String(s) => s
            .parse::<u64>()
            .map_err(|_| ParseError::new(path, "expected a prime integer"))?,
        other => as_u64(other, path)?,
    };
    PrimePlace::new(p_raw).map_err(|_| ParseError::new(path, format!("{p_raw} is not prime")))
}

/// Norm payload: `p`, row-major `basis` (columns are the diagonalising
/// vectors), `weights`.
pub fn parse_norm_payload(v: &Value, base: &str) -> ParseResult<DiagNorm> {
    let place = parse_place(get(v, "p", base)?, &format!("{base}.p"))?;
    let basis = parse_rat_matrix(get(v, "basis", base)?, &format!("{base}.basis"))?;
    let weights_path = format!("{base}.weights");
    let weights_raw = as_array(get(v, "weights", base)?, &weights_path)?;
    let mut weights = Vec::with_capacity(weights_raw.len());
    for (i, w) in weights_raw.iter().enumerate() {
        weights.push(rational_at(w, &format!("{weights_path}[{i}]"))?);
    }
    DiagNorm::new(place, basis, weights).map_err(|e| ParseError::new(base, e.to_string()))
}

pub fn norm_payload(n: &DiagNorm) -> Value {
    let basis: Vec<Value> = (0..n.dim())
        .map(|r| {
            Value::Array(
                (0..n.dim())
                    .map(|c| Value::String(rational_string(n.basis().at(r, c))))
                    .collect(),
            )
        })
        .collect();
    json!({
        "p": n.place().p().to_string(),
        "basis": basis,
        "weights": n.weights().iter().map(rational_string).collect::<Vec<_>>(),
    })
}

pub fn norm_file(n: &DiagNorm) -> Value {
    let mut obj = norm_payload(n);
    attach_header(&mut obj, "norm");
    obj
}

fn attach_header(v: &mut Value, kind: &str) {
    if let Value::Object(map) = v {
        map.insert("kind".into(), Value::String(kind.into()));
        map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    }
}

fn parse_point(v: &Value, path: &str) -> ParseResult<TargetPoint> {
    if let Some(e) = v.get("euclid") {
        let ep = format!("{path}.euclid");
        let cells = as_array(e, &ep)?;
        let mut out = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            out.push(rational_at(c, &format!("{ep}[{i}]"))?);
        }
        return Ok(TargetPoint::Euclid(out));
    }
    if let Some(n) = v.get("norm") {
        return Ok(TargetPoint::Building(parse_norm_payload(
            n,
            &format!("{path}.norm"),
        )?));
    }
    Err(ParseError::new(
        path,
        "expected an object with field \"euclid\" or \"norm\"",
    ))
}

pub fn point_value(p: &TargetPoint) -> Value {
    match p {
        TargetPoint::Euclid(v) => json!({
            "euclid": v.iter().map(rational_string).collect::<Vec<_>>()
        }),
        TargetPoint::Building(n) => json!({ "norm": norm_payload(n) }),
    }
}

fn parse_edges(v: &Value, path: &str) -> ParseResult<Vec<Edge>> {
    let rows = as_array(v, path)?;
    let mut edges = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let ep = format!("{path}[{i}]");
        let triple = as_array(row, &ep)?;
        if triple.len() != 3 {
            return Err(ParseError::new(&ep, "expected [from, to, weight]"));
        }
        let from = as_u64(&triple[0], &format!("{ep}[0]"))? as usize;
        let to = as_u64(&triple[1], &format!("{ep}[1]"))? as usize;
        let weight = rational_at(&triple[2], &format!("{ep}[2]"))?;
        edges.push(Edge { from, to, weight });
    }
    Ok(edges)
}

pub fn parse_graph_file(v: &Value) -> ParseResult<(WeightedGraph, BTreeMap<usize, TargetPoint>)> {
    check_header(v, "graph")?;
    let vertices = as_u64(get(v, "vertices", "$")?, "$.vertices")? as usize;
    let edges = parse_edges(get(v, "edges", "$")?, "$.edges")?;
    let boundary_obj = get(v, "boundary", "$")?
        .as_object()
        .ok_or_else(|| ParseError::new("$.boundary", "expected an object"))?;
    let mut boundary_values = BTreeMap::new();
    for (k, val) in boundary_obj {
        let path = format!("$.boundary[{k:?}]");
        let vertex: usize = k
            .parse()
            .map_err(|_| ParseError::new(&path, "boundary keys are vertex indices"))?;
        boundary_values.insert(vertex, parse_point(val, &path)?);
    }
    let graph = WeightedGraph::new(
        vertices,
        edges,
        boundary_values.keys().copied().collect(),
    )
    .map_err(|e| ParseError::new("$", e.to_string()))?;
    Ok((graph, boundary_values))
}

pub fn parse_voltage_file(v: &Value) -> ParseResult<VoltageGraph> {
    check_header(v, "voltage-graph")?;
    let vertices = as_u64(get(v, "vertices", "$")?, "$.vertices")? as usize;
    let edges = parse_edges(get(v, "edges", "$")?, "$.edges")?;
    let labels_path = "$.labels";
    let labels_raw = as_array(get(v, "labels", "$")?, labels_path)?;
    let mut labels = Vec::with_capacity(labels_raw.len());
    for (i, l) in labels_raw.iter().enumerate() {
        labels.push(parse_word_value(l, &format!("{labels_path}[{i}]"))?);
    }
    let graph = WeightedGraph::new(vertices, edges, Vec::new())
        .map_err(|e| ParseError::new("$", e.to_string()))?;
    VoltageGraph::new(graph, labels).map_err(|e| ParseError::new("$", e.to_string()))
}

pub fn parse_word_value(v: &Value, path: &str) -> ParseResult<Word> {
    let cells = as_array(v, path)?;
    let mut word = Vec::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        let letter = c
            .as_i64()
            .ok_or_else(|| ParseError::new(&format!("{path}[{i}]"), "expected an integer"))?;
        word.push(letter as i32);
    }
    Ok(word)
}

/// Parses a word given on the command line as comma-separated signed indices.
pub fn parse_word_arg(s: &str) -> Result<Word, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i32>()
                .map_err(|_| format!("invalid word letter {t:?}"))
        })
        .collect()
}

pub fn parse_rep_file(v: &Value) -> ParseResult<ParsedRep> {
    check_header(v, "rep")?;
    let generators = as_u64(get(v, "generators", "$")?, "$.generators")? as usize;
    let relators_raw = as_array(get(v, "relators", "$")?, "$.relators")?;
    let mut relators = Vec::with_capacity(relators_raw.len());
    for (i, r) in relators_raw.iter().enumerate() {
        relators.push(parse_word_value(r, &format!("$.relators[{i}]"))?);
    }
    let presentation = GroupPresentation::new(generators, relators)
        .map_err(|e| ParseError::new("$.relators", e.to_string()))?;

    let mats_raw = as_array(get(v, "matrices", "$")?, "$.matrices")?;
    if mats_raw.len() != generators {
        return Err(ParseError::new(
            "$.matrices",
            format!("expected {generators} matrices, found {}", mats_raw.len()),
        ));
    }

    match v.get("minpoly") {
        None => {
            let mut mats = Vec::with_capacity(mats_raw.len());
            for (i, m) in mats_raw.iter().enumerate() {
                mats.push(parse_rat_matrix(m, &format!("$.matrices[{i}]"))?);
            }
            let rep = GroupRep::new(presentation, mats)
                .map_err(|e| ParseError::new("$.matrices", e.to_string()))?;
            Ok(ParsedRep::Rational(rep))
        }
        Some(mp) => {
            let mp_path = "$.minpoly";
            let coeffs_raw = as_array(mp, mp_path)?;
            let mut coeffs = Vec::with_capacity(coeffs_raw.len());
            for (i, c) in coeffs_raw.iter().enumerate() {
                coeffs.push(rational_at(c, &format!("{mp_path}[{i}]"))?);
            }
            let field = NumberField::new(coeffs)
                .map_err(|e| ParseError::new(mp_path, e.to_string()))?;
            let mut mats = Vec::with_capacity(mats_raw.len());
            for (i, m) in mats_raw.iter().enumerate() {
                let path = format!("$.matrices[{i}]");
                let rows = as_array(m, &path)?;
                let mut parsed = Vec::with_capacity(rows.len());
                for (r, row) in rows.iter().enumerate() {
                    let rp = format!("{path}[{r}]");
                    let cells = as_array(row, &rp)?;
                    let mut out_row = Vec::with_capacity(cells.len());
                    for (c, cell) in cells.iter().enumerate() {
                        let cp = format!("{rp}[{c}]");
                        let coeff_raw = as_array(cell, &cp)?;
                        let mut cs = Vec::with_capacity(coeff_raw.len());
                        for (k, x) in coeff_raw.iter().enumerate() {
                            cs.push(rational_at(x, &format!("{cp}[{k}]"))?);
                        }
                        out_row.push(
                            field
                                .element(cs)
                                .map_err(|e| ParseError::new(&cp, e.to_string()))?,
                        );
                    }
                    parsed.push(out_row);
                }
                mats.push(
                    Matrix::from_rows(parsed).map_err(|e| ParseError::new(&path, e.to_string()))?,
                );
            }
            let rep = GroupRep::new(presentation, mats)
                .map_err(|e| ParseError::new("$.matrices", e.to_string()))?;
            Ok(ParsedRep::NumberField(rep))
        }
    }
}

pub fn rat_matrix_value(m: &Matrix<Rat>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| {
                Value::Array(
                    (0..m.cols())
                        .map(|c| Value::String(rational_string(m.at(r, c))))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn nf_matrix_value(m: &Matrix<NfElem>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| {
                Value::Array(
                    (0..m.cols())
                        .map(|c| {
                            Value::Array(
                                m.at(r, c)
                                    .coeffs()
                                    .iter()
                                    .map(|x| Value::String(rational_string(x)))
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn rep_file(rep: &ParsedRep) -> Value {
    let mut obj = match rep {
        ParsedRep::Rational(r) => {
            json!({
                "generators": r.presentation().generators(),
                "relators": r.presentation().relators(),
                "matrices": r.generators().iter().map(rat_matrix_value).collect::<Vec<_>>(),
            })
        }
        ParsedRep::NumberField(r) => {
            let minpoly: Vec<String> = r.generator(0).sample().field().minpoly()
                .iter()
                .map(rational_string)
                .collect();
            json!({
                "generators": r.presentation().generators(),
                "relators": r.presentation().relators(),
                "matrices": r.generators().iter().map(nf_matrix_value).collect::<Vec<_>>(),
                "minpoly": minpoly,
            })
        }
    };
    attach_header(&mut obj, "rep");
    obj
}

pub fn parse_residues_file(v: &Value) -> ParseResult<ResidueMultiset> {
    check_header(v, "residues")?;
    let cells = as_array(get(v, "residues", "$")?, "$.residues")?;
    let mut residues = Vec::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        residues.push(rational_at(c, &format!("$.residues[{i}]"))?);
    }
    Ok(ResidueMultiset { residues })
}

/// Reads and dispatches on the `kind` tag.
pub fn parse_model(text: &str) -> ParseResult<ModelFile> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ParseError::new("$", format!("invalid JSON: {e}")))?;
    let kind = as_str(get(&v, "kind", "$")?, "$.kind")?;
    match kind {
        "norm" => {
            check_header(&v, "norm")?;
            Ok(ModelFile::Norm(parse_norm_payload(&v, "$")?))
        }
        "graph" => {
            let (graph, boundary_values) = parse_graph_file(&v)?;
            Ok(ModelFile::Graph {
                graph,
                boundary_values,
            })
        }
        "voltage-graph" => Ok(ModelFile::VoltageGraph(parse_voltage_file(&v)?)),
        "rep" => Ok(ModelFile::Rep(parse_rep_file(&v)?)),
        "residues" => Ok(ModelFile::Residues(parse_residues_file(&v)?)),
        other => Err(ParseError::new(
            "$.kind",
            format!("unknown kind {other:?}"),
        )),
    }
}

/// Canonical serialization: objects with sorted keys, compact separators,
/// reduced rationals.  `parse` then `canonical` is idempotent byte-for-byte.
pub fn canonical(v: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut out = Map::new();
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                for k in keys {
                    out.insert(k.clone(), sort(&m[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sort(v)).expect("serialization cannot fail")
}
