//! Trace data model: questions, sampled responses with per-layer token
//! log-probabilities, and the candidate answer pools built from them.
//!
//! A trace file holds one JSON record per line. Log-probabilities are natural
//! logs (nats) and are stored for every scored layer twice: once with the
//! question in context and once under the null context.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskType {
    Mcqa,
    Open,
}

/// Log-probabilities of one realized token at every scored layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
pub struct TokenLayerLogp<S> {
    pub logp_ctx: Vec<S>,
    pub logp_null: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct ResponseTrace<S> {
    pub response_id: i64,
    pub text: String,
    pub parsed_unit: String,
    pub admissible: bool,
    pub tokens: Vec<TokenLayerLogp<S>>,
}

impl<S: Scalar> ResponseTrace<S> {
    /// Number of layers recorded per token (zero for a token-less response).
    pub fn num_layers(&self) -> usize {
        self.tokens.first().map_or(0, |t| t.logp_ctx.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct QuestionTrace<S> {
    pub question_id: String,
    pub domain: String,
    pub task_type: TaskType,
    pub num_layers: usize,
    pub ground_truth_unit: Option<String>,
    pub responses: Vec<ResponseTrace<S>>,
}

// Wire-side mirrors. `admissible` is optional here only so that a missing
// label can be reported with a specific message instead of a generic
// "missing field".
#[derive(Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
struct RawResponse<S> {
    response_id: i64,
    text: String,
    parsed_unit: String,
    #[serde(default)]
    admissible: Option<bool>,
    tokens: Vec<TokenLayerLogp<S>>,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
struct RawQuestion<S> {
    question_id: String,
    domain: String,
    task_type: TaskType,
    num_layers: usize,
    ground_truth_unit: Option<String>,
    responses: Vec<RawResponse<S>>,
}

struct FieldError {
    field: String,
    message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    fn at(self, record: usize) -> Error {
        Error::InvalidRecord {
            record,
            field: self.field,
            message: self.message,
        }
    }
}

impl<S: Scalar> RawQuestion<S> {
    fn into_trace(self) -> std::result::Result<QuestionTrace<S>, FieldError> {
        let has_truth = self.ground_truth_unit.is_some();
        let mut responses = Vec::with_capacity(self.responses.len());
        for (j, r) in self.responses.into_iter().enumerate() {
            let admissible = r.admissible.ok_or_else(|| {
                let msg = if has_truth {
                    "ground_truth_unit is present but the response carries no admissibility label"
                } else {
                    "missing admissibility label"
                };
                FieldError::new(format!("responses[{j}].admissible"), msg)
            })?;
            responses.push(ResponseTrace {
                response_id: r.response_id,
                text: r.text,
                parsed_unit: r.parsed_unit,
                admissible,
                tokens: r.tokens,
            });
        }
        let q = QuestionTrace {
            question_id: self.question_id,
            domain: self.domain,
            task_type: self.task_type,
            num_layers: self.num_layers,
            ground_truth_unit: self.ground_truth_unit,
            responses,
        };
        q.check()?;
        Ok(q)
    }
}

impl<S: Scalar> QuestionTrace<S> {
    fn check(&self) -> std::result::Result<(), FieldError> {
        if self.question_id.is_empty() {
            return Err(FieldError::new("question_id", "must be non-empty"));
        }
        if self.num_layers == 0 {
            return Err(FieldError::new("num_layers", "must be positive"));
        }
        if self.responses.is_empty() {
            return Err(FieldError::new("responses", "empty response list"));
        }
        let mut unit_labels: BTreeMap<&str, bool> = BTreeMap::new();
        for (j, r) in self.responses.iter().enumerate() {
            if r.parsed_unit.is_empty() {
                return Err(FieldError::new(
                    format!("responses[{j}].parsed_unit"),
                    "must be non-empty",
                ));
            }
            if r.tokens.is_empty() {
                return Err(FieldError::new(
                    format!("responses[{j}].tokens"),
                    "a response needs at least one token",
                ));
            }
            for (t, tok) in r.tokens.iter().enumerate() {
                for (name, values) in [("logp_ctx", &tok.logp_ctx), ("logp_null", &tok.logp_null)] {
                    let field = format!("responses[{j}].tokens[{t}].{name}");
                    if values.len() != self.num_layers {
                        return Err(FieldError::new(
                            field,
                            format!(
                                "inconsistent layer count: expected {} entries (num_layers), found {}",
                                self.num_layers,
                                values.len()
                            ),
                        ));
                    }
                    for (l, &v) in values.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(FieldError::new(
                                format!("{field}[{l}]"),
                                "log-probability must be finite",
                            ));
                        }
                        if v > S::zero() {
                            return Err(FieldError::new(
                                format!("{field}[{l}]"),
                                format!("log-probability must be ≤ 0, got {v}"),
                            ));
                        }
                    }
                }
            }
            match unit_labels.get(r.parsed_unit.as_str()) {
                Some(&seen) if seen != r.admissible => {
                    return Err(FieldError::new(
                        format!("responses[{j}].admissible"),
                        format!(
                            "conflicting admissibility labels within answer unit `{}`",
                            r.parsed_unit
                        ),
                    ));
                }
                _ => {
                    unit_labels.insert(&r.parsed_unit, r.admissible);
                }
            }
        }
        Ok(())
    }
}

/// Validates an in-memory collection as if it were a trace file, numbering
/// records from 1.
pub fn validate_traces<S: Scalar>(traces: &[QuestionTrace<S>]) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, q) in traces.iter().enumerate() {
        q.check().map_err(|e| e.at(i + 1))?;
        if !seen.insert(q.question_id.as_str()) {
            return Err(Error::DuplicateQuestion {
                record: i + 1,
                question_id: q.question_id.clone(),
            });
        }
    }
    Ok(())
}

fn parse_record<S: Scalar>(line: &str, record: usize) -> Result<QuestionTrace<S>> {
    let mut de = serde_json::Deserializer::from_str(line);
    let raw: RawQuestion<S> = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::InvalidRecord {
            record,
            field: if path == "." { "<record>".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| Error::InvalidRecord {
        record,
        field: "<record>".into(),
        message: e.to_string(),
    })?;
    raw.into_trace().map_err(|e| e.at(record))
}

/// Parses a newline-delimited trace stream.
///
/// The whole file is rejected on the first bad record; the error carries the
/// 1-based line number and the offending field path. Blank lines are skipped.
pub fn parse_trace_file<S: Scalar, R: BufRead>(reader: R) -> Result<Vec<QuestionTrace<S>>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = i + 1;
        let q = parse_record::<S>(&line, record)?;
        if !seen.insert(q.question_id.clone()) {
            return Err(Error::DuplicateQuestion {
                record,
                question_id: q.question_id,
            });
        }
        out.push(q);
    }
    Ok(out)
}

pub fn read_trace_path<S: Scalar>(path: impl AsRef<Path>) -> Result<Vec<QuestionTrace<S>>> {
    let file = File::open(path)?;
    parse_trace_file(BufReader::new(file))
}

/// Writes one record per line in the trace schema.
pub fn write_trace_file<S: Scalar, W: Write>(mut w: W, traces: &[QuestionTrace<S>]) -> Result<()> {
    for q in traces {
        serde_json::to_writer(&mut w, q)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// One distinct answer unit and the responses that parse to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerUnit {
    pub unit_id: String,
    /// 0-based indices into the question's response list, ascending.
    pub member_indices: Vec<usize>,
    pub admissible: bool,
}

/// The distinct answer units of one question, ordered by `unit_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    units: Vec<AnswerUnit>,
    m: usize,
}

impl CandidatePool {
    pub fn units(&self) -> &[AnswerUnit] {
        &self.units
    }

    /// Number of sampled responses the pool was built from.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn unit(&self, unit_id: &str) -> Option<&AnswerUnit> {
        self.units
            .binary_search_by(|u| u.unit_id.as_str().cmp(unit_id))
            .ok()
            .map(|i| &self.units[i])
    }
}

/// Groups responses by parsed answer unit.
///
/// Assumes `q` passed validation, so admissibility labels agree within a unit.
pub fn build_pool<S: Scalar>(q: &QuestionTrace<S>) -> CandidatePool {
    let mut groups: BTreeMap<&str, AnswerUnit> = BTreeMap::new();
    for (j, r) in q.responses.iter().enumerate() {
        let unit = groups.entry(&r.parsed_unit).or_insert_with(|| AnswerUnit {
            unit_id: r.parsed_unit.clone(),
            member_indices: Vec::new(),
            admissible: true,
        });
        unit.member_indices.push(j);
        unit.admissible &= r.admissible;
    }
    CandidatePool {
        units: groups.into_values().collect(),
        m: q.responses.len(),
    }
}

/// Identifiers of the admissible units. An empty result means no sampled
/// response was admissible, which forces an infinite nonconformity score.
pub fn admissible_units(pool: &CandidatePool) -> BTreeSet<String> {
    pool.units
        .iter()
        .filter(|u| u.admissible)
        .map(|u| u.unit_id.clone())
        .collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// A single-token, single-layer response with the given logps.
    pub fn response(unit: &str, admissible: bool, ctx: f64, null: f64) -> ResponseTrace<f64> {
        ResponseTrace {
            response_id: 0,
            text: unit.to_string(),
            parsed_unit: unit.to_string(),
            admissible,
            tokens: vec![TokenLayerLogp {
                logp_ctx: vec![ctx],
                logp_null: vec![null],
            }],
        }
    }

    pub fn question(id: &str, responses: Vec<ResponseTrace<f64>>) -> QuestionTrace<f64> {
        let num_layers = responses[0].num_layers();
        let mut responses = responses;
        for (j, r) in responses.iter_mut().enumerate() {
            r.response_id = j as i64;
        }
        QuestionTrace {
            question_id: id.to_string(),
            domain: "test".to_string(),
            task_type: TaskType::Mcqa,
            num_layers,
            ground_truth_unit: None,
            responses,
        }
    }

    pub fn units_question(id: &str, units: &[&str], admissible: &[&str]) -> QuestionTrace<f64> {
        question(
            id,
            units
                .iter()
                .map(|u| response(u, admissible.contains(u), -0.5, -1.0))
                .collect(),
        )
    }
}
