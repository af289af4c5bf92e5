//! Report nodes for open-probe questions.
//!
//! A report node `Report_Q(S)` is a binary child of symptom `S` that is true
//! when the respondent volunteered any value for `S` in answer to the open
//! probe `Q`. Its table is built from two numbers: the reportability (chance
//! that a present symptom gets mentioned) and the reporting bias (how much more
//! likely a mention is when the symptom is present than when it is absent).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{BnError, ConditionalTable, Evidence, Network, Variable, VariableKind};

pub const REPORTED: &str = "true";
pub const NOT_REPORTED: &str = "false";
pub const DEFAULT_ABSENT_STATE: &str = "absent";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("invalid reporting parameters for `{symptom}`: {reason}")]
    InvalidParams { symptom: String, reason: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("symptom `{0}` is not bound to this question")]
    UnknownSymptom(String),
    #[error("report node `{0}` already exists")]
    DuplicateReportNode(String),
    #[error(transparent)]
    Network(#[from] BnError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeverityClass {
    Major,
    Minor,
    #[default]
    None,
}

/// Reporting behaviour of one symptom for one open probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub symptom: String,
    pub question: String,
    /// P(report | symptom present-like).
    pub reportability: f64,
    /// P(report | present-like) / P(report | absent-like). May be infinite.
    #[serde(with = "bias_format")]
    pub bias: f64,
    #[serde(default)]
    pub severity: SeverityClass,
    /// The single absent-like state; every other state counts as present-like.
    #[serde(default = "default_absent_state")]
    pub absent_state: String,
}

fn default_absent_state() -> String {
    DEFAULT_ABSENT_STATE.to_string()
}

impl ReportParams {
    pub fn new(symptom: impl Into<String>, question: impl Into<String>, reportability: f64, bias: f64) -> Self {
        ReportParams {
            symptom: symptom.into(),
            question: question.into(),
            reportability,
            bias,
            severity: SeverityClass::None,
            absent_state: default_absent_state(),
        }
    }

    pub fn with_severity(mut self, severity: SeverityClass) -> Self {
        self.severity = severity;
        self
    }

    pub fn with_absent_state(mut self, state: impl Into<String>) -> Self {
        self.absent_state = state.into();
        self
    }

    pub fn report_node(&self) -> String {
        report_node_id(&self.question, &self.symptom)
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        let invalid = |reason: &str| ReportError::InvalidParams {
            symptom: self.symptom.clone(),
            reason: reason.to_string(),
        };
        if !(self.reportability > 0.0 && self.reportability < 1.0) {
            return Err(invalid("reportability must lie strictly between 0 and 1"));
        }
        // NaN fails this comparison as well.
        if !(self.bias >= 1.0) {
            return Err(invalid("reporting bias must be at least 1"));
        }
        Ok(())
    }

    /// P(report | absent-like).
    pub fn false_report_rate(&self) -> f64 {
        self.reportability / self.bias
    }
}

/// Identifier of the report node for `symptom` under open probe `question`.
pub fn report_node_id(question: &str, symptom: &str) -> String {
    format!("Report_{question}({symptom})")
}

/// Free-text answer to an open probe, reduced to the symptoms it mentions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpenProbeResponse {
    pub question: String,
    #[serde(default)]
    pub reported: BTreeMap<String, String>,
}

impl OpenProbeResponse {
    pub fn new(question: impl Into<String>) -> Self {
        OpenProbeResponse {
            question: question.into(),
            reported: BTreeMap::new(),
        }
    }

    pub fn with(mut self, symptom: impl Into<String>, state: impl Into<String>) -> Self {
        self.reported.insert(symptom.into(), state.into());
        self
    }
}

/// Report probabilities `(P(report), P(no report))` for each symptom state.
pub(crate) fn report_entries(
    symptom: &Variable,
    absent_state: &str,
    reportability: f64,
    false_report_rate: f64,
) -> Result<Vec<f64>, ReportError> {
    let absent = absent_index(symptom, absent_state)?;
    let mut entries = Vec::with_capacity(symptom.cardinality() * 2);
    for i in 0..symptom.cardinality() {
        let p = if i == absent { false_report_rate } else { reportability };
        entries.push(p);
        entries.push(1.0 - p);
    }
    Ok(entries)
}

fn absent_index(symptom: &Variable, absent_state: &str) -> Result<usize, ReportError> {
    symptom
        .state_index(absent_state)
        .ok_or_else(|| ReportError::InvalidParams {
            symptom: symptom.id.clone(),
            reason: format!("symptom has no absent-like state `{absent_state}`"),
        })
}

pub(crate) fn report_variable(params: &ReportParams) -> Variable {
    Variable::new(params.report_node(), [REPORTED, NOT_REPORTED], VariableKind::Report)
}

/// Table of `Report_Q(S)` given `S`.
pub fn report_cpt(params: &ReportParams, symptom: &Variable) -> Result<ConditionalTable, ReportError> {
    params.validate()?;
    let entries = report_entries(
        symptom,
        &params.absent_state,
        params.reportability,
        params.false_report_rate(),
    )?;
    Ok(ConditionalTable::new(
        params.report_node(),
        vec![symptom.id.clone()],
        entries,
    ))
}

/// Relative likelihood of no report, P(¬report | present) / P(¬report | absent).
pub fn lambda_no_report(params: &ReportParams) -> Result<f64, ReportError> {
    params.validate()?;
    Ok((1.0 - params.reportability) / (1.0 - params.false_report_rate()))
}

/// Adds one report node per symptom bound to `question`. Parameters for other
/// questions are ignored.
pub fn augment_with_reports(
    network: &Network,
    params: &[ReportParams],
    question: &str,
) -> Result<Network, ReportError> {
    let mut variables = Vec::new();
    let mut tables = Vec::new();
    for p in params.iter().filter(|p| p.question == question) {
        let symptom = network
            .variable(&p.symptom)
            .ok_or_else(|| ReportError::UnknownVariable(p.symptom.clone()))?;
        let node = p.report_node();
        if network.contains(&node) || variables.iter().any(|v: &Variable| v.id == node) {
            return Err(ReportError::DuplicateReportNode(node));
        }
        tables.push(report_cpt(p, symptom)?);
        variables.push(report_variable(p));
    }
    if variables.is_empty() {
        return Ok(network.clone());
    }
    Ok(network.with_additions(variables, tables)?)
}

/// Evidence for an open-probe answer on a network carrying report nodes.
///
/// Reported symptoms are observed with their report node true; every other
/// symptom bound to the question gets its report node false.
pub fn open_probe_evidence(response: &OpenProbeResponse, params: &[ReportParams]) -> Result<Evidence, ReportError> {
    let bound: Vec<&ReportParams> = params.iter().filter(|p| p.question == response.question).collect();
    for symptom in response.reported.keys() {
        if !bound.iter().any(|p| &p.symptom == symptom) {
            return Err(ReportError::UnknownSymptom(symptom.clone()));
        }
    }
    let mut evidence = Evidence::new();
    for p in bound {
        match response.reported.get(&p.symptom) {
            Some(state) => {
                evidence.set_hard(p.symptom.clone(), state.clone());
                evidence.set_hard(p.report_node(), REPORTED);
            }
            None => evidence.set_hard(p.report_node(), NOT_REPORTED),
        }
    }
    Ok(evidence)
}

/// Same information as [`open_probe_evidence`] for a network without report
/// nodes: unreported symptoms receive the no-report likelihood as virtual
/// evidence. Only valid while the reporting parameters are fixed numbers.
pub fn soft_evidence_shortcut(
    network: &Network,
    params: &[ReportParams],
    response: &OpenProbeResponse,
) -> Result<Evidence, ReportError> {
    let bound: Vec<&ReportParams> = params.iter().filter(|p| p.question == response.question).collect();
    for symptom in response.reported.keys() {
        if !bound.iter().any(|p| &p.symptom == symptom) {
            return Err(ReportError::UnknownSymptom(symptom.clone()));
        }
    }
    let mut evidence = Evidence::new();
    for p in bound {
        match response.reported.get(&p.symptom) {
            Some(state) => evidence.set_hard(p.symptom.clone(), state.clone()),
            None => {
                let symptom = network
                    .variable(&p.symptom)
                    .ok_or_else(|| ReportError::UnknownVariable(p.symptom.clone()))?;
                let lambda = lambda_no_report(p)?;
                let absent = absent_index(symptom, &p.absent_state)?;
                let weights = (0..symptom.cardinality())
                    .map(|i| if i == absent { 1.0 } else { lambda })
                    .collect();
                evidence.set_virtual(p.symptom.clone(), weights);
            }
        }
    }
    Ok(evidence)
}

/// Serializes an infinite bias as the string `"inf"`, which JSON numbers cannot hold.
pub(crate) mod bias_format {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() && *value > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct BiasVisitor;
        impl Visitor<'_> for BiasVisitor {
            type Value = f64;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "infinity" => Ok(f64::INFINITY),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(BiasVisitor)
    }
}
