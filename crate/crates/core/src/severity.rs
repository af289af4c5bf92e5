//! Coupled reportability for major and minor symptoms.
//!
//! A single node `P_Minor` carries the reportability of minor symptoms; major
//! symptoms use `h(P_Minor)` for an increasing link `h` with `h(p) > p`.
//! Reporting only minor complaints then argues strongly against unmentioned
//! major symptoms, while the converse inference is weaker.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{build_network, BnError, ConditionalTable, Network, Variable, VariableKind};
use crate::learning::{Grid, LearningError};
use crate::report::{report_entries, ReportError, ReportParams, SeverityClass};

pub const P_MINOR: &str = "P_Minor";

const VALIDATION_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeverityError {
    #[error("symptom `{0}` has no major/minor severity class")]
    MissingSeverityClass(String),
    #[error("parameter node `{0}` already present")]
    DuplicateParameterNode(String),
    #[error("report node `{0}` missing from network")]
    MissingReportNode(String),
    #[error("unknown severity link `{0}`")]
    UnknownLink(String),
    #[error("link `{name}` maps {input} to {output}, outside [0, 1]")]
    LinkOutOfRange { name: String, input: f64, output: f64 },
    #[error(transparent)]
    Grid(#[from] LearningError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Network(#[from] BnError),
}

/// Named map from minor-symptom reportability to major-symptom reportability.
#[derive(Clone)]
pub struct SeverityLink {
    name: String,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for SeverityLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeverityLink").field("name", &self.name).finish()
    }
}

impl SeverityLink {
    pub fn new(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SeverityLink {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    /// h(x) = 2x - x²
    pub fn quadratic() -> Self {
        SeverityLink::new("quadratic", |x| 2.0 * x - x * x)
    }

    pub fn identity() -> Self {
        SeverityLink::new("identity", |x| x)
    }

    /// Built-in links that may be named in knowledge-base files.
    pub fn by_name(name: &str) -> Result<Self, SeverityError> {
        match name {
            "quadratic" => Ok(SeverityLink::quadratic()),
            other => Err(SeverityError::UnknownLink(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.map)(p)
    }
}

/// Outcome of one numerical property check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub passed: bool,
    pub first_violation: Option<f64>,
}

impl PropertyCheck {
    fn from_violation(first_violation: Option<f64>) -> Self {
        PropertyCheck {
            passed: first_violation.is_none(),
            first_violation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkValidation {
    /// h strictly increasing on (0, 1) with h(p) > p.
    pub increasing_reportability: PropertyCheck,
    /// h maps [0, 1] into [0, 1].
    pub probability: PropertyCheck,
    /// h(p)/p nonincreasing on (0, 1).
    pub decreasing_odds_ratio: PropertyCheck,
}

impl LinkValidation {
    pub fn all_passed(&self) -> bool {
        self.increasing_reportability.passed && self.probability.passed && self.decreasing_odds_ratio.passed
    }
}

/// Checks the three link properties on a 10⁴-point interior grid plus the endpoints.
pub fn validate_link(link: &SeverityLink) -> LinkValidation {
    let interior: Vec<f64> = (1..=VALIDATION_POINTS)
        .map(|i| i as f64 / (VALIDATION_POINTS + 1) as f64)
        .collect();
    let values: Vec<f64> = interior.iter().map(|&x| link.eval(x)).collect();

    let increasing = interior
        .iter()
        .enumerate()
        .find(|&(i, &x)| !(values[i] > x) || (i + 1 < values.len() && !(values[i + 1] > values[i])))
        .map(|(_, &x)| x);

    let probability = std::iter::once(0.0)
        .chain(interior.iter().copied())
        .chain(std::iter::once(1.0))
        .find(|&x| {
            let h = link.eval(x);
            !(0.0..=1.0).contains(&h)
        });

    let ratios: Vec<f64> = interior.iter().zip(&values).map(|(x, h)| h / x).collect();
    let odds = ratios
        .windows(2)
        .position(|w| !(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)))
        .map(|i| interior[i + 1]);

    LinkValidation {
        increasing_reportability: PropertyCheck::from_violation(increasing),
        probability: PropertyCheck::from_violation(probability),
        decreasing_odds_ratio: PropertyCheck::from_violation(odds),
    }
}

/// Conditions every report node on `P_Minor`. Minor symptoms use the grid value
/// as reportability, major symptoms use `link` of it; each symptom keeps its own
/// bias (an infinite bias means absent symptoms are never reported).
pub fn augment_with_severity(
    network: &Network,
    params: &[ReportParams],
    minor_grid: &Grid,
    link: &SeverityLink,
) -> Result<Network, SeverityError> {
    minor_grid.validate()?;
    minor_grid.check_within(0.0, 1.0, "reportability")?;
    if network.contains(P_MINOR) {
        return Err(SeverityError::DuplicateParameterNode(P_MINOR.to_string()));
    }
    for p in params {
        if !matches!(p.severity, SeverityClass::Major | SeverityClass::Minor) {
            return Err(SeverityError::MissingSeverityClass(p.symptom.clone()));
        }
        if !(p.bias >= 1.0) {
            return Err(ReportError::InvalidParams {
                symptom: p.symptom.clone(),
                reason: "reporting bias must be at least 1".into(),
            }
            .into());
        }
    }
    let major_points: Vec<f64> = minor_grid
        .points
        .iter()
        .map(|&x| {
            let h = link.eval(x);
            if (0.0..=1.0).contains(&h) {
                Ok(h)
            } else {
                Err(SeverityError::LinkOutOfRange {
                    name: link.name().to_string(),
                    input: x,
                    output: h,
                })
            }
        })
        .collect::<Result<_, _>>()?;

    let mut tables = Vec::with_capacity(params.len());
    for p in params {
        let node = p.report_node();
        if !network.contains(&node) {
            return Err(SeverityError::MissingReportNode(node));
        }
        let symptom = network
            .variable(&p.symptom)
            .ok_or_else(|| ReportError::UnknownVariable(p.symptom.clone()))?;
        let points = if p.severity == SeverityClass::Major {
            &major_points
        } else {
            &minor_grid.points
        };
        let mut entries = Vec::with_capacity(symptom.cardinality() * points.len() * 2);
        for state in 0..symptom.cardinality() {
            for &rp in points {
                let column = report_entries(symptom, &p.absent_state, rp, rp / p.bias)?;
                entries.extend_from_slice(&column[state * 2..state * 2 + 2]);
            }
        }
        tables.push(ConditionalTable::new(
            node,
            vec![p.symptom.clone(), P_MINOR.to_string()],
            entries,
        ));
    }
    let (var, prior) = minor_grid.to_variable(P_MINOR);
    let with_node = network.with_additions([var], [prior])?;
    Ok(with_node.with_replaced_tables(tables)?)
}

pub const RASH_DISEASE: &str = "RashDisease";
pub const HEART_ATTACK: &str = "HeartAttack";
pub const RASH: &str = "Rash";
pub const CHEST_PAIN: &str = "ChestPain";
pub const COMPLAINT: &str = "complaint";

/// Two diseases with prior 0.01, each with one perfectly diagnostic symptom:
/// `RashDisease -> Rash` (minor) and `HeartAttack -> ChestPain` (major).
/// Absent symptoms are never reported (infinite bias).
pub fn net_s() -> (Network, Vec<ReportParams>) {
    let variables = vec![
        Variable::binary(RASH_DISEASE, VariableKind::Disorder),
        Variable::binary(HEART_ATTACK, VariableKind::Disorder),
        Variable::binary(RASH, VariableKind::Symptom),
        Variable::binary(CHEST_PAIN, VariableKind::Symptom),
    ];
    let deterministic = vec![1.0, 0.0, 0.0, 1.0];
    let tables = vec![
        ConditionalTable::prior(RASH_DISEASE, vec![0.99, 0.01]),
        ConditionalTable::prior(HEART_ATTACK, vec![0.99, 0.01]),
        ConditionalTable::new(RASH, vec![RASH_DISEASE.into()], deterministic.clone()),
        ConditionalTable::new(CHEST_PAIN, vec![HEART_ATTACK.into()], deterministic),
    ];
    let network = build_network(variables, tables).expect("static fixture");
    let params = vec![
        ReportParams::new(RASH, COMPLAINT, 0.5, f64::INFINITY).with_severity(SeverityClass::Minor),
        ReportParams::new(CHEST_PAIN, COMPLAINT, 0.5, f64::INFINITY).with_severity(SeverityClass::Major),
    ];
    (network, params)
}

/// Exact continuum values for the two-disease example under a uniform
/// `P_Minor` prior and the quadratic link:
/// `(P(heart attack | only rash reported), P(rash disease | only chest pain reported))`.
pub fn quadratic_closed_form() -> (f64, f64) {
    // ∫ p (1-p)² dp = 1/12 and ∫ p dp = 1/2
    let heart = 0.01 / 12.0 / (0.01 / 12.0 + 0.99 / 2.0);
    // ∫ (2p - p²)(1 - p) dp = 1/4 and ∫ (2p - p²) dp = 2/3
    let rash = 0.01 * 0.25 / (0.01 * 0.25 + 0.99 * 2.0 / 3.0);
    (heart, rash)
}
