//! Reproducible experiment drivers shared by the CLI, the service and the tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::bn;
use crate::bn::Evidence;
use crate::engine::{differential_for, presence, start_session, EngineError, Mode};
use crate::kb::{KbError, KnowledgeBase};
use crate::learning::{self, Grid};
use crate::report::{augment_with_reports, open_probe_evidence, OpenProbeResponse, ReportError};
use crate::severity::{
    self, augment_with_severity, SeverityError, SeverityLink, CHEST_PAIN, COMPLAINT, HEART_ATTACK, RASH, RASH_DISEASE,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Severity(#[from] SeverityError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl From<bn::BnError> for ExperimentError {
    fn from(e: bn::BnError) -> Self {
        ExperimentError::Engine(e.into())
    }
}

/// Bias values used for the reporting-bias sweep.
pub const SWEEP_BIASES: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub bias: f64,
    /// P(present) per disorder, in knowledge-base order.
    pub presence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub disorders: Vec<String>,
    pub reportability: f64,
    pub rows: Vec<SweepRow>,
    /// Same findings entered as closed-probe observations with no report nodes.
    pub closed_probe_only: Vec<f64>,
}

fn presence_in_order(
    kb: &KnowledgeBase,
    network: &bn::Network,
    evidence: &Evidence,
) -> Result<Vec<f64>, ExperimentError> {
    let diff = differential_for(network, kb.disorders(), evidence)?;
    Ok(kb
        .disorders()
        .iter()
        .map(|d| diff.iter().find(|p| &p.variable == d).map(presence).unwrap_or(f64::NAN))
        .collect())
}

/// Differential after the open probe as the global bias varies, with every
/// report node sharing one reportability.
pub fn bias_sweep(
    kb: &KnowledgeBase,
    reported: &BTreeMap<String, String>,
    reportability: f64,
    biases: &[f64],
) -> Result<SweepTable, ExperimentError> {
    if biases.is_empty() {
        return Err(ExperimentError::Input("bias list is empty".into()));
    }
    let mut rows = Vec::with_capacity(biases.len());
    for &bias in biases {
        let variant = Arc::new(kb.with_uniform_reporting(reportability, bias)?);
        let mut session = start_session("sweep", variant.clone(), Mode::FixedParams)?;
        let response = OpenProbeResponse {
            question: String::new(),
            reported: reported.clone(),
        };
        session.submit_open_probe(&response)?;
        rows.push(SweepRow {
            bias,
            presence: presence_in_order(&variant, session.network(), &session.evidence())?,
        });
    }
    let mut hard = Evidence::new();
    for (s, state) in reported {
        hard.set_hard(s.clone(), state.clone());
    }
    let closed_probe_only = presence_in_order(kb, kb.network(), &hard)?;
    Ok(SweepTable {
        disorders: kb.disorders().to_vec(),
        reportability,
        rows,
        closed_probe_only,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub reported: BTreeMap<String, String>,
}

impl Scenario {
    /// Reports the first `present` probe symptoms as present and the next
    /// `absent` ones as absent.
    pub fn counts(kb: &KnowledgeBase, present: usize, absent: usize) -> Result<Scenario, ExperimentError> {
        let probe = kb
            .primary_probe()
            .ok_or_else(|| ExperimentError::Input("knowledge base has no open probe".into()))?;
        if present + absent > probe.symptoms.len() {
            return Err(ExperimentError::Input(format!(
                "probe `{}` has only {} symptoms",
                probe.id,
                probe.symptoms.len()
            )));
        }
        let mut reported = BTreeMap::new();
        for (i, s) in probe.symptoms.iter().take(present + absent).enumerate() {
            let state = if i < present { "present" } else { "absent" };
            reported.insert(s.clone(), state.to_string());
        }
        Ok(Scenario {
            label: format!("{present}p{absent}a"),
            reported,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningRow {
    pub label: String,
    pub present_reports: usize,
    pub absent_reports: usize,
    pub expected_reportability: f64,
    pub expected_bias: f64,
}

/// Posterior expectations of the global reporting parameters per scenario.
pub fn learning_scenarios(
    kb: &Arc<KnowledgeBase>,
    scenarios: &[Scenario],
) -> Result<Vec<LearningRow>, ExperimentError> {
    scenarios
        .iter()
        .map(|sc| {
            let mut session = start_session("learn", kb.clone(), Mode::LearnGlobal)?;
            session.submit_open_probe(&OpenProbeResponse {
                question: String::new(),
                reported: sc.reported.clone(),
            })?;
            let (p, b) =
                learning::global_param_posterior(session.network(), &session.evidence()).map_err(EngineError::from)?;
            let absent = sc.reported.values().filter(|s| s.as_str() == "absent").count();
            Ok(LearningRow {
                label: sc.label.clone(),
                present_reports: sc.reported.len() - absent,
                absent_reports: absent,
                expected_reportability: p.expectation(),
                expected_bias: b.expectation(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeverityDemo {
    pub grid_points: usize,
    pub link: String,
    /// P(heart attack) when only the rash is reported.
    pub heart_attack_given_rash: f64,
    /// P(rash disease) when only chest pain is reported.
    pub rash_disease_given_chest_pain: f64,
    /// Continuum values, available for the quadratic link.
    pub closed_form: Option<(f64, f64)>,
}

/// Two-disease severity example on a midpoint grid over `P_Minor`.
pub fn severity_demo(grid_points: usize, link: &SeverityLink) -> Result<SeverityDemo, ExperimentError> {
    let (base, params) = severity::net_s();
    let grid = Grid::unit_midpoints(grid_points).map_err(SeverityError::from)?;
    let network = augment_with_severity(&augment_with_reports(&base, &params, COMPLAINT)?, &params, &grid, link)?;
    let query = |reported: &str, disorder: &str| -> Result<f64, ExperimentError> {
        let response = OpenProbeResponse::new(COMPLAINT).with(reported, "present");
        let ev = open_probe_evidence(&response, &params)?;
        Ok(presence(&bn::posterior(&network, disorder, &ev)?))
    };
    Ok(SeverityDemo {
        grid_points,
        link: link.name().to_string(),
        heart_attack_given_rash: query(RASH, HEART_ATTACK)?,
        rash_disease_given_chest_pain: query(CHEST_PAIN, RASH_DISEASE)?,
        closed_form: (link.name() == "quadratic").then(severity::quadratic_closed_form),
    })
}
