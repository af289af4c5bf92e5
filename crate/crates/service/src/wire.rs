//! JSON request and response bodies.

use std::collections::BTreeMap;

use openprobe::bn::{Posterior, VariableKind};
use openprobe::engine::{presence, Finding, Mode, Phase, QuestionScore, Session};
use openprobe::learning::ParamPosterior;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub kb: String,
    pub mode: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct OpenProbeBody {
    #[serde(default)]
    pub reported: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnswerBody {
    pub symptom: String,
    pub state: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct QuestionsQuery {
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisorderView {
    pub disorder: String,
    /// P(present), i.e. one minus the `absent` mass.
    pub probability: f64,
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl From<&Posterior> for DisorderView {
    fn from(p: &Posterior) -> Self {
        DisorderView {
            disorder: p.variable.clone(),
            probability: presence(p),
            states: p.states.clone(),
            probabilities: p.probabilities.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialView {
    pub session: String,
    pub phase: Phase,
    pub differential: Vec<DisorderView>,
}

impl DifferentialView {
    pub fn of(session: &Session) -> Self {
        DifferentialView {
            session: session.id().to_string(),
            phase: session.phase(),
            differential: session.differential().iter().map(DisorderView::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymptomEntry {
    pub id: String,
    pub states: Vec<String>,
    /// Whether the symptom can be volunteered in the open probe.
    pub reportable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamView {
    pub variable: String,
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub expectation: f64,
}

impl From<&ParamPosterior> for ParamView {
    fn from(p: &ParamPosterior) -> Self {
        ParamView {
            variable: p.variable.clone(),
            values: p.values.clone(),
            probabilities: p.probabilities.clone(),
            expectation: p.expectation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsView {
    pub session: String,
    pub mode: Mode,
    pub params: Vec<ParamView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionsView {
    pub session: String,
    pub questions: Vec<QuestionScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionResource {
    pub id: String,
    pub kb: String,
    pub mode: Mode,
    pub phase: Phase,
    pub created_at: u64,
    pub question: Option<String>,
    pub symptoms: Vec<SymptomEntry>,
    pub evidence: Vec<Finding>,
    pub differential: Vec<DisorderView>,
    /// Present outside fixed-params mode.
    pub params: Option<Vec<ParamView>>,
}

impl SessionResource {
    pub fn of(kb_name: &str, created_at: u64, session: &Session) -> Self {
        let reportable: Vec<&str> = session.report_params().iter().map(|p| p.symptom.as_str()).collect();
        let symptoms = session
            .network()
            .variables()
            .iter()
            .filter(|v| matches!(v.kind, VariableKind::Symptom | VariableKind::Other))
            .map(|v| SymptomEntry {
                id: v.id.clone(),
                states: v.states.clone(),
                reportable: reportable.contains(&v.id.as_str()),
            })
            .collect();
        let params = session
            .param_posteriors()
            .ok()
            .map(|ps| ps.iter().map(ParamView::from).collect());
        SessionResource {
            id: session.id().to_string(),
            kb: kb_name.to_string(),
            mode: session.mode(),
            phase: session.phase(),
            created_at,
            question: session.question().map(str::to_string),
            symptoms,
            evidence: session.log().to_vec(),
            differential: session.differential().iter().map(DisorderView::from).collect(),
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub kbs: Vec<String>,
}
