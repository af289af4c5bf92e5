//! Hypothetico-deductive interview sessions.
//!
//! A session takes exactly one open-probe answer, then any number of
//! closed-probe answers. After each step it recomputes the differential (the
//! marginal probability that each disorder is present) from the full evidence
//! log, and it can rank unasked symptoms by expected entropy reduction.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{self, entropy_bits, BnError, Evidence, Network, Posterior, VariableKind};
use crate::kb::KnowledgeBase;
use crate::learning::{self, augment_with_global_params, LearningError, LinkPolicy, ParamGrid, ParamPosterior};
use crate::report::{augment_with_reports, open_probe_evidence, OpenProbeResponse, ReportError, ReportParams};
use crate::severity::{augment_with_severity, SeverityError, SeverityLink, P_MINOR};

/// Default `P_Minor` resolution when a knowledge base has no severity config.
pub const DEFAULT_SEVERITY_GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("mode `{mode}` is not supported by this knowledge base: {reason}")]
    UnsupportedMode { mode: Mode, reason: String },
    #[error("operation requires phase `{expected}` but session is in `{actual}`")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("unknown symptom `{0}`")]
    UnknownSymptom(String),
    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },
    #[error("`{0}` has already been observed")]
    AlreadyObserved(String),
    #[error("session mode `{0}` has no reporting parameters")]
    NoParameters(Mode),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Learning(#[from] LearningError),
    #[error(transparent)]
    Severity(#[from] SeverityError),
    #[error(transparent)]
    Network(#[from] BnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FixedParams,
    LearnGlobal,
    Severity,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FixedParams => "fixed-params",
            Mode::LearnGlobal => "learn-global",
            Mode::Severity => "severity",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed-params" => Ok(Mode::FixedParams),
            "learn-global" => Ok(Mode::LearnGlobal),
            "severity" => Ok(Mode::Severity),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    AwaitingOpenProbe,
    Refining,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::AwaitingOpenProbe => "awaiting-open-probe",
            Phase::Refining => "refining",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    OpenProbe,
    ClosedProbe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub variable: String,
    pub state: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub symptom: String,
    /// Expected reduction in summed disorder entropy, in bits.
    pub score: f64,
    pub rank: usize,
}

/// Probability that a disorder is present: all mass outside its `absent` state.
pub fn presence(posterior: &Posterior) -> f64 {
    match posterior.probability("absent") {
        Some(absent) => 1.0 - absent,
        None => posterior.probabilities.last().copied().unwrap_or(0.0),
    }
}

/// One interview against a knowledge base.
#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    kb: Arc<KnowledgeBase>,
    mode: Mode,
    question: Option<String>,
    params: Vec<ReportParams>,
    network: Arc<Network>,
    log: Vec<Finding>,
    phase: Phase,
    differential: Vec<Posterior>,
}

/// Opens a session in the awaiting-open-probe phase.
pub fn start_session(id: impl Into<String>, kb: Arc<KnowledgeBase>, mode: Mode) -> Result<Session, EngineError> {
    let question = kb.primary_probe().map(|p| p.id.clone());
    let params = question.as_deref().map(|q| kb.reports_for(q)).unwrap_or_default();
    let network = session_network(&kb, mode, question.as_deref(), &params)?;
    let mut session = Session {
        id: id.into(),
        kb,
        mode,
        question,
        params,
        network: Arc::new(network),
        log: Vec::new(),
        phase: Phase::AwaitingOpenProbe,
        differential: Vec::new(),
    };
    session.refresh()?;
    Ok(session)
}

fn session_network(
    kb: &KnowledgeBase,
    mode: Mode,
    question: Option<&str>,
    params: &[ReportParams],
) -> Result<Network, EngineError> {
    let unsupported = |reason: &str| EngineError::UnsupportedMode {
        mode,
        reason: reason.to_string(),
    };
    let Some(question) = question else {
        return match mode {
            Mode::FixedParams => Ok(kb.network().clone()),
            _ => Err(unsupported("no open probe is defined")),
        };
    };
    let with_reports = augment_with_reports(kb.network(), params, question)?;
    match mode {
        Mode::FixedParams => Ok(with_reports),
        Mode::LearnGlobal => {
            if params.is_empty() {
                return Err(unsupported("no report parameters"));
            }
            let (grid, link) = match &kb.config().learning {
                Some(cfg) => (cfg.grid.clone(), cfg.link.clone()),
                None => (ParamGrid::default(), LinkPolicy::Identity),
            };
            Ok(augment_with_global_params(&with_reports, params, &grid, &link)?)
        }
        Mode::Severity => {
            if !kb.supports_severity() {
                return Err(unsupported("report parameters lack major/minor severity classes"));
            }
            let (link, points) = match &kb.config().severity {
                Some(cfg) => (SeverityLink::by_name(&cfg.link)?, cfg.grid_points),
                None => (SeverityLink::quadratic(), DEFAULT_SEVERITY_GRID),
            };
            let grid = learning::Grid::unit_midpoints(points)?;
            Ok(augment_with_severity(&with_reports, params, &grid, &link)?)
        }
    }
}

impl Session {
    /// Rebuilds a session from a persisted evidence log.
    pub fn restore(
        id: impl Into<String>,
        kb: Arc<KnowledgeBase>,
        mode: Mode,
        phase: Phase,
        log: Vec<Finding>,
    ) -> Result<Session, EngineError> {
        let mut session = start_session(id, kb, mode)?;
        session.phase = phase;
        session.log = log;
        bn::probability_of_evidence(&session.network, &session.evidence())?;
        session.refresh()?;
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn question(&self) -> Option<&str> {
        self.question.as_deref()
    }

    pub fn report_params(&self) -> &[ReportParams] {
        &self.params
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn log(&self) -> &[Finding] {
        &self.log
    }

    /// Current differential, most probable disorder first.
    pub fn differential(&self) -> &[Posterior] {
        &self.differential
    }

    pub fn evidence(&self) -> Evidence {
        let mut ev = Evidence::new();
        for f in &self.log {
            ev.set_hard(f.variable.clone(), f.state.clone());
        }
        ev
    }

    pub fn is_observed(&self, variable: &str) -> bool {
        self.log.iter().any(|f| f.variable == variable)
    }

    fn require_phase(&self, expected: Phase) -> Result<(), EngineError> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(EngineError::WrongPhase {
                expected,
                actual: self.phase,
            })
        }
    }

    fn check_state(&self, variable: &str, state: &str) -> Result<(), EngineError> {
        let var = self
            .network
            .variable(variable)
            .ok_or_else(|| EngineError::UnknownSymptom(variable.to_string()))?;
        if var.state_index(state).is_none() {
            return Err(EngineError::UnknownState {
                variable: variable.to_string(),
                state: state.to_string(),
            });
        }
        Ok(())
    }

    /// Applies the open-probe answer; report nodes are set exactly once here.
    /// An empty `question` on the response means the session's probe.
    pub fn submit_open_probe(&mut self, response: &OpenProbeResponse) -> Result<&[Posterior], EngineError> {
        self.require_phase(Phase::AwaitingOpenProbe)?;
        let mut response = response.clone();
        if response.question.is_empty() {
            response.question = self.question.clone().unwrap_or_default();
        }
        if Some(response.question.as_str()) != self.question.as_deref() {
            if let Some(symptom) = response.reported.keys().next() {
                return Err(EngineError::UnknownSymptom(symptom.clone()));
            }
        }
        for (symptom, state) in &response.reported {
            if !self.params.iter().any(|p| &p.symptom == symptom) {
                return Err(EngineError::UnknownSymptom(symptom.clone()));
            }
            self.check_state(symptom, state)?;
        }
        let evidence = open_probe_evidence(&response, &self.params)?;
        // Consistency check before committing.
        bn::probability_of_evidence(&self.network, &evidence)?;
        let mut findings: Vec<Finding> = evidence
            .hard
            .into_iter()
            .map(|(variable, state)| Finding {
                variable,
                state,
                provenance: Provenance::OpenProbe,
            })
            .collect();
        // Symptoms first, then report nodes, each in id order.
        findings.sort_by_key(|f| (self.network.variable(&f.variable).map(|v| v.kind), f.variable.clone()));
        let previous = std::mem::replace(&mut self.log, findings);
        self.phase = Phase::Refining;
        if let Err(e) = self.refresh() {
            self.log = previous;
            self.phase = Phase::AwaitingOpenProbe;
            return Err(e);
        }
        Ok(&self.differential)
    }

    /// Records a direct answer about one symptom.
    pub fn submit_closed_probe(&mut self, symptom: &str, state: &str) -> Result<&[Posterior], EngineError> {
        self.require_phase(Phase::Refining)?;
        match self.network.variable(symptom) {
            Some(v) if matches!(v.kind, VariableKind::Symptom | VariableKind::Other) => {}
            _ => return Err(EngineError::UnknownSymptom(symptom.to_string())),
        }
        if self.is_observed(symptom) {
            return Err(EngineError::AlreadyObserved(symptom.to_string()));
        }
        self.check_state(symptom, state)?;
        self.log.push(Finding {
            variable: symptom.to_string(),
            state: state.to_string(),
            provenance: Provenance::ClosedProbe,
        });
        if let Err(e) = self.refresh() {
            self.log.pop();
            return Err(e);
        }
        Ok(&self.differential)
    }

    fn refresh(&mut self) -> Result<(), EngineError> {
        self.differential = differential_for(&self.network, self.kb.disorders(), &self.evidence())?;
        Ok(())
    }

    /// Top-`k` unobserved symptoms by myopic expected entropy reduction.
    pub fn next_questions(&self, k: usize) -> Result<Vec<QuestionScore>, EngineError> {
        self.require_phase(Phase::Refining)?;
        let evidence = self.evidence();
        let disorders = self.kb.disorders();
        let current: f64 = self.differential.iter().map(Posterior::entropy).sum();

        let mut scores = Vec::new();
        for var in self.network.variables() {
            if !matches!(var.kind, VariableKind::Symptom | VariableKind::Other) || evidence.mentions(&var.id) {
                continue;
            }
            let score = if bn::d_separated(&self.network, &var.id, disorders, &evidence)? {
                0.0
            } else {
                let predictive = bn::posterior(&self.network, &var.id, &evidence)?;
                let mut expected = 0.0;
                for (state, p) in predictive.states.iter().zip(&predictive.probabilities) {
                    if *p <= 0.0 {
                        continue;
                    }
                    let branch = evidence.clone().observe(var.id.clone(), state.clone());
                    let entropy: f64 = bn::posteriors(&self.network, disorders, &branch)?
                        .iter()
                        .map(Posterior::entropy)
                        .sum();
                    expected += p * entropy;
                }
                (current - expected).max(0.0)
            };
            scores.push((var.id.clone(), score));
        }
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(scores
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (symptom, score))| QuestionScore {
                symptom,
                score,
                rank: i + 1,
            })
            .collect())
    }

    /// Posteriors of the reporting-style parameters: `P_Global` and `B_Global`
    /// in learn-global mode, `P_Minor` in severity mode.
    pub fn param_posteriors(&self) -> Result<Vec<ParamPosterior>, EngineError> {
        let evidence = self.evidence();
        match self.mode {
            Mode::FixedParams => Err(EngineError::NoParameters(self.mode)),
            Mode::LearnGlobal => {
                let (p, b) = learning::global_param_posterior(&self.network, &evidence)?;
                Ok(vec![p, b])
            }
            Mode::Severity => {
                let post = bn::posterior(&self.network, P_MINOR, &evidence)?;
                Ok(vec![ParamPosterior::from_posterior(post)?])
            }
        }
    }
}

/// Disorder posteriors sorted by probability of presence, ties by id.
pub fn differential_for<S: AsRef<str>>(
    network: &Network,
    disorders: &[S],
    evidence: &Evidence,
) -> Result<Vec<Posterior>, EngineError> {
    let mut out = bn::posteriors(network, disorders, evidence)?;
    out.sort_by(|a, b| {
        presence(b)
            .total_cmp(&presence(a))
            .then_with(|| a.variable.cmp(&b.variable))
    });
    Ok(out)
}

/// Summed Shannon entropy (bits) of a set of marginals.
pub fn total_entropy(posteriors: &[Posterior]) -> f64 {
    posteriors.iter().map(|p| entropy_bits(&p.probabilities)).sum()
}
