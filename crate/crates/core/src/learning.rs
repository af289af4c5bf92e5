//! Per-respondent reporting style.
//!
//! Every report node is conditioned on two discretized chance nodes, the
//! global reportability `P_Global` and the global bias `B_Global`. Exact
//! inference over the augmented network then yields their posteriors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{self, BnError, ConditionalTable, Evidence, Network, Posterior, Variable, VariableKind};
use crate::report::{report_entries, ReportError, ReportParams};

pub const P_GLOBAL: &str = "P_Global";
pub const B_GLOBAL: &str = "B_Global";

const PRIOR_SUM_TOLERANCE: f64 = 1e-9;
const CLAMP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearningError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("parameter node `{0}` already present")]
    DuplicateParameterNode(String),
    #[error("parameter node `{0}` missing from network")]
    MissingParameterNode(String),
    #[error("report node `{0}` missing from network")]
    MissingReportNode(String),
    #[error("expected {expected} probabilities, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Network(#[from] BnError),
}

/// Discrete support points with prior weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub points: Vec<f64>,
    pub prior: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>, prior: Vec<f64>) -> Result<Self, LearningError> {
        let grid = Grid { points, prior };
        grid.validate()?;
        Ok(grid)
    }

    pub fn uniform(points: Vec<f64>) -> Result<Self, LearningError> {
        let n = points.len().max(1);
        let prior = vec![1.0 / n as f64; points.len()];
        Grid::new(points, prior)
    }

    /// `n` equally weighted cell midpoints of (0, 1).
    pub fn unit_midpoints(n: usize) -> Result<Self, LearningError> {
        Grid::uniform((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect())
    }

    pub fn validate(&self) -> Result<(), LearningError> {
        if self.points.len() < 2 {
            return Err(LearningError::InvalidGrid("grid needs at least two points".into()));
        }
        if self.points.len() != self.prior.len() {
            return Err(LearningError::InvalidGrid(format!(
                "{} points but {} prior weights",
                self.points.len(),
                self.prior.len()
            )));
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(LearningError::InvalidGrid("points must be finite".into()));
        }
        if self.points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LearningError::InvalidGrid("points must be strictly increasing".into()));
        }
        if self.prior.iter().any(|w| !(*w >= 0.0)) {
            return Err(LearningError::InvalidGrid("prior weights must be nonnegative".into()));
        }
        let sum: f64 = self.prior.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(LearningError::InvalidGrid(format!("prior weights sum to {sum}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().zip(&self.prior).map(|(x, w)| x * w).sum()
    }

    /// State labels: shortest round-trip decimal of each point.
    pub fn labels(&self) -> Vec<String> {
        self.points.iter().map(|p| p.to_string()).collect()
    }

    pub(crate) fn check_within(&self, lo: f64, hi: f64, what: &str) -> Result<(), LearningError> {
        match self.points.iter().find(|p| !(**p >= lo && **p <= hi)) {
            Some(p) => Err(LearningError::InvalidGrid(format!(
                "{what} point {p} outside [{lo}, {hi}]"
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn to_variable(&self, id: &str) -> (Variable, ConditionalTable) {
        (
            Variable::new(id, self.labels(), VariableKind::Parameter),
            ConditionalTable::prior(id, self.prior.clone()),
        )
    }
}

/// Discretized global reportability and bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub reportability: Grid,
    pub bias: Grid,
}

impl ParamGrid {
    pub fn new(reportability: Grid, bias: Grid) -> Result<Self, LearningError> {
        let grid = ParamGrid { reportability, bias };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), LearningError> {
        self.reportability.validate()?;
        self.bias.validate()?;
        if self.reportability.points.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(LearningError::InvalidGrid(
                "reportability points must lie in (0, 1)".into(),
            ));
        }
        if self.bias.points.iter().any(|b| !(*b >= 1.0)) {
            return Err(LearningError::InvalidGrid("bias points must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for ParamGrid {
    /// Reportability 0.1..=0.9 in steps of 0.1 and bias {1, 2, 5, 10, 20}, uniform priors.
    fn default() -> Self {
        let reportability = Grid::uniform((1..=9).map(|i| f64::from(i) / 10.0).collect()).expect("static grid");
        let bias = Grid::uniform(vec![1.0, 2.0, 5.0, 10.0, 20.0]).expect("static grid");
        ParamGrid { reportability, bias }
    }
}

/// Per-symptom multipliers applied to the global parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScale {
    pub reportability: f64,
    pub bias: f64,
}

/// Maps global reportability and bias to a report node's effective parameters.
/// Both maps are nondecreasing in the corresponding global value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LinkPolicy {
    #[default]
    Identity,
    /// Effective reportability is `global * scale` clamped into (0, 1);
    /// effective bias is `global * scale` floored at 1. Symptoms without an
    /// entry use the identity.
    Scaled { factors: BTreeMap<String, LinkScale> },
}

impl LinkPolicy {
    pub fn effective(&self, global_reportability: f64, global_bias: f64, params: &ReportParams) -> (f64, f64) {
        match self {
            LinkPolicy::Identity => (global_reportability, global_bias),
            LinkPolicy::Scaled { factors } => match factors.get(&params.symptom) {
                None => (global_reportability, global_bias),
                Some(s) => (
                    (global_reportability * s.reportability).clamp(CLAMP_EPS, 1.0 - CLAMP_EPS),
                    (global_bias * s.bias).max(1.0),
                ),
            },
        }
    }
}

/// Posterior over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPosterior {
    pub variable: String,
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ParamPosterior {
    pub(crate) fn from_posterior(posterior: Posterior) -> Result<Self, LearningError> {
        let values = posterior
            .states
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    LearningError::InvalidGrid(format!("state `{s}` of `{}` is not numeric", posterior.variable))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ParamPosterior {
            variable: posterior.variable,
            values,
            probabilities: posterior.probabilities,
        })
    }

    pub fn expectation(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * p).sum()
    }
}

/// Conditions every report node named by `params` on `P_Global` and `B_Global`.
///
/// `network` must already carry the report nodes.
pub fn augment_with_global_params(
    network: &Network,
    params: &[ReportParams],
    grid: &ParamGrid,
    link: &LinkPolicy,
) -> Result<Network, LearningError> {
    grid.validate()?;
    for id in [P_GLOBAL, B_GLOBAL] {
        if network.contains(id) {
            return Err(LearningError::DuplicateParameterNode(id.to_string()));
        }
    }
    let (p_var, p_table) = grid.reportability.to_variable(P_GLOBAL);
    let (b_var, b_table) = grid.bias.to_variable(B_GLOBAL);

    let mut tables = Vec::with_capacity(params.len());
    for p in params {
        let node = p.report_node();
        if !network.contains(&node) {
            return Err(LearningError::MissingReportNode(node));
        }
        let symptom = network
            .variable(&p.symptom)
            .ok_or_else(|| ReportError::UnknownVariable(p.symptom.clone()))?;
        let mut entries = Vec::with_capacity(symptom.cardinality() * grid.reportability.len() * grid.bias.len() * 2);
        for state in 0..symptom.cardinality() {
            for &gp in &grid.reportability.points {
                for &gb in &grid.bias.points {
                    let (rp, rb) = link.effective(gp, gb, p);
                    let column = report_entries(symptom, &p.absent_state, rp, rp / rb)?;
                    entries.extend_from_slice(&column[state * 2..state * 2 + 2]);
                }
            }
        }
        tables.push(ConditionalTable::new(
            node,
            vec![p.symptom.clone(), P_GLOBAL.to_string(), B_GLOBAL.to_string()],
            entries,
        ));
    }

    let with_nodes = network.with_additions([p_var, b_var], [p_table, b_table])?;
    Ok(with_nodes.with_replaced_tables(tables)?)
}

/// Posteriors of `P_Global` and `B_Global`.
pub fn global_param_posterior(
    network: &Network,
    evidence: &Evidence,
) -> Result<(ParamPosterior, ParamPosterior), LearningError> {
    for id in [P_GLOBAL, B_GLOBAL] {
        if !network.contains(id) {
            return Err(LearningError::MissingParameterNode(id.to_string()));
        }
    }
    let p = ParamPosterior::from_posterior(bn::posterior(network, P_GLOBAL, evidence)?)?;
    let b = ParamPosterior::from_posterior(bn::posterior(network, B_GLOBAL, evidence)?)?;
    Ok((p, b))
}

/// Expected reportability and expected bias.
pub fn expected_params(posteriors: &(ParamPosterior, ParamPosterior)) -> (f64, f64) {
    (posteriors.0.expectation(), posteriors.1.expectation())
}

/// Grid for a follow-up interview whose prior is this interview's posterior.
pub fn carry_over_prior(
    posteriors: &(ParamPosterior, ParamPosterior),
    grid: &ParamGrid,
) -> Result<ParamGrid, LearningError> {
    let check = |g: &Grid, p: &ParamPosterior| {
        if g.len() == p.probabilities.len() {
            Ok(())
        } else {
            Err(LearningError::DimensionMismatch {
                expected: g.len(),
                found: p.probabilities.len(),
            })
        }
    };
    check(&grid.reportability, &posteriors.0)?;
    check(&grid.bias, &posteriors.1)?;
    ParamGrid::new(
        Grid::new(grid.reportability.points.clone(), posteriors.0.probabilities.clone())?,
        Grid::new(grid.bias.points.clone(), posteriors.1.probabilities.clone())?,
    )
}
