use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BnError, Network};

/// Hard findings plus virtual (likelihood-vector) findings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(default)]
    pub hard: BTreeMap<String, String>,
    /// One nonnegative likelihood weight per state of the variable.
    #[serde(default, rename = "virtual")]
    pub soft: BTreeMap<String, Vec<f64>>,
}

impl Evidence {
    pub fn new() -> Self {
        Evidence::default()
    }

    pub fn is_empty(&self) -> bool {
        self.hard.is_empty() && self.soft.is_empty()
    }

    pub fn observe(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.set_hard(variable, state);
        self
    }

    pub fn likelihood(mut self, variable: impl Into<String>, weights: Vec<f64>) -> Self {
        self.set_virtual(variable, weights);
        self
    }

    /// Records a hard finding, replacing any previous finding on the variable.
    pub fn set_hard(&mut self, variable: impl Into<String>, state: impl Into<String>) {
        let variable = variable.into();
        self.soft.remove(&variable);
        self.hard.insert(variable, state.into());
    }

    /// Records a virtual finding, replacing any previous finding on the variable.
    pub fn set_virtual(&mut self, variable: impl Into<String>, weights: Vec<f64>) {
        let variable = variable.into();
        self.hard.remove(&variable);
        self.soft.insert(variable, weights);
    }

    pub fn remove(&mut self, variable: &str) {
        self.hard.remove(variable);
        self.soft.remove(variable);
    }

    pub fn mentions(&self, variable: &str) -> bool {
        self.hard.contains_key(variable) || self.soft.contains_key(variable)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.hard.keys().chain(self.soft.keys()).map(String::as_str)
    }

    /// Union of two evidence sets; conflicting entries are an error.
    pub fn merged(&self, other: &Evidence) -> Result<Evidence, BnError> {
        let mut out = self.clone();
        for (v, s) in &other.hard {
            match (out.hard.get(v), out.soft.contains_key(v)) {
                (Some(existing), _) if existing != s => return Err(conflict(v)),
                (_, true) => return Err(conflict(v)),
                _ => {
                    out.hard.insert(v.clone(), s.clone());
                }
            }
        }
        for (v, w) in &other.soft {
            if out.mentions(v) {
                return Err(conflict(v));
            }
            out.soft.insert(v.clone(), w.clone());
        }
        Ok(out)
    }

    /// Checks every finding against the network; returns resolved indices.
    pub(crate) fn resolve(&self, network: &Network) -> Result<ResolvedEvidence, BnError> {
        let mut hard = Vec::with_capacity(self.hard.len());
        for (v, s) in &self.hard {
            if self.soft.contains_key(v) {
                return Err(conflict(v));
            }
            let i = network.require(v)?;
            let state = network.var_at(i).state_index(s).ok_or_else(|| BnError::UnknownState {
                variable: v.clone(),
                state: s.clone(),
            })?;
            hard.push((i, state));
        }
        let mut soft = Vec::with_capacity(self.soft.len());
        for (v, w) in &self.soft {
            let i = network.require(v)?;
            let k = network.var_at(i).cardinality();
            if w.len() != k {
                return Err(BnError::InvalidEvidence {
                    variable: v.clone(),
                    reason: format!("likelihood vector has {} weights for {} states", w.len(), k),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(BnError::InvalidEvidence {
                    variable: v.clone(),
                    reason: "likelihood weights must be finite and nonnegative".into(),
                });
            }
            if !w.iter().any(|x| *x > 0.0) {
                return Err(BnError::InvalidEvidence {
                    variable: v.clone(),
                    reason: "likelihood vector needs a positive entry".into(),
                });
            }
            soft.push((i, w.clone()));
        }
        Ok(ResolvedEvidence { hard, soft })
    }
}

fn conflict(v: &str) -> BnError {
    BnError::InvalidEvidence {
        variable: v.to_string(),
        reason: "conflicting findings for the same variable".into(),
    }
}

pub(crate) struct ResolvedEvidence {
    pub hard: Vec<(usize, usize)>,
    pub soft: Vec<(usize, Vec<f64>)>,
}

impl ResolvedEvidence {
    pub fn hard_state(&self, var: usize) -> Option<usize> {
        self.hard.iter().find(|(v, _)| *v == var).map(|(_, s)| *s)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.hard
            .iter()
            .map(|(v, _)| *v)
            .chain(self.soft.iter().map(|(v, _)| *v))
    }
}
