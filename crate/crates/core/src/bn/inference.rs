//! Exact inference by variable elimination.
//!
//! Every query first drops barren variables (anything that is not an ancestor
//! of a query or evidence variable), then eliminates the rest with a greedy
//! min-degree order, ties broken by variable id.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::evidence::ResolvedEvidence;
use super::factor::Factor;
use super::{BnError, Evidence, Network};

/// Marginal distribution of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub variable: String,
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Posterior {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probabilities)
    }
}

pub(crate) fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Exact posterior marginal of `query` given `evidence`.
pub fn posterior(network: &Network, query: &str, evidence: &Evidence) -> Result<Posterior, BnError> {
    let q = network.require(query)?;
    let ev = evidence.resolve(network)?;
    let result = eliminate_all_but(network, &[q], &ev);
    let var = network.var_at(q);
    let probabilities = match ev.hard_state(q) {
        Some(state) => {
            if result.total() <= 0.0 {
                return Err(BnError::ImpossibleEvidence);
            }
            let mut p = vec![0.0; var.cardinality()];
            p[state] = 1.0;
            p
        }
        None => {
            let total = result.total();
            if total <= 0.0 {
                return Err(BnError::ImpossibleEvidence);
            }
            result.values.iter().map(|v| v / total).collect()
        }
    };
    Ok(Posterior {
        variable: var.id.clone(),
        states: var.states.clone(),
        probabilities,
    })
}

/// Posterior marginals for several variables under the same evidence.
pub fn posteriors<S: AsRef<str>>(
    network: &Network,
    queries: &[S],
    evidence: &Evidence,
) -> Result<Vec<Posterior>, BnError> {
    queries
        .iter()
        .map(|q| posterior(network, q.as_ref(), evidence))
        .collect()
}

/// Exact probability of the evidence. Virtual findings enter as likelihood weights.
pub fn probability_of_evidence(network: &Network, evidence: &Evidence) -> Result<f64, BnError> {
    let ev = evidence.resolve(network)?;
    Ok(eliminate_all_but(network, &[], &ev).total())
}

/// Removes every barren variable: unobserved, unqueried, and without any
/// non-barren descendant. Queried posteriors are unchanged.
pub fn prune_barren<S: AsRef<str>>(
    network: &Network,
    query_ids: &[S],
    evidence: &Evidence,
) -> Result<Network, BnError> {
    let mut roots = Vec::new();
    for q in query_ids {
        roots.push(network.require(q.as_ref())?);
    }
    for v in evidence.variables() {
        roots.push(network.require(v)?);
    }
    let keep = ancestral_closure(network, roots);
    let mut variables = Vec::with_capacity(keep.len());
    let mut tables = Vec::with_capacity(keep.len());
    for (i, kept) in keep.iter().enumerate() {
        if *kept {
            variables.push(network.var_at(i).clone());
            tables.push(network.table_at(i).clone());
        }
    }
    super::build_network(variables, tables)
}

/// Marks `roots` and all their ancestors.
fn ancestral_closure(network: &Network, roots: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut keep = vec![false; network.len()];
    let mut stack: Vec<usize> = roots.into_iter().collect();
    while let Some(i) = stack.pop() {
        if !keep[i] {
            keep[i] = true;
            stack.extend_from_slice(network.parent_indices(i));
        }
    }
    keep
}

/// Sums out every relevant variable outside `keep` and multiplies what is left.
/// Hard-observed variables are reduced away, so the result's scope is `keep`
/// minus observed variables.
fn eliminate_all_but(network: &Network, keep: &[usize], ev: &ResolvedEvidence) -> Factor {
    let relevant = ancestral_closure(network, keep.iter().copied().chain(ev.indices()));

    let mut factors = Vec::new();
    for i in (0..network.len()).filter(|&i| relevant[i]) {
        let mut scope = network.parent_indices(i).to_vec();
        scope.push(i);
        let card = scope.iter().map(|&v| network.var_at(v).cardinality()).collect();
        let mut f = Factor::new(scope, card, network.table_at(i).entries.clone());
        for &(v, s) in &ev.hard {
            if f.contains(v) {
                f = f.reduce(v, s);
            }
        }
        factors.push(f);
    }
    for (v, weights) in &ev.soft {
        if ev.hard_state(*v).is_none() {
            factors.push(Factor::new(vec![*v], vec![weights.len()], weights.clone()));
        }
    }

    let mut pending: BTreeSet<usize> = (0..network.len())
        .filter(|&i| relevant[i] && !keep.contains(&i) && ev.hard_state(i).is_none())
        .collect();

    while let Some(next) = pick_min_degree(network, &pending, &factors) {
        pending.remove(&next);
        let (mut touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(next));
        factors = rest;
        if let Some(first) = touching.pop() {
            let combined = touching.iter().fold(first, |acc, f| acc.product(f));
            factors.push(combined.marginalize(next));
        }
    }

    factors.into_iter().fold(Factor::scalar(1.0), |acc, f| acc.product(&f))
}

fn pick_min_degree(network: &Network, pending: &BTreeSet<usize>, factors: &[Factor]) -> Option<usize> {
    pending
        .iter()
        .map(|&v| {
            let mut neighbours = BTreeSet::new();
            for f in factors.iter().filter(|f| f.contains(v)) {
                neighbours.extend(f.scope.iter().copied().filter(|&u| u != v));
            }
            (neighbours.len(), network.var_at(v).id.as_str(), v)
        })
        .min()
        .map(|(_, _, v)| v)
}

/// True when `source` is d-separated from every variable in `targets` given the
/// evidence. Hard findings block; virtual findings act like an observed child
/// of their variable, so they activate v-structures without blocking.
pub fn d_separated<S: AsRef<str>>(
    network: &Network,
    source: &str,
    targets: &[S],
    evidence: &Evidence,
) -> Result<bool, BnError> {
    let x = network.require(source)?;
    let target_idx: Vec<usize> = targets
        .iter()
        .map(|t| network.require(t.as_ref()))
        .collect::<Result<_, _>>()?;
    let ev = evidence.resolve(network)?;
    let observed: Vec<bool> = (0..network.len()).map(|i| ev.hard_state(i).is_some()).collect();
    if observed[x] {
        return Ok(true);
    }
    let has_observed_descendant = ancestral_closure(network, ev.indices());

    // Reachability over (node, arrived-from-child) pairs.
    let mut visited = vec![[false; 2]; network.len()];
    let mut reachable = vec![false; network.len()];
    let mut queue = VecDeque::from([(x, true)]);
    while let Some((node, from_child)) = queue.pop_front() {
        let slot = usize::from(from_child);
        if visited[node][slot] {
            continue;
        }
        visited[node][slot] = true;
        if !observed[node] {
            reachable[node] = true;
        }
        if from_child {
            if !observed[node] {
                queue.extend(network.parent_indices(node).iter().map(|&p| (p, true)));
                queue.extend(network.child_indices(node).iter().map(|&c| (c, false)));
            }
        } else {
            if !observed[node] {
                queue.extend(network.child_indices(node).iter().map(|&c| (c, false)));
            }
            if has_observed_descendant[node] {
                queue.extend(network.parent_indices(node).iter().map(|&p| (p, true)));
            }
        }
    }
    Ok(target_idx.iter().all(|&t| t == x || !reachable[t]))
}
