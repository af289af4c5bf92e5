//! Brute-force oracles shared by the integration tests and the acceptance run.
//! None of these call into the inference code under test.

#![allow(dead_code)]

use std::collections::BTreeMap;

use openprobe::bn::{build_network, ConditionalTable, Evidence, Network, Variable, VariableKind};
use openprobe::kb::{KnowledgeBase, SYMPTOM_LEAK, SYMPTOM_STRENGTH};
use openprobe::report::ReportParams;
use rand::Rng;

/// Random DAG over `n` variables with 2..=`max_states` states each. Edges only
/// go from lower to higher index, at most three parents per node.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, max_states: usize) -> Network {
    let mut variables = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let card = rng.gen_range(2..=max_states);
        let states: Vec<String> = (0..card)
            .map(|s| {
                if card == 2 {
                    ["absent", "present"][s].to_string()
                } else {
                    format!("s{s}")
                }
            })
            .collect();
        let kind = if i < n / 2 {
            VariableKind::Disorder
        } else {
            VariableKind::Symptom
        };
        variables.push(Variable::new(format!("V{i}"), states, kind));
        let mut parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.35)).collect();
        parents.truncate(3);
        let rows: usize = parents.iter().map(|&p| variables[p].cardinality()).product();
        let mut entries = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let raw: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            entries.extend(raw.iter().map(|x| x / sum));
        }
        tables.push(ConditionalTable::new(
            format!("V{i}"),
            parents.iter().map(|&p| format!("V{p}")).collect(),
            entries,
        ));
    }
    build_network(variables, tables).expect("generator builds acyclic networks")
}

/// Joint probability of a full assignment (state index per variable, in
/// network variable order), multiplied by any virtual-evidence weights and
/// zeroed when it contradicts hard evidence.
fn weighted_joint(net: &Network, assignment: &[usize], evidence: &Evidence) -> f64 {
    let vars = net.variables();
    let pos = |id: &str| vars.iter().position(|v| v.id == id).unwrap();
    let mut p = 1.0;
    for (i, var) in vars.iter().enumerate() {
        let table = net.table(&var.id).unwrap();
        let mut row = 0;
        for parent in &table.parents {
            let j = pos(parent);
            row = row * vars[j].cardinality() + assignment[j];
        }
        p *= table.entries[row * var.cardinality() + assignment[i]];
    }
    for (id, state) in &evidence.hard {
        let i = pos(id);
        if vars[i].states[assignment[i]] != *state {
            return 0.0;
        }
    }
    for (id, weights) in &evidence.soft {
        p *= weights[assignment[pos(id)]];
    }
    p
}

fn for_each_assignment(net: &Network, mut f: impl FnMut(&[usize])) {
    let cards: Vec<usize> = net.variables().iter().map(Variable::cardinality).collect();
    let mut a = vec![0usize; cards.len()];
    loop {
        f(&a);
        let mut k = cards.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            a[k] += 1;
            if a[k] < cards[k] {
                break;
            }
            a[k] = 0;
        }
    }
}

/// Posterior of `query` by summing the full joint. `None` if evidence is impossible.
pub fn enumerate_posterior(net: &Network, query: &str, evidence: &Evidence) -> Option<Vec<f64>> {
    let q = net.variables().iter().position(|v| v.id == query).unwrap();
    let mut dist = vec![0.0; net.variables()[q].cardinality()];
    for_each_assignment(net, |a| dist[a[q]] += weighted_joint(net, a, evidence));
    let total: f64 = dist.iter().sum();
    (total > 0.0).then(|| dist.iter().map(|x| x / total).collect())
}

pub fn enumerate_evidence_probability(net: &Network, evidence: &Evidence) -> f64 {
    let mut total = 0.0;
    for_each_assignment(net, |a| total += weighted_joint(net, a, evidence));
    total
}

/// Likelihood of the observed report state given the symptom state, straight
/// from the reporting model: present symptoms are reported with probability P,
/// absent ones with probability P/B.
pub fn report_likelihood(p: f64, b: f64, symptom_present: bool, reported: bool) -> f64 {
    let rate = if symptom_present { p } else { p / b };
    if reported {
        rate
    } else {
        1.0 - rate
    }
}

/// Posterior over a base network with report observations folded in by
/// enumeration. `reports` maps a binary symptom to whether it was reported.
pub fn enumerate_with_reports(
    net: &Network,
    query: &str,
    hard: &Evidence,
    reports: &[(ReportParams, bool)],
) -> Option<Vec<f64>> {
    let vars = net.variables();
    let q = vars.iter().position(|v| v.id == query).unwrap();
    let mut dist = vec![0.0; vars[q].cardinality()];
    for_each_assignment(net, |a| {
        let mut w = weighted_joint(net, a, hard);
        for (rp, reported) in reports {
            let i = vars.iter().position(|v| v.id == rp.symptom).unwrap();
            let present = vars[i].states[a[i]] != rp.absent_state;
            w *= report_likelihood(rp.reportability, rp.bias, present, *reported);
        }
        dist[a[q]] += w;
    });
    let total: f64 = dist.iter().sum();
    (total > 0.0).then(|| dist.iter().map(|x| x / total).collect())
}

pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Oracle for bipartite noisy-OR knowledge bases (as produced by the synthetic
/// generator). It enumerates disorder configurations only and sums each
/// symptom out locally together with its report node.
pub struct BipartiteOracle {
    pub disorders: Vec<String>,
    priors: Vec<f64>,
    /// (symptom id, parent disorder indices)
    symptoms: Vec<(String, Vec<usize>)>,
    /// report node id -> symptom index
    reports: BTreeMap<String, usize>,
}

/// What is known about one symptom and its report node.
#[derive(Clone, Copy, Default)]
struct SymptomEvidence {
    state: Option<bool>,
    reported: Option<bool>,
}

impl BipartiteOracle {
    pub fn new(kb: &KnowledgeBase) -> Self {
        let net = kb.network();
        let disorders = kb.disorders().to_vec();
        let priors = disorders.iter().map(|d| net.table(d).unwrap().entries[1]).collect();
        let symptoms = net
            .variables()
            .iter()
            .filter(|v| v.kind == VariableKind::Symptom)
            .map(|v| {
                let parents = net
                    .table(&v.id)
                    .unwrap()
                    .parents
                    .iter()
                    .map(|p| disorders.iter().position(|d| d == p).unwrap())
                    .collect();
                (v.id.clone(), parents)
            })
            .collect::<Vec<(String, Vec<usize>)>>();
        let reports = kb
            .reports()
            .iter()
            .map(|r| {
                (
                    r.report_node(),
                    symptoms.iter().position(|(s, _)| *s == r.symptom).unwrap(),
                )
            })
            .collect();
        BipartiteOracle {
            disorders,
            priors,
            symptoms,
            reports,
        }
    }

    pub fn symptom_ids(&self) -> impl Iterator<Item = &str> {
        self.symptoms.iter().map(|(s, _)| s.as_str())
    }

    fn split(&self, evidence: &Evidence) -> Vec<SymptomEvidence> {
        let mut out = vec![SymptomEvidence::default(); self.symptoms.len()];
        for (id, state) in &evidence.hard {
            if let Some(i) = self.symptoms.iter().position(|(s, _)| s == id) {
                out[i].state = Some(state == "present");
            } else if let Some(&i) = self.reports.get(id) {
                out[i].reported = Some(state == "true");
            } else {
                panic!("oracle does not handle evidence on {id}");
            }
        }
        assert!(evidence.soft.is_empty());
        out
    }

    /// Unnormalised weight of each disorder configuration (bit i = disorder i present).
    /// `p` and `b` are the reporting parameters applied to every report node.
    pub fn config_weights(&self, evidence: &Evidence, p: f64, b: f64) -> Vec<f64> {
        let obs = self.split(evidence);
        let n = self.disorders.len();
        (0..1usize << n)
            .map(|config| {
                let mut w = 1.0;
                for (d, prior) in self.priors.iter().enumerate() {
                    w *= if config >> d & 1 == 1 { *prior } else { 1.0 - prior };
                }
                for ((_, parents), o) in self.symptoms.iter().zip(&obs) {
                    let active = parents.iter().filter(|&&d| config >> d & 1 == 1).count() as i32;
                    let p_absent = (1.0 - SYMPTOM_LEAK) * (1.0 - SYMPTOM_STRENGTH).powi(active);
                    let mut local = 0.0;
                    for (present, px) in [(false, p_absent), (true, 1.0 - p_absent)] {
                        if o.state.is_some_and(|s| s != present) {
                            continue;
                        }
                        let lik = o.reported.map_or(1.0, |r| report_likelihood(p, b, present, r));
                        local += px * lik;
                    }
                    w *= local;
                }
                w
            })
            .collect()
    }

    /// P(disorder present) for each disorder, plus P(evidence).
    pub fn presence(&self, evidence: &Evidence, p: f64, b: f64) -> (Vec<f64>, f64) {
        let w = self.config_weights(evidence, p, b);
        let total: f64 = w.iter().sum();
        let marg = (0..self.disorders.len())
            .map(|d| {
                w.iter()
                    .enumerate()
                    .filter(|(c, _)| c >> d & 1 == 1)
                    .map(|(_, x)| x)
                    .sum::<f64>()
                    / total
            })
            .collect();
        (marg, total)
    }

    pub fn summed_entropy(&self, evidence: &Evidence, p: f64, b: f64) -> f64 {
        self.presence(evidence, p, b)
            .0
            .iter()
            .map(|&q| entropy_bits(&[q, 1.0 - q]))
            .sum()
    }

    /// Expected reduction in summed disorder entropy from observing `symptom`.
    pub fn voi(&self, evidence: &Evidence, symptom: &str, p: f64, b: f64) -> f64 {
        let now = self.summed_entropy(evidence, p, b);
        let (_, pe) = self.presence(evidence, p, b);
        let mut expected = 0.0;
        for state in ["absent", "present"] {
            let branch = evidence.clone().observe(symptom, state);
            let (_, pb) = self.presence(&branch, p, b);
            if pb > 0.0 {
                expected += pb / pe * self.summed_entropy(&branch, p, b);
            }
        }
        now - expected
    }
}
