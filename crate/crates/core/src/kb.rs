//! Knowledge-base files.
//!
//! A knowledge base is a UTF-8 JSON document with the top-level keys
//! `variables`, `tables`, `reports`, `probes`, `disorders` and `config`.
//! Table entries are flat arrays in the row-major order of
//! [`ConditionalTable`]. [`save_kb`] writes a canonical form: keys sorted,
//! two-space indentation, every float with 17 significant digits.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bn::{build_network, ConditionalTable, Network, Variable, VariableKind};
use crate::learning::{LinkPolicy, ParamGrid};
use crate::report::{ReportParams, SeverityClass};
use crate::severity::SeverityLink;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An open probe and the symptoms whose mention it can elicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub id: String,
    pub symptoms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    pub grid: ParamGrid,
    #[serde(default)]
    pub link: LinkPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityConfig {
    /// Name of a built-in link; only `quadratic` exists.
    pub link: String,
    /// Number of equally weighted midpoints in the `P_Minor` grid.
    pub grid_points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning: Option<LearningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<SeverityConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbFile {
    variables: Vec<Variable>,
    tables: Vec<ConditionalTable>,
    #[serde(default)]
    reports: Vec<ReportParams>,
    #[serde(default)]
    probes: Vec<Probe>,
    disorders: Vec<String>,
    #[serde(default)]
    config: KbConfig,
}

/// Validated network plus report metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    network: Network,
    reports: Vec<ReportParams>,
    probes: Vec<Probe>,
    disorders: Vec<String>,
    config: KbConfig,
}

impl KnowledgeBase {
    pub fn new(
        network: Network,
        reports: Vec<ReportParams>,
        probes: Vec<Probe>,
        disorders: Vec<String>,
        config: KbConfig,
    ) -> Result<Self, KbError> {
        let kb = KnowledgeBase {
            network,
            reports,
            probes,
            disorders,
            config,
        };
        kb.validate()?;
        Ok(kb)
    }

    fn validate(&self) -> Result<(), KbError> {
        let fail = |msg: String| Err(KbError::Validation(msg));
        if self.disorders.is_empty() {
            return fail("disorder set is empty".into());
        }
        let mut seen = BTreeSet::new();
        for d in &self.disorders {
            let Some(var) = self.network.variable(d) else {
                return fail(format!("disorder `{d}` is not a variable"));
            };
            if var.state_index("absent").is_none() {
                return fail(format!("disorder `{d}` has no `absent` state"));
            }
            if !seen.insert(d) {
                return fail(format!("disorder `{d}` listed twice"));
            }
        }
        let mut probe_ids = BTreeSet::new();
        for probe in &self.probes {
            if !probe_ids.insert(probe.id.as_str()) {
                return fail(format!("probe `{}` defined twice", probe.id));
            }
            for s in &probe.symptoms {
                if !self.network.contains(s) {
                    return fail(format!("probe `{}` binds unknown symptom `{s}`", probe.id));
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for r in &self.reports {
            r.validate().map_err(|e| KbError::Validation(e.to_string()))?;
            let Some(symptom) = self.network.variable(&r.symptom) else {
                return fail(format!("report parameters reference unknown symptom `{}`", r.symptom));
            };
            if symptom.state_index(&r.absent_state).is_none() {
                return fail(format!(
                    "symptom `{}` has no absent-like state `{}`",
                    r.symptom, r.absent_state
                ));
            }
            let Some(probe) = self.probes.iter().find(|p| p.id == r.question) else {
                return fail(format!(
                    "report parameters for `{}` reference unknown probe `{}`",
                    r.symptom, r.question
                ));
            };
            if !probe.symptoms.contains(&r.symptom) {
                return fail(format!(
                    "symptom `{}` is not bound to probe `{}`",
                    r.symptom, r.question
                ));
            }
            if !pairs.insert((r.symptom.as_str(), r.question.as_str())) {
                return fail(format!(
                    "duplicate report parameters for `{}` under `{}`",
                    r.symptom, r.question
                ));
            }
        }
        for probe in &self.probes {
            for s in &probe.symptoms {
                if !pairs.contains(&(s.as_str(), probe.id.as_str())) {
                    return fail(format!(
                        "symptom `{s}` bound to probe `{}` has no report parameters",
                        probe.id
                    ));
                }
            }
        }
        if let Some(learning) = &self.config.learning {
            learning
                .grid
                .validate()
                .map_err(|e| KbError::Validation(e.to_string()))?;
        }
        if let Some(sev) = &self.config.severity {
            SeverityLink::by_name(&sev.link).map_err(|e| KbError::Validation(e.to_string()))?;
            if sev.grid_points < 2 {
                return fail("severity grid needs at least two points".into());
            }
        }
        Ok(())
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn reports(&self) -> &[ReportParams] {
        &self.reports
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn disorders(&self) -> &[String] {
        &self.disorders
    }

    pub fn config(&self) -> &KbConfig {
        &self.config
    }

    /// The open probe sessions use; the first one declared.
    pub fn primary_probe(&self) -> Option<&Probe> {
        self.probes.first()
    }

    pub fn reports_for(&self, question: &str) -> Vec<ReportParams> {
        self.reports
            .iter()
            .filter(|r| r.question == question)
            .cloned()
            .collect()
    }

    /// Symptom-kind children of a disorder, in declaration order.
    pub fn symptoms_of(&self, disorder: &str) -> Vec<&str> {
        let children = self.network.children_of(disorder).unwrap_or_default();
        self.network
            .variables()
            .iter()
            .filter(|v| v.kind == VariableKind::Symptom && children.contains(&v.id.as_str()))
            .map(|v| v.id.as_str())
            .collect()
    }

    /// Symptoms whose only parent is `disorder`.
    pub fn exclusive_symptoms_of(&self, disorder: &str) -> Vec<&str> {
        self.symptoms_of(disorder)
            .into_iter()
            .filter(|s| self.network.parents_of(s).is_some_and(|p| p == [disorder]))
            .collect()
    }

    /// Copy with every report parameter set to the same reportability and bias.
    pub fn with_uniform_reporting(&self, reportability: f64, bias: f64) -> Result<Self, KbError> {
        let reports = self
            .reports
            .iter()
            .map(|r| ReportParams {
                reportability,
                bias,
                ..r.clone()
            })
            .collect();
        KnowledgeBase::new(
            self.network.clone(),
            reports,
            self.probes.clone(),
            self.disorders.clone(),
            self.config.clone(),
        )
    }

    /// Severity mode needs a major/minor class on every report parameter of the primary probe.
    pub fn supports_severity(&self) -> bool {
        match self.primary_probe() {
            None => false,
            Some(probe) => {
                let reports = self.reports_for(&probe.id);
                !reports.is_empty()
                    && reports
                        .iter()
                        .all(|r| matches!(r.severity, SeverityClass::Major | SeverityClass::Minor))
            }
        }
    }

    fn to_file(&self) -> KbFile {
        let (variables, tables) = self.network.clone().into_parts();
        KbFile {
            variables,
            tables,
            reports: self.reports.clone(),
            probes: self.probes.clone(),
            disorders: self.disorders.clone(),
            config: self.config.clone(),
        }
    }
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, KbError> {
    let file: KbFile = serde_json::from_str(text).map_err(|e| KbError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let network = build_network(file.variables, file.tables).map_err(|e| KbError::Validation(e.to_string()))?;
    KnowledgeBase::new(network, file.reports, file.probes, file.disorders, file.config)
}

pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, KbError> {
    parse_kb(&std::fs::read_to_string(path)?)
}

pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<(), KbError> {
    std::fs::write(path, to_canonical_json(kb))?;
    Ok(())
}

/// Canonical text of a knowledge base.
pub fn to_canonical_json(kb: &KnowledgeBase) -> String {
    let value = serde_json::to_value(kb.to_file()).expect("knowledge base serializes");
    let mut out = String::new();
    write_canonical(&value, 0, &mut out);
    out.push('\n');
    out
}

/// Writes `value` with sorted keys and 17-significant-digit floats.
pub fn write_canonical(value: &Value, indent: usize, out: &mut String) {
    const PAD: &str = "  ";
    match value {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&value.to_string()),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => write!(out, "{u}").unwrap(),
            (None, Some(i), _) => write!(out, "{i}").unwrap(),
            (_, _, Some(f)) => out.push_str(&format_f64_17(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|v| !v.is_array() && !v.is_object());
            if flat {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_canonical(item, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&PAD.repeat(indent + 1));
                write_canonical(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&PAD.repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&PAD.repeat(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_canonical(&map[*key], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&PAD.repeat(indent));
            out.push('}');
        }
    }
}

/// Scientific notation with 17 significant digits, e.g. `2.0000000000000000e-2`.
pub fn format_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parameters of the synthetic nerve-compression-style knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_disorders: usize,
    pub symptoms_per_disorder: usize,
    /// Fraction of each non-dominant disorder's symptoms borrowed from other disorders.
    pub overlap_fraction: f64,
    pub reportability: f64,
    pub bias: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 42,
            n_disorders: 5,
            symptoms_per_disorder: 4,
            overlap_fraction: 0.25,
            reportability: 0.9,
            bias: 5.0,
        }
    }
}

pub const SYNTHETIC_PROBE: &str = "complaint";
pub const DOMINANT_PRIOR: f64 = 0.76;
pub const SYMPTOM_STRENGTH: f64 = 0.85;
pub const SYMPTOM_LEAK: f64 = 0.02;

/// Deterministic bipartite disorder → symptom knowledge base.
///
/// `D0` is the dominant disorder with prior 0.76; the others draw priors from
/// [0.05, 0.30]. Every disorder first gets its own symptoms, then borrows
/// `round(overlap · n)` existing symptoms from other disorders (`D0` borrows
/// none). Symptoms follow a noisy-OR with strength 0.85 and leak 0.02.
pub fn generate_synthetic_ctslike(config: &SyntheticConfig) -> Result<KnowledgeBase, KbError> {
    let invalid = |m: &str| Err(KbError::InvalidConfig(m.to_string()));
    if config.n_disorders < 2 {
        return invalid("need at least two disorders");
    }
    if config.symptoms_per_disorder == 0 {
        return invalid("need at least one symptom per disorder");
    }
    if !(0.0..1.0).contains(&config.overlap_fraction) {
        return invalid("overlap fraction must lie in [0, 1)");
    }
    if !(config.reportability > 0.0 && config.reportability < 1.0) || !(config.bias >= 1.0) {
        return invalid("reportability must lie in (0, 1) and bias must be at least 1");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let disorders: Vec<String> = (0..config.n_disorders).map(|i| format!("D{i}")).collect();
    let priors: Vec<f64> = (0..config.n_disorders)
        .map(|i| {
            if i == 0 {
                DOMINANT_PRIOR
            } else {
                (rng.gen_range(0.05..0.30f64) * 1000.0).round() / 1000.0
            }
        })
        .collect();

    // parents of each symptom, by disorder index
    let mut symptom_parents: Vec<Vec<usize>> = Vec::new();
    let shared = (config.overlap_fraction * config.symptoms_per_disorder as f64).round() as usize;
    for d in 0..config.n_disorders {
        let borrowed = if d == 0 {
            0
        } else {
            shared.min(config.symptoms_per_disorder - 1)
        };
        for _ in 0..config.symptoms_per_disorder - borrowed {
            symptom_parents.push(vec![d]);
        }
        for _ in 0..borrowed {
            let candidates: Vec<usize> = (0..symptom_parents.len())
                .filter(|&s| !symptom_parents[s].contains(&d))
                .collect();
            if candidates.is_empty() {
                break;
            }
            let pick = candidates[rng.gen_range(0..candidates.len())];
            symptom_parents[pick].push(d);
        }
    }

    let width = symptom_parents.len().to_string().len().max(2);
    let symptom_ids: Vec<String> = (0..symptom_parents.len()).map(|i| format!("S{i:0width$}")).collect();

    let mut variables: Vec<Variable> = disorders
        .iter()
        .map(|d| Variable::binary(d, VariableKind::Disorder))
        .collect();
    let mut tables: Vec<ConditionalTable> = disorders
        .iter()
        .zip(&priors)
        .map(|(d, p)| ConditionalTable::prior(d, vec![1.0 - p, *p]))
        .collect();
    for (id, parents) in symptom_ids.iter().zip(&symptom_parents) {
        variables.push(Variable::binary(id, VariableKind::Symptom));
        tables.push(noisy_or_table(
            id,
            parents.iter().map(|&d| disorders[d].clone()).collect(),
        ));
    }
    let network = build_network(variables, tables).map_err(|e| KbError::InvalidConfig(e.to_string()))?;

    let reports = symptom_ids
        .iter()
        .map(|s| ReportParams::new(s, SYNTHETIC_PROBE, config.reportability, config.bias))
        .collect();
    let probes = vec![Probe {
        id: SYNTHETIC_PROBE.to_string(),
        symptoms: symptom_ids.clone(),
    }];
    let kb_config = KbConfig {
        learning: Some(LearningConfig {
            grid: ParamGrid::default(),
            link: LinkPolicy::Identity,
        }),
        severity: None,
    };
    KnowledgeBase::new(network, reports, probes, disorders, kb_config)
}

fn noisy_or_table(child: &str, parents: Vec<String>) -> ConditionalTable {
    let n = parents.len();
    let mut entries = Vec::with_capacity(2 << n);
    for row in 0..(1usize << n) {
        let active = row.count_ones() as i32;
        let absent = (1.0 - SYMPTOM_LEAK) * (1.0 - SYMPTOM_STRENGTH).powi(active);
        entries.push(absent);
        entries.push(1.0 - absent);
    }
    ConditionalTable::new(child, parents, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NET_A: &str = include_str!("../fixtures/net-a.kb");
    const NET_S: &str = include_str!("../fixtures/net-s.kb");

    #[test]
    fn fixture_net_a_loads() {
        let kb = parse_kb(NET_A).unwrap();
        assert_eq!(kb.network().len(), 4);
        assert_eq!(kb.reports().len(), 2);
        assert_eq!(kb.disorders(), ["PI", "M"]);
        assert_eq!(kb.network().table("PI").unwrap().entries, vec![0.98, 0.02]);
    }

    #[test]
    fn fixture_net_s_matches_builtin() {
        let kb = parse_kb(NET_S).unwrap();
        let (net, params) = crate::severity::net_s();
        assert_eq!(kb.network(), &net);
        assert_eq!(kb.reports(), params.as_slice());
        assert!(kb.supports_severity());
    }

    #[test]
    fn bad_row_names_variable() {
        let text = NET_A.replace("[0.98, 0.02]", "[0.98, 0.22]");
        let err = parse_kb(&text).unwrap_err();
        assert!(matches!(&err, KbError::Validation(m) if m.contains("`PI`")), "{err}");
    }

    #[test]
    fn unknown_report_symptom() {
        let text = NET_A.replace("\"symptom\": \"H\"", "\"symptom\": \"Q\"");
        assert!(matches!(parse_kb(&text), Err(KbError::Validation(m)) if m.contains("`Q`")));
    }

    #[test]
    fn parse_error_carries_position() {
        match parse_kb("{\n  \"variables\": [,]\n}") {
            Err(KbError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_round_trip() {
        let kb = parse_kb(NET_A).unwrap();
        let text = to_canonical_json(&kb);
        let again = parse_kb(&text).unwrap();
        assert_eq!(again, kb);
        assert_eq!(to_canonical_json(&again), text);
        assert!(text.contains("2.0000000000000000e-2"));
    }

    #[test]
    fn save_to_unwritable_path() {
        let kb = parse_kb(NET_A).unwrap();
        assert!(matches!(save_kb(&kb, "/nonexistent-dir/x/net.kb"), Err(KbError::Io(_))));
    }

    #[test]
    fn synthetic_shape() {
        let kb = generate_synthetic_ctslike(&SyntheticConfig::default()).unwrap();
        assert_eq!(kb.disorders().len(), 5);
        assert_eq!(kb.network().table("D0").unwrap().entries, vec![1.0 - 0.76, 0.76]);
        let symptoms = kb.network().ids_of_kind(VariableKind::Symptom).len();
        assert_eq!(symptoms, 16);
        for d in kb.disorders() {
            assert_eq!(kb.symptoms_of(d).len(), 4, "{d}");
        }
        assert!(kb.exclusive_symptoms_of("D1").len() >= 3);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let cfg = SyntheticConfig::default();
        let a = to_canonical_json(&generate_synthetic_ctslike(&cfg).unwrap());
        let b = to_canonical_json(&generate_synthetic_ctslike(&cfg).unwrap());
        assert_eq!(a, b);
        let other = to_canonical_json(&generate_synthetic_ctslike(&SyntheticConfig { seed: 7, ..cfg }).unwrap());
        assert_ne!(a, other);
    }

    #[test]
    fn synthetic_rejects_single_disorder() {
        let cfg = SyntheticConfig {
            n_disorders: 1,
            ..SyntheticConfig::default()
        };
        assert!(matches!(
            generate_synthetic_ctslike(&cfg),
            Err(KbError::InvalidConfig(_))
        ));
    }

    #[test]
    fn noisy_or_rows() {
        let t = noisy_or_table("S", vec!["A".into(), "B".into()]);
        assert!((t.entries[0] - 0.98).abs() < 1e-15);
        assert!((t.entries[2] - 0.98 * 0.15).abs() < 1e-15);
        assert!((t.entries[6] - 0.98 * 0.15 * 0.15).abs() < 1e-15);
    }
}
