//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function returns a JSON string. The plain-Rust versions
//! (`*_json`) carry the logic so they can be tested natively.

use std::collections::BTreeMap;

use openprobe::bn::{Variable, VariableKind};
use openprobe::experiments;
use openprobe::kb::{generate_synthetic_ctslike, SyntheticConfig};
use openprobe::report::{lambda_no_report, report_cpt, ReportParams};
use openprobe::severity::SeverityLink;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct CptView {
    reportability: f64,
    bias: f64,
    /// P(reported | present), P(not reported | present)
    present: [f64; 2],
    /// P(reported | absent), P(not reported | absent)
    absent: [f64; 2],
    lambda_no_report: f64,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Report-node table and no-report likelihood ratio for one (P, B) pair.
/// A bias of zero or below stands for an infinite bias.
pub fn report_cpt_json(reportability: f64, bias: f64) -> Result<String, String> {
    let bias = if bias <= 0.0 { f64::INFINITY } else { bias };
    let params = ReportParams::new("Symptom", "complaint", reportability, bias);
    let cpt = report_cpt(&params, &Variable::binary("Symptom", VariableKind::Symptom)).map_err(|e| e.to_string())?;
    let lambda = lambda_no_report(&params).map_err(|e| e.to_string())?;
    to_json(&CptView {
        reportability,
        bias,
        absent: [cpt.entries[0], cpt.entries[1]],
        present: [cpt.entries[2], cpt.entries[3]],
        lambda_no_report: lambda,
    })
}

/// Bias sweep on the synthetic knowledge base with three symptoms of
/// `disorder` reported present.
pub fn bias_sweep_json(seed: u64, disorder: &str, reportability: f64, biases: &[f64]) -> Result<String, String> {
    let kb = generate_synthetic_ctslike(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })
    .map_err(|e| e.to_string())?;
    if !kb.disorders().iter().any(|d| d == disorder) {
        return Err(format!("unknown disorder `{disorder}`"));
    }
    let reported: BTreeMap<String, String> = kb
        .symptoms_of(disorder)
        .into_iter()
        .take(3)
        .map(|s| (s.to_string(), "present".to_string()))
        .collect();
    let table = experiments::bias_sweep(&kb, &reported, reportability, biases).map_err(|e| e.to_string())?;
    #[derive(Serialize)]
    struct View<'a> {
        reported: Vec<&'a String>,
        #[serde(flatten)]
        table: &'a experiments::SweepTable,
    }
    to_json(&View {
        reported: reported.keys().collect(),
        table: &table,
    })
}

pub fn severity_demo_json(grid_points: usize, link: &str) -> Result<String, String> {
    let link = SeverityLink::by_name(link).map_err(|e| e.to_string())?;
    let demo = experiments::severity_demo(grid_points, &link).map_err(|e| e.to_string())?;
    to_json(&demo)
}

#[wasm_bindgen(js_name = reportCpt)]
pub fn report_cpt_js(reportability: f64, bias: f64) -> Result<String, JsValue> {
    report_cpt_json(reportability, bias).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = biasSweep)]
pub fn bias_sweep_js(seed: u32, disorder: &str, reportability: f64, biases: Vec<f64>) -> Result<String, JsValue> {
    bias_sweep_json(u64::from(seed), disorder, reportability, &biases).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = severityDemo)]
pub fn severity_demo_js(grid_points: usize, link: &str) -> Result<String, JsValue> {
    severity_demo_json(grid_points, link).map_err(|e| JsValue::from_str(&e))
}
