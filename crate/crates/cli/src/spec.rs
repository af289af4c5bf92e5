//! Parsers for the small command-line mini-languages.

use std::collections::BTreeMap;

use openprobe::bn::Evidence;

/// Parses `var=state` (hard) and `var~w1:w2:...` (virtual) terms separated by commas.
pub fn parse_evidence(spec: &str) -> Result<Evidence, String> {
    let mut ev = Evidence::new();
    for term in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((var, weights)) = term.split_once('~') {
            let weights = weights
                .split(':')
                .map(|w| {
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("evidence `{term}`: `{w}` is not a number"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ev.set_virtual(var.trim(), weights);
        } else if let Some((var, state)) = term.split_once('=') {
            if var.trim().is_empty() || state.trim().is_empty() {
                return Err(format!("evidence `{term}`: expected var=state"));
            }
            ev.set_hard(var.trim(), state.trim());
        } else {
            return Err(format!("evidence `{term}`: expected var=state or var~w1:w2"));
        }
    }
    Ok(ev)
}

/// Parses `S1,S2=absent,...`; a bare symptom means `present`.
pub fn parse_reported(spec: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for term in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (symptom, state) = term.split_once('=').unwrap_or((term, "present"));
        if symptom.trim().is_empty() || state.trim().is_empty() {
            return Err(format!("reported symptom `{term}`: expected symptom or symptom=state"));
        }
        if out
            .insert(symptom.trim().to_string(), state.trim().to_string())
            .is_some()
        {
            return Err(format!("symptom `{}` listed twice", symptom.trim()));
        }
    }
    Ok(out)
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent");
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
