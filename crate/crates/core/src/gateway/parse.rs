//! Strict parsing of structured agent output: find the first balanced JSON
//! object in free-form model text, then validate it against the message
//! schema and the hyperparameter domains. Out-of-domain values are hard
//! errors (never clipped) so the orchestrator can re-prompt.

use serde_json::Value;

use crate::agents::{Candidate, Decision, NextAction, Recommendation, TerminationReason, Verdict};
use crate::space::{default_space, Configuration, ModelFamily, ParamValue};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no JSON object found in agent output")]
    NoJsonObject,
    #[error("schema violation in field `{field}`: {detail}")]
    SchemaViolation { field: String, detail: String },
    #[error("out-of-domain value: {0}")]
    OutOfDomain(String),
}

fn violation(field: &str, detail: impl Into<String>) -> ParseError {
    ParseError::SchemaViolation {
        field: field.to_string(),
        detail: detail.into(),
    }
}

/// Extract the first balanced top-level JSON object that parses, scanning
/// left to right. Code fences and surrounding prose are ignored because the
/// scan only starts at `{` characters.
pub fn extract_json_object(text: &str) -> Option<Value> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        if let Some(end) = balanced_end(bytes, open) {
            if let Ok(value) = serde_json::from_str::<Value>(&text[open..=end]) {
                if value.is_object() {
                    return Some(value);
                }
            }
        }
        start = open + 1;
    }
    None
}

/// Index of the `}` closing the object that opens at `open`, respecting
/// strings and escapes. None when braces never balance.
fn balanced_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn json_to_param(value: &Value) -> Option<ParamValue> {
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(ParamValue::Int(i))
            } else {
                n.as_f64().map(ParamValue::Real)
            }
        }
        Value::String(s) => Some(ParamValue::Text(s.clone())),
        _ => None,
    }
}

/// Convert a JSON value for a known domain, coercing lossless numeric forms:
/// `1` is a fine continuous value and `300.0` a fine integer. Range checks
/// stay with the validator.
fn coerce_for_domain(value: &Value, domain: &crate::space::ParamDomain) -> Option<ParamValue> {
    use crate::space::ParamDomain;
    match domain {
        ParamDomain::Continuous { .. } => value.as_f64().map(ParamValue::Real),
        ParamDomain::Integer { .. } => match value {
            Value::Number(n) => n.as_i64().or_else(|| {
                n.as_f64()
                    .filter(|f| f.fract() == 0.0 && f.abs() < i64::MAX as f64)
                    .map(|f| f as i64)
            }),
            _ => None,
        }
        .map(ParamValue::Int),
        ParamDomain::Categorical { .. } => value.as_str().map(|s| ParamValue::Text(s.into())),
    }
}

/// Parse and validate a recommender reply:
/// `{"model": ..., "hyperparameters": {...}, "reasoning": ..., "explore": bool}`.
/// Unknown top-level keys are ignored; `explore` defaults to true.
pub fn parse_recommendation(text: &str) -> Result<Recommendation, ParseError> {
    let value = extract_json_object(text).ok_or(ParseError::NoJsonObject)?;
    let obj = value.as_object().expect("extract returns objects only");

    let family_name = obj
        .get("model")
        .and_then(Value::as_str)
        .ok_or_else(|| violation("model", "expected a string"))?;
    let family: ModelFamily = family_name
        .parse()
        .map_err(|_| violation("model", format!("unknown model family {family_name:?}")))?;

    let hyper = obj
        .get("hyperparameters")
        .and_then(Value::as_object)
        .ok_or_else(|| violation("hyperparameters", "expected an object"))?;

    let space = default_space(family);
    // Canonical order: space parameters first, then anything unexpected (the
    // validator reports those as unknown).
    let mut values: Vec<(String, ParamValue)> = Vec::with_capacity(hyper.len());
    for (name, domain) in space.params() {
        if let Some(raw) = hyper.get(name) {
            let value = coerce_for_domain(raw, domain)
                .ok_or_else(|| violation(name, "expected a value matching the domain kind"))?;
            values.push((name.clone(), value));
        }
    }
    for (name, raw) in hyper {
        if space.get(name).is_none() {
            let value = json_to_param(raw)
                .ok_or_else(|| violation(name, "expected a number or string"))?;
            values.push((name.clone(), value));
        }
    }
    let config = Configuration::new(family, values);
    let violations = space.validate(&config);
    if !violations.is_empty() {
        return Err(ParseError::OutOfDomain(violations[0].to_string()));
    }

    let reasoning = obj
        .get("reasoning")
        .and_then(Value::as_str)
        .ok_or_else(|| violation("reasoning", "expected a string"))?;
    if reasoning.trim().is_empty() {
        return Err(violation("reasoning", "must be non-empty"));
    }

    let explore = match obj.get("explore") {
        None => true,
        Some(Value::Bool(b)) => *b,
        Some(other) => return Err(violation("explore", format!("expected a bool, got {other}"))),
    };

    Ok(Recommendation {
        candidates: vec![Candidate { config, explore }],
        reasoning: reasoning.to_string(),
    })
}

/// Parse and validate a decision reply:
/// `{"verdict": "accept"|"reject", "next_action": "refine"|"explore"|"terminate",
///   "reason": <termination reason, required iff terminate>, "guidance": str}`.
pub fn parse_decision(text: &str) -> Result<Decision, ParseError> {
    let value = extract_json_object(text).ok_or(ParseError::NoJsonObject)?;
    let obj = value.as_object().expect("extract returns objects only");

    let verdict = match obj.get("verdict").and_then(Value::as_str) {
        Some("accept") => Verdict::Accept,
        Some("reject") => Verdict::Reject,
        Some(other) => return Err(violation("verdict", format!("unknown verdict {other:?}"))),
        None => return Err(violation("verdict", "expected a string")),
    };

    let next_action = match obj.get("next_action").and_then(Value::as_str) {
        Some("refine") => NextAction::Refine,
        Some("explore") => NextAction::Explore,
        Some("terminate") => {
            let reason_name = obj
                .get("reason")
                .and_then(Value::as_str)
                .ok_or_else(|| violation("reason", "required when next_action is terminate"))?;
            let reason: TerminationReason = reason_name
                .parse()
                .map_err(|e: String| violation("reason", e))?;
            NextAction::Terminate(reason)
        }
        Some(other) => {
            return Err(violation(
                "next_action",
                format!("unknown action {other:?}"),
            ))
        }
        None => return Err(violation("next_action", "expected a string")),
    };

    let guidance = match obj.get("guidance") {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => return Err(violation("guidance", format!("expected a string, got {other}"))),
    };

    Ok(Decision {
        verdict,
        next_action,
        guidance,
    })
}
