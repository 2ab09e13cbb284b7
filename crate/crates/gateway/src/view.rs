//! Task views. Baseline sessions get the scenario and raw fields only; the
//! decoder output is attached for semantic sessions.

use serde::Serialize;
use serde_json::Value;
use sigsem_core::harness::{StudyCondition, Task};
use sigsem_core::model::Payload;
use sigsem_core::pipeline::DecodeResult;
use sigsem_core::{hex, MethodCategory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawField {
    pub label: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemanticBlock {
    pub validation: sigsem_core::eip712::ValidationReport,
    pub frame: sigsem_core::SemanticFrame,
    pub assessment: sigsem_core::RiskAssessment,
    pub explanation: sigsem_core::model::Explanation,
    pub decoder_version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskView {
    pub session_id: String,
    pub condition: StudyCondition,
    pub n: usize,
    pub total: usize,
    pub task_id: String,
    pub title: String,
    pub scenario_text: String,
    pub method: MethodCategory,
    pub rpc_method: String,
    pub origin: String,
    pub raw_fields: Vec<RawField>,
    pub request: Value,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub semantic: Option<SemanticBlock>,
}

impl From<DecodeResult> for SemanticBlock {
    fn from(r: DecodeResult) -> Self {
        SemanticBlock {
            validation: r.validation,
            frame: r.frame,
            assessment: r.assessment,
            explanation: r.explanation,
            decoder_version: r.decoder_version,
        }
    }
}

fn field(label: impl Into<String>, value: impl Into<String>) -> RawField {
    RawField {
        label: label.into(),
        value: value.into(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<RawField>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&format!("{prefix}.{k}"), child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        Value::String(s) => out.push(field(prefix, s.clone())),
        other => out.push(field(prefix, other.to_string())),
    }
}

/// What a stock wallet shows: transaction fields, message text (or hex), or
/// typed-data key–value rows.
pub fn raw_fields(task: &Task) -> Vec<RawField> {
    let req = &task.request;
    let mut out = Vec::new();
    if let Some(signer) = req.signer() {
        out.push(field("signer", signer.checksum()));
    }
    match req.payload() {
        Payload::Transaction(tx) => {
            out.push(field("from", tx.from.checksum()));
            if let Some(to) = tx.to {
                out.push(field("to", to.checksum()));
            }
            out.push(field("value", tx.value.to_string()));
            out.push(field("data", hex::encode(&tx.data)));
            out.push(field("chainId", tx.chain_id.to_string()));
        }
        Payload::Message(bytes) => match req.message_text() {
            Some(text) if req.method() == MethodCategory::PersonalSign => out.push(field("message", text)),
            _ => out.push(field("message", hex::encode(bytes))),
        },
        Payload::TypedData(typed) => {
            out.push(field("primaryType", typed.primary_type.clone()));
            let domain = serde_json::to_value(&typed.domain).unwrap_or(Value::Null);
            flatten("domain", &domain, &mut out);
            flatten("message", &typed.message, &mut out);
        }
    }
    out
}
