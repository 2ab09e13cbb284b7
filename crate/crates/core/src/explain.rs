//! Plain-language summaries and detail rows.
//!
//! Templates are keyed by intent and use `{slot}` placeholders; a segment in
//! square brackets is dropped when any slot inside it is empty. A slot outside
//! brackets that cannot be filled is an error.

use std::collections::BTreeMap;

use chrono::DateTime;
use serde::Deserialize;

use crate::error::ExplainError;
use crate::model::{
    ConditionKind, DetailRow, Explanation, FieldValue, IntentLabel, ObjectKind, RiskAssessment, Severity,
    SemanticFrame, SigningRequest, TokenMeta, U256,
};

pub const SLOTS: [&str; 9] = [
    "counterparty",
    "amount",
    "token",
    "deadline",
    "object",
    "origin",
    "method",
    "nonce",
    "chain",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
    Optional(Vec<Segment>),
}

fn parse_template(src: &str) -> Result<Vec<Segment>, String> {
    let mut stack: Vec<Vec<Segment>> = vec![Vec::new()];
    let mut text = String::new();
    let mut chars = src.chars();
    let flush = |text: &mut String, stack: &mut Vec<Vec<Segment>>| {
        if !text.is_empty() {
            stack.last_mut().unwrap().push(Segment::Text(std::mem::take(text)));
        }
    };
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                flush(&mut text, &mut stack);
                let name: String = chars.by_ref().take_while(|&c| c != '}').collect();
                if !SLOTS.contains(&name.as_str()) {
                    return Err(format!("unknown slot {{{name}}} in {src:?}"));
                }
                stack.last_mut().unwrap().push(Segment::Slot(name));
            }
            '[' => {
                flush(&mut text, &mut stack);
                stack.push(Vec::new());
            }
            ']' => {
                flush(&mut text, &mut stack);
                if stack.len() < 2 {
                    return Err(format!("unbalanced ] in {src:?}"));
                }
                let inner = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Segment::Optional(inner));
            }
            other => text.push(other),
        }
    }
    flush(&mut text, &mut stack);
    if stack.len() != 1 {
        return Err(format!("unbalanced [ in {src:?}"));
    }
    Ok(stack.pop().unwrap())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    version: String,
    templates: BTreeMap<String, String>,
}

/// Slots the fallback may use: they are filled for every frame.
const FALLBACK_SLOTS: [&str; 4] = ["method", "origin", "object", "token"];

/// Summary templates keyed by intent, plus the mandatory `fallback`.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub version: String,
    summaries: BTreeMap<IntentLabel, Vec<Segment>>,
    fallback: Vec<Segment>,
}

fn slot_names(segments: &[Segment], out: &mut Vec<String>) {
    for seg in segments {
        match seg {
            Segment::Slot(s) => out.push(s.clone()),
            Segment::Optional(inner) => slot_names(inner, out),
            Segment::Text(_) => {}
        }
    }
}

impl TemplateSet {
    pub fn from_json(text: &str) -> Result<Self, ExplainError> {
        let file: TemplateFile = serde_json::from_str(text).map_err(|e| ExplainError::Templates(e.to_string()))?;
        let mut summaries = BTreeMap::new();
        let mut fallback = None;
        for (key, src) in &file.templates {
            let segments = parse_template(src).map_err(ExplainError::Templates)?;
            if key == "fallback" {
                fallback = Some(segments);
            } else {
                let intent: IntentLabel = key.parse().map_err(ExplainError::Templates)?;
                summaries.insert(intent, segments);
            }
        }
        let fallback = fallback.ok_or_else(|| ExplainError::Templates("missing fallback template".into()))?;
        let mut used = Vec::new();
        slot_names(&fallback, &mut used);
        if let Some(bad) = used.iter().find(|s| !FALLBACK_SLOTS.contains(&s.as_str())) {
            return Err(ExplainError::Templates(format!("fallback template uses optional slot {{{bad}}}")));
        }
        Ok(TemplateSet {
            version: file.version,
            summaries,
            fallback,
        })
    }

    fn for_intent(&self, intent: IntentLabel) -> &[Segment] {
        self.summaries.get(&intent).unwrap_or(&self.fallback)
    }
}

fn fill(segments: &[Segment], slots: &BTreeMap<&str, String>, intent: IntentLabel) -> Result<String, ExplainError> {
    let mut out = String::new();
    for seg in segments {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot(name) => match slots.get(name.as_str()) {
                Some(v) => out.push_str(v),
                None => {
                    return Err(ExplainError::UnfillableSlot {
                        intent: intent.to_string(),
                        slot: name.clone(),
                    })
                }
            },
            Segment::Optional(inner) => {
                if let Ok(s) = fill(inner, slots, intent) {
                    out.push_str(&s);
                }
            }
        }
    }
    Ok(out)
}

/// Native currency of a chain.
pub fn native_token(chain_id: u64) -> TokenMeta {
    let symbol = match chain_id {
        56 => "BNB",
        137 => "POL",
        _ => "ETH",
    };
    TokenMeta {
        symbol: symbol.into(),
        decimals: 18,
    }
}

pub fn chain_name(chain_id: u64) -> String {
    let name = match chain_id {
        1 => "Ethereum",
        10 => "Optimism",
        56 => "BNB Smart Chain",
        137 => "Polygon",
        8453 => "Base",
        42161 => "Arbitrum One",
        11155111 => "Sepolia",
        _ => return format!("chain {chain_id}"),
    };
    format!("{name} (chain {chain_id})")
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Exact decimal rendering: `1,234.5 USDC`, `unlimited` for the max-uint
/// sentinel, or `N (base units)` without token metadata.
pub fn render_amount(value: U256, token: Option<&TokenMeta>) -> String {
    if value == U256::MAX {
        return "unlimited".into();
    }
    let Some(token) = token else {
        return format!("{} (base units)", group_thousands(&value.to_string()));
    };
    let digits = value.to_string();
    let decimals = token.decimals as usize;
    let (int, frac) = if digits.len() > decimals {
        digits.split_at(digits.len() - decimals)
    } else {
        ("0", digits.as_str())
    };
    let frac = format!("{frac:0>decimals$}");
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{} {}", group_thousands(int), token.symbol)
    } else {
        format!("{}.{} {}", group_thousands(int), frac, token.symbol)
    }
}

fn plural(n: i64, unit: &str) -> String {
    if n == 1 {
        format!("{n} {unit}")
    } else {
        format!("{n} {unit}s")
    }
}

/// `2024-05-01T12:00:00Z (in 3 hours)`; timestamps beyond the calendar read
/// as `no expiry`.
pub fn render_deadline(timestamp: U256, now: i64) -> String {
    let Some(dt) = (timestamp <= U256::from(i64::MAX as u64))
        .then(|| timestamp.as_u64() as i64)
        .and_then(|ts| DateTime::from_timestamp(ts, 0))
        .filter(|dt| dt.format("%Y").to_string().len() == 4)
    else {
        return "no expiry".into();
    };
    let diff = dt.timestamp() - now;
    let relative = if diff.abs() < 60 {
        "now".to_string()
    } else if diff < 0 {
        "expired".to_string()
    } else if diff < 3600 {
        format!("in {}", plural(diff / 60, "minute"))
    } else if diff < 48 * 3600 {
        format!("in {}", plural(diff / 3600, "hour"))
    } else {
        format!("in {}", plural(diff / 86400, "day"))
    };
    format!("{} ({relative})", dt.format("%Y-%m-%dT%H:%M:%SZ"))
}

fn amount_token(req: &SigningRequest, frame: &SemanticFrame, path: &str) -> Option<TokenMeta> {
    if path == "tx.value" {
        return req.tx().map(|tx| native_token(tx.chain_id));
    }
    let registry = req.context().known_contracts();
    frame.object.address.and_then(|a| registry.token(&a).cloned())
}

fn condition_text(req: &SigningRequest, frame: &SemanticFrame, kind: ConditionKind, value: &FieldValue, path: &str, now: i64) -> String {
    match (kind, value) {
        (ConditionKind::Amount | ConditionKind::AllowanceLimit, FieldValue::Integer(v)) => {
            render_amount(*v, amount_token(req, frame, path).as_ref())
        }
        (ConditionKind::Deadline, FieldValue::Integer(v)) => render_deadline(*v, now),
        (ConditionKind::Chain, FieldValue::Integer(v)) if *v <= U256::from(u64::MAX) => chain_name(v.as_u64()),
        (_, other) => other.to_string(),
    }
}

fn counterparty_text(frame: &SemanticFrame) -> Option<String> {
    let cp = frame.counterparty.as_ref()?;
    Some(if cp.address == frame.actor {
        format!("your own account ({})", cp.label)
    } else {
        cp.label.clone()
    })
}

fn slots(req: &SigningRequest, frame: &SemanticFrame, now: i64) -> BTreeMap<&'static str, String> {
    let mut s = BTreeMap::new();
    if let Some(cp) = counterparty_text(frame) {
        s.insert("counterparty", cp);
    }
    if let Some(c) = frame.amount_condition() {
        let text = match c.value.as_integer() {
            // "up to unlimited" reads badly in a sentence.
            Some(v) if v == U256::MAX => match amount_token(req, frame, &c.path) {
                Some(t) => format!("an unlimited amount of {}", t.symbol),
                None => "an unlimited amount".into(),
            },
            _ => condition_text(req, frame, c.kind, &c.value, &c.path, now),
        };
        s.insert("amount", text);
    }
    if let Some(c) = frame.condition(ConditionKind::Deadline) {
        s.insert("deadline", condition_text(req, frame, c.kind, &c.value, &c.path, now));
    }
    if let Some(c) = frame.condition(ConditionKind::Nonce) {
        s.insert("nonce", c.value.to_string());
    }
    if let Some(c) = frame.condition(ConditionKind::Chain) {
        s.insert("chain", condition_text(req, frame, c.kind, &c.value, &c.path, now));
    }
    let token = frame
        .object
        .address
        .and_then(|a| req.context().known_contracts().token(&a).map(|t| t.symbol.clone()))
        .unwrap_or_else(|| frame.object.label.clone());
    s.insert("token", token);
    s.insert("object", frame.object.label.clone());
    s.insert("origin", req.context().origin().to_string());
    s.insert("method", req.method().rpc_name().to_string());
    s
}

/// Fills the intent's template, falling back to the method-level template
/// when the intent has none or one of its slots is empty.
pub fn render_summary(req: &SigningRequest, frame: &SemanticFrame, templates: &TemplateSet, now: i64) -> Result<String, ExplainError> {
    let slots = slots(req, frame, now);
    fill(templates.for_intent(frame.action), &slots, frame.action)
        .or_else(|_| fill(&templates.fallback, &slots, IntentLabel::Unknown))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn object_label(kind: ObjectKind) -> &'static str {
    match kind {
        ObjectKind::Token => "Token",
        ObjectKind::Nft => "Collection",
        ObjectKind::Proposal => "Proposal",
        ObjectKind::Session => "Site",
        ObjectKind::Contract => "Contract",
        ObjectKind::NativeCurrency => "Asset",
        ObjectKind::Message => "Message",
    }
}

/// Summary plus one detail row per frame field. A row is highlighted when its
/// payload path is evidence for a High signal.
pub fn explain(
    req: &SigningRequest,
    frame: &SemanticFrame,
    assessment: &RiskAssessment,
    templates: &TemplateSet,
    now: i64,
) -> Result<Explanation, ExplainError> {
    let summary = render_summary(req, frame, templates, now)?;
    let hot: Vec<&str> = assessment
        .signals()
        .iter()
        .filter(|s| s.severity == Severity::High)
        .flat_map(|s| s.evidence.iter().map(String::as_str))
        .collect();
    let row = |label: String, value: String, path: &str| DetailRow {
        highlight: hot.contains(&path),
        label,
        value,
        path: path.to_string(),
    };

    let mut rows = vec![row("From".into(), frame.actor.checksum(), &frame.provenance["actor"])];
    if let Some(cp) = &frame.counterparty {
        let value = match req.context().known_contracts().label(&cp.address) {
            Some(l) => format!("{l} ({})", cp.address.checksum()),
            None => cp.address.checksum(),
        };
        rows.push(row(capitalize(cp.role.name()), value, &cp.path));
    }
    let object_value = match frame.object.address {
        Some(a) if frame.object.label != a.short() => format!("{} ({})", frame.object.label, a.checksum()),
        Some(a) => a.checksum(),
        None => frame.object.label.clone(),
    };
    rows.push(row(object_label(frame.object.kind).into(), object_value, &frame.object.path));
    for c in &frame.conditions {
        rows.push(row(
            c.kind.label().into(),
            condition_text(req, frame, c.kind, &c.value, &c.path, now),
            &c.path,
        ));
    }

    let tooltips = assessment
        .signals()
        .iter()
        .map(|s| (s.code.clone(), s.rationale.clone()))
        .collect();
    Ok(Explanation {
        summary,
        detail_rows: rows,
        tooltips,
    })
}
