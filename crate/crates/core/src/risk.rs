//! Rule-based risk scoring.
//!
//! Predicates are built in; the knowledge base instantiates them as rules
//! with a code, a fixed severity, a rationale and optional parameters:
//!
//! ```json
//! {"code": "unlimited_approval", "predicate": "allowance_is_max",
//!  "severity": "High", "rationale": "…"}
//! ```
//!
//! Rationales may use `{counterparty}`, `{origin}`, `{method}`,
//! `{wallet_chain}` and `{domain_chain}`.

use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::eip712::{validate_typed_data, FieldTree, IssueCode, IssueLevel, ValidationReport};
use crate::error::KnowledgeBaseError;
use crate::kb::KnowledgeBase;
use crate::model::{
    ConditionKind, IntentLabel, MethodCategory, Reputation, RequestContext, RiskAssessment, RiskSignal,
    SemanticFrame, Severity, SigningRequest, U256,
};

/// A risk rule as written in the knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskRuleSpec {
    pub code: String,
    pub predicate: String,
    pub severity: Severity,
    pub rationale: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
}

#[derive(Debug, Clone)]
pub enum Predicate {
    AllowanceIsMax,
    /// Large but finite allowance: at least `2^bits`, below MAX.
    AllowanceAtLeast { bits: u32 },
    DeprecatedMethod,
    EmbeddedHex { min_bytes: usize },
    LurePhrasing { patterns: Vec<Regex> },
    UnknownCounterparty,
    ValidationIssue { codes: Vec<IssueCode>, any_error: bool },
    ApprovalForAll,
    IntentIs(IntentLabel),
    UnknownIntentWithValue,
    Replayed,
}

#[derive(Debug, Clone)]
pub struct RiskRule {
    pub spec: RiskRuleSpec,
    pub predicate: Predicate,
}

fn bad(code: &str, msg: impl std::fmt::Display) -> KnowledgeBaseError {
    KnowledgeBaseError::Invalid(format!("risk rule {code}: {msg}"))
}

impl TryFrom<RiskRuleSpec> for RiskRule {
    type Error = KnowledgeBaseError;

    fn try_from(spec: RiskRuleSpec) -> Result<Self, Self::Error> {
        let code = spec.code.as_str();
        if code.is_empty() || !code.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
            return Err(bad(code, "code must be snake_case"));
        }
        let p = &spec.params;
        let predicate = match spec.predicate.as_str() {
            "allowance_is_max" => Predicate::AllowanceIsMax,
            "allowance_at_least" => {
                let bits = p.get("bits").and_then(Value::as_u64).unwrap_or(128);
                if !(1..256).contains(&bits) {
                    return Err(bad(code, "bits must be in 1..256"));
                }
                Predicate::AllowanceAtLeast { bits: bits as u32 }
            }
            "deprecated_method" => Predicate::DeprecatedMethod,
            "embedded_hex" => Predicate::EmbeddedHex {
                min_bytes: p.get("min_bytes").and_then(Value::as_u64).unwrap_or(32) as usize,
            },
            "lure_phrasing" => {
                let patterns = p
                    .get("patterns")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad(code, "lure_phrasing needs a patterns array"))?
                    .iter()
                    .map(|v| {
                        let s = v.as_str().ok_or_else(|| bad(code, "patterns must be strings"))?;
                        RegexBuilder::new(s)
                            .case_insensitive(true)
                            .build()
                            .map_err(|e| bad(code, e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Predicate::LurePhrasing { patterns }
            }
            "unknown_counterparty" => Predicate::UnknownCounterparty,
            "validation_issue" => {
                let codes = match p.get("codes") {
                    Some(v) => serde_json::from_value(v.clone()).map_err(|e| bad(code, e))?,
                    None => Vec::new(),
                };
                let any_error = p.get("any_error").and_then(Value::as_bool).unwrap_or(false);
                if codes.is_empty() && !any_error {
                    return Err(bad(code, "validation_issue needs codes or any_error"));
                }
                Predicate::ValidationIssue { codes, any_error }
            }
            "approval_for_all" => Predicate::ApprovalForAll,
            "intent_is" => {
                let intent = p
                    .get("intent")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad(code, "intent_is needs an intent"))?;
                Predicate::IntentIs(intent.parse().map_err(|e: String| bad(code, e))?)
            }
            "unknown_intent_with_value" => Predicate::UnknownIntentWithValue,
            "replayed" => Predicate::Replayed,
            other => return Err(bad(code, format!("unknown predicate {other:?}"))),
        };
        Ok(RiskRule { spec, predicate })
    }
}

/// Everything a predicate may look at.
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub req: &'a SigningRequest,
    pub frame: &'a SemanticFrame,
    pub ctx: &'a RequestContext,
    pub report: &'a ValidationReport,
    pub fields: Option<&'a FieldTree>,
    /// The same payload was already decoded in this session.
    pub replayed: bool,
}

static HEX_RUN: OnceLock<Regex> = OnceLock::new();

fn hex_run() -> &'static Regex {
    HEX_RUN.get_or_init(|| Regex::new(r"(?:0x)?[0-9a-fA-F]{64,}").unwrap())
}

/// Returns the evidence paths when the predicate fires.
fn check(predicate: &Predicate, input: &EvalInput<'_>) -> Option<Vec<String>> {
    let frame = input.frame;
    let req = input.req;
    let resolvable = |paths: Vec<String>| -> Option<Vec<String>> {
        let kept: Vec<String> = paths.into_iter().filter(|p| req.resolve(p).is_some()).collect();
        Some(if kept.is_empty() { vec!["method".into()] } else { kept })
    };
    match predicate {
        Predicate::AllowanceIsMax => {
            let c = frame.condition(ConditionKind::AllowanceLimit)?;
            (c.value.as_integer()? == U256::MAX).then(|| vec![c.path.clone()])
        }
        Predicate::AllowanceAtLeast { bits } => {
            let c = frame.condition(ConditionKind::AllowanceLimit)?;
            let v = c.value.as_integer()?;
            (v >= U256::one() << *bits as usize && v < U256::MAX).then(|| vec![c.path.clone()])
        }
        Predicate::DeprecatedMethod => req.method().is_deprecated().then(|| vec!["method".into()]),
        Predicate::EmbeddedHex { min_bytes } => {
            if req.method() != MethodCategory::PersonalSign {
                return None;
            }
            match req.message_text() {
                Some(text) => hex_run().find_iter(text).find_map(|m| {
                    let digits = m.as_str().trim_start_matches("0x").len();
                    (digits / 2 >= *min_bytes).then(|| vec![format!("message[{}..{}]", m.start(), m.end())])
                }),
                // Opaque bytes signed as a "message".
                None => (req.message()?.len() >= *min_bytes).then(|| vec!["message".into()]),
            }
        }
        Predicate::LurePhrasing { patterns } => {
            let mut evidence = Vec::new();
            if let Some(text) = req.message_text() {
                for p in patterns {
                    if let Some(m) = p.find(text) {
                        evidence.push(format!("message[{}..{}]", m.start(), m.end()));
                    }
                }
            }
            if let Some(tree) = input.fields {
                for leaf in tree.leaves() {
                    if let Some(crate::model::FieldValue::Text(s)) = &leaf.value {
                        if patterns.iter().any(|p| p.is_match(s)) {
                            evidence.push(format!("typed.message.{}", leaf.path));
                        }
                    }
                }
            }
            (!evidence.is_empty()).then_some(evidence)
        }
        Predicate::UnknownCounterparty => {
            let cp = frame.counterparty.as_ref()?;
            let fires = frame.action.moves_assets()
                && cp.address != frame.actor
                && input.ctx.known_contracts().reputation(&cp.address) == Reputation::Unknown;
            fires.then(|| vec![cp.path.clone()])
        }
        Predicate::ValidationIssue { codes, any_error } => {
            let hits: Vec<String> = input
                .report
                .issues
                .iter()
                .filter(|i| codes.contains(&i.code) || (*any_error && i.level == IssueLevel::Error))
                .map(|i| i.path.clone())
                .collect();
            if hits.is_empty() {
                None
            } else {
                resolvable(hits)
            }
        }
        Predicate::ApprovalForAll => {
            if frame.action != IntentLabel::SetApprovalForAll {
                return None;
            }
            let word = req.resolve("tx.data.word.1")?;
            let approved = word.as_str()?.trim_start_matches("0x").trim_start_matches('0') == "1";
            approved.then(|| vec!["tx.data.word.1".into()])
        }
        Predicate::IntentIs(intent) => (frame.action == *intent).then(|| vec![frame.object.path.clone()]),
        Predicate::UnknownIntentWithValue => {
            let tx = req.tx()?;
            (frame.action == IntentLabel::Unknown && !tx.value.is_zero()).then(|| vec!["tx.value".into()])
        }
        Predicate::Replayed => input.replayed.then(|| vec!["method".into()]),
    }
}

fn render_rationale(template: &str, input: &EvalInput<'_>) -> String {
    let counterparty = input
        .frame
        .counterparty
        .as_ref()
        .map(|c| c.label.clone())
        .unwrap_or_else(|| input.frame.object.label.clone());
    let domain_chain = input
        .req
        .typed()
        .and_then(|t| t.domain.chain_id)
        .map(|c| c.to_string())
        .unwrap_or_else(|| "-".into());
    template
        .replace("{counterparty}", &counterparty)
        .replace("{origin}", input.ctx.origin())
        .replace("{method}", input.req.method().rpc_name())
        .replace("{wallet_chain}", &input.ctx.wallet_chain_id().to_string())
        .replace("{domain_chain}", &domain_chain)
}

impl RiskRule {
    pub fn evaluate(&self, input: &EvalInput<'_>) -> Option<RiskSignal> {
        let evidence = check(&self.predicate, input)?;
        Some(RiskSignal {
            code: self.spec.code.clone(),
            severity: self.spec.severity,
            rationale: render_rationale(&self.spec.rationale, input),
            evidence,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RiskEngine {
    rules: Vec<RiskRule>,
}

impl RiskEngine {
    pub fn new(rules: Vec<RiskRule>) -> Self {
        RiskEngine { rules }
    }

    pub fn from_kb(kb: &KnowledgeBase) -> Self {
        RiskEngine::new(kb.risk_rules().to_vec())
    }

    /// The rule set shipped with the bundled knowledge base.
    pub fn builtin() -> &'static RiskEngine {
        static ENGINE: OnceLock<RiskEngine> = OnceLock::new();
        ENGINE.get_or_init(|| RiskEngine::from_kb(crate::data::knowledge_base()))
    }

    pub fn rules(&self) -> &[RiskRule] {
        &self.rules
    }

    pub fn rule(&self, code: &str) -> Option<&RiskRule> {
        self.rules.iter().find(|r| r.spec.code == code)
    }

    /// Each rule fires at most once; the tier is the highest severity fired.
    pub fn evaluate(&self, input: &EvalInput<'_>) -> RiskAssessment {
        RiskAssessment::from_signals(self.rules.iter().filter_map(|r| r.evaluate(input)).collect())
    }
}

/// Scores a request with the bundled rule set.
pub fn evaluate_risk(
    req: &SigningRequest,
    frame: &SemanticFrame,
    ctx: &RequestContext,
    report: &ValidationReport,
) -> RiskAssessment {
    let fields = req.typed().and_then(|t| crate::eip712::expand_typed_data(t).ok());
    RiskEngine::builtin().evaluate(&EvalInput {
        req,
        frame,
        ctx,
        report,
        fields: fields.as_ref(),
        replayed: false,
    })
}

/// Unlimited or very large allowances in the frame, if any.
pub fn detect_unlimited_approval(frame: &SemanticFrame) -> Option<RiskSignal> {
    frame.condition(ConditionKind::AllowanceLimit)?;
    let engine = RiskEngine::builtin();
    let report = ValidationReport::clean();
    // Allowance predicates only read the frame, so any request will do.
    let req = placeholder_request();
    let input = EvalInput {
        req: &req,
        frame,
        ctx: req.context(),
        report: &report,
        fields: None,
        replayed: false,
    };
    engine
        .rules
        .iter()
        .filter(|r| matches!(r.predicate, Predicate::AllowanceIsMax | Predicate::AllowanceAtLeast { .. }))
        .filter_map(|r| r.evaluate(&input))
        .max_by_key(|s| s.severity)
}

fn placeholder_request() -> SigningRequest {
    let ctx = RequestContext::new("placeholder", 1, crate::data::knowledge_base().contracts())
        .expect("static context is valid");
    crate::model::make_request(
        MethodCategory::PersonalSign,
        crate::model::Payload::Message(Vec::new()),
        ctx,
    )
    .expect("personal_sign carries a message")
}

/// Phishing heuristics: deprecated methods, hex blobs, lure text, unknown
/// counterparties and chain mismatches.
pub fn detect_phishing_signals(req: &SigningRequest, frame: &SemanticFrame, ctx: &RequestContext) -> Vec<RiskSignal> {
    const PHISHING: &[&str] = &[
        "deprecated_method",
        "embedded_hex",
        "lure_phrasing",
        "unknown_counterparty",
        "domain_separation",
        "approval_for_all",
    ];
    let typed = req.typed();
    let report = typed
        .map(|t| validate_typed_data(t, ctx))
        .unwrap_or_else(ValidationReport::clean);
    let fields = typed.and_then(|t| crate::eip712::expand_typed_data(t).ok());
    let input = EvalInput {
        req,
        frame,
        ctx,
        report: &report,
        fields: fields.as_ref(),
        replayed: false,
    };
    RiskEngine::builtin()
        .rules
        .iter()
        .filter(|r| PHISHING.contains(&r.spec.code.as_str()))
        .filter_map(|r| r.evaluate(&input))
        .collect()
}
