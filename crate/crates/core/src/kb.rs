//! Knowledge base of contract patterns.
//!
//! Loaded once from a versioned JSON document and immutable afterwards.
//! Sections:
//!
//! - `selector_rules`: calldata selector → intent + role template
//! - `typed_rules`: anchored regex over the typed-data primary type → intent + role template
//! - `text_rules`: anchored regex over UTF-8 message text → intent; named
//!   capture groups (`session_nonce`, …) bind roles
//! - `contracts`: static address book with reputation class and token metadata
//! - `precedence`: per-intent choice of object and counterparty roles
//! - `risk_rules`: see [`crate::risk`]
//!
//! Role templates map a role name to a source: a calldata parameter name, a
//! dotted typed-message path, or one of the payload built-ins `$to`, `$value`,
//! `$chain_id`, `$domain.verifyingContract`, `$domain.chainId`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use regex::Regex;
use serde::Deserialize;

use crate::abi::SelectorRegistry;
use crate::error::KnowledgeBaseError;
use crate::hex;
use crate::model::{Address, ContractInfo, ContractRegistry, IntentLabel, ObjectKind, Role};
use crate::risk::{RiskRule, RiskRuleSpec};

/// Where a role's value comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoleSource {
    /// Calldata parameter name or typed-message path.
    Field(String),
    TxTo,
    TxValue,
    TxChainId,
    DomainVerifyingContract,
    DomainChainId,
}

impl RoleSource {
    fn parse(s: &str) -> Result<RoleSource, KnowledgeBaseError> {
        Ok(match s {
            "$to" => RoleSource::TxTo,
            "$value" => RoleSource::TxValue,
            "$chain_id" => RoleSource::TxChainId,
            "$domain.verifyingContract" => RoleSource::DomainVerifyingContract,
            "$domain.chainId" => RoleSource::DomainChainId,
            other if other.starts_with('$') => {
                return Err(KnowledgeBaseError::Invalid(format!("unknown built-in role source {other}")))
            }
            "" => return Err(KnowledgeBaseError::Invalid("empty role source".into())),
            other => RoleSource::Field(other.to_string()),
        })
    }

    fn is_tx_builtin(&self) -> bool {
        matches!(self, RoleSource::TxTo | RoleSource::TxValue | RoleSource::TxChainId)
    }

    fn is_domain_builtin(&self) -> bool {
        matches!(self, RoleSource::DomainVerifyingContract | RoleSource::DomainChainId)
    }
}

pub type RoleTemplate = BTreeMap<Role, RoleSource>;

#[derive(Debug, Clone)]
pub struct SelectorRule {
    pub selector: [u8; 4],
    pub intent: IntentLabel,
    pub roles: RoleTemplate,
}

#[derive(Debug, Clone)]
pub struct TypedRule {
    pub primary_type: Regex,
    pub intent: IntentLabel,
    pub roles: RoleTemplate,
}

#[derive(Debug, Clone)]
pub struct TextRule {
    pub pattern: Regex,
    pub intent: IntentLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precedence {
    pub object: Option<Role>,
    pub object_kind: ObjectKind,
    pub counterparty: Option<Role>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub version: String,
    selector_rules: HashMap<[u8; 4], SelectorRule>,
    typed_rules: Vec<TypedRule>,
    text_rules: Vec<TextRule>,
    contracts: Arc<ContractRegistry>,
    precedence: BTreeMap<IntentLabel, Precedence>,
    risk_rules: Vec<RiskRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KbFile {
    version: String,
    #[serde(default)]
    selector_rules: Vec<SelectorRuleFile>,
    #[serde(default)]
    typed_rules: Vec<TypedRuleFile>,
    #[serde(default)]
    text_rules: Vec<TextRuleFile>,
    #[serde(default)]
    contracts: Vec<ContractFile>,
    #[serde(default)]
    precedence: BTreeMap<String, PrecedenceFile>,
    #[serde(default)]
    risk_rules: Vec<RiskRuleSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectorRuleFile {
    selector: String,
    intent: String,
    #[serde(default)]
    roles: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TypedRuleFile {
    primary_type: String,
    intent: String,
    #[serde(default)]
    roles: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextRuleFile {
    pattern: String,
    intent: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContractFile {
    address: Address,
    #[serde(flatten)]
    info: ContractInfo,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecedenceFile {
    #[serde(default)]
    object: Option<String>,
    object_kind: ObjectKind,
    #[serde(default)]
    counterparty: Option<String>,
}

fn invalid(msg: impl Into<String>) -> KnowledgeBaseError {
    KnowledgeBaseError::Invalid(msg.into())
}

fn parse_intent(s: &str) -> Result<IntentLabel, KnowledgeBaseError> {
    s.parse().map_err(invalid)
}

fn parse_role(s: &str) -> Result<Role, KnowledgeBaseError> {
    Role::parse(s).ok_or_else(|| invalid(format!("unknown role {s:?}")))
}

fn parse_template(roles: &BTreeMap<String, String>) -> Result<RoleTemplate, KnowledgeBaseError> {
    roles
        .iter()
        .map(|(role, source)| Ok((parse_role(role)?, RoleSource::parse(source)?)))
        .collect()
}

fn anchored(pattern: &str) -> Result<Regex, KnowledgeBaseError> {
    // Leading inline flags such as `(?is)` may precede the anchor.
    let body = match pattern.strip_prefix("(?") {
        Some(rest) => match rest.split_once(')') {
            Some((flags, tail)) if flags.chars().all(|c| c.is_ascii_alphabetic()) => tail,
            _ => pattern,
        },
        None => pattern,
    };
    if !body.starts_with('^') {
        return Err(invalid(format!("pattern {pattern:?} must be anchored with ^")));
    }
    Regex::new(pattern).map_err(|e| invalid(format!("pattern {pattern:?}: {e}")))
}

impl KnowledgeBase {
    /// Parses the knowledge base and checks every selector rule's role
    /// template against the parameter names in `selectors`.
    pub fn from_json(text: &str, selectors: &SelectorRegistry) -> Result<Self, KnowledgeBaseError> {
        let file: KbFile = serde_json::from_str(text).map_err(|e| KnowledgeBaseError::Json(e.to_string()))?;
        if file.version.trim().is_empty() {
            return Err(invalid("version field is mandatory"));
        }

        let mut selector_rules = HashMap::new();
        for rule in &file.selector_rules {
            let selector = hex::decode_fixed::<4>(&rule.selector)
                .map_err(|e| invalid(format!("selector {}: {e}", rule.selector)))?;
            let roles = parse_template(&rule.roles)?;
            let spec = selectors
                .get(&selector)
                .ok_or_else(|| invalid(format!("selector {} is not in the selector registry", rule.selector)))?;
            for source in roles.values() {
                match source {
                    RoleSource::Field(name) if !spec.params.iter().any(|(p, _)| p == name) => {
                        return Err(invalid(format!(
                            "rule {} references parameter {name:?} not defined by {}",
                            rule.selector, spec.signature
                        )))
                    }
                    s if s.is_domain_builtin() => {
                        return Err(invalid(format!("rule {} uses a typed-data source", rule.selector)))
                    }
                    _ => {}
                }
            }
            let intent = parse_intent(&rule.intent)?;
            if selector_rules
                .insert(selector, SelectorRule { selector, intent, roles })
                .is_some()
            {
                return Err(invalid(format!("duplicate selector rule {}", rule.selector)));
            }
        }

        let typed_rules = file
            .typed_rules
            .iter()
            .map(|r| {
                let roles = parse_template(&r.roles)?;
                if roles.values().any(RoleSource::is_tx_builtin) {
                    return Err(invalid(format!("typed rule {:?} uses a transaction source", r.primary_type)));
                }
                Ok(TypedRule {
                    primary_type: anchored(&r.primary_type)?,
                    intent: parse_intent(&r.intent)?,
                    roles,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let text_rules = file
            .text_rules
            .iter()
            .map(|r| {
                let pattern = anchored(&r.pattern)?;
                for name in pattern.capture_names().flatten() {
                    parse_role(name)?;
                }
                Ok(TextRule {
                    pattern,
                    intent: parse_intent(&r.intent)?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut contracts = ContractRegistry::new();
        for c in file.contracts {
            contracts.insert(c.address, c.info);
        }

        let mut precedence = BTreeMap::new();
        for (intent, p) in &file.precedence {
            precedence.insert(
                parse_intent(intent)?,
                Precedence {
                    object: p.object.as_deref().map(parse_role).transpose()?,
                    object_kind: p.object_kind,
                    counterparty: p.counterparty.as_deref().map(parse_role).transpose()?,
                },
            );
        }

        let risk_rules = file
            .risk_rules
            .into_iter()
            .map(RiskRule::try_from)
            .collect::<Result<Vec<_>, _>>()?;

        Ok(KnowledgeBase {
            version: file.version,
            selector_rules,
            typed_rules,
            text_rules,
            contracts: Arc::new(contracts),
            precedence,
            risk_rules,
        })
    }

    pub fn selector_rule(&self, selector: &[u8; 4]) -> Option<&SelectorRule> {
        self.selector_rules.get(selector)
    }

    /// First typed rule whose pattern matches the primary type.
    pub fn typed_rule(&self, primary_type: &str) -> Option<&TypedRule> {
        self.typed_rules.iter().find(|r| r.primary_type.is_match(primary_type))
    }

    /// First text rule matching the message text.
    pub fn text_rule(&self, text: &str) -> Option<&TextRule> {
        self.text_rules.iter().find(|r| r.pattern.is_match(text))
    }

    pub fn contracts(&self) -> Arc<ContractRegistry> {
        Arc::clone(&self.contracts)
    }

    pub fn precedence(&self, intent: IntentLabel) -> Option<Precedence> {
        self.precedence.get(&intent).copied()
    }

    pub fn risk_rules(&self) -> &[RiskRule] {
        &self.risk_rules
    }

    pub fn typed_rules(&self) -> &[TypedRule] {
        &self.typed_rules
    }

    pub fn text_rules(&self) -> &[TextRule] {
        &self.text_rules
    }

    /// Copy with the typed and text rule lists replaced, for precedence tests.
    pub fn with_rule_order(&self, typed: Vec<TypedRule>, text: Vec<TextRule>) -> Self {
        KnowledgeBase {
            typed_rules: typed,
            text_rules: text,
            ..self.clone()
        }
    }
}
