//! Signature classification, role mapping, intent inference and frame assembly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::abi::{AbiValue, DecodedCall};
use crate::eip712::FieldTree;
use crate::error::InterpretError;
use crate::kb::{KnowledgeBase, RoleSource, RoleTemplate};
use crate::model::{
    Condition, ConditionKind, Counterparty, FieldValue, IntentLabel, MethodCategory, ObjectKind, ObjectRef,
    Role, SemanticFrame, SigningRequest, TransactionPayload, TypedDataPayload, U256,
};

/// The category follows from the payload the request was built with.
pub fn classify_method(req: &SigningRequest) -> MethodCategory {
    req.method()
}

/// A parsed payload ready for role mapping.
#[derive(Debug, Clone, Copy)]
pub enum Structure<'a> {
    Call {
        call: &'a DecodedCall,
        tx: &'a TransactionPayload,
    },
    Tree {
        tree: &'a FieldTree,
        typed: &'a TypedDataPayload,
    },
    Text(&'a str),
    /// Nothing interpretable (binary message, failed validation).
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBinding {
    pub path: String,
    pub value: FieldValue,
}

/// Roles bound for one request; each role at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleMap {
    pub assignments: BTreeMap<Role, RoleBinding>,
}

impl RoleMap {
    pub fn get(&self, role: Role) -> Option<&RoleBinding> {
        self.assignments.get(&role)
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }
}

fn plain_transfer_template() -> RoleTemplate {
    BTreeMap::from([(Role::Recipient, RoleSource::TxTo), (Role::Amount, RoleSource::TxValue)])
}

fn abi_field(value: &AbiValue) -> Option<FieldValue> {
    match value {
        AbiValue::Address(a) => Some(FieldValue::Address(*a)),
        AbiValue::Uint(v) => Some(FieldValue::Integer(*v)),
        AbiValue::Bool(b) => Some(FieldValue::Bool(*b)),
        AbiValue::String(s) => Some(FieldValue::Text(s.clone())),
        AbiValue::FixedBytes(b) | AbiValue::Bytes(b) => Some(FieldValue::Text(crate::hex::encode(b))),
        AbiValue::Array(_) => None,
    }
}

fn bind_tx(source: &RoleSource, call: &DecodedCall, tx: &TransactionPayload) -> Option<RoleBinding> {
    match source {
        RoleSource::Field(name) => {
            let arg = call.arg(name)?;
            Some(RoleBinding {
                path: format!("tx.data.word.{}", arg.word),
                value: abi_field(&arg.value)?,
            })
        }
        RoleSource::TxTo => tx.to.map(|to| RoleBinding {
            path: "tx.to".into(),
            value: FieldValue::Address(to),
        }),
        RoleSource::TxValue => Some(RoleBinding {
            path: "tx.value".into(),
            value: FieldValue::Integer(tx.value),
        }),
        RoleSource::TxChainId => Some(RoleBinding {
            path: "tx.chain_id".into(),
            value: FieldValue::Integer(U256::from(tx.chain_id)),
        }),
        RoleSource::DomainVerifyingContract | RoleSource::DomainChainId => None,
    }
}

fn bind_typed(source: &RoleSource, tree: &FieldTree, typed: &TypedDataPayload) -> Option<RoleBinding> {
    match source {
        RoleSource::Field(path) => {
            let node = tree.get(path)?;
            Some(RoleBinding {
                path: format!("typed.message.{path}"),
                value: node.value.clone()?,
            })
        }
        RoleSource::DomainVerifyingContract => typed.domain.verifying_contract.map(|a| RoleBinding {
            path: "typed.domain.verifyingContract".into(),
            value: FieldValue::Address(a),
        }),
        RoleSource::DomainChainId => typed.domain.chain_id.map(|c| RoleBinding {
            path: "typed.domain.chainId".into(),
            value: FieldValue::Integer(c),
        }),
        _ => None,
    }
}

/// Applies the matching knowledge-base rule's role template.
///
/// Parameters not named by the template keep their raw labels and stay out
/// of the map; no matching rule yields an empty map.
pub fn map_roles(structure: Structure<'_>, kb: &KnowledgeBase) -> RoleMap {
    let mut map = RoleMap::default();
    match structure {
        Structure::Call { call, tx } => {
            let template = if call.is_plain_transfer() {
                plain_transfer_template()
            } else {
                match call.selector.and_then(|s| kb.selector_rule(&s)) {
                    Some(rule) if !call.unresolved => rule.roles.clone(),
                    _ => return map,
                }
            };
            for (role, source) in &template {
                if let Some(binding) = bind_tx(source, call, tx) {
                    map.assignments.insert(*role, binding);
                }
            }
        }
        Structure::Tree { tree, typed } => {
            let Some(rule) = kb.typed_rule(&typed.primary_type) else {
                return map;
            };
            for (role, source) in &rule.roles {
                if let Some(binding) = bind_typed(source, tree, typed) {
                    map.assignments.insert(*role, binding);
                }
            }
        }
        Structure::Text(text) => {
            let Some(rule) = kb.text_rule(text) else {
                return map;
            };
            let Some(caps) = rule.pattern.captures(text) else {
                return map;
            };
            for name in rule.pattern.capture_names().flatten() {
                let (Some(role), Some(m)) = (Role::parse(name), caps.name(name)) else {
                    continue;
                };
                map.assignments.insert(
                    role,
                    RoleBinding {
                        path: format!("message[{}..{}]", m.start(), m.end()),
                        value: FieldValue::Text(m.as_str().to_string()),
                    },
                );
            }
        }
        Structure::Opaque => {}
    }
    map
}

/// Infers the high-level intent. Only the rule family for the request's
/// method is consulted; the first match wins and `Unknown` is the fallback.
pub fn infer_intent(req: &SigningRequest, _roles: &RoleMap, kb: &KnowledgeBase) -> IntentLabel {
    match classify_method(req) {
        MethodCategory::TxSign => {
            let Some(tx) = req.tx() else {
                return IntentLabel::Unknown;
            };
            if tx.data.is_empty() {
                return IntentLabel::Transfer;
            }
            tx.data
                .get(..4)
                .and_then(|s| kb.selector_rule(&[s[0], s[1], s[2], s[3]]))
                .map(|r| r.intent)
                .unwrap_or(IntentLabel::Unknown)
        }
        MethodCategory::SignTypedData => req
            .typed()
            .and_then(|t| kb.typed_rule(&t.primary_type))
            .map(|r| r.intent)
            .unwrap_or(IntentLabel::Unknown),
        MethodCategory::PersonalSign => req
            .message_text()
            .and_then(|text| kb.text_rule(text))
            .map(|r| r.intent)
            .unwrap_or(IntentLabel::Unknown),
        // Arbitrary bytes: never interpreted.
        MethodCategory::EthSign => IntentLabel::Unknown,
    }
}

fn role_condition(role: Role) -> Option<ConditionKind> {
    match role {
        Role::ApprovalLimit => Some(ConditionKind::AllowanceLimit),
        Role::Amount => Some(ConditionKind::Amount),
        Role::Deadline => Some(ConditionKind::Deadline),
        Role::SessionNonce => Some(ConditionKind::Nonce),
        Role::Chain => Some(ConditionKind::Chain),
        _ => None,
    }
}

fn default_object(req: &SigningRequest, kind: Option<ObjectKind>) -> ObjectRef {
    let registry = req.context().known_contracts();
    let contract = |address, path: &str, kind: ObjectKind| ObjectRef {
        kind,
        address: Some(address),
        label: registry
            .label(&address)
            .map(str::to_string)
            .unwrap_or_else(|| crate::model::Address::short(&address)),
        path: path.to_string(),
    };
    if let Some(tx) = req.tx() {
        if tx.data.is_empty() {
            return ObjectRef {
                kind: ObjectKind::NativeCurrency,
                address: None,
                label: crate::explain::native_token(tx.chain_id).symbol,
                path: "tx.value".into(),
            };
        }
        return match tx.to {
            Some(to) => contract(to, "tx.to", kind.unwrap_or(ObjectKind::Contract)),
            None => ObjectRef {
                kind: ObjectKind::Contract,
                address: None,
                label: "a new contract".into(),
                path: "tx.data".into(),
            },
        };
    }
    if let Some(typed) = req.typed() {
        return match typed.domain.verifying_contract {
            Some(vc) => contract(vc, "typed.domain.verifyingContract", kind.unwrap_or(ObjectKind::Contract)),
            None => ObjectRef {
                kind: kind.unwrap_or(ObjectKind::Message),
                address: None,
                label: typed
                    .domain
                    .name
                    .clone()
                    .unwrap_or_else(|| typed.primary_type.clone()),
                path: "typed.primary_type".into(),
            },
        };
    }
    match kind {
        Some(ObjectKind::Session) => ObjectRef {
            kind: ObjectKind::Session,
            address: None,
            label: req.context().origin().to_string(),
            path: "context.origin".into(),
        },
        _ => ObjectRef {
            kind: ObjectKind::Message,
            address: None,
            label: format!("a message from {}", req.context().origin()),
            path: "message".into(),
        },
    }
}

/// Assembles the actor–action–object frame with provenance for every field.
pub fn build_semantic_frame(
    req: &SigningRequest,
    intent: IntentLabel,
    roles: &RoleMap,
    kb: &KnowledgeBase,
) -> Result<SemanticFrame, InterpretError> {
    let actor = req
        .signer()
        .ok_or_else(|| InterpretError::MissingActor(req.id().to_string()))?;
    let actor_path = if req.tx().is_some() { "tx.from" } else { "signer" };
    let registry = req.context().known_contracts();
    let precedence = kb.precedence(intent);

    let object = precedence
        .and_then(|p| {
            let binding = roles.get(p.object?)?;
            Some(match &binding.value {
                FieldValue::Address(a) => ObjectRef {
                    kind: p.object_kind,
                    address: Some(*a),
                    label: registry.label(a).map(str::to_string).unwrap_or_else(|| a.short()),
                    path: binding.path.clone(),
                },
                other => ObjectRef {
                    kind: p.object_kind,
                    address: None,
                    label: match p.object_kind {
                        ObjectKind::Proposal => format!("proposal #{other}"),
                        _ => other.to_string(),
                    },
                    path: binding.path.clone(),
                },
            })
        })
        .unwrap_or_else(|| default_object(req, precedence.map(|p| p.object_kind)));

    let counterparty = precedence.and_then(|p| {
        let role = p.counterparty?;
        let binding = roles.get(role)?;
        let address = binding.value.as_address()?;
        Some(Counterparty {
            address,
            role,
            label: registry
                .label(&address)
                .map(str::to_string)
                .unwrap_or_else(|| address.short()),
            path: binding.path.clone(),
        })
    });

    let mut conditions: Vec<Condition> = roles
        .assignments
        .iter()
        .filter_map(|(role, binding)| {
            Some(Condition {
                kind: role_condition(*role)?,
                value: binding.value.clone(),
                path: binding.path.clone(),
            })
        })
        .collect();
    if !conditions.iter().any(|c| c.kind == ConditionKind::Chain) {
        let chain = match (req.tx(), req.typed()) {
            (Some(tx), _) => Some((U256::from(tx.chain_id), "tx.chain_id")),
            (_, Some(typed)) => typed.domain.chain_id.map(|c| (c, "typed.domain.chainId")),
            _ => None,
        };
        if let Some((value, path)) = chain {
            conditions.push(Condition {
                kind: ConditionKind::Chain,
                value: FieldValue::Integer(value),
                path: path.into(),
            });
        }
    }
    conditions.sort_by_key(|c| c.kind);

    let mut provenance = BTreeMap::new();
    provenance.insert("actor".to_string(), actor_path.to_string());
    provenance.insert("object".to_string(), object.path.clone());
    if let Some(cp) = &counterparty {
        provenance.insert("counterparty".to_string(), cp.path.clone());
    }
    for c in &conditions {
        provenance.insert(format!("condition.{}", c.kind.key()), c.path.clone());
    }

    Ok(SemanticFrame {
        actor,
        action: intent,
        object,
        counterparty,
        conditions,
        provenance,
    })
}
