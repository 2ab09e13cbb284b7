//! End-to-end decoding: normalize → validate → interpret → score → explain.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abi::{decode_calldata, DecodedCall, SelectorRegistry};
use crate::data::{self, DataSet};
use crate::eip191::prefix_hash_personal;
use crate::eip712::{expand_typed_data, hash_typed_data, issue, validate_typed_data, FieldTree, IssueCode, ValidationReport};
use crate::error::{ExplainError, InterpretError, KnowledgeBaseError, ParseError, AbiError};
use crate::explain::{explain, TemplateSet};
use crate::hex;
use crate::interpret::{build_semantic_frame, infer_intent, map_roles, RoleMap, Structure};
use crate::kb::KnowledgeBase;
use crate::model::{
    Explanation, IntentLabel, MethodCategory, Payload, RiskAssessment, SemanticFrame, SigningRequest,
};
use crate::normalize::normalize_request;
use crate::risk::{EvalInput, RiskEngine};

pub const DECODER_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Selectors(#[from] AbiError),
    #[error(transparent)]
    KnowledgeBase(#[from] KnowledgeBaseError),
    #[error(transparent)]
    Templates(#[from] ExplainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Interpret(#[from] InterpretError),
}

impl DecodeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::Parse(e) => e.code(),
            DecodeError::Interpret(_) => "missing_actor",
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            DecodeError::Parse(e) => e.path(),
            DecodeError::Interpret(_) => Some("params"),
        }
    }
}

/// Echo of the request as normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestEcho {
    pub id: String,
    pub method: MethodCategory,
    pub rpc_method: String,
    pub deprecated: bool,
    pub origin: String,
    pub wallet_chain_id: u64,
    pub signer: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeResult {
    pub request: RequestEcho,
    /// Digest the wallet would sign, when it is defined without RLP.
    pub signing_digest: Option<String>,
    pub validation: ValidationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<DecodedCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldTree>,
    pub roles: RoleMap,
    pub frame: SemanticFrame,
    pub assessment: RiskAssessment,
    pub explanation: Explanation,
    pub decoder_version: String,
}

/// Owns the loaded data; cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Decoder {
    selectors: Arc<SelectorRegistry>,
    kb: Arc<KnowledgeBase>,
    templates: Arc<TemplateSet>,
    risk: Arc<RiskEngine>,
}

impl Decoder {
    pub fn new(selectors: SelectorRegistry, kb: KnowledgeBase, templates: TemplateSet) -> Self {
        let risk = RiskEngine::from_kb(&kb);
        Decoder {
            selectors: Arc::new(selectors),
            kb: Arc::new(kb),
            templates: Arc::new(templates),
            risk: Arc::new(risk),
        }
    }

    pub fn builtin() -> Self {
        Decoder::new(data::selectors().clone(), data::knowledge_base().clone(), data::templates().clone())
    }

    pub fn from_data(set: &DataSet) -> Result<Self, LoadError> {
        let selectors = SelectorRegistry::from_json(&set.selectors)?;
        let kb = KnowledgeBase::from_json(&set.kb, &selectors)?;
        let templates = TemplateSet::from_json(&set.templates)?;
        Ok(Decoder::new(selectors, kb, templates))
    }

    /// Bundled data, or the directory named by `SIGSEM_DATA_DIR`.
    pub fn from_env() -> Result<Self, LoadError> {
        Decoder::from_data(&DataSet::from_env()?)
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn selectors(&self) -> &SelectorRegistry {
        &self.selectors
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn risk_engine(&self) -> &RiskEngine {
        &self.risk
    }

    pub fn decode_json(&self, raw: &str, now: i64) -> Result<DecodeResult, DecodeError> {
        let req = normalize_request(raw, self.kb.contracts())?;
        Ok(self.decode(&req, now)?)
    }

    pub fn decode(&self, req: &SigningRequest, now: i64) -> Result<DecodeResult, InterpretError> {
        self.decode_with(req, now, false)
    }

    /// `replayed` marks a payload already seen in the same session.
    pub fn decode_with(&self, req: &SigningRequest, now: i64, replayed: bool) -> Result<DecodeResult, InterpretError> {
        let ctx = req.context();
        let mut call = None;
        let mut fields = None;
        let mut digest = None;
        let report = match req.payload() {
            Payload::Transaction(tx) => match decode_calldata(&tx.data, &self.selectors) {
                Ok(c) => {
                    call = Some(c);
                    ValidationReport::clean()
                }
                Err(e) => ValidationReport::from_issues(vec![issue(
                    IssueCode::MalformedCalldata,
                    "tx.data",
                    format!("calldata does not decode: {e}"),
                )]),
            },
            Payload::Message(m) => {
                digest = Some(hex::encode(prefix_hash_personal(m)));
                ValidationReport::clean()
            }
            Payload::TypedData(typed) => {
                let report = validate_typed_data(typed, ctx);
                if report.ok {
                    fields = expand_typed_data(typed).ok();
                    digest = hash_typed_data(typed).ok().map(hex::encode);
                }
                report
            }
        };

        // Only integrity-checked payloads are interpreted.
        let structure = match (req.payload(), &call, &fields) {
            _ if !report.ok => Structure::Opaque,
            (Payload::Transaction(tx), Some(call), _) => Structure::Call { call, tx },
            (Payload::TypedData(typed), _, Some(tree)) => Structure::Tree { tree, typed },
            (Payload::Message(_), _, _) if req.method() == MethodCategory::PersonalSign => {
                req.message_text().map(Structure::Text).unwrap_or(Structure::Opaque)
            }
            _ => Structure::Opaque,
        };
        let roles = map_roles(structure, &self.kb);
        let intent = if matches!(structure, Structure::Opaque) {
            IntentLabel::Unknown
        } else {
            infer_intent(req, &roles, &self.kb)
        };
        let frame = build_semantic_frame(req, intent, &roles, &self.kb)?;

        let assessment = self.risk.evaluate(&EvalInput {
            req,
            frame: &frame,
            ctx,
            report: &report,
            fields: fields.as_ref(),
            replayed,
        });
        let explanation = explain(req, &frame, &assessment, &self.templates, now)
            .expect("fallback template only uses always-filled slots");

        Ok(DecodeResult {
            request: RequestEcho {
                id: req.id().to_string(),
                method: req.method(),
                rpc_method: req.method().rpc_name().to_string(),
                deprecated: req.method().is_deprecated(),
                origin: ctx.origin().to_string(),
                wallet_chain_id: ctx.wallet_chain_id(),
                signer: req.signer().map(|a| a.checksum()),
            },
            signing_digest: digest,
            validation: report,
            call,
            fields,
            roles,
            frame,
            assessment,
            explanation,
            decoder_version: DECODER_VERSION.to_string(),
        })
    }
}
