//! Semantic decoding and risk tiering for Ethereum wallet signing requests.

pub mod abi;
pub mod batch;
pub mod data;
pub mod eip191;
pub mod eip712;
pub mod error;
pub mod explain;
pub mod harness;
pub mod hex;
pub mod interpret;
pub mod kb;
pub mod model;
pub mod normalize;
pub mod pipeline;
pub mod risk;

pub use model::{
    Address, IntentLabel, MethodCategory, RequestContext, RiskAssessment, SemanticFrame, Severity,
    SigningRequest, U256,
};
pub use pipeline::{DecodeError, DecodeResult, Decoder};
