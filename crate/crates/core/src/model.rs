//! Domain types shared across the decoding pipeline.
//!
//! Everything here is immutable once built; constructors enforce the
//! invariants so later stages can rely on them without re-checking.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

pub use primitive_types::U256;

use crate::error::{HexError, ModelError};
use crate::hex;

/// A 20-byte account or contract address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    /// Takes the low 20 bytes of an ABI word.
    pub fn from_word(word: &[u8; 32]) -> Address {
        let mut out = [0u8; 20];
        out.copy_from_slice(&word[12..]);
        Address(out)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    /// Mixed-case checksum rendering (EIP-55).
    pub fn checksum(&self) -> String {
        let lower = hex::encode(self.0);
        let digits = &lower[2..];
        let digest = hex::keccak256(digits.as_bytes());
        let mut out = String::with_capacity(42);
        out.push_str("0x");
        for (i, c) in digits.chars().enumerate() {
            let nibble = (digest[i / 2] >> (if i.is_multiple_of(2) { 4 } else { 0 })) & 0xf;
            if c.is_ascii_alphabetic() && nibble >= 8 {
                out.push(c.to_ascii_uppercase());
            } else {
                out.push(c);
            }
        }
        out
    }

    /// Middle-truncated checksum form, e.g. `0x1234…abcd`.
    pub fn short(&self) -> String {
        let full = self.checksum();
        format!("{}…{}", &full[..6], &full[38..])
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", hex::encode(self.0))
    }
}

impl FromStr for Address {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        hex::decode_fixed::<20>(s).map(Address)
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a 256-bit unsigned integer from a decimal or `0x`-prefixed hex string.
pub fn parse_u256(s: &str) -> Result<U256, HexError> {
    let s = s.trim();
    if s.starts_with("0x") || s.starts_with("0X") {
        let digits = hex::strip_prefix(s);
        if digits.is_empty() {
            return Ok(U256::zero());
        }
        if digits.len() > 64 {
            let trimmed = digits.trim_start_matches('0');
            if trimmed.len() > 64 {
                return Err(HexError::Overflow(s.to_string()));
            }
            return U256::from_str_radix(trimmed, 16)
                .map_err(|_| HexError::InvalidDigit(s.to_string()));
        }
        U256::from_str_radix(digits, 16).map_err(|_| HexError::InvalidDigit(s.to_string()))
    } else {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(HexError::InvalidDigit(s.to_string()));
        }
        U256::from_dec_str(s).map_err(|_| HexError::Overflow(s.to_string()))
    }
}

/// Serde adapter rendering `U256` as a decimal string (JSON numbers lose precision).
pub mod dec_u256 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &U256, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<U256, D::Error> {
        let v = Value::deserialize(d)?;
        match &v {
            Value::String(s) => parse_u256(s).map_err(serde::de::Error::custom),
            Value::Number(n) => n
                .as_u64()
                .map(U256::from)
                .ok_or_else(|| serde::de::Error::custom("expected unsigned integer")),
            _ => Err(serde::de::Error::custom("expected integer string")),
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<U256>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_str(&v.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<U256>, D::Error> {
            let v = Option::<Value>::deserialize(d)?;
            match v {
                None | Some(Value::Null) => Ok(None),
                Some(v) => super::deserialize(v).map(Some).map_err(serde::de::Error::custom),
            }
        }
    }
}

/// The four wallet signing methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodCategory {
    TxSign,
    PersonalSign,
    EthSign,
    SignTypedData,
}

impl MethodCategory {
    pub const ALL: [MethodCategory; 4] = [
        MethodCategory::TxSign,
        MethodCategory::PersonalSign,
        MethodCategory::EthSign,
        MethodCategory::SignTypedData,
    ];

    /// `eth_sign` is deprecated; the flag is fixed per variant.
    pub fn is_deprecated(self) -> bool {
        matches!(self, MethodCategory::EthSign)
    }

    /// Short code used in task tables.
    pub fn code(self) -> &'static str {
        match self {
            MethodCategory::TxSign => "TX",
            MethodCategory::PersonalSign => "PS",
            MethodCategory::EthSign => "ES",
            MethodCategory::SignTypedData => "E712",
        }
    }

    pub fn rpc_name(self) -> &'static str {
        match self {
            MethodCategory::TxSign => "eth_sendTransaction",
            MethodCategory::PersonalSign => "personal_sign",
            MethodCategory::EthSign => "eth_sign",
            MethodCategory::SignTypedData => "eth_signTypedData_v4",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            MethodCategory::TxSign => "transaction",
            MethodCategory::PersonalSign => "message signature",
            MethodCategory::EthSign => "raw eth_sign signature",
            MethodCategory::SignTypedData => "typed data signature",
        }
    }

    fn payload_kind(self) -> PayloadKind {
        match self {
            MethodCategory::TxSign => PayloadKind::Transaction,
            MethodCategory::PersonalSign | MethodCategory::EthSign => PayloadKind::Message,
            MethodCategory::SignTypedData => PayloadKind::TypedData,
        }
    }
}

impl fmt::Display for MethodCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rpc_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionPayload {
    pub from: Address,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Address>,
    #[serde(with = "dec_u256")]
    pub value: U256,
    #[serde(with = "hex::serde_bytes")]
    pub data: Vec<u8>,
    pub chain_id: u64,
    #[serde(default, with = "dec_u256::option", skip_serializing_if = "Option::is_none")]
    pub gas: Option<U256>,
    #[serde(default, with = "dec_u256::option", skip_serializing_if = "Option::is_none")]
    pub gas_price: Option<U256>,
    #[serde(default, with = "dec_u256::option", skip_serializing_if = "Option::is_none")]
    pub max_fee_per_gas: Option<U256>,
    #[serde(default, with = "dec_u256::option", skip_serializing_if = "Option::is_none")]
    pub max_priority_fee_per_gas: Option<U256>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonce: Option<u64>,
}

impl TransactionPayload {
    pub fn transfer(from: Address, to: Address, value: U256, chain_id: u64) -> Self {
        TransactionPayload {
            from,
            to: Some(to),
            value,
            data: Vec::new(),
            chain_id,
            gas: None,
            gas_price: None,
            max_fee_per_gas: None,
            max_priority_fee_per_gas: None,
            nonce: None,
        }
    }

    pub fn with_data(mut self, data: Vec<u8>) -> Self {
        self.data = data;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Eip712Domain {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, with = "dec_u256::option", skip_serializing_if = "Option::is_none")]
    pub chain_id: Option<U256>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifying_contract: Option<Address>,
    #[serde(
        default,
        with = "salt_serde",
        skip_serializing_if = "Option::is_none"
    )]
    pub salt: Option<[u8; 32]>,
}

mod salt_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<[u8; 32]>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&hex::encode(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[u8; 32]>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| hex::decode_fixed::<32>(&s))
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedField {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl TypedField {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedField {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

/// An `eth_signTypedData_v4` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TypedDataPayload {
    pub domain: Eip712Domain,
    pub types: BTreeMap<String, Vec<TypedField>>,
    pub primary_type: String,
    pub message: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PayloadKind {
    Transaction,
    Message,
    TypedData,
}

impl PayloadKind {
    fn name(self) -> &'static str {
        match self {
            PayloadKind::Transaction => "transaction",
            PayloadKind::Message => "message",
            PayloadKind::TypedData => "typed data",
        }
    }
}

/// One of the three payload shapes a signing request can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Transaction(TransactionPayload),
    Message(Vec<u8>),
    TypedData(TypedDataPayload),
}

impl Payload {
    fn kind(&self) -> PayloadKind {
        match self {
            Payload::Transaction(_) => PayloadKind::Transaction,
            Payload::Message(_) => PayloadKind::Message,
            Payload::TypedData(_) => PayloadKind::TypedData,
        }
    }

    fn to_wire(&self) -> Value {
        match self {
            Payload::Transaction(tx) => serde_json::to_value(tx).unwrap_or(Value::Null),
            Payload::Message(m) => Value::String(hex::encode(m)),
            Payload::TypedData(t) => serde_json::to_value(t).unwrap_or(Value::Null),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reputation {
    Known,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeta {
    pub symbol: String,
    pub decimals: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractInfo {
    pub label: String,
    pub reputation: Reputation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<TokenMeta>,
}

/// Static address book of known contracts; stands in for live reputation feeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContractRegistry {
    entries: HashMap<Address, ContractInfo>,
}

impl ContractRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, address: Address, info: ContractInfo) {
        self.entries.insert(address, info);
    }

    pub fn get(&self, address: &Address) -> Option<&ContractInfo> {
        self.entries.get(address)
    }

    /// Anything absent from the registry is `Unknown`.
    pub fn reputation(&self, address: &Address) -> Reputation {
        self.entries
            .get(address)
            .map(|c| c.reputation)
            .unwrap_or(Reputation::Unknown)
    }

    pub fn token(&self, address: &Address) -> Option<&TokenMeta> {
        self.entries.get(address).and_then(|c| c.token.as_ref())
    }

    pub fn label(&self, address: &Address) -> Option<&str> {
        self.entries.get(address).map(|c| c.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RequestContext {
    origin: String,
    wallet_chain_id: u64,
    known_contracts: Arc<ContractRegistry>,
}

impl RequestContext {
    pub fn new(
        origin: impl Into<String>,
        wallet_chain_id: u64,
        known_contracts: Arc<ContractRegistry>,
    ) -> Result<Self, ModelError> {
        let origin = origin.into();
        if origin.trim().is_empty() {
            return Err(ModelError::InvalidContext("origin must be non-empty"));
        }
        if wallet_chain_id == 0 {
            return Err(ModelError::InvalidContext("wallet_chain_id must be positive"));
        }
        Ok(RequestContext {
            origin,
            wallet_chain_id,
            known_contracts,
        })
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn wallet_chain_id(&self) -> u64 {
        self.wallet_chain_id
    }

    pub fn known_contracts(&self) -> &ContractRegistry {
        &self.known_contracts
    }
}

static NEXT_REQUEST_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> String {
    format!("req-{:08}", NEXT_REQUEST_ID.fetch_add(1, Ordering::Relaxed))
}

/// A normalized signing request: exactly one payload, matching its method.
#[derive(Debug, Clone)]
pub struct SigningRequest {
    id: String,
    method: MethodCategory,
    raw: Vec<u8>,
    signer: Option<Address>,
    payload: Payload,
    context: RequestContext,
}

/// Builds a request, rejecting payloads that do not belong to `method`.
pub fn make_request(
    method: MethodCategory,
    payload: Payload,
    context: RequestContext,
) -> Result<SigningRequest, ModelError> {
    let raw = serde_json::to_vec(&json!({
        "method": method.rpc_name(),
        "payload": payload.to_wire(),
    }))
    .unwrap_or_default();
    SigningRequest::from_parts(method, payload, context, raw, None)
}

impl SigningRequest {
    pub(crate) fn from_parts(
        method: MethodCategory,
        payload: Payload,
        context: RequestContext,
        raw: Vec<u8>,
        signer: Option<Address>,
    ) -> Result<Self, ModelError> {
        if method.payload_kind() != payload.kind() {
            return Err(ModelError::PayloadMismatch {
                method: method.rpc_name(),
                payload: payload.kind().name(),
            });
        }
        let signer = match &payload {
            Payload::Transaction(tx) => Some(tx.from),
            _ => signer,
        };
        Ok(SigningRequest {
            id: fresh_id(),
            method,
            raw,
            signer,
            payload,
            context,
        })
    }

    /// Attaches the signing account for message and typed-data requests.
    pub fn with_signer(mut self, signer: Address) -> Self {
        if self.tx().is_none() {
            self.signer = Some(signer);
        }
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn method(&self) -> MethodCategory {
        self.method
    }

    /// Wire bytes exactly as received.
    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    pub fn signer(&self) -> Option<Address> {
        self.signer
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn context(&self) -> &RequestContext {
        &self.context
    }

    pub fn tx(&self) -> Option<&TransactionPayload> {
        match &self.payload {
            Payload::Transaction(tx) => Some(tx),
            _ => None,
        }
    }

    pub fn message(&self) -> Option<&[u8]> {
        match &self.payload {
            Payload::Message(m) => Some(m),
            _ => None,
        }
    }

    pub fn typed(&self) -> Option<&TypedDataPayload> {
        match &self.payload {
            Payload::TypedData(t) => Some(t),
            _ => None,
        }
    }

    /// Message body as text, if it is valid UTF-8.
    pub fn message_text(&self) -> Option<&str> {
        self.message().and_then(|m| std::str::from_utf8(m).ok())
    }

    /// Looks up a provenance path inside this request.
    ///
    /// Paths: `method`, `signer`, `context.origin`, `context.wallet_chain_id`,
    /// `tx.<field>`, `tx.data.selector`, `tx.data.word.<i>`, `message`,
    /// `message[<start>..<end>]`, `typed.primary_type`, `typed.domain.<field>`,
    /// `typed.message.<a>.<b>…` (array elements by index).
    pub fn resolve(&self, path: &str) -> Option<Value> {
        match path {
            "method" => return Some(Value::String(self.method.rpc_name().into())),
            "signer" => return self.signer.map(|a| Value::String(a.to_string())),
            "context.origin" => return Some(Value::String(self.context.origin.clone())),
            "context.wallet_chain_id" => return Some(json!(self.context.wallet_chain_id)),
            _ => {}
        }
        if let Some(rest) = path.strip_prefix("tx.") {
            return self.tx().and_then(|tx| resolve_tx(tx, rest));
        }
        if let Some(rest) = path.strip_prefix("message") {
            let msg = self.message()?;
            if rest.is_empty() {
                return Some(Value::String(render_bytes(msg)));
            }
            let range = rest.strip_prefix('[')?.strip_suffix(']')?;
            let (start, end) = range.split_once("..")?;
            let (start, end): (usize, usize) = (start.parse().ok()?, end.parse().ok()?);
            if start > end || end > msg.len() {
                return None;
            }
            return Some(Value::String(render_bytes(&msg[start..end])));
        }
        if let Some(rest) = path.strip_prefix("typed.") {
            let typed = self.typed()?;
            if rest == "domain" {
                return serde_json::to_value(&typed.domain).ok();
            }
            if rest == "primary_type" {
                return Some(Value::String(typed.primary_type.clone()));
            }
            if let Some(field) = rest.strip_prefix("domain.") {
                let domain = serde_json::to_value(&typed.domain).ok()?;
                return domain.get(field).cloned();
            }
            if let Some(field_path) = rest.strip_prefix("message") {
                let mut node = &typed.message;
                if field_path.is_empty() {
                    return Some(node.clone());
                }
                for seg in field_path.strip_prefix('.')?.split('.') {
                    node = match node {
                        Value::Object(map) => map.get(seg)?,
                        Value::Array(items) => items.get(seg.parse::<usize>().ok()?)?,
                        _ => return None,
                    };
                }
                return Some(node.clone());
            }
        }
        None
    }
}

fn resolve_tx(tx: &TransactionPayload, field: &str) -> Option<Value> {
    match field {
        "from" => Some(Value::String(tx.from.to_string())),
        "to" => tx.to.map(|a| Value::String(a.to_string())),
        "value" => Some(Value::String(tx.value.to_string())),
        "data" => Some(Value::String(hex::encode(&tx.data))),
        "chain_id" => Some(json!(tx.chain_id)),
        "nonce" => tx.nonce.map(|n| json!(n)),
        "gas" => tx.gas.map(|g| Value::String(g.to_string())),
        "data.selector" if tx.data.len() >= 4 => Some(Value::String(hex::encode(&tx.data[..4]))),
        _ => {
            let index: usize = field.strip_prefix("data.word.")?.parse().ok()?;
            let start = 4 + 32 * index;
            tx.data
                .get(start..start + 32)
                .map(|w| Value::String(hex::encode(w)))
        }
    }
}

fn render_bytes(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => hex::encode(bytes),
    }
}

/// High-level intent reconstructed from a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntentLabel {
    Login,
    Mint,
    Vote,
    BridgeOrSwap,
    Approve,
    Permit,
    Transfer,
    SetApprovalForAll,
    Unknown,
}

impl IntentLabel {
    pub const ALL: [IntentLabel; 9] = [
        IntentLabel::Login,
        IntentLabel::Mint,
        IntentLabel::Vote,
        IntentLabel::BridgeOrSwap,
        IntentLabel::Approve,
        IntentLabel::Permit,
        IntentLabel::Transfer,
        IntentLabel::SetApprovalForAll,
        IntentLabel::Unknown,
    ];

    /// Intents that let assets leave the signer's control.
    pub fn moves_assets(self) -> bool {
        matches!(
            self,
            IntentLabel::Approve
                | IntentLabel::Permit
                | IntentLabel::Transfer
                | IntentLabel::SetApprovalForAll
                | IntentLabel::BridgeOrSwap
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            IntentLabel::Login => "Login",
            IntentLabel::Mint => "Mint",
            IntentLabel::Vote => "Vote",
            IntentLabel::BridgeOrSwap => "BridgeOrSwap",
            IntentLabel::Approve => "Approve",
            IntentLabel::Permit => "Permit",
            IntentLabel::Transfer => "Transfer",
            IntentLabel::SetApprovalForAll => "SetApprovalForAll",
            IntentLabel::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IntentLabel::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown intent label {s:?}"))
    }
}

/// Human-facing semantic roles a payload field can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "spender")]
    Spender,
    #[serde(rename = "token contract")]
    TokenContract,
    #[serde(rename = "approval limit")]
    ApprovalLimit,
    #[serde(rename = "recipient")]
    Recipient,
    #[serde(rename = "operator")]
    Operator,
    #[serde(rename = "proposal")]
    Proposal,
    #[serde(rename = "deadline")]
    Deadline,
    #[serde(rename = "session nonce")]
    SessionNonce,
    #[serde(rename = "amount")]
    Amount,
    #[serde(rename = "chain")]
    Chain,
}

impl Role {
    pub const ALL: [Role; 10] = [
        Role::Spender,
        Role::TokenContract,
        Role::ApprovalLimit,
        Role::Recipient,
        Role::Operator,
        Role::Proposal,
        Role::Deadline,
        Role::SessionNonce,
        Role::Amount,
        Role::Chain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Spender => "spender",
            Role::TokenContract => "token contract",
            Role::ApprovalLimit => "approval limit",
            Role::Recipient => "recipient",
            Role::Operator => "operator",
            Role::Proposal => "proposal",
            Role::Deadline => "deadline",
            Role::SessionNonce => "session nonce",
            Role::Amount => "amount",
            Role::Chain => "chain",
        }
    }

    /// Accepts the display name or its underscore form (`session_nonce`).
    pub fn parse(s: &str) -> Option<Role> {
        let normalized = s.replace('_', " ");
        Role::ALL.into_iter().find(|r| r.name() == normalized)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value bound to a role or condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FieldValue {
    Address(Address),
    #[serde(with = "dec_u256")]
    Integer(U256),
    Text(String),
    Bool(bool),
}

impl FieldValue {
    pub fn as_address(&self) -> Option<Address> {
        match self {
            FieldValue::Address(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<U256> {
        match self {
            FieldValue::Integer(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Address(a) => write!(f, "{a}"),
            FieldValue::Integer(v) => write!(f, "{v}"),
            FieldValue::Text(t) => f.write_str(t),
            FieldValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Token,
    Nft,
    Proposal,
    Session,
    Contract,
    NativeCurrency,
    Message,
}

/// What the request acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRef {
    pub kind: ObjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<Address>,
    pub label: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterparty {
    pub address: Address,
    pub role: Role,
    pub label: String,
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Amount,
    AllowanceLimit,
    Deadline,
    Chain,
    Nonce,
}

impl ConditionKind {
    pub fn label(self) -> &'static str {
        match self {
            ConditionKind::Amount => "Amount",
            ConditionKind::AllowanceLimit => "Allowance limit",
            ConditionKind::Deadline => "Deadline",
            ConditionKind::Chain => "Chain",
            ConditionKind::Nonce => "Nonce",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ConditionKind::Amount => "amount",
            ConditionKind::AllowanceLimit => "allowance_limit",
            ConditionKind::Deadline => "deadline",
            ConditionKind::Chain => "chain",
            ConditionKind::Nonce => "nonce",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub kind: ConditionKind,
    pub value: FieldValue,
    pub path: String,
}

/// Actor–action–object reconstruction of a request's intent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticFrame {
    pub actor: Address,
    pub action: IntentLabel,
    pub object: ObjectRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterparty: Option<Counterparty>,
    pub conditions: Vec<Condition>,
    /// Frame field (`actor`, `object`, `counterparty`, `condition.<kind>`) to payload path.
    pub provenance: BTreeMap<String, String>,
}

impl SemanticFrame {
    pub fn condition(&self, kind: ConditionKind) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.kind == kind)
    }

    /// The allowance limit if present, else the plain amount.
    pub fn amount_condition(&self) -> Option<&Condition> {
        self.condition(ConditionKind::AllowanceLimit)
            .or_else(|| self.condition(ConditionKind::Amount))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn color(self) -> Color {
        match self {
            Severity::Low => Color::Green,
            Severity::Medium => Color::Yellow,
            Severity::High => Color::Red,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Severity::Low => 'L',
            Severity::Medium => 'M',
            Severity::High => 'H',
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Green,
    Yellow,
    Red,
}

impl Color {
    pub fn severity(self) -> Severity {
        match self {
            Color::Green => Severity::Low,
            Color::Yellow => Severity::Medium,
            Color::Red => Severity::High,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskSignal {
    pub code: String,
    pub severity: Severity,
    pub rationale: String,
    pub evidence: Vec<String>,
}

/// Tiered verdict. The tier is always the highest signal severity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskAssessment {
    tier: Severity,
    color: Color,
    signals: Vec<RiskSignal>,
}

impl RiskAssessment {
    /// Orders signals High→Low, then by code, and derives the tier.
    pub fn from_signals(mut signals: Vec<RiskSignal>) -> Self {
        signals.sort_by(|a, b| b.severity.cmp(&a.severity).then_with(|| a.code.cmp(&b.code)));
        let tier = signals
            .iter()
            .map(|s| s.severity)
            .max()
            .unwrap_or(Severity::Low);
        RiskAssessment {
            tier,
            color: tier.color(),
            signals,
        }
    }

    pub fn with_signal(self, signal: RiskSignal) -> Self {
        let mut signals = self.signals;
        signals.push(signal);
        RiskAssessment::from_signals(signals)
    }

    pub fn tier(&self) -> Severity {
        self.tier
    }

    pub fn color(&self) -> Color {
        self.color
    }

    pub fn signals(&self) -> &[RiskSignal] {
        &self.signals
    }
}

impl<'de> Deserialize<'de> for RiskAssessment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            signals: Vec<RiskSignal>,
        }
        let raw = Raw::deserialize(d)?;
        Ok(RiskAssessment::from_signals(raw.signals))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetailRow {
    pub label: String,
    pub value: String,
    pub highlight: bool,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub summary: String,
    pub detail_rows: Vec<DetailRow>,
    pub tooltips: BTreeMap<String, String>,
}
