//! JSON-RPC signing request normalization.
//!
//! Accepts the request object a dApp hands to the wallet:
//!
//! ```json
//! {"method": "personal_sign", "params": ["0x…", "0xabc…"],
//!  "context": {"origin": "opensea.io", "wallet_chain_id": 1}}
//! ```
//!
//! `context` is optional; without it the origin is `"unknown"` and the wallet
//! is assumed to be on chain 1.

use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::ParseError;
use crate::hex;
use crate::model::{
    parse_u256, Address, ContractRegistry, MethodCategory, Payload, RequestContext, SigningRequest,
    TransactionPayload, TypedDataPayload, U256,
};

pub const DEFAULT_ORIGIN: &str = "unknown";
pub const DEFAULT_CHAIN_ID: u64 = 1;

/// Maps an RPC method name to its signing category.
pub fn method_category(method: &str) -> Option<MethodCategory> {
    match method {
        "eth_sendTransaction" | "eth_signTransaction" => Some(MethodCategory::TxSign),
        "personal_sign" => Some(MethodCategory::PersonalSign),
        "eth_sign" => Some(MethodCategory::EthSign),
        "eth_signTypedData" | "eth_signTypedData_v3" | "eth_signTypedData_v4" => {
            Some(MethodCategory::SignTypedData)
        }
        _ => None,
    }
}

/// Parses and normalizes a raw JSON-RPC signing request.
///
/// The returned request keeps `raw_json` byte-for-byte.
pub fn normalize_request(
    raw_json: &str,
    contracts: Arc<ContractRegistry>,
) -> Result<SigningRequest, ParseError> {
    let root: Value = serde_json::from_str(raw_json).map_err(|e| ParseError::Json(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| ParseError::malformed("$", "request must be a JSON object"))?;
    let method_name = obj
        .get("method")
        .and_then(Value::as_str)
        .ok_or_else(|| ParseError::malformed("method", "missing method name"))?;
    let method =
        method_category(method_name).ok_or_else(|| ParseError::UnknownMethod(method_name.to_string()))?;
    let params = obj
        .get("params")
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::malformed("params", "params must be an array"))?;
    let context = parse_context(obj.get("context"), contracts)?;

    let (payload, signer) = match method {
        MethodCategory::TxSign => {
            let tx = params
                .first()
                .and_then(Value::as_object)
                .ok_or_else(|| ParseError::malformed("params[0]", "expected transaction object"))?;
            (Payload::Transaction(parse_tx(tx, context.wallet_chain_id())?), None)
        }
        MethodCategory::PersonalSign => {
            let (msg_idx, addr_idx) = personal_sign_order(params);
            let message = parse_message(params.get(msg_idx), &format!("params[{msg_idx}]"))?;
            let signer = optional_address(params.get(addr_idx), &format!("params[{addr_idx}]"))?;
            (Payload::Message(message), signer)
        }
        MethodCategory::EthSign => {
            let signer = optional_address(params.first(), "params[0]")?;
            let data = params
                .get(1)
                .and_then(Value::as_str)
                .ok_or_else(|| ParseError::malformed("params[1]", "expected hex data"))?;
            let bytes = hex::decode(data).map_err(|source| ParseError::BadHex {
                path: "params[1]".into(),
                source,
            })?;
            (Payload::Message(bytes), signer)
        }
        MethodCategory::SignTypedData => {
            let signer = optional_address(params.first(), "params[0]")?;
            let typed = match params.get(1) {
                Some(Value::String(s)) => serde_json::from_str::<TypedDataPayload>(s),
                Some(v @ Value::Object(_)) => serde_json::from_value::<TypedDataPayload>(v.clone()),
                _ => return Err(ParseError::malformed("params[1]", "expected typed data")),
            }
            .map_err(|e| ParseError::malformed("params[1]", e.to_string()))?;
            (Payload::TypedData(typed), signer)
        }
    };

    SigningRequest::from_parts(method, payload, context, raw_json.as_bytes().to_vec(), signer)
        .map_err(ParseError::from)
}

fn parse_context(ctx: Option<&Value>, contracts: Arc<ContractRegistry>) -> Result<RequestContext, ParseError> {
    let (origin, chain) = match ctx {
        None | Some(Value::Null) => (DEFAULT_ORIGIN.to_string(), DEFAULT_CHAIN_ID),
        Some(Value::Object(c)) => {
            let origin = match c.get("origin") {
                None => DEFAULT_ORIGIN.to_string(),
                Some(Value::String(s)) => s.clone(),
                Some(_) => return Err(ParseError::malformed("context.origin", "expected string")),
            };
            let chain = match c.get("wallet_chain_id") {
                None => DEFAULT_CHAIN_ID,
                Some(v) => parse_u64(v, "context.wallet_chain_id")?,
            };
            (origin, chain)
        }
        Some(_) => return Err(ParseError::malformed("context", "expected object")),
    };
    RequestContext::new(origin, chain, contracts).map_err(|e| ParseError::malformed("context", e.to_string()))
}

/// MetaMask sends `[message, address]`; some dApps send the reverse.
fn personal_sign_order(params: &[Value]) -> (usize, usize) {
    let looks_like_address =
        |v: Option<&Value>| v.and_then(Value::as_str).is_some_and(|s| s.parse::<Address>().is_ok());
    if looks_like_address(params.first()) && !looks_like_address(params.get(1)) && params.len() > 1 {
        (1, 0)
    } else {
        (0, 1)
    }
}

fn parse_message(v: Option<&Value>, path: &str) -> Result<Vec<u8>, ParseError> {
    let s = v
        .and_then(Value::as_str)
        .ok_or_else(|| ParseError::malformed(path, "expected message string"))?;
    if s.starts_with("0x") || s.starts_with("0X") {
        hex::decode(s).map_err(|source| ParseError::BadHex {
            path: path.to_string(),
            source,
        })
    } else {
        Ok(s.as_bytes().to_vec())
    }
}

fn optional_address(v: Option<&Value>, path: &str) -> Result<Option<Address>, ParseError> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => s.parse().map(Some).map_err(|source| ParseError::BadHex {
            path: path.to_string(),
            source,
        }),
        Some(_) => Err(ParseError::malformed(path, "expected address string")),
    }
}

fn parse_address(v: &Value, path: &str) -> Result<Address, ParseError> {
    optional_address(Some(v), path)?.ok_or_else(|| ParseError::malformed(path, "expected address"))
}

fn parse_u256_value(v: &Value, path: &str) -> Result<U256, ParseError> {
    match v {
        Value::String(s) => parse_u256(s).map_err(|source| ParseError::BadHex {
            path: path.to_string(),
            source,
        }),
        Value::Number(n) => n
            .as_u64()
            .map(U256::from)
            .ok_or_else(|| ParseError::malformed(path, "expected unsigned integer")),
        _ => Err(ParseError::malformed(path, "expected integer")),
    }
}

fn parse_u64(v: &Value, path: &str) -> Result<u64, ParseError> {
    let n = parse_u256_value(v, path)?;
    if n > U256::from(u64::MAX) {
        return Err(ParseError::malformed(path, "integer exceeds 64 bits"));
    }
    Ok(n.as_u64())
}

fn parse_tx(tx: &Map<String, Value>, default_chain: u64) -> Result<TransactionPayload, ParseError> {
    let field = |name: &str| tx.get(name).filter(|v| !v.is_null());
    let path = |name: &str| format!("params[0].{name}");
    let opt_u256 = |name: &str| field(name).map(|v| parse_u256_value(v, &path(name))).transpose();

    let from = parse_address(
        field("from").ok_or_else(|| ParseError::malformed(path("from"), "missing sender"))?,
        &path("from"),
    )?;
    let to = field("to").map(|v| parse_address(v, &path("to"))).transpose()?;
    let value = opt_u256("value")?.unwrap_or_default();
    let data_key = if field("data").is_some() { "data" } else { "input" };
    let data = match field(data_key) {
        None => Vec::new(),
        Some(Value::String(s)) => hex::decode(s).map_err(|source| ParseError::BadHex {
            path: path(data_key),
            source,
        })?,
        Some(_) => return Err(ParseError::malformed(path(data_key), "expected hex string")),
    };
    if !data.is_empty() && data.len() < 4 {
        return Err(ParseError::malformed(
            path(data_key),
            "calldata must be empty or at least 4 bytes",
        ));
    }
    let chain_id = field("chainId")
        .map(|v| parse_u64(v, &path("chainId")))
        .transpose()?
        .unwrap_or(default_chain);
    let nonce = field("nonce").map(|v| parse_u64(v, &path("nonce"))).transpose()?;

    Ok(TransactionPayload {
        from,
        to,
        value,
        data,
        chain_id,
        gas: opt_u256("gas")?,
        gas_price: opt_u256("gasPrice")?,
        max_fee_per_gas: opt_u256("maxFeePerGas")?,
        max_priority_fee_per_gas: opt_u256("maxPriorityFeePerGas")?,
        nonce,
    })
}
