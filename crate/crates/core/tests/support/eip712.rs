//! Reference EIP-712 encoder over the JSON request shape.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::keccak::keccak256;

type Types = BTreeMap<String, Vec<(String, String)>>;

fn types_of(typed: &Value) -> Types {
    typed["types"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(name, fields)| {
            let fields = fields
                .as_array()
                .unwrap()
                .iter()
                .map(|f| (f["name"].as_str().unwrap().to_string(), f["type"].as_str().unwrap().to_string()))
                .collect();
            (name.clone(), fields)
        })
        .collect()
}

fn base(ty: &str) -> &str {
    ty.strip_suffix("[]").unwrap_or(ty)
}

fn deps(types: &Types, name: &str, found: &mut BTreeSet<String>) {
    if found.contains(name) || !types.contains_key(name) {
        return;
    }
    found.insert(name.to_string());
    for (_, ty) in &types[name] {
        deps(types, base(ty), found);
    }
}

pub fn encode_type(types: &Types, primary: &str) -> String {
    let mut found = BTreeSet::new();
    deps(types, primary, &mut found);
    found.remove(primary);
    let render = |name: &str| {
        let fields: Vec<String> = types[name].iter().map(|(n, t)| format!("{t} {n}")).collect();
        format!("{name}({})", fields.join(","))
    };
    let mut out = render(primary);
    for dep in &found {
        out.push_str(&render(dep));
    }
    out
}

/// Decimal or 0x-hex string, or JSON number, to a 32-byte big-endian word.
pub fn uint_word(v: &Value) -> [u8; 32] {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => panic!("not an integer: {other}"),
    };
    let mut w = [0u8; 32];
    if let Some(hex) = text.strip_prefix("0x") {
        let bytes = from_hex(hex);
        w[32 - bytes.len()..].copy_from_slice(&bytes);
        return w;
    }
    for d in text.bytes() {
        let mut carry = (d - b'0') as u32;
        for byte in w.iter_mut().rev() {
            let x = *byte as u32 * 10 + carry;
            *byte = x as u8;
            carry = x >> 8;
        }
    }
    w
}

pub fn from_hex(s: &str) -> Vec<u8> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    let s = if s.len() % 2 == 1 { format!("0{s}") } else { s.to_string() };
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
        .collect()
}

fn encode_value(types: &Types, ty: &str, v: &Value) -> [u8; 32] {
    if let Some(inner) = ty.strip_suffix("[]") {
        let mut buf = Vec::new();
        for item in v.as_array().unwrap() {
            buf.extend_from_slice(&encode_value(types, inner, item));
        }
        return keccak256(&buf);
    }
    if types.contains_key(ty) {
        return hash_struct(types, ty, v);
    }
    let mut w = [0u8; 32];
    match ty {
        "address" => w[12..].copy_from_slice(&from_hex(v.as_str().unwrap())),
        "bool" => w[31] = v.as_bool().unwrap() as u8,
        "string" => return keccak256(v.as_str().unwrap().as_bytes()),
        "bytes" => return keccak256(&from_hex(v.as_str().unwrap())),
        t if t.starts_with("uint") => return uint_word(v),
        t if t.starts_with("bytes") => {
            let b = from_hex(v.as_str().unwrap());
            w[..b.len()].copy_from_slice(&b);
        }
        t => panic!("oracle does not support {t}"),
    }
    w
}

pub fn hash_struct(types: &Types, name: &str, v: &Value) -> [u8; 32] {
    let mut buf = keccak256(encode_type(types, name).as_bytes()).to_vec();
    for (field, ty) in &types[name] {
        buf.extend_from_slice(&encode_value(types, ty, &v[field]));
    }
    keccak256(&buf)
}

const DOMAIN_FIELDS: [(&str, &str); 5] = [
    ("name", "string"),
    ("version", "string"),
    ("chainId", "uint256"),
    ("verifyingContract", "address"),
    ("salt", "bytes32"),
];

pub fn domain_separator(typed: &Value) -> [u8; 32] {
    let mut types = types_of(typed);
    if !types.contains_key("EIP712Domain") {
        let fields = DOMAIN_FIELDS
            .iter()
            .filter(|(n, _)| typed["domain"].get(*n).is_some())
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect();
        types.insert("EIP712Domain".into(), fields);
    }
    hash_struct(&types, "EIP712Domain", &typed["domain"])
}

/// keccak256(0x19 0x01 ‖ domainSeparator ‖ hashStruct(message)).
pub fn hash_typed_data(typed: &Value) -> [u8; 32] {
    let types = types_of(typed);
    let primary = typed["primaryType"].as_str().unwrap();
    let mut buf = vec![0x19, 0x01];
    buf.extend_from_slice(&domain_separator(typed));
    buf.extend_from_slice(&hash_struct(&types, primary, &typed["message"]));
    keccak256(&buf)
}

pub fn encode_type_of(typed: &Value, primary: &str) -> String {
    encode_type(&types_of(typed), primary)
}
