//! Function selectors and calldata decoding for a restricted ABI subset.
//!
//! Supported: `address`, `uint8..uint256`, `bool`, `bytes1..bytes32`, `bytes`,
//! `string`, and one-dimensional dynamic arrays (`T[]`) of those. Tuples,
//! fixed-size arrays and nested arrays are rejected as unsupported.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::AbiError;
use crate::hex;
use crate::model::{dec_u256, Address, U256};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiType {
    Address,
    Uint(u16),
    Bool,
    FixedBytes(u8),
    Bytes,
    String,
    Array(Box<AbiType>),
}

impl AbiType {
    pub fn parse(s: &str) -> Result<AbiType, AbiError> {
        let unsupported = || AbiError::UnsupportedType(s.to_string());
        if let Some(inner) = s.strip_suffix("[]") {
            let inner = AbiType::parse(inner)?;
            if matches!(inner, AbiType::Array(_)) {
                return Err(unsupported());
            }
            return Ok(AbiType::Array(Box::new(inner)));
        }
        match s {
            "address" => return Ok(AbiType::Address),
            "bool" => return Ok(AbiType::Bool),
            "bytes" => return Ok(AbiType::Bytes),
            "string" => return Ok(AbiType::String),
            _ => {}
        }
        if let Some(bits) = s.strip_prefix("uint") {
            let bits: u16 = bits.parse().map_err(|_| unsupported())?;
            if bits == 0 || bits > 256 || !bits.is_multiple_of(8) {
                return Err(unsupported());
            }
            return Ok(AbiType::Uint(bits));
        }
        if let Some(len) = s.strip_prefix("bytes") {
            let len: u8 = len.parse().map_err(|_| unsupported())?;
            if len == 0 || len > 32 {
                return Err(unsupported());
            }
            return Ok(AbiType::FixedBytes(len));
        }
        Err(unsupported())
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, AbiType::Bytes | AbiType::String | AbiType::Array(_))
    }
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiType::Address => f.write_str("address"),
            AbiType::Uint(bits) => write!(f, "uint{bits}"),
            AbiType::Bool => f.write_str("bool"),
            AbiType::FixedBytes(n) => write!(f, "bytes{n}"),
            AbiType::Bytes => f.write_str("bytes"),
            AbiType::String => f.write_str("string"),
            AbiType::Array(inner) => write!(f, "{inner}[]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum AbiValue {
    Address(Address),
    #[serde(with = "dec_u256")]
    Uint(U256),
    Bool(bool),
    #[serde(with = "hex::serde_bytes")]
    FixedBytes(Vec<u8>),
    #[serde(with = "hex::serde_bytes")]
    Bytes(Vec<u8>),
    String(String),
    Array(Vec<AbiValue>),
}

impl fmt::Display for AbiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiValue::Address(a) => write!(f, "{a}"),
            AbiValue::Uint(v) => write!(f, "{v}"),
            AbiValue::Bool(b) => write!(f, "{b}"),
            AbiValue::FixedBytes(b) | AbiValue::Bytes(b) => f.write_str(&hex::encode(b)),
            AbiValue::String(s) => write!(f, "{s:?}"),
            AbiValue::Array(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

/// Splits `name(t1,t2,…)` into its name and parameter type strings, enforcing
/// canonical form: no whitespace, no argument names, no `uint`/`int` aliases.
pub fn split_signature(signature: &str) -> Result<(&str, Vec<&str>), AbiError> {
    let bad = || AbiError::NonCanonicalSignature(signature.to_string());
    if signature.chars().any(char::is_whitespace) {
        return Err(bad());
    }
    let open = signature.find('(').ok_or_else(bad)?;
    let name = &signature[..open];
    let params = signature[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    if !is_ident(name) {
        return Err(bad());
    }
    if params.is_empty() {
        return Ok((name, Vec::new()));
    }
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, c) in params.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&params[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(bad());
        }
    }
    if depth != 0 {
        return Err(bad());
    }
    out.push(&params[start..]);
    for ty in &out {
        let base = ty.trim_end_matches("[]");
        let base = base.split('[').next().unwrap_or(base);
        if ty.is_empty() || base == "uint" || base == "int" || base == "fixed" || base == "ufixed" {
            return Err(bad());
        }
        if !base.starts_with('(') && !is_ident(base) {
            return Err(bad());
        }
    }
    Ok((name, out))
}

/// First four bytes of the Keccak-256 digest of a canonical signature.
pub fn selector_of(signature: &str) -> Result<[u8; 4], AbiError> {
    split_signature(signature)?;
    let digest = hex::keccak256(signature.as_bytes());
    Ok([digest[0], digest[1], digest[2], digest[3]])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedArg {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub value: AbiValue,
    /// Index of the argument's head word, for provenance (`tx.data.word.<i>`).
    pub word: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedCall {
    /// Absent for empty calldata (a plain value transfer).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_selector")]
    pub selector: Option<[u8; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    pub args: Vec<DecodedArg>,
    pub unresolved: bool,
    /// Raw 32-byte words after the selector when the selector is unknown.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_words: Vec<String>,
}

mod opt_selector {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<[u8; 4]>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&crate::hex::encode(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[u8; 4]>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| crate::hex::decode_fixed::<4>(&s))
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}

impl DecodedCall {
    pub fn is_plain_transfer(&self) -> bool {
        self.selector.is_none()
    }

    pub fn arg(&self, name: &str) -> Option<&DecodedArg> {
        self.args.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryEntry {
    selector: String,
    signature: String,
    param_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    pub selector: [u8; 4],
    pub signature: String,
    pub name: String,
    pub params: Vec<(String, AbiType)>,
}

/// Known selectors with canonical signatures and parameter names.
#[derive(Debug, Clone, Default)]
pub struct SelectorRegistry {
    by_selector: HashMap<[u8; 4], FunctionSpec>,
}

impl SelectorRegistry {
    /// Loads the registry file: a JSON array of `{selector, signature, param_names}`.
    ///
    /// Each declared selector must match the signature's digest, parameter
    /// names must line up with the types, and no two entries may collide.
    pub fn from_json(text: &str) -> Result<Self, AbiError> {
        let entries: Vec<RegistryEntry> =
            serde_json::from_str(text).map_err(|e| AbiError::Registry(e.to_string()))?;
        let mut registry = SelectorRegistry::default();
        for entry in entries {
            let declared = hex::decode_fixed::<4>(&entry.selector)
                .map_err(|e| AbiError::Registry(format!("{}: {e}", entry.signature)))?;
            let spec = FunctionSpec::from_signature(&entry.signature, &entry.param_names)?;
            if spec.selector != declared {
                return Err(AbiError::Registry(format!(
                    "{} declares selector {} but hashes to {}",
                    entry.signature,
                    entry.selector,
                    hex::encode(spec.selector)
                )));
            }
            registry.insert(spec)?;
        }
        Ok(registry)
    }

    pub fn insert(&mut self, spec: FunctionSpec) -> Result<(), AbiError> {
        if let Some(existing) = self.by_selector.get(&spec.selector) {
            return Err(AbiError::Registry(format!(
                "selector collision {}: {} vs {}",
                hex::encode(spec.selector),
                existing.signature,
                spec.signature
            )));
        }
        self.by_selector.insert(spec.selector, spec);
        Ok(())
    }

    pub fn get(&self, selector: &[u8; 4]) -> Option<&FunctionSpec> {
        self.by_selector.get(selector)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FunctionSpec> {
        self.by_selector.values()
    }

    pub fn len(&self) -> usize {
        self.by_selector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_selector.is_empty()
    }
}

impl FunctionSpec {
    pub fn from_signature(signature: &str, param_names: &[String]) -> Result<Self, AbiError> {
        let (name, types) = split_signature(signature)?;
        if types.len() != param_names.len() {
            return Err(AbiError::Registry(format!(
                "{signature}: {} parameter names for {} types",
                param_names.len(),
                types.len()
            )));
        }
        let params = types
            .iter()
            .zip(param_names)
            .map(|(ty, n)| AbiType::parse(ty).map(|t| (n.clone(), t)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FunctionSpec {
            selector: selector_of(signature)?,
            signature: signature.to_string(),
            name: name.to_string(),
            params,
        })
    }
}

/// Decodes calldata against the registry.
///
/// Empty data yields a plain-transfer marker; an unknown selector yields an
/// unresolved call with the raw words. Known selectors are decoded strictly:
/// padding must be clean and every offset must stay inside the payload.
pub fn decode_calldata(data: &[u8], registry: &SelectorRegistry) -> Result<DecodedCall, AbiError> {
    if data.is_empty() {
        return Ok(DecodedCall {
            selector: None,
            function: None,
            args: Vec::new(),
            unresolved: false,
            raw_words: Vec::new(),
        });
    }
    if data.len() < 4 {
        return Err(AbiError::ShortCalldata(data.len()));
    }
    let selector = [data[0], data[1], data[2], data[3]];
    let body = &data[4..];
    let Some(spec) = registry.get(&selector) else {
        return Ok(DecodedCall {
            selector: Some(selector),
            function: None,
            args: Vec::new(),
            unresolved: true,
            raw_words: body.chunks(32).map(hex::encode).collect(),
        });
    };
    let types: Vec<AbiType> = spec.params.iter().map(|(_, t)| t.clone()).collect();
    let values = decode_params(&types, body)?;
    let args = spec
        .params
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, ((name, ty), value))| DecodedArg {
            name: name.clone(),
            ty: ty.to_string(),
            value,
            word: i,
        })
        .collect();
    Ok(DecodedCall {
        selector: Some(selector),
        function: Some(spec.signature.clone()),
        args,
        unresolved: false,
        raw_words: Vec::new(),
    })
}

/// Decodes a head/tail-encoded parameter list (no selector).
pub fn decode_params(types: &[AbiType], body: &[u8]) -> Result<Vec<AbiValue>, AbiError> {
    let reader = Reader { data: body };
    types
        .iter()
        .enumerate()
        .map(|(i, ty)| reader.read(ty, 0, i))
        .collect()
}

struct Reader<'a> {
    data: &'a [u8],
}

impl Reader<'_> {
    fn slice(&self, offset: usize, len: usize) -> Result<&[u8], AbiError> {
        let end = offset.checked_add(len);
        match end {
            Some(end) if end <= self.data.len() => Ok(&self.data[offset..end]),
            _ => Err(AbiError::TruncatedCalldata {
                offset,
                needed: len,
                available: self.data.len().saturating_sub(offset),
            }),
        }
    }

    fn word(&self, offset: usize) -> Result<[u8; 32], AbiError> {
        let mut w = [0u8; 32];
        w.copy_from_slice(self.slice(offset, 32)?);
        Ok(w)
    }

    /// Reads a word holding an offset or length, which must fit a usize.
    fn usize_word(&self, offset: usize, ty: &AbiType, index: usize) -> Result<usize, AbiError> {
        let w = self.word(offset)?;
        if w[..24].iter().any(|b| *b != 0) {
            return Err(invalid(ty, index));
        }
        let mut be = [0u8; 8];
        be.copy_from_slice(&w[24..]);
        Ok(u64::from_be_bytes(be) as usize)
    }

    /// Reads the value whose head word is `index` within the block at `base`.
    fn read(&self, ty: &AbiType, base: usize, index: usize) -> Result<AbiValue, AbiError> {
        let head = base + 32 * index;
        if !ty.is_dynamic() {
            return decode_static(ty, &self.word(head)?, index);
        }
        let rel = self.usize_word(head, ty, index)?;
        let start = base.checked_add(rel).ok_or_else(|| invalid(ty, index))?;
        match ty {
            AbiType::Bytes | AbiType::String => {
                let len = self.usize_word(start, ty, index)?;
                let bytes = self.slice(start + 32, len)?;
                let padded = len.div_ceil(32) * 32;
                let padding = self.slice(start + 32 + len, padded - len)?;
                if padding.iter().any(|b| *b != 0) {
                    return Err(invalid(ty, index));
                }
                if *ty == AbiType::String {
                    String::from_utf8(bytes.to_vec())
                        .map(AbiValue::String)
                        .map_err(|_| invalid(ty, index))
                } else {
                    Ok(AbiValue::Bytes(bytes.to_vec()))
                }
            }
            AbiType::Array(inner) => {
                let len = self.usize_word(start, ty, index)?;
                // Each element needs at least one head word.
                self.slice(start + 32, len.checked_mul(32).ok_or_else(|| invalid(ty, index))?)?;
                let elems_base = start + 32;
                (0..len)
                    .map(|i| self.read(inner, elems_base, i))
                    .collect::<Result<Vec<_>, _>>()
                    .map(AbiValue::Array)
            }
            _ => unreachable!("static types handled above"),
        }
    }
}

fn invalid(ty: &AbiType, word: usize) -> AbiError {
    AbiError::InvalidValue {
        ty: ty.to_string(),
        word,
    }
}

fn decode_static(ty: &AbiType, word: &[u8; 32], index: usize) -> Result<AbiValue, AbiError> {
    match ty {
        AbiType::Address => {
            if word[..12].iter().any(|b| *b != 0) {
                return Err(invalid(ty, index));
            }
            Ok(AbiValue::Address(Address::from_word(word)))
        }
        AbiType::Uint(bits) => {
            let value = U256::from_big_endian(word);
            if *bits < 256 && value.bits() > *bits as usize {
                return Err(invalid(ty, index));
            }
            Ok(AbiValue::Uint(value))
        }
        AbiType::Bool => match (word[..31].iter().all(|b| *b == 0), word[31]) {
            (true, 0) => Ok(AbiValue::Bool(false)),
            (true, 1) => Ok(AbiValue::Bool(true)),
            _ => Err(invalid(ty, index)),
        },
        AbiType::FixedBytes(n) => {
            let n = *n as usize;
            if word[n..].iter().any(|b| *b != 0) {
                return Err(invalid(ty, index));
            }
            Ok(AbiValue::FixedBytes(word[..n].to_vec()))
        }
        _ => unreachable!("dynamic type passed to decode_static"),
    }
}
