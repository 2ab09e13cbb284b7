//! Typed structured data: schema validation, recursive expansion and hashing.
//!
//! Follows the `eth_signTypedData_v4` JSON shape. Atomic member types are
//! limited to the same subset as the calldata decoder; struct members and
//! one-dimensional arrays (of atomics or structs) are supported.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::abi::AbiType;
use crate::error::TypedDataError;
use crate::hex::{self, keccak256};
use crate::model::{parse_u256, Address, FieldValue, RequestContext, TypedDataPayload, TypedField, U256};

pub const DOMAIN_TYPE: &str = "EIP712Domain";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueLevel {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    UndefinedType,
    CyclicTypes,
    UnsupportedType,
    MissingField,
    InvalidValue,
    DomainSeparation,
    MissingVerifyingContract,
    /// Transaction calldata that does not decode against its selector.
    MalformedCalldata,
}

impl IssueCode {
    pub fn level(self) -> IssueLevel {
        match self {
            IssueCode::DomainSeparation | IssueCode::MissingVerifyingContract => IssueLevel::Warning,
            _ => IssueLevel::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub level: IssueLevel,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn from_issues(issues: Vec<Issue>) -> Self {
        let ok = issues.iter().all(|i| i.level != IssueLevel::Error);
        ValidationReport { ok, issues }
    }

    /// A clean report for payloads that carry no schema.
    pub fn clean() -> Self {
        ValidationReport {
            ok: true,
            issues: Vec::new(),
        }
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.level == IssueLevel::Error)
    }
}

/// Member type after resolving against the `types` map.
#[derive(Debug, Clone, PartialEq, Eq)]
enum MemberType {
    Atomic(AbiType),
    Bytes,
    String,
    Struct(String),
    Array(Box<MemberType>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TypeProblem {
    Undefined(String),
    Unsupported(String),
}

fn resolve_type(ty: &str, types: &BTreeMap<String, Vec<TypedField>>) -> Result<MemberType, TypeProblem> {
    if let Some(inner) = ty.strip_suffix("[]") {
        let inner = resolve_type(inner, types)?;
        if matches!(inner, MemberType::Array(_)) {
            return Err(TypeProblem::Unsupported(ty.to_string()));
        }
        return Ok(MemberType::Array(Box::new(inner)));
    }
    if ty.ends_with(']') {
        return Err(TypeProblem::Unsupported(ty.to_string()));
    }
    if types.contains_key(ty) {
        return Ok(MemberType::Struct(ty.to_string()));
    }
    match AbiType::parse(ty) {
        Ok(AbiType::Bytes) => Ok(MemberType::Bytes),
        Ok(AbiType::String) => Ok(MemberType::String),
        Ok(t) => Ok(MemberType::Atomic(t)),
        Err(_) if looks_elementary(ty) => Err(TypeProblem::Unsupported(ty.to_string())),
        Err(_) => Err(TypeProblem::Undefined(ty.to_string())),
    }
}

fn looks_elementary(ty: &str) -> bool {
    ["uint", "int", "bytes", "fixed", "ufixed", "function", "tuple"]
        .iter()
        .any(|p| ty.starts_with(p) && ty[p.len()..].chars().all(|c| c.is_ascii_digit() || c == 'x'))
}

fn base_type(ty: &str) -> &str {
    ty.split('[').next().unwrap_or(ty)
}

fn domain_fields(typed: &TypedDataPayload) -> Vec<TypedField> {
    if let Some(fields) = typed.types.get(DOMAIN_TYPE) {
        return fields.clone();
    }
    let d = &typed.domain;
    let mut fields = Vec::new();
    if d.name.is_some() {
        fields.push(TypedField::new("name", "string"));
    }
    if d.version.is_some() {
        fields.push(TypedField::new("version", "string"));
    }
    if d.chain_id.is_some() {
        fields.push(TypedField::new("chainId", "uint256"));
    }
    if d.verifying_contract.is_some() {
        fields.push(TypedField::new("verifyingContract", "address"));
    }
    if d.salt.is_some() {
        fields.push(TypedField::new("salt", "bytes32"));
    }
    fields
}

fn domain_value(typed: &TypedDataPayload) -> Value {
    serde_json::to_value(&typed.domain).unwrap_or(Value::Null)
}

pub fn issue(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue {
        code,
        level: code.level(),
        path: path.into(),
        message: message.into(),
    }
}

/// Checks schema well-formedness, message conformance and domain binding.
///
/// Never fails: every finding lands in the report.
pub fn validate_typed_data(typed: &TypedDataPayload, ctx: &RequestContext) -> ValidationReport {
    let mut issues = Vec::new();

    if !typed.types.contains_key(&typed.primary_type) {
        issues.push(issue(
            IssueCode::UndefinedType,
            "typed.primary_type",
            format!("undefined type: primary type {} is not defined", typed.primary_type),
        ));
    } else {
        check_type_graph(&typed.primary_type, &typed.types, &mut issues);
    }
    if typed.types.contains_key(DOMAIN_TYPE) {
        check_type_graph(DOMAIN_TYPE, &typed.types, &mut issues);
    }

    let schema_ok = issues.iter().all(|i| i.level != IssueLevel::Error);
    if schema_ok {
        check_value(
            &typed.types,
            &MemberType::Struct(typed.primary_type.clone()),
            &typed.message,
            "typed.message",
            &mut issues,
        );
        let domain_struct = domain_fields(typed);
        let mut types = typed.types.clone();
        types.insert(DOMAIN_TYPE.to_string(), domain_struct);
        check_value(
            &types,
            &MemberType::Struct(DOMAIN_TYPE.to_string()),
            &domain_value(typed),
            "typed.domain",
            &mut issues,
        );
    }

    match typed.domain.chain_id {
        Some(chain) if chain != U256::from(ctx.wallet_chain_id()) => issues.push(issue(
            IssueCode::DomainSeparation,
            "typed.domain.chainId",
            format!(
                "domain separation: typed data is bound to chain {chain} but the wallet is on chain {}",
                ctx.wallet_chain_id()
            ),
        )),
        _ => {}
    }
    if typed.domain.verifying_contract.is_none() {
        issues.push(issue(
            IssueCode::MissingVerifyingContract,
            "typed.domain",
            "domain does not name a verifying contract",
        ));
    }

    ValidationReport::from_issues(issues)
}

fn check_type_graph(root: &str, types: &BTreeMap<String, Vec<TypedField>>, issues: &mut Vec<Issue>) {
    let mut done = BTreeSet::new();
    let mut stack = Vec::new();
    visit(root, types, &mut stack, &mut done, issues);
}

fn visit(
    name: &str,
    types: &BTreeMap<String, Vec<TypedField>>,
    stack: &mut Vec<String>,
    done: &mut BTreeSet<String>,
    issues: &mut Vec<Issue>,
) {
    if done.contains(name) {
        return;
    }
    if let Some(pos) = stack.iter().position(|s| s == name) {
        let mut cycle = stack[pos..].to_vec();
        cycle.push(name.to_string());
        let message = format!("cyclic types: {}", cycle.join(" -> "));
        if !issues.iter().any(|i| i.message == message) {
            issues.push(issue(IssueCode::CyclicTypes, format!("types.{name}"), message));
        }
        return;
    }
    let Some(fields) = types.get(name) else { return };
    stack.push(name.to_string());
    let mut seen = BTreeSet::new();
    for field in fields {
        let path = format!("types.{name}.{}", field.name);
        if !seen.insert(field.name.as_str()) {
            issues.push(issue(IssueCode::InvalidValue, &path, format!("duplicate field {}", field.name)));
        }
        match resolve_type(&field.ty, types) {
            Ok(_) => {
                let base = base_type(&field.ty);
                if types.contains_key(base) {
                    visit(base, types, stack, done, issues);
                }
            }
            Err(TypeProblem::Undefined(t)) => issues.push(issue(
                IssueCode::UndefinedType,
                path,
                format!("undefined type: {t} is referenced by {name}.{} but not defined", field.name),
            )),
            Err(TypeProblem::Unsupported(t)) => issues.push(issue(
                IssueCode::UnsupportedType,
                path,
                format!("unsupported type {t}"),
            )),
        }
    }
    stack.pop();
    done.insert(name.to_string());
}

fn check_value(
    types: &BTreeMap<String, Vec<TypedField>>,
    ty: &MemberType,
    value: &Value,
    path: &str,
    issues: &mut Vec<Issue>,
) {
    match ty {
        MemberType::Struct(name) => {
            let Some(obj) = value.as_object() else {
                issues.push(issue(IssueCode::InvalidValue, path, format!("expected {name} object")));
                return;
            };
            for field in types.get(name).into_iter().flatten() {
                let field_path = format!("{path}.{}", field.name);
                match obj.get(&field.name) {
                    None | Some(Value::Null) => issues.push(issue(
                        IssueCode::MissingField,
                        &field_path,
                        format!("missing field {}.{}", name, field.name),
                    )),
                    Some(v) => {
                        if let Ok(member) = resolve_type(&field.ty, types) {
                            check_value(types, &member, v, &field_path, issues);
                        }
                    }
                }
            }
        }
        MemberType::Array(inner) => match value.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    check_value(types, inner, item, &format!("{path}.{i}"), issues);
                }
            }
            None => issues.push(issue(IssueCode::InvalidValue, path, "expected array")),
        },
        _ => {
            if let Err(message) = encode_leaf(ty, value) {
                issues.push(issue(IssueCode::InvalidValue, path, message));
            }
        }
    }
}

/// Parses an atomic, `bytes` or `string` member into its display value and its
/// 32-byte encoding.
fn encode_leaf(ty: &MemberType, value: &Value) -> Result<(FieldValue, [u8; 32]), String> {
    match ty {
        MemberType::String => {
            let s = value.as_str().ok_or("expected string")?;
            Ok((FieldValue::Text(s.to_string()), keccak256(s.as_bytes())))
        }
        MemberType::Bytes => {
            let s = value.as_str().ok_or("expected hex string")?;
            let bytes = hex::decode(s).map_err(|e| e.to_string())?;
            Ok((FieldValue::Text(hex::encode(&bytes)), keccak256(&bytes)))
        }
        MemberType::Atomic(AbiType::Address) => {
            let s = value.as_str().ok_or("expected address string")?;
            let addr: Address = s.parse().map_err(|e: crate::error::HexError| e.to_string())?;
            let mut word = [0u8; 32];
            word[12..].copy_from_slice(addr.as_bytes());
            Ok((FieldValue::Address(addr), word))
        }
        MemberType::Atomic(AbiType::Bool) => {
            let b = value.as_bool().ok_or("expected boolean")?;
            let mut word = [0u8; 32];
            word[31] = b as u8;
            Ok((FieldValue::Bool(b), word))
        }
        MemberType::Atomic(AbiType::Uint(bits)) => {
            let v = match value {
                Value::Number(n) => n.as_u64().map(U256::from).ok_or("expected unsigned integer")?,
                Value::String(s) => parse_u256(s).map_err(|e| e.to_string())?,
                _ => return Err("expected unsigned integer".into()),
            };
            if *bits < 256 && v.bits() > *bits as usize {
                return Err(format!("value {v} exceeds uint{bits}"));
            }
            Ok((FieldValue::Integer(v), v.to_big_endian()))
        }
        MemberType::Atomic(AbiType::FixedBytes(n)) => {
            let s = value.as_str().ok_or("expected hex string")?;
            let bytes = hex::decode(s).map_err(|e| e.to_string())?;
            if bytes.len() > *n as usize {
                return Err(format!("{} bytes exceed bytes{n}", bytes.len()));
            }
            let mut word = [0u8; 32];
            word[..bytes.len()].copy_from_slice(&bytes);
            Ok((FieldValue::Text(hex::encode(&word[..*n as usize])), word))
        }
        other => Err(format!("not a leaf type: {other:?}")),
    }
}

fn ensure_valid(typed: &TypedDataPayload) -> Result<(), TypedDataError> {
    let mut issues = Vec::new();
    if !typed.types.contains_key(&typed.primary_type) {
        return Err(TypedDataError::UndefinedType(typed.primary_type.clone()));
    }
    check_type_graph(&typed.primary_type, &typed.types, &mut issues);
    if typed.types.contains_key(DOMAIN_TYPE) {
        check_type_graph(DOMAIN_TYPE, &typed.types, &mut issues);
    }
    if let Some(cycle) = issues.iter().find(|i| i.code == IssueCode::CyclicTypes) {
        return Err(TypedDataError::CyclicTypes(cycle.message.clone()));
    }
    if let Some(undefined) = issues.iter().find(|i| i.code == IssueCode::UndefinedType) {
        return Err(TypedDataError::UndefinedType(undefined.message.clone()));
    }
    if !issues.is_empty() {
        return Err(TypedDataError::Invalid(issues.into_iter().map(|i| i.message).collect()));
    }
    Ok(())
}

/// One node of an expanded typed-data message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldNode {
    /// Dot-joined field names from the primary type (array elements by index).
    pub path: String,
    pub label: String,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<FieldValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<FieldNode>,
}

impl FieldNode {
    pub fn is_leaf(&self) -> bool {
        self.value.is_some()
    }
}

/// Message fields expanded depth-first along the schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldTree {
    pub primary_type: String,
    pub nodes: Vec<FieldNode>,
}

impl FieldTree {
    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&FieldNode> {
        fn walk<'a>(nodes: &'a [FieldNode], out: &mut Vec<&'a FieldNode>) {
            for n in nodes {
                if n.is_leaf() {
                    out.push(n);
                }
                walk(&n.children, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.nodes, &mut out);
        out
    }

    pub fn get(&self, path: &str) -> Option<&FieldNode> {
        fn find<'a>(nodes: &'a [FieldNode], path: &str) -> Option<&'a FieldNode> {
            nodes.iter().find_map(|n| {
                if n.path == path {
                    Some(n)
                } else if path.starts_with(&format!("{}.", n.path)) {
                    find(&n.children, path)
                } else {
                    None
                }
            })
        }
        find(&self.nodes, path)
    }
}

/// Expands the message of `primary_type` into a field tree.
pub fn expand_typed_data(typed: &TypedDataPayload) -> Result<FieldTree, TypedDataError> {
    ensure_valid(typed)?;
    let nodes = expand_struct(&typed.types, &typed.primary_type, &typed.message, "")?;
    Ok(FieldTree {
        primary_type: typed.primary_type.clone(),
        nodes,
    })
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn expand_struct(
    types: &BTreeMap<String, Vec<TypedField>>,
    name: &str,
    value: &Value,
    prefix: &str,
) -> Result<Vec<FieldNode>, TypedDataError> {
    let obj = value
        .as_object()
        .ok_or_else(|| TypedDataError::Invalid(vec![format!("{prefix}: expected {name} object")]))?;
    let mut nodes = Vec::new();
    for field in &types[name] {
        let path = join(prefix, &field.name);
        let member = resolve_type(&field.ty, types)
            .map_err(|p| TypedDataError::Invalid(vec![format!("{path}: {p:?}")]))?;
        let v = obj
            .get(&field.name)
            .filter(|v| !v.is_null())
            .ok_or_else(|| TypedDataError::Invalid(vec![format!("missing field {path}")]))?;
        nodes.push(expand_member(types, &member, &field.ty, &field.name, v, path)?);
    }
    Ok(nodes)
}

fn expand_member(
    types: &BTreeMap<String, Vec<TypedField>>,
    member: &MemberType,
    ty: &str,
    label: &str,
    value: &Value,
    path: String,
) -> Result<FieldNode, TypedDataError> {
    let invalid = |m: String| TypedDataError::Invalid(vec![format!("{path}: {m}")]);
    let (value, children) = match member {
        MemberType::Struct(name) => (None, expand_struct(types, name, value, &path)?),
        MemberType::Array(inner) => {
            let items = value.as_array().ok_or_else(|| invalid("expected array".into()))?;
            let inner_ty = &ty[..ty.len() - 2];
            let children = items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    expand_member(types, inner, inner_ty, &i.to_string(), item, format!("{path}.{i}"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (None, children)
        }
        leaf => (Some(encode_leaf(leaf, value).map_err(invalid)?.0), Vec::new()),
    };
    Ok(FieldNode {
        path,
        label: label.to_string(),
        ty: ty.to_string(),
        value,
        children,
    })
}

/// `Name(type field,…)` followed by referenced struct types in name order.
pub fn encode_type(types: &BTreeMap<String, Vec<TypedField>>, primary: &str) -> Result<String, TypedDataError> {
    let mut deps = BTreeSet::new();
    collect_deps(types, primary, &mut deps)?;
    deps.remove(primary);
    let mut out = String::new();
    for name in std::iter::once(primary).chain(deps.iter().map(String::as_str)) {
        let fields = types
            .get(name)
            .ok_or_else(|| TypedDataError::UndefinedType(name.to_string()))?;
        out.push_str(name);
        out.push('(');
        let members: Vec<String> = fields.iter().map(|f| format!("{} {}", f.ty, f.name)).collect();
        out.push_str(&members.join(","));
        out.push(')');
    }
    Ok(out)
}

fn collect_deps(
    types: &BTreeMap<String, Vec<TypedField>>,
    name: &str,
    deps: &mut BTreeSet<String>,
) -> Result<(), TypedDataError> {
    if !deps.insert(name.to_string()) {
        return Ok(());
    }
    let fields = types
        .get(name)
        .ok_or_else(|| TypedDataError::UndefinedType(name.to_string()))?;
    for f in fields {
        let base = base_type(&f.ty);
        if types.contains_key(base) {
            collect_deps(types, base, deps)?;
        }
    }
    Ok(())
}

pub fn type_hash(types: &BTreeMap<String, Vec<TypedField>>, name: &str) -> Result<[u8; 32], TypedDataError> {
    Ok(keccak256(encode_type(types, name)?.as_bytes()))
}

fn encode_member(
    types: &BTreeMap<String, Vec<TypedField>>,
    member: &MemberType,
    value: &Value,
) -> Result<[u8; 32], TypedDataError> {
    match member {
        MemberType::Struct(name) => hash_struct_inner(types, name, value),
        MemberType::Array(inner) => {
            let items = value
                .as_array()
                .ok_or_else(|| TypedDataError::Invalid(vec!["expected array".into()]))?;
            let mut buf = Vec::with_capacity(items.len() * 32);
            for item in items {
                buf.extend_from_slice(&encode_member(types, inner, item)?);
            }
            Ok(keccak256(&buf))
        }
        leaf => encode_leaf(leaf, value)
            .map(|(_, word)| word)
            .map_err(|m| TypedDataError::Invalid(vec![m])),
    }
}

fn hash_struct_inner(
    types: &BTreeMap<String, Vec<TypedField>>,
    name: &str,
    value: &Value,
) -> Result<[u8; 32], TypedDataError> {
    let fields = types
        .get(name)
        .ok_or_else(|| TypedDataError::UndefinedType(name.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| TypedDataError::Invalid(vec![format!("expected {name} object")]))?;
    let mut buf = Vec::with_capacity(32 * (fields.len() + 1));
    buf.extend_from_slice(&type_hash(types, name)?);
    for f in fields {
        let member = resolve_type(&f.ty, types)
            .map_err(|p| TypedDataError::Invalid(vec![format!("{name}.{}: {p:?}", f.name)]))?;
        let v = obj
            .get(&f.name)
            .filter(|v| !v.is_null())
            .ok_or_else(|| TypedDataError::Invalid(vec![format!("missing field {name}.{}", f.name)]))?;
        buf.extend_from_slice(&encode_member(types, &member, v)?);
    }
    Ok(keccak256(&buf))
}

/// `hashStruct(name, value)` = keccak(typeHash ‖ encodeData).
pub fn hash_struct(typed: &TypedDataPayload, name: &str, value: &Value) -> Result<[u8; 32], TypedDataError> {
    ensure_valid(typed)?;
    hash_struct_inner(&typed.types, name, value)
}

pub fn domain_separator(typed: &TypedDataPayload) -> Result<[u8; 32], TypedDataError> {
    let mut types = typed.types.clone();
    types.insert(DOMAIN_TYPE.to_string(), domain_fields(typed));
    hash_struct_inner(&types, DOMAIN_TYPE, &domain_value(typed))
}

/// Signing digest: keccak(0x19 0x01 ‖ domainSeparator ‖ hashStruct(message)).
pub fn hash_typed_data(typed: &TypedDataPayload) -> Result<[u8; 32], TypedDataError> {
    ensure_valid(typed)?;
    let domain = domain_separator(typed)?;
    let message = hash_struct_inner(&typed.types, &typed.primary_type, &typed.message)?;
    let mut buf = Vec::with_capacity(66);
    buf.extend_from_slice(&[0x19, 0x01]);
    buf.extend_from_slice(&domain);
    buf.extend_from_slice(&message);
    Ok(keccak256(&buf))
}
