//! Proptest strategies shared by the property suites.

use proptest::prelude::*;
use serde_json::{json, Value};
use sigsem_core::abi::AbiValue;
use sigsem_core::hex;
use sigsem_core::model::RiskSignal;
use sigsem_core::Severity;

use super::abi::{Ty, Val};

pub fn leaf_ty() -> impl Strategy<Value = Ty> {
    prop_oneof![
        Just(Ty::Address),
        (1usize..=32).prop_map(|n| Ty::Uint(n * 8)),
        Just(Ty::Bool),
        (1usize..=32).prop_map(Ty::FixedBytes),
        Just(Ty::Bytes),
        Just(Ty::Str),
    ]
}

pub fn any_ty() -> impl Strategy<Value = Ty> {
    prop_oneof![4 => leaf_ty(), 1 => leaf_ty().prop_map(|t| Ty::Array(Box::new(t)))]
}

pub fn val_for(ty: &Ty) -> BoxedStrategy<Val> {
    match ty.clone() {
        Ty::Address => any::<[u8; 20]>().prop_map(Val::Address).boxed(),
        Ty::Uint(bits) => any::<[u8; 32]>()
            .prop_map(move |mut w| {
                for b in w.iter_mut().take(32 - bits / 8) {
                    *b = 0;
                }
                Val::Uint(w)
            })
            .boxed(),
        Ty::Bool => any::<bool>().prop_map(Val::Bool).boxed(),
        Ty::FixedBytes(n) => proptest::collection::vec(any::<u8>(), n).prop_map(Val::FixedBytes).boxed(),
        Ty::Bytes => proptest::collection::vec(any::<u8>(), 0..80).prop_map(Val::Bytes).boxed(),
        Ty::Str => "\\PC{0,40}".prop_map(Val::Str).boxed(),
        Ty::Array(inner) => proptest::collection::vec(val_for(&inner), 0..5).prop_map(Val::Array).boxed(),
    }
}

pub fn case() -> impl Strategy<Value = (Vec<Ty>, Vec<Val>)> {
    proptest::collection::vec(any_ty(), 0..6).prop_flat_map(|tys| {
        let vals: Vec<BoxedStrategy<Val>> = tys.iter().map(val_for).collect();
        (Just(tys), vals)
    })
}

pub fn to_oracle(v: &AbiValue) -> Val {
    match v {
        AbiValue::Address(a) => Val::Address(a.0),
        AbiValue::Uint(x) => Val::Uint(x.to_big_endian()),
        AbiValue::Bool(b) => Val::Bool(*b),
        AbiValue::FixedBytes(b) => Val::FixedBytes(b.clone()),
        AbiValue::Bytes(b) => Val::Bytes(b.clone()),
        AbiValue::String(s) => Val::Str(s.clone()),
        AbiValue::Array(items) => Val::Array(items.iter().map(to_oracle).collect()),
    }
}

pub const ATOMS: &[&str] = &["address", "uint256", "uint64", "uint8", "bool", "bytes32", "bytes4", "bytes", "string"];

pub fn atom_value(ty: &'static str) -> BoxedStrategy<Value> {
    match ty {
        "address" => any::<[u8; 20]>().prop_map(|b| json!(hex::encode(b))).boxed(),
        "uint256" => any::<u128>().prop_map(|n| json!(n.to_string())).boxed(),
        "uint64" => any::<u64>().prop_map(|n| json!(n)).boxed(),
        "uint8" => any::<u8>().prop_map(|n| json!(n)).boxed(),
        "bool" => any::<bool>().prop_map(|b| json!(b)).boxed(),
        "bytes32" => any::<[u8; 32]>().prop_map(|b| json!(hex::encode(b))).boxed(),
        "bytes4" => any::<[u8; 4]>().prop_map(|b| json!(hex::encode(b))).boxed(),
        "bytes" => proptest::collection::vec(any::<u8>(), 0..70).prop_map(|b| json!(hex::encode(b))).boxed(),
        _ => "[a-zA-Z0-9 ]{0,24}".prop_map(|s| json!(s)).boxed(),
    }
}

pub fn flat_struct() -> impl Strategy<Value = Value> {
    (proptest::collection::vec(proptest::sample::select(ATOMS), 1..8), "[a-z]{1,10}", 1u64..100_000).prop_flat_map(
        |(tys, name, chain)| {
            let vals: Vec<BoxedStrategy<Value>> = tys.iter().map(|t| atom_value(t)).collect();
            (Just(tys), Just(name), Just(chain), vals)
        },
    )
    .prop_map(|(tys, name, chain, vals)| {
        let fields: Vec<Value> = tys.iter().enumerate().map(|(i, t)| json!({"name": format!("f{i}"), "type": t})).collect();
        let message: serde_json::Map<String, Value> =
            vals.into_iter().enumerate().map(|(i, v)| (format!("f{i}"), v)).collect();
        json!({
            "types": {
                "EIP712Domain": [
                    {"name": "name", "type": "string"},
                    {"name": "chainId", "type": "uint256"}
                ],
                "Probe": fields
            },
            "primaryType": "Probe",
            "domain": {"name": name, "chainId": chain},
            "message": message
        })
    })
}

pub fn severity() -> impl Strategy<Value = Severity> {
    prop_oneof![Just(Severity::Low), Just(Severity::Medium), Just(Severity::High)]
}

pub fn signal() -> impl Strategy<Value = RiskSignal> {
    ("[a-z_]{1,12}", severity()).prop_map(|(code, severity)| RiskSignal {
        code,
        severity,
        rationale: String::new(),
        evidence: vec![],
    })
}

