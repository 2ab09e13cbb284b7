mod support;

use proptest::prelude::*;
use serde_json::{json, Value};
use sigsem_core::model::Color;
use support::gen::signal;
use sigsem_core::pipeline::DecodeResult;
use sigsem_core::risk::{detect_phishing_signals, detect_unlimited_approval, evaluate_risk, RiskEngine};
use sigsem_core::{data, hex, normalize::normalize_request, Decoder, RiskAssessment, Severity, U256};

const SIGNER: &str = "0x4b2a3e7c1d9f8e6a5b4c3d2e1f0a9b8c7d6e5f40";
const USDC: &str = "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48";
const ROUTER: &str = "0x7a250d5630b4cf539739df2c5dacb4c659f2488d";
const NOW: i64 = 1_700_000_000;

fn approve(spender: &str, amount: U256) -> Value {
    let mut data = hex::decode("0x095ea7b3").unwrap();
    data.extend([0u8; 12]);
    data.extend(hex::decode(spender).unwrap());
    data.extend(amount.to_big_endian());
    json!({
        "method": "eth_sendTransaction",
        "params": [{"from": SIGNER, "to": USDC, "value": "0x0", "data": hex::encode(&data), "chainId": "0x1"}],
        "context": {"origin": "app.uniswap.org", "wallet_chain_id": 1}
    })
}

fn personal(text: &str, origin: &str) -> Value {
    json!({
        "method": "personal_sign",
        "params": [hex::encode(text.as_bytes()), SIGNER],
        "context": {"origin": origin, "wallet_chain_id": 1}
    })
}

fn decode(v: &Value) -> DecodeResult {
    Decoder::builtin().decode_json(&v.to_string(), NOW).unwrap()
}

fn codes(r: &DecodeResult) -> Vec<&str> {
    r.assessment.signals().iter().map(|s| s.code.as_str()).collect()
}

fn fixture(n: u8) -> Value {
    let path = format!("{}/data/fixtures/t{n}.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tier_is_max_and_monotone(signals in proptest::collection::vec(signal(), 0..12), extra in signal()) {
        let a = RiskAssessment::from_signals(signals.clone());
        let expected = signals.iter().map(|s| s.severity).max().unwrap_or(Severity::Low);
        prop_assert_eq!(a.tier(), expected);
        prop_assert_eq!(a.color(), a.tier().color());
        prop_assert_eq!(a.color().severity(), a.tier());
        let b = a.clone().with_signal(extra);
        prop_assert!(b.tier() >= a.tier());
        prop_assert_eq!(b.signals().len(), a.signals().len() + 1);
        // Order-independent.
        let mut rev = signals;
        rev.reverse();
        prop_assert_eq!(RiskAssessment::from_signals(rev), a);
    }

    #[test]
    fn approval_evidence_resolves(bytes in any::<[u8; 20]>(), amount in any::<[u8; 32]>()) {
        let v = approve(&hex::encode(bytes), U256::from_big_endian(&amount));
        let req = normalize_request(&v.to_string(), data::knowledge_base().contracts()).unwrap();
        let out = Decoder::builtin().decode(&req, NOW).unwrap();
        for s in out.assessment.signals() {
            prop_assert!(!s.evidence.is_empty());
            for path in &s.evidence {
                prop_assert!(req.resolve(path).is_some(), "{} -> {}", s.code, path);
            }
        }
    }
}

#[test]
fn severity_color_is_a_bijection() {
    for s in [Severity::Low, Severity::Medium, Severity::High] {
        assert_eq!(s.color().severity(), s);
    }
    assert_eq!(Severity::High.color(), Color::Red);
    assert_eq!(Severity::Medium.color(), Color::Yellow);
    assert_eq!(Severity::Low.color(), Color::Green);
}

#[test]
fn unlimited_approval_boundaries() {
    let max = decode(&approve(ROUTER, U256::MAX));
    assert_eq!(max.assessment.tier(), Severity::High);
    let sig = max.assessment.signals().iter().find(|s| s.code == "unlimited_approval").unwrap();
    assert_eq!(sig.rationale, "Unlimited approval detected: spender may access your entire token balance");
    assert_eq!(detect_unlimited_approval(&max.frame).unwrap().severity, Severity::High);

    let small = decode(&approve(ROUTER, U256::from(100_000_000u64)));
    assert!(detect_unlimited_approval(&small.frame).is_none());
    assert_eq!(small.assessment.tier(), Severity::Low, "{:?}", codes(&small));

    let big = decode(&approve(ROUTER, U256::from(1u8) << 128));
    assert_eq!(codes(&big), ["large_allowance"]);
    assert_eq!(big.assessment.tier(), Severity::Medium);

    let below = decode(&approve(ROUTER, (U256::from(1u8) << 128) - 1));
    assert_eq!(below.assessment.tier(), Severity::Low);
    let almost = decode(&approve(ROUTER, U256::MAX - 1));
    assert!(!codes(&almost).contains(&"unlimited_approval"));
}

#[test]
fn evaluation_is_deterministic() {
    for n in 1..=6 {
        let req = normalize_request(&fixture(n).to_string(), data::knowledge_base().contracts()).unwrap();
        let a = serde_json::to_string(&Decoder::builtin().decode(&req, NOW).unwrap()).unwrap();
        let b = serde_json::to_string(&Decoder::builtin().decode(&req, NOW).unwrap()).unwrap();
        assert_eq!(a, b);
        // A fresh parse differs only in its id.
        let mut c = serde_json::to_value(decode(&fixture(n))).unwrap();
        let mut a: Value = serde_json::from_str(&a).unwrap();
        c["request"]["id"] = Value::Null;
        a["request"]["id"] = Value::Null;
        assert_eq!(a, c);
    }
}

#[test]
fn corpus_evidence_resolves() {
    for n in 1..=6 {
        let req = normalize_request(&fixture(n).to_string(), data::knowledge_base().contracts()).unwrap();
        let out = Decoder::builtin().decode(&req, NOW).unwrap();
        let free = evaluate_risk(&req, &out.frame, req.context(), &out.validation);
        assert_eq!(free, out.assessment, "T{n}");
        for s in out.assessment.signals() {
            for path in &s.evidence {
                assert!(req.resolve(path).is_some(), "T{n} {} -> {path}", s.code);
            }
        }
    }
}

#[test]
fn builtin_engine_mirrors_knowledge_base() {
    let engine = RiskEngine::builtin();
    let kb = data::knowledge_base();
    assert_eq!(engine.rules().len(), kb.risk_rules().len());
    for (a, b) in engine.rules().iter().zip(kb.risk_rules()) {
        assert_eq!(a.spec, b.spec);
    }
    assert!(engine.rule("unlimited_approval").is_some());
    assert!(engine.rule("nonexistent").is_none());
}

#[test]
fn eth_sign_is_deprecated() {
    let v = json!({
        "method": "eth_sign",
        "params": [SIGNER, format!("0x{}", "ab".repeat(32))],
        "context": {"origin": "cheap-mint.xyz", "wallet_chain_id": 1}
    });
    let out = decode(&v);
    assert_eq!(out.assessment.tier(), Severity::High);
    let s = out.assessment.signals().iter().find(|s| s.code == "deprecated_method").unwrap();
    assert_eq!(s.severity, Severity::High);
}

#[test]
fn lure_with_hex_blob() {
    let text = format!("Please verify your account to continue.\n0x{}", "c0ffee".repeat(11));
    let v = personal(&text, "secure-wallet-check.io");
    let req = normalize_request(&v.to_string(), data::knowledge_base().contracts()).unwrap();
    let out = Decoder::builtin().decode(&req, NOW).unwrap();
    let sigs = detect_phishing_signals(&req, &out.frame, req.context());
    let sev = |code: &str| sigs.iter().find(|s| s.code == code).map(|s| s.severity);
    assert_eq!(sev("embedded_hex"), Some(Severity::High));
    assert_eq!(sev("lure_phrasing"), Some(Severity::Medium));
    assert_eq!(out.assessment.tier(), Severity::High);

    // 31 bytes stays under the threshold.
    let short = personal(&format!("hello 0x{}", "ab".repeat(31)), "example.org");
    assert!(!codes(&decode(&short)).contains(&"embedded_hex"));
}

#[test]
fn benign_login_has_no_phishing_signals() {
    let req = normalize_request(&fixture(1).to_string(), data::knowledge_base().contracts()).unwrap();
    let out = Decoder::builtin().decode(&req, NOW).unwrap();
    assert!(detect_phishing_signals(&req, &out.frame, req.context()).is_empty());
    assert_eq!(out.assessment.tier(), Severity::Low);
}

#[test]
fn replay_adds_a_signal() {
    let req = normalize_request(&fixture(2).to_string(), data::knowledge_base().contracts()).unwrap();
    let first = Decoder::builtin().decode_with(&req, NOW, false).unwrap();
    let again = Decoder::builtin().decode_with(&req, NOW, true).unwrap();
    assert!(!codes(&first).contains(&"replayed_payload"));
    assert!(codes(&again).contains(&"replayed_payload"));
    assert!(again.assessment.tier() >= first.assessment.tier());
}
