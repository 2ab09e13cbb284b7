use serde_json::{json, Value};
use sigsem_core::abi::decode_calldata;
use sigsem_core::eip712::expand_typed_data;
use sigsem_core::interpret::{build_semantic_frame, classify_method, infer_intent, map_roles, Structure};
use sigsem_core::kb::KnowledgeBase;
use sigsem_core::model::{ConditionKind, ObjectKind, Role};
use sigsem_core::normalize::normalize_request;
use sigsem_core::{data, hex, Decoder, IntentLabel, MethodCategory, SigningRequest};

const SIGNER: &str = "0x4b2a3e7c1d9f8e6a5b4c3d2e1f0a9b8c7d6e5f40";
const NOW: i64 = 1_700_000_000;

fn fixture(n: u8) -> Value {
    let path = format!("{}/data/fixtures/t{n}.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn request(v: &Value) -> SigningRequest {
    normalize_request(&v.to_string(), data::knowledge_base().contracts()).unwrap()
}

fn intent_with(req: &SigningRequest, kb: &KnowledgeBase) -> IntentLabel {
    let tree = req.typed().map(|t| expand_typed_data(t).unwrap());
    let call = req.tx().map(|tx| decode_calldata(&tx.data, data::selectors()).unwrap());
    let structure = match (req.tx(), &call, req.typed(), &tree) {
        (Some(tx), Some(call), _, _) => Structure::Call { call, tx },
        (_, _, Some(typed), Some(tree)) => Structure::Tree { tree, typed },
        _ => req.message_text().map(Structure::Text).unwrap_or(Structure::Opaque),
    };
    let roles = map_roles(structure, kb);
    infer_intent(req, &roles, kb)
}

#[test]
fn corpus_methods_and_intents() {
    let expected = [
        (MethodCategory::PersonalSign, IntentLabel::Login),
        (MethodCategory::TxSign, IntentLabel::Mint),
        (MethodCategory::SignTypedData, IntentLabel::Vote),
        (MethodCategory::SignTypedData, IntentLabel::BridgeOrSwap),
        (MethodCategory::SignTypedData, IntentLabel::Permit),
        (MethodCategory::SignTypedData, IntentLabel::Transfer),
    ];
    for (n, (method, intent)) in (1..=6).zip(expected) {
        let req = request(&fixture(n));
        assert_eq!(classify_method(&req), method, "T{n}");
        assert_eq!(intent_with(&req, data::knowledge_base()), intent, "T{n}");
    }
}

#[test]
fn permit_roles_and_frame() {
    let out = Decoder::builtin().decode(&request(&fixture(5)), NOW).unwrap();
    let spender = out.roles.get(Role::Spender).unwrap();
    assert_eq!(spender.path, "typed.message.spender");
    assert_eq!(out.roles.get(Role::ApprovalLimit).unwrap().path, "typed.message.value");
    assert_eq!(out.roles.get(Role::TokenContract).unwrap().path, "typed.domain.verifyingContract");
    assert_eq!(out.frame.action, IntentLabel::Permit);
    assert_eq!(out.frame.object.kind, ObjectKind::Token);
    assert_eq!(out.frame.object.label, "USD Coin");
    let cp = out.frame.counterparty.as_ref().unwrap();
    assert_eq!(cp.role, Role::Spender);
    assert_eq!(Some(cp.address), spender.value.as_address());
    assert!(out.frame.condition(ConditionKind::AllowanceLimit).is_some());
    assert!(out.frame.condition(ConditionKind::Deadline).is_some());
}

#[test]
fn provenance_resolves_for_corpus() {
    for n in 1..=6 {
        let req = request(&fixture(n));
        let out = Decoder::builtin().decode(&req, NOW).unwrap();
        let f = &out.frame;
        assert!(f.provenance.contains_key("actor") && f.provenance.contains_key("object"), "T{n}");
        assert_eq!(f.provenance.contains_key("counterparty"), f.counterparty.is_some());
        for c in &f.conditions {
            assert_eq!(f.provenance[&format!("condition.{}", c.kind.key())], c.path);
        }
        for (field, path) in &f.provenance {
            assert!(req.resolve(path).is_some(), "T{n} {field} -> {path}");
        }
        for (role, b) in &out.roles.assignments {
            assert!(req.resolve(&b.path).is_some(), "T{n} {role} -> {}", b.path);
        }
    }
}

#[test]
fn approve_calldata_binds_words() {
    let mut data = hex::decode("0x095ea7b3").unwrap();
    data.extend([0u8; 12]);
    data.extend([0x11; 20]);
    data.extend([0xff; 32]);
    let v = json!({
        "method": "eth_sendTransaction",
        "params": [{"from": SIGNER, "to": "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48", "data": hex::encode(&data), "chainId": "0x1"}],
        "context": {"origin": "dex.example", "wallet_chain_id": 1}
    });
    let req = request(&v);
    let out = Decoder::builtin().decode(&req, NOW).unwrap();
    assert_eq!(out.frame.action, IntentLabel::Approve);
    assert_eq!(out.roles.get(Role::Spender).unwrap().path, "tx.data.word.0");
    assert_eq!(out.roles.get(Role::ApprovalLimit).unwrap().path, "tx.data.word.1");
    assert_eq!(out.roles.get(Role::TokenContract).unwrap().path, "tx.to");
    assert_eq!(out.frame.object.label, "USD Coin");
    assert!(req.resolve("tx.data.word.1").is_some());
}

#[test]
fn plain_transfer_and_deployment() {
    let v = json!({
        "method": "eth_sendTransaction",
        "params": [{"from": SIGNER, "to": "0x1111111111111111111111111111111111111111", "value": "0xde0b6b3a7640000", "chainId": "0x1"}],
        "context": {"origin": "pay.example", "wallet_chain_id": 1}
    });
    let out = Decoder::builtin().decode(&request(&v), NOW).unwrap();
    assert_eq!(out.frame.action, IntentLabel::Transfer);
    assert_eq!(out.frame.object.kind, ObjectKind::NativeCurrency);
    assert_eq!(out.frame.counterparty.as_ref().unwrap().path, "tx.to");
    assert!(out.explanation.summary.contains("1 ETH"), "{}", out.explanation.summary);

    let v = json!({
        "method": "eth_sendTransaction",
        "params": [{"from": SIGNER, "data": "0x6080604052", "chainId": "0x1"}],
        "context": {"origin": "deploy.example", "wallet_chain_id": 1}
    });
    let out = Decoder::builtin().decode(&request(&v), NOW).unwrap();
    assert_eq!(out.frame.action, IntentLabel::Unknown);
    assert_eq!(out.frame.object.label, "a new contract");
}

#[test]
fn rules_stay_inside_their_method_class() {
    // Text that names typed-data or selector concepts is still just text.
    let v = json!({
        "method": "personal_sign",
        "params": [hex::encode(b"Permit approve(address,uint256) 0x095ea7b3"), SIGNER],
        "context": {"origin": "x.example", "wallet_chain_id": 1}
    });
    assert_eq!(Decoder::builtin().decode(&request(&v), NOW).unwrap().frame.action, IntentLabel::Unknown);

    // eth_sign never gets an intent, even for login-like text.
    let v = json!({
        "method": "eth_sign",
        "params": [SIGNER, hex::encode(b"Sign in to example.com. Nonce: 12345")],
        "context": {"origin": "example.com", "wallet_chain_id": 1}
    });
    assert_eq!(Decoder::builtin().decode(&request(&v), NOW).unwrap().frame.action, IntentLabel::Unknown);

    // Unknown selector on a transaction.
    let v = json!({
        "method": "eth_sendTransaction",
        "params": [{"from": SIGNER, "to": "0x1111111111111111111111111111111111111111", "data": "0xdeadbeef", "chainId": "0x1"}],
        "context": {"origin": "x.example", "wallet_chain_id": 1}
    });
    assert_eq!(Decoder::builtin().decode(&request(&v), NOW).unwrap().frame.action, IntentLabel::Unknown);
}

#[test]
fn rule_order_only_matters_on_overlap() {
    let kb = data::knowledge_base();
    let mut typed = kb.typed_rules().to_vec();
    typed.reverse();
    let mut text = kb.text_rules().to_vec();
    text.reverse();
    let reversed = kb.with_rule_order(typed, text);
    for n in 1..=6 {
        let req = request(&fixture(n));
        assert_eq!(intent_with(&req, kb), intent_with(&req, &reversed), "T{n}");
    }

    // An overlapping catch-all placed first wins; placed last it never fires.
    let mut catch_all = kb.typed_rules()[0].clone();
    catch_all.primary_type = regex::Regex::new(".*").unwrap();
    catch_all.intent = IntentLabel::Unknown;
    let mut first = vec![catch_all.clone()];
    first.extend(kb.typed_rules().iter().cloned());
    let mut last = kb.typed_rules().to_vec();
    last.push(catch_all);
    let req = request(&fixture(5));
    assert_eq!(intent_with(&req, &kb.with_rule_order(first, kb.text_rules().to_vec())), IntentLabel::Unknown);
    assert_eq!(intent_with(&req, &kb.with_rule_order(last, kb.text_rules().to_vec())), IntentLabel::Permit);
}

#[test]
fn missing_signer_is_an_error() {
    let req = request(&fixture(1));
    let roles = map_roles(Structure::Opaque, data::knowledge_base());
    assert!(roles.is_empty());
    // A request with a signer builds a frame; the fallback object is the message.
    let f = build_semantic_frame(&req, IntentLabel::Unknown, &roles, data::knowledge_base()).unwrap();
    assert_eq!(f.object.path, "message");
}
