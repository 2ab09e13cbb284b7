mod support;

use proptest::prelude::*;
use sigsem_core::abi::selector_of;
use sigsem_core::eip191::{prefix_hash_personal, PERSONAL_PREFIX};
use sigsem_core::hex;
use support::keccak;

#[test]
fn oracle_matches_published_vectors() {
    assert_eq!(
        keccak::hex(&keccak::keccak256(b"")),
        "0xc5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
    );
    assert_eq!(
        keccak::hex(&keccak::keccak256(b"abc")),
        "0x4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"
    );
    // Exactly one rate block, forcing a second padding block.
    assert_eq!(
        keccak::hex(&keccak::keccak256(&[0u8; 136])),
        "0x3a5912a7c5faa06ee4fe906253e339467a9ce87d533c65be3c15cb231cdb25f9"
    );
}

#[test]
fn library_agrees_with_oracle_on_block_boundaries() {
    for len in [0, 1, 55, 56, 135, 136, 137, 271, 272, 273, 1000] {
        let data: Vec<u8> = (0..len).map(|i| (i * 7 + 3) as u8).collect();
        assert_eq!(hex::keccak256(&data), keccak::keccak256(&data), "length {len}");
    }
}

#[test]
fn selectors_from_oracle() {
    for sig in ["approve(address,uint256)", "transfer(address,uint256)", "setApprovalForAll(address,bool)"] {
        assert_eq!(selector_of(sig).unwrap()[..], keccak::keccak256(sig.as_bytes())[..4]);
    }
    assert_eq!(hex::encode(selector_of("approve(address,uint256)").unwrap()), "0x095ea7b3");
    assert_eq!(hex::encode(selector_of("transfer(address,uint256)").unwrap()), "0xa9059cbb");
    assert!(selector_of("approve(address, uint256)").is_err());
    assert!(selector_of("approve(address spender,uint256)").is_err());
}

fn personal_oracle(msg: &[u8]) -> [u8; 32] {
    let mut buf = b"\x19Ethereum Signed Message:\n".to_vec();
    buf.extend_from_slice(msg.len().to_string().as_bytes());
    buf.extend_from_slice(msg);
    keccak::keccak256(&buf)
}

#[test]
fn personal_prefix_examples() {
    assert_eq!(PERSONAL_PREFIX.len(), 26);
    assert_eq!(prefix_hash_personal(b"hello"), personal_oracle(b"hello"));
    assert_eq!(
        prefix_hash_personal(b""),
        keccak::keccak256(b"\x19Ethereum Signed Message:\n0")
    );
    assert_eq!(prefix_hash_personal(b"same"), prefix_hash_personal(b"same"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn keccak_matches_oracle(data in proptest::collection::vec(any::<u8>(), 0..600)) {
        prop_assert_eq!(hex::keccak256(&data), keccak::keccak256(&data));
    }

    #[test]
    fn personal_sign_matches_oracle(msg in proptest::collection::vec(any::<u8>(), 0..400)) {
        prop_assert_eq!(prefix_hash_personal(&msg), personal_oracle(&msg));
    }
}
