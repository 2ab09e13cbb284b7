//! `personal_sign` message hashing.

use crate::hex::keccak256;

/// The 26-byte prefix `0x19 "Ethereum Signed Message:\n"`.
pub const PERSONAL_PREFIX: &[u8; 26] = b"\x19Ethereum Signed Message:\n";

/// keccak(prefix ‖ decimal byte length ‖ message).
pub fn prefix_hash_personal(message: &[u8]) -> [u8; 32] {
    let len = message.len().to_string();
    let mut buf = Vec::with_capacity(PERSONAL_PREFIX.len() + len.len() + message.len());
    buf.extend_from_slice(PERSONAL_PREFIX);
    buf.extend_from_slice(len.as_bytes());
    buf.extend_from_slice(message);
    keccak256(&buf)
}
