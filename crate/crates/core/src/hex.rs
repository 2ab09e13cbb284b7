//! Hex and digest helpers shared by every layer.
//!
//! Input is accepted with or without a `0x` prefix in either case; output is
//! always lower-case and `0x`-prefixed.

use sha3::{Digest, Keccak256};

use crate::error::HexError;

/// Keccak-256 (the pre-standard padding used by Ethereum, not SHA3-256).
pub fn keccak256(data: impl AsRef<[u8]>) -> [u8; 32] {
    let mut hasher = Keccak256::new();
    hasher.update(data.as_ref());
    hasher.finalize().into()
}

/// Strips an optional `0x`/`0X` prefix.
pub fn strip_prefix(s: &str) -> &str {
    s.strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s)
}

pub fn decode(s: &str) -> Result<Vec<u8>, HexError> {
    let digits = strip_prefix(s.trim());
    if !digits.len().is_multiple_of(2) {
        return Err(HexError::OddLength(s.to_string()));
    }
    let bytes = digits.as_bytes();
    let mut out = Vec::with_capacity(bytes.len() / 2);
    for pair in bytes.chunks_exact(2) {
        let hi = nibble(pair[0]).ok_or_else(|| HexError::InvalidDigit(s.to_string()))?;
        let lo = nibble(pair[1]).ok_or_else(|| HexError::InvalidDigit(s.to_string()))?;
        out.push((hi << 4) | lo);
    }
    Ok(out)
}

/// Decodes into a fixed-width array, requiring an exact length.
pub fn decode_fixed<const N: usize>(s: &str) -> Result<[u8; N], HexError> {
    let bytes = decode(s)?;
    bytes
        .as_slice()
        .try_into()
        .map_err(|_| HexError::Length { expected: N, actual: bytes.len() })
}

pub fn encode(bytes: impl AsRef<[u8]>) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let bytes = bytes.as_ref();
    let mut out = String::with_capacity(2 + bytes.len() * 2);
    out.push_str("0x");
    for b in bytes {
        out.push(DIGITS[(b >> 4) as usize] as char);
        out.push(DIGITS[(b & 0xf) as usize] as char);
    }
    out
}

fn nibble(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        b'A'..=b'F' => Some(c - b'A' + 10),
        _ => None,
    }
}

/// Serde adapter for byte strings rendered as `0x…` hex.
pub mod serde_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        super::decode(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_digest() {
        assert_eq!(
            encode(keccak256(b"")),
            "0xc5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
        );
    }

    #[test]
    fn prefix_and_case_insensitive() {
        assert_eq!(decode("0xDEADbeef").unwrap(), vec![0xde, 0xad, 0xbe, 0xef]);
        assert_eq!(decode("deadbeef").unwrap(), vec![0xde, 0xad, 0xbe, 0xef]);
        assert_eq!(decode("0X").unwrap(), Vec::<u8>::new());
        assert_eq!(encode([0xAB, 0x01]), "0xab01");
    }

    #[test]
    fn rejects_bad_hex() {
        assert!(matches!(decode("0xabc"), Err(HexError::OddLength(_))));
        assert!(matches!(decode("0xzz"), Err(HexError::InvalidDigit(_))));
        assert!(matches!(
            decode_fixed::<4>("0x0102"),
            Err(HexError::Length { expected: 4, actual: 2 })
        ));
    }
}
