//! Test oracles (`abi`, `eip712`, `keccak`) written independently of the
//! library, shared proptest strategies (`gen`) and synthetic study data
//! (`study`).
#![allow(dead_code)]

pub mod abi;
pub mod eip712;
pub mod gen;
pub mod keccak;
pub mod study;
