//! Reference ABI encoder (head/tail layout) for the supported type subset.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Address,
    Uint(usize),
    Bool,
    FixedBytes(usize),
    Bytes,
    Str,
    Array(Box<Ty>),
}

impl Ty {
    pub fn name(&self) -> String {
        match self {
            Ty::Address => "address".into(),
            Ty::Uint(bits) => format!("uint{bits}"),
            Ty::Bool => "bool".into(),
            Ty::FixedBytes(n) => format!("bytes{n}"),
            Ty::Bytes => "bytes".into(),
            Ty::Str => "string".into(),
            Ty::Array(inner) => format!("{}[]", inner.name()),
        }
    }

    fn dynamic(&self) -> bool {
        matches!(self, Ty::Bytes | Ty::Str | Ty::Array(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Address([u8; 20]),
    /// Big-endian 32-byte word.
    Uint([u8; 32]),
    Bool(bool),
    FixedBytes(Vec<u8>),
    Bytes(Vec<u8>),
    Str(String),
    Array(Vec<Val>),
}

fn word_usize(n: usize) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[24..].copy_from_slice(&(n as u64).to_be_bytes());
    w
}

fn padded(data: &[u8]) -> Vec<u8> {
    let mut out = data.to_vec();
    while !out.len().is_multiple_of(32) {
        out.push(0);
    }
    out
}

fn encode_static(v: &Val) -> [u8; 32] {
    let mut w = [0u8; 32];
    match v {
        Val::Address(a) => w[12..].copy_from_slice(a),
        Val::Uint(x) => w = *x,
        Val::Bool(b) => w[31] = *b as u8,
        Val::FixedBytes(b) => w[..b.len()].copy_from_slice(b),
        _ => unreachable!("dynamic value in static slot"),
    }
    w
}

fn encode_tail(ty: &Ty, v: &Val) -> Vec<u8> {
    match (ty, v) {
        (Ty::Bytes, Val::Bytes(b)) => [word_usize(b.len()).to_vec(), padded(b)].concat(),
        (Ty::Str, Val::Str(s)) => [word_usize(s.len()).to_vec(), padded(s.as_bytes())].concat(),
        (Ty::Array(inner), Val::Array(items)) => {
            let tys = vec![(**inner).clone(); items.len()];
            [word_usize(items.len()).to_vec(), encode_tuple(&tys, items)].concat()
        }
        _ => panic!("type/value mismatch: {ty:?} {v:?}"),
    }
}

/// Encodes a tuple of values: static heads inline, dynamic values as offsets
/// into the tail section.
pub fn encode_tuple(tys: &[Ty], vals: &[Val]) -> Vec<u8> {
    assert_eq!(tys.len(), vals.len());
    let head_len = 32 * tys.len();
    let mut head = Vec::with_capacity(head_len);
    let mut tail = Vec::new();
    for (ty, v) in tys.iter().zip(vals) {
        if ty.dynamic() {
            head.extend_from_slice(&word_usize(head_len + tail.len()));
            tail.extend(encode_tail(ty, v));
        } else {
            head.extend_from_slice(&encode_static(v));
        }
    }
    [head, tail].concat()
}

pub fn signature(name: &str, tys: &[Ty]) -> String {
    let args: Vec<String> = tys.iter().map(Ty::name).collect();
    format!("{name}({})", args.join(","))
}

pub fn encode_call(name: &str, tys: &[Ty], vals: &[Val]) -> Vec<u8> {
    let digest = super::keccak::keccak256(signature(name, tys).as_bytes());
    [digest[..4].to_vec(), encode_tuple(tys, vals)].concat()
}
