//! Reference Keccak-256 built straight from the permutation definition:
//! rotation offsets and round constants are derived, not tabulated.

fn rc_bit(t: usize) -> bool {
    // LFSR x^8 + x^6 + x^5 + x^4 + 1
    if t.is_multiple_of(255) {
        return true;
    }
    let mut r: u16 = 1;
    for _ in 0..t % 255 {
        r <<= 1;
        if r & 0x100 != 0 {
            r ^= 0x171;
        }
    }
    r & 1 == 1
}

fn round_constant(round: usize) -> u64 {
    let mut rc = 0u64;
    for j in 0..7 {
        if rc_bit(j + 7 * round) {
            rc |= 1 << ((1 << j) - 1);
        }
    }
    rc
}

fn rotation_offsets() -> [[u32; 5]; 5] {
    let mut r = [[0u32; 5]; 5];
    let (mut x, mut y) = (1usize, 0usize);
    for t in 0..24u32 {
        r[x][y] = ((t + 1) * (t + 2) / 2) % 64;
        let nx = y;
        let ny = (2 * x + 3 * y) % 5;
        x = nx;
        y = ny;
    }
    r
}

fn permute(a: &mut [[u64; 5]; 5]) {
    let rot = rotation_offsets();
    for round in 0..24 {
        // theta
        let c: Vec<u64> = (0..5).map(|x| (0..5).fold(0, |acc, y| acc ^ a[x][y])).collect();
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for lane in a[x].iter_mut() {
                *lane ^= d;
            }
        }
        // rho + pi
        let mut b = [[0u64; 5]; 5];
        for x in 0..5 {
            for y in 0..5 {
                b[y][(2 * x + 3 * y) % 5] = a[x][y].rotate_left(rot[x][y]);
            }
        }
        // chi
        for x in 0..5 {
            for y in 0..5 {
                a[x][y] = b[x][y] ^ (!b[(x + 1) % 5][y] & b[(x + 2) % 5][y]);
            }
        }
        // iota
        a[0][0] ^= round_constant(round);
    }
}

pub fn keccak256(input: &[u8]) -> [u8; 32] {
    const RATE: usize = 136;
    let mut padded = input.to_vec();
    padded.push(0x01);
    while !padded.len().is_multiple_of(RATE) {
        padded.push(0);
    }
    *padded.last_mut().unwrap() |= 0x80;

    let mut state = [[0u64; 5]; 5];
    for block in padded.chunks(RATE) {
        for (i, lane) in block.chunks(8).enumerate() {
            let mut w = [0u8; 8];
            w.copy_from_slice(lane);
            state[i % 5][i / 5] ^= u64::from_le_bytes(w);
        }
        permute(&mut state);
    }
    let mut out = [0u8; 32];
    for i in 0..4 {
        out[8 * i..8 * i + 8].copy_from_slice(&state[i % 5][i / 5].to_le_bytes());
    }
    out
}

pub fn hex(bytes: &[u8]) -> String {
    let mut s = String::from("0x");
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
