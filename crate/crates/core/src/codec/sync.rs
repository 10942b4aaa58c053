//! Synchronization pattern, PN whitening stream and sync search.
//!
//! The whitening stream is xorshift64 with shifts (13, 7, 17):
//!
//! ```text
//! state = seed, or 0x9E3779B97F4A7C15 when seed == 0
//! per bit:  state ^= state << 13
//!           state ^= state >> 7
//!           state ^= state << 17
//!           bit = state >> 63
//! ```
//!
//! Each segment restarts the stream from the seed. The transmitted bits of a
//! segment are `(sync ∥ payload chunk) XOR stream`.

/// Sync pattern, sent most significant bit first.
pub const SYNC_PATTERN: u16 = 0xB7C5;
pub const SYNC_PATTERN_BITS: usize = 16;

const ZERO_SEED_REPLACEMENT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Bit stream of the xorshift64 generator described in the module docs.
#[derive(Debug, Clone)]
pub struct PnStream {
    state: u64,
}

impl PnStream {
    pub fn new(seed: u64) -> Self {
        PnStream {
            state: if seed == 0 { ZERO_SEED_REPLACEMENT } else { seed },
        }
    }

    pub fn take_bits(seed: u64, n: usize) -> Vec<u8> {
        PnStream::new(seed).take(n).collect()
    }
}

impl Iterator for PnStream {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state = x;
        Some((x >> 63) as u8)
    }
}

/// The first `len` bits of [`SYNC_PATTERN`].
pub fn sync_code(len: usize) -> Vec<u8> {
    (0..len.min(SYNC_PATTERN_BITS))
        .map(|i| ((SYNC_PATTERN >> (SYNC_PATTERN_BITS - 1 - i)) & 1) as u8)
        .collect()
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Every offset where `sync` matches `decoded` with at most `max_errors` flips.
pub fn locate_sync(decoded: &[u8], sync: &[u8], max_errors: usize) -> Vec<usize> {
    if sync.is_empty() || decoded.len() < sync.len() {
        return Vec::new();
    }
    (0..=decoded.len() - sync.len())
        .filter(|&off| hamming(&decoded[off..off + sync.len()], sync) <= max_errors)
        .collect()
}
