//! On-off-keying symbols, bit packing and Manchester line coding.
//!
//! A symbol is the unit the LED actually transmits: HIGH means light on,
//! LOW means light off. The preamble and SFD go out one symbol per bit;
//! everything after the SFD is Manchester coded, which bounds runs of equal
//! symbols to two and keeps the average optical power constant.

use thiserror::Error;

/// One on-off-keying channel symbol. Also used for sliced receiver levels,
/// which share the same binary alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Low,
    High,
}

impl Symbol {
    /// The opposite level.
    #[inline]
    pub fn flip(self) -> Symbol {
        match self {
            Symbol::Low => Symbol::High,
            Symbol::High => Symbol::Low,
        }
    }

    #[inline]
    pub fn is_high(self) -> bool {
        matches!(self, Symbol::High)
    }
}

/// Frame preamble bytes: 24 alternating symbols when line-coded raw.
pub const PREAMBLE: [u8; 3] = [0xAA, 0xAA, 0xAA];

/// Start-frame delimiter. Breaks the alternating preamble pattern early
/// (it opens with two HIGHs), contains no run longer than two symbols, and
/// ends LOW so the run never merges with the first body symbol, which is
/// always HIGH because the length field starts with a zero bit.
pub const SFD: u8 = 0xD2;

/// `PREAMBLE` + `SFD` as a 32-bit shift-register image, HIGH = 1, first
/// transmitted symbol in the most significant bit.
pub const SYNC_PATTERN: u32 = u32::from_be_bytes([PREAMBLE[0], PREAMBLE[1], PREAMBLE[2], SFD]);

/// Number of raw symbols in preamble + SFD.
pub const SYNC_SYMBOLS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ManchesterError {
    #[error("symbol stream has odd length {0}")]
    OddLength(usize),
    #[error("invalid symbol pair at pair index {pair_index}")]
    InvalidPair { pair_index: usize },
}

/// Unpacks bytes into bits, most significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for i in (0..8).rev() {
            bits.push(b & (1 << i) != 0);
        }
    }
    bits
}

/// Packs bits (MSB first) back into bytes. The length must be a multiple
/// of eight.
pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    debug_assert!(bits.len().is_multiple_of(8));
    bits.chunks(8)
        .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8))
        .collect()
}

/// Line-codes bytes one symbol per bit (bit 1 -> HIGH). Used for the
/// preamble and SFD only.
pub fn raw_symbols(bytes: &[u8]) -> Vec<Symbol> {
    bytes_to_bits(bytes)
        .into_iter()
        .map(|b| if b { Symbol::High } else { Symbol::Low })
        .collect()
}

/// The 32 raw symbols every frame starts with.
pub fn sync_symbols() -> Vec<Symbol> {
    let mut out = raw_symbols(&PREAMBLE);
    out.extend(raw_symbols(&[SFD]));
    out
}

/// Idle carrier between frames: alternating symbols, always ending LOW so
/// the next preamble's opening HIGH starts a fresh run. A dark (all-LOW)
/// idle would discharge the receiver's AC coupling and the first preamble
/// symbols after it would slice wrong; the carrier keeps the high-pass
/// charged and the average optical power constant.
pub fn idle_symbols(n: usize) -> Vec<Symbol> {
    (0..n)
        .map(|i| {
            if (n - i).is_multiple_of(2) {
                Symbol::High
            } else {
                Symbol::Low
            }
        })
        .collect()
}

/// Manchester-encodes bits: 1 -> (LOW, HIGH), 0 -> (HIGH, LOW).
pub fn manchester_encode(bits: &[bool]) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(bits.len() * 2);
    for &bit in bits {
        if bit {
            out.push(Symbol::Low);
            out.push(Symbol::High);
        } else {
            out.push(Symbol::High);
            out.push(Symbol::Low);
        }
    }
    out
}

/// Decodes Manchester symbol pairs back into bits. An equal pair means the
/// stream is corrupted or desynchronized and is reported with its pair index.
pub fn manchester_decode(symbols: &[Symbol]) -> Result<Vec<bool>, ManchesterError> {
    if !symbols.len().is_multiple_of(2) {
        return Err(ManchesterError::OddLength(symbols.len()));
    }
    symbols
        .chunks(2)
        .enumerate()
        .map(|(i, pair)| match (pair[0], pair[1]) {
            (Symbol::Low, Symbol::High) => Ok(true),
            (Symbol::High, Symbol::Low) => Ok(false),
            _ => Err(ManchesterError::InvalidPair { pair_index: i }),
        })
        .collect()
}
