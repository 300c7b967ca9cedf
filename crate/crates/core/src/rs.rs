//! Reed-Solomon (216,200) encoder and decoder over GF(2^8).
//!
//! The code protects up to 200 data bytes with 16 parity bytes and corrects
//! up to 8 byte errors per block. Encoding is systematic, so the data bytes
//! appear unchanged in the codeword, followed by the parity. Shorter blocks
//! are handled as shortened codewords (virtual leading zero bytes that are
//! never transmitted).
//!
//! Field convention: primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D),
//! generator element alpha = 2, generator polynomial roots alpha^1..alpha^16.
//! The decoder is syndrome based: Berlekamp-Massey for the error locator,
//! Chien search for the error positions and Forney's formula for the
//! magnitudes.

use thiserror::Error;

/// Parity bytes appended to every block.
pub const PARITY_LEN: usize = 16;
/// Maximum data bytes per block.
pub const MAX_DATA_LEN: usize = 200;
/// Maximum codeword length (data + parity).
pub const MAX_CODEWORD_LEN: usize = MAX_DATA_LEN + PARITY_LEN;
/// Byte errors correctable per block: (216 - 200) / 2.
pub const MAX_CORRECTABLE: usize = PARITY_LEN / 2;

const GF_POLY: u16 = 0x11D;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= GF_POLY;
        }
        i += 1;
    }
    // Second copy so products of two logs index without a modulo.
    let mut j = 255;
    while j < 512 {
        exp[j] = exp[j - 255];
        j += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
const EXP: [u8; 512] = TABLES.0;
const LOG: [u8; 256] = TABLES.1;

#[inline]
const fn gf_mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
    }
}

#[inline]
const fn gf_div(a: u8, b: u8) -> u8 {
    // b must be nonzero
    if a == 0 {
        0
    } else {
        EXP[LOG[a as usize] as usize + 255 - LOG[b as usize] as usize]
    }
}

/// Generator polynomial, descending powers, g[0] = 1 (monic, degree 16).
const fn build_generator() -> [u8; PARITY_LEN + 1] {
    let mut g = [0u8; PARITY_LEN + 1];
    g[0] = 1;
    let mut deg = 0;
    let mut i = 1;
    while i <= PARITY_LEN {
        let root = EXP[i]; // alpha^i
        let mut j = deg + 1;
        while j >= 1 {
            g[j] = g[j] ^ gf_mul(root, g[j - 1]);
            j -= 1;
        }
        deg += 1;
        i += 1;
    }
    g
}

const GENERATOR: [u8; PARITY_LEN + 1] = build_generator();

/// A systematic codeword: data bytes plus 16 parity bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsBlock {
    pub data: Vec<u8>,
    pub parity: [u8; PARITY_LEN],
}

impl RsBlock {
    /// Codeword bytes on the wire: data followed by parity.
    pub fn codeword(&self) -> Vec<u8> {
        let mut out = self.data.clone();
        out.extend_from_slice(&self.parity);
        out
    }
}

/// The three decode outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RsDecode {
    /// No errors detected; data returned as received.
    Clean(Vec<u8>),
    /// Errors were found and corrected.
    Corrected {
        data: Vec<u8>,
        /// Byte positions corrected.
        byte_errors: usize,
        /// Bits flipped across all corrected bytes.
        bit_errors: u32,
    },
    /// More errors than the code can correct.
    Uncorrectable,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsError {
    #[error("block data must be 1..={MAX_DATA_LEN} bytes, got {0}")]
    BadDataLen(usize),
    #[error("codeword must be {min}..={max} bytes, got {actual}", min = PARITY_LEN + 1, max = MAX_CODEWORD_LEN)]
    BadCodewordLen { actual: usize },
}

/// Computes the 16 parity bytes for up to 200 data bytes.
pub fn rs_encode_block(data: &[u8]) -> Result<RsBlock, RsError> {
    if data.is_empty() || data.len() > MAX_DATA_LEN {
        return Err(RsError::BadDataLen(data.len()));
    }
    let mut parity = [0u8; PARITY_LEN];
    for &d in data {
        let f = d ^ parity[0];
        for j in 0..PARITY_LEN - 1 {
            parity[j] = parity[j + 1] ^ gf_mul(f, GENERATOR[j + 1]);
        }
        parity[PARITY_LEN - 1] = gf_mul(f, GENERATOR[PARITY_LEN]);
    }
    Ok(RsBlock {
        data: data.to_vec(),
        parity,
    })
}

/// Decodes a codeword of `data_len + 16` bytes into one of the three outcomes.
pub fn rs_decode_block(codeword: &[u8]) -> Result<RsDecode, RsError> {
    let n = codeword.len();
    if n <= PARITY_LEN || n > MAX_CODEWORD_LEN {
        return Err(RsError::BadCodewordLen { actual: n });
    }
    let data_len = n - PARITY_LEN;

    let syndromes = compute_syndromes(codeword);
    if syndromes.iter().all(|&s| s == 0) {
        return Ok(RsDecode::Clean(codeword[..data_len].to_vec()));
    }

    let (sigma, deg) = berlekamp_massey(&syndromes);
    if deg == 0 || deg > MAX_CORRECTABLE {
        return Ok(RsDecode::Uncorrectable);
    }

    // Chien search over the transmitted positions only; index j carries the
    // coefficient of x^(n-1-j).
    let mut positions = Vec::with_capacity(deg);
    for j in 0..n {
        let p = (n - 1 - j) as u16;
        let x_inv = EXP[(255 - p % 255) as usize % 255];
        if poly_eval(&sigma[..=deg], x_inv) == 0 {
            positions.push(j);
        }
    }
    if positions.len() != deg {
        return Ok(RsDecode::Uncorrectable);
    }

    // Omega(x) = S(x) * sigma(x) mod x^16, with S(x) = S1 + S2 x + ...
    let mut omega = [0u8; PARITY_LEN];
    for (i, om) in omega.iter_mut().enumerate() {
        let mut acc = 0u8;
        for k in 0..=i.min(deg) {
            acc ^= gf_mul(sigma[k], syndromes[i - k]);
        }
        *om = acc;
    }

    let mut corrected = codeword.to_vec();
    let mut bit_errors = 0u32;
    for &j in &positions {
        let p = (n - 1 - j) as u16;
        let x_inv = EXP[(255 - p % 255) as usize % 255];
        // Formal derivative keeps the odd-power coefficients only.
        let mut denom = 0u8;
        let mut i = 1;
        while i <= deg {
            let mut term = sigma[i];
            for _ in 0..i - 1 {
                term = gf_mul(term, x_inv);
            }
            denom ^= term;
            i += 2;
        }
        if denom == 0 {
            return Ok(RsDecode::Uncorrectable);
        }
        let num = poly_eval(&omega, x_inv);
        let magnitude = gf_div(num, denom);
        if magnitude == 0 {
            return Ok(RsDecode::Uncorrectable);
        }
        corrected[j] ^= magnitude;
        bit_errors += magnitude.count_ones();
    }

    // A failed recheck means the locator was inconsistent with the received
    // word (more errors than correctable).
    if compute_syndromes(&corrected).iter().any(|&s| s != 0) {
        return Ok(RsDecode::Uncorrectable);
    }

    Ok(RsDecode::Corrected {
        data: corrected[..data_len].to_vec(),
        byte_errors: deg,
        bit_errors,
    })
}

fn compute_syndromes(codeword: &[u8]) -> [u8; PARITY_LEN] {
    let mut syndromes = [0u8; PARITY_LEN];
    for (i, syn) in syndromes.iter_mut().enumerate() {
        let alpha_i = EXP[i + 1];
        let mut acc = 0u8;
        for &b in codeword {
            acc = gf_mul(acc, alpha_i) ^ b;
        }
        *syn = acc;
    }
    syndromes
}

/// Evaluates a polynomial with ascending coefficients at `x`.
fn poly_eval(poly: &[u8], x: u8) -> u8 {
    let mut acc = 0u8;
    for &c in poly.iter().rev() {
        acc = gf_mul(acc, x) ^ c;
    }
    acc
}

/// Returns (sigma, degree) of the error locator polynomial.
fn berlekamp_massey(syndromes: &[u8; PARITY_LEN]) -> ([u8; PARITY_LEN + 1], usize) {
    let mut sigma = [0u8; PARITY_LEN + 1];
    let mut prev = [0u8; PARITY_LEN + 1];
    sigma[0] = 1;
    prev[0] = 1;
    let mut l = 0usize;
    let mut m = 1usize;
    let mut b = 1u8;

    for n in 0..PARITY_LEN {
        let mut delta = syndromes[n];
        for i in 1..=l {
            delta ^= gf_mul(sigma[i], syndromes[n - i]);
        }
        if delta == 0 {
            m += 1;
        } else if 2 * l <= n {
            let t = sigma;
            let scale = gf_div(delta, b);
            for i in 0..=PARITY_LEN - m {
                sigma[i + m] ^= gf_mul(scale, prev[i]);
            }
            prev = t;
            l = n + 1 - l;
            b = delta;
            m = 1;
        } else {
            let scale = gf_div(delta, b);
            for i in 0..=PARITY_LEN - m {
                sigma[i + m] ^= gf_mul(scale, prev[i]);
            }
            m += 1;
        }
    }

    let mut deg = 0;
    for (i, &c) in sigma.iter().enumerate() {
        if c != 0 {
            deg = i;
        }
    }
    (sigma, deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gf_tables_are_consistent() {
        for a in 1..=255u16 {
            let a = a as u8;
            assert_eq!(gf_mul(a, gf_div(1, a)), 1, "inverse of {a}");
        }
        assert_eq!(gf_mul(0, 7), 0);
        // alpha^8 = alpha^4 + alpha^3 + alpha^2 + 1 under 0x11D
        assert_eq!(EXP[8], 0x1D);
    }

    #[test]
    fn zero_data_gives_zero_parity() {
        let block = rs_encode_block(&[0u8; 200]).unwrap();
        assert_eq!(block.parity, [0u8; PARITY_LEN]);
    }

    #[test]
    fn clean_codeword_decodes_clean() {
        let data: Vec<u8> = (0..200u16).map(|i| (i * 7 + 3) as u8).collect();
        let block = rs_encode_block(&data).unwrap();
        assert_eq!(rs_decode_block(&block.codeword()).unwrap(), RsDecode::Clean(data));
    }

    #[test]
    fn single_byte_error_is_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<u8> = (0..200).map(|_| rng.random()).collect();
        let block = rs_encode_block(&data).unwrap();
        for pos in [0usize, 1, 99, 199, 200, 215] {
            let mut word = block.codeword();
            word[pos] ^= 0x5A;
            match rs_decode_block(&word).unwrap() {
                RsDecode::Corrected {
                    data: got,
                    byte_errors,
                    bit_errors,
                } => {
                    assert_eq!(got, data);
                    assert_eq!(byte_errors, 1);
                    assert_eq!(bit_errors, 0x5Au8.count_ones());
                }
                other => panic!("expected correction at {pos}, got {other:?}"),
            }
        }
    }

    #[test]
    fn corrects_up_to_eight_errors_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let data: Vec<u8> = (0..200).map(|_| rng.random()).collect();
            let block = rs_encode_block(&data).unwrap();
            let mut word = block.codeword();
            let n_err = rng.random_range(1..=8);
            let mut hit = std::collections::HashSet::new();
            while hit.len() < n_err {
                hit.insert(rng.random_range(0..word.len()));
            }
            for &p in &hit {
                word[p] ^= rng.random_range(1..=255u8);
            }
            match rs_decode_block(&word).unwrap() {
                RsDecode::Corrected { data: got, byte_errors, .. } => {
                    assert_eq!(got, data);
                    assert_eq!(byte_errors, n_err);
                }
                other => panic!("{n_err} errors not corrected: {other:?}"),
            }
        }
    }

    #[test]
    fn nine_errors_never_pass_as_clean() {
        // one past the correction budget: the decoder may give up or
        // miscorrect onto another codeword, but it can neither return the
        // corrupted word as clean (that would need a 17-byte distance) nor
        // recover the original (that would need 9 corrections)
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..300 {
            let data: Vec<u8> = (0..200).map(|_| rng.random()).collect();
            let mut word = rs_encode_block(&data).unwrap().codeword();
            let mut hit = std::collections::HashSet::new();
            while hit.len() < 9 {
                hit.insert(rng.random_range(0..word.len()));
            }
            for &p in &hit {
                word[p] ^= rng.random_range(1..=255u8);
            }
            match rs_decode_block(&word).unwrap() {
                RsDecode::Uncorrectable => {}
                RsDecode::Corrected { data: got, .. } => assert_ne!(got, data),
                RsDecode::Clean(_) => panic!("9 errors decoded clean"),
            }
        }
    }

    #[test]
    fn twelve_errors_mostly_uncorrectable() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut uncorrectable = 0;
        let trials = 500;
        for _ in 0..trials {
            let data: Vec<u8> = (0..200).map(|_| rng.random()).collect();
            let mut word = rs_encode_block(&data).unwrap().codeword();
            let mut hit = std::collections::HashSet::new();
            while hit.len() < 12 {
                hit.insert(rng.random_range(0..word.len()));
            }
            for &p in &hit {
                word[p] ^= rng.random_range(1..=255u8);
            }
            match rs_decode_block(&word).unwrap() {
                RsDecode::Uncorrectable => uncorrectable += 1,
                // Miscorrections may happen; they must never echo the
                // corrupted word back as clean.
                RsDecode::Corrected { data: got, .. } => assert_ne!(got, data),
                RsDecode::Clean(_) => panic!("12 errors reported clean"),
            }
        }
        assert!(uncorrectable >= trials * 99 / 100, "{uncorrectable}/{trials}");
    }

    #[test]
    fn shortened_block_roundtrip() {
        let data = [1u8, 2, 3, 4, 5, 6];
        let block = rs_encode_block(&data).unwrap();
        let mut word = block.codeword();
        assert_eq!(word.len(), 22);
        // exhaustive single-byte corruption
        for pos in 0..word.len() {
            for mag in [1u8, 0xFF] {
                word[pos] ^= mag;
                match rs_decode_block(&word).unwrap() {
                    RsDecode::Corrected { data: got, byte_errors: 1, .. } => {
                        assert_eq!(got, data);
                    }
                    other => panic!("pos {pos} mag {mag}: {other:?}"),
                }
                word[pos] ^= mag;
            }
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(rs_encode_block(&[]).is_err());
        assert!(rs_encode_block(&[0u8; 201]).is_err());
        assert!(rs_decode_block(&[0u8; 16]).is_err());
        assert!(rs_decode_block(&[0u8; 217]).is_err());
    }
}
