//! MAC frame construction and parsing.
//!
//! Byte layout on the air:
//!
//! ```text
//! preamble(3) | sfd(1) | length(2, BE) | dst(2) | src(2) | payload(0..=1500) | parity(16 per block)
//! ```
//!
//! The length field counts the length, destination, source and payload bytes
//! (6 + payload). Everything after the SFD except the parity is Reed-Solomon
//! protected: the protected region is split into consecutive blocks of at
//! most 200 data bytes and each block's 16 parity bytes are appended, in
//! block order, after the payload. The preamble and SFD are transmitted one
//! symbol per bit; the rest of the frame is Manchester coded.

use crate::coding::{
    self, bytes_to_bits, manchester_encode, sync_symbols, Symbol,
};
use crate::rs::{self, rs_decode_block, rs_encode_block, RsDecode};
use thiserror::Error;

/// Maximum payload accepted by the codec.
pub const MAX_PAYLOAD: usize = 1500;
/// Header bytes covered by the length field: length + dst + src.
pub const LENGTH_COVERED_HEADER: usize = 6;
/// Preamble + SFD byte count.
pub const SYNC_LEN: usize = 4;

/// A MAC frame before serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub dst: [u8; 2],
    pub src: [u8; 2],
    pub payload: Vec<u8>,
}

/// A parsed frame body together with the Reed-Solomon verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFrame {
    pub dst: [u8; 2],
    pub src: [u8; 2],
    pub payload: Vec<u8>,
    pub rs: FrameRs,
}

/// Worst Reed-Solomon outcome across the frame's blocks, for frames that
/// were not discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRs {
    Clean,
    Corrected { byte_errors: usize, bit_errors: u32 },
}

/// Result of parsing a frame body: either a frame or a discard because some
/// block was uncorrectable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Frame(ParsedFrame),
    /// At least one Reed-Solomon block had too many errors.
    Discarded { failed_blocks: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte maximum")]
    PayloadTooLarge(usize),
    #[error("frame body truncated: length field implies {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("length field {0} is outside {min}..={max}", min = LENGTH_COVERED_HEADER, max = LENGTH_COVERED_HEADER + MAX_PAYLOAD)]
    BadLengthField(u16),
    #[error(transparent)]
    Rs(#[from] rs::RsError),
}

/// Number of Reed-Solomon blocks protecting `protected_len` bytes.
pub fn block_count(protected_len: usize) -> usize {
    protected_len.div_ceil(rs::MAX_DATA_LEN)
}

/// Total body bytes (everything after the SFD) implied by a length field.
pub fn body_len(length_field: u16) -> usize {
    let protected = length_field as usize;
    protected + rs::PARITY_LEN * block_count(protected)
}

/// Serialized frame size on the air for a given payload size.
pub fn on_air_len(payload_len: usize) -> usize {
    SYNC_LEN + body_len((LENGTH_COVERED_HEADER + payload_len) as u16)
}

/// Builds the full serialized frame: sync bytes plus protected body plus
/// parity.
pub fn build_frame(dst: [u8; 2], src: [u8; 2], payload: &[u8]) -> Result<Vec<u8>, FrameError> {
    let body = frame_body(dst, src, payload)?;
    let mut out = Vec::with_capacity(SYNC_LEN + body.len());
    out.extend_from_slice(&coding::PREAMBLE);
    out.push(coding::SFD);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Builds the body of a frame: length, addresses, payload and the parity of
/// every block. This is the part that is Manchester coded and RS protected.
pub fn frame_body(dst: [u8; 2], src: [u8; 2], payload: &[u8]) -> Result<Vec<u8>, FrameError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLarge(payload.len()));
    }
    let length = (LENGTH_COVERED_HEADER + payload.len()) as u16;

    let mut protected = Vec::with_capacity(length as usize);
    protected.extend_from_slice(&length.to_be_bytes());
    protected.extend_from_slice(&dst);
    protected.extend_from_slice(&src);
    protected.extend_from_slice(payload);

    let mut out = protected.clone();
    for chunk in protected.chunks(rs::MAX_DATA_LEN) {
        let block = rs_encode_block(chunk)?;
        out.extend_from_slice(&block.parity);
    }
    Ok(out)
}

/// All channel symbols of a frame: 32 raw sync symbols followed by the
/// Manchester-coded body.
pub fn frame_symbols(dst: [u8; 2], src: [u8; 2], payload: &[u8]) -> Result<Vec<Symbol>, FrameError> {
    let body = frame_body(dst, src, payload)?;
    let mut symbols = sync_symbols();
    symbols.extend(manchester_encode(&bytes_to_bits(&body)));
    Ok(symbols)
}

/// Parses a received frame body (starting at the length field) and applies
/// Reed-Solomon decoding per block. The outcome is the worst across blocks:
/// any uncorrectable block discards the frame.
pub fn parse_frame(body: &[u8]) -> Result<ParseOutcome, FrameError> {
    if body.len() < 2 {
        return Err(FrameError::Truncated {
            expected: LENGTH_COVERED_HEADER,
            actual: body.len(),
        });
    }
    let length = u16::from_be_bytes([body[0], body[1]]);
    if !length_field_valid(length) {
        return Err(FrameError::BadLengthField(length));
    }
    let expected = body_len(length);
    if body.len() != expected {
        return Err(FrameError::Truncated {
            expected,
            actual: body.len(),
        });
    }

    let protected_len = length as usize;
    let blocks = block_count(protected_len);
    let (data_region, parity_region) = body.split_at(protected_len);

    let mut corrected_data = Vec::with_capacity(protected_len);
    let mut byte_errors = 0usize;
    let mut bit_errors = 0u32;
    let mut failed_blocks = 0usize;

    for (i, chunk) in data_region.chunks(rs::MAX_DATA_LEN).enumerate() {
        debug_assert!(i < blocks);
        let parity = &parity_region[i * rs::PARITY_LEN..(i + 1) * rs::PARITY_LEN];
        let mut codeword = Vec::with_capacity(chunk.len() + rs::PARITY_LEN);
        codeword.extend_from_slice(chunk);
        codeword.extend_from_slice(parity);
        match rs_decode_block(&codeword)? {
            RsDecode::Clean(data) => corrected_data.extend_from_slice(&data),
            RsDecode::Corrected {
                data,
                byte_errors: be,
                bit_errors: bits,
            } => {
                corrected_data.extend_from_slice(&data);
                byte_errors += be;
                bit_errors += bits;
            }
            RsDecode::Uncorrectable => {
                corrected_data.extend_from_slice(chunk);
                failed_blocks += 1;
            }
        }
    }

    if failed_blocks > 0 {
        return Ok(ParseOutcome::Discarded { failed_blocks });
    }

    // RS may have corrected the length field itself; a change would mean the
    // receiver framed the wrong byte count, which cannot be reconciled.
    let corrected_length = u16::from_be_bytes([corrected_data[0], corrected_data[1]]);
    if corrected_length != length {
        return Ok(ParseOutcome::Discarded { failed_blocks: 0 });
    }

    let rs = if byte_errors == 0 {
        FrameRs::Clean
    } else {
        FrameRs::Corrected {
            byte_errors,
            bit_errors,
        }
    };
    Ok(ParseOutcome::Frame(ParsedFrame {
        dst: [corrected_data[2], corrected_data[3]],
        src: [corrected_data[4], corrected_data[5]],
        payload: corrected_data[LENGTH_COVERED_HEADER..].to_vec(),
        rs,
    }))
}

/// Whether a received length field is plausible for this codec.
pub fn length_field_valid(length: u16) -> bool {
    (LENGTH_COVERED_HEADER..=LENGTH_COVERED_HEADER + MAX_PAYLOAD).contains(&(length as usize))
}
