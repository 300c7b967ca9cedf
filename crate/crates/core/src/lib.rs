//! Link-level simulator of the OpenVLC1.3 visible-light communication stack.
//!
//! The crate models the whole chain of a unidirectional VLC link built from
//! off-the-shelf parts: a MAC frame codec with Reed-Solomon protection and
//! Manchester line coding, an on-off-keyed LED transmitter driven by a
//! drifting symbol clock, a free-space optical channel with ambient light and
//! fluorescent interference presets, the receiver analog front end
//! (transimpedance amplifier, 10 kHz high-pass, 2.5 V bias, second amplifier,
//! 1.1 MHz low-pass, ADC), the oversampling run-length symbol detector that
//! makes the link immune to bit slip, and the dual-processor
//! producer/consumer pipeline that moves samples and frames between the
//! sampling firmware and the driver.
//!
//! Conventions fixed by this implementation (all byte-exact surfaces depend
//! on them):
//!
//! * Bytes are transmitted most-significant bit first.
//! * The 16-bit frame length field is big-endian.
//! * Preamble (`AA AA AA`) and SFD (`D2`) are line-coded one symbol per bit;
//!   everything after the SFD is Manchester coded (bit 1 -> LOW,HIGH and
//!   bit 0 -> HIGH,LOW).
//! * Reed-Solomon (216,200) over GF(2^8) with primitive polynomial
//!   x^8 + x^4 + x^3 + x^2 + 1 and first consecutive root alpha^1. The field
//!   after the SFD is protected in consecutive blocks of at most 200 data
//!   bytes, each followed (at the end of the frame) by its own 16 parity
//!   bytes; the final block is a shortened codeword.
//! * The ADC rounds half-up to `(2^bits - 1) * v / span` and the slicer calls
//!   a code equal to the threshold LOW.

pub mod afe;
pub mod channel;
pub mod clock;
pub mod coding;
pub mod experiment;
pub mod frame;
pub mod pipeline;
pub mod receiver;
pub mod rs;
pub mod settings;
pub mod waveform;

pub use afe::{adc_sample, afe_process, AdcSampleStream, AfeConfig};
pub use channel::{apply_channel, scenario_preset, ChannelConfig, Scenario};
pub use clock::ClockModel;
pub use coding::{manchester_decode, manchester_encode, Symbol};
pub use experiment::{run_link, LinkConfig, LinkStats};
pub use frame::{build_frame, parse_frame, ParsedFrame};
pub use receiver::{Receiver, RxEvent, SlicerConfig};
pub use rs::{rs_decode_block, rs_encode_block, RsBlock, RsDecode};
pub use waveform::{modulate, AnalogWaveform};
