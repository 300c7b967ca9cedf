//! Receiver firmware model: slicing, run-length symbol detection, frame
//! sync and frame extraction.
//!
//! The symbol detector is the part that makes the link immune to bit slip.
//! With the sampling rate strictly between twice and three times the symbol
//! rate, every symbol is sampled two or three times and runs of two equal
//! symbols are sampled four or five times, so counting samples between level
//! changes recovers the symbol stream without ever tracking the transmit
//! clock: a run of 2-3 samples is one symbol, a run of 4-5 samples is two
//! symbols. Runs of six or more samples cannot occur inside a valid
//! Manchester body and signal loss of synchronization. One-sample runs
//! cannot be produced by a real symbol either and are absorbed into the
//! surrounding run as noise glitches.
//!
//! Frame detection shifts detected symbols through a 32-symbol register and
//! fires exactly on the raw preamble + SFD image. The body is then
//! Manchester-decoded on the fly: the length field first, then exactly the
//! indicated bytes plus parity. The final body symbol is implied by the
//! Manchester mid-bit transition, so a frame completes one symbol early and
//! a trailing LOW that merges into inter-frame idle costs nothing.

use crate::coding::{bits_to_bytes, Symbol, SYNC_PATTERN};
use crate::frame::{self, ParseOutcome, ParsedFrame};
use std::fmt;

/// Threshold comparator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlicerConfig {
    /// Codes strictly above this are HIGH (with zero hysteresis).
    pub threshold_code: u16,
    /// Hysteresis in codes around the threshold.
    pub hysteresis: u16,
}

impl Default for SlicerConfig {
    fn default() -> Self {
        // the high-pass recenters the signal on the bias, so the bias code
        // is the natural slicing point
        SlicerConfig {
            threshold_code: 2048,
            hysteresis: 0,
        }
    }
}

/// Stateful slicer; with nonzero hysteresis the decision depends on the
/// current level.
#[derive(Debug, Clone, Copy)]
pub struct Slicer {
    cfg: SlicerConfig,
    level: Symbol,
}

impl Slicer {
    pub fn new(cfg: SlicerConfig) -> Self {
        Slicer {
            cfg,
            level: Symbol::Low,
        }
    }

    #[inline]
    pub fn slice_code(&mut self, code: u16) -> Symbol {
        let code = code as i32;
        let threshold = self.cfg.threshold_code as i32;
        let hysteresis = self.cfg.hysteresis as i32;
        self.level = match self.level {
            Symbol::Low if code > threshold + hysteresis => Symbol::High,
            Symbol::High if code <= threshold - hysteresis => Symbol::Low,
            level => level,
        };
        self.level
    }
}

/// One-shot slicing of a code sequence. A code equal to the threshold
/// slices LOW.
pub fn slice(codes: &[u16], cfg: SlicerConfig) -> Vec<Symbol> {
    let mut slicer = Slicer::new(cfg);
    codes.iter().map(|&c| slicer.slice_code(c)).collect()
}

/// What a closed run maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutput {
    Symbol(Symbol),
    /// A run too long for any valid symbol pattern; loss of sync when it
    /// happens inside a frame.
    LongRun { level: Symbol, samples: u32 },
}

/// Streaming run-length detector with glitch absorption.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunLengthDetector {
    current: Option<(Symbol, u32)>,
    /// Most recently closed run, held back one step so a one-sample glitch
    /// can be absorbed back into it.
    pending: Option<(Symbol, u32)>,
}

impl RunLengthDetector {
    pub fn new() -> Self {
        Self::default()
    }

    fn emit(run: (Symbol, u32), out: &mut Vec<RunOutput>) {
        let (level, n) = run;
        match n {
            0 | 1 => {}
            2 | 3 => out.push(RunOutput::Symbol(level)),
            4 | 5 => {
                out.push(RunOutput::Symbol(level));
                out.push(RunOutput::Symbol(level));
            }
            _ => out.push(RunOutput::LongRun { level, samples: n }),
        }
    }

    /// Feeds one sliced level; closed runs are appended to `out`.
    pub fn push(&mut self, level: Symbol, out: &mut Vec<RunOutput>) {
        match self.current {
            None => self.current = Some((level, 1)),
            Some((cur, n)) if cur == level => self.current = Some((cur, n + 1)),
            Some((cur, n)) => {
                if n == 1 {
                    // a single deviating sample between two runs of `level`;
                    // treat it as noise and resume the previous run
                    match self.pending.take() {
                        Some((prev, m)) => {
                            debug_assert_eq!(prev, level);
                            self.current = Some((prev, m + 2));
                        }
                        None => self.current = Some((level, 1)),
                    }
                } else {
                    if let Some(run) = self.pending.replace((cur, n)) {
                        Self::emit(run, out);
                    }
                    self.current = Some((level, 1));
                }
            }
        }
    }

    /// Closes the held-back and open runs at end of stream.
    pub fn flush(&mut self, out: &mut Vec<RunOutput>) {
        if let Some(run) = self.pending.take() {
            Self::emit(run, out);
        }
        if let Some(run) = self.current.take() {
            Self::emit(run, out);
        }
    }
}

/// One-shot run-length detection over a finite level sequence. Returns the
/// detected symbols and the lengths of any over-long runs.
pub fn run_length_detect(levels: &[Symbol]) -> (Vec<Symbol>, Vec<u32>) {
    let mut detector = RunLengthDetector::new();
    let mut raw = Vec::new();
    for &level in levels {
        detector.push(level, &mut raw);
    }
    detector.flush(&mut raw);
    let mut symbols = Vec::with_capacity(raw.len());
    let mut long_runs = Vec::new();
    for item in raw {
        match item {
            RunOutput::Symbol(s) => symbols.push(s),
            RunOutput::LongRun { samples, .. } => long_runs.push(samples),
        }
    }
    (symbols, long_runs)
}

/// 32-symbol shift register matched against the preamble + SFD image.
/// Cannot fire before 32 symbols have been shifted because the pattern's
/// first symbol is HIGH.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyncDetector {
    register: u32,
}

impl SyncDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shifts one symbol in; true exactly when the register equals the sync
    /// pattern.
    #[inline]
    pub fn push(&mut self, symbol: Symbol) -> bool {
        self.register = (self.register << 1) | symbol.is_high() as u32;
        self.register == SYNC_PATTERN
    }
}

/// Why a frame in progress was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    /// Reed-Solomon gave up on at least one block.
    RsUncorrectable,
    /// Two equal symbols where a Manchester pair was expected.
    InvalidPair,
    /// An over-long run occurred mid-frame.
    SyncLoss,
    /// The decoded length field is impossible.
    BadLength,
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiscardReason::RsUncorrectable => "rs_uncorrectable",
            DiscardReason::InvalidPair => "invalid_pair",
            DiscardReason::SyncLoss => "sync_loss",
            DiscardReason::BadLength => "bad_length",
        };
        f.write_str(s)
    }
}

/// Structured receiver events, in stream order. `sample` is the index of
/// the ADC sample that triggered the event.
#[derive(Debug, Clone, PartialEq)]
pub enum RxEvent {
    FrameStart { sample: u64 },
    FrameOk { sample: u64, frame: ParsedFrame },
    FrameCorrected { sample: u64, frame: ParsedFrame },
    FrameDiscarded { sample: u64, reason: DiscardReason },
    SyncLoss { sample: u64, run_samples: u32 },
}

impl RxEvent {
    /// One-line log form.
    pub fn log_line(&self) -> String {
        match self {
            RxEvent::FrameStart { sample } => format!("{sample} frame_start"),
            RxEvent::FrameOk { sample, frame } => format!(
                "{sample} frame_ok dst={:02x}{:02x} src={:02x}{:02x} payload_len={}",
                frame.dst[0], frame.dst[1], frame.src[0], frame.src[1], frame.payload.len()
            ),
            RxEvent::FrameCorrected { sample, frame } => format!(
                "{sample} frame_corrected dst={:02x}{:02x} src={:02x}{:02x} payload_len={}",
                frame.dst[0], frame.dst[1], frame.src[0], frame.src[1], frame.payload.len()
            ),
            RxEvent::FrameDiscarded { sample, reason } => {
                format!("{sample} frame_discarded reason={reason}")
            }
            RxEvent::SyncLoss {
                sample,
                run_samples,
            } => format!("{sample} sync_loss run_samples={run_samples}"),
        }
    }
}

#[derive(Debug)]
enum Mode {
    Searching,
    Receiving(Body),
}

#[derive(Debug)]
struct Body {
    bits: Vec<bool>,
    pair_first: Option<Symbol>,
    symbols_seen: usize,
    /// Total body symbols once the length field is known.
    expected_symbols: Option<usize>,
}

impl Body {
    fn new() -> Self {
        Body {
            bits: Vec::new(),
            pair_first: None,
            symbols_seen: 0,
            expected_symbols: None,
        }
    }
}

/// Sequential receiver state machine over one ADC code stream. Feeding it
/// in chunks produces exactly the same events as feeding it in one call.
#[derive(Debug)]
pub struct Receiver {
    slicer: Slicer,
    detector: RunLengthDetector,
    sync: SyncDetector,
    mode: Mode,
    sample_index: u64,
    events: Vec<RxEvent>,
    run_buf: Vec<RunOutput>,
}

impl Receiver {
    pub fn new(cfg: SlicerConfig) -> Self {
        Receiver {
            slicer: Slicer::new(cfg),
            detector: RunLengthDetector::new(),
            sync: SyncDetector::new(),
            mode: Mode::Searching,
            sample_index: 0,
            events: Vec::new(),
            run_buf: Vec::new(),
        }
    }

    /// Feeds a chunk of ADC codes and returns the events it produced.
    pub fn push_codes(&mut self, codes: &[u16]) -> Vec<RxEvent> {
        for &code in codes {
            let level = self.slicer.slice_code(code);
            let mut runs = std::mem::take(&mut self.run_buf);
            runs.clear();
            self.detector.push(level, &mut runs);
            for run in &runs {
                self.process_run(*run);
            }
            self.run_buf = runs;
            self.sample_index += 1;
        }
        std::mem::take(&mut self.events)
    }

    /// Flushes the detector at end of stream and returns the final events.
    pub fn finish(&mut self) -> Vec<RxEvent> {
        let mut runs = std::mem::take(&mut self.run_buf);
        runs.clear();
        self.detector.flush(&mut runs);
        for run in &runs {
            self.process_run(*run);
        }
        self.run_buf = runs;
        std::mem::take(&mut self.events)
    }

    /// True while a frame body is being collected.
    pub fn receiving(&self) -> bool {
        matches!(self.mode, Mode::Receiving(_))
    }

    fn process_run(&mut self, run: RunOutput) {
        match run {
            RunOutput::Symbol(symbol) => self.process_symbol(symbol),
            RunOutput::LongRun { samples, .. } => {
                if self.receiving() {
                    self.events.push(RxEvent::SyncLoss {
                        sample: self.sample_index,
                        run_samples: samples,
                    });
                    self.events.push(RxEvent::FrameDiscarded {
                        sample: self.sample_index,
                        reason: DiscardReason::SyncLoss,
                    });
                    self.mode = Mode::Searching;
                }
                // while searching, arbitrary idle runs are normal
            }
        }
    }

    fn process_symbol(&mut self, symbol: Symbol) {
        let matched = self.sync.push(symbol);
        match &mut self.mode {
            Mode::Searching => {
                if matched {
                    self.events.push(RxEvent::FrameStart {
                        sample: self.sample_index,
                    });
                    self.mode = Mode::Receiving(Body::new());
                }
            }
            Mode::Receiving(body) => {
                body.symbols_seen += 1;
                match body.pair_first {
                    None => body.pair_first = Some(symbol),
                    Some(first) => {
                        if first == symbol {
                            self.discard(DiscardReason::InvalidPair);
                            return;
                        }
                        body.bits.push(first == Symbol::Low);
                        body.pair_first = None;
                    }
                }

                if body.expected_symbols.is_none() && body.bits.len() == 16 {
                    let length = body
                        .bits
                        .iter()
                        .fold(0u16, |acc, &b| (acc << 1) | b as u16);
                    if !frame::length_field_valid(length) {
                        self.discard(DiscardReason::BadLength);
                        return;
                    }
                    body.expected_symbols = Some(16 * frame::body_len(length));
                }

                if let Some(expected) = body.expected_symbols {
                    if body.symbols_seen == expected - 1 {
                        // the last symbol is the second half of a Manchester
                        // pair and therefore implied
                        let first = body.pair_first.take().expect("odd symbol count");
                        body.bits.push(first == Symbol::Low);
                        let bytes = bits_to_bytes(&std::mem::take(&mut body.bits));
                        self.finalize(&bytes);
                    }
                }
            }
        }
    }

    fn discard(&mut self, reason: DiscardReason) {
        self.events.push(RxEvent::FrameDiscarded {
            sample: self.sample_index,
            reason,
        });
        self.mode = Mode::Searching;
    }

    fn finalize(&mut self, body: &[u8]) {
        let sample = self.sample_index;
        match frame::parse_frame(body) {
            Ok(ParseOutcome::Frame(frame)) => {
                let event = match frame.rs {
                    frame::FrameRs::Clean => RxEvent::FrameOk { sample, frame },
                    frame::FrameRs::Corrected { .. } => RxEvent::FrameCorrected { sample, frame },
                };
                self.events.push(event);
            }
            Ok(ParseOutcome::Discarded { .. }) => {
                self.events.push(RxEvent::FrameDiscarded {
                    sample,
                    reason: DiscardReason::RsUncorrectable,
                });
            }
            Err(_) => {
                self.events.push(RxEvent::FrameDiscarded {
                    sample,
                    reason: DiscardReason::BadLength,
                });
            }
        }
        self.mode = Mode::Searching;
    }
}
