//! End-to-end experiment harness: drives codec -> modulator -> channel ->
//! front end -> ADC -> receiver for a simulated duration and aggregates
//! link statistics, plus the distance / payload / drift sweeps and their
//! CSV renderings.
//!
//! Every run is deterministic per seed. Goodput is delivered payload bits
//! per simulated second of traffic, the simulator's analogue of an iperf
//! UDP measurement; no transport headers are modeled.

use crate::afe::{AdcSampler, AfeChain, AfeConfig, AfeError, AfeProbes, ADC_RATE};
use crate::channel::{scenario_preset, Channel, ChannelError, Scenario};
use crate::clock::{ClockError, ClockModel};
use crate::coding::{idle_symbols, Symbol, SYNC_PATTERN};
use crate::frame::{self, FrameError, FrameRs};
use crate::pipeline::{tx_handshake, DriverQueue, TxTraceEvent};
use crate::receiver::{Receiver, RunLengthDetector, RunOutput, RxEvent, Slicer, SlicerConfig};
use crate::settings::Settings;
use crate::waveform::{
    AnalogWaveform, Modulator, WaveformError, DEFAULT_SIM_RATE, DEFAULT_TX_POWER, SYMBOL_RATE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Idle-carrier symbols transmitted before traffic so the high-pass
/// settles at the Manchester mean.
pub const WARMUP_SYMBOLS: u64 = 2000;

/// Committed inter-frame gap that models driver and system overheads of the
/// physical platform. Calibrated so an 800-byte-payload link lands at the
/// 400 kb/s the hardware tops out at: one frame then occupies
/// 14208 + 1792 = 16000 symbol periods, exactly 16 ms.
pub const CALIBRATED_GAP_SYMBOLS: u32 = 1792;

const PAYLOAD_SEED_SALT: u64 = 0x7061_796c;
const TX_JITTER_SALT: u64 = 0x7478_6a69;
const RX_JITTER_SALT: u64 = 0x7278_6a69;

/// Configuration for a single link run at one distance.
#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub scenario: Scenario,
    pub distance: f64,
    pub payload_size: usize,
    /// Simulated seconds of traffic (a warmup is prepended and not counted).
    pub duration: f64,
    /// Idle-carrier symbols after every frame.
    pub gap_symbols: u32,
    pub seed: u64,
    pub sim_rate: f64,
    pub tx_ppm: f64,
    pub rx_ppm: f64,
    pub tx_jitter_std: f64,
    pub rx_jitter_std: f64,
    /// Nominal receiver sampling rate; drift experiments override it to
    /// move the sampling ratio.
    pub rx_rate: f64,
    pub overrides: Settings,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            scenario: Scenario::WClosed,
            distance: 1.0,
            payload_size: 800,
            duration: 0.1,
            gap_symbols: 0,
            seed: 0,
            sim_rate: DEFAULT_SIM_RATE,
            tx_ppm: 0.0,
            rx_ppm: 0.0,
            tx_jitter_std: 0.0,
            rx_jitter_std: 0.0,
            rx_rate: ADC_RATE,
            overrides: Settings::default(),
        }
    }
}

/// Aggregated statistics of one link run.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    /// Frames whose transmission started within the duration.
    pub frames_sent: u64,
    /// Frames fully transmitted within the duration.
    pub frames_completed: u64,
    /// Frames delivered (clean or corrected).
    pub frames_received: u64,
    /// Delivered frames that needed Reed-Solomon corrections.
    pub frames_corrected: u64,
    /// Frames lost: uncorrectable, aborted mid-frame, or never detected.
    pub frames_discarded: u64,
    /// Frames cut off by the end of the run.
    pub frames_in_flight: u64,
    /// Preamble+SFD detections.
    pub frames_detected: u64,
    pub sync_losses: u64,
    /// Delivered payload bits per simulated second of traffic.
    pub goodput_bps: f64,
    /// Pre-correction bit error rate, measured as bits repaired by
    /// Reed-Solomon over protected bits of delivered frames.
    pub ber_pre_rs: f64,
    pub payload_bits_delivered: u64,
    pub duration: f64,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Afe(#[from] AfeError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// What [`run_link_full`] should collect beyond the statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub collect_events: bool,
    pub collect_tx_trace: bool,
    /// Keep this many leading samples of the transmitted waveform.
    pub waveform_head: usize,
    /// Keep this many leading samples of the front-end probe points.
    pub probes_head: usize,
}

/// Run outputs: statistics plus any requested artifacts.
#[derive(Debug)]
pub struct LinkOutputs {
    pub stats: LinkStats,
    pub events: Vec<RxEvent>,
    pub tx_trace: Vec<TxTraceEvent>,
    pub tx_waveform_head: AnalogWaveform,
    pub afe_probes_head: AfeProbes,
}

/// Runs one link experiment and returns the statistics.
pub fn run_link(cfg: &LinkConfig) -> Result<LinkStats, ExperimentError> {
    Ok(run_link_full(cfg, RunOptions::default())?.stats)
}

/// Runs one link experiment, optionally collecting events, the transmit
/// handshake trace, and waveform/probe heads for debugging dumps.
pub fn run_link_full(cfg: &LinkConfig, options: RunOptions) -> Result<LinkOutputs, ExperimentError> {
    if cfg.duration.is_nan() || cfg.duration <= 0.0 {
        return Err(ExperimentError::BadConfig(format!(
            "duration {} must be positive",
            cfg.duration
        )));
    }
    if cfg.payload_size > frame::MAX_PAYLOAD {
        return Err(ExperimentError::BadConfig(format!(
            "payload {} exceeds {}",
            cfg.payload_size,
            frame::MAX_PAYLOAD
        )));
    }

    let mut channel_cfg = scenario_preset(cfg.scenario, cfg.distance);
    channel_cfg.seed = cfg.seed;
    cfg.overrides.apply_channel(&mut channel_cfg);

    let mut afe_cfg = AfeConfig::default();
    cfg.overrides.apply_afe(&mut afe_cfg);
    afe_cfg.validate(cfg.sim_rate)?;

    let mut slicer_cfg = SlicerConfig {
        threshold_code: afe_cfg.bias_code(),
        hysteresis: 0,
    };
    cfg.overrides.apply_slicer(&mut slicer_cfg);

    let tx_clock = ClockModel::new(SYMBOL_RATE, cfg.tx_ppm, cfg.tx_jitter_std)?;
    let rx_clock = ClockModel::new(cfg.rx_rate, cfg.rx_ppm, cfg.rx_jitter_std)?;

    let mut modulator = Modulator::new(
        tx_clock,
        cfg.sim_rate,
        DEFAULT_TX_POWER,
        cfg.seed ^ TX_JITTER_SALT,
    )?;
    let mut channel = Channel::new(channel_cfg)?;
    let mut afe = AfeChain::new(afe_cfg, cfg.sim_rate)?;
    let mut adc = AdcSampler::new(rx_clock, afe_cfg, cfg.sim_rate, cfg.seed ^ RX_JITTER_SALT);
    let mut receiver = Receiver::new(slicer_cfg);
    let mut payload_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ PAYLOAD_SEED_SALT);

    let mut events: Vec<RxEvent> = Vec::new();
    let mut probes = AfeProbes::default();
    let mut waveform_head: Vec<f64> = Vec::new();
    let mut rx_queue: DriverQueue<RxEvent> = DriverQueue::new(256);

    let mut stats = LinkStats {
        frames_sent: 0,
        frames_completed: 0,
        frames_received: 0,
        frames_corrected: 0,
        frames_discarded: 0,
        frames_in_flight: 0,
        frames_detected: 0,
        sync_losses: 0,
        goodput_bps: 0.0,
        ber_pre_rs: 0.0,
        payload_bits_delivered: 0,
        duration: cfg.duration,
    };
    let mut corrected_bits: u64 = 0;
    let mut protected_bits_delivered: u64 = 0;
    let mut explicit_discards: u64 = 0;

    let mut push_chunk = |symbols: &[Symbol],
                          modulator: &mut Modulator,
                          channel: &mut Channel,
                          afe: &mut AfeChain,
                          adc: &mut AdcSampler,
                          receiver: &mut Receiver,
                          sink: &mut dyn FnMut(RxEvent)| {
        let base = modulator.emitted_samples();
        let wave = modulator.extend(symbols);
        if waveform_head.len() < options.waveform_head {
            let take = (options.waveform_head - waveform_head.len()).min(wave.samples.len());
            waveform_head.extend_from_slice(&wave.samples[..take]);
        }
        let current = channel.extend(&wave);
        let volts = if probes.after_tia.len() < options.probes_head {
            afe.extend_with_probes(&current, &mut probes)
        } else {
            afe.extend(&current)
        };
        let codes = adc.extend(&volts, base);
        for event in receiver.push_codes(&codes) {
            sink(event);
        }
    };

    // Traffic budget in nominal symbol periods.
    let budget_symbols = (cfg.duration * SYMBOL_RATE).round() as u64;
    let frame_core_symbols =
        (32 + 16 * frame::body_len((frame::LENGTH_COVERED_HEADER + cfg.payload_size) as u16)) as u64;

    let dst = [0x00, 0x01];
    let src = [0x00, 0x02];
    let mut handshake_frames: Vec<Vec<u32>> = Vec::new();

    // Warmup carrier; nothing the receiver emits here counts toward the run.
    {
        let warmup = idle_symbols(WARMUP_SYMBOLS as usize);
        let mut sink = |_: RxEvent| {};
        push_chunk(
            &warmup,
            &mut modulator,
            &mut channel,
            &mut afe,
            &mut adc,
            &mut receiver,
            &mut sink,
        );
    }

    let mut sent_symbols = 0u64;
    let mut collect = |event: RxEvent,
                       stats: &mut LinkStats,
                       rx_queue: &mut DriverQueue<RxEvent>,
                       events: &mut Vec<RxEvent>| {
        match &event {
            RxEvent::FrameStart { .. } => stats.frames_detected += 1,
            RxEvent::FrameOk { frame, .. } => {
                stats.frames_received += 1;
                stats.payload_bits_delivered += frame.payload.len() as u64 * 8;
                protected_bits_delivered +=
                    (frame::LENGTH_COVERED_HEADER + frame.payload.len()) as u64 * 8;
                rx_queue.push(event.clone());
            }
            RxEvent::FrameCorrected { frame, .. } => {
                stats.frames_received += 1;
                stats.frames_corrected += 1;
                stats.payload_bits_delivered += frame.payload.len() as u64 * 8;
                protected_bits_delivered +=
                    (frame::LENGTH_COVERED_HEADER + frame.payload.len()) as u64 * 8;
                if let FrameRs::Corrected { bit_errors, .. } = frame.rs {
                    corrected_bits += bit_errors as u64;
                }
                rx_queue.push(event.clone());
            }
            RxEvent::FrameDiscarded { .. } => explicit_discards += 1,
            RxEvent::SyncLoss { .. } => stats.sync_losses += 1,
        }
        if options.collect_events {
            events.push(event);
        }
    };

    while sent_symbols < budget_symbols {
        let payload: Vec<u8> = (0..cfg.payload_size).map(|_| payload_rng.random()).collect();
        let mut symbols = frame::frame_symbols(dst, src, &payload)?;
        symbols.extend(idle_symbols(cfg.gap_symbols as usize));
        stats.frames_sent += 1;

        let remaining = (budget_symbols - sent_symbols) as usize;
        let truncated = symbols.len() > remaining;
        let emit = if truncated { &symbols[..remaining] } else { &symbols[..] };
        if !truncated || remaining as u64 >= frame_core_symbols {
            stats.frames_completed += 1;
        }
        if options.collect_tx_trace {
            let words: Vec<u32> = emit
                .chunks(32)
                .map(|chunk| {
                    chunk
                        .iter()
                        .fold(0u32, |acc, s| (acc << 1) | s.is_high() as u32)
                })
                .collect();
            handshake_frames.push(words);
        }

        let mut sink = |e: RxEvent| collect(e, &mut stats, &mut rx_queue, &mut events);
        push_chunk(
            emit,
            &mut modulator,
            &mut channel,
            &mut afe,
            &mut adc,
            &mut receiver,
            &mut sink,
        );
        sent_symbols += emit.len() as u64;
        debug_assert!(sent_symbols <= budget_symbols);
        while rx_queue.pop().is_some() {}
        if truncated {
            break;
        }
    }

    for event in receiver.finish() {
        collect(event, &mut stats, &mut rx_queue, &mut events);
    }
    while rx_queue.pop().is_some() {}

    stats.frames_in_flight = stats.frames_sent - stats.frames_completed;
    let undetected = stats
        .frames_completed
        .saturating_sub(stats.frames_received + explicit_discards);
    stats.frames_discarded = explicit_discards + undetected;
    stats.goodput_bps = stats.payload_bits_delivered as f64 / cfg.duration;
    stats.ber_pre_rs = if protected_bits_delivered > 0 {
        corrected_bits as f64 / protected_bits_delivered as f64
    } else {
        0.0
    };

    let tx_trace = if options.collect_tx_trace {
        // the kernel stages frames instantly; the transmit time per 32-symbol
        // word is 32 nominal symbol periods
        tx_handshake(&handshake_frames, 0.0, 32.0 / SYMBOL_RATE).trace
    } else {
        Vec::new()
    };

    Ok(LinkOutputs {
        stats,
        events,
        tx_trace,
        tx_waveform_head: AnalogWaveform {
            samples: waveform_head,
            sample_rate: cfg.sim_rate,
            t0: 0.0,
        },
        afe_probes_head: probes,
    })
}

/// Packet error rate among frames that completed transmission:
/// discarded / (received + discarded).
pub fn packet_error_rate(stats: &LinkStats) -> f64 {
    let total = stats.frames_received + stats.frames_discarded;
    if total == 0 {
        0.0
    } else {
        stats.frames_discarded as f64 / total as f64
    }
}

/// Sweep-level configuration mirroring the evaluation matrix.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenarios: Vec<Scenario>,
    pub distances: Vec<f64>,
    pub payloads: Vec<usize>,
    pub payload_size: usize,
    pub duration: f64,
    pub gap_symbols: u32,
    pub seeds: Vec<u64>,
    pub drift_pairs: Vec<(f64, f64)>,
    /// Sampling ratio for drift sweeps; the RX rate is `ratio * symbol rate`.
    pub drift_ratio: f64,
    /// Symbols compared per drift point.
    pub drift_symbols: u64,
    pub sim_rate: f64,
    /// Drift sweeps need a finer grid; edge quantization at 16x injects
    /// enough edge noise to break the sampling-ratio guarantee.
    pub drift_sim_rate: f64,
    pub overrides: Settings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenarios: vec![Scenario::WClosed, Scenario::WOpen, Scenario::Interference],
            distances: (1..=14).map(|i| i as f64 * 0.5).collect(),
            payloads: vec![50, 200, 800, 1500],
            payload_size: 800,
            duration: 0.25,
            gap_symbols: 0,
            seeds: vec![1],
            drift_pairs: vec![(0.0, 0.0), (100.0, -100.0), (-100.0, 100.0)],
            drift_ratio: 2.1,
            drift_symbols: 1_000_000,
            sim_rate: DEFAULT_SIM_RATE,
            drift_sim_rate: 64e6,
            overrides: Settings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.scenarios.is_empty()
            || self.distances.is_empty()
            || self.seeds.is_empty()
            || self.payloads.is_empty()
        {
            return Err(ExperimentError::BadConfig(
                "scenario, distance, payload and seed lists must be nonempty".into(),
            ));
        }
        if self.duration.is_nan() || self.duration <= 0.0 {
            return Err(ExperimentError::BadConfig("duration must be positive".into()));
        }
        Ok(())
    }

    fn link_config(&self, scenario: Scenario, distance: f64, seed: u64) -> LinkConfig {
        LinkConfig {
            scenario,
            distance,
            payload_size: self.payload_size,
            duration: self.duration,
            gap_symbols: self.gap_symbols,
            seed,
            sim_rate: self.sim_rate,
            overrides: self.overrides.clone(),
            ..LinkConfig::default()
        }
    }
}

/// One row of the distance sweep.
#[derive(Debug, Clone)]
pub struct DistanceRow {
    pub scenario: Scenario,
    pub distance: f64,
    pub seed: u64,
    pub stats: LinkStats,
}

/// Runs every (scenario, distance, seed) grid point, in configuration order.
pub fn sweep_distance(cfg: &ExperimentConfig) -> Result<Vec<DistanceRow>, ExperimentError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &scenario in &cfg.scenarios {
        for &distance in &cfg.distances {
            for &seed in &cfg.seeds {
                let stats = run_link(&cfg.link_config(scenario, distance, seed))?;
                rows.push(DistanceRow {
                    scenario,
                    distance,
                    seed,
                    stats,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV for the distance sweep: `scenario,distance_m,seed,goodput_bps,per`.
pub fn distance_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from("scenario,distance_m,seed,goodput_bps,per\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.2},{},{:.1},{:.6}\n",
            row.scenario,
            row.distance,
            row.seed,
            row.stats.goodput_bps,
            packet_error_rate(&row.stats)
        ));
    }
    out
}

/// One row of the payload sweep.
#[derive(Debug, Clone)]
pub struct PayloadRow {
    pub payload: usize,
    pub stats: LinkStats,
}

/// Sweeps payload sizes on the first scenario/distance/seed of the config.
/// Each run's duration is rounded to a whole number of frame slots so the
/// reported goodput reflects the steady-state line rate rather than
/// end-of-window truncation of the last frame.
pub fn sweep_payload(cfg: &ExperimentConfig) -> Result<Vec<PayloadRow>, ExperimentError> {
    cfg.validate()?;
    let scenario = cfg.scenarios[0];
    let distance = cfg.distances[0];
    let seed = cfg.seeds[0];
    let mut rows = Vec::new();
    for &payload in &cfg.payloads {
        let mut link = cfg.link_config(scenario, distance, seed);
        link.payload_size = payload;
        let slot = (32
            + 16 * frame::body_len((frame::LENGTH_COVERED_HEADER + payload) as u16)
            + cfg.gap_symbols as usize) as f64
            / SYMBOL_RATE;
        let slots = (cfg.duration / slot).round().max(1.0);
        link.duration = slots * slot;
        let stats = run_link(&link)?;
        rows.push(PayloadRow { payload, stats });
    }
    Ok(rows)
}

/// CSV for the payload sweep: `payload_bytes,goodput_bps`.
pub fn payload_csv(rows: &[PayloadRow]) -> String {
    let mut out = String::from("payload_bytes,goodput_bps\n");
    for row in rows {
        out.push_str(&format!("{},{:.1}\n", row.payload, row.stats.goodput_bps));
    }
    out
}

/// One row of the drift sweep.
#[derive(Debug, Clone)]
pub struct DriftRow {
    pub tx_ppm: f64,
    pub rx_ppm: f64,
    pub symbol_errors: u64,
    pub frames_lost: u64,
    pub symbols_compared: u64,
}

/// Runs one drift point: a noiseless link at the given sampling ratio and
/// clock offsets. Detected symbols are compared one-to-one against the
/// transmitted stream, and frames are transported in parallel.
pub fn run_drift_point(
    cfg: &ExperimentConfig,
    tx_ppm: f64,
    rx_ppm: f64,
) -> Result<DriftRow, ExperimentError> {
    let tx_clock = ClockModel::new(SYMBOL_RATE, tx_ppm, 0.0)?;
    let rx_clock = ClockModel::new(cfg.drift_ratio * SYMBOL_RATE, rx_ppm, 0.0)?;
    let sim_rate = cfg.drift_sim_rate;

    // noiseless short-range channel
    let mut channel_cfg = scenario_preset(Scenario::WClosed, 1.0);
    channel_cfg.noise_std = 0.0;
    channel_cfg.seed = cfg.seeds[0];
    let afe_cfg = AfeConfig::default();
    afe_cfg.validate(sim_rate)?;
    let slicer_cfg = SlicerConfig {
        threshold_code: afe_cfg.bias_code(),
        hysteresis: 0,
    };

    let mut modulator = Modulator::new(tx_clock, sim_rate, DEFAULT_TX_POWER, 0)?;
    let mut channel = Channel::new(channel_cfg)?;
    let mut afe = AfeChain::new(afe_cfg, sim_rate)?;
    let mut adc = AdcSampler::new(rx_clock, afe_cfg, sim_rate, 0);

    // two parallel consumers of the same code stream
    let mut slicer = Slicer::new(slicer_cfg);
    let mut detector = RunLengthDetector::new();
    let mut receiver = Receiver::new(slicer_cfg);

    let mut detected: Vec<Symbol> = Vec::new();
    let mut run_buf: Vec<RunOutput> = Vec::new();
    let mut frames_completed = 0u64;
    let mut frames_received = 0u64;

    let mut expected: Vec<Symbol> = Vec::new();
    let mut payload_rng = ChaCha8Rng::seed_from_u64(cfg.seeds[0] ^ PAYLOAD_SEED_SALT);

    {
        // the warmup carrier is excluded from the comparison; the detected
        // stream is aligned at the first frame's sync pattern instead
        let warmup = idle_symbols(WARMUP_SYMBOLS as usize);
        let base = modulator.emitted_samples();
        let wave = modulator.extend(&warmup);
        let volts = afe.extend(&channel.extend(&wave));
        let codes = adc.extend(&volts, base);
        for &code in &codes {
            let level = slicer.slice_code(code);
            detector.push(level, &mut run_buf);
        }
        receiver.push_codes(&codes);
        run_buf.clear();
    }

    while (expected.len() as u64) < cfg.drift_symbols {
        let payload: Vec<u8> = (0..cfg.payload_size).map(|_| payload_rng.random()).collect();
        let symbols = frame::frame_symbols([0, 1], [0, 2], &payload)?;
        frames_completed += 1;

        let base = modulator.emitted_samples();
        let wave = modulator.extend(&symbols);
        expected.extend_from_slice(&symbols);
        let volts = afe.extend(&channel.extend(&wave));
        let codes = adc.extend(&volts, base);
        for &code in &codes {
            let level = slicer.slice_code(code);
            detector.push(level, &mut run_buf);
            for out in run_buf.drain(..) {
                if let RunOutput::Symbol(s) = out {
                    detected.push(s);
                }
            }
        }
        for event in receiver.push_codes(&codes) {
            if matches!(event, RxEvent::FrameOk { .. } | RxEvent::FrameCorrected { .. }) {
                frames_received += 1;
            }
        }
    }

    {
        // a short idle tail so the filter delay cannot clip the last
        // symbol's run at the stream end; not part of the comparison
        let tail = idle_symbols(8);
        let base = modulator.emitted_samples();
        let wave = modulator.extend(&tail);
        let volts = afe.extend(&channel.extend(&wave));
        let codes = adc.extend(&volts, base);
        for &code in &codes {
            let level = slicer.slice_code(code);
            detector.push(level, &mut run_buf);
            for out in run_buf.drain(..) {
                if let RunOutput::Symbol(s) = out {
                    detected.push(s);
                }
            }
        }
        for event in receiver.push_codes(&codes) {
            if matches!(event, RxEvent::FrameOk { .. } | RxEvent::FrameCorrected { .. }) {
                frames_received += 1;
            }
        }
    }
    detector.flush(&mut run_buf);
    for out in run_buf.drain(..) {
        if let RunOutput::Symbol(s) = out {
            detected.push(s);
        }
    }
    for event in receiver.finish() {
        if matches!(event, RxEvent::FrameOk { .. } | RxEvent::FrameCorrected { .. }) {
            frames_received += 1;
        }
    }

    // Align the detected stream at the first frame's sync pattern (warmup
    // symbols precede it) and compare one-to-one from there; idle-tail
    // symbols beyond the expected length are not counted. If no sync is
    // ever detected, every expected symbol counts as an error.
    let mut register = 0u32;
    let mut align = None;
    for (i, &s) in detected.iter().enumerate() {
        register = (register << 1) | s.is_high() as u32;
        if register == SYNC_PATTERN {
            align = Some(i + 1 - 32);
            break;
        }
    }
    let symbol_errors = match align {
        Some(start) => {
            let tail = &detected[start..];
            let common = tail.len().min(expected.len());
            let mut errors = (expected.len() - common) as u64;
            for i in 0..common {
                if tail[i] != expected[i] {
                    errors += 1;
                }
            }
            errors
        }
        None => expected.len() as u64,
    };

    Ok(DriftRow {
        tx_ppm,
        rx_ppm,
        symbol_errors,
        frames_lost: frames_completed.saturating_sub(frames_received),
        symbols_compared: expected.len() as u64,
    })
}

/// Runs every configured (tx_ppm, rx_ppm) drift point.
pub fn sweep_drift(cfg: &ExperimentConfig) -> Result<Vec<DriftRow>, ExperimentError> {
    if cfg.drift_pairs.is_empty() || cfg.seeds.is_empty() {
        return Err(ExperimentError::BadConfig(
            "drift pair and seed lists must be nonempty".into(),
        ));
    }
    let mut rows = Vec::new();
    for &(tx_ppm, rx_ppm) in &cfg.drift_pairs {
        rows.push(run_drift_point(cfg, tx_ppm, rx_ppm)?);
    }
    Ok(rows)
}

/// CSV for the drift sweep: `tx_ppm,rx_ppm,symbol_errors,frames_lost`.
pub fn drift_csv(rows: &[DriftRow]) -> String {
    let mut out = String::from("tx_ppm,rx_ppm,symbol_errors,frames_lost\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.tx_ppm, row.rx_ppm, row.symbol_errors, row.frames_lost
        ));
    }
    out
}
