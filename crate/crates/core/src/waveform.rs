//! On-off-keyed waveform synthesis on an oversampled simulation grid.
//!
//! The transmitter firmware toggles the LED once per symbol, so the optical
//! waveform is rectangular: HIGH emits `tx_power`, LOW emits nothing. Symbol
//! edges land wherever the drifting, jittery TX clock puts them; the edge
//! instants are quantized to the nearest sample of the simulation grid.

use crate::clock::{ClockError, ClockModel};
use crate::coding::Symbol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};
use thiserror::Error;

/// Default simulation rate: 16 samples per nominal 1 MHz symbol.
pub const DEFAULT_SIM_RATE: f64 = 16e6;
/// Minimum oversampling of the symbol clock by the simulation grid.
pub const MIN_OVERSAMPLE: f64 = 8.0;
/// Nominal symbol rate of the link.
pub const SYMBOL_RATE: f64 = 1e6;
/// Default LED drive power in watts.
pub const DEFAULT_TX_POWER: f64 = 2.8;

/// A uniformly sampled real-valued signal. Which physical quantity the
/// samples carry (optical watts, photodiode amperes, volts) depends on the
/// stage that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogWaveform {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
}

impl AnalogWaveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Dumps the waveform as `time,value` CSV rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,value")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(w, "{:.9},{v}", self.t0 + i as f64 / self.sample_rate)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("simulation rate {sim_rate} Hz is below {MIN_OVERSAMPLE}x the symbol rate {symbol_rate} Hz")]
    SimRateTooLow { sim_rate: f64, symbol_rate: f64 },
    #[error(transparent)]
    Clock(#[from] ClockError),
}

/// Streaming modulator. Keeps the global symbol count so waveform chunks
/// produced one frame at a time are bit-identical to a single-shot run.
#[derive(Debug)]
pub struct Modulator {
    clock: ClockModel,
    sim_rate: f64,
    tx_power: f64,
    next_symbol: u64,
    emitted_samples: u64,
    rng: ChaCha8Rng,
}

impl Modulator {
    pub fn new(
        clock: ClockModel,
        sim_rate: f64,
        tx_power: f64,
        jitter_seed: u64,
    ) -> Result<Self, WaveformError> {
        if sim_rate < MIN_OVERSAMPLE * clock.nominal_rate {
            return Err(WaveformError::SimRateTooLow {
                sim_rate,
                symbol_rate: clock.nominal_rate,
            });
        }
        ClockModel::new(clock.nominal_rate, clock.ppm_offset, clock.jitter_std)?;
        Ok(Modulator {
            clock,
            sim_rate,
            tx_power,
            next_symbol: 0,
            emitted_samples: 0,
            rng: ChaCha8Rng::seed_from_u64(jitter_seed),
        })
    }

    /// Simulation samples emitted so far.
    pub fn emitted_samples(&self) -> u64 {
        self.emitted_samples
    }

    /// Symbols consumed so far.
    pub fn symbols_sent(&self) -> u64 {
        self.next_symbol
    }

    /// Appends `symbols` to the transmission and returns the waveform chunk
    /// they occupy.
    pub fn extend(&mut self, symbols: &[Symbol]) -> AnalogWaveform {
        let t0 = self.emitted_samples as f64 / self.sim_rate;
        let mut samples = Vec::new();
        let mut cursor = self.emitted_samples;
        for &symbol in symbols {
            self.next_symbol += 1;
            let edge_t = self.clock.instant_jittered(self.next_symbol, &mut self.rng);
            // Nearest-sample edge placement; jitter must never move an edge
            // before the previous one on the grid.
            let edge = ((edge_t * self.sim_rate).round() as u64).max(cursor);
            let value = if symbol.is_high() { self.tx_power } else { 0.0 };
            for _ in cursor..edge {
                samples.push(value);
            }
            cursor = edge;
        }
        self.emitted_samples = cursor;
        AnalogWaveform {
            samples,
            sample_rate: self.sim_rate,
            t0,
        }
    }
}

/// One-shot modulation of a symbol stream into an optical-power waveform.
pub fn modulate(
    symbols: &[Symbol],
    tx_clock: ClockModel,
    sim_rate: f64,
    tx_power: f64,
) -> Result<AnalogWaveform, WaveformError> {
    let mut modulator = Modulator::new(tx_clock, sim_rate, tx_power, 0)?;
    Ok(modulator.extend(symbols))
}
