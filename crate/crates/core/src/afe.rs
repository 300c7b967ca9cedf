//! Receiver analog front end and ADC.
//!
//! The reception chain is modeled stage by stage: a transimpedance amplifier
//! turns photodiode current into volts, a first-order 10 kHz high-pass strips
//! ambient DC, a 2.5 V bias recenters the signal on the ADC span, a second
//! amplifier scales it (referenced to the bias, which is why a DC input
//! settles exactly at the bias), the amplifier rails clamp to the span, and a
//! first-order 1.1 MHz low-pass removes amplifier overshoot before the ADC.
//!
//! Both filters are bilinear-transform discretizations with prewarped
//! corners. The ADC samples on its own drifting clock, reads the nearest
//! simulation sample, clamps to the span and rounds half-up to
//! `(2^bits - 1) * v / span`.

use crate::clock::ClockModel;
use crate::waveform::AnalogWaveform;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};
use thiserror::Error;

/// Nominal receiver sampling rate: 2.1 samples per 1 MHz symbol.
pub const ADC_RATE: f64 = 2.1e6;

/// Front-end configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeConfig {
    /// Transimpedance gain, volts per ampere.
    pub tia_gain: f64,
    /// High-pass corner frequency, Hz.
    pub hpf_cutoff: f64,
    /// DC level added after the high-pass, volts.
    pub bias: f64,
    /// Second amplification stage gain, referenced to the bias.
    pub amp2_gain: f64,
    /// Low-pass corner frequency, Hz.
    pub lpf_cutoff: f64,
    /// ADC resolution in bits.
    pub adc_bits: u32,
    /// ADC full-scale span, volts (lower rail is 0 V).
    pub adc_span: f64,
}

impl Default for AfeConfig {
    fn default() -> Self {
        AfeConfig {
            tia_gain: 1000.0,
            hpf_cutoff: 10e3,
            bias: 2.5,
            amp2_gain: 10.0,
            lpf_cutoff: 1.1e6,
            adc_bits: 12,
            adc_span: 5.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfeError {
    #[error("filter cutoff {cutoff} Hz outside (0, {nyquist}) at sim rate {sim_rate} Hz")]
    BadCutoff {
        cutoff: f64,
        nyquist: f64,
        sim_rate: f64,
    },
    #[error("gain {0} must be positive")]
    BadGain(f64),
    #[error("ADC must have at least 1 bit")]
    BadAdcBits,
}

impl AfeConfig {
    pub fn validate(&self, sim_rate: f64) -> Result<(), AfeError> {
        let nyquist = sim_rate / 2.0;
        for &cutoff in &[self.hpf_cutoff, self.lpf_cutoff] {
            if cutoff.is_nan() || cutoff <= 0.0 || cutoff >= nyquist {
                return Err(AfeError::BadCutoff {
                    cutoff,
                    nyquist,
                    sim_rate,
                });
            }
        }
        if self.tia_gain.is_nan() || self.tia_gain <= 0.0 {
            return Err(AfeError::BadGain(self.tia_gain));
        }
        if self.amp2_gain.is_nan() || self.amp2_gain <= 0.0 {
            return Err(AfeError::BadGain(self.amp2_gain));
        }
        if self.adc_bits < 1 {
            return Err(AfeError::BadAdcBits);
        }
        Ok(())
    }

    /// Largest ADC code.
    pub fn max_code(&self) -> u16 {
        ((1u32 << self.adc_bits) - 1) as u16
    }

    /// Clamps to the span and rounds half-up onto the code grid.
    pub fn quantize(&self, v: f64) -> u16 {
        let clamped = v.clamp(0.0, self.adc_span);
        let code = (clamped / self.adc_span * self.max_code() as f64 + 0.5).floor();
        code as u16
    }

    /// Voltage at the center of a code's quantization cell.
    pub fn dequantize(&self, code: u16) -> f64 {
        code as f64 * self.adc_span / self.max_code() as f64
    }

    /// The code a steady input at the bias voltage settles to.
    pub fn bias_code(&self) -> u16 {
        self.quantize(self.bias)
    }
}

/// First-order IIR section from the bilinear transform with a prewarped
/// corner: `y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1]`.
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderIir {
    b0: f64,
    b1: f64,
    a1: f64,
    x1: f64,
    y1: f64,
}

impl FirstOrderIir {
    pub fn lowpass(cutoff: f64, sample_rate: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff / sample_rate).tan();
        FirstOrderIir {
            b0: k / (1.0 + k),
            b1: k / (1.0 + k),
            a1: (k - 1.0) / (1.0 + k),
            x1: 0.0,
            y1: 0.0,
        }
    }

    pub fn highpass(cutoff: f64, sample_rate: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff / sample_rate).tan();
        FirstOrderIir {
            b0: 1.0 / (1.0 + k),
            b1: -1.0 / (1.0 + k),
            a1: (k - 1.0) / (1.0 + k),
            x1: 0.0,
            y1: 0.0,
        }
    }

    #[inline]
    pub fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b1 * self.x1 - self.a1 * self.y1;
        self.x1 = x;
        self.y1 = y;
        y
    }
}

/// Probe points matching the physical chain measurements: after the first
/// amplifier, after the high-pass filter, and at the ADC input.
#[derive(Debug, Clone, Default)]
pub struct AfeProbes {
    pub after_tia: Vec<f64>,
    pub after_hpf: Vec<f64>,
    pub adc_input: Vec<f64>,
}

impl AfeProbes {
    /// Dumps the three probe points as CSV.
    pub fn write_csv<W: Write>(&self, mut w: W, sample_rate: f64) -> io::Result<()> {
        writeln!(w, "time_s,after_tia_v,after_hpf_v,adc_input_v")?;
        for i in 0..self.after_tia.len() {
            writeln!(
                w,
                "{:.9},{},{},{}",
                i as f64 / sample_rate,
                self.after_tia[i],
                self.after_hpf[i],
                self.adc_input[i]
            )?;
        }
        Ok(())
    }
}

/// Streaming front end; filter state persists across chunks.
#[derive(Debug)]
pub struct AfeChain {
    cfg: AfeConfig,
    hpf: FirstOrderIir,
    lpf: FirstOrderIir,
}

impl AfeChain {
    pub fn new(cfg: AfeConfig, sim_rate: f64) -> Result<Self, AfeError> {
        cfg.validate(sim_rate)?;
        Ok(AfeChain {
            cfg,
            hpf: FirstOrderIir::highpass(cfg.hpf_cutoff, sim_rate),
            lpf: FirstOrderIir::lowpass(cfg.lpf_cutoff, sim_rate),
        })
    }

    #[inline]
    fn tick(&mut self, current: f64) -> (f64, f64, f64) {
        let tia = self.cfg.tia_gain * current;
        let hp = self.hpf.tick(tia);
        let amplified = self.cfg.bias + self.cfg.amp2_gain * hp;
        // amplifier rails clamp before the low-pass; the filter then rounds
        // off the clipped edges like the real overshoot removal does
        let railed = amplified.clamp(0.0, self.cfg.adc_span);
        let out = self.lpf.tick(railed);
        (tia, hp, out)
    }

    /// Processes a photocurrent chunk into volts at the ADC input.
    pub fn extend(&mut self, photocurrent: &AnalogWaveform) -> AnalogWaveform {
        let samples = photocurrent.samples.iter().map(|&i| self.tick(i).2).collect();
        AnalogWaveform {
            samples,
            sample_rate: photocurrent.sample_rate,
            t0: photocurrent.t0,
        }
    }

    /// Like [`AfeChain::extend`] but also records the three probe points.
    pub fn extend_with_probes(
        &mut self,
        photocurrent: &AnalogWaveform,
        probes: &mut AfeProbes,
    ) -> AnalogWaveform {
        let mut samples = Vec::with_capacity(photocurrent.samples.len());
        for &i in &photocurrent.samples {
            let (tia, hp, out) = self.tick(i);
            probes.after_tia.push(tia);
            probes.after_hpf.push(hp);
            probes.adc_input.push(out);
            samples.push(out);
        }
        AnalogWaveform {
            samples,
            sample_rate: photocurrent.sample_rate,
            t0: photocurrent.t0,
        }
    }
}

/// One-shot front-end processing.
pub fn afe_process(photocurrent: &AnalogWaveform, cfg: &AfeConfig) -> Result<AnalogWaveform, AfeError> {
    let mut chain = AfeChain::new(*cfg, photocurrent.sample_rate)?;
    Ok(chain.extend(photocurrent))
}

/// Quantized receiver samples taken on the drifting RX clock.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcSampleStream {
    pub codes: Vec<u16>,
    /// Nominal sampling rate, Hz.
    pub sample_rate: f64,
    pub rx_clock: ClockModel,
}

/// Streaming ADC sampler. Sample instants come from the RX clock and are
/// entirely independent of the transmit clock; each instant reads the
/// nearest simulation-grid sample.
#[derive(Debug)]
pub struct AdcSampler {
    rx_clock: ClockModel,
    cfg: AfeConfig,
    sim_rate: f64,
    next_sample: u64,
    rng: ChaCha8Rng,
}

impl AdcSampler {
    pub fn new(rx_clock: ClockModel, cfg: AfeConfig, sim_rate: f64, jitter_seed: u64) -> Self {
        AdcSampler {
            rx_clock,
            cfg,
            sim_rate,
            next_sample: 0,
            rng: ChaCha8Rng::seed_from_u64(jitter_seed),
        }
    }

    /// Consumes the chunk of simulation samples starting at global grid
    /// index `chunk_base` and returns the ADC codes whose instants round
    /// into it.
    pub fn extend(&mut self, v: &AnalogWaveform, chunk_base: u64) -> Vec<u16> {
        let end = chunk_base + v.samples.len() as u64;
        let mut codes = Vec::new();
        loop {
            let t = self
                .rx_clock
                .instant_jittered(self.next_sample, &mut self.rng);
            let grid = (t * self.sim_rate).round().max(0.0) as u64;
            if grid >= end {
                break;
            }
            // instants that rounded below this chunk were already served
            if grid >= chunk_base {
                let value = v.samples[(grid - chunk_base) as usize];
                codes.push(self.cfg.quantize(value));
            }
            self.next_sample += 1;
        }
        codes
    }
}

/// One-shot ADC sampling of a waveform.
pub fn adc_sample(v: &AnalogWaveform, rx_clock: ClockModel, cfg: &AfeConfig) -> AdcSampleStream {
    let mut sampler = AdcSampler::new(rx_clock, *cfg, v.sample_rate, 0);
    let codes = sampler.extend(v, 0);
    AdcSampleStream {
        codes,
        sample_rate: rx_clock.nominal_rate,
        rx_clock,
    }
}
