//! Free-space optical channel: optical power in, photodiode current out.
//!
//! The deterministic part is inverse-square propagation through one lumped
//! gain constant plus an ambient DC term and an optional fluorescent
//! interference tone. All randomness of the link lives here as a single
//! white Gaussian noise term, so the rest of the chain stays reproducible.
//!
//! Three scenario presets mirror the evaluation conditions of the physical
//! board: `w_closed` (dark room), `w_open` (daylight ambient raises the shot
//! noise) and `interference` (daylight plus a fluorescent source whose
//! harmonics fall inside the receiver band). The preset constants are
//! calibration artifacts chosen so the dark-room link dies around 6 m and
//! the daylight link starts degrading around 3.5 m; they are committed
//! numbers, not physical measurements.

use crate::waveform::AnalogWaveform;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Photocurrent per watt of optical power at 1 m, A·m²/W.
pub const PATH_GAIN_CONST: f64 = 1.0e-4;
/// Receiver noise floor with no ambient light, amperes.
pub const NOISE_FLOOR: f64 = 1.0e-6;
/// Ambient photocurrent with windows open. Equals the signal current at
/// 3.5 m, the distance where external light rivals the transmitted light.
pub const AMBIENT_OPEN: f64 = 2.3e-5;
/// Shot-noise proxy: noise variance gained per ampere of ambient current.
pub const SHOT_NOISE_COEFF: f64 = 3.0e-7;
/// Fluorescent interferer fundamental, above the 10 kHz high-pass corner.
pub const INTERFERENCE_FREQ: f64 = 40e3;
/// Fluorescent interferer amplitude at the photodiode, amperes.
pub const INTERFERENCE_AMPLITUDE: f64 = 8.0e-6;
/// Odd harmonics added above the fundamental.
pub const INTERFERENCE_HARMONICS: u32 = 3;
/// Extra ambient current contributed by the fluorescent source itself.
pub const INTERFERENCE_AMBIENT_SCALE: f64 = 2.0;

/// A fluorescent-style interference tone: a fundamental plus decaying odd
/// harmonics, `amplitude * sum sin(2*pi*(2k+1)*f*t) / (2k+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interference {
    pub frequency: f64,
    pub amplitude: f64,
    pub harmonics: u32,
}

impl Interference {
    fn value(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..=self.harmonics {
            let order = (2 * k + 1) as f64;
            acc += (TAU * self.frequency * order * t).sin() / order;
        }
        self.amplitude * acc
    }
}

/// Channel configuration. Identical config and seed produce bit-identical
/// photocurrent.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub distance: f64,
    pub path_gain_const: f64,
    pub ambient_dc: f64,
    pub interference: Option<Interference>,
    pub noise_std: f64,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance {0} m must be positive")]
    BadDistance(f64),
    #[error("negative amplitude: {0}")]
    NegativeAmplitude(f64),
    #[error("unknown scenario `{0}` (expected w_open, w_closed or interference)")]
    UnknownScenario(String),
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.distance.is_nan() || self.distance <= 0.0 {
            return Err(ChannelError::BadDistance(self.distance));
        }
        for &a in &[self.path_gain_const, self.ambient_dc, self.noise_std] {
            if a < 0.0 {
                return Err(ChannelError::NegativeAmplitude(a));
            }
        }
        if let Some(i) = &self.interference {
            if i.amplitude < 0.0 {
                return Err(ChannelError::NegativeAmplitude(i.amplitude));
            }
        }
        Ok(())
    }
}

/// The three evaluation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    WOpen,
    WClosed,
    Interference,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::WClosed, Scenario::WOpen, Scenario::Interference];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::WOpen => "w_open",
            Scenario::WClosed => "w_closed",
            Scenario::Interference => "interference",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "w_open" => Ok(Scenario::WOpen),
            "w_closed" => Ok(Scenario::WClosed),
            "interference" => Ok(Scenario::Interference),
            other => Err(ChannelError::UnknownScenario(other.to_string())),
        }
    }
}

/// Builds the committed channel preset for a scenario at a distance.
/// The caller picks the seed.
pub fn scenario_preset(scenario: Scenario, distance: f64) -> ChannelConfig {
    let (ambient_dc, interference) = match scenario {
        Scenario::WClosed => (0.0, None),
        Scenario::WOpen => (AMBIENT_OPEN, None),
        Scenario::Interference => (
            AMBIENT_OPEN * INTERFERENCE_AMBIENT_SCALE,
            Some(Interference {
                frequency: INTERFERENCE_FREQ,
                amplitude: INTERFERENCE_AMPLITUDE,
                harmonics: INTERFERENCE_HARMONICS,
            }),
        ),
    };
    let noise_std = (NOISE_FLOOR * NOISE_FLOOR + SHOT_NOISE_COEFF * ambient_dc).sqrt();
    ChannelConfig {
        distance,
        path_gain_const: PATH_GAIN_CONST,
        ambient_dc,
        interference,
        noise_std,
        seed: 0,
    }
}

/// Streaming channel. Owns its RNG and the global sample index so chunked
/// processing is bit-identical to one-shot processing.
#[derive(Debug)]
pub struct Channel {
    cfg: ChannelConfig,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    sample_index: u64,
}

impl Channel {
    pub fn new(cfg: ChannelConfig) -> Result<Self, ChannelError> {
        cfg.validate()?;
        let noise = if cfg.noise_std > 0.0 {
            Some(Normal::new(0.0, cfg.noise_std).expect("validated std"))
        } else {
            None
        };
        Ok(Channel {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            noise,
            cfg,
            sample_index: 0,
        })
    }

    /// Transforms a chunk of transmitted optical power into photocurrent.
    pub fn extend(&mut self, tx: &AnalogWaveform) -> AnalogWaveform {
        let gain = self.cfg.path_gain_const / (self.cfg.distance * self.cfg.distance);
        let dt = 1.0 / tx.sample_rate;
        let mut samples = Vec::with_capacity(tx.samples.len());
        for &p in &tx.samples {
            let t = self.sample_index as f64 * dt;
            let mut i = gain * p + self.cfg.ambient_dc;
            if let Some(tone) = &self.cfg.interference {
                i += tone.value(t);
            }
            if let Some(noise) = &self.noise {
                i += noise.sample(&mut self.rng);
            }
            samples.push(i);
            self.sample_index += 1;
        }
        AnalogWaveform {
            samples,
            sample_rate: tx.sample_rate,
            t0: tx.t0,
        }
    }
}

/// One-shot channel application.
pub fn apply_channel(tx: &AnalogWaveform, cfg: &ChannelConfig) -> Result<AnalogWaveform, ChannelError> {
    let mut channel = Channel::new(cfg.clone())?;
    Ok(channel.extend(tx))
}
