//! Oscillator model shared by the transmitter symbol clock and the receiver
//! sampling clock.
//!
//! Real boards never tick at exactly their nominal rate; the two ends drift
//! apart by some parts-per-million and each edge carries a little jitter.
//! Both effects are modeled here so the bit-slip behavior of the receiver
//! can be exercised deterministically.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// A free-running clock with a fixed frequency offset and optional
/// per-edge Gaussian jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockModel {
    /// Nominal tick rate in Hz.
    pub nominal_rate: f64,
    /// Frequency offset in parts per million.
    pub ppm_offset: f64,
    /// Standard deviation of per-edge jitter in seconds.
    pub jitter_std: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("effective clock rate {0} Hz is not positive")]
    NonPositiveRate(f64),
    #[error("jitter standard deviation {0} is negative")]
    NegativeJitter(f64),
}

impl ClockModel {
    pub fn new(nominal_rate: f64, ppm_offset: f64, jitter_std: f64) -> Result<Self, ClockError> {
        let clock = ClockModel {
            nominal_rate,
            ppm_offset,
            jitter_std,
        };
        let rate = clock.effective_rate();
        if rate.is_nan() || rate <= 0.0 {
            return Err(ClockError::NonPositiveRate(rate));
        }
        if jitter_std < 0.0 {
            return Err(ClockError::NegativeJitter(jitter_std));
        }
        Ok(clock)
    }

    /// A clock with no drift and no jitter.
    pub fn ideal(nominal_rate: f64) -> Self {
        ClockModel {
            nominal_rate,
            ppm_offset: 0.0,
            jitter_std: 0.0,
        }
    }

    /// Same clock with a different ppm offset.
    pub fn with_ppm(self, ppm_offset: f64) -> Self {
        ClockModel { ppm_offset, ..self }
    }

    /// Actual tick rate in Hz: nominal * (1 + ppm * 1e-6).
    pub fn effective_rate(&self) -> f64 {
        self.nominal_rate * (1.0 + self.ppm_offset * 1e-6)
    }

    /// Time of tick `index` without jitter.
    pub fn instant(&self, index: u64) -> f64 {
        index as f64 / self.effective_rate()
    }

    /// Time of tick `index` with jitter drawn from `rng`. Draws exactly one
    /// sample per call when jitter is enabled and none otherwise, so
    /// jitterless runs consume no randomness.
    pub fn instant_jittered<R: Rng>(&self, index: u64, rng: &mut R) -> f64 {
        let t = self.instant(index);
        if self.jitter_std > 0.0 {
            let normal = Normal::new(0.0, self.jitter_std).expect("validated jitter");
            t + normal.sample(rng)
        } else {
            t
        }
    }
}
