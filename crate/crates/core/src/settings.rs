//! Plain-text `key = value` overrides for channel and front-end presets.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Unknown keys are errors so typos cannot silently change an experiment.
//!
//! ```text
//! # channel
//! path_gain_const = 1.0e-4
//! ambient_dc = 2.3e-5
//! noise_std = 1.0e-6
//! interference_freq = 40e3
//! interference_amplitude = 8e-6
//! interference_harmonics = 3
//! # front end
//! tia_gain = 1000
//! hpf_cutoff = 10e3
//! bias = 2.5
//! amp2_gain = 10
//! lpf_cutoff = 1.1e6
//! adc_bits = 12
//! adc_span = 5.0
//! # slicer
//! threshold_code = 2048
//! hysteresis = 0
//! ```

use crate::afe::AfeConfig;
use crate::channel::{ChannelConfig, Interference};
use crate::receiver::SlicerConfig;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SettingsError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse value `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
}

const KNOWN_KEYS: &[&str] = &[
    "path_gain_const",
    "ambient_dc",
    "noise_std",
    "interference_freq",
    "interference_amplitude",
    "interference_harmonics",
    "tia_gain",
    "hpf_cutoff",
    "bias",
    "amp2_gain",
    "lpf_cutoff",
    "adc_bits",
    "adc_span",
    "threshold_code",
    "hysteresis",
];

/// Parsed overrides, applied on top of preset values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, f64>,
}

impl Settings {
    /// Parses the `key = value` text format.
    pub fn parse(text: &str) -> Result<Settings, SettingsError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(SettingsError::Malformed {
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(SettingsError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            let parsed: f64 = value.parse().map_err(|_| SettingsError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            })?;
            values.insert(key.to_string(), parsed);
        }
        Ok(Settings { values })
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    /// Applies channel overrides. Setting `interference_amplitude` to zero
    /// removes the interferer; setting it on a preset without one adds a
    /// tone with the default frequency and harmonics unless those keys are
    /// also given.
    pub fn apply_channel(&self, cfg: &mut ChannelConfig) {
        if let Some(v) = self.get("path_gain_const") {
            cfg.path_gain_const = v;
        }
        if let Some(v) = self.get("ambient_dc") {
            cfg.ambient_dc = v;
        }
        if let Some(v) = self.get("noise_std") {
            cfg.noise_std = v;
        }
        let wants_tone = self.get("interference_amplitude").map(|a| a > 0.0);
        if wants_tone == Some(false) {
            cfg.interference = None;
        } else if self.get("interference_freq").is_some()
            || self.get("interference_amplitude").is_some()
            || self.get("interference_harmonics").is_some()
        {
            let mut tone = cfg.interference.unwrap_or(Interference {
                frequency: crate::channel::INTERFERENCE_FREQ,
                amplitude: crate::channel::INTERFERENCE_AMPLITUDE,
                harmonics: crate::channel::INTERFERENCE_HARMONICS,
            });
            if let Some(v) = self.get("interference_freq") {
                tone.frequency = v;
            }
            if let Some(v) = self.get("interference_amplitude") {
                tone.amplitude = v;
            }
            if let Some(v) = self.get("interference_harmonics") {
                tone.harmonics = v as u32;
            }
            cfg.interference = Some(tone);
        }
    }

    /// Applies front-end overrides.
    pub fn apply_afe(&self, cfg: &mut AfeConfig) {
        if let Some(v) = self.get("tia_gain") {
            cfg.tia_gain = v;
        }
        if let Some(v) = self.get("hpf_cutoff") {
            cfg.hpf_cutoff = v;
        }
        if let Some(v) = self.get("bias") {
            cfg.bias = v;
        }
        if let Some(v) = self.get("amp2_gain") {
            cfg.amp2_gain = v;
        }
        if let Some(v) = self.get("lpf_cutoff") {
            cfg.lpf_cutoff = v;
        }
        if let Some(v) = self.get("adc_bits") {
            cfg.adc_bits = v as u32;
        }
        if let Some(v) = self.get("adc_span") {
            cfg.adc_span = v;
        }
    }

    /// Applies slicer overrides.
    pub fn apply_slicer(&self, cfg: &mut SlicerConfig) {
        if let Some(v) = self.get("threshold_code") {
            cfg.threshold_code = v as u16;
        }
        if let Some(v) = self.get("hysteresis") {
            cfg.hysteresis = v as u16;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{scenario_preset, Scenario};

    #[test]
    fn parses_comments_and_blanks() {
        let text = "\n# comment\npath_gain_const = 2e-4  # trailing\n\nnoise_std=0\n";
        let settings = Settings::parse(text).unwrap();
        let mut cfg = scenario_preset(Scenario::WClosed, 1.0);
        settings.apply_channel(&mut cfg);
        assert_eq!(cfg.path_gain_const, 2e-4);
        assert_eq!(cfg.noise_std, 0.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert_eq!(
            Settings::parse("nope = 1"),
            Err(SettingsError::UnknownKey {
                line: 1,
                key: "nope".to_string()
            })
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            Settings::parse("tia_gain"),
            Err(SettingsError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            Settings::parse("bias = huh"),
            Err(SettingsError::BadValue { .. })
        ));
    }

    #[test]
    fn zero_amplitude_removes_interference() {
        let settings = Settings::parse("interference_amplitude = 0").unwrap();
        let mut cfg = scenario_preset(Scenario::Interference, 1.0);
        settings.apply_channel(&mut cfg);
        assert!(cfg.interference.is_none());
    }

    #[test]
    fn afe_and_slicer_overrides() {
        let settings = Settings::parse("adc_bits = 10\nthreshold_code = 511\nbias = 2.0").unwrap();
        let mut afe = AfeConfig::default();
        let mut slicer = SlicerConfig::default();
        settings.apply_afe(&mut afe);
        settings.apply_slicer(&mut slicer);
        assert_eq!(afe.adc_bits, 10);
        assert_eq!(afe.bias, 2.0);
        assert_eq!(slicer.threshold_code, 511);
    }
}
