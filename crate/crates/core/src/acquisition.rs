//! A/D conversion and fixed-length windowing.

use std::collections::BTreeMap;

use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::signal::VoltageTrace;

/// Converter settings. The defaults describe the board: 10 bits over
/// 3600 mV at 16 Hz, i.e. 3.515625 mV per digit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub resolution_bits: u32,
    pub full_scale_mv: f64,
    pub sample_rate_hz: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        AdcConfig {
            resolution_bits: 10,
            full_scale_mv: 3600.0,
            sample_rate_hz: 16.0,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.resolution_bits) {
            return Err(Error::Config(format!(
                "resolution must be 1..=16 bits, got {}",
                self.resolution_bits
            )));
        }
        if !(self.full_scale_mv.is_finite() && self.full_scale_mv > 0.0) {
            return Err(Error::Config(format!("full scale must be > 0 mV, got {}", self.full_scale_mv)));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Config(format!("sample rate must be > 0 Hz, got {}", self.sample_rate_hz)));
        }
        Ok(())
    }

    pub fn levels(&self) -> u32 {
        1 << self.resolution_bits
    }

    pub fn max_digit(&self) -> u16 {
        (self.levels() - 1) as u16
    }

    pub fn step_mv(&self) -> f64 {
        self.full_scale_mv / self.levels() as f64
    }

    /// Digit for one millivolt reading; the caller guarantees range.
    #[inline]
    pub fn digit(&self, mv: f64) -> u16 {
        let d = (mv / self.step_mv()).floor();
        d.clamp(0.0, self.max_digit() as f64) as u16
    }
}

/// Quantized trace: one digit sequence per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitTrace {
    pub channels: BTreeMap<ElementKind, Vec<u16>>,
    pub labels: Vec<String>,
    pub sample_rate_hz: f64,
    pub case_id: String,
}

impl DigitTrace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self, resolution_bits: u32) -> Result<()> {
        let max = (1u32 << resolution_bits) - 1;
        for (kind, digits) in &self.channels {
            if digits.len() != self.labels.len() {
                return Err(Error::Validation(format!(
                    "channel {kind} has {} samples but {} labels",
                    digits.len(),
                    self.labels.len()
                )));
            }
            if let Some(i) = digits.iter().position(|&d| d as u32 > max) {
                return Err(Error::Validation(format!(
                    "channel {kind} sample {i}: digit {} exceeds {max}",
                    digits[i]
                )));
            }
        }
        Ok(())
    }
}

/// One non-overlapping slice of a digit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_index: usize,
    pub digits: BTreeMap<ElementKind, Vec<u16>>,
    pub label: String,
    pub case_id: String,
}

/// Floor-quantizes every sample of a millivolt trace.
pub fn quantize(trace: &VoltageTrace, cfg: &AdcConfig) -> Result<DigitTrace> {
    cfg.validate()?;
    let mut channels = BTreeMap::new();
    for (&kind, samples) in &trace.channels {
        if samples.len() != trace.labels.len() {
            return Err(Error::Validation(format!(
                "channel {kind} has {} samples but {} labels",
                samples.len(),
                trace.labels.len()
            )));
        }
        let mut digits = Vec::with_capacity(samples.len());
        for (index, &mv) in samples.iter().enumerate() {
            if !(mv.is_finite() && (0.0..=cfg.full_scale_mv).contains(&mv)) {
                return Err(Error::SampleOutOfRange {
                    channel: kind,
                    index,
                    value: mv,
                    full_scale_mv: cfg.full_scale_mv,
                });
            }
            digits.push(cfg.digit(mv));
        }
        channels.insert(kind, digits);
    }
    Ok(DigitTrace {
        channels,
        labels: trace.labels.clone(),
        sample_rate_hz: trace.sample_rate_hz,
        case_id: trace.case_id.clone(),
    })
}

/// Samples per window at the given rate.
pub fn window_length(window_seconds: f64, sample_rate_hz: f64) -> Result<usize> {
    if !(window_seconds.is_finite() && window_seconds > 0.0) {
        return Err(Error::Config(format!("window must be > 0 s, got {window_seconds}")));
    }
    let len = (window_seconds * sample_rate_hz).round();
    if !(len >= 1.0 && len.is_finite()) {
        return Err(Error::Config(format!(
            "{window_seconds} s at {sample_rate_hz} Hz gives an empty window"
        )));
    }
    Ok(len as usize)
}

/// Majority label of a slice; ties go to the label that occurs first.
pub fn majority_label(labels: &[String]) -> Option<&str> {
    let mut tally: Vec<(&str, usize)> = Vec::new();
    for l in labels {
        match tally.iter_mut().find(|(name, _)| *name == l.as_str()) {
            Some(slot) => slot.1 += 1,
            None => tally.push((l.as_str(), 1)),
        }
    }
    let mut best: Option<(&str, usize)> = None;
    for (name, count) in tally {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((name, count));
        }
    }
    best.map(|(name, _)| name)
}

/// Cuts a digit trace into complete, contiguous windows. The trailing
/// partial window is dropped.
pub fn windowize(trace: &DigitTrace, window_seconds: f64) -> Result<Vec<Window>> {
    if trace.is_empty() {
        return Err(Error::Empty("digit trace"));
    }
    let len = window_length(window_seconds, trace.sample_rate_hz)?;
    let count = trace.len() / len;
    let mut windows = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * len;
        let end = start + len;
        let digits = trace
            .channels
            .iter()
            .map(|(&k, d)| (k, d[start..end].to_vec()))
            .collect();
        let label = majority_label(&trace.labels[start..end])
            .expect("window is non-empty")
            .to_string();
        windows.push(Window {
            start_index: start,
            digits,
            label,
            case_id: trace.case_id.clone(),
        });
    }
    Ok(windows)
}
