//! Synthetic energy-harvester voltage traces.
//!
//! Each element type has a simple response model: solar cells respond
//! linearly to light intensity, weighted by their quantum-efficiency curve
//! over the place's spectrum; the piezo film follows the wearer's motion; the
//! peltier element follows the skin/ambient temperature difference. A
//! [`Scenario`] strings places together in time and [`simulate`] renders it
//! at a fixed sample rate.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::element::ElementKind;
use crate::error::{Error, Result};

/// Board input ceiling in millivolts.
pub const MAX_INPUT_MV: f64 = 3600.0;

/// Tolerance on the unit-sum constraint of a spectrum.
pub const SPECTRUM_SUM_TOLERANCE: f64 = 1e-9;

/// Relative spectral power of a light source, as `(wavelength nm, weight)`
/// pairs with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Spectrum(Vec<(f64, f64)>);

impl Spectrum {
    pub fn new(lines: Vec<(f64, f64)>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::Validation("spectrum has no lines".into()));
        }
        let mut sum = 0.0;
        for &(w, p) in &lines {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Validation(format!("spectrum wavelength {w} is not positive")));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!("spectrum weight {p} at {w} nm is negative")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SPECTRUM_SUM_TOLERANCE {
            return Err(Error::Validation(format!("spectrum weights sum to {sum}, expected 1")));
        }
        Ok(Spectrum(lines))
    }

    /// Builds a spectrum from unnormalized powers.
    pub fn normalized(lines: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = lines.iter().map(|&(_, p)| p).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Validation("spectrum has no power".into()));
        }
        Spectrum::new(lines.into_iter().map(|(w, p)| (w, p / total)).collect())
    }

    /// All power at one wavelength.
    pub fn monochromatic(wavelength_nm: f64) -> Result<Self> {
        Spectrum::new(vec![(wavelength_nm, 1.0)])
    }

    pub fn lines(&self) -> &[(f64, f64)] {
        &self.0
    }

    /// Convex mixture `(1 - t) * self + t * other`, merged on wavelength.
    pub fn mix(&self, other: &Spectrum, t: f64) -> Result<Spectrum> {
        let t = t.clamp(0.0, 1.0);
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (&(w, p), scale) in self
            .0
            .iter()
            .map(|l| (l, 1.0 - t))
            .chain(other.0.iter().map(|l| (l, t)))
        {
            match merged.iter_mut().find(|(mw, _)| *mw == w) {
                Some(slot) => slot.1 += p * scale,
                None => merged.push((w, p * scale)),
            }
        }
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        Spectrum::normalized(merged)
    }
}

impl TryFrom<Vec<(f64, f64)>> for Spectrum {
    type Error = Error;

    fn try_from(lines: Vec<(f64, f64)>) -> Result<Self> {
        Spectrum::new(lines)
    }
}

impl From<Spectrum> for Vec<(f64, f64)> {
    fn from(s: Spectrum) -> Self {
        s.0
    }
}

/// Linear intensity response of a solar cell with a normalized
/// quantum-efficiency curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarResponse {
    /// Millivolts per lux at unit efficiency.
    pub intensity_gain: f64,
    /// `(wavelength nm, efficiency)` knots, wavelengths strictly increasing.
    pub qe_curve: Vec<(f64, f64)>,
    pub saturation_mv: f64,
}

impl SolarResponse {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity_gain.is_finite() && self.intensity_gain > 0.0) {
            return Err(Error::Validation(format!(
                "intensity_gain must be > 0, got {}",
                self.intensity_gain
            )));
        }
        if !(self.saturation_mv.is_finite() && self.saturation_mv > 0.0) {
            return Err(Error::Validation(format!(
                "saturation_mv must be > 0, got {}",
                self.saturation_mv
            )));
        }
        if self.qe_curve.is_empty() {
            return Err(Error::Validation("qe_curve has no knots".into()));
        }
        let mut peak: f64 = 0.0;
        for (i, &(w, e)) in self.qe_curve.iter().enumerate() {
            if !w.is_finite() || !(0.0..=1.0).contains(&e) {
                return Err(Error::Validation(format!("qe knot ({w}, {e}) out of range")));
            }
            if i > 0 && w <= self.qe_curve[i - 1].0 {
                return Err(Error::Validation("qe_curve wavelengths must strictly increase".into()));
            }
            peak = peak.max(e);
        }
        if peak != 1.0 {
            return Err(Error::Validation(format!("qe_curve peak is {peak}, expected 1")));
        }
        Ok(())
    }

    /// Efficiency at `wavelength_nm` by piecewise-linear interpolation;
    /// outside the knot range the nearest end knot is used.
    pub fn efficiency(&self, wavelength_nm: f64) -> f64 {
        let knots = &self.qe_curve;
        let (first, last) = (knots[0], knots[knots.len() - 1]);
        if wavelength_nm <= first.0 {
            return first.1;
        }
        if wavelength_nm >= last.0 {
            return last.1;
        }
        let hi = knots.partition_point(|&(w, _)| w <= wavelength_nm);
        let (w0, e0) = knots[hi - 1];
        let (w1, e1) = knots[hi];
        e0 + (e1 - e0) * (wavelength_nm - w0) / (w1 - w0)
    }

    /// Spectrum-weighted efficiency `Σ spectrum(w) · qe(w)`.
    pub fn spectral_efficiency(&self, spectrum: &Spectrum) -> f64 {
        spectrum
            .lines()
            .iter()
            .map(|&(w, p)| p * self.efficiency(w))
            .sum()
    }
}

/// Noise-free solar cell output in millivolts.
pub fn solar_output_mv(resp: &SolarResponse, intensity_lux: f64, spectrum: &Spectrum) -> Result<f64> {
    if !(intensity_lux.is_finite() && intensity_lux >= 0.0) {
        return Err(Error::Validation(format!("intensity {intensity_lux} lux is negative")));
    }
    // Revalidate: the inner vector may come from a deserializer that skipped `new`.
    Spectrum::new(spectrum.lines().to_vec())?;
    let raw = resp.intensity_gain * intensity_lux * resp.spectral_efficiency(spectrum);
    Ok(raw.min(resp.saturation_mv).clamp(0.0, MAX_INPUT_MV))
}

/// Piezo film output for one tick of acceleration.
pub fn piezo_output_mv(motion_level: f64, instantaneous_accel: f64, gain: f64) -> f64 {
    let v = gain * instantaneous_accel.abs() * motion_level;
    if v.is_nan() {
        return 0.0;
    }
    v.clamp(0.0, MAX_INPUT_MV)
}

/// Peltier output. One-sided: an ambient warmer than the skin yields zero.
pub fn peltier_output_mv(skin_temp_c: f64, ambient_temp_c: f64, seebeck_gain: f64) -> f64 {
    let v = seebeck_gain * (skin_temp_c - ambient_temp_c).max(0.0);
    if v.is_nan() {
        return 0.0;
    }
    v.clamp(0.0, MAX_INPUT_MV)
}

/// Response model for one element channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Response {
    Solar(SolarResponse),
    Piezo { gain: f64 },
    Peltier { seebeck_gain: f64 },
}

impl Response {
    fn validate(&self, kind: ElementKind) -> Result<()> {
        match (self, kind) {
            (Response::Solar(s), k) if k.is_solar() => s.validate(),
            (Response::Piezo { gain }, ElementKind::PIEZO) => non_negative("piezo gain", *gain),
            (Response::Peltier { seebeck_gain }, ElementKind::PELTIER) => {
                non_negative("seebeck gain", *seebeck_gain)
            }
            _ => Err(Error::Validation(format!("response model does not fit element {kind}"))),
        }
    }
}

fn non_negative(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} must be >= 0, got {v}")))
    }
}

/// Response parameters for every simulated channel. Channels absent from the
/// map are not simulated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ElementResponses {
    pub channels: BTreeMap<ElementKind, Response>,
}

impl ElementResponses {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Validation("no element responses configured".into()));
        }
        for (kind, resp) in &self.channels {
            resp.validate(*kind)?;
        }
        Ok(())
    }

    pub fn kinds(&self) -> Vec<ElementKind> {
        self.channels.keys().copied().collect()
    }
}

/// Environmental description of one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceProfile {
    pub name: String,
    pub intensity_lux: f64,
    pub spectrum: Spectrum,
    pub ambient_temp_c: f64,
    /// RMS acceleration scale of the wearer while at this place.
    pub motion_level: f64,
    pub noise_sigma_mv: f64,
}

impl PlaceProfile {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("place name is empty".into()));
        }
        if !(self.intensity_lux.is_finite() && self.intensity_lux >= 0.0) {
            return Err(Error::Validation(format!("{}: intensity must be >= 0", self.name)));
        }
        Spectrum::new(self.spectrum.lines().to_vec())?;
        non_negative("motion_level", self.motion_level)?;
        non_negative("noise_sigma_mv", self.noise_sigma_mv)?;
        if !self.ambient_temp_c.is_finite() {
            return Err(Error::Validation(format!("{}: ambient temperature not finite", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub place: String,
    pub duration_s: f64,
}

/// A timed route through places.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub case_id: String,
    pub segments: Vec<Segment>,
    pub skin_temp_c: f64,
    pub seed: u64,
}

/// Per-element millivolt series with one place label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageTrace {
    pub sample_rate_hz: f64,
    pub channels: BTreeMap<ElementKind, Vec<f64>>,
    pub labels: Vec<String>,
    pub case_id: String,
}

impl VoltageTrace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (kind, samples) in &self.channels {
            if samples.len() != self.labels.len() {
                return Err(Error::Validation(format!(
                    "channel {kind} has {} samples but {} labels",
                    samples.len(),
                    self.labels.len()
                )));
            }
            if let Some((index, &value)) = samples
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && (0.0..=MAX_INPUT_MV).contains(*v)))
            {
                return Err(Error::SampleOutOfRange {
                    channel: *kind,
                    index,
                    value,
                    full_scale_mv: MAX_INPUT_MV,
                });
            }
        }
        Ok(())
    }
}

/// Renders a scenario into a voltage trace.
///
/// Every tick draws, per channel in canonical order, one standard-normal
/// noise value (and for the piezo first one acceleration value) from a
/// stream seeded by `scenario.seed`.
pub fn simulate(
    scenario: &Scenario,
    profiles: &[PlaceProfile],
    responses: &ElementResponses,
    sample_rate_hz: f64,
) -> Result<VoltageTrace> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!("sample rate must be > 0, got {sample_rate_hz}")));
    }
    responses.validate()?;
    if !scenario.skin_temp_c.is_finite() {
        return Err(Error::Validation("skin temperature not finite".into()));
    }

    let mut resolved = Vec::with_capacity(scenario.segments.len());
    for (i, seg) in scenario.segments.iter().enumerate() {
        let profile = profiles
            .iter()
            .find(|p| p.name == seg.place)
            .ok_or_else(|| Error::UnknownPlace {
                segment: i,
                name: seg.place.clone(),
            })?;
        if !(seg.duration_s.is_finite() && seg.duration_s > 0.0) {
            return Err(Error::Validation(format!(
                "segment {i}: duration must be > 0, got {}",
                seg.duration_s
            )));
        }
        profile.validate()?;
        resolved.push(profile);
    }

    let mut boundaries = Vec::with_capacity(resolved.len());
    let mut elapsed = 0.0;
    for seg in &scenario.segments {
        elapsed += seg.duration_s;
        boundaries.push((elapsed * sample_rate_hz).round() as usize);
    }
    let total = boundaries.last().copied().unwrap_or(0);

    let kinds = responses.kinds();
    let mut channels: BTreeMap<ElementKind, Vec<f64>> =
        kinds.iter().map(|&k| (k, Vec::with_capacity(total))).collect();
    let mut labels = Vec::with_capacity(total);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut start = 0;
    for (profile, &end) in resolved.iter().zip(&boundaries) {
        // Per-segment constant part of each channel.
        let mut steady = Vec::with_capacity(kinds.len());
        for kind in &kinds {
            let base = match &responses.channels[kind] {
                Response::Solar(s) => solar_output_mv(s, profile.intensity_lux, &profile.spectrum)?,
                Response::Piezo { .. } => 0.0,
                Response::Peltier { seebeck_gain } => {
                    peltier_output_mv(scenario.skin_temp_c, profile.ambient_temp_c, *seebeck_gain)
                }
            };
            steady.push(base);
        }
        for _ in start..end {
            for (kind, base) in kinds.iter().zip(&steady) {
                let signal = match &responses.channels[kind] {
                    Response::Piezo { gain } => {
                        let accel: f64 = rng.sample(StandardNormal);
                        piezo_output_mv(profile.motion_level, accel, *gain)
                    }
                    _ => *base,
                };
                let z: f64 = rng.sample(StandardNormal);
                let v = (signal + profile.noise_sigma_mv * z).clamp(0.0, MAX_INPUT_MV);
                channels
                    .get_mut(kind)
                    .expect("channel allocated for every kind")
                    .push(v);
            }
            labels.push(profile.name.clone());
        }
        start = start.max(end);
    }

    Ok(VoltageTrace {
        sample_rate_hz,
        channels,
        labels,
        case_id: scenario.case_id.clone(),
    })
}
