//! TOML form of a benchmark: places, element responses, day conditions and
//! generation settings.
//!
//! ```toml
//! [settings]
//! windows_per_support = 0.1
//! window_seconds = 2.0
//! sample_rate_hz = 16.0
//! skin_temp_c = 33.0
//! case_jitter = 0.08
//! motion_jitter = 0.35
//!
//! [[place]]
//! name = "Laboratory"
//! intensity_lux = 650.0
//! spectrum = [[435.0, 0.18], [545.0, 0.35]]
//! ambient_temp_c = 24.0
//! motion_level = 0.3
//! noise_sigma_mv = 4.0
//! support = 7899
//! daylight_share = 0.25
//!
//! [element.SC1]
//! model = "solar"
//! intensity_gain = 0.9
//! saturation_mv = 2800.0
//! qe_curve = [[300.0, 0.05], [900.0, 1.0]]
//!
//! [[condition]]
//! name = "sunny_afternoon"
//! intensity_scale = 1.0
//! daylight_tilt = 0.5
//! ambient_offset_c = 5.0
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{BenchmarkPlace, BenchmarkSpec, DayCondition};
use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::signal::{ElementResponses, PlaceProfile, Response};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub windows_per_support: f64,
    pub window_seconds: f64,
    pub sample_rate_hz: f64,
    pub skin_temp_c: f64,
    pub case_jitter: f64,
    pub motion_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceSection {
    #[serde(flatten)]
    pub profile: PlaceProfile,
    #[serde(default = "one")]
    pub support: u32,
    #[serde(default)]
    pub daylight_share: f64,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSection {
    pub name: String,
    pub intensity_scale: f64,
    #[serde(default)]
    pub daylight_tilt: f64,
    #[serde(default)]
    pub ambient_offset_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub settings: Settings,
    pub place: Vec<PlaceSection>,
    pub element: BTreeMap<ElementKind, Response>,
    pub condition: Vec<ConditionSection>,
}

impl ProfileConfig {
    pub fn from_spec(spec: &BenchmarkSpec) -> Self {
        ProfileConfig {
            settings: Settings {
                windows_per_support: spec.windows_per_support,
                window_seconds: spec.window_seconds,
                sample_rate_hz: spec.sample_rate_hz,
                skin_temp_c: spec.skin_temp_c,
                case_jitter: spec.case_jitter,
                motion_jitter: spec.motion_jitter,
            },
            place: spec
                .places
                .iter()
                .map(|p| PlaceSection {
                    profile: p.profile.clone(),
                    support: p.support,
                    daylight_share: p.daylight_share,
                })
                .collect(),
            element: spec.responses.channels.clone(),
            condition: spec
                .conditions
                .iter()
                .map(|c| ConditionSection {
                    name: c.name.clone(),
                    intensity_scale: c.intensity_scale,
                    daylight_tilt: c.daylight_tilt,
                    ambient_offset_c: c.ambient_offset_c,
                })
                .collect(),
        }
    }

    /// Validated benchmark spec using this configuration.
    pub fn to_spec(&self, seed: u64) -> Result<BenchmarkSpec> {
        let spec = BenchmarkSpec {
            places: self
                .place
                .iter()
                .map(|p| BenchmarkPlace {
                    profile: p.profile.clone(),
                    support: p.support,
                    daylight_share: p.daylight_share,
                })
                .collect(),
            conditions: self
                .condition
                .iter()
                .map(|c| DayCondition {
                    name: c.name.clone(),
                    intensity_scale: c.intensity_scale,
                    daylight_tilt: c.daylight_tilt,
                    ambient_offset_c: c.ambient_offset_c,
                })
                .collect(),
            responses: ElementResponses {
                channels: self.element.clone(),
            },
            windows_per_support: self.settings.windows_per_support,
            window_seconds: self.settings.window_seconds,
            sample_rate_hz: self.settings.sample_rate_hz,
            skin_temp_c: self.settings.skin_temp_c,
            case_jitter: self.settings.case_jitter,
            motion_jitter: self.settings.motion_jitter,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().replace('\n', " ")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
