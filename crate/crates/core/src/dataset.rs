//! Trace files and the bundled nine-place benchmark.
//!
//! # Trace CSV
//!
//! ```text
//! # ehsense-trace v1 units=mv rate_hz=16
//! case_id,t,SC1,SC2,SC3,SC4,SC5,PIEZO,label
//! case01,0,351.208301,...,Laboratory
//! ```
//!
//! The first line carries the sample unit (`mv`, or `digit` with an extra
//! `bits=<n>` key) and the sample rate. `t` counts samples from zero within
//! each case. Millivolts are written with six decimals.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::acquisition::DigitTrace;
use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, substream};
use crate::signal::{
    simulate, ElementResponses, PlaceProfile, Response, Scenario, Segment, SolarResponse, Spectrum, VoltageTrace,
};

const TRACE_MAGIC: &str = "# ehsense-trace v1";

/// Traces loaded from a file, in either unit.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceSet {
    Millivolts(Vec<VoltageTrace>),
    Digits {
        traces: Vec<DigitTrace>,
        resolution_bits: u32,
    },
}

impl TraceSet {
    pub fn len(&self) -> usize {
        match self {
            TraceSet::Millivolts(t) => t.len(),
            TraceSet::Digits { traces, .. } => traces.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_uniform<'a>(
    kinds: impl Iterator<Item = (Vec<ElementKind>, f64)> + 'a,
) -> Result<(Vec<ElementKind>, f64)> {
    let mut first: Option<(Vec<ElementKind>, f64)> = None;
    for (k, rate) in kinds {
        match &first {
            None => first = Some((k, rate)),
            Some((fk, fr)) => {
                if *fk != k || *fr != rate {
                    return Err(Error::Validation("traces differ in channels or sample rate".into()));
                }
            }
        }
    }
    first.ok_or(Error::Empty("trace list"))
}

fn write_header<W: Write>(out: &mut W, meta: &str, channels: &[ElementKind]) -> Result<()> {
    writeln!(out, "{TRACE_MAGIC} {meta}")?;
    let names: Vec<&str> = channels.iter().map(|k| k.name()).collect();
    writeln!(out, "case_id,t,{},label", names.join(","))?;
    Ok(())
}

fn check_name(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', '"', '\n', '\r']) {
        return Err(Error::Validation(format!("{what} '{s}' cannot be written to a trace file")));
    }
    Ok(())
}

pub fn write_voltage_traces<W: Write>(traces: &[VoltageTrace], mut out: W) -> Result<()> {
    let (channels, rate) = check_uniform(
        traces
            .iter()
            .map(|t| (t.channels.keys().copied().collect(), t.sample_rate_hz)),
    )?;
    write_header(&mut out, &format!("units=mv rate_hz={rate}"), &channels)?;
    let mut line = String::new();
    for t in traces {
        t.validate()?;
        check_name("case id", &t.case_id)?;
        let cols: Vec<&Vec<f64>> = t.channels.values().collect();
        for (i, label) in t.labels.iter().enumerate() {
            check_name("label", label)?;
            line.clear();
            use std::fmt::Write as _;
            let _ = write!(line, "{},{}", t.case_id, i);
            for c in &cols {
                let _ = write!(line, ",{:.6}", c[i]);
            }
            let _ = writeln!(line, ",{label}");
            out.write_all(line.as_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_digit_traces<W: Write>(traces: &[DigitTrace], resolution_bits: u32, mut out: W) -> Result<()> {
    let (channels, rate) = check_uniform(
        traces
            .iter()
            .map(|t| (t.channels.keys().copied().collect(), t.sample_rate_hz)),
    )?;
    write_header(
        &mut out,
        &format!("units=digit bits={resolution_bits} rate_hz={rate}"),
        &channels,
    )?;
    let mut line = String::new();
    for t in traces {
        t.validate(resolution_bits)?;
        check_name("case id", &t.case_id)?;
        let cols: Vec<&Vec<u16>> = t.channels.values().collect();
        for (i, label) in t.labels.iter().enumerate() {
            check_name("label", label)?;
            line.clear();
            use std::fmt::Write as _;
            let _ = write!(line, "{},{}", t.case_id, i);
            for c in &cols {
                let _ = write!(line, ",{}", c[i]);
            }
            let _ = writeln!(line, ",{label}");
            out.write_all(line.as_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

enum Unit {
    Millivolts,
    Digits(u32),
}

fn parse_meta(line: &str) -> Result<(Unit, f64)> {
    let rest = line
        .strip_prefix(TRACE_MAGIC)
        .ok_or_else(|| Error::parse(1, "not an ehsense trace file"))?;
    let mut unit = None;
    let mut bits = None;
    let mut rate = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("malformed header entry '{kv}'")))?;
        match k {
            "units" => unit = Some(v.to_string()),
            "bits" => bits = Some(v.parse::<u32>().map_err(|_| Error::parse(1, format!("bad bits '{v}'")))?),
            "rate_hz" => rate = Some(v.parse::<f64>().map_err(|_| Error::parse(1, format!("bad rate '{v}'")))?),
            _ => return Err(Error::parse(1, format!("unknown header key '{k}'"))),
        }
    }
    let rate = rate.filter(|r| r.is_finite() && *r > 0.0).ok_or_else(|| Error::parse(1, "missing or invalid rate_hz"))?;
    let unit = match unit.as_deref() {
        Some("mv") => Unit::Millivolts,
        Some("digit") => {
            let bits = bits
                .filter(|b| (1..=16).contains(b))
                .ok_or_else(|| Error::parse(1, "digit traces need bits=1..16"))?;
            Unit::Digits(bits)
        }
        other => return Err(Error::parse(1, format!("unknown units {other:?}"))),
    };
    Ok((unit, rate))
}

pub fn read_traces<R: Read>(mut input: R) -> Result<TraceSet> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(0, format!("unreadable trace file: {e}")))?;
    let (meta, body) = text.split_once('\n').ok_or_else(|| Error::parse(1, "missing header"))?;
    let (unit, rate) = parse_meta(meta.trim_end_matches('\r'))?;

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| Error::parse(2, e.to_string()))?.clone();
    let n = header.len();
    if n < 4 || &header[0] != "case_id" || &header[1] != "t" || &header[n - 1] != "label" {
        return Err(Error::parse(2, "header must be case_id,t,<channels...>,label"));
    }
    let mut channels = Vec::new();
    for name in header.iter().skip(2).take(n - 3) {
        let k: ElementKind = name.parse().map_err(|e: Error| Error::parse(2, e.to_string()))?;
        if channels.last().is_some_and(|last| *last >= k) {
            return Err(Error::parse(2, "channel columns must be unique and in canonical order"));
        }
        channels.push(k);
    }

    // case id -> (samples per channel, labels)
    let mut order: Vec<String> = Vec::new();
    let mut cases: BTreeMap<String, (Vec<Vec<f64>>, Vec<String>)> = BTreeMap::new();
    let max_digit = match unit {
        Unit::Digits(bits) => Some(((1u32 << bits) - 1) as f64),
        Unit::Millivolts => None,
    };
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 3;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != n {
            return Err(Error::parse(line, format!("expected {n} fields, got {}", rec.len())));
        }
        let case = &rec[0];
        if case.is_empty() {
            return Err(Error::parse(line, "empty case_id"));
        }
        let entry = cases.entry(case.to_string()).or_insert_with(|| {
            order.push(case.to_string());
            (vec![Vec::new(); channels.len()], Vec::new())
        });
        let t: usize = rec[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("t '{}' is not a sample index", &rec[1])))?;
        if t != entry.1.len() {
            return Err(Error::parse(
                line,
                format!("case {case}: expected t={}, found t={t}", entry.1.len()),
            ));
        }
        for (c, col) in entry.0.iter_mut().enumerate() {
            let cell = &rec[c + 2];
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(line, format!("{}: '{cell}' is not numeric", channels[c])))?;
            let ok = match max_digit {
                Some(max) => v.fract() == 0.0 && (0.0..=max).contains(&v),
                None => v.is_finite(),
            };
            if !ok {
                return Err(Error::parse(line, format!("{}: value '{cell}' out of range", channels[c])));
            }
            col.push(v);
        }
        let label = &rec[n - 1];
        if label.is_empty() {
            return Err(Error::parse(line, "empty label"));
        }
        entry.1.push(label.to_string());
    }
    if order.is_empty() {
        return Err(Error::parse(3, "trace file has no samples"));
    }

    match unit {
        Unit::Millivolts => {
            let traces = order
                .into_iter()
                .map(|case| {
                    let (cols, labels) = cases.remove(&case).expect("case recorded");
                    VoltageTrace {
                        sample_rate_hz: rate,
                        channels: channels.iter().copied().zip(cols).collect(),
                        labels,
                        case_id: case,
                    }
                })
                .collect();
            Ok(TraceSet::Millivolts(traces))
        }
        Unit::Digits(bits) => {
            let traces = order
                .into_iter()
                .map(|case| {
                    let (cols, labels) = cases.remove(&case).expect("case recorded");
                    DigitTrace {
                        channels: channels
                            .iter()
                            .copied()
                            .zip(cols.into_iter().map(|c| c.into_iter().map(|v| v as u16).collect()))
                            .collect(),
                        labels,
                        sample_rate_hz: rate,
                        case_id: case,
                    }
                })
                .collect();
            Ok(TraceSet::Digits {
                traces,
                resolution_bits: bits,
            })
        }
    }
}

pub fn load_traces(path: impl AsRef<Path>) -> Result<TraceSet> {
    read_traces(fs::File::open(path)?)
}

pub fn save_voltage_traces(traces: &[VoltageTrace], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write_voltage_traces(traces, &mut out)?;
    out.flush()?;
    Ok(())
}

/// One benchmark place: its base profile, its share of windows and how
/// strongly daylight reaches it.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlace {
    pub profile: PlaceProfile,
    /// Windows observed for this place across the reference recording; dwell
    /// time per case is proportional to it.
    pub support: u32,
    /// Fraction of the place's light that follows the day condition, in
    /// `[0, 1]`. Zero means purely artificial lighting.
    pub daylight_share: f64,
}

/// Weather and time of day for one recorded case.
#[derive(Debug, Clone, PartialEq)]
pub struct DayCondition {
    pub name: String,
    /// Multiplier on the daylight part of every place's intensity.
    pub intensity_scale: f64,
    /// How far the daylight part of the spectrum moves toward the daylight
    /// reference spectrum, in `[0, 1]`.
    pub daylight_tilt: f64,
    /// Added to the ambient temperature, scaled by the daylight share.
    pub ambient_offset_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    /// Visited once per case, in this order.
    pub places: Vec<BenchmarkPlace>,
    /// One case per condition.
    pub conditions: Vec<DayCondition>,
    pub responses: ElementResponses,
    /// Windows per case for each unit of `support`.
    pub windows_per_support: f64,
    pub window_seconds: f64,
    pub sample_rate_hz: f64,
    pub skin_temp_c: f64,
    /// Log-normal spread of per-case intensity around the place profile.
    pub case_jitter: f64,
    /// Log-normal spread of per-case motion level around the place profile.
    pub motion_jitter: f64,
    pub seed: u64,
}

pub const BENCHMARK_PLACES: [&str; 9] = [
    "Laboratory",
    "Seminar_Room",
    "Toilet",
    "Stairs",
    "Elevator",
    "Corridor_1st",
    "Corridor_4th",
    "Outdoors",
    "Cafeteria",
];

/// Reference spectra used by the default profiles. Illustrative shapes, not
/// measurements.
pub mod spectra {
    use crate::signal::Spectrum;

    pub fn daylight() -> Spectrum {
        Spectrum::normalized(vec![
            (350.0, 4.0),
            (400.0, 7.0),
            (450.0, 9.0),
            (500.0, 9.0),
            (550.0, 9.0),
            (600.0, 8.5),
            (650.0, 8.0),
            (700.0, 7.5),
            (750.0, 7.0),
            (800.0, 6.5),
            (850.0, 6.0),
            (900.0, 5.5),
            (950.0, 4.5),
            (1000.0, 4.0),
            (1100.0, 3.0),
        ])
        .expect("static spectrum")
    }

    pub fn fluorescent() -> Spectrum {
        Spectrum::normalized(vec![
            (405.0, 5.0),
            (435.0, 18.0),
            (490.0, 8.0),
            (545.0, 35.0),
            (580.0, 10.0),
            (610.0, 20.0),
            (650.0, 4.0),
        ])
        .expect("static spectrum")
    }

    pub fn white_led() -> Spectrum {
        Spectrum::normalized(vec![
            (450.0, 30.0),
            (500.0, 10.0),
            (550.0, 25.0),
            (600.0, 22.0),
            (650.0, 10.0),
            (700.0, 3.0),
        ])
        .expect("static spectrum")
    }

    pub fn cool_led() -> Spectrum {
        Spectrum::normalized(vec![(450.0, 45.0), (550.0, 30.0), (600.0, 18.0), (650.0, 7.0)]).expect("static spectrum")
    }

    pub fn incandescent() -> Spectrum {
        Spectrum::normalized(vec![
            (450.0, 3.0),
            (500.0, 5.0),
            (550.0, 8.0),
            (600.0, 11.0),
            (650.0, 13.0),
            (700.0, 14.0),
            (800.0, 15.0),
            (900.0, 14.0),
            (1000.0, 11.0),
            (1100.0, 6.0),
        ])
        .expect("static spectrum")
    }
}

fn solar(gain: f64, saturation_mv: f64, qe: &[(f64, f64)]) -> Response {
    Response::Solar(SolarResponse {
        intensity_gain: gain,
        qe_curve: qe.to_vec(),
        saturation_mv,
    })
}

/// Default element responses. The quantum-efficiency knots follow the
/// qualitative shapes of the five cell materials and are illustrative only.
pub fn default_responses(include_peltier: bool) -> ElementResponses {
    let mut channels = BTreeMap::new();
    // Polycrystalline silicon, glass coated: broad, peaks in the near IR.
    channels.insert(
        ElementKind::SC1,
        solar(
            0.9,
            2800.0,
            &[
                (300.0, 0.05),
                (400.0, 0.35),
                (500.0, 0.6),
                (600.0, 0.75),
                (700.0, 0.85),
                (800.0, 0.93),
                (900.0, 1.0),
                (1000.0, 0.85),
                (1100.0, 0.3),
                (1200.0, 0.0),
            ],
        ),
    );
    // Organic thin film: visible only, strong at low light.
    channels.insert(
        ElementKind::SC2,
        solar(
            1.6,
            3000.0,
            &[
                (300.0, 0.2),
                (400.0, 0.7),
                (500.0, 1.0),
                (550.0, 1.0),
                (600.0, 0.85),
                (700.0, 0.45),
                (800.0, 0.1),
                (900.0, 0.02),
                (1200.0, 0.0),
            ],
        ),
    );
    // Amorphous silicon.
    channels.insert(
        ElementKind::SC3,
        solar(
            1.5,
            2600.0,
            &[
                (300.0, 0.3),
                (400.0, 0.75),
                (500.0, 1.0),
                (600.0, 0.8),
                (700.0, 0.35),
                (800.0, 0.05),
                (900.0, 0.0),
                (1200.0, 0.0),
            ],
        ),
    );
    // Polycrystalline silicon, uncoated: more blue response than SC1.
    channels.insert(
        ElementKind::SC4,
        solar(
            0.7,
            2400.0,
            &[
                (300.0, 0.15),
                (400.0, 0.5),
                (500.0, 0.7),
                (600.0, 0.8),
                (700.0, 0.88),
                (800.0, 0.95),
                (900.0, 1.0),
                (1000.0, 0.9),
                (1100.0, 0.4),
                (1200.0, 0.02),
            ],
        ),
    );
    // Thin amorphous silicon: blue-shifted.
    channels.insert(
        ElementKind::SC5,
        solar(
            1.1,
            3200.0,
            &[
                (300.0, 0.35),
                (400.0, 0.85),
                (450.0, 1.0),
                (550.0, 0.9),
                (650.0, 0.5),
                (750.0, 0.12),
                (850.0, 0.0),
                (1200.0, 0.0),
            ],
        ),
    );
    channels.insert(ElementKind::PIEZO, Response::Piezo { gain: 120.0 });
    if include_peltier {
        channels.insert(ElementKind::PELTIER, Response::Peltier { seebeck_gain: 6.0 });
    }
    ElementResponses { channels }
}

#[allow(clippy::too_many_arguments)]
fn place(
    name: &str,
    intensity_lux: f64,
    spectrum: Spectrum,
    ambient_temp_c: f64,
    motion_level: f64,
    noise_sigma_mv: f64,
    support: u32,
    daylight_share: f64,
) -> BenchmarkPlace {
    BenchmarkPlace {
        profile: PlaceProfile {
            name: name.into(),
            intensity_lux,
            spectrum,
            ambient_temp_c,
            motion_level,
            noise_sigma_mv,
        },
        support,
        daylight_share,
    }
}

/// The nine places with synthetic magnitudes and window supports taken from
/// the reference all-elements result table.
pub fn default_places() -> Vec<BenchmarkPlace> {
    use spectra::*;
    let mix = |a: Spectrum, b: Spectrum, t: f64| a.mix(&b, t).expect("static spectra mix");
    vec![
        place("Laboratory", 750.0, mix(fluorescent(), daylight(), 0.15), 24.0, 0.35, 4.0, 7899, 0.2),
        place("Corridor_4th", 240.0, mix(fluorescent(), daylight(), 0.2), 23.0, 0.9, 5.0, 464, 0.25),
        place("Elevator", 220.0, cool_led(), 24.0, 0.4, 4.0, 161, 0.0),
        place("Corridor_1st", 260.0, mix(fluorescent(), daylight(), 0.3), 22.0, 0.9, 5.0, 427, 0.3),
        place("Outdoors", 20000.0, daylight(), 20.0, 0.95, 8.0, 345, 1.0),
        place("Cafeteria", 400.0, mix(incandescent(), white_led(), 0.5), 25.0, 0.5, 5.0, 945, 0.45),
        place("Stairs", 160.0, mix(fluorescent(), daylight(), 0.3), 21.0, 1.2, 5.0, 350, 0.4),
        place("Seminar_Room", 400.0, white_led(), 23.0, 0.2, 4.0, 1767, 0.3),
        place("Toilet", 220.0, mix(fluorescent(), incandescent(), 0.3), 22.0, 0.5, 4.0, 434, 0.05),
    ]
}

/// Ten day conditions: three weathers at several times of day.
pub fn default_conditions() -> Vec<DayCondition> {
    let c = |name: &str, scale: f64, tilt: f64, offset: f64| DayCondition {
        name: name.into(),
        intensity_scale: scale,
        daylight_tilt: tilt,
        ambient_offset_c: offset,
    };
    vec![
        c("rainy_morning", 0.25 * 0.7, 0.0, -4.0),
        c("rainy_afternoon", 0.25, 0.0, -3.0),
        c("rainy_evening", 0.25 * 0.35, 0.0, -5.0),
        c("cloudy_morning", 0.5 * 0.7, 0.0, -1.0),
        c("cloudy_afternoon", 0.5, 0.0, 0.0),
        c("cloudy_evening", 0.5 * 0.35, 0.0, -2.0),
        c("cloudy_night", 0.03, 0.0, -4.0),
        c("sunny_morning", 0.7, 0.5, 2.0),
        c("sunny_afternoon", 1.0, 0.5, 5.0),
        c("sunny_evening", 0.35, 0.5, 1.0),
    ]
}

/// `n` conditions taken from `base` in order, wrapping around. Repeats get a
/// `_2`, `_3`, ... suffix so case ids stay distinct.
pub fn cycle_conditions(base: &[DayCondition], n: usize) -> Vec<DayCondition> {
    if base.is_empty() {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let mut c = base[i % base.len()].clone();
            if i >= base.len() {
                c.name = format!("{}_{}", c.name, i / base.len() + 1);
            }
            c
        })
        .collect()
}

impl BenchmarkSpec {
    /// The default benchmark with `cases` cases (conditions cycle when more
    /// than ten are requested).
    pub fn with_cases(cases: usize, seed: u64) -> Self {
        let conditions = cycle_conditions(&default_conditions(), cases);
        BenchmarkSpec {
            places: default_places(),
            conditions,
            responses: default_responses(false),
            windows_per_support: 0.1,
            window_seconds: 2.0,
            sample_rate_hz: 16.0,
            skin_temp_c: 33.0,
            case_jitter: 0.08,
            motion_jitter: 0.35,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.places.is_empty() {
            return Err(Error::Validation("benchmark has no places".into()));
        }
        if self.conditions.is_empty() {
            return Err(Error::Validation("benchmark has no cases".into()));
        }
        for p in &self.places {
            p.profile.validate()?;
            if p.support == 0 {
                return Err(Error::Validation(format!("{}: support must be > 0", p.profile.name)));
            }
            if !(0.0..=1.0).contains(&p.daylight_share) {
                return Err(Error::Validation(format!("{}: daylight_share outside [0, 1]", p.profile.name)));
            }
        }
        let mut names: Vec<&str> = self.places.iter().map(|p| p.profile.name.as_str()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("benchmark place names must be unique".into()));
        }
        for c in &self.conditions {
            if !(c.intensity_scale.is_finite() && c.intensity_scale >= 0.0) {
                return Err(Error::Validation(format!("{}: intensity scale must be >= 0", c.name)));
            }
            if !(0.0..=1.0).contains(&c.daylight_tilt) {
                return Err(Error::Validation(format!("{}: daylight tilt outside [0, 1]", c.name)));
            }
        }
        if !(self.windows_per_support.is_finite() && self.windows_per_support > 0.0) {
            return Err(Error::Validation("windows_per_support must be > 0".into()));
        }
        if !(self.case_jitter.is_finite() && self.case_jitter >= 0.0) {
            return Err(Error::Validation("case_jitter must be >= 0".into()));
        }
        if !(self.motion_jitter.is_finite() && self.motion_jitter >= 0.0) {
            return Err(Error::Validation("motion_jitter must be >= 0".into()));
        }
        crate::acquisition::window_length(self.window_seconds, self.sample_rate_hz)?;
        self.responses.validate()
    }

    /// Windows each place occupies in one case.
    pub fn windows_per_case(&self, place: &BenchmarkPlace) -> usize {
        ((place.support as f64 * self.windows_per_support).round() as usize).max(1)
    }

    pub fn case_id(&self, index: usize) -> String {
        format!("case{:02}_{}", index + 1, self.conditions[index].name)
    }

    /// Place profiles as seen on case `index`.
    pub fn case_profiles(&self, index: usize) -> Result<Vec<PlaceProfile>> {
        let cond = &self.conditions[index];
        let daylight = spectra::daylight();
        let mut rng = substream(self.seed, index as u64);
        let mut out = Vec::with_capacity(self.places.len());
        for p in &self.places {
            let share = p.daylight_share;
            let z_light: f64 = rng.sample(StandardNormal);
            let z_motion: f64 = rng.sample(StandardNormal);
            let scale = (1.0 - share) + share * cond.intensity_scale;
            let mut profile = p.profile.clone();
            profile.intensity_lux *= scale * (self.case_jitter * z_light).exp();
            profile.motion_level *= (self.motion_jitter * z_motion).exp();
            profile.ambient_temp_c += share * cond.ambient_offset_c;
            if cond.daylight_tilt > 0.0 && share > 0.0 {
                profile.spectrum = profile.spectrum.mix(&daylight, cond.daylight_tilt * share)?;
            }
            out.push(profile);
        }
        Ok(out)
    }

    pub fn scenario(&self, index: usize) -> Scenario {
        Scenario {
            case_id: self.case_id(index),
            segments: self
                .places
                .iter()
                .map(|p| Segment {
                    place: p.profile.name.clone(),
                    duration_s: self.windows_per_case(p) as f64 * self.window_seconds,
                })
                .collect(),
            skin_temp_c: self.skin_temp_c,
            seed: derive_seed(self.seed, index as u64),
        }
    }
}

/// Simulates every case of the benchmark, one trace per case.
pub fn generate_benchmark(spec: &BenchmarkSpec) -> Result<Vec<VoltageTrace>> {
    use rayon::prelude::*;
    spec.validate()?;
    (0..spec.conditions.len())
        .into_par_iter()
        .map(|i| {
            let profiles = spec.case_profiles(i)?;
            simulate(&spec.scenario(i), &profiles, &spec.responses, spec.sample_rate_hz)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> BenchmarkSpec {
        BenchmarkSpec {
            windows_per_support: 0.01,
            ..BenchmarkSpec::with_cases(3, seed)
        }
    }

    #[test]
    fn default_spec_shape() {
        let spec = BenchmarkSpec::with_cases(10, 42);
        spec.validate().unwrap();
        assert_eq!(spec.places.len(), 9);
        let mut names: Vec<&str> = spec.places.iter().map(|p| p.profile.name.as_str()).collect();
        names.sort();
        let mut expected = BENCHMARK_PLACES.to_vec();
        expected.sort();
        assert_eq!(names, expected);
        assert_eq!(spec.conditions.len(), 10);
        assert_eq!(BenchmarkSpec::with_cases(13, 1).conditions.len(), 13);
    }

    #[test]
    fn support_ratios_match_reference_within_ten_percent() {
        let spec = BenchmarkSpec::with_cases(10, 42);
        let lab = spec.places.iter().find(|p| p.profile.name == "Laboratory").unwrap();
        for p in &spec.places {
            let want = p.support as f64 / lab.support as f64;
            let got = spec.windows_per_case(p) as f64 / spec.windows_per_case(lab) as f64;
            assert!((got / want - 1.0).abs() <= 0.10, "{}: {got} vs {want}", p.profile.name);
        }
    }

    #[test]
    fn sunny_shifts_spectrum_and_scales_daylight_places() {
        let spec = BenchmarkSpec {
            case_jitter: 0.0,
            ..BenchmarkSpec::with_cases(10, 1)
        };
        let rainy = spec.case_profiles(1).unwrap();
        let sunny = spec.case_profiles(8).unwrap();
        let find = |ps: &[PlaceProfile], n: &str| ps.iter().find(|p| p.name == n).unwrap().clone();
        assert_eq!(find(&rainy, "Elevator").intensity_lux, find(&sunny, "Elevator").intensity_lux);
        assert!(find(&sunny, "Outdoors").intensity_lux > 3.0 * find(&rainy, "Outdoors").intensity_lux);
        assert_ne!(find(&sunny, "Laboratory").spectrum, find(&rainy, "Laboratory").spectrum);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_benchmark(&small_spec(5)).unwrap();
        let b = generate_benchmark(&small_spec(5)).unwrap();
        assert_eq!(a, b);
        let mut fa = Vec::new();
        let mut fb = Vec::new();
        write_voltage_traces(&a, &mut fa).unwrap();
        write_voltage_traces(&b, &mut fb).unwrap();
        assert_eq!(fa, fb);
        assert_ne!(a, generate_benchmark(&small_spec(6)).unwrap());
    }

    #[test]
    fn every_case_visits_every_place() {
        let traces = generate_benchmark(&small_spec(2)).unwrap();
        assert_eq!(traces.len(), 3);
        for t in &traces {
            let mut labels = t.labels.clone();
            labels.dedup();
            assert_eq!(labels.len(), 9);
            t.validate().unwrap();
        }
    }

    #[test]
    fn voltage_round_trip() {
        let traces = generate_benchmark(&small_spec(3)).unwrap();
        let mut buf = Vec::new();
        write_voltage_traces(&traces[..2], &mut buf).unwrap();
        let TraceSet::Millivolts(back) = read_traces(buf.as_slice()).unwrap() else {
            panic!("expected millivolts");
        };
        assert_eq!(back.len(), 2);
        for (a, b) in traces.iter().zip(&back) {
            assert_eq!(a.labels, b.labels);
            assert_eq!(a.case_id, b.case_id);
            assert_eq!(a.sample_rate_hz, b.sample_rate_hz);
            for (k, va) in &a.channels {
                for (x, y) in va.iter().zip(&b.channels[k]) {
                    assert!((x - y).abs() <= 5e-7, "{k}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn digit_round_trip_is_exact() {
        let traces = generate_benchmark(&small_spec(4)).unwrap();
        let cfg = crate::acquisition::AdcConfig::default();
        let digits: Vec<DigitTrace> = traces.iter().map(|t| crate::acquisition::quantize(t, &cfg).unwrap()).collect();
        let mut buf = Vec::new();
        write_digit_traces(&digits, 10, &mut buf).unwrap();
        let back = read_traces(buf.as_slice()).unwrap();
        assert_eq!(
            back,
            TraceSet::Digits {
                traces: digits,
                resolution_bits: 10
            }
        );
    }

    #[test]
    fn gaps_and_bad_cells_name_the_row() {
        let text = "# ehsense-trace v1 units=mv rate_hz=16\ncase_id,t,SC1,label\na,0,1.0,X\na,2,1.0,X\n";
        match read_traces(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "# ehsense-trace v1 units=mv rate_hz=16\ncase_id,t,SC1,label\na,0,abc,X\n";
        assert!(matches!(read_traces(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let text = "# ehsense-trace v1 units=mv rate_hz=16\ncase_id,t,label\na,0,X\n";
        assert!(matches!(read_traces(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let text = "# ehsense-trace v1 units=digit bits=10 rate_hz=16\ncase_id,t,SC1,label\na,0,1024,X\n";
        assert!(matches!(read_traces(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
        assert!(read_traces("case_id,t,SC1,label\n".as_bytes()).is_err());
        assert!(read_traces("".as_bytes()).is_err());
    }

    #[test]
    fn interleaved_cases_keep_first_appearance_order() {
        let text = "# ehsense-trace v1 units=mv rate_hz=16\ncase_id,t,SC1,label\nb,0,1,X\na,0,2,Y\nb,1,3,X\n";
        let TraceSet::Millivolts(t) = read_traces(text.as_bytes()).unwrap() else {
            panic!()
        };
        assert_eq!(t[0].case_id, "b");
        assert_eq!(t[0].channels[&ElementKind::SC1], vec![1.0, 3.0]);
        assert_eq!(t[1].case_id, "a");
    }
}
