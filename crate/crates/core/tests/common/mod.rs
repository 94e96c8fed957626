//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ehsense::acquisition::AdcConfig;
use ehsense::dataset::{generate_benchmark, BenchmarkSpec};
use ehsense::features::{featurize_traces, FeatureMatrix};
use ehsense::seed::{derive_seed, substream};
use ehsense::signal::{simulate, ElementResponses, PlaceProfile, Response, Scenario, Segment, SolarResponse, Spectrum, VoltageTrace};
use ehsense::ElementKind;
use rand::Rng;

pub const SEED: u64 = 42;

/// Default benchmark features: 10 cases, 2 s windows, all six board channels.
pub fn benchmark_matrix(seed: u64) -> FeatureMatrix {
    let traces = generate_benchmark(&BenchmarkSpec::with_cases(10, seed)).unwrap();
    featurize_traces(&traces, &AdcConfig::default(), 2.0, &ElementKind::BOARD).unwrap()
}

/// A smaller benchmark for tests that need realistic traces but not the
/// full volume.
pub fn small_benchmark(cases: usize, seed: u64) -> Vec<VoltageTrace> {
    let spec = BenchmarkSpec {
        windows_per_support: 0.02,
        ..BenchmarkSpec::with_cases(cases, seed)
    };
    generate_benchmark(&spec).unwrap()
}

fn band_solar(lo: f64, hi: f64) -> Response {
    // Flat response over [lo, hi] nm, zero elsewhere.
    Response::Solar(SolarResponse {
        intensity_gain: 1.0,
        qe_curve: vec![(300.0, 0.0), (lo - 1.0, 0.0), (lo, 1.0), (hi, 1.0), (hi + 1.0, 0.0), (1200.0, 0.0)],
        saturation_mv: 3000.0,
    })
}

/// Nine places where only SC1 and SC2 carry place information.
///
/// Each place is light made of a 500 nm line and an 850 nm line. SC1 sees
/// only the first and SC2 only the second, and the places sit on a 3x3 grid
/// of (500 nm level, 850 nm level), so either cell alone merges three places
/// while the pair separates all nine. Light levels are jittered per case, not
/// per place, so places sharing a level really are indistinguishable to one
/// cell. SC3-SC5 have negligible gain and read as zero. Place `P0` gets half of
/// every case, which is what the zero channels fall back to.
///
/// Motion is misleading on purpose: nine fixed motion levels are rotated
/// through the places, place `p` of case `c` getting level `(p + c) mod 9`.
/// No place keeps a level from one case to the next, so a held-out visit
/// always matches the level some other place had in training.
///
/// The fixture samples at 256 Hz so each visit forms a tight piezo cluster.
pub const PLANTED_RATE_HZ: f64 = 256.0;

pub fn planted_traces(cases: usize, seed: u64) -> Vec<VoltageTrace> {
    assert!(cases <= 9, "motion rotation repeats after nine cases");
    let levels = [150.0, 450.0, 900.0];
    let mut channels = BTreeMap::new();
    channels.insert(ElementKind::SC1, band_solar(450.0, 550.0));
    channels.insert(ElementKind::SC2, band_solar(800.0, 900.0));
    for k in [ElementKind::SC3, ElementKind::SC4, ElementKind::SC5] {
        channels.insert(
            k,
            Response::Solar(SolarResponse {
                intensity_gain: 1e-9,
                qe_curve: vec![(300.0, 1.0), (1200.0, 1.0)],
                saturation_mv: 3000.0,
            }),
        );
    }
    channels.insert(ElementKind::PIEZO, Response::Piezo { gain: 1500.0 });
    let responses = ElementResponses { channels };

    let window_s = 2.0;
    (0..cases)
        .map(|case| {
            let mut rng = substream(seed, case as u64);
            let jitter = 1.0 + rng.random_range(-0.03..0.03);
            let mut profiles = Vec::new();
            let mut segments = Vec::new();
            for (p, (a, b)) in (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).enumerate() {
                let la = levels[a] * jitter;
                let lb = levels[b] * jitter;
                let name = format!("P{p}");
                profiles.push(PlaceProfile {
                    name: name.clone(),
                    intensity_lux: la + lb,
                    spectrum: Spectrum::new(vec![(500.0, la / (la + lb)), (850.0, lb / (la + lb))]).unwrap(),
                    ambient_temp_c: 22.0,
                    motion_level: 0.03 * 1.5f64.powi(((p + case) % 9) as i32),
                    noise_sigma_mv: 1.0,
                });
                let windows = if p == 0 { 80 } else { 10 };
                segments.push(Segment {
                    place: name,
                    duration_s: windows as f64 * window_s,
                });
            }
            let scenario = Scenario {
                case_id: format!("case{:02}", case + 1),
                segments,
                skin_temp_c: 33.0,
                seed: derive_seed(seed, case as u64),
            };
            simulate(&scenario, &profiles, &responses, PLANTED_RATE_HZ).unwrap()
        })
        .collect()
}

pub fn planted_matrix(cases: usize, seed: u64) -> FeatureMatrix {
    featurize_traces(&planted_traces(cases, seed), &AdcConfig::default(), 2.0, &ElementKind::BOARD).unwrap()
}
