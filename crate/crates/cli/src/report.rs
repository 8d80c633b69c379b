//! Machine-readable reports. Field order is fixed by the struct layout and
//! all collections are ordered, so a report is byte-identical across runs
//! with the same seed and configuration.

use serde::Serialize;

#[derive(Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    /// True when every assertion in the suite is an exact comparison.
    pub exact: bool,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn new(name: &str, trials: usize, exact: bool, failures: Vec<String>) -> SuiteReport {
        SuiteReport { name: name.into(), trials, exact, pass: failures.is_empty(), failures }
    }
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct EndpointRow {
    pub p1: String,
    pub q: f64,
    /// Weak-type exponent: 2/3 for the subindicator variant, 2p/(2+p) for
    /// the L² variant.
    pub r: f64,
    pub f1_norm: f64,
    pub f2_factor: f64,
    pub weak_norm: f64,
    pub k: f64,
    pub k_over_q: f64,
}

#[derive(Serialize)]
pub struct EndpointReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub variant: String,
    pub depth: u32,
    pub scale_classes: u32,
    pub min_scale: i32,
    pub freq_band: u64,
    pub f2_shape: String,
    pub dilate: i32,
    pub quartiles: usize,
    pub rows: Vec<EndpointRow>,
    /// max/min of k_over_q across the sweep.
    pub spread: f64,
    pub max_spread: f64,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct ConjectureTrial {
    pub index: usize,
    pub label: String,
    pub ratio: f64,
}

#[derive(Serialize)]
pub struct ConjectureReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub depth: u32,
    pub scale_classes: u32,
    pub best_ratio: f64,
    pub best_trial: Option<ConjectureTrial>,
    pub history: Vec<ConjectureTrial>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}
