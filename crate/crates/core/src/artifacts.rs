//! Serialised run artifacts. Every artifact carries the full run
//! configuration and a format version, and is a pure function of them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceResult;
use crate::graph_stats::StatisticSample;

pub const FORMAT_VERSION: u32 = 1;

/// Configuration echo shared by all subcommands; unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub pattern: Option<String>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub p_rule: Option<String>,
    pub weights: Option<String>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub grid: Option<(usize, usize)>,
    pub sweep_n: Option<Vec<usize>>,
    pub cutoff_c: Option<f64>,
    pub input: Option<String>,
    pub out: Option<String>,
    pub kernel: Option<String>,
}

/// JSON envelope: `{format_version, config, result}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format_version: u32,
    pub config: RunConfig,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(config: RunConfig, result: T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serialises");
        s.push('\n');
        s
    }
}

/// Companion metadata of a samples CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub exact_mean: f64,
    pub exact_variance: f64,
    /// Shared edge count to ordered copy-pair count.
    pub census: BTreeMap<usize, u64>,
    pub rows: u64,
}

pub const SAMPLES_HEADER: &str = "replicate,raw_w,normalized";

pub fn samples_csv(samples: &[StatisticSample]) -> String {
    let mut out = String::with_capacity(32 * (samples.len() + 1));
    out.push_str(SAMPLES_HEADER);
    out.push('\n');
    for s in samples {
        writeln!(out, "{},{},{}", s.replicate, s.raw_w, s.normalized).expect("string write");
    }
    out
}

/// One row of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: f64,
    pub empirical_dw: f64,
    pub rate_term: f64,
    pub ratio: f64,
}

pub const SWEEP_HEADER: &str = "n,p,empirical_dw,rate_term,ratio";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.n, r.p, r.empirical_dw, r.rate_term, r.ratio).expect("string write");
    }
    out
}

pub fn distance_json(config: RunConfig, result: DistanceResult) -> String {
    Envelope::new(config, result).to_json()
}
