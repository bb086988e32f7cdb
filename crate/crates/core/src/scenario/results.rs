use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::output::{csv_bytes, fmt_float, write_atomic, WriteError};
use crate::platform::Platform;
use crate::protocol::Topology;
use crate::roles::AggregatorKind;

/// Busy/idle split and energy of one host.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostUsage {
    pub host: String,
    pub busy_s: f64,
    pub idle_s: f64,
    pub joules: f64,
}

/// Metrics of one completed simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub sim_time: f64,
    pub energy_total: f64,
    pub energy_hosts: f64,
    pub energy_links: f64,
    pub per_host: Vec<HostUsage>,
    pub rounds_completed: u32,
    /// Transfers that crossed the network (one per hop).
    pub messages_sent: u64,
    pub bytes_transferred: u64,
    pub total_gflops: f64,
}

/// A result labelled with the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub topology: Topology,
    pub aggregator: AggregatorKind,
    pub n_hosts: usize,
    #[serde(flatten)]
    pub result: RunResult,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

pub const RESULT_COLUMNS: [&str; 12] = [
    "run_id",
    "topology",
    "aggregator",
    "n_hosts",
    "total_gflops",
    "rounds",
    "sim_time_s",
    "energy_total_j",
    "energy_hosts_j",
    "energy_links_j",
    "messages_sent",
    "bytes_transferred",
];

pub const HOST_COLUMNS: [&str; 7] = ["host", "profile", "busy_s", "idle_s", "busy_j", "idle_j", "energy_j"];

pub fn results_csv(rows: &[ResultRow]) -> Vec<u8> {
    csv_bytes(
        &RESULT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.run_id.clone(),
                r.topology.to_string(),
                r.aggregator.to_string(),
                r.n_hosts.to_string(),
                fmt_float(r.result.total_gflops),
                r.result.rounds_completed.to_string(),
                fmt_float(r.result.sim_time),
                fmt_float(r.result.energy_total),
                fmt_float(r.result.energy_hosts),
                fmt_float(r.result.energy_links),
                r.result.messages_sent.to_string(),
                r.result.bytes_transferred.to_string(),
            ]
        }),
    )
}

/// Full-precision JSON; parses back to equal rows.
pub fn results_json(rows: &[ResultRow]) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(rows).expect("results serialize");
    out.push(b'\n');
    out
}

pub fn write_results(rows: &[ResultRow], path: &Path, format: Format) -> Result<(), WriteError> {
    let bytes = match format {
        Format::Csv => results_csv(rows),
        Format::Json => results_json(rows),
    };
    write_atomic(path, &bytes)
}

/// Per-host energy breakdown: busy and idle contributions.
pub fn hosts_csv(result: &RunResult, platform: &Platform) -> Vec<u8> {
    csv_bytes(
        &HOST_COLUMNS,
        result.per_host.iter().zip(platform.hosts()).map(|(u, h)| {
            vec![
                u.host.clone(),
                h.profile.as_str().to_string(),
                fmt_float(u.busy_s),
                fmt_float(u.idle_s),
                fmt_float(h.busy_watts * u.busy_s),
                fmt_float(h.idle_watts * u.idle_s),
                fmt_float(u.joules),
            ]
        }),
    )
}
