//! Energy accounting.
//!
//! Hosts follow a linear power model with single-core utilization in {0, 1}:
//! `P = idle + (busy - idle) * u`. Links draw a constant idle power plus a
//! fixed cost per byte carried.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HostId, HostProfile, LinkId, LinkProfile, Platform};

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("busy interval [{start}, {end}] overlaps a previous one")]
    Overlap { start: f64, end: f64 },
    #[error("busy interval [{start}, {end}] lies outside [0, {total}]")]
    OutOfRange { start: f64, end: f64, total: f64 },
}

/// Joules consumed by a host over `[0, total_time]` given its busy intervals.
///
/// Intervals must be disjoint and sorted by start time.
pub fn host_energy(profile: &HostProfile, busy_intervals: &[(f64, f64)], total_time: f64) -> Result<f64, EnergyError> {
    let busy = busy_time(busy_intervals, total_time)?;
    Ok(profile.idle_watts * total_time + (profile.busy_watts - profile.idle_watts) * busy)
}

/// Joules consumed by a link that carried `bytes_total` over `total_time`.
pub fn link_energy(profile: &LinkProfile, bytes_total: f64, total_time: f64) -> f64 {
    profile.idle_watts * total_time + profile.joules_per_byte * bytes_total
}

fn busy_time(intervals: &[(f64, f64)], total_time: f64) -> Result<f64, EnergyError> {
    let mut last_end = 0.0_f64;
    let mut sum = 0.0;
    for &(start, end) in intervals {
        if start < 0.0 || end < start || end > total_time {
            return Err(EnergyError::OutOfRange { start, end, total: total_time });
        }
        if start < last_end {
            return Err(EnergyError::Overlap { start, end });
        }
        sum += end - start;
        last_end = end;
    }
    Ok(sum)
}

/// Accumulates busy intervals per host and bytes per link during a run.
#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    busy: Vec<Vec<(f64, f64)>>,
    link_bytes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostEnergy {
    pub busy_s: f64,
    pub idle_s: f64,
    pub joules: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub hosts: Vec<HostEnergy>,
    pub links: Vec<f64>,
    pub hosts_total: f64,
    pub links_total: f64,
    pub total: f64,
}

impl EnergyLedger {
    pub fn new(n_hosts: usize, n_links: usize) -> Self {
        EnergyLedger {
            busy: vec![Vec::new(); n_hosts],
            link_bytes: vec![0.0; n_links],
        }
    }

    pub fn record_busy(&mut self, host: HostId, start: f64, end: f64) {
        self.busy[host.0].push((start, end));
    }

    pub fn record_transfer(&mut self, route: &[LinkId], bytes: u64) {
        for l in route {
            self.link_bytes[l.0] += bytes as f64;
        }
    }

    pub fn busy_intervals(&self, host: HostId) -> &[(f64, f64)] {
        &self.busy[host.0]
    }

    pub fn link_bytes(&self, link: LinkId) -> f64 {
        self.link_bytes[link.0]
    }

    pub fn report(&self, platform: &Platform, total_time: f64) -> Result<EnergyReport, EnergyError> {
        let mut hosts = Vec::with_capacity(self.busy.len());
        for (profile, intervals) in platform.hosts().iter().zip(&self.busy) {
            let busy_s = busy_time(intervals, total_time)?;
            hosts.push(HostEnergy {
                busy_s,
                idle_s: total_time - busy_s,
                joules: host_energy(profile, intervals, total_time)?,
            });
        }
        let links: Vec<f64> = platform
            .links()
            .iter()
            .zip(&self.link_bytes)
            .map(|(l, &bytes)| link_energy(l, bytes, total_time))
            .collect();
        let hosts_total: f64 = hosts.iter().map(|h| h.joules).sum();
        let links_total: f64 = links.iter().sum();
        Ok(EnergyReport {
            hosts,
            links,
            hosts_total,
            links_total,
            total: hosts_total + links_total,
        })
    }
}
