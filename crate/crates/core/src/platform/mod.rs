//! Physical platform: hosts, links, routes, transfer timing and energy.

mod document;
pub mod energy;
pub mod network;
pub mod presets;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use document::{HostDoc, LinkDoc, PlatformDoc, RouteDoc};
pub use energy::{host_energy, link_energy, EnergyLedger, EnergyReport, HostEnergy};
pub use network::{transfer_schedule, FlowId, FlowNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HostId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "host#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileLabel {
    Workstation,
    Laptop,
    #[serde(rename = "raspberrypi4")]
    RaspberryPi4,
    #[default]
    Custom,
}

impl ProfileLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileLabel::Workstation => "workstation",
            ProfileLabel::Laptop => "laptop",
            ProfileLabel::RaspberryPi4 => "raspberrypi4",
            ProfileLabel::Custom => "custom",
        }
    }
}

/// A machine: compute speed and a two-point power model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostProfile {
    pub name: String,
    /// Flops per second.
    pub speed: f64,
    pub idle_watts: f64,
    pub busy_watts: f64,
    pub profile: ProfileLabel,
}

impl HostProfile {
    pub fn new(name: impl Into<String>, speed: f64, idle_watts: f64, busy_watts: f64) -> Self {
        HostProfile {
            name: name.into(),
            speed,
            idle_watts,
            busy_watts,
            profile: ProfileLabel::Custom,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), PlatformError> {
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(PlatformError::NonPositiveSpeed { host: self.name.clone() });
        }
        if !(self.idle_watts.is_finite() && self.busy_watts.is_finite())
            || self.idle_watts < 0.0
            || self.idle_watts > self.busy_watts
        {
            return Err(PlatformError::InvalidHostPower {
                host: self.name.clone(),
                idle: self.idle_watts,
                busy: self.busy_watts,
            });
        }
        Ok(())
    }
}

/// A network link with an affine energy model: constant idle power plus a
/// per-byte cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub name: String,
    /// Bytes per second.
    pub bandwidth: f64,
    /// Seconds.
    pub latency: f64,
    pub idle_watts: f64,
    pub joules_per_byte: f64,
}

impl LinkProfile {
    pub fn new(name: impl Into<String>, bandwidth: f64, latency: f64) -> Self {
        LinkProfile {
            name: name.into(),
            bandwidth,
            latency,
            idle_watts: 0.0,
            joules_per_byte: 0.0,
        }
    }

    pub fn with_energy(mut self, idle_watts: f64, joules_per_byte: f64) -> Self {
        self.idle_watts = idle_watts;
        self.joules_per_byte = joules_per_byte;
        self
    }

    pub(crate) fn validate(&self) -> Result<(), PlatformError> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(PlatformError::NonPositiveBandwidth { link: self.name.clone() });
        }
        if !(self.latency.is_finite() && self.latency >= 0.0) {
            return Err(PlatformError::NegativeLatency { link: self.name.clone() });
        }
        if !(self.idle_watts.is_finite() && self.idle_watts >= 0.0)
            || !(self.joules_per_byte.is_finite() && self.joules_per_byte >= 0.0)
        {
            return Err(PlatformError::NegativeLinkEnergy { link: self.name.clone() });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("malformed platform document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate host {0}")]
    DuplicateHost(String),
    #[error("duplicate link {0}")]
    DuplicateLink(String),
    #[error("host {host}: speed must be positive")]
    NonPositiveSpeed { host: String },
    #[error("host {host}: need 0 <= idle_watts <= busy_watts (got idle {idle}, busy {busy})")]
    InvalidHostPower { host: String, idle: f64, busy: f64 },
    #[error("link {link}: bandwidth must be positive")]
    NonPositiveBandwidth { link: String },
    #[error("link {link}: latency must be non-negative")]
    NegativeLatency { link: String },
    #[error("link {link}: idle_watts and joules_per_byte must be non-negative")]
    NegativeLinkEnergy { link: String },
    #[error("unknown host {0}")]
    UnknownHost(String),
    #[error("unknown link {0}")]
    UnknownLink(String),
    #[error("route {src} -> {dst} declared twice")]
    DuplicateRoute { src: String, dst: String },
    #[error("route {src} -> {dst} has no links")]
    EmptyRoute { src: String, dst: String },
    #[error("route from host {0} to itself")]
    SelfRoute(String),
}

/// A validated platform.
#[derive(Clone, Debug, PartialEq)]
pub struct Platform {
    hosts: Vec<HostProfile>,
    links: Vec<LinkProfile>,
    routes: BTreeMap<(HostId, HostId), Vec<LinkId>>,
}

impl Platform {
    /// Builds a platform from profiles and directed routes, checking every
    /// invariant.
    pub fn new(
        hosts: Vec<HostProfile>,
        links: Vec<LinkProfile>,
        routes: BTreeMap<(HostId, HostId), Vec<LinkId>>,
    ) -> Result<Self, PlatformError> {
        let mut names = std::collections::BTreeSet::new();
        for h in &hosts {
            h.validate()?;
            if !names.insert(h.name.as_str()) {
                return Err(PlatformError::DuplicateHost(h.name.clone()));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for l in &links {
            l.validate()?;
            if !names.insert(l.name.as_str()) {
                return Err(PlatformError::DuplicateLink(l.name.clone()));
            }
        }
        for (&(src, dst), path) in &routes {
            let host_name = |h: HostId| {
                hosts
                    .get(h.0)
                    .map(|p| p.name.clone())
                    .ok_or_else(|| PlatformError::UnknownHost(h.to_string()))
            };
            let (s, d) = (host_name(src)?, host_name(dst)?);
            if src == dst {
                return Err(PlatformError::SelfRoute(s));
            }
            if path.is_empty() {
                return Err(PlatformError::EmptyRoute { src: s, dst: d });
            }
            if let Some(bad) = path.iter().find(|l| l.0 >= links.len()) {
                return Err(PlatformError::UnknownLink(format!("#{}", bad.0)));
            }
        }
        Ok(Platform { hosts, links, routes })
    }

    /// Parses and validates a JSON platform document.
    pub fn from_json(text: &str) -> Result<Self, PlatformError> {
        let doc: PlatformDoc = serde_json::from_str(text)?;
        doc.into_platform()
    }

    pub fn hosts(&self) -> &[HostProfile] {
        &self.hosts
    }

    pub fn links(&self) -> &[LinkProfile] {
        &self.links
    }

    pub fn host(&self, id: HostId) -> &HostProfile {
        &self.hosts[id.0]
    }

    pub fn link(&self, id: LinkId) -> &LinkProfile {
        &self.links[id.0]
    }

    pub fn host_id(&self, name: &str) -> Option<HostId> {
        self.hosts.iter().position(|h| h.name == name).map(HostId)
    }

    pub fn link_id(&self, name: &str) -> Option<LinkId> {
        self.links.iter().position(|l| l.name == name).map(LinkId)
    }

    /// Directed route between two distinct hosts.
    pub fn route(&self, src: HostId, dst: HostId) -> Option<&[LinkId]> {
        self.routes.get(&(src, dst)).map(Vec::as_slice)
    }

    pub fn routes(&self) -> impl Iterator<Item = (HostId, HostId, &[LinkId])> {
        self.routes.iter().map(|(&(s, d), p)| (s, d, p.as_slice()))
    }

    pub fn route_latency(&self, route: &[LinkId]) -> f64 {
        route.iter().map(|l| self.links[l.0].latency).sum()
    }

    /// Sum of host speeds in GFLOPS.
    pub fn total_gflops(&self) -> f64 {
        self.hosts.iter().map(|h| h.speed).sum::<f64>() / 1e9
    }

    /// Seconds needed by `host` to execute `flops`.
    pub fn compute_duration(&self, flops: f64, host: HostId) -> f64 {
        compute_duration(flops, &self.hosts[host.0])
    }

    pub fn to_document(&self) -> PlatformDoc {
        PlatformDoc::from_platform(self)
    }
}

pub fn compute_duration(flops: f64, host: &HostProfile) -> f64 {
    flops / host.speed
}

/// Sum of host speeds in GFLOPS.
pub fn total_gflops(platform: &Platform) -> f64 {
    platform.total_gflops()
}
