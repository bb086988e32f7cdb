use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::{presets, HostProfile, LinkProfile, ProfileLabel};
use crate::protocol::Topology;
use crate::roles::{AggregatorKind, Workload};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed evolution config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid evolution config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Quantity minimized by the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    SimTime,
    EnergyTotal,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::SimTime => "sim_time",
            Criterion::EnergyTotal => "energy_total",
        }
    }
}

/// Probability of applying each mutation to a clone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MutationRates {
    pub add_machine: f64,
    pub remove_machine: f64,
    pub change_profile: f64,
    pub swap_roles: f64,
    pub perturb_param: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        MutationRates { add_machine: 0.2, remove_machine: 0.2, change_profile: 0.3, swap_roles: 0.3, perturb_param: 0.3 }
    }
}

impl MutationRates {
    pub fn zero() -> Self {
        MutationRates { add_machine: 0.0, remove_machine: 0.0, change_profile: 0.0, swap_roles: 0.0, perturb_param: 0.0 }
    }

    fn all(&self) -> [(&'static str, f64); 5] {
        [
            ("add_machine", self.add_machine),
            ("remove_machine", self.remove_machine),
            ("change_profile", self.change_profile),
            ("swap_roles", self.swap_roles),
            ("perturb_param", self.perturb_param),
        ]
    }
}

/// A machine class: a preset name or explicit numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Preset(String),
    Custom { name: String, speed_flops: f64, idle_watts: f64, busy_watts: f64 },
}

impl ProfileSpec {
    /// Host profile for a machine named `host`.
    pub fn instantiate(&self, host: String) -> Option<HostProfile> {
        match self {
            ProfileSpec::Preset(label) => presets::by_label(label, host),
            ProfileSpec::Custom { speed_flops, idle_watts, busy_watts, .. } => Some(HostProfile {
                name: host,
                speed: *speed_flops,
                idle_watts: *idle_watts,
                busy_watts: *busy_watts,
                profile: ProfileLabel::Custom,
            }),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ProfileSpec::Preset(label) => label,
            ProfileSpec::Custom { name, .. } => name,
        }
    }
}

/// Access link attaching every machine to the shared network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub bandwidth_bps_bytes: f64,
    pub latency_s: f64,
    #[serde(default)]
    pub idle_watts: f64,
    #[serde(default)]
    pub joules_per_byte: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        // 100 Mbit/s with 5 ms latency.
        LinkSpec { bandwidth_bps_bytes: 1.25e7, latency_s: 0.005, idle_watts: 0.5, joules_per_byte: 1e-8 }
    }
}

impl LinkSpec {
    pub fn profile(&self, name: String) -> LinkProfile {
        LinkProfile::new(name, self.bandwidth_bps_bytes, self.latency_s).with_energy(self.idle_watts, self.joules_per_byte)
    }
}

fn default_population() -> usize {
    20
}
fn default_generations() -> usize {
    30
}
fn default_cull() -> f64 {
    0.5
}
fn default_criterion() -> Criterion {
    Criterion::EnergyTotal
}
fn default_range() -> [usize; 2] {
    [3, 10]
}
fn default_profiles() -> Vec<ProfileSpec> {
    ["workstation", "laptop", "raspberrypi4"].into_iter().map(|s| ProfileSpec::Preset(s.into())).collect()
}
fn default_rounds() -> u32 {
    3
}
fn default_p_min() -> f64 {
    0.2
}
fn default_topologies() -> Vec<Topology> {
    Topology::ALL.to_vec()
}
fn default_aggregators() -> Vec<AggregatorKind> {
    AggregatorKind::ALL.to_vec()
}

/// Parameters of an evolutionary search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_cull")]
    pub cull_fraction: f64,
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
    #[serde(default)]
    pub mutation_rates: MutationRates,
    /// Inclusive bounds on the number of machines.
    #[serde(default = "default_range")]
    pub node_count_range: [usize; 2],
    #[serde(default = "default_profiles")]
    pub profiles: Vec<ProfileSpec>,
    #[serde(default = "Workload::mlp")]
    pub workload: Workload,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    #[serde(default)]
    pub link: LinkSpec,
    #[serde(default = "default_topologies")]
    pub topologies: Vec<Topology>,
    #[serde(default = "default_aggregators")]
    pub aggregators: Vec<AggregatorKind>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl EvolutionConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: EvolutionConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Individuals dropped per generation.
    pub fn culled(&self) -> usize {
        (self.cull_fraction * self.population_size as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size == 0 {
            return Err(invalid("population_size must be positive"));
        }
        if self.generations == 0 {
            return Err(invalid("generations must be positive"));
        }
        if !(self.cull_fraction > 0.0 && self.cull_fraction < 1.0) {
            return Err(invalid(format!("cull_fraction must lie in (0, 1), got {}", self.cull_fraction)));
        }
        if self.culled() < 1 {
            return Err(invalid(format!(
                "floor(cull_fraction * population_size) must be at least 1 (got {} * {})",
                self.cull_fraction, self.population_size
            )));
        }
        for (name, rate) in self.mutation_rates.all() {
            if !(0.0..=1.0).contains(&rate) {
                return Err(invalid(format!("mutation rate {name} must lie in [0, 1], got {rate}")));
            }
        }
        if self.profiles.is_empty() {
            return Err(invalid("at least one machine profile is required"));
        }
        for p in &self.profiles {
            let host = p.instantiate("probe".into()).ok_or_else(|| invalid(format!("unknown profile {}", p.label())))?;
            host.validate().map_err(|e| invalid(e.to_string()))?;
        }
        self.link.profile("probe".into()).validate().map_err(|e| invalid(e.to_string()))?;
        self.workload.validate().map_err(invalid)?;
        if !(self.p_min > 0.0 && self.p_min <= 1.0) {
            return Err(invalid(format!("p_min must lie in (0, 1], got {}", self.p_min)));
        }
        let [lo, hi] = self.node_count_range;
        if lo > hi {
            return Err(invalid(format!("node_count_range [{lo}, {hi}] is empty")));
        }
        if self.topologies.is_empty() || self.aggregators.is_empty() {
            return Err(invalid("need at least one topology and one aggregator"));
        }
        for &t in &self.topologies {
            let min = super::individual::min_nodes(t);
            if hi < min {
                return Err(invalid(format!("{t} needs at least {min} machines but node_count_range allows at most {hi}")));
            }
        }
        Ok(())
    }
}
