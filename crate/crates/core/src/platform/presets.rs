//! Named machine profiles.
//!
//! These numbers are illustrative orders of magnitude for each class of
//! device, not measurements. Replace them with benchmarked values for any
//! study that depends on absolute energy figures.

use super::{HostProfile, ProfileLabel};

pub fn workstation(name: impl Into<String>) -> HostProfile {
    HostProfile {
        name: name.into(),
        speed: 1.5e11,
        idle_watts: 60.0,
        busy_watts: 220.0,
        profile: ProfileLabel::Workstation,
    }
}

pub fn laptop(name: impl Into<String>) -> HostProfile {
    HostProfile {
        name: name.into(),
        speed: 5.0e10,
        idle_watts: 8.0,
        busy_watts: 45.0,
        profile: ProfileLabel::Laptop,
    }
}

pub fn raspberrypi4(name: impl Into<String>) -> HostProfile {
    HostProfile {
        name: name.into(),
        speed: 1.35e10,
        idle_watts: 2.7,
        busy_watts: 6.4,
        profile: ProfileLabel::RaspberryPi4,
    }
}

/// Looks up a preset by its label (`workstation`, `laptop`, `raspberrypi4`).
pub fn by_label(label: &str, name: impl Into<String>) -> Option<HostProfile> {
    match label {
        "workstation" => Some(workstation(name)),
        "laptop" => Some(laptop(name)),
        "raspberrypi4" => Some(raspberrypi4(name)),
        _ => None,
    }
}
