//! Packets, the role/network-manager mediator, and the network manager
//! automaton for star, ring and hierarchical topologies.

mod mediator;
mod netmanager;
mod packet;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use mediator::{Directory, Envelope, Mediator, NodeEntry, RoleCommand, RoleEvent};
pub use netmanager::{NetManager, NmConfig, NmState};
pub use packet::{Dest, NodeId, Packet, PacketKind, PacketLabel, PacketMeta, CONTROL_BYTES};

/// Applicative topology laid over the physical platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Star,
    Ring,
    Hierarchical,
}

impl Topology {
    pub const ALL: [Topology; 3] = [Topology::Star, Topology::Ring, Topology::Hierarchical];

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Star => "star",
            Topology::Ring => "ring",
            Topology::Hierarchical => "hierarchical",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Topology::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown topology {s:?}"))
    }
}
