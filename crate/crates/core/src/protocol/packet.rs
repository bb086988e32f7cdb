use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a node in the scenario's declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node#{}", self.0)
    }
}

/// Size of registration and kill packets on the wire.
pub const CONTROL_BYTES: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    RegistrationRequest,
    RegistrationConfirmation,
    GlobalModel,
    LocalModel,
    Kill,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::RegistrationRequest => "RegistrationRequest",
            PacketKind::RegistrationConfirmation => "RegistrationConfirmation",
            PacketKind::GlobalModel => "GlobalModel",
            PacketKind::LocalModel => "LocalModel",
            PacketKind::Kill => "Kill",
        }
    }

    pub fn carries_model(self) -> bool {
        matches!(self, PacketKind::GlobalModel | PacketKind::LocalModel)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dest {
    Node(NodeId),
    Broadcast,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PacketMeta {
    /// Round of the model carried, starting at 1.
    pub round: u32,
    /// Trainers whose work is folded into a local model.
    pub contributors: u32,
    /// Neighbor assigned by a registration confirmation.
    pub assigned: Option<NodeId>,
    /// Nodes reachable through the sender of a registration request.
    pub members: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub kind: PacketKind,
    pub src: NodeId,
    pub dst: Dest,
    pub payload_bytes: u64,
    pub meta: PacketMeta,
}

impl Packet {
    pub fn control(kind: PacketKind, src: NodeId, dst: Dest) -> Self {
        Packet { kind, src, dst, payload_bytes: CONTROL_BYTES, meta: PacketMeta::default() }
    }

    pub fn model(kind: PacketKind, src: NodeId, dst: Dest, model_bytes: u64, round: u32, contributors: u32) -> Self {
        debug_assert!(kind.carries_model());
        Packet {
            kind,
            src,
            dst,
            payload_bytes: model_bytes,
            meta: PacketMeta { round, contributors, ..PacketMeta::default() },
        }
    }

    pub fn label(&self) -> PacketLabel {
        PacketLabel { kind: self.kind, src: self.src, dst: self.dst, round: self.meta.round }
    }
}

/// Compact description of a packet kept in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PacketLabel {
    pub kind: PacketKind,
    pub src: NodeId,
    pub dst: Dest,
    pub round: u32,
}
