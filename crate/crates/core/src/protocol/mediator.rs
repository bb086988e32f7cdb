use crate::kernel::{Ctx, MailboxId, Message};
use crate::platform::HostId;

use super::{Packet, PacketLabel};

/// Request from a role to its network manager.
#[derive(Clone, Debug, PartialEq)]
pub enum RoleCommand {
    Put(Packet),
    Broadcast(Packet),
    /// Send to an explicit neighbor, bypassing topology routing.
    Relay { packet: Packet, next_hop: super::NodeId },
}

/// Notification from a network manager to its role.
#[derive(Clone, Debug, PartialEq)]
pub enum RoleEvent {
    /// Registration finished; the role may start.
    Ready,
    Packet(Packet),
    /// A put named a destination the manager cannot reach.
    Undeliverable(Packet),
}

/// Everything that travels through kernel mailboxes.
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope {
    Net(Packet),
    FromRole(RoleCommand),
    ToRole(RoleEvent),
}

impl Message for Envelope {
    type Label = Option<PacketLabel>;

    fn label(&self) -> Option<PacketLabel> {
        match self {
            Envelope::Net(p)
            | Envelope::FromRole(RoleCommand::Put(p) | RoleCommand::Broadcast(p) | RoleCommand::Relay { packet: p, .. })
            | Envelope::ToRole(RoleEvent::Packet(p) | RoleEvent::Undeliverable(p)) => Some(p.label()),
            Envelope::ToRole(RoleEvent::Ready) => None,
        }
    }
}

/// The pair of same-host queues linking a role and its network manager.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mediator {
    pub role_to_nm: MailboxId,
    pub nm_to_role: MailboxId,
}

impl Mediator {
    pub fn put(&self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        ctx.send(self.role_to_nm, Envelope::FromRole(RoleCommand::Put(packet)), 0);
    }

    pub fn broadcast(&self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        ctx.send(self.role_to_nm, Envelope::FromRole(RoleCommand::Broadcast(packet)), 0);
    }

    pub fn relay(&self, ctx: &mut Ctx<'_, Envelope>, packet: Packet, next_hop: super::NodeId) {
        ctx.send(self.role_to_nm, Envelope::FromRole(RoleCommand::Relay { packet, next_hop }), 0);
    }
}

#[derive(Clone, Debug)]
pub struct NodeEntry {
    pub name: String,
    pub host: HostId,
    pub mediator: Mediator,
}

/// Name, host and queues of every node, indexed by [`NodeId`](super::NodeId).
#[derive(Clone, Debug, Default)]
pub struct Directory {
    entries: Vec<NodeEntry>,
}

impl Directory {
    pub fn new(entries: Vec<NodeEntry>) -> Self {
        Directory { entries }
    }

    pub fn get(&self, id: super::NodeId) -> Option<&NodeEntry> {
        self.entries.get(id.0)
    }

    pub fn name(&self, id: super::NodeId) -> &str {
        self.entries.get(id.0).map_or("?", |e| e.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
