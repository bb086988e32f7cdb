use std::collections::BTreeMap;

use crate::kernel::{Actor, Block, Ctx, Wake};
use crate::protocol::{Dest, Envelope, NodeId, Packet, PacketKind, RoleEvent};

use super::RolePort;

/// Relays packets unchanged between its parent and its subtree.
pub struct Proxy {
    port: RolePort,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    /// Descendant -> direct child leading to it.
    table: BTreeMap<NodeId, NodeId>,
    done: bool,
}

impl Proxy {
    pub fn new(port: RolePort, parent: Option<NodeId>, mut children: Vec<NodeId>, table: BTreeMap<NodeId, NodeId>) -> Self {
        children.sort();
        Proxy { port, parent, children, table, done: false }
    }

    fn on_packet(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) -> Block {
        self.port.observe(ctx, &packet);
        if packet.kind == PacketKind::Kill {
            // The network manager has already passed the Kill on.
            self.done = true;
            return Block::Done;
        }
        match packet.dst {
            Dest::Broadcast => {
                for &child in &self.children {
                    self.port.mediator.relay(ctx, packet.clone(), child);
                }
            }
            Dest::Node(dst) => match self.table.get(&dst).copied().or(self.parent) {
                Some(next) if dst != self.port.me => self.port.mediator.relay(ctx, packet, next),
                _ => self.port.ignore(ctx, &packet, "unknown destination"),
            },
        }
        self.port.wait()
    }
}

impl Actor<Envelope> for Proxy {
    fn resume(&mut self, ctx: &mut Ctx<'_, Envelope>, wake: Wake<Envelope>) -> Block {
        match wake {
            Wake::Message(Envelope::ToRole(RoleEvent::Packet(p))) => self.on_packet(ctx, p),
            Wake::Message(Envelope::ToRole(RoleEvent::Undeliverable(p))) => {
                self.port.ignore(ctx, &p, "undeliverable");
                self.port.wait()
            }
            _ => self.port.wait(),
        }
    }

    fn status(&self) -> String {
        format!("relaying for {} descendants, done={}", self.table.len(), self.done)
    }
}
