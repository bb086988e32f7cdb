use std::collections::BTreeMap;
use std::rc::Rc;

use log::warn;

use crate::kernel::{Actor, Block, Ctx, SimError, Wake};

use super::{Dest, Directory, Envelope, NodeId, Packet, PacketKind, RoleCommand, RoleEvent, Topology};

#[derive(Clone, Debug)]
pub struct NmConfig {
    pub node: NodeId,
    pub topology: Topology,
    /// Node to register with; `None` for the root of the topology.
    pub contact: Option<NodeId>,
    /// Registration requests to collect before registering upward (or, at
    /// the root, before confirming).
    pub expected: usize,
    /// Hand every unicast to the role, which relays it itself (proxies).
    pub relay_role: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NmState {
    Initializing,
    Running,
    /// Ring originator of a Kill, waiting for it to come back around.
    Draining,
    Terminated,
}

/// Per-host automaton handling registration and topology routing.
pub struct NetManager {
    cfg: NmConfig,
    dir: Rc<Directory>,
    state: NmState,
    requests: Vec<Packet>,
    /// Registered neighbors below this node: star peers or tree children.
    peers: Vec<NodeId>,
    /// Descendant -> direct child leading to it.
    subtree: BTreeMap<NodeId, NodeId>,
    upstream: Option<NodeId>,
    successor: Option<NodeId>,
    held: Vec<Packet>,
}

impl NetManager {
    pub fn new(cfg: NmConfig, dir: Rc<Directory>) -> Self {
        NetManager {
            cfg,
            dir,
            state: NmState::Initializing,
            requests: Vec::new(),
            peers: Vec::new(),
            subtree: BTreeMap::new(),
            upstream: None,
            successor: None,
            held: Vec::new(),
        }
    }

    pub fn state(&self) -> NmState {
        self.state
    }

    fn me(&self) -> NodeId {
        self.cfg.node
    }

    fn transmit(&self, ctx: &mut Ctx<'_, Envelope>, to: NodeId, packet: Packet) {
        let entry = self.dir.get(to).expect("next hop validated");
        let bytes = packet.payload_bytes;
        ctx.send(entry.mediator.role_to_nm, Envelope::Net(packet), bytes);
    }

    fn to_role(&self, ctx: &mut Ctx<'_, Envelope>, event: RoleEvent) {
        let inbox = self.dir.get(self.me()).expect("own entry").mediator.nm_to_role;
        ctx.send(inbox, Envelope::ToRole(event), 0);
    }

    fn deliver(&self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        self.to_role(ctx, RoleEvent::Packet(packet));
    }

    fn drop_packet(&self, ctx: &mut Ctx<'_, Envelope>, packet: &Packet, reason: &str) {
        warn!("{}: dropping {:?} from {}: {}", self.dir.name(self.me()), packet.kind, self.dir.name(packet.src), reason);
        ctx.note("drop", Some(packet.label()), || reason.to_string());
    }

    fn start(&mut self, ctx: &mut Ctx<'_, Envelope>) {
        if self.cfg.expected == 0 {
            match self.cfg.contact {
                Some(contact) => self.register(ctx, contact),
                None => self.become_running(ctx),
            }
        }
    }

    fn register(&mut self, ctx: &mut Ctx<'_, Envelope>, contact: NodeId) {
        let mut request = Packet::control(PacketKind::RegistrationRequest, self.me(), Dest::Node(contact));
        request.meta.members.push(self.me());
        for r in &self.requests {
            request.meta.members.extend_from_slice(&r.meta.members);
        }
        self.transmit(ctx, contact, request);
    }

    fn on_request(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        self.requests.push(packet);
        if self.requests.len() == self.cfg.expected {
            match self.cfg.contact {
                Some(contact) => self.register(ctx, contact),
                None => {
                    self.confirm_children(ctx);
                    self.become_running(ctx);
                }
            }
        }
    }

    fn on_confirmation(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        let assigned = match packet.meta.assigned {
            Some(n) if self.dir.get(n).is_some() => n,
            other => {
                let name = self.dir.name(self.me()).to_string();
                ctx.abort(SimError::Config(format!(
                    "registration confirmation for {name} references unknown node {other:?}"
                )));
                self.state = NmState::Terminated;
                return;
            }
        };
        match self.cfg.topology {
            Topology::Ring => self.successor = Some(assigned),
            Topology::Star | Topology::Hierarchical => self.upstream = Some(assigned),
        }
        self.confirm_children(ctx);
        self.become_running(ctx);
    }

    fn confirm_children(&mut self, ctx: &mut Ctx<'_, Envelope>) {
        let mut requests = std::mem::take(&mut self.requests);
        requests.sort_by_key(|r| r.src);
        for r in &requests {
            self.peers.push(r.src);
            for &m in &r.meta.members {
                self.subtree.insert(m, r.src);
            }
        }
        // Ring successors follow declaration order, wrapping around.
        let mut cycle: Vec<NodeId> = requests.iter().map(|r| r.src).collect();
        cycle.push(self.me());
        cycle.sort();
        let successor_of = |n: NodeId| {
            let i = cycle.binary_search(&n).expect("member of cycle");
            cycle[(i + 1) % cycle.len()]
        };
        if self.cfg.topology == Topology::Ring && self.cfg.contact.is_none() {
            self.successor = Some(successor_of(self.me()));
        }
        for r in &requests {
            let mut confirmation = Packet::control(PacketKind::RegistrationConfirmation, self.me(), Dest::Node(r.src));
            confirmation.meta.assigned = Some(match self.cfg.topology {
                Topology::Ring => successor_of(r.src),
                Topology::Star | Topology::Hierarchical => self.me(),
            });
            self.transmit(ctx, r.src, confirmation);
        }
    }

    fn become_running(&mut self, ctx: &mut Ctx<'_, Envelope>) {
        self.state = NmState::Running;
        self.to_role(ctx, RoleEvent::Ready);
        for packet in std::mem::take(&mut self.held) {
            if self.state == NmState::Terminated {
                break;
            }
            self.on_net(ctx, packet);
        }
    }

    /// Next node toward `dst` for a packet originating at this node.
    fn next_hop(&self, dst: NodeId) -> Option<NodeId> {
        match self.cfg.topology {
            Topology::Star => match self.upstream {
                Some(agg) => Some(agg),
                None => self.peers.binary_search(&dst).ok().map(|_| dst),
            },
            Topology::Ring => self.successor,
            Topology::Hierarchical => self.subtree.get(&dst).copied().or(self.upstream),
        }
    }

    fn on_net(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        if self.state == NmState::Initializing {
            match packet.kind {
                PacketKind::RegistrationRequest => self.on_request(ctx, packet),
                PacketKind::RegistrationConfirmation => self.on_confirmation(ctx, packet),
                _ => self.held.push(packet),
            }
            return;
        }
        let me = self.me();
        match packet.kind {
            PacketKind::RegistrationRequest | PacketKind::RegistrationConfirmation => {
                self.drop_packet(ctx, &packet, "registration after bootstrap");
            }
            PacketKind::Kill => match self.cfg.topology {
                Topology::Star => {
                    self.deliver(ctx, packet);
                    self.state = NmState::Terminated;
                }
                Topology::Ring => {
                    if packet.src != me {
                        self.deliver(ctx, packet.clone());
                        let next = self.successor.expect("ring successor");
                        self.transmit(ctx, next, packet);
                    }
                    self.state = NmState::Terminated;
                }
                Topology::Hierarchical => {
                    self.deliver(ctx, packet.clone());
                    for &child in &self.peers {
                        self.transmit(ctx, child, packet.clone());
                    }
                    self.state = NmState::Terminated;
                }
            },
            _ => match packet.dst {
                Dest::Broadcast => {
                    if self.cfg.topology == Topology::Ring {
                        // Originator removal: the copy dies after a full cycle.
                        if packet.src != me {
                            self.deliver(ctx, packet.clone());
                            let next = self.successor.expect("ring successor");
                            self.transmit(ctx, next, packet);
                        }
                    } else {
                        self.deliver(ctx, packet);
                    }
                }
                Dest::Node(dst) if dst == me || self.cfg.relay_role => self.deliver(ctx, packet),
                Dest::Node(dst) => {
                    let hop = match self.cfg.topology {
                        Topology::Star if self.upstream.is_some() => None,
                        Topology::Ring if packet.src == me => {
                            self.drop_packet(ctx, &packet, "forwarding loop");
                            return;
                        }
                        _ => self.next_hop(dst),
                    };
                    match hop {
                        Some(next) => self.transmit(ctx, next, packet),
                        None => self.drop_packet(ctx, &packet, "no route to destination"),
                    }
                }
            },
        }
    }

    fn on_role(&mut self, ctx: &mut Ctx<'_, Envelope>, cmd: RoleCommand) {
        if self.state == NmState::Initializing {
            let name = self.dir.name(self.me()).to_string();
            ctx.abort(SimError::Config(format!("{name}: role used the network before registration finished")));
            return;
        }
        match cmd {
            RoleCommand::Put(packet) => match packet.dst {
                Dest::Broadcast => self.broadcast(ctx, packet),
                Dest::Node(dst) if self.dir.get(dst).is_none() => {
                    self.to_role(ctx, RoleEvent::Undeliverable(packet));
                }
                Dest::Node(dst) if dst == self.me() => self.deliver(ctx, packet),
                Dest::Node(dst) => match self.next_hop(dst) {
                    Some(next) => self.transmit(ctx, next, packet),
                    None => self.to_role(ctx, RoleEvent::Undeliverable(packet)),
                },
            },
            RoleCommand::Broadcast(packet) => self.broadcast(ctx, packet),
            RoleCommand::Relay { packet, next_hop } => {
                if self.dir.get(next_hop).is_some() && next_hop != self.me() {
                    self.transmit(ctx, next_hop, packet);
                } else {
                    self.to_role(ctx, RoleEvent::Undeliverable(packet));
                }
            }
        }
    }

    fn broadcast(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) {
        let kill = packet.kind == PacketKind::Kill;
        match self.cfg.topology {
            Topology::Star | Topology::Hierarchical => {
                let targets: Vec<NodeId> = if self.peers.is_empty() { self.upstream.into_iter().collect() } else { self.peers.clone() };
                for to in targets {
                    self.transmit(ctx, to, packet.clone());
                }
                if kill {
                    self.state = NmState::Terminated;
                }
            }
            Topology::Ring => {
                let next = self.successor.expect("ring successor");
                self.transmit(ctx, next, packet);
                if kill {
                    self.state = NmState::Draining;
                }
            }
        }
    }
}

impl Actor<Envelope> for NetManager {
    fn resume(&mut self, ctx: &mut Ctx<'_, Envelope>, wake: Wake<Envelope>) -> Block {
        match wake {
            Wake::Start => self.start(ctx),
            Wake::Message(Envelope::Net(packet)) => self.on_net(ctx, packet),
            Wake::Message(Envelope::FromRole(cmd)) => self.on_role(ctx, cmd),
            Wake::Message(Envelope::ToRole(_)) | Wake::Timer | Wake::ExecDone => {}
        }
        if self.state == NmState::Terminated {
            Block::Done
        } else {
            Block::Recv(self.dir.get(self.me()).expect("own entry").mediator.role_to_nm)
        }
    }

    fn status(&self) -> String {
        format!(
            "{:?}, {}/{} registrations, {} held",
            self.state,
            self.requests.len(),
            self.cfg.expected,
            self.held.len()
        )
    }
}
