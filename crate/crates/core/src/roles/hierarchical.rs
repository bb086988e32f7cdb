use std::collections::VecDeque;

use crate::kernel::{Actor, Block, Ctx, Wake};
use crate::protocol::{Dest, Envelope, NodeId, Packet, PacketKind, RoleEvent};

use super::{RolePort, Workload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HaState {
    Idle,
    Collecting,
    Aggregating,
    Done,
}

/// Pre-aggregates its subcluster once per round and reports a single
/// weighted model upward.
pub struct HierarchicalAggregator {
    port: RolePort,
    aggregator: NodeId,
    children: Vec<NodeId>,
    workload: Workload,
    state: HaState,
    round: u32,
    deferred: VecDeque<u32>,
    received: Vec<(NodeId, u32)>,
    started: f64,
}

impl HierarchicalAggregator {
    pub fn new(port: RolePort, aggregator: NodeId, mut children: Vec<NodeId>, workload: Workload) -> Self {
        children.sort();
        HierarchicalAggregator {
            port,
            aggregator,
            children,
            workload,
            state: HaState::Idle,
            round: 0,
            deferred: VecDeque::new(),
            received: Vec::new(),
            started: 0.0,
        }
    }

    fn start_round(&mut self, ctx: &mut Ctx<'_, Envelope>, round: u32) -> Block {
        self.round = round;
        let global = Packet::model(
            PacketKind::GlobalModel,
            self.port.me,
            Dest::Broadcast,
            self.workload.model_bytes(),
            round,
            0,
        );
        self.port.mediator.broadcast(ctx, global);
        self.state = HaState::Collecting;
        self.port.wait()
    }

    fn on_packet(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) -> Block {
        self.port.observe(ctx, &packet);
        match packet.kind {
            PacketKind::Kill => {
                self.state = HaState::Done;
                Block::Done
            }
            PacketKind::GlobalModel if self.state == HaState::Idle => self.start_round(ctx, packet.meta.round),
            PacketKind::GlobalModel => {
                self.deferred.push_back(packet.meta.round);
                self.port.wait()
            }
            PacketKind::LocalModel if self.state == HaState::Collecting => {
                if self.children.binary_search(&packet.src).is_err() {
                    self.port.ignore(ctx, &packet, "unregistered sender");
                } else if self.received.iter().any(|(s, _)| *s == packet.src) {
                    self.port.ignore(ctx, &packet, "duplicate model");
                } else {
                    self.received.push((packet.src, packet.meta.contributors));
                }
                if self.received.len() == self.children.len() {
                    self.state = HaState::Aggregating;
                    self.started = ctx.now().as_secs();
                    return Block::Exec(self.workload.aggregation_flops(self.received.len()));
                }
                self.port.wait()
            }
            _ => {
                self.port.ignore(ctx, &packet, "unexpected packet");
                self.port.wait()
            }
        }
    }
}

impl Actor<Envelope> for HierarchicalAggregator {
    fn resume(&mut self, ctx: &mut Ctx<'_, Envelope>, wake: Wake<Envelope>) -> Block {
        match wake {
            Wake::Message(Envelope::ToRole(RoleEvent::Packet(p))) => self.on_packet(ctx, p),
            Wake::ExecDone => {
                let received = std::mem::take(&mut self.received);
                let contributors = received.iter().map(|(_, c)| *c).sum();
                let inputs = received.into_iter().map(|(s, _)| s).collect();
                self.port.record_aggregation(ctx, self.round, self.started, inputs);
                let local = Packet::model(
                    PacketKind::LocalModel,
                    self.port.me,
                    Dest::Node(self.aggregator),
                    self.workload.model_bytes(),
                    self.round,
                    contributors,
                );
                self.port.mediator.put(ctx, local);
                self.state = HaState::Idle;
                match self.deferred.pop_front() {
                    Some(round) => self.start_round(ctx, round),
                    None => self.port.wait(),
                }
            }
            Wake::Message(Envelope::ToRole(RoleEvent::Undeliverable(p))) => {
                self.port.ignore(ctx, &p, "undeliverable");
                self.port.wait()
            }
            _ => self.port.wait(),
        }
    }

    fn status(&self) -> String {
        format!("{:?} round {}, {}/{} models", self.state, self.round, self.received.len(), self.children.len())
    }
}
