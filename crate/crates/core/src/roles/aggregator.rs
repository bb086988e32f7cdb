use std::collections::VecDeque;

use crate::kernel::{Actor, Block, Ctx, Wake};
use crate::protocol::{Dest, Envelope, NodeId, Packet, PacketKind, RoleEvent};

use super::{RolePort, Workload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggState {
    Broadcasting,
    WaitingResults,
    Aggregating,
    Done,
}

/// Synchronous aggregator: one barrier per round over all contributors.
pub struct SimpleAggregator {
    port: RolePort,
    contributors: Vec<NodeId>,
    rounds: u32,
    workload: Workload,
    state: AggState,
    round: u32,
    received: Vec<NodeId>,
    started: f64,
}

impl SimpleAggregator {
    pub fn new(port: RolePort, mut contributors: Vec<NodeId>, rounds: u32, workload: Workload) -> Self {
        contributors.sort();
        SimpleAggregator {
            port,
            contributors,
            rounds,
            workload,
            state: AggState::Broadcasting,
            round: 0,
            received: Vec::new(),
            started: 0.0,
        }
    }

    fn broadcast_round(&mut self, ctx: &mut Ctx<'_, Envelope>) -> Block {
        if self.round >= self.rounds {
            self.port.kill(ctx);
            self.state = AggState::Done;
            return Block::Done;
        }
        self.round += 1;
        let global = Packet::model(
            PacketKind::GlobalModel,
            self.port.me,
            Dest::Broadcast,
            self.workload.model_bytes(),
            self.round,
            0,
        );
        self.port.mediator.broadcast(ctx, global);
        self.state = AggState::WaitingResults;
        self.port.wait()
    }

    fn on_packet(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) -> Block {
        self.port.observe(ctx, &packet);
        if packet.kind != PacketKind::LocalModel || self.state != AggState::WaitingResults {
            self.port.ignore(ctx, &packet, "unexpected packet");
            return self.port.wait();
        }
        if self.contributors.binary_search(&packet.src).is_err() {
            self.port.ignore(ctx, &packet, "unregistered sender");
        } else if self.received.contains(&packet.src) || packet.meta.round != self.round {
            self.port.ignore(ctx, &packet, "duplicate or stale model");
        } else {
            self.received.push(packet.src);
        }
        if self.received.len() == self.contributors.len() {
            self.state = AggState::Aggregating;
            self.started = ctx.now().as_secs();
            return Block::Exec(self.workload.aggregation_flops(self.received.len()));
        }
        self.port.wait()
    }
}

impl Actor<Envelope> for SimpleAggregator {
    fn resume(&mut self, ctx: &mut Ctx<'_, Envelope>, wake: Wake<Envelope>) -> Block {
        match wake {
            Wake::Message(Envelope::ToRole(RoleEvent::Ready)) => self.broadcast_round(ctx),
            Wake::Message(Envelope::ToRole(RoleEvent::Packet(p))) => self.on_packet(ctx, p),
            Wake::ExecDone => {
                let inputs = std::mem::take(&mut self.received);
                self.port.record_aggregation(ctx, self.round, self.started, inputs);
                self.port.probe.borrow_mut().rounds_completed += 1;
                self.broadcast_round(ctx)
            }
            Wake::Message(Envelope::ToRole(RoleEvent::Undeliverable(p))) => {
                self.port.ignore(ctx, &p, "undeliverable");
                self.port.wait()
            }
            _ => self.port.wait(),
        }
    }

    fn status(&self) -> String {
        format!("{:?} round {}/{}, {}/{} models", self.state, self.round, self.rounds, self.received.len(), self.contributors.len())
    }
}

/// Asynchronous aggregator: aggregates as soon as a proportion of the
/// contributors' models is pending and answers only those senders.
pub struct AsyncAggregator {
    port: RolePort,
    contributors: Vec<NodeId>,
    rounds: u32,
    workload: Workload,
    batch: usize,
    state: AggState,
    done: u32,
    pending: VecDeque<NodeId>,
    consumed: Vec<NodeId>,
    started: f64,
}

/// Models consumed per aggregation: `ceil(p * n)`, at least 1.
pub fn batch_size(proportion: f64, contributors: usize) -> usize {
    let k = (proportion * contributors as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(contributors.max(1))
}

impl AsyncAggregator {
    pub fn new(port: RolePort, mut contributors: Vec<NodeId>, rounds: u32, proportion: f64, workload: Workload) -> Self {
        contributors.sort();
        let batch = batch_size(proportion, contributors.len());
        AsyncAggregator {
            port,
            contributors,
            rounds,
            workload,
            batch,
            state: AggState::Broadcasting,
            done: 0,
            pending: VecDeque::new(),
            consumed: Vec::new(),
            started: 0.0,
        }
    }

    fn global(&self, dst: Dest) -> Packet {
        Packet::model(PacketKind::GlobalModel, self.port.me, dst, self.workload.model_bytes(), self.done + 1, 0)
    }

    fn try_aggregate(&mut self, ctx: &mut Ctx<'_, Envelope>) -> Block {
        if self.pending.len() < self.batch {
            self.state = AggState::WaitingResults;
            return self.port.wait();
        }
        self.consumed = self.pending.drain(..self.batch).collect();
        self.state = AggState::Aggregating;
        self.started = ctx.now().as_secs();
        Block::Exec(self.workload.aggregation_flops(self.batch))
    }
}

impl Actor<Envelope> for AsyncAggregator {
    fn resume(&mut self, ctx: &mut Ctx<'_, Envelope>, wake: Wake<Envelope>) -> Block {
        match wake {
            Wake::Message(Envelope::ToRole(RoleEvent::Ready)) => {
                if self.rounds == 0 {
                    self.port.kill(ctx);
                    self.state = AggState::Done;
                    return Block::Done;
                }
                let global = self.global(Dest::Broadcast);
                self.port.mediator.broadcast(ctx, global);
                self.state = AggState::WaitingResults;
                self.port.wait()
            }
            Wake::Message(Envelope::ToRole(RoleEvent::Packet(p))) => {
                self.port.observe(ctx, &p);
                if p.kind != PacketKind::LocalModel {
                    self.port.ignore(ctx, &p, "unexpected packet");
                } else if self.contributors.binary_search(&p.src).is_err() {
                    self.port.ignore(ctx, &p, "unregistered sender");
                } else {
                    self.pending.push_back(p.src);
                }
                if self.state == AggState::WaitingResults {
                    self.try_aggregate(ctx)
                } else {
                    self.port.wait()
                }
            }
            Wake::ExecDone => {
                self.done += 1;
                let inputs = std::mem::take(&mut self.consumed);
                self.port.record_aggregation(ctx, self.done, self.started, inputs.clone());
                self.port.probe.borrow_mut().rounds_completed = self.done;
                if self.done >= self.rounds {
                    self.port.kill(ctx);
                    self.state = AggState::Done;
                    return Block::Done;
                }
                for sender in inputs {
                    let global = self.global(Dest::Node(sender));
                    self.port.mediator.put(ctx, global);
                }
                self.try_aggregate(ctx)
            }
            Wake::Message(Envelope::ToRole(RoleEvent::Undeliverable(p))) => {
                self.port.ignore(ctx, &p, "undeliverable");
                self.port.wait()
            }
            _ => self.port.wait(),
        }
    }

    fn status(&self) -> String {
        format!(
            "{:?} {}/{} aggregations, {} pending, batch {}",
            self.state,
            self.done,
            self.rounds,
            self.pending.len(),
            self.batch
        )
    }
}
