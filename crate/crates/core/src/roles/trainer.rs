use crate::kernel::{Actor, Block, Ctx, Wake};
use crate::protocol::{Dest, Envelope, NodeId, Packet, PacketKind, RoleEvent};

use super::{RolePort, Workload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainerState {
    WaitingGlobal,
    Training,
    Sending,
    Done,
}

/// Trains on every global model received and returns the local model to its
/// aggregator.
pub struct Trainer {
    port: RolePort,
    aggregator: NodeId,
    workload: Workload,
    state: TrainerState,
    round: u32,
}

impl Trainer {
    pub fn new(port: RolePort, aggregator: NodeId, workload: Workload) -> Self {
        Trainer { port, aggregator, workload, state: TrainerState::WaitingGlobal, round: 0 }
    }

    fn on_packet(&mut self, ctx: &mut Ctx<'_, Envelope>, packet: Packet) -> Block {
        self.port.observe(ctx, &packet);
        match packet.kind {
            PacketKind::Kill => {
                self.state = TrainerState::Done;
                Block::Done
            }
            PacketKind::GlobalModel => {
                self.state = TrainerState::Training;
                self.round = packet.meta.round;
                Block::Exec(self.workload.training_flops())
            }
            _ => {
                self.port.ignore(ctx, &packet, "unexpected packet");
                self.port.wait()
            }
        }
    }
}

impl Actor<Envelope> for Trainer {
    fn resume(&mut self, ctx: &mut Ctx<'_, Envelope>, wake: Wake<Envelope>) -> Block {
        match wake {
            Wake::Message(Envelope::ToRole(RoleEvent::Packet(p))) => self.on_packet(ctx, p),
            Wake::ExecDone => {
                self.state = TrainerState::Sending;
                let local = Packet::model(
                    PacketKind::LocalModel,
                    self.port.me,
                    Dest::Node(self.aggregator),
                    self.workload.model_bytes(),
                    self.round,
                    1,
                );
                self.port.mediator.put(ctx, local);
                self.state = TrainerState::WaitingGlobal;
                self.port.wait()
            }
            Wake::Message(Envelope::ToRole(RoleEvent::Undeliverable(p))) => {
                self.port.ignore(ctx, &p, "undeliverable");
                self.port.wait()
            }
            _ => self.port.wait(),
        }
    }

    fn status(&self) -> String {
        format!("{:?} round {}", self.state, self.round)
    }
}
