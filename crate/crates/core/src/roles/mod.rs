//! Federated learning role automata and the workload cost model.

mod aggregator;
mod hierarchical;
mod proxy;
mod trainer;
mod workload;

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::kernel::{Block, Ctx};
use crate::protocol::{Envelope, Mediator, NodeId, Packet, PacketKind};

pub use aggregator::{AsyncAggregator, SimpleAggregator};
pub use hierarchical::HierarchicalAggregator;
pub use proxy::Proxy;
pub use trainer::Trainer;
pub use workload::Workload;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    Aggregator,
    HierarchicalAggregator,
    Trainer,
    Proxy,
}

impl RoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Aggregator => "aggregator",
            RoleKind::HierarchicalAggregator => "hierarchical_aggregator",
            RoleKind::Trainer => "trainer",
            RoleKind::Proxy => "proxy",
        }
    }
}

/// Aggregation algorithm of the central aggregator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorKind {
    Simple,
    Asynchronous,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 2] = [AggregatorKind::Simple, AggregatorKind::Asynchronous];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregatorKind::Simple => "simple",
            AggregatorKind::Asynchronous => "asynchronous",
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A packet handed to a role.
#[derive(Clone, Debug, PartialEq)]
pub struct RoleDelivery {
    pub time: f64,
    pub node: NodeId,
    pub kind: PacketKind,
    pub src: NodeId,
    pub round: u32,
}

/// One aggregation step of an aggregator or hierarchical aggregator.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregation {
    pub node: NodeId,
    pub round: u32,
    pub start: f64,
    pub end: f64,
    /// Senders of the consumed models, in arrival order.
    pub inputs: Vec<NodeId>,
}

/// What roles observed during a run.
#[derive(Clone, Debug, Default)]
pub struct Probe {
    pub deliveries: Vec<RoleDelivery>,
    pub aggregations: Vec<Aggregation>,
    /// Aggregations completed by the central aggregator.
    pub rounds_completed: u32,
}

pub type SharedProbe = Rc<RefCell<Probe>>;

/// Identity and queues shared by every role.
#[derive(Clone)]
pub struct RolePort {
    pub me: NodeId,
    pub mediator: Mediator,
    pub probe: SharedProbe,
}

impl RolePort {
    pub fn new(me: NodeId, mediator: Mediator, probe: SharedProbe) -> Self {
        RolePort { me, mediator, probe }
    }

    fn wait(&self) -> Block {
        Block::Recv(self.mediator.nm_to_role)
    }

    fn observe(&self, ctx: &mut Ctx<'_, Envelope>, packet: &Packet) {
        self.probe.borrow_mut().deliveries.push(RoleDelivery {
            time: ctx.now().as_secs(),
            node: self.me,
            kind: packet.kind,
            src: packet.src,
            round: packet.meta.round,
        });
        ctx.note("role_recv", Some(packet.label()), String::new);
    }

    fn ignore(&self, ctx: &mut Ctx<'_, Envelope>, packet: &Packet, reason: &str) {
        warn!("{}: ignoring {:?} from {}: {}", self.me, packet.kind, packet.src, reason);
        ctx.note("role_ignore", Some(packet.label()), || reason.to_string());
    }

    fn kill(&self, ctx: &mut Ctx<'_, Envelope>) {
        let kill = Packet::control(PacketKind::Kill, self.me, crate::protocol::Dest::Broadcast);
        self.mediator.broadcast(ctx, kill);
    }

    fn record_aggregation(&self, ctx: &mut Ctx<'_, Envelope>, round: u32, start: f64, inputs: Vec<NodeId>) {
        let end = ctx.now().as_secs();
        ctx.note("aggregate", None, || {
            let names: Vec<String> = inputs.iter().map(|n| n.0.to_string()).collect();
            format!("round={round} inputs={}", names.join(" "))
        });
        self.probe.borrow_mut().aggregations.push(Aggregation { node: self.me, round, start, end, inputs });
    }
}
