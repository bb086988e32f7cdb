use crate::platform::HostId;

use super::ActorId;

/// One entry of the kernel's event history.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord<L> {
    pub time: f64,
    pub host: HostId,
    pub actor: Option<ActorId>,
    pub event: TraceEvent<L>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent<L> {
    ExecStart {
        flops: f64,
    },
    ExecEnd {
        flops: f64,
    },
    /// A message entered the network. `host` is the sender's host.
    CommStart {
        msg: L,
        bytes: u64,
        src_host: HostId,
        dst_host: HostId,
    },
    /// A message left the network. `host` is the receiver's host.
    CommEnd {
        msg: L,
        bytes: u64,
        src_host: HostId,
        dst_host: HostId,
    },
    /// Same-host hand-off; costs no time.
    Local {
        msg: L,
    },
    /// Free-form record emitted by an actor.
    Note {
        tag: &'static str,
        msg: L,
        detail: String,
    },
    ActorEnd,
}

impl<L> TraceEvent<L> {
    pub fn name(&self) -> &'static str {
        match self {
            TraceEvent::ExecStart { .. } => "exec_start",
            TraceEvent::ExecEnd { .. } => "exec_end",
            TraceEvent::CommStart { .. } => "comm_start",
            TraceEvent::CommEnd { .. } => "comm_end",
            TraceEvent::Local { .. } => "local",
            TraceEvent::Note { tag, .. } => tag,
            TraceEvent::ActorEnd => "actor_end",
        }
    }
}
