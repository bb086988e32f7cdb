use crate::kernel::{ActorId, TraceEvent, TraceRecord};
use crate::platform::Platform;
use crate::protocol::{Dest, Directory, PacketLabel};

use super::output::{csv_bytes, fmt_float};

/// One line of the event log.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub host: String,
    pub actor: String,
    pub event: String,
    pub packet: String,
    pub round: Option<u32>,
    pub flops: Option<f64>,
    pub bytes: Option<u64>,
    pub src: String,
    pub dst: String,
    pub detail: String,
}

pub const TRACE_COLUMNS: [&str; 11] =
    ["t", "host", "actor", "event", "packet", "round", "flops", "bytes", "src", "dst", "detail"];

pub(crate) fn convert(
    records: Vec<TraceRecord<Option<PacketLabel>>>,
    platform: &Platform,
    dir: &Directory,
    actor_name: impl Fn(ActorId) -> String,
) -> Vec<EventRecord> {
    records
        .into_iter()
        .map(|r| {
            let mut e = EventRecord {
                t: r.time,
                host: platform.host(r.host).name.clone(),
                actor: r.actor.map(&actor_name).unwrap_or_default(),
                event: r.event.name().to_string(),
                packet: String::new(),
                round: None,
                flops: None,
                bytes: None,
                src: String::new(),
                dst: String::new(),
                detail: String::new(),
            };
            let label = match r.event {
                TraceEvent::ExecStart { flops } | TraceEvent::ExecEnd { flops } => {
                    e.flops = Some(flops);
                    None
                }
                TraceEvent::CommStart { msg, bytes, src_host, dst_host }
                | TraceEvent::CommEnd { msg, bytes, src_host, dst_host } => {
                    e.bytes = Some(bytes);
                    e.detail = format!("{}->{}", platform.host(src_host).name, platform.host(dst_host).name);
                    msg
                }
                TraceEvent::Local { msg } => msg,
                TraceEvent::Note { msg, detail, .. } => {
                    e.detail = detail;
                    msg
                }
                TraceEvent::ActorEnd => None,
            };
            if let Some(l) = label {
                e.packet = l.kind.to_string();
                e.round = (l.round > 0).then_some(l.round);
                e.src = dir.name(l.src).to_string();
                e.dst = match l.dst {
                    Dest::Node(n) => dir.name(n).to_string(),
                    Dest::Broadcast => "*".to_string(),
                };
            }
            e
        })
        .collect()
}

pub fn trace_csv(records: &[EventRecord]) -> Vec<u8> {
    csv_bytes(
        &TRACE_COLUMNS,
        records.iter().map(|r| {
            vec![
                fmt_float(r.t),
                r.host.clone(),
                r.actor.clone(),
                r.event.clone(),
                r.packet.clone(),
                r.round.map(|x| x.to_string()).unwrap_or_default(),
                r.flops.map(fmt_float).unwrap_or_default(),
                r.bytes.map(|x| x.to_string()).unwrap_or_default(),
                r.src.clone(),
                r.dst.clone(),
                r.detail.clone(),
            ]
        }),
    )
}
