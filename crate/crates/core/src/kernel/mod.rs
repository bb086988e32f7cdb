//! Deterministic discrete-event kernel.
//!
//! Actors are cooperative state machines. Each call to [`Actor::resume`] runs
//! until the actor blocks on a compute activity, a mailbox, a timer, or
//! terminates. Events are ordered by `(time, insertion sequence)`, so a run is
//! a pure function of its inputs.
//!
//! Sends never block. A message between actors on the same host is appended
//! to the destination mailbox immediately; otherwise it becomes a flow in the
//! [`FlowNetwork`] and is appended when the flow completes. Deliveries between
//! a given sender and mailbox are kept in send order even when a later, smaller
//! message would finish draining first.

mod time;
pub mod trace;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::platform::{EnergyLedger, FlowNetwork, HostId, LinkId, Platform};

pub use time::SimTime;
pub use trace::{TraceEvent, TraceRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MailboxId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

/// What an actor is allowed to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActorKind {
    /// May execute flops on its host.
    Compute,
    /// Communication only.
    Network,
}

/// Why an actor is being resumed.
#[derive(Debug)]
pub enum Wake<M> {
    Start,
    Timer,
    ExecDone,
    Message(M),
}

/// What an actor waits for after returning control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Block {
    Exec(f64),
    Recv(MailboxId),
    Sleep(f64),
    Done,
}

/// Messages carried by the kernel expose a label for the trace.
pub trait Message {
    type Label: Clone + fmt::Debug;

    fn label(&self) -> Self::Label;
}

pub trait Actor<M: Message> {
    fn resume(&mut self, ctx: &mut Ctx<'_, M>, wake: Wake<M>) -> Block;

    /// Short description of internal state, used in deadlock reports.
    fn status(&self) -> String {
        String::new()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    EventInPast { at: f64, now: f64 },
    #[error("no route from {src} to {dst}")]
    Unroutable { src: String, dst: String },
    #[error("actor {actor}: invalid flop amount {flops}")]
    InvalidFlops { actor: String, flops: f64 },
    #[error("actor {actor} is not allowed to compute")]
    ComputeNotAllowed { actor: String },
    #[error("actor {actor} cannot read mailbox {mailbox} owned by another actor")]
    ForeignMailbox { actor: String, mailbox: usize },
    #[error("actor {actor}: invalid sleep duration {delay}")]
    InvalidDelay { actor: String, delay: f64 },
    #[error("actor {0} has no behavior installed")]
    MissingBehavior(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("deadlock at t={time}: {}", blocked.join("; "))]
    Deadlock { time: f64, blocked: Vec<String> },
    #[error("energy accounting: {0}")]
    Energy(String),
}

/// Result of one [`Kernel::advance`] step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Advanced(SimTime),
    Finished,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KernelStats {
    /// Messages that crossed at least one link.
    pub network_messages: u64,
    pub network_bytes: u64,
    /// Same-host hand-offs.
    pub local_messages: u64,
    /// Messages appended to a mailbox.
    pub deliveries: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum ActorState {
    Scheduled,
    Exec { flops: f64 },
    Recv(MailboxId),
    Sleeping,
    Terminated,
}

struct ActorMeta {
    name: String,
    host: HostId,
    kind: ActorKind,
    state: ActorState,
}

struct Mailbox<M> {
    owner: ActorId,
    queue: VecDeque<M>,
    waiting: bool,
}

#[derive(Debug, Clone, Copy)]
enum WakeReason {
    Start,
    Timer,
    ExecDone,
    MailboxReady(MailboxId),
}

#[derive(Debug)]
enum EventKind {
    Wake { actor: ActorId, reason: WakeReason },
    Network { version: u64 },
}

struct Scheduled {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

struct Transit<M> {
    msg: M,
    src: ActorId,
    dst: MailboxId,
    pair_seq: u64,
    bytes: u64,
    src_host: HostId,
    dst_host: HostId,
}

struct PairChannel<M> {
    next_send: u64,
    next_deliver: u64,
    held: BTreeMap<u64, M>,
}

impl<M> Default for PairChannel<M> {
    fn default() -> Self {
        PairChannel { next_send: 0, next_deliver: 0, held: BTreeMap::new() }
    }
}

/// Everything an actor may touch while it runs.
struct Core<M: Message> {
    now: SimTime,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    actors: Vec<ActorMeta>,
    mailboxes: Vec<Mailbox<M>>,
    platform: Platform,
    network: FlowNetwork<Transit<M>>,
    net_version: u64,
    pairs: BTreeMap<(ActorId, MailboxId), PairChannel<M>>,
    ledger: EnergyLedger,
    trace: Option<Vec<TraceRecord<M::Label>>>,
    stats: KernelStats,
    fatal: Option<SimError>,
}

impl<M: Message> Core<M> {
    fn push(&mut self, time: SimTime, kind: EventKind) -> EventId {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(Scheduled { time, seq, kind }));
        EventId(seq)
    }

    fn wake_at(&mut self, time: SimTime, actor: ActorId, reason: WakeReason) -> EventId {
        self.push(time, EventKind::Wake { actor, reason })
    }

    fn record(&mut self, host: HostId, actor: Option<ActorId>, event: TraceEvent<M::Label>) {
        let time = self.now.as_secs();
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord { time, host, actor, event });
        }
    }

    fn fail(&mut self, err: SimError) {
        if self.fatal.is_none() {
            self.fatal = Some(err);
        }
    }

    fn reschedule_network(&mut self) {
        self.net_version += 1;
        if let Some(t) = self.network.next_event() {
            let at = SimTime::from_secs(t.max(self.now.as_secs()));
            let version = self.net_version;
            self.push(at, EventKind::Network { version });
        }
    }

    fn send(&mut self, src: ActorId, dst: MailboxId, msg: M, bytes: u64) {
        let Some(mailbox) = self.mailboxes.get(dst.0) else {
            self.fail(SimError::Config(format!("unknown mailbox {}", dst.0)));
            return;
        };
        let src_host = self.actors[src.0].host;
        let dst_host = self.actors[mailbox.owner.0].host;
        let channel = self.pairs.entry((src, dst)).or_default();
        let pair_seq = channel.next_send;
        channel.next_send += 1;
        let transit = Transit { msg, src, dst, pair_seq, bytes, src_host, dst_host };

        if src_host == dst_host {
            self.stats.local_messages += 1;
            if self.trace.is_some() {
                let label = transit.msg.label();
                self.record(src_host, Some(src), TraceEvent::Local { msg: label });
            }
            self.arrive(transit);
            return;
        }

        let Some(route) = self.platform.route(src_host, dst_host).map(<[LinkId]>::to_vec) else {
            let err = SimError::Unroutable {
                src: self.platform.host(src_host).name.clone(),
                dst: self.platform.host(dst_host).name.clone(),
            };
            self.fail(err);
            return;
        };
        self.stats.network_messages += 1;
        self.stats.network_bytes += bytes;
        self.ledger.record_transfer(&route, bytes);
        if self.trace.is_some() {
            let label = transit.msg.label();
            self.record(src_host, Some(src), TraceEvent::CommStart { msg: label, bytes, src_host, dst_host });
        }
        self.network.start_flow(self.now.as_secs(), &route, bytes, transit);
        self.reschedule_network();
    }

    /// Enforces per-pair FIFO before appending to the mailbox.
    fn arrive(&mut self, transit: Transit<M>) {
        let key = (transit.src, transit.dst);
        let channel = self.pairs.get_mut(&key).expect("channel created on send");
        if transit.pair_seq != channel.next_deliver {
            channel.held.insert(transit.pair_seq, transit.msg);
            return;
        }
        channel.next_deliver += 1;
        let mut ready = vec![transit.msg];
        while let Some(msg) = channel.held.remove(&channel.next_deliver) {
            channel.next_deliver += 1;
            ready.push(msg);
        }
        for msg in ready {
            self.deliver(transit.dst, msg);
        }
    }

    fn deliver(&mut self, mb: MailboxId, msg: M) {
        self.stats.deliveries += 1;
        let mailbox = &mut self.mailboxes[mb.0];
        mailbox.queue.push_back(msg);
        if mailbox.waiting {
            mailbox.waiting = false;
            let owner = mailbox.owner;
            self.actors[owner.0].state = ActorState::Scheduled;
            self.wake_at(self.now, owner, WakeReason::MailboxReady(mb));
        }
    }
}

/// Handle given to an actor while it runs.
pub struct Ctx<'a, M: Message> {
    core: &'a mut Core<M>,
    actor: ActorId,
}

impl<M: Message> Ctx<'_, M> {
    pub fn now(&self) -> SimTime {
        self.core.now
    }

    pub fn actor(&self) -> ActorId {
        self.actor
    }

    pub fn host(&self) -> HostId {
        self.core.actors[self.actor.0].host
    }

    /// Non-blocking send of `msg`, sized `bytes` on the wire.
    pub fn send(&mut self, dst: MailboxId, msg: M, bytes: u64) {
        self.core.send(self.actor, dst, msg, bytes);
    }

    pub fn tracing(&self) -> bool {
        self.core.trace.is_some()
    }

    /// Adds a free-form record to the trace (no-op when tracing is off).
    pub fn note(&mut self, tag: &'static str, msg: M::Label, detail: impl FnOnce() -> String) {
        if self.core.trace.is_some() {
            let host = self.host();
            self.core.record(host, Some(self.actor), TraceEvent::Note { tag, msg, detail: detail() });
        }
    }

    /// Stops the simulation with a fatal error once the actor yields.
    pub fn abort(&mut self, err: SimError) {
        self.core.fail(err);
    }
}

/// The simulation engine.
pub struct Kernel<M: Message> {
    core: Core<M>,
    behaviors: Vec<Option<Box<dyn Actor<M>>>>,
}

impl<M: Message> Kernel<M> {
    pub fn new(platform: &Platform) -> Self {
        Kernel {
            core: Core {
                now: SimTime::ZERO,
                seq: 0,
                queue: BinaryHeap::new(),
                actors: Vec::new(),
                mailboxes: Vec::new(),
                network: FlowNetwork::new(platform.links()),
                ledger: EnergyLedger::new(platform.hosts().len(), platform.links().len()),
                platform: platform.clone(),
                net_version: 0,
                pairs: BTreeMap::new(),
                trace: None,
                stats: KernelStats::default(),
                fatal: None,
            },
            behaviors: Vec::new(),
        }
    }

    pub fn enable_trace(&mut self) {
        self.core.trace.get_or_insert_with(Vec::new);
    }

    /// Declares an actor on `host`. It starts at the current time once a
    /// behavior is installed with [`install`](Self::install).
    pub fn add_actor(&mut self, host: HostId, name: impl Into<String>, kind: ActorKind) -> ActorId {
        assert!(host.0 < self.core.platform.hosts().len(), "unknown host {host}");
        let id = ActorId(self.core.actors.len());
        self.core.actors.push(ActorMeta {
            name: name.into(),
            host,
            kind,
            state: ActorState::Scheduled,
        });
        self.behaviors.push(None);
        self.core.wake_at(self.core.now, id, WakeReason::Start);
        id
    }

    pub fn install(&mut self, actor: ActorId, behavior: Box<dyn Actor<M>>) {
        self.behaviors[actor.0] = Some(behavior);
    }

    pub fn spawn(&mut self, host: HostId, name: impl Into<String>, kind: ActorKind, behavior: Box<dyn Actor<M>>) -> ActorId {
        let id = self.add_actor(host, name, kind);
        self.install(id, behavior);
        id
    }

    /// Creates a mailbox readable only by `owner`.
    pub fn create_mailbox(&mut self, owner: ActorId) -> MailboxId {
        let id = MailboxId(self.core.mailboxes.len());
        self.core.mailboxes.push(Mailbox {
            owner,
            queue: VecDeque::new(),
            waiting: false,
        });
        id
    }

    /// Schedules a timer wake-up of `actor` at `at`.
    pub fn schedule_event(&mut self, at: SimTime, actor: ActorId) -> Result<EventId, SimError> {
        if at < self.core.now {
            return Err(SimError::EventInPast { at: at.as_secs(), now: self.core.now.as_secs() });
        }
        Ok(self.core.wake_at(at, actor, WakeReason::Timer))
    }

    /// Injects a message from outside any actor, attributed to `from`.
    pub fn post(&mut self, from: ActorId, dst: MailboxId, msg: M, bytes: u64) {
        self.core.send(from, dst, msg, bytes);
    }

    pub fn now(&self) -> SimTime {
        self.core.now
    }

    pub fn stats(&self) -> KernelStats {
        self.core.stats
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.core.ledger
    }

    pub fn platform(&self) -> &Platform {
        &self.core.platform
    }

    pub fn trace(&self) -> Option<&[TraceRecord<M::Label>]> {
        self.core.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceRecord<M::Label>>> {
        self.core.trace.take()
    }

    pub fn actor_name(&self, actor: ActorId) -> &str {
        &self.core.actors[actor.0].name
    }

    pub fn actor_host(&self, actor: ActorId) -> HostId {
        self.core.actors[actor.0].host
    }

    pub fn is_terminated(&self, actor: ActorId) -> bool {
        self.core.actors[actor.0].state == ActorState::Terminated
    }

    /// Messages still waiting in a mailbox.
    pub fn pending(&self, mb: MailboxId) -> usize {
        self.core.mailboxes[mb.0].queue.len()
    }

    /// Transfers still inside the network.
    pub fn in_flight(&self) -> usize {
        self.core.network.len()
    }

    /// Pops the earliest event and processes it.
    ///
    /// Returns [`Step::Finished`] once no event is left and every actor has
    /// terminated; a non-empty set of blocked actors at that point is a
    /// deadlock.
    pub fn advance(&mut self) -> Result<Step, SimError> {
        loop {
            if let Some(err) = self.core.fatal.take() {
                return Err(err);
            }
            let Some(Reverse(ev)) = self.core.queue.pop() else {
                return self.finish();
            };
            if ev.time < self.core.now {
                return Err(SimError::EventInPast { at: ev.time.as_secs(), now: self.core.now.as_secs() });
            }
            match ev.kind {
                EventKind::Network { version } => {
                    if version != self.core.net_version {
                        continue;
                    }
                    self.core.now = ev.time;
                    self.network_step();
                }
                EventKind::Wake { actor, reason } => {
                    self.core.now = ev.time;
                    self.run_actor(actor, reason);
                }
            }
            if let Some(err) = self.core.fatal.take() {
                return Err(err);
            }
            return Ok(Step::Advanced(self.core.now));
        }
    }

    /// Runs until quiescence and returns the final clock.
    pub fn run(&mut self) -> Result<SimTime, SimError> {
        while let Step::Advanced(_) = self.advance()? {}
        Ok(self.core.now)
    }

    fn finish(&mut self) -> Result<Step, SimError> {
        let blocked: Vec<String> = self
            .core
            .actors
            .iter()
            .enumerate()
            .filter(|(_, a)| a.state != ActorState::Terminated)
            .map(|(i, a)| {
                let waiting = match a.state {
                    ActorState::Recv(mb) => format!("blocked on mailbox {}", mb.0),
                    other => format!("{other:?}"),
                };
                let status = self.behaviors[i].as_ref().map(|b| b.status()).unwrap_or_default();
                if status.is_empty() {
                    format!("{} {}", a.name, waiting)
                } else {
                    format!("{} {} [{}]", a.name, waiting, status)
                }
            })
            .collect();
        if blocked.is_empty() {
            Ok(Step::Finished)
        } else {
            Err(SimError::Deadlock { time: self.core.now.as_secs(), blocked })
        }
    }

    fn network_step(&mut self) {
        let now = self.core.now.as_secs();
        let completed = self.core.network.advance(now);
        for (_, transit) in completed {
            if self.core.trace.is_some() {
                let label = transit.msg.label();
                self.core.record(
                    transit.dst_host,
                    Some(transit.src),
                    TraceEvent::CommEnd {
                        msg: label,
                        bytes: transit.bytes,
                        src_host: transit.src_host,
                        dst_host: transit.dst_host,
                    },
                );
            }
            self.core.arrive(transit);
        }
        self.core.reschedule_network();
    }

    fn run_actor(&mut self, id: ActorId, reason: WakeReason) {
        let meta = &self.core.actors[id.0];
        if meta.state == ActorState::Terminated {
            return;
        }
        let host = meta.host;
        if let (ActorState::Recv(mb), WakeReason::Timer) = (meta.state, reason) {
            self.core.mailboxes[mb.0].waiting = false;
        }
        let meta = &self.core.actors[id.0];
        let mut wake = match reason {
            WakeReason::Start => Wake::Start,
            WakeReason::Timer => Wake::Timer,
            WakeReason::ExecDone => {
                if let ActorState::Exec { flops } = meta.state {
                    self.core.record(host, Some(id), TraceEvent::ExecEnd { flops });
                }
                Wake::ExecDone
            }
            WakeReason::MailboxReady(mb) => match self.core.mailboxes[mb.0].queue.pop_front() {
                Some(msg) => Wake::Message(msg),
                None => return,
            },
        };
        let Some(mut behavior) = self.behaviors[id.0].take() else {
            self.core.fail(SimError::MissingBehavior(self.core.actors[id.0].name.clone()));
            return;
        };
        loop {
            let block = {
                let mut ctx = Ctx { core: &mut self.core, actor: id };
                behavior.resume(&mut ctx, wake)
            };
            let name = || self.core.actors[id.0].name.clone();
            match block {
                Block::Exec(flops) => {
                    if !(flops.is_finite() && flops >= 0.0) {
                        let actor = name();
                        self.core.fail(SimError::InvalidFlops { actor, flops });
                        break;
                    }
                    if self.core.actors[id.0].kind != ActorKind::Compute {
                        let actor = name();
                        self.core.fail(SimError::ComputeNotAllowed { actor });
                        break;
                    }
                    let duration = self.core.platform.compute_duration(flops, host);
                    if duration == 0.0 {
                        wake = Wake::ExecDone;
                        continue;
                    }
                    let start = self.core.now;
                    let end = start + duration;
                    self.core.ledger.record_busy(host, start.as_secs(), end.as_secs());
                    self.core.record(host, Some(id), TraceEvent::ExecStart { flops });
                    self.core.actors[id.0].state = ActorState::Exec { flops };
                    self.core.wake_at(end, id, WakeReason::ExecDone);
                    break;
                }
                Block::Recv(mb) => {
                    let Some(mailbox) = self.core.mailboxes.get_mut(mb.0) else {
                        self.core.fail(SimError::Config(format!("unknown mailbox {}", mb.0)));
                        break;
                    };
                    if mailbox.owner != id {
                        let actor = name();
                        self.core.fail(SimError::ForeignMailbox { actor, mailbox: mb.0 });
                        break;
                    }
                    if let Some(msg) = mailbox.queue.pop_front() {
                        wake = Wake::Message(msg);
                        continue;
                    }
                    mailbox.waiting = true;
                    self.core.actors[id.0].state = ActorState::Recv(mb);
                    break;
                }
                Block::Sleep(delay) => {
                    if !(delay.is_finite() && delay >= 0.0) {
                        let actor = name();
                        self.core.fail(SimError::InvalidDelay { actor, delay });
                        break;
                    }
                    self.core.actors[id.0].state = ActorState::Sleeping;
                    let at = self.core.now + delay;
                    self.core.wake_at(at, id, WakeReason::Timer);
                    break;
                }
                Block::Done => {
                    self.core.actors[id.0].state = ActorState::Terminated;
                    self.core.record(host, Some(id), TraceEvent::ActorEnd);
                    break;
                }
            }
        }
        self.behaviors[id.0] = Some(behavior);
    }
}

#[cfg(test)]
mod tests;
