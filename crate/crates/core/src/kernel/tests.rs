use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use proptest::prelude::*;

use super::*;
use crate::platform::{HostProfile, LinkProfile};

#[derive(Clone, Debug, PartialEq)]
struct Msg(u32);

impl Message for Msg {
    type Label = u32;

    fn label(&self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Exec(f64),
    Sleep(f64),
    Send(MailboxId, u32, u64),
    Recv(MailboxId),
}

type Log = Rc<RefCell<Vec<(f64, String)>>>;

/// Runs a fixed list of operations, logging every resumption.
struct Script {
    name: &'static str,
    ops: Vec<Op>,
    next: usize,
    log: Log,
}

impl Script {
    fn new(name: &'static str, ops: Vec<Op>, log: &Log) -> Box<Self> {
        Box::new(Script { name, ops, next: 0, log: log.clone() })
    }
}

impl Actor<Msg> for Script {
    fn resume(&mut self, ctx: &mut Ctx<'_, Msg>, wake: Wake<Msg>) -> Block {
        let what = match wake {
            Wake::Start => "start".to_string(),
            Wake::Timer => "timer".to_string(),
            Wake::ExecDone => "exec".to_string(),
            Wake::Message(m) => format!("msg{}", m.0),
        };
        self.log.borrow_mut().push((ctx.now().as_secs(), format!("{}:{}", self.name, what)));
        while let Some(op) = self.ops.get(self.next).cloned() {
            self.next += 1;
            match op {
                Op::Exec(f) => return Block::Exec(f),
                Op::Sleep(d) => return Block::Sleep(d),
                Op::Recv(mb) => return Block::Recv(mb),
                Op::Send(mb, v, bytes) => ctx.send(mb, Msg(v), bytes),
            }
        }
        Block::Done
    }
}

fn platform(n_hosts: usize, bw: f64, lat: f64) -> Platform {
    let hosts = (0..n_hosts).map(|i| HostProfile::new(format!("h{i}"), 1e9, 10.0, 100.0)).collect();
    let links = vec![LinkProfile::new("l0", bw, lat)];
    let mut routes = BTreeMap::new();
    for a in 0..n_hosts {
        for b in 0..n_hosts {
            if a != b {
                routes.insert((HostId(a), HostId(b)), vec![LinkId(0)]);
            }
        }
    }
    Platform::new(hosts, links, routes).unwrap()
}

fn log() -> Log {
    Rc::new(RefCell::new(Vec::new()))
}

#[test]
fn empty_queue_finishes() {
    let mut k: Kernel<Msg> = Kernel::new(&platform(1, 1.0, 0.0));
    assert_eq!(k.advance().unwrap(), Step::Finished);
}

#[test]
fn timer_advances_clock() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Sleep(2.5)], &l));
    assert_eq!(k.advance().unwrap(), Step::Advanced(SimTime::ZERO));
    assert_eq!(k.advance().unwrap(), Step::Advanced(SimTime::from_secs(2.5)));
    assert_eq!(k.advance().unwrap(), Step::Finished);
}

#[test]
fn exec_duration_is_flops_over_speed() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Sleep(1.0), Op::Exec(1e9)], &l));
    let end = k.run().unwrap();
    assert_eq!(end.as_secs(), 2.0);
    assert_eq!(k.ledger().busy_intervals(HostId(0)), &[(1.0, 2.0)]);
}

#[test]
fn exec_examples() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Exec(0.0)], &l));
    assert_eq!(k.run().unwrap(), SimTime::ZERO);
    assert!(k.ledger().busy_intervals(HostId(0)).is_empty());

    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Exec(2e9)], &l));
    assert_eq!(k.run().unwrap().as_secs(), 2.0);

    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Exec(1e9), Op::Exec(1e9)], &l));
    k.run().unwrap();
    let busy: f64 = k.ledger().busy_intervals(HostId(0)).iter().map(|(s, e)| e - s).sum();
    assert_eq!(busy, 2.0);
}

#[test]
fn exec_validation() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Exec(-1.0)], &l));
    assert!(matches!(k.run(), Err(SimError::InvalidFlops { .. })));

    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    k.spawn(HostId(0), "nm", ActorKind::Network, Script::new("nm", vec![Op::Exec(1.0)], &l));
    assert!(matches!(k.run(), Err(SimError::ComputeNotAllowed { .. })));
}

#[test]
fn simultaneous_events_follow_insertion_order() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    let a = k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Sleep(10.0), Op::Sleep(10.0)], &l));
    let b = k.spawn(HostId(0), "b", ActorKind::Compute, Script::new("b", vec![Op::Sleep(10.0), Op::Sleep(10.0)], &l));
    k.schedule_event(SimTime::from_secs(5.0), b).unwrap();
    k.schedule_event(SimTime::from_secs(5.0), a).unwrap();
    k.run().unwrap();
    let got: Vec<(f64, String)> = l.borrow().iter().filter(|(t, _)| *t > 0.0).cloned().collect();
    let want: Vec<(f64, String)> =
        vec![(5.0, "b:timer".into()), (5.0, "a:timer".into()), (10.0, "a:timer".into()), (10.0, "b:timer".into())];
    assert_eq!(got, want);
}

#[test]
fn earlier_event_runs_first() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    let a = k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Sleep(50.0); 3], &l));
    k.schedule_event(SimTime::from_secs(3.0), a).unwrap();
    k.schedule_event(SimTime::from_secs(2.0), a).unwrap();
    assert_eq!(k.advance().unwrap(), Step::Advanced(SimTime::ZERO));
    assert_eq!(k.advance().unwrap(), Step::Advanced(SimTime::from_secs(2.0)));
    assert_eq!(k.advance().unwrap(), Step::Advanced(SimTime::from_secs(3.0)));
}

#[test]
fn scheduling_in_the_past_fails() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    let a = k.spawn(HostId(0), "a", ActorKind::Compute, Script::new("a", vec![Op::Sleep(4.0)], &l));
    k.run().unwrap();
    let err = k.schedule_event(SimTime::from_secs(1.0), a).unwrap_err();
    assert_eq!(err, SimError::EventInPast { at: 1.0, now: 4.0 });
}

#[test]
fn same_host_send_is_instantaneous() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1e6, 0.1));
    let rx = k.add_actor(HostId(0), "rx", ActorKind::Network);
    let mb = k.create_mailbox(rx);
    k.install(rx, Script::new("rx", vec![Op::Recv(mb)], &l));
    k.spawn(HostId(0), "tx", ActorKind::Compute, Script::new("tx", vec![Op::Sleep(3.0), Op::Send(mb, 1, 1_000_000)], &l));
    assert_eq!(k.run().unwrap().as_secs(), 3.0);
    assert!(l.borrow().contains(&(3.0, "rx:msg1".to_string())));
    assert_eq!(k.stats().local_messages, 1);
    assert_eq!(k.stats().network_messages, 0);
}

#[test]
fn remote_send_pays_latency_and_bandwidth() {
    for (bytes, expected) in [(1_000_000, 1.1), (0, 0.1)] {
        let l = log();
        let mut k = Kernel::new(&platform(2, 1e6, 0.1));
        let rx = k.add_actor(HostId(1), "rx", ActorKind::Network);
        let mb = k.create_mailbox(rx);
        k.install(rx, Script::new("rx", vec![Op::Recv(mb)], &l));
        k.spawn(HostId(0), "tx", ActorKind::Network, Script::new("tx", vec![Op::Send(mb, 9, bytes)], &l));
        let end = k.run().unwrap().as_secs();
        assert!((end - expected).abs() < 1e-12, "{bytes} bytes: {end}");
        assert_eq!(k.ledger().link_bytes(LinkId(0)), bytes as f64);
    }
}

#[test]
fn recv_is_fifo_and_blocks() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    let rx = k.add_actor(HostId(0), "rx", ActorKind::Network);
    let mb = k.create_mailbox(rx);
    k.install(rx, Script::new("rx", vec![Op::Recv(mb), Op::Recv(mb), Op::Recv(mb)], &l));
    k.spawn(
        HostId(0),
        "tx",
        ActorKind::Compute,
        Script::new("tx", vec![Op::Send(mb, 1, 0), Op::Send(mb, 2, 0), Op::Sleep(7.0), Op::Send(mb, 3, 0)], &l),
    );
    k.run().unwrap();
    let rx_log: Vec<(f64, String)> = l.borrow().iter().filter(|(_, n)| n.starts_with("rx:msg")).cloned().collect();
    assert_eq!(
        rx_log,
        vec![(0.0, "rx:msg1".into()), (0.0, "rx:msg2".into()), (7.0, "rx:msg3".into())]
    );
}

#[test]
fn mailbox_has_a_single_reader() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    let owner = k.add_actor(HostId(0), "owner", ActorKind::Network);
    let mb = k.create_mailbox(owner);
    k.install(owner, Script::new("owner", vec![], &l));
    k.spawn(HostId(0), "thief", ActorKind::Network, Script::new("thief", vec![Op::Recv(mb)], &l));
    assert!(matches!(k.run(), Err(SimError::ForeignMailbox { .. })));
}

#[test]
fn per_pair_fifo_holds_under_fair_share() {
    // A large message followed by a small one on the same link: the small
    // one finishes draining first but must be delivered second.
    let l = log();
    let mut k = Kernel::new(&platform(2, 1e6, 0.0));
    let rx = k.add_actor(HostId(1), "rx", ActorKind::Network);
    let mb = k.create_mailbox(rx);
    k.install(rx, Script::new("rx", vec![Op::Recv(mb), Op::Recv(mb)], &l));
    k.spawn(
        HostId(0),
        "tx",
        ActorKind::Network,
        Script::new("tx", vec![Op::Send(mb, 1, 1_000_000), Op::Send(mb, 2, 10)], &l),
    );
    k.run().unwrap();
    let rx_log: Vec<String> = l.borrow().iter().filter(|(_, n)| n.starts_with("rx:msg")).map(|(_, n)| n.clone()).collect();
    assert_eq!(rx_log, ["rx:msg1", "rx:msg2"]);
}

#[test]
fn unroutable_send_is_fatal() {
    let hosts = vec![HostProfile::new("a", 1.0, 0.0, 1.0), HostProfile::new("b", 1.0, 0.0, 1.0)];
    let p = Platform::new(hosts, vec![], BTreeMap::new()).unwrap();
    let l = log();
    let mut k = Kernel::new(&p);
    let rx = k.add_actor(HostId(1), "rx", ActorKind::Network);
    let mb = k.create_mailbox(rx);
    k.install(rx, Script::new("rx", vec![], &l));
    k.spawn(HostId(0), "tx", ActorKind::Network, Script::new("tx", vec![Op::Send(mb, 1, 1)], &l));
    assert_eq!(k.run().unwrap_err(), SimError::Unroutable { src: "a".into(), dst: "b".into() });
}

#[test]
fn blocked_actor_at_end_is_a_deadlock() {
    let l = log();
    let mut k = Kernel::new(&platform(1, 1.0, 0.0));
    let rx = k.add_actor(HostId(0), "lonely", ActorKind::Network);
    let mb = k.create_mailbox(rx);
    k.install(rx, Script::new("lonely", vec![Op::Recv(mb)], &l));
    match k.run() {
        Err(SimError::Deadlock { blocked, .. }) => {
            assert_eq!(blocked, vec!["lonely blocked on mailbox 0".to_string()]);
        }
        other => panic!("expected deadlock, got {other:?}"),
    }
}

type Outcome = (Vec<(f64, String)>, Vec<TraceRecord<u32>>, Vec<f64>);

fn random_run(ops: &[(usize, usize, u32, u64, f64)]) -> Outcome {
    let l = log();
    let mut k = Kernel::new(&platform(3, 1e6, 0.01));
    let mut rx = Vec::new();
    let mut mbs = Vec::new();
    for h in 0..3 {
        let a = k.add_actor(HostId(h), "rx", ActorKind::Network);
        rx.push(a);
        mbs.push(k.create_mailbox(a));
    }
    let mut expected = [0usize; 3];
    let mut scripts: Vec<Vec<Op>> = vec![Vec::new(); 3];
    for &(src, dst, v, bytes, exec) in ops {
        scripts[src].push(Op::Exec(exec));
        scripts[src].push(Op::Send(mbs[dst], v, bytes));
        expected[dst] += 1;
    }
    for h in 0..3 {
        k.install(rx[h], Script::new("rx", vec![Op::Recv(mbs[h]); expected[h]], &l));
        k.spawn(HostId(h), "tx", ActorKind::Compute, Script::new("tx", scripts[h].clone(), &l));
    }
    k.enable_trace();
    let mut times = Vec::new();
    while let Step::Advanced(t) = k.advance().unwrap() {
        times.push(t.as_secs());
    }
    assert_eq!(k.in_flight(), 0);
    let stats = k.stats();
    assert_eq!(stats.deliveries, stats.network_messages + stats.local_messages);
    let out = l.borrow().clone();
    (out, k.take_trace().unwrap(), times)
}

proptest! {
    #[test]
    fn runs_are_deterministic_and_monotone(
        ops in prop::collection::vec((0usize..3, 0usize..3, 0u32..100, 0u64..200_000, 0.0f64..1e8), 0..20)
    ) {
        let (log_a, trace_a, times_a) = random_run(&ops);
        let (log_b, trace_b, times_b) = random_run(&ops);
        prop_assert_eq!(&log_a, &log_b);
        prop_assert_eq!(trace_a, trace_b);
        prop_assert_eq!(&times_a, &times_b);
        prop_assert!(times_a.windows(2).all(|w| w[0] <= w[1]));
    }
}
