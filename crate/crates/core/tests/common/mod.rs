#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fedsim::platform::{HostId, HostProfile, LinkId, LinkProfile};
use fedsim::protocol::Topology;
use fedsim::roles::{AggregatorKind, RoleKind, Workload};
use fedsim::scenario::{EventRecord, NodeSpec};
use fedsim::{Platform, Scenario};

pub const MODEL_BYTES: f64 = 199_210.0 * 4.0;
pub const CONTROL: f64 = 64.0;

/// Aggregator host `agg` plus `t1..tn`, every route crossing the single
/// link `l0`.
pub fn shared_link_star(n: usize, speed: f64, bw: f64, lat: f64) -> Platform {
    let mut hosts = vec![HostProfile::new("agg", speed, 10.0, 100.0)];
    hosts.extend((1..=n).map(|i| HostProfile::new(format!("t{i}"), speed, 10.0, 100.0)));
    let links = vec![LinkProfile::new("l0", bw, lat).with_energy(2.0, 1e-7)];
    let mut routes = BTreeMap::new();
    for i in 1..=n {
        routes.insert((HostId(i), HostId(0)), vec![LinkId(0)]);
        routes.insert((HostId(0), HostId(i)), vec![LinkId(0)]);
    }
    Platform::new(hosts, links, routes).unwrap()
}

/// One access link per host; every ordered pair routed over both access
/// links.
pub fn access_mesh(speeds: &[f64], bw: f64, lat: f64) -> Platform {
    let hosts = speeds.iter().enumerate().map(|(i, &s)| HostProfile::new(format!("h{i}"), s, 5.0, 50.0)).collect();
    let links = (0..speeds.len()).map(|i| LinkProfile::new(format!("l{i}"), bw, lat).with_energy(0.5, 1e-8)).collect();
    Platform::new(hosts, links, all_pairs(speeds.len())).unwrap()
}

pub fn all_pairs(n: usize) -> BTreeMap<(HostId, HostId), Vec<LinkId>> {
    let mut routes = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                routes.insert((HostId(a), HostId(b)), vec![LinkId(a), LinkId(b)]);
            }
        }
    }
    routes
}

/// `aggregator` on the first host, `t1..tn` on the next ones.
pub fn flat_scenario(topology: Topology, aggregator: AggregatorKind, n: usize, rounds: u32, p: f64, host: impl Fn(usize) -> String) -> Scenario {
    let mut nodes = vec![NodeSpec::new("aggregator", host(0), RoleKind::Aggregator, None)];
    nodes.extend((1..=n).map(|i| NodeSpec::new(format!("t{i}"), host(i), RoleKind::Trainer, None)));
    Scenario { topology, aggregator, rounds, async_proportion: p, workload: Workload::mlp(), nodes }
}

pub fn star_host(i: usize) -> String {
    if i == 0 { "agg".into() } else { format!("t{i}") }
}

pub fn mesh_host(i: usize) -> String {
    format!("h{i}")
}

/// Hand-derived makespan of a synchronous star whose routes all share one
/// link, every host running at `speed`.
///
/// Bootstrap: N requests share the link. The aggregator then confirms and
/// broadcasts at once, so N confirmations and N models start together; the
/// confirmations leave after 2N·64/bw and the models finish at rate bw/N.
/// Later rounds broadcast models alone. Uploads contend N-ways. The run ends
/// when the N kills arrive.
pub fn shared_star_makespan(n: usize, rounds: u32, speed: f64, bw: f64, lat: f64) -> f64 {
    let nf = n as f64;
    let train = 6.0 * 199_210.0 * 100.0 / speed;
    let aggregate = 2.0 * 199_210.0 * nf / speed;
    let registration = lat + nf * CONTROL / bw;
    let kill = lat + nf * CONTROL / bw;
    if rounds == 0 {
        // Aggregator kills immediately after registration, alongside the
        // confirmations: 2N control packets share the link.
        return registration + lat + 2.0 * nf * CONTROL / bw;
    }
    let first_broadcast = lat + nf * (MODEL_BYTES + CONTROL) / bw;
    let broadcast = lat + nf * MODEL_BYTES / bw;
    let upload = lat + nf * MODEL_BYTES / bw;
    let round = train + upload + aggregate;
    registration + first_broadcast + round + f64::from(rounds - 1) * (broadcast + round) + kill
}

/// Records whose transfer crossed the network, keyed by packet kind.
pub fn transfers(trace: &[EventRecord]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in trace.iter().filter(|r| r.event == "comm_end") {
        *out.entry(r.packet.clone()).or_insert(0) += 1;
    }
    out
}

/// A random valid (platform, scenario) pair.
pub fn random_config(rng: &mut ChaCha8Rng) -> (Platform, Scenario) {
    let topology = Topology::ALL[rng.gen_range(0..3)];
    let aggregator = AggregatorKind::ALL[rng.gen_range(0..2)];
    let rounds = rng.gen_range(0..4);
    let p = rng.gen_range(0.2..=1.0);
    let workload = Workload {
        n_parameters: rng.gen_range(1_000..300_000),
        samples_per_round: rng.gen_range(1..200),
        ..Workload::mlp()
    };
    let mut nodes = vec![NodeSpec::new("n0", "h0", RoleKind::Aggregator, None)];
    match topology {
        Topology::Star | Topology::Ring => {
            let n = rng.gen_range(1..7);
            nodes.extend((1..=n).map(|i| NodeSpec::new(format!("n{i}"), format!("h{i}"), RoleKind::Trainer, None)));
        }
        Topology::Hierarchical => {
            let mids = rng.gen_range(1..4);
            for _ in 0..mids {
                let i = nodes.len();
                let role = if rng.gen_bool(0.5) { RoleKind::HierarchicalAggregator } else { RoleKind::Proxy };
                nodes.push(NodeSpec::new(format!("n{i}"), format!("h{i}"), role, Some("n0")));
                for _ in 0..rng.gen_range(1..4) {
                    let j = nodes.len();
                    nodes.push(NodeSpec::new(format!("n{j}"), format!("h{j}"), RoleKind::Trainer, Some(&format!("n{i}"))));
                }
            }
            for _ in 0..rng.gen_range(0..2) {
                let j = nodes.len();
                nodes.push(NodeSpec::new(format!("n{j}"), format!("h{j}"), RoleKind::Trainer, Some("n0")));
            }
        }
    }
    let speeds: Vec<f64> = (0..nodes.len()).map(|_| [1e8, 5e8, 1e9, 2e9][rng.gen_range(0..4)]).collect();
    let hosts = speeds.iter().enumerate().map(|(i, &s)| HostProfile::new(format!("h{i}"), s, rng.gen_range(0.0..10.0), rng.gen_range(10.0..100.0))).collect();
    let links = (0..nodes.len())
        .map(|i| LinkProfile::new(format!("l{i}"), rng.gen_range(1e5..1e8), rng.gen_range(0.0..0.05)).with_energy(rng.gen_range(0.0..3.0), rng.gen_range(0.0..1e-7)))
        .collect();
    let platform = Platform::new(hosts, links, all_pairs(nodes.len())).unwrap();
    (platform, Scenario { topology, aggregator, rounds, async_proportion: p, workload, nodes })
}
