mod common;

use std::collections::BTreeMap;

use fedsim::protocol::{PacketKind, Topology};
use fedsim::roles::{AggregatorKind, RoleKind, Workload};
use fedsim::scenario::{simulate, NodeSpec, RunOptions, RunReport};
use fedsim::{Platform, Scenario};

use common::*;

fn traced(platform: &Platform, scenario: &Scenario) -> RunReport {
    simulate(platform, scenario, 0, RunOptions { trace: true }).unwrap()
}

fn count(map: &BTreeMap<String, usize>, kind: &str) -> usize {
    map.get(kind).copied().unwrap_or(0)
}

#[test]
fn star_registers_every_trainer_once() {
    for n in 1..=4 {
        let p = access_mesh(&vec![1e9; n + 1], 1e7, 0.001);
        let s = flat_scenario(Topology::Star, AggregatorKind::Simple, n, 0, 1.0, mesh_host);
        let t = transfers(&traced(&p, &s).trace.unwrap());
        assert_eq!(count(&t, "RegistrationRequest"), n);
        assert_eq!(count(&t, "RegistrationConfirmation"), n);
        assert_eq!(count(&t, "Kill"), n);
        assert_eq!(count(&t, "GlobalModel"), 0);
    }
}

#[test]
fn ring_successors_follow_declaration_order() {
    let n = 4;
    let p = access_mesh(&vec![1e9; n + 1], 1e7, 0.001);
    let s = flat_scenario(Topology::Ring, AggregatorKind::Simple, n, 1, 1.0, mesh_host);
    let trace = traced(&p, &s).trace.unwrap();
    let mut hops: Vec<(String, String)> = trace
        .iter()
        .filter(|r| r.event == "comm_end" && r.packet == "GlobalModel")
        .map(|r| {
            let (a, b) = r.detail.split_once("->").unwrap();
            (a.to_string(), b.to_string())
        })
        .collect();
    hops.sort();
    let expected: Vec<(String, String)> = (0..=n).map(|i| (format!("h{i}"), format!("h{}", (i + 1) % (n + 1)))).collect();
    assert_eq!(hops, expected);
}

#[test]
fn hierarchical_fans_out_through_each_level() {
    // aggregator -> ha1, ha2 -> two trainers each.
    let mut nodes = vec![NodeSpec::new("aggregator", "h0", RoleKind::Aggregator, None)];
    for (i, ha) in ["ha1", "ha2"].iter().enumerate() {
        nodes.push(NodeSpec::new(*ha, format!("h{}", i + 1), RoleKind::HierarchicalAggregator, Some("aggregator")));
    }
    for i in 0..4 {
        let parent = if i < 2 { "ha1" } else { "ha2" };
        nodes.push(NodeSpec::new(format!("t{i}"), format!("h{}", i + 3), RoleKind::Trainer, Some(parent)));
    }
    let s = Scenario {
        topology: Topology::Hierarchical,
        aggregator: AggregatorKind::Simple,
        rounds: 1,
        async_proportion: 1.0,
        workload: Workload::mlp(),
        nodes,
    };
    let p = access_mesh(&[1e9; 7], 1e7, 0.001);
    let report = traced(&p, &s);
    let t = transfers(report.trace.as_ref().unwrap());
    assert_eq!(count(&t, "GlobalModel"), 2 + 4);
    assert_eq!(count(&t, "LocalModel"), 4 + 2);
    assert_eq!(count(&t, "Kill"), 2 + 4);
    assert_eq!(count(&t, "RegistrationRequest"), 6);
    // Each hierarchical aggregator sums its trainers into one model.
    let root: Vec<_> = report.probe.aggregations.iter().filter(|a| a.node.0 == 0).collect();
    assert_eq!(root.len(), 1);
    assert_eq!(root[0].inputs.len(), 2);
    assert_eq!(report.probe.aggregations.len(), 3);
    assert_eq!(report.result.rounds_completed, 1);
}

#[test]
fn async_batches_have_ceil_size() {
    for (n, p, batch) in [(4, 0.75, 3), (4, 0.5, 2), (3, 0.2, 1), (5, 1.0, 5), (5, 0.61, 4)] {
        let platform = access_mesh(&vec![1e9; n + 1], 1e7, 0.001);
        let s = flat_scenario(Topology::Star, AggregatorKind::Asynchronous, n, 4, p, mesh_host);
        let report = traced(&platform, &s);
        assert_eq!(report.probe.aggregations.len(), 4);
        assert!(report.probe.aggregations.iter().all(|a| a.inputs.len() == batch), "n={n} p={p}");
        assert_eq!(report.result.rounds_completed, 4);
    }
}

#[test]
fn trainer_busy_time_is_rounds_times_training() {
    let speeds = [2e9, 1e9, 5e8, 1e9];
    let p = access_mesh(&speeds, 1e7, 0.001);
    let rounds = 3;
    let s = flat_scenario(Topology::Star, AggregatorKind::Simple, 3, rounds, 1.0, mesh_host);
    let r = traced(&p, &s).result;
    let flops = 6.0 * 199_210.0 * 100.0;
    for (host, speed) in r.per_host.iter().zip(speeds).skip(1) {
        let expected = f64::from(rounds) * flops / speed;
        assert!((host.busy_s - expected).abs() < 1e-9, "{} vs {expected}", host.busy_s);
    }
    let agg = f64::from(rounds) * 2.0 * 199_210.0 * 3.0 / speeds[0];
    assert!((r.per_host[0].busy_s - agg).abs() < 1e-12);
}

#[test]
fn trainers_see_one_global_model_per_round() {
    for topology in Topology::ALL {
        if topology == Topology::Hierarchical {
            continue;
        }
        let p = access_mesh(&[1e9; 4], 1e7, 0.001);
        let s = flat_scenario(topology, AggregatorKind::Simple, 3, 2, 1.0, mesh_host);
        let report = traced(&p, &s);
        for t in 1..4 {
            let rounds: Vec<u32> = report
                .probe
                .deliveries
                .iter()
                .filter(|d| d.node.0 == t && d.kind == PacketKind::GlobalModel)
                .map(|d| d.round)
                .collect();
            assert_eq!(rounds, vec![1, 2], "{topology}");
        }
    }
}

#[test]
fn unroutable_scenario_is_rejected_before_running() {
    let p = shared_link_star(2, 1e9, 1e6, 0.01);
    // Ring needs t1 -> t2, which this platform lacks.
    let s = flat_scenario(Topology::Ring, AggregatorKind::Simple, 2, 1, 1.0, star_host);
    let err = simulate(&p, &s, 0, RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("missing route"), "{err}");
}
