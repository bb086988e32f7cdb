use std::cell::RefCell;
use std::rc::Rc;

use thiserror::Error;

use crate::kernel::{Actor, ActorKind, Kernel, SimError};
use crate::platform::Platform;
use crate::protocol::{Directory, Envelope, Mediator, NetManager, NmConfig, NodeEntry, NodeId};
use crate::roles::{
    AggregatorKind, AsyncAggregator, HierarchicalAggregator, Probe, Proxy, RoleKind, RolePort, SimpleAggregator, Trainer,
};

use super::trace::{convert, EventRecord};
use super::{HostUsage, RunResult, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub trace: bool,
}

/// A result plus what the roles observed and, optionally, the event log.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub result: RunResult,
    pub probe: Probe,
    pub trace: Option<Vec<EventRecord>>,
    pub node_names: Vec<String>,
}

/// Runs `scenario` on `platform` to quiescence.
///
/// The seed is accepted for reproducibility bookkeeping; the current role
/// automata are fully deterministic and draw no random numbers.
pub fn run_simulation(platform: &Platform, scenario: &Scenario, seed: u64) -> Result<RunResult, RunError> {
    simulate(platform, scenario, seed, RunOptions::default()).map(|r| r.result)
}

pub fn simulate(platform: &Platform, scenario: &Scenario, _seed: u64, opts: RunOptions) -> Result<RunReport, RunError> {
    let plan = scenario.plan(platform)?;
    let mut kernel: Kernel<Envelope> = Kernel::new(platform);
    if opts.trace {
        kernel.enable_trace();
    }

    let mut actors = Vec::with_capacity(plan.nodes.len());
    let mut entries = Vec::with_capacity(plan.nodes.len());
    for node in &plan.nodes {
        let role = kernel.add_actor(node.host, format!("{}/role", node.name), ActorKind::Compute);
        let nm = kernel.add_actor(node.host, format!("{}/nm", node.name), ActorKind::Network);
        let mediator = Mediator { role_to_nm: kernel.create_mailbox(nm), nm_to_role: kernel.create_mailbox(role) };
        entries.push(NodeEntry { name: node.name.clone(), host: node.host, mediator });
        actors.push((role, nm));
    }
    let dir = Rc::new(Directory::new(entries));
    let probe = Rc::new(RefCell::new(Probe::default()));

    for (i, (node, &(role, nm))) in plan.nodes.iter().zip(&actors).enumerate() {
        let me = NodeId(i);
        let port = RolePort::new(me, dir.get(me).expect("entry").mediator, probe.clone());
        let w = scenario.workload.clone();
        let behavior: Box<dyn Actor<Envelope>> = match node.role {
            RoleKind::Aggregator => match scenario.aggregator {
                AggregatorKind::Simple => {
                    Box::new(SimpleAggregator::new(port, node.contributors.clone(), scenario.rounds, w))
                }
                AggregatorKind::Asynchronous => Box::new(AsyncAggregator::new(
                    port,
                    node.contributors.clone(),
                    scenario.rounds,
                    scenario.async_proportion,
                    w,
                )),
            },
            RoleKind::HierarchicalAggregator => Box::new(HierarchicalAggregator::new(
                port,
                node.aggregator.expect("resolved"),
                node.contributors.clone(),
                w,
            )),
            RoleKind::Trainer => Box::new(Trainer::new(port, node.aggregator.expect("resolved"), w)),
            RoleKind::Proxy => {
                Box::new(Proxy::new(port, node.parent, node.children.clone(), node.descendants.clone()))
            }
        };
        kernel.install(role, behavior);
        let cfg = NmConfig {
            node: me,
            topology: plan.topology,
            contact: node.parent,
            expected: node.children.len(),
            relay_role: node.role == RoleKind::Proxy,
        };
        kernel.install(nm, Box::new(NetManager::new(cfg, dir.clone())));
    }

    let sim_time = kernel.run()?.as_secs();
    let energy = kernel
        .ledger()
        .report(platform, sim_time)
        .map_err(|e| SimError::Energy(e.to_string()))?;
    let stats = kernel.stats();
    let probe = probe.borrow().clone();
    let result = RunResult {
        sim_time,
        energy_total: energy.hosts_total + energy.links_total,
        energy_hosts: energy.hosts_total,
        energy_links: energy.links_total,
        per_host: platform
            .hosts()
            .iter()
            .zip(&energy.hosts)
            .map(|(h, e)| HostUsage { host: h.name.clone(), busy_s: e.busy_s, idle_s: e.idle_s, joules: e.joules })
            .collect(),
        rounds_completed: probe.rounds_completed,
        messages_sent: stats.network_messages,
        bytes_transferred: stats.network_bytes,
        total_gflops: platform.total_gflops(),
    };
    let trace = kernel.take_trace().map(|records| {
        let names: Vec<String> = (0..actors.len() * 2).map(|a| kernel.actor_name(crate::kernel::ActorId(a)).to_string()).collect();
        convert(records, platform, &dir, |a| names[a.0].clone())
    });
    Ok(RunReport { result, probe, trace, node_names: plan.nodes.iter().map(|n| n.name.clone()).collect() })
}
