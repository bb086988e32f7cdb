use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::platform::{HostId, LinkId, Platform};
use crate::protocol::Topology;
use crate::roles::{AggregatorKind, RoleKind};
use crate::scenario::{NodeSpec, Scenario};

use super::config::EvolutionConfig;

/// Role of a machine inside an individual. Hierarchical aggregators and the
/// trainers they serve share a cluster number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MachineRole {
    Aggregator,
    HierarchicalAggregator { cluster: usize },
    Trainer { cluster: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    /// Index into the configured profile list.
    pub profile: usize,
    pub role: MachineRole,
}

/// One candidate deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub topology: Topology,
    pub aggregator: AggregatorKind,
    pub machines: Vec<Machine>,
    pub async_proportion: f64,
}

pub fn min_nodes(topology: Topology) -> usize {
    match topology {
        Topology::Star => 2,
        Topology::Ring | Topology::Hierarchical => 3,
    }
}

fn bounds(cfg: &EvolutionConfig, topology: Topology) -> (usize, usize) {
    let [lo, hi] = cfg.node_count_range;
    (lo.max(min_nodes(topology)), hi)
}

impl Individual {
    /// Draws a random valid individual.
    pub fn random(
        id: u64,
        topology: Topology,
        aggregator: AggregatorKind,
        cfg: &EvolutionConfig,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let (lo, hi) = bounds(cfg, topology);
        let n = rng.gen_range(lo..=hi);
        let profiles: Vec<usize> = (0..n).map(|_| rng.gen_range(0..cfg.profiles.len())).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut roles = vec![MachineRole::Trainer { cluster: 0 }; n];
        roles[order[0]] = MachineRole::Aggregator;
        if topology == Topology::Hierarchical {
            let clusters = rng.gen_range(1..=(n - 1) / 2);
            for (c, &m) in order[1..=clusters].iter().enumerate() {
                roles[m] = MachineRole::HierarchicalAggregator { cluster: c };
            }
            for (k, &m) in order[clusters + 1..].iter().enumerate() {
                let cluster = if k < clusters { k } else { rng.gen_range(0..clusters) };
                roles[m] = MachineRole::Trainer { cluster };
            }
        }
        let async_proportion = match aggregator {
            AggregatorKind::Simple => 1.0,
            AggregatorKind::Asynchronous => rng.gen_range(cfg.p_min..=1.0),
        };
        let machines = profiles.into_iter().zip(roles).map(|(profile, role)| Machine { profile, role }).collect();
        let mut ind = Individual { id, topology, aggregator, machines, async_proportion };
        ind.repair();
        ind
    }

    /// Copy of `self` under a new id with mutations applied.
    ///
    /// Every rate is drawn, in a fixed order, whether or not the mutation
    /// ends up applicable, so the stream consumed does not depend on the
    /// individual's shape.
    pub fn mutate(&self, id: u64, cfg: &EvolutionConfig, rng: &mut ChaCha8Rng) -> Self {
        let rates = &cfg.mutation_rates;
        let (lo, hi) = bounds(cfg, self.topology);
        let mut child = self.clone();
        child.id = id;

        if rng.gen_bool(rates.add_machine) && child.machines.len() < hi {
            let profile = rng.gen_range(0..cfg.profiles.len());
            let clusters = child.cluster_count();
            let cluster = if clusters > 0 { rng.gen_range(0..clusters) } else { 0 };
            child.machines.push(Machine { profile, role: MachineRole::Trainer { cluster } });
        }
        if rng.gen_bool(rates.remove_machine) && child.machines.len() > lo {
            let i = rng.gen_range(0..child.machines.len());
            child.machines.remove(i);
            child.repair();
        }
        if rng.gen_bool(rates.change_profile) {
            let i = rng.gen_range(0..child.machines.len());
            child.machines[i].profile = rng.gen_range(0..cfg.profiles.len());
        }
        if rng.gen_bool(rates.swap_roles) {
            let i = rng.gen_range(0..child.machines.len());
            let role = child.machines[i].role;
            let others: Vec<usize> = (0..child.machines.len()).filter(|&j| child.machines[j].role != role).collect();
            if let Some(&j) = others.choose(rng) {
                child.machines[i].role = child.machines[j].role;
                child.machines[j].role = role;
            }
        }
        if rng.gen_bool(rates.perturb_param) && self.aggregator == AggregatorKind::Asynchronous {
            let step = if rng.gen_bool(0.5) { 0.1 } else { -0.1 };
            child.async_proportion = (child.async_proportion + step).clamp(cfg.p_min, 1.0);
        }
        child.repair();
        child
    }

    fn cluster_count(&self) -> usize {
        self.machines.iter().filter(|m| matches!(m.role, MachineRole::HierarchicalAggregator { .. })).count()
    }

    /// Restores the structural invariants of the topology.
    pub fn repair(&mut self) {
        // Exactly one aggregator: keep the first, promote the first trainer
        // if there is none.
        let mut seen = false;
        for m in &mut self.machines {
            if m.role == MachineRole::Aggregator {
                if seen {
                    m.role = MachineRole::Trainer { cluster: 0 };
                }
                seen = true;
            }
        }
        if !seen {
            let i = self
                .machines
                .iter()
                .position(|m| matches!(m.role, MachineRole::Trainer { .. }))
                .unwrap_or(0);
            self.machines[i].role = MachineRole::Aggregator;
        }

        if self.topology != Topology::Hierarchical {
            for m in &mut self.machines {
                if m.role != MachineRole::Aggregator {
                    m.role = MachineRole::Trainer { cluster: 0 };
                }
            }
            return;
        }

        // Renumber clusters in order of appearance of their aggregators.
        let mut renumber = BTreeMap::new();
        for m in &mut self.machines {
            if let MachineRole::HierarchicalAggregator { cluster } = &mut m.role {
                let next = renumber.len();
                *cluster = *renumber.entry(*cluster).or_insert(next);
            }
        }
        if renumber.is_empty() {
            let i = self
                .machines
                .iter()
                .position(|m| matches!(m.role, MachineRole::Trainer { .. }))
                .expect("hierarchical individuals have at least three machines");
            self.machines[i].role = MachineRole::HierarchicalAggregator { cluster: 0 };
        }
        let clusters = self.cluster_count();
        let mut sizes = vec![0usize; clusters];
        let mut orphans = Vec::new();
        for (i, m) in self.machines.iter_mut().enumerate() {
            if let MachineRole::Trainer { cluster } = &mut m.role {
                match renumber.get(cluster) {
                    Some(&c) if c < clusters => {
                        *cluster = c;
                        sizes[c] += 1;
                    }
                    _ => orphans.push(i),
                }
            }
        }
        for i in orphans {
            let c = (0..clusters).min_by_key(|&c| (sizes[c], c)).expect("at least one cluster");
            self.machines[i].role = MachineRole::Trainer { cluster: c };
            sizes[c] += 1;
        }
        // Every hierarchical aggregator needs a trainer: take one from the
        // largest cluster, or dissolve the empty cluster.
        while let Some(empty) = (0..sizes.len()).find(|&c| sizes[c] == 0) {
            let largest = (0..sizes.len()).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).expect("non-empty");
            if sizes[largest] >= 2 {
                let i = self
                    .machines
                    .iter()
                    .rposition(|m| m.role == MachineRole::Trainer { cluster: largest })
                    .expect("cluster has trainers");
                self.machines[i].role = MachineRole::Trainer { cluster: empty };
                sizes[largest] -= 1;
                sizes[empty] += 1;
            } else {
                let i = self
                    .machines
                    .iter()
                    .position(|m| m.role == MachineRole::HierarchicalAggregator { cluster: empty })
                    .expect("cluster has an aggregator");
                self.machines[i].role = MachineRole::Trainer { cluster: largest };
                for m in &mut self.machines {
                    match &mut m.role {
                        MachineRole::HierarchicalAggregator { cluster } | MachineRole::Trainer { cluster } if *cluster > empty => {
                            *cluster -= 1
                        }
                        _ => {}
                    }
                }
                sizes[largest] += 1;
                sizes.remove(empty);
            }
        }
    }

    /// Checks the structural invariants of the topology.
    pub fn check(&self, cfg: &EvolutionConfig) -> Result<(), String> {
        let (lo, hi) = bounds(cfg, self.topology);
        let n = self.machines.len();
        if n < lo || n > hi {
            return Err(format!("{n} machines outside [{lo}, {hi}]"));
        }
        if self.machines.iter().any(|m| m.profile >= cfg.profiles.len()) {
            return Err("unknown profile index".into());
        }
        let aggs = self.machines.iter().filter(|m| m.role == MachineRole::Aggregator).count();
        if aggs != 1 {
            return Err(format!("{aggs} aggregators"));
        }
        if !(self.async_proportion >= cfg.p_min && self.async_proportion <= 1.0) {
            return Err(format!("p = {} outside [{}, 1]", self.async_proportion, cfg.p_min));
        }
        let clusters = self.cluster_count();
        match self.topology {
            Topology::Star | Topology::Ring => {
                if clusters > 0 {
                    return Err("hierarchical aggregator outside a hierarchical topology".into());
                }
            }
            Topology::Hierarchical => {
                if clusters == 0 {
                    return Err("no hierarchical aggregator".into());
                }
                for c in 0..clusters {
                    let has_ha = self.machines.iter().any(|m| m.role == MachineRole::HierarchicalAggregator { cluster: c });
                    let trainers = self.machines.iter().filter(|m| m.role == MachineRole::Trainer { cluster: c }).count();
                    if !has_ha || trainers == 0 {
                        return Err(format!("cluster {c} is incomplete"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total_gflops(&self, cfg: &EvolutionConfig) -> f64 {
        self.platform(cfg).total_gflops()
    }

    /// Physical platform: one access link per machine, routes between every
    /// pair over both access links.
    pub fn platform(&self, cfg: &EvolutionConfig) -> Platform {
        let hosts = self
            .machines
            .iter()
            .enumerate()
            .map(|(i, m)| cfg.profiles[m.profile].instantiate(format!("m{i}")).expect("profiles validated"))
            .collect();
        let links = (0..self.machines.len()).map(|i| cfg.link.profile(format!("link{i}"))).collect();
        let mut routes = BTreeMap::new();
        for a in 0..self.machines.len() {
            for b in 0..self.machines.len() {
                if a != b {
                    routes.insert((HostId(a), HostId(b)), vec![LinkId(a), LinkId(b)]);
                }
            }
        }
        Platform::new(hosts, links, routes).expect("derived platform is valid")
    }

    pub fn scenario(&self, cfg: &EvolutionConfig) -> Scenario {
        let root = self.machines.iter().position(|m| m.role == MachineRole::Aggregator).expect("repaired");
        let ha_of = |c: usize| {
            self.machines
                .iter()
                .position(|m| m.role == MachineRole::HierarchicalAggregator { cluster: c })
                .expect("repaired")
        };
        let nodes = self
            .machines
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (role, parent) = match (m.role, self.topology) {
                    (MachineRole::Aggregator, _) => (RoleKind::Aggregator, None),
                    (MachineRole::HierarchicalAggregator { .. }, _) => (RoleKind::HierarchicalAggregator, Some(root)),
                    (MachineRole::Trainer { cluster }, Topology::Hierarchical) => (RoleKind::Trainer, Some(ha_of(cluster))),
                    (MachineRole::Trainer { .. }, _) => (RoleKind::Trainer, None),
                };
                NodeSpec {
                    name: format!("n{i}"),
                    host: format!("m{i}"),
                    role,
                    parent: parent.map(|p| format!("n{p}")),
                }
            })
            .collect();
        Scenario {
            topology: self.topology,
            aggregator: self.aggregator,
            rounds: cfg.rounds,
            async_proportion: self.async_proportion,
            workload: cfg.workload.clone(),
            nodes,
        }
    }
}
