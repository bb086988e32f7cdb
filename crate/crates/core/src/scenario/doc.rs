use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::{HostId, Platform};
use crate::protocol::{NodeId, Topology};
use crate::roles::{AggregatorKind, RoleKind, Workload};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario node {node} is placed on unknown host {host}")]
    UnknownHost { node: String, host: String },
    #[error("missing route {src} -> {dst}")]
    MissingRoute { src: String, dst: String },
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

fn one() -> f64 {
    1.0
}

/// A federated learning deployment: algorithm, workload and node placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: Topology,
    pub aggregator: AggregatorKind,
    pub rounds: u32,
    #[serde(default = "one")]
    pub async_proportion: f64,
    pub workload: Workload,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    pub host: String,
    pub role: RoleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

impl NodeSpec {
    pub fn new(name: impl Into<String>, host: impl Into<String>, role: RoleKind, parent: Option<&str>) -> Self {
        NodeSpec { name: name.into(), host: host.into(), role, parent: parent.map(str::to_string) }
    }
}

/// A node resolved against the platform.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedNode {
    pub name: String,
    pub host: HostId,
    pub role: RoleKind,
    /// Registration contact: the aggregator (star, ring) or the tree parent.
    pub parent: Option<NodeId>,
    /// Nodes registering with this one.
    pub children: Vec<NodeId>,
    /// Nearest aggregator or hierarchical aggregator above this node.
    pub aggregator: Option<NodeId>,
    /// Trainers and hierarchical aggregators reporting to this node.
    pub contributors: Vec<NodeId>,
    /// Every node below this one in the tree, with the child leading to it.
    pub descendants: BTreeMap<NodeId, NodeId>,
}

/// A scenario checked against a platform, ready to be instantiated.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub topology: Topology,
    pub root: NodeId,
    pub nodes: Vec<PlannedNode>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Structural checks that do not need a platform.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.workload.validate().map_err(invalid)?;
        let p = self.async_proportion;
        if !(p.is_finite() && p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("async_proportion must lie in (0, 1], got {p}")));
        }
        if self.nodes.is_empty() {
            return Err(invalid("no nodes declared"));
        }
        let mut names = BTreeSet::new();
        let mut hosts = BTreeSet::new();
        for n in &self.nodes {
            if !names.insert(n.name.as_str()) {
                return Err(invalid(format!("duplicate node name {}", n.name)));
            }
            if !hosts.insert(n.host.as_str()) {
                return Err(invalid(format!("host {} carries more than one node", n.host)));
            }
        }
        let aggregators = self.nodes.iter().filter(|n| n.role == RoleKind::Aggregator).count();
        if aggregators != 1 {
            return Err(invalid(format!("expected exactly one aggregator, found {aggregators}")));
        }
        self.structure().map(|_| ())
    }

    fn index(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    /// Resolves parents, contributors and routing tables.
    fn structure(&self) -> Result<(NodeId, Vec<PlannedNode>), ScenarioError> {
        let n = self.nodes.len();
        let root = NodeId(self.nodes.iter().position(|x| x.role == RoleKind::Aggregator).expect("validated"));
        let mut parent = vec![None; n];
        match self.topology {
            Topology::Star | Topology::Ring => {
                for (i, node) in self.nodes.iter().enumerate() {
                    if i == root.0 {
                        if node.parent.is_some() {
                            return Err(invalid(format!("aggregator {} cannot have a parent", node.name)));
                        }
                        continue;
                    }
                    if node.role != RoleKind::Trainer {
                        return Err(invalid(format!(
                            "{} topology only supports trainers besides the aggregator ({} is {})",
                            self.topology,
                            node.name,
                            node.role.as_str()
                        )));
                    }
                    if let Some(p) = &node.parent {
                        if self.index(p) != Some(root) {
                            return Err(invalid(format!("{}: parent must be the aggregator in a {} topology", node.name, self.topology)));
                        }
                    }
                    parent[i] = Some(root);
                }
            }
            Topology::Hierarchical => {
                for (i, node) in self.nodes.iter().enumerate() {
                    match (&node.parent, i == root.0) {
                        (Some(_), true) => return Err(invalid(format!("aggregator {} cannot have a parent", node.name))),
                        (None, false) => return Err(invalid(format!("{} needs a parent", node.name))),
                        (None, true) => {}
                        (Some(p), false) => {
                            let pid = self.index(p).ok_or_else(|| invalid(format!("{}: unknown parent {p}", node.name)))?;
                            parent[i] = Some(pid);
                        }
                    }
                }
                for (i, node) in self.nodes.iter().enumerate() {
                    let mut cur = i;
                    for _ in 0..=n {
                        match parent[cur] {
                            Some(p) => cur = p.0,
                            None => break,
                        }
                    }
                    if cur != root.0 {
                        return Err(invalid(format!("{} is on a parent cycle", node.name)));
                    }
                }
            }
        }

        let mut nodes: Vec<PlannedNode> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, spec)| PlannedNode {
                name: spec.name.clone(),
                host: HostId(usize::MAX),
                role: spec.role,
                parent: parent[i],
                children: Vec::new(),
                aggregator: None,
                contributors: Vec::new(),
                descendants: BTreeMap::new(),
            })
            .collect();
        for i in 0..n {
            if let Some(p) = parent[i] {
                nodes[p.0].children.push(NodeId(i));
            }
            let mut below = NodeId(i);
            let mut cur = parent[i];
            while let Some(p) = cur {
                nodes[p.0].descendants.insert(NodeId(i), below);
                if nodes[i].aggregator.is_none()
                    && matches!(nodes[p.0].role, RoleKind::Aggregator | RoleKind::HierarchicalAggregator)
                {
                    nodes[i].aggregator = Some(p);
                }
                below = p;
                cur = parent[p.0];
            }
        }
        for i in 0..n {
            if matches!(nodes[i].role, RoleKind::Trainer | RoleKind::HierarchicalAggregator) {
                let agg = nodes[i].aggregator.expect("every non-root node has the root above it");
                nodes[agg.0].contributors.push(NodeId(i));
            }
        }
        for node in &nodes {
            let empty = match node.role {
                RoleKind::Aggregator | RoleKind::HierarchicalAggregator => node.contributors.is_empty(),
                RoleKind::Proxy => node.children.is_empty(),
                RoleKind::Trainer => false,
            };
            if empty {
                return Err(invalid(format!("{} {} has no children to serve", node.role.as_str(), node.name)));
            }
            if node.role == RoleKind::Trainer && !node.children.is_empty() {
                return Err(invalid(format!("trainer {} cannot have children", node.name)));
            }
        }
        Ok((root, nodes))
    }

    /// Ring order: declaration order, wrapping around.
    pub fn ring_successor(&self, node: NodeId) -> NodeId {
        NodeId((node.0 + 1) % self.nodes.len())
    }

    /// Validates against `platform` and resolves hosts and routes.
    pub fn plan(&self, platform: &Platform) -> Result<Plan, ScenarioError> {
        self.validate()?;
        let (root, mut nodes) = self.structure()?;
        for (spec, node) in self.nodes.iter().zip(&mut nodes) {
            node.host = platform
                .host_id(&spec.host)
                .ok_or_else(|| ScenarioError::UnknownHost { node: spec.name.clone(), host: spec.host.clone() })?;
        }
        if let Some(h) = platform.hosts().iter().find(|h| !self.nodes.iter().any(|n| n.host == h.name)) {
            return Err(invalid(format!("platform host {} carries no node", h.name)));
        }

        let mut needed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                needed.insert((i, p.0));
                needed.insert((p.0, i));
            }
            if self.topology == Topology::Ring && nodes.len() > 1 {
                needed.insert((i, self.ring_successor(NodeId(i)).0));
            }
        }
        for (a, b) in needed {
            if platform.route(nodes[a].host, nodes[b].host).is_none() {
                return Err(ScenarioError::MissingRoute { src: self.nodes[a].host.clone(), dst: self.nodes[b].host.clone() });
            }
        }
        Ok(Plan { topology: self.topology, root, nodes })
    }
}
