//! Evolutionary search over deployments.
//!
//! One isolated group per (topology, aggregator) pair. Each generation the
//! group is evaluated, the worst fraction is dropped, and the survivors are
//! cloned round-robin to refill the population. Only clones are mutated, so
//! the best score of a group never gets worse.

mod config;
mod individual;

use std::fmt;
use std::path::Path;

use log::warn;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::platform::PlatformDoc;
use crate::protocol::Topology;
use crate::roles::AggregatorKind;
use crate::scenario::output::{csv_bytes, fmt_float, write_atomic, WriteError};
use crate::scenario::{run_simulation, RunResult, Scenario};
use crate::seed;

pub use config::{ConfigError, Criterion, EvolutionConfig, LinkSpec, MutationRates, ProfileSpec};
pub use individual::{min_nodes, Individual, Machine, MachineRole};

/// An individual together with its evaluation, once known.
#[derive(Clone, Debug)]
pub struct Member {
    pub individual: Individual,
    pub result: Option<RunResult>,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub topology: Topology,
    pub aggregator: AggregatorKind,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.topology, self.aggregator)
    }
}

pub struct Group {
    pub key: GroupKey,
    pub population: Vec<Member>,
    /// Best member after each generation.
    pub best_history: Vec<Member>,
    rng: ChaCha8Rng,
    next_id: u64,
}

impl Group {
    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

/// One group per configured (topology, aggregator) pair, each filled with
/// random valid individuals.
pub fn init_groups(cfg: &EvolutionConfig) -> Result<Vec<Group>, ConfigError> {
    cfg.validate()?;
    let mut groups = Vec::new();
    for &topology in &cfg.topologies {
        for &aggregator in &cfg.aggregators {
            let key = GroupKey { topology, aggregator };
            let mut group = Group {
                key,
                population: Vec::with_capacity(cfg.population_size),
                best_history: Vec::new(),
                rng: seed::stream(cfg.seed, &format!("group/{key}")),
                next_id: 0,
            };
            for _ in 0..cfg.population_size {
                let id = group.fresh_id();
                let individual = Individual::random(id, topology, aggregator, cfg, &mut group.rng);
                group.population.push(Member { individual, result: None, score: f64::NAN });
            }
            groups.push(group);
        }
    }
    Ok(groups)
}

/// Simulates one individual. Failures score +inf.
pub fn evaluate_one(individual: &Individual, cfg: &EvolutionConfig) -> (Option<RunResult>, f64) {
    let platform = individual.platform(cfg);
    let scenario = individual.scenario(cfg);
    let label = format!("eval/{}/{}/{}", individual.topology, individual.aggregator, individual.id);
    match run_simulation(&platform, &scenario, seed::derive(cfg.seed, &label)) {
        Ok(result) => {
            let score = match cfg.criterion {
                Criterion::SimTime => result.sim_time,
                Criterion::EnergyTotal => result.energy_total,
            };
            (Some(result), score)
        }
        Err(e) => {
            warn!("{} individual {}: {e}", GroupKey { topology: individual.topology, aggregator: individual.aggregator }, individual.id);
            (None, f64::INFINITY)
        }
    }
}

/// Scores every member not yet evaluated. Runs in parallel; results are
/// written back by position so the order never depends on scheduling.
pub fn evaluate(group: &mut Group, cfg: &EvolutionConfig) {
    let pending: Vec<usize> = (0..group.population.len()).filter(|&i| group.population[i].result.is_none() && group.population[i].score.is_nan()).collect();
    let scored: Vec<_> = pending.par_iter().map(|&i| evaluate_one(&group.population[i].individual, cfg)).collect();
    for (i, (result, score)) in pending.into_iter().zip(scored) {
        group.population[i].result = result;
        group.population[i].score = score;
    }
}

/// Sorts by (score, id) and drops the `culled` worst members.
pub fn select(population: &mut Vec<Member>, culled: usize) {
    population.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.individual.id.cmp(&b.individual.id)));
    population.truncate(population.len().saturating_sub(culled));
}

fn refill(group: &mut Group, cfg: &EvolutionConfig) {
    let survivors = group.population.len();
    let mut k = 0;
    while group.population.len() < cfg.population_size {
        let id = group.fresh_id();
        let parent = &group.population[k % survivors].individual;
        let individual = parent.mutate(id, cfg, &mut group.rng);
        group.population.push(Member { individual, result: None, score: f64::NAN });
        k += 1;
    }
}

fn step(group: &mut Group, cfg: &EvolutionConfig) {
    evaluate(group, cfg);
    select(&mut group.population, cfg.culled());
    group.best_history.push(group.population[0].clone());
    refill(group, cfg);
}

/// Runs every generation for every group. Groups are independent and run
/// in parallel.
pub fn evolve_loop(groups: &mut [Group], cfg: &EvolutionConfig) {
    groups.par_iter_mut().for_each(|group| {
        for _ in 0..cfg.generations {
            step(group, cfg);
        }
    });
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub generation: usize,
    pub group: String,
    pub best_criterion: f64,
    pub sim_time_s: f64,
    pub energy_total_j: f64,
    pub n_hosts: usize,
    pub total_gflops: f64,
}

pub const EVOLUTION_COLUMNS: [&str; 7] =
    ["generation", "group", "best_criterion", "sim_time_s", "energy_total_j", "n_hosts", "total_gflops"];

/// Per-generation best of every group, generation-major.
pub fn best_per_generation(groups: &[Group], cfg: &EvolutionConfig) -> Vec<HistoryRow> {
    let generations = groups.iter().map(|g| g.best_history.len()).max().unwrap_or(0);
    let mut rows = Vec::new();
    for generation in 0..generations {
        for group in groups {
            let Some(best) = group.best_history.get(generation) else { continue };
            rows.push(HistoryRow {
                generation,
                group: group.key.to_string(),
                best_criterion: best.score,
                sim_time_s: best.result.as_ref().map_or(f64::INFINITY, |r| r.sim_time),
                energy_total_j: best.result.as_ref().map_or(f64::INFINITY, |r| r.energy_total),
                n_hosts: best.individual.machines.len(),
                total_gflops: best.individual.total_gflops(cfg),
            });
        }
    }
    rows
}

pub fn evolution_csv(rows: &[HistoryRow]) -> Vec<u8> {
    csv_bytes(
        &EVOLUTION_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.generation.to_string(),
                r.group.clone(),
                fmt_float(r.best_criterion),
                fmt_float(r.sim_time_s),
                fmt_float(r.energy_total_j),
                r.n_hosts.to_string(),
                fmt_float(r.total_gflops),
            ]
        }),
    )
}

#[derive(Serialize)]
struct FinalBest<'a> {
    group: String,
    criterion: &'static str,
    score: Option<f64>,
    individual: &'a Individual,
    result: Option<&'a RunResult>,
    platform: PlatformDoc,
    scenario: Scenario,
}

/// Winning platform and scenario of each group.
pub fn final_best_json(groups: &[Group], cfg: &EvolutionConfig) -> Vec<u8> {
    let bests: Vec<FinalBest> = groups
        .iter()
        .filter_map(|g| {
            let best = g.best_history.last()?;
            Some(FinalBest {
                group: g.key.to_string(),
                criterion: cfg.criterion.as_str(),
                score: best.score.is_finite().then_some(best.score),
                individual: &best.individual,
                result: best.result.as_ref(),
                platform: best.individual.platform(cfg).to_document(),
                scenario: best.individual.scenario(cfg),
            })
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&bests).expect("serializable");
    out.push(b'\n');
    out
}

/// Result of a full search.
pub struct Evolution {
    pub groups: Vec<Group>,
    pub history: Vec<HistoryRow>,
}

pub fn run_evolution(cfg: &EvolutionConfig) -> Result<Evolution, ConfigError> {
    let mut groups = init_groups(cfg)?;
    evolve_loop(&mut groups, cfg);
    let history = best_per_generation(&groups, cfg);
    Ok(Evolution { groups, history })
}

impl Evolution {
    /// Writes `evolution.csv` and `final_best.json` under `dir`.
    pub fn write(&self, cfg: &EvolutionConfig, dir: &Path) -> Result<(), WriteError> {
        write_atomic(&dir.join("evolution.csv"), &evolution_csv(&self.history))?;
        write_atomic(&dir.join("final_best.json"), &final_best_json(&self.groups, cfg))
    }
}
