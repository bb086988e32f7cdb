mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fedsim::protocol::Topology;
use fedsim::roles::AggregatorKind;
use fedsim::scenario::{simulate, RunOptions};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_complete_with_consistent_metrics(seed in any::<u64>()) {
        let (platform, scenario) = random_config(&mut ChaCha8Rng::seed_from_u64(seed));
        let report = simulate(&platform, &scenario, seed, RunOptions { trace: true }).unwrap();
        let r = &report.result;
        prop_assert_eq!(r.rounds_completed, scenario.rounds);
        prop_assert_eq!(r.energy_total, r.energy_hosts + r.energy_links);
        for h in &r.per_host {
            prop_assert!((h.busy_s + h.idle_s - r.sim_time).abs() <= 1e-9 * r.sim_time.max(1.0));
            prop_assert!(h.busy_s >= 0.0 && h.idle_s >= -1e-12);
        }
        let trace = report.trace.unwrap();
        prop_assert!(trace.windows(2).all(|w| w[0].t <= w[1].t));
        prop_assert_eq!(trace.last().map(|e| e.t), Some(r.sim_time));
        let network = trace.iter().filter(|e| e.event == "comm_end").count() as u64;
        prop_assert_eq!(network, r.messages_sent);
    }

    #[test]
    fn seed_does_not_change_the_outcome(seed in any::<u64>(), other in any::<u64>()) {
        let (platform, scenario) = random_config(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = simulate(&platform, &scenario, seed, RunOptions::default()).unwrap().result;
        let b = simulate(&platform, &scenario, other, RunOptions::default()).unwrap().result;
        prop_assert_eq!(a, b);
    }
}

#[test]
fn zero_rounds_only_bootstrap_and_kill() {
    for topology in [Topology::Star, Topology::Ring] {
        for agg in AggregatorKind::ALL {
            let p = access_mesh(&[1e9; 4], 1e7, 0.001);
            let s = flat_scenario(topology, agg, 3, 0, 0.5, mesh_host);
            let trace = simulate(&p, &s, 0, RunOptions { trace: true }).unwrap().trace.unwrap();
            let kinds: std::collections::BTreeSet<&str> =
                trace.iter().filter(|e| !e.packet.is_empty()).map(|e| e.packet.as_str()).collect();
            let expected: std::collections::BTreeSet<&str> =
                ["RegistrationRequest", "RegistrationConfirmation", "Kill"].into_iter().collect();
            assert_eq!(kinds, expected, "{topology} {agg}");
        }
    }
}
