//! Flow-level transfer model.
//!
//! A transfer first waits for the sum of the latencies along its route, then
//! drains its bytes. While draining, a flow gets `min over its links of
//! (bandwidth / draining flows on that link)`. Rates are recomputed whenever
//! the set of draining flows changes; bytes already drained are kept.

use std::collections::BTreeMap;

use super::{LinkId, LinkProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u64);

#[derive(Debug)]
struct Flow<T> {
    route: Vec<LinkId>,
    remaining: f64,
    rate: f64,
    drain_at: f64,
    draining: bool,
    payload: T,
}

/// Active transfers sharing a set of links.
#[derive(Debug)]
pub struct FlowNetwork<T> {
    bandwidth: Vec<f64>,
    latency: Vec<f64>,
    load: Vec<u32>,
    flows: BTreeMap<FlowId, Flow<T>>,
    clock: f64,
    next_id: u64,
}

/// Slack used when deciding whether events predicted for nearly the same
/// instant coincide.
fn slack(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

impl<T> FlowNetwork<T> {
    pub fn new(links: &[LinkProfile]) -> Self {
        FlowNetwork {
            bandwidth: links.iter().map(|l| l.bandwidth).collect(),
            latency: links.iter().map(|l| l.latency).collect(),
            load: vec![0; links.len()],
            flows: BTreeMap::new(),
            clock: 0.0,
            next_id: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    /// Registers a transfer of `bytes` over `route` starting at `now`.
    pub fn start_flow(&mut self, now: f64, route: &[LinkId], bytes: u64, payload: T) -> FlowId {
        self.sync(now);
        let latency: f64 = route.iter().map(|l| self.latency[l.0]).sum();
        let id = FlowId(self.next_id);
        self.next_id += 1;
        self.flows.insert(
            id,
            Flow {
                route: route.to_vec(),
                remaining: bytes as f64,
                rate: 0.0,
                drain_at: now + latency,
                draining: false,
                payload,
            },
        );
        id
    }

    /// Time of the next latency expiry or completion, if any flow is active.
    pub fn next_event(&self) -> Option<f64> {
        self.flows
            .values()
            .map(|f| {
                if f.draining {
                    self.clock + f.remaining / f.rate
                } else {
                    f.drain_at
                }
            })
            .min_by(f64::total_cmp)
    }

    /// Current drain rate of a flow (0 while it is still in its latency phase).
    pub fn rate(&self, id: FlowId) -> Option<f64> {
        self.flows.get(&id).map(|f| f.rate)
    }

    pub fn remaining(&self, id: FlowId) -> Option<f64> {
        self.flows.get(&id).map(|f| f.remaining)
    }

    /// Moves the network to `now` and returns the flows that completed, in
    /// creation order.
    ///
    /// `now` must not be later than [`next_event`](Self::next_event).
    pub fn advance(&mut self, now: f64) -> Vec<(FlowId, T)> {
        let dt = now - self.clock;
        let tol = slack(now);
        let mut done = Vec::new();
        for (&id, f) in self.flows.iter_mut().filter(|(_, f)| f.draining) {
            let finish = self.clock + f.remaining / f.rate;
            if finish <= now + tol {
                f.remaining = 0.0;
                done.push(id);
            } else {
                f.remaining = (f.remaining - f.rate * dt).max(0.0);
            }
        }
        self.clock = self.clock.max(now);

        let mut changed = !done.is_empty();
        for (&id, f) in self.flows.iter_mut().filter(|(_, f)| !f.draining) {
            if f.drain_at <= now + tol {
                f.draining = true;
                for l in &f.route {
                    self.load[l.0] += 1;
                }
                changed = true;
                if f.remaining <= 0.0 {
                    done.push(id);
                }
            }
        }

        done.sort_unstable();
        let mut completed = Vec::with_capacity(done.len());
        for id in done {
            let f = self.flows.remove(&id).expect("completed flow is active");
            for l in &f.route {
                self.load[l.0] -= 1;
            }
            completed.push((id, f.payload));
        }
        if changed {
            self.recompute_rates();
        }
        completed
    }

    fn sync(&mut self, now: f64) {
        let dt = now - self.clock;
        if dt > 0.0 {
            for f in self.flows.values_mut().filter(|f| f.draining) {
                f.remaining = (f.remaining - f.rate * dt).max(0.0);
            }
            self.clock = now;
        }
    }

    fn recompute_rates(&mut self) {
        let (bandwidth, load) = (&self.bandwidth, &self.load);
        for f in self.flows.values_mut() {
            f.rate = if f.draining {
                f.route
                    .iter()
                    .map(|l| bandwidth[l.0] / f64::from(load[l.0]))
                    .fold(f64::INFINITY, f64::min)
            } else {
                0.0
            };
        }
    }
}

/// Completion times of flows that all start at t = 0.
pub fn transfer_schedule(links: &[LinkProfile], flows: &[(u64, Vec<LinkId>)]) -> Vec<f64> {
    let mut net = FlowNetwork::new(links);
    for (i, (bytes, route)) in flows.iter().enumerate() {
        net.start_flow(0.0, route, *bytes, i);
    }
    let mut finish = vec![f64::NAN; flows.len()];
    while let Some(t) = net.next_event() {
        for (_, i) in net.advance(t) {
            finish[i] = t;
        }
    }
    finish
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn link(bw: f64, lat: f64) -> LinkProfile {
        LinkProfile::new("l", bw, lat)
    }

    #[test]
    fn single_flow() {
        let t = transfer_schedule(&[link(1e6, 0.0)], &[(1_000_000, vec![LinkId(0)])]);
        assert_eq!(t, vec![1.0]);
    }

    #[test]
    fn equal_share() {
        let r = vec![LinkId(0)];
        let t = transfer_schedule(&[link(1e6, 0.0)], &[(1_000_000, r.clone()), (1_000_000, r)]);
        assert_eq!(t, vec![2.0, 2.0]);
    }

    #[test]
    fn piecewise_reshare() {
        let r = vec![LinkId(0)];
        let t = transfer_schedule(&[link(1e6, 0.0)], &[(500_000, r.clone()), (1_000_000, r)]);
        assert!((t[0] - 1.0).abs() < 1e-12);
        assert!((t[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn latency_paid_once_then_drain() {
        let t = transfer_schedule(&[link(1e6, 0.1)], &[(1_000_000, vec![LinkId(0)])]);
        assert!((t[0] - 1.1).abs() < 1e-12);
        let t = transfer_schedule(&[link(1e6, 0.1)], &[(0, vec![LinkId(0)])]);
        assert!((t[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bottleneck_is_the_most_loaded_link() {
        // Flow a crosses l0 and l1, flows b and c only l1: a gets 1e6/3 on l1.
        let links = [link(1e6, 0.0), link(1e6, 0.0)];
        let t = transfer_schedule(
            &links,
            &[(1_000_000, vec![LinkId(0), LinkId(1)]), (1_000_000, vec![LinkId(1)]), (1_000_000, vec![LinkId(1)])],
        );
        assert!(t.iter().all(|&x| (x - 3.0).abs() < 1e-9), "{t:?}");
    }

    proptest! {
        /// Integrating each flow's rate over its lifetime gives its size, and
        /// no link is ever oversubscribed.
        #[test]
        fn work_conservation_and_fair_share(
            flows in prop::collection::vec((1u64..2_000_000, 0usize..3, 0usize..3, 0u32..3), 1..12),
        ) {
            let links = [link(1e6, 0.01), link(5e5, 0.0), link(2e6, 0.02)];
            let mut net = FlowNetwork::new(&links);
            let mut starts = Vec::new();
            let mut t = 0.0;
            for &(bytes, a, b, delay) in &flows {
                let mut route = vec![LinkId(a)];
                if b != a { route.push(LinkId(b)); }
                t += f64::from(delay) * 0.05;
                starts.push((t, bytes, route));
            }
            let mut ids: Vec<FlowId> = Vec::new();
            let mut drained = vec![0.0_f64; flows.len()];
            let mut done = vec![false; flows.len()];
            let mut clock = 0.0;
            let mut next_start = 0;
            loop {
                let start_at = starts.get(next_start).map(|s| s.0);
                let event_at = net.next_event();
                let (now, is_start) = match (start_at, event_at) {
                    (None, None) => break,
                    (Some(s), None) => (s, true),
                    (None, Some(e)) => (e, false),
                    (Some(s), Some(e)) => if s < e { (s, true) } else { (e, false) },
                };
                let dt = now - clock;
                let mut per_link = [0.0_f64; 3];
                for (i, id) in ids.iter().enumerate() {
                    if let Some(rate) = net.rate(*id) {
                        drained[i] += rate * dt;
                        for l in &starts[i].2 { per_link[l.0] += rate; }
                    }
                }
                for (l, sum) in per_link.iter().enumerate() {
                    prop_assert!(*sum <= links[l].bandwidth * (1.0 + 1e-12));
                }
                clock = now;
                if is_start {
                    let (_, bytes, route) = &starts[next_start];
                    ids.push(net.start_flow(now, route, *bytes, next_start));
                    next_start += 1;
                } else {
                    for (_, i) in net.advance(now) { done[i] = true; }
                }
            }
            prop_assert!(done.iter().all(|d| *d));
            for (i, (_, bytes, _)) in starts.iter().enumerate() {
                let b = *bytes as f64;
                prop_assert!((drained[i] - b).abs() <= 1e-6 * b.max(1.0), "flow {} drained {} of {}", i, drained[i], b);
            }
        }
    }
}
