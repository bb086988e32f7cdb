use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{HostId, HostProfile, LinkId, LinkProfile, Platform, PlatformError, ProfileLabel};

/// On-disk platform description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformDoc {
    pub hosts: Vec<HostDoc>,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub routes: Vec<RouteDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostDoc {
    pub name: String,
    pub speed_flops: f64,
    pub idle_watts: f64,
    pub busy_watts: f64,
    #[serde(default)]
    pub profile: ProfileLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub name: String,
    pub bandwidth_bps_bytes: f64,
    pub latency_s: f64,
    #[serde(default)]
    pub idle_watts: f64,
    #[serde(default)]
    pub joules_per_byte: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub src: String,
    pub dst: String,
    pub links: Vec<String>,
    /// Also declare `dst -> src` over the reversed link sequence.
    #[serde(default)]
    pub symmetric: bool,
}

impl PlatformDoc {
    pub fn into_platform(self) -> Result<Platform, PlatformError> {
        let hosts: Vec<HostProfile> = self
            .hosts
            .into_iter()
            .map(|h| HostProfile {
                name: h.name,
                speed: h.speed_flops,
                idle_watts: h.idle_watts,
                busy_watts: h.busy_watts,
                profile: h.profile,
            })
            .collect();
        let links: Vec<LinkProfile> = self
            .links
            .into_iter()
            .map(|l| LinkProfile {
                name: l.name,
                bandwidth: l.bandwidth_bps_bytes,
                latency: l.latency_s,
                idle_watts: l.idle_watts,
                joules_per_byte: l.joules_per_byte,
            })
            .collect();

        let host_id = |name: &str| {
            hosts
                .iter()
                .position(|h| h.name == name)
                .map(HostId)
                .ok_or_else(|| PlatformError::UnknownHost(name.to_string()))
        };
        let link_id = |name: &str| {
            links
                .iter()
                .position(|l| l.name == name)
                .map(LinkId)
                .ok_or_else(|| PlatformError::UnknownLink(name.to_string()))
        };

        let mut routes = BTreeMap::new();
        for r in &self.routes {
            let src = host_id(&r.src)?;
            let dst = host_id(&r.dst)?;
            let path = r.links.iter().map(|l| link_id(l)).collect::<Result<Vec<_>, _>>()?;
            let mut insert = |s: HostId, d: HostId, p: Vec<LinkId>, sn: &str, dn: &str| {
                if routes.insert((s, d), p).is_some() {
                    return Err(PlatformError::DuplicateRoute { src: sn.to_string(), dst: dn.to_string() });
                }
                Ok(())
            };
            if r.symmetric {
                let mut rev = path.clone();
                rev.reverse();
                insert(dst, src, rev, &r.dst, &r.src)?;
            }
            insert(src, dst, path, &r.src, &r.dst)?;
        }
        Platform::new(hosts, links, routes)
    }

    /// Serializes a platform with one non-symmetric entry per directed route.
    pub fn from_platform(p: &Platform) -> Self {
        PlatformDoc {
            hosts: p
                .hosts()
                .iter()
                .map(|h| HostDoc {
                    name: h.name.clone(),
                    speed_flops: h.speed,
                    idle_watts: h.idle_watts,
                    busy_watts: h.busy_watts,
                    profile: h.profile,
                })
                .collect(),
            links: p
                .links()
                .iter()
                .map(|l| LinkDoc {
                    name: l.name.clone(),
                    bandwidth_bps_bytes: l.bandwidth,
                    latency_s: l.latency,
                    idle_watts: l.idle_watts,
                    joules_per_byte: l.joules_per_byte,
                })
                .collect(),
            routes: p
                .routes()
                .map(|(s, d, path)| RouteDoc {
                    src: p.host(s).name.clone(),
                    dst: p.host(d).name.clone(),
                    links: path.iter().map(|l| p.link(*l).name.clone()).collect(),
                    symmetric: false,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAR3: &str = r#"{
        "hosts": [
            {"name": "agg", "speed_flops": 1e9, "idle_watts": 10, "busy_watts": 100, "profile": "workstation"},
            {"name": "t1", "speed_flops": 1e9, "idle_watts": 5, "busy_watts": 50, "profile": "laptop"},
            {"name": "t2", "speed_flops": 1e9, "idle_watts": 2, "busy_watts": 6, "profile": "raspberrypi4"}
        ],
        "links": [
            {"name": "l1", "bandwidth_bps_bytes": 1e6, "latency_s": 0.01, "idle_watts": 1, "joules_per_byte": 1e-6},
            {"name": "l2", "bandwidth_bps_bytes": 1e6, "latency_s": 0.01}
        ],
        "routes": [
            {"src": "t1", "dst": "agg", "links": ["l1"], "symmetric": true},
            {"src": "t2", "dst": "agg", "links": ["l2"], "symmetric": true}
        ]
    }"#;

    #[test]
    fn minimal_single_host() {
        let p = Platform::from_json(
            r#"{"hosts": [{"name": "solo", "speed_flops": 1e9, "idle_watts": 1, "busy_watts": 2}]}"#,
        )
        .unwrap();
        assert_eq!(p.hosts().len(), 1);
        assert!(p.links().is_empty());
        assert_eq!(p.hosts()[0].profile, ProfileLabel::Custom);
    }

    #[test]
    fn star_fixture_counts() {
        let p = Platform::from_json(STAR3).unwrap();
        assert_eq!(p.hosts().len(), 3);
        assert_eq!(p.links().len(), 2);
        assert_eq!(p.routes().count(), 4);
        let t1 = p.host_id("t1").unwrap();
        let agg = p.host_id("agg").unwrap();
        assert_eq!(p.route(agg, t1), Some(&[LinkId(0)][..]));
        assert_eq!(p.host(t1).profile, ProfileLabel::Laptop);
    }

    #[test]
    fn unknown_link_is_named() {
        let err = Platform::from_json(
            r#"{"hosts": [{"name": "a", "speed_flops": 1, "idle_watts": 0, "busy_watts": 0},
                          {"name": "b", "speed_flops": 1, "idle_watts": 0, "busy_watts": 0}],
                "links": [],
                "routes": [{"src": "a", "dst": "b", "links": ["l9"]}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "unknown link l9");
    }

    #[test]
    fn duplicate_route_rejected() {
        let err = Platform::from_json(
            r#"{"hosts": [{"name": "a", "speed_flops": 1, "idle_watts": 0, "busy_watts": 0},
                          {"name": "b", "speed_flops": 1, "idle_watts": 0, "busy_watts": 0}],
                "links": [{"name": "l", "bandwidth_bps_bytes": 1, "latency_s": 0}],
                "routes": [{"src": "a", "dst": "b", "links": ["l"], "symmetric": true},
                           {"src": "b", "dst": "a", "links": ["l"]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, PlatformError::DuplicateRoute { .. }));
    }

    #[test]
    fn document_round_trip() {
        let p = Platform::from_json(STAR3).unwrap();
        let again = p.to_document().into_platform().unwrap();
        assert_eq!(p, again);
    }
}
