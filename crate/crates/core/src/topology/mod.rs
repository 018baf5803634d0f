//! Dumbbell network and the TCP endpoints that drive it.
//!
//! Node numbering for `n` flows: sources `0..n`, R1 = `n`, R2 = `n + 1`,
//! sinks `n + 2 .. 2n + 2`. With five flows that is S1..S5 = 0..4, R1 = 5,
//! R2 = 6, D1..D5 = 7..11. Every agent listens on port 0.

mod tcp;

use std::collections::VecDeque;
use std::fmt;

pub use tcp::{AckOutcome, TcpConfig, TcpSink, TcpSource, TcpSourceState};

use crate::aqm::DisciplineKind;
use crate::config::ScenarioConfig;
use crate::error::ConfigError;
use crate::packet::NodeId;
use crate::sim::SimTime;

pub type LinkId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Source(u32),
    Router1,
    Router2,
    Sink(u32),
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRole::Source(i) => write!(f, "S{}", i + 1),
            NodeRole::Router1 => f.write_str("R1"),
            NodeRole::Router2 => f.write_str("R2"),
            NodeRole::Sink(i) => write!(f, "D{}", i + 1),
        }
    }
}

/// One direction of a duplex link; each direction owns its own queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub rate_bps: f64,
    pub prop_delay: SimTime,
    pub discipline: DisciplineKind,
    pub buffer_bytes: u64,
}

impl Link {
    /// Serialization time of `bytes` on this link, rounded to the nanosecond.
    pub fn transmission_time(&self, bytes: u32) -> SimTime {
        let ns = (bytes as f64 * 8.0 * 1e9 / self.rate_bps).round();
        SimTime::from_nanos(ns as u64)
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    roles: Vec<NodeRole>,
    links: Vec<Link>,
    /// `routes[node][dst]` is the outgoing link toward `dst`.
    routes: Vec<Vec<Option<LinkId>>>,
    flows: u32,
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, node: NodeId) -> NodeRole {
        self.roles[node as usize]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn duplex_link_count(&self) -> usize {
        self.links.len() / 2
    }

    pub fn flow_count(&self) -> u32 {
        self.flows
    }

    pub fn source(&self, flow: u32) -> NodeId {
        flow
    }

    pub fn sink(&self, flow: u32) -> NodeId {
        self.flows + 2 + flow
    }

    pub fn router1(&self) -> NodeId {
        self.flows
    }

    pub fn router2(&self) -> NodeId {
        self.flows + 1
    }

    pub fn sinks(&self) -> Vec<NodeId> {
        (0..self.flows).map(|f| self.sink(f)).collect()
    }

    pub fn find_link(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.links.iter().position(|l| l.from == from && l.to == to)
    }

    /// Forward bottleneck direction R1 -> R2.
    pub fn bottleneck(&self) -> LinkId {
        self.find_link(self.router1(), self.router2()).expect("dumbbell has R1->R2")
    }

    /// Reverse bottleneck direction R2 -> R1, carrying ACKs.
    pub fn reverse_bottleneck(&self) -> LinkId {
        self.find_link(self.router2(), self.router1()).expect("dumbbell has R2->R1")
    }

    pub fn next_hop(&self, node: NodeId, dst: NodeId) -> Option<LinkId> {
        self.routes[node as usize][dst as usize]
    }

    /// Sum of propagation delays along the route.
    pub fn path_delay(&self, src: NodeId, dst: NodeId) -> SimTime {
        let mut t = SimTime::ZERO;
        let mut node = src;
        while node != dst {
            let l = self.next_hop(node, dst).expect("connected");
            t = t + self.links[l].prop_delay;
            node = self.links[l].to;
        }
        t
    }

    fn compute_routes(n: usize, links: &[Link]) -> Vec<Vec<Option<LinkId>>> {
        // BFS toward each destination over reversed links.
        let mut routes = vec![vec![None; n]; n];
        for dst in 0..n {
            let mut seen = vec![false; n];
            seen[dst] = true;
            let mut frontier = VecDeque::from([dst]);
            while let Some(v) = frontier.pop_front() {
                for (id, l) in links.iter().enumerate() {
                    let u = l.from as usize;
                    if l.to as usize == v && !seen[u] {
                        seen[u] = true;
                        routes[u][dst] = Some(id);
                        frontier.push_back(u);
                    }
                }
            }
        }
        routes
    }
}

/// Builds the dumbbell: `count` sources on R1, `count` sinks on R2, and the
/// R1-R2 bottleneck running the configured discipline in both directions.
pub fn build_dumbbell(cfg: &ScenarioConfig) -> Result<Network, ConfigError> {
    cfg.validate()?;
    let n = cfg.flows.count;
    let r1 = n;
    let r2 = n + 1;
    let mut roles: Vec<NodeRole> = (0..n).map(NodeRole::Source).collect();
    roles.push(NodeRole::Router1);
    roles.push(NodeRole::Router2);
    roles.extend((0..n).map(NodeRole::Sink));

    let access = |from, to| Link {
        from,
        to,
        rate_bps: cfg.access.rate_mbps * 1e6,
        prop_delay: SimTime::from_secs_f64(cfg.access.delay_ms / 1e3).expect("validated"),
        discipline: DisciplineKind::DropTail,
        buffer_bytes: cfg.access.buffer_bytes,
    };
    let core = |from, to| Link {
        from,
        to,
        rate_bps: cfg.bottleneck_rate_bps(),
        prop_delay: SimTime::from_secs_f64(cfg.bottleneck.delay_ms / 1e3).expect("validated"),
        discipline: cfg.bottleneck.aqm,
        buffer_bytes: cfg.scenario.buffer_bytes,
    };

    let mut links = Vec::new();
    for i in 0..n {
        links.push(access(i, r1));
        links.push(access(r1, i));
    }
    links.push(core(r1, r2));
    links.push(core(r2, r1));
    for i in 0..n {
        let d = n + 2 + i;
        links.push(access(r2, d));
        links.push(access(d, r2));
    }
    let routes = Network::compute_routes(roles.len(), &links);
    Ok(Network {
        roles,
        links,
        routes,
        flows: n,
    })
}
