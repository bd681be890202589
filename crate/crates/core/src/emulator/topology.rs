use std::collections::VecDeque;
use std::net::Ipv4Addr;

use crate::config::{Direction, Duration, FlowGroup, RunParams};

use super::discipline::LinkDiscipline;
use super::packet::SimPacket;

const ADDRESS_BASE: u32 = u32::from_be_bytes([10, 0, 0, 0]);
/// Queue limit of a host's own network stack; large enough never to drop.
const STACK_QUEUE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Host(usize),
    LeftRouter,
    RightRouter,
}

/// Where a packet goes once an interface has sent it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Next {
    /// Straight into another interface of the same node (host stack to link).
    Interface(usize),
    /// Across a link to a node.
    Node(Node),
}

#[derive(Debug, Clone)]
pub struct Interface {
    pub name: String,
    pub discipline: LinkDiscipline,
    pub next: Next,
    /// Host whose capture tap sees packets leaving this interface.
    pub tap: Option<usize>,
    pub(crate) packets: VecDeque<SimPacket>,
    pub(crate) flushed: u64,
}

#[derive(Debug, Clone)]
pub struct Host {
    pub name: String,
    pub side: Side,
    pub addr: Ipv4Addr,
    pub router_addr: Ipv4Addr,
    /// Flow served by this host (zero-based).
    pub flow: usize,
    pub stack: usize,
    pub uplink: usize,
    pub downlink: usize,
}

/// One flow after expanding the layout groups, in flow-number order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub index: usize,
    pub scheme: String,
    pub direction: Direction,
    pub start: u32,
    pub group: usize,
}

impl FlowSpec {
    /// One-based number used in file names.
    pub fn number(&self) -> usize {
        self.index + 1
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub n: usize,
    /// Left hosts `0..n`, right hosts `n..2n`; host `i` and `n + i` carry flow `i`.
    pub hosts: Vec<Host>,
    pub interfaces: Vec<Interface>,
    /// Left router end of the central link (rightward traffic).
    pub central_left: usize,
    /// Right router end of the central link (leftward traffic).
    pub central_right: usize,
    pub flows: Vec<FlowSpec>,
}

/// Address of `offset` (1 = host, 2 = router) in /30 subnet number `subnet`.
/// Left links take subnets `0..n`, right links `n..2n` and the central link `2n`.
pub fn subnet_address(subnet: usize, offset: u32) -> Ipv4Addr {
    Ipv4Addr::from(ADDRESS_BASE + 4 * subnet as u32 + offset)
}

/// Expands groups into flows ordered by start second, stable for ties.
pub fn expand_flows(groups: &[FlowGroup]) -> Vec<FlowSpec> {
    let mut indexed: Vec<(usize, FlowGroup)> = groups.iter().cloned().enumerate().collect();
    // Same stable order as `sort_groups`.
    indexed.sort_by_key(|(_, g)| g.start);
    let mut flows = Vec::new();
    for (group, g) in indexed {
        for _ in 0..g.flows {
            flows.push(FlowSpec {
                index: flows.len(),
                scheme: g.scheme.clone(),
                direction: g.direction,
                start: g.start,
                group,
            });
        }
    }
    flows
}

fn interface(name: String, discipline: LinkDiscipline, next: Next, tap: Option<usize>) -> Interface {
    Interface {
        name,
        discipline,
        next,
        tap,
        packets: VecDeque::new(),
        flushed: 0,
    }
}

/// Builds the dumbbell: `2n` hosts on their own links plus the central link.
/// Both ends of a link get the same discipline parameters.
pub fn build_topology(groups: &[FlowGroup], params: &RunParams) -> Topology {
    let flows = expand_flows(groups);
    let n = flows.len();
    let host_rate = params.model.host_rate;
    let mut interfaces = Vec::new();
    let mut hosts = Vec::new();

    for (side, offset) in [(Side::Left, 0), (Side::Right, n)] {
        for f in &flows {
            let g = &groups[f.group];
            let id = offset + f.index;
            let (rate, delay, queue) = match side {
                Side::Left => (g.left_rate, g.left_delay, g.left_queues),
                Side::Right => (g.right_rate, g.right_delay, g.right_queues),
            };
            let prefix = if side == Side::Left { 'l' } else { 'r' };
            let name = format!("{prefix}{}", f.number());
            let stack = interfaces.len();
            let uplink = stack + 1;
            let downlink = stack + 2;
            let router = if side == Side::Left { Node::LeftRouter } else { Node::RightRouter };
            interfaces.push(interface(
                format!("{name}-stack"),
                LinkDiscipline::new(host_rate, Duration::ZERO, Duration::ZERO, STACK_QUEUE),
                Next::Interface(uplink),
                Some(id),
            ));
            interfaces.push(interface(
                format!("{name}-eth0"),
                LinkDiscipline::new(rate, delay, Duration::ZERO, queue),
                Next::Node(router),
                None,
            ));
            interfaces.push(interface(
                format!("{}-{name}", if side == Side::Left { "left" } else { "right" }),
                LinkDiscipline::new(rate, delay, Duration::ZERO, queue),
                Next::Node(Node::Host(id)),
                None,
            ));
            hosts.push(Host {
                name,
                side,
                addr: subnet_address(id, 1),
                router_addr: subnet_address(id, 2),
                flow: f.index,
                stack,
                uplink,
                downlink,
            });
        }
    }

    let central_left = interfaces.len();
    interfaces.push(interface(
        "left-central".into(),
        LinkDiscipline::new(params.central_rate, params.base, params.jitter, params.q1),
        Next::Node(Node::RightRouter),
        None,
    ));
    let central_right = interfaces.len();
    interfaces.push(interface(
        "right-central".into(),
        LinkDiscipline::new(params.central_rate, params.base, params.jitter, params.q2),
        Next::Node(Node::LeftRouter),
        None,
    ));

    Topology {
        n,
        hosts,
        interfaces,
        central_left,
        central_right,
        flows,
    }
}

impl Topology {
    /// Host owning `addr`, if any.
    pub fn host_by_addr(&self, addr: Ipv4Addr) -> Option<usize> {
        let offset = u32::from(addr).checked_sub(ADDRESS_BASE)?;
        let (subnet, host) = ((offset / 4) as usize, offset % 4);
        (host == 1 && subnet < 2 * self.n).then_some(subnet)
    }

    /// Interface a router uses to forward towards `dst`.
    pub fn route(&self, router: Side, dst: Ipv4Addr) -> Option<usize> {
        let host = self.host_by_addr(dst)?;
        let h = &self.hosts[host];
        Some(match (router, h.side) {
            (Side::Left, Side::Left) | (Side::Right, Side::Right) => h.downlink,
            (Side::Left, Side::Right) => self.central_left,
            (Side::Right, Side::Left) => self.central_right,
        })
    }

    /// (sender host, receiver host) of flow `i`.
    pub fn endpoints(&self, flow: usize) -> (usize, usize) {
        let (left, right) = (flow, self.n + flow);
        match self.flows[flow].direction {
            Direction::Rightward => (left, right),
            Direction::Leftward => (right, left),
        }
    }

    pub fn central(&self, side: Side) -> usize {
        match side {
            Side::Left => self.central_left,
            Side::Right => self.central_right,
        }
    }

    /// Number of links: one per host plus the central link.
    pub fn link_count(&self) -> usize {
        2 * self.n + 1
    }
}

/// Installs a new central-link delay at one router's end. Packets already
/// queued keep the send time they were given.
pub fn install_central_delay(topology: &mut Topology, new_delay: Duration, side: Side) {
    let id = topology.central(side);
    topology.interfaces[id].discipline.delay = new_delay;
}
