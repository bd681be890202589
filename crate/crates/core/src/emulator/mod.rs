//! Discrete-event simulation of the dumbbell topology.
//!
//! Every interface owns a [`LinkDiscipline`]. Hosts push packets through
//! their own stack interface (where the capture tap sits) and then through
//! their uplink; routers forward between side links and the central link.
//! Time is kept in integer nanoseconds.

pub mod discipline;
pub mod packet;
pub mod schedule;
pub mod tcp;
pub mod topology;
pub mod udp;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use crate::capture::{CaptureSink, PcapSink, Role, Tap};
use crate::config::{self, Direction, Duration, FlowGroup, RunParams};
use crate::error::{Error, Result};
use crate::rng::{SplitMix64, Stream};
use crate::schemes::{self, SchemeState, SchemeTrace, TraceSample, Transport, DELAYED_ACK_TIMEOUT_NS};

pub use discipline::LinkDiscipline;
pub use packet::{tcp_mss, udp_payload, Payload, Protocol, SackBlocks, SimPacket, MTU};
pub use schedule::{generate_delay_schedule, VariableDelaySchedule};
pub use tcp::{SenderStats, TcpReceiver, TcpSender};
pub use topology::{build_topology, expand_flows, install_central_delay, FlowSpec, Node, Side, Topology};
pub use udp::{UdpReceiver, UdpSender};

/// Port every receiver listens on.
pub const RECEIVER_PORT: u16 = 5201;
const SENDER_PORT_BASE: u16 = 40000;

/// What a transport endpoint asks the simulator to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send(Payload),
    Timer(u64, Tick),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tick {
    Pacing,
    Rto,
    DelayedAck(u64),
    Trace,
}

#[derive(Debug)]
enum EventKind {
    DelayChange { side: Side, delay: Duration },
    FlowStart { flow: usize },
    ServiceComplete { iface: usize },
    PacketArrival { node: Node, packet: SimPacket },
    SchemeTick { flow: usize, tick: Tick },
}

impl EventKind {
    /// Processing order among events due at the same instant.
    fn rank(&self) -> u8 {
        match self {
            EventKind::DelayChange { .. } => 0,
            EventKind::FlowStart { .. } => 1,
            EventKind::ServiceComplete { .. } => 2,
            EventKind::PacketArrival { .. } => 3,
            EventKind::SchemeTick { .. } => 4,
        }
    }
}

#[derive(Debug)]
struct Event {
    time: u64,
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.rank, other.seq).cmp(&(self.time, self.rank, self.seq))
    }
}

enum SenderEnd {
    Tcp(TcpSender),
    Udp(UdpSender),
}

impl SenderEnd {
    fn state(&self) -> SchemeState {
        match self {
            SenderEnd::Tcp(s) => s.cc().state(),
            SenderEnd::Udp(s) => s.cc().state(),
        }
    }
}

enum ReceiverEnd {
    Tcp(TcpReceiver),
    Udp(UdpReceiver),
}

/// Packet counts of one flow, both directions together.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Still queued or on a wire when the run ended.
    pub flushed: u64,
}

struct FlowRuntime {
    sender_host: usize,
    receiver_host: usize,
    /// Initial sequence numbers of the data and acknowledgment streams.
    isn: [u32; 2],
    /// IP identification counters: sender to receiver, receiver to sender.
    ip_id: [u16; 2],
    sender: Option<SenderEnd>,
    receiver: Option<ReceiverEnd>,
    trace: Option<SchemeTrace>,
    counters: FlowCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceReport {
    pub name: String,
    pub capacity: u32,
    pub packets_sent: u64,
    pub tail_drops: u64,
    pub flushed: u64,
    pub peak_occupancy: u32,
}

#[derive(Debug, Clone)]
pub struct FlowReport {
    pub number: usize,
    pub scheme: String,
    pub direction: Direction,
    pub counters: FlowCounters,
    /// Data packets handed to the network, retransmissions included.
    pub data_sent: u64,
    pub data_received: u64,
    pub retransmissions: u64,
    pub timeouts: u64,
    pub final_state: Option<SchemeState>,
    pub trace: Vec<TraceSample>,
}

/// A central-link delay taking effect at one router.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayInstall {
    pub time: u64,
    pub side: Side,
    pub delay: Duration,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub interfaces: Vec<InterfaceReport>,
    pub flows: Vec<FlowReport>,
    pub installs: Vec<DelayInstall>,
    pub schedule: Vec<Duration>,
    pub events: u64,
    /// Simulated nanoseconds covered.
    pub duration: u64,
}

impl RunReport {
    pub fn total_drops(&self) -> u64 {
        self.interfaces.iter().map(|i| i.tail_drops).sum()
    }

    pub fn interface(&self, name: &str) -> Option<&InterfaceReport> {
        self.interfaces.iter().find(|i| i.name == name)
    }
}

struct Simulation<'a, S: CaptureSink + ?Sized> {
    topology: &'a mut Topology,
    params: &'a RunParams,
    sink: &'a mut S,
    heap: BinaryHeap<Event>,
    seq: u64,
    end: u64,
    flows: Vec<FlowRuntime>,
    jitter: SplitMix64,
    iface_sent: Vec<u64>,
    installs: Vec<DelayInstall>,
    actions: Vec<Action>,
    events: u64,
}

impl<'a, S: CaptureSink + ?Sized> Simulation<'a, S> {
    fn push(&mut self, time: u64, kind: EventKind) {
        let rank = kind.rank();
        self.seq += 1;
        self.heap.push(Event {
            time,
            rank,
            seq: self.seq,
            kind,
        });
    }

    fn enqueue(&mut self, now: u64, iface: usize, packet: SimPacket) {
        let size = packet.size();
        let i = &mut self.topology.interfaces[iface];
        match i.discipline.enqueue(now, self.seq, size, &mut self.jitter) {
            Some(send_time) => {
                i.packets.push_back(packet);
                self.push(send_time, EventKind::ServiceComplete { iface });
            }
            None => self.flows[packet.flow as usize].counters.dropped += 1,
        }
    }

    fn service_complete(&mut self, now: u64, iface: usize) -> Result<()> {
        let i = &mut self.topology.interfaces[iface];
        i.discipline
            .dequeue(now)
            .expect("service completion for an interface whose head is not due");
        let packet = i.packets.pop_front().expect("discipline and packet queue out of step");
        let (next, tap) = (i.next, i.tap);
        self.iface_sent[iface] += 1;
        if let Some(host) = tap {
            self.tap(now, host, &packet)?;
        }
        match next {
            topology::Next::Interface(j) => self.enqueue(now, j, packet),
            topology::Next::Node(node) => self.push(now, EventKind::PacketArrival { node, packet }),
        }
        Ok(())
    }

    fn tap(&mut self, now: u64, host: usize, packet: &SimPacket) -> Result<()> {
        let flow = self.topology.hosts[host].flow;
        let role = if self.flows[flow].sender_host == host { Role::Sender } else { Role::Receiver };
        self.sink.record(Tap { flow, role }, now, packet)
    }

    fn arrival(&mut self, now: u64, node: Node, packet: SimPacket) -> Result<()> {
        let host = match node {
            Node::LeftRouter | Node::RightRouter => {
                let side = if node == Node::LeftRouter { Side::Left } else { Side::Right };
                let iface = self.topology.route(side, packet.dst).ok_or_else(|| {
                    Error::Invalid(format!("no route to {} at the {side:?} router", packet.dst))
                })?;
                self.enqueue(now, iface, packet);
                return Ok(());
            }
            Node::Host(h) => h,
        };
        self.tap(now, host, &packet)?;
        let flow = self.topology.hosts[host].flow;
        let f = &mut self.flows[flow];
        f.counters.delivered += 1;
        let mut out = std::mem::take(&mut self.actions);
        if host == f.receiver_host {
            match (&mut f.receiver, &packet.payload) {
                (Some(ReceiverEnd::Tcp(r)), Payload::TcpData { seq, ts_val, .. }) => r.on_data(now, *seq, *ts_val, &mut out),
                (Some(ReceiverEnd::Udp(r)), Payload::UdpData { seq, sent, .. }) => r.on_data(*seq, *sent, &mut out),
                _ => {}
            }
        } else {
            match (&mut f.sender, &packet.payload) {
                (Some(SenderEnd::Tcp(s)), Payload::TcpAck { ack, sack, ts_val, .. }) => {
                    s.on_ack(now, *ack, sack, *ts_val, &mut out)
                }
                (Some(SenderEnd::Udp(s)), Payload::UdpAck { seq, .. }) => s.on_ack(now, *seq, &mut out),
                _ => {}
            }
        }
        self.apply(now, flow, host, &mut out);
        self.actions = out;
        Ok(())
    }

    /// Turns endpoint actions into packets and timers.
    fn apply(&mut self, now: u64, flow: usize, host: usize, out: &mut Vec<Action>) {
        for action in out.drain(..) {
            match action {
                Action::Send(payload) => {
                    let packet = self.packet(flow, host, payload);
                    self.flows[flow].counters.injected += 1;
                    let stack = self.topology.hosts[host].stack;
                    self.enqueue(now, stack, packet);
                }
                Action::Timer(at, tick) => {
                    if at < self.end {
                        self.push(at, EventKind::SchemeTick { flow, tick });
                    }
                }
            }
        }
    }

    fn packet(&mut self, flow: usize, from: usize, payload: Payload) -> SimPacket {
        let f = &mut self.flows[flow];
        let forward = from == f.sender_host;
        let to = if forward { f.receiver_host } else { f.sender_host };
        let dir = if forward { 0 } else { 1 };
        let ip_id = f.ip_id[dir];
        f.ip_id[dir] = ip_id.wrapping_add(1);
        let sender_port = SENDER_PORT_BASE.wrapping_add(flow as u16);
        let (src_port, dst_port) = if forward { (sender_port, RECEIVER_PORT) } else { (RECEIVER_PORT, sender_port) };
        SimPacket {
            flow: flow as u32,
            src: self.topology.hosts[from].addr,
            dst: self.topology.hosts[to].addr,
            src_port,
            dst_port,
            ip_id,
            isn: f.isn[dir],
            peer_isn: f.isn[1 - dir],
            mss: self.params.model.mss,
            payload,
        }
    }

    fn start_flow(&mut self, now: u64, flow: usize) -> Result<()> {
        let spec = &self.topology.flows[flow];
        let descriptor = schemes::lookup(&spec.scheme).ok_or_else(|| Error::UnknownScheme(spec.scheme.clone()))?;
        let model = &self.params.model;
        let cc = schemes::build(descriptor.name, model).ok_or_else(|| Error::UnknownScheme(spec.scheme.clone()))?;
        let delayed_ack_ns = if model.delayed_ack_ms == 40 {
            DELAYED_ACK_TIMEOUT_NS
        } else {
            model.delayed_ack_ms * 1_000_000
        };
        let mut out = std::mem::take(&mut self.actions);
        let f = &mut self.flows[flow];
        match descriptor.transport {
            Transport::Tcp => {
                let mut s = TcpSender::new(cc, model);
                s.start(now, &mut out);
                f.sender = Some(SenderEnd::Tcp(s));
                f.receiver = Some(ReceiverEnd::Tcp(TcpReceiver::new(descriptor.delayed_ack, delayed_ack_ns)));
            }
            Transport::Udp => {
                let mut s = UdpSender::new(cc, model);
                s.start(now, &mut out);
                f.sender = Some(SenderEnd::Udp(s));
                f.receiver = Some(ReceiverEnd::Udp(UdpReceiver::default()));
            }
        }
        if self.params.trace {
            f.trace = Some(SchemeTrace::new(model.trace_period_ms * 1_000_000, now));
            out.push(Action::Timer(now, Tick::Trace));
        }
        let host = f.sender_host;
        self.apply(now, flow, host, &mut out);
        self.actions = out;
        Ok(())
    }

    fn tick(&mut self, now: u64, flow: usize, tick: Tick) {
        let mut out = std::mem::take(&mut self.actions);
        let f = &mut self.flows[flow];
        let host = match tick {
            Tick::Trace => {
                if let (Some(trace), Some(sender)) = (&mut f.trace, &f.sender) {
                    trace.sample(now, &sender.state());
                    out.push(Action::Timer(trace.due(), Tick::Trace));
                }
                f.sender_host
            }
            Tick::DelayedAck(_) => {
                if let Some(ReceiverEnd::Tcp(r)) = &mut f.receiver {
                    r.on_timer(now, tick, &mut out);
                }
                f.receiver_host
            }
            Tick::Pacing | Tick::Rto => {
                match &mut f.sender {
                    Some(SenderEnd::Tcp(s)) => s.on_timer(now, tick, &mut out),
                    Some(SenderEnd::Udp(s)) => s.on_timer(now, tick, &mut out),
                    None => {}
                }
                f.sender_host
            }
        };
        self.apply(now, flow, host, &mut out);
        self.actions = out;
    }

    fn run(mut self, schedule: &VariableDelaySchedule) -> Result<RunReport> {
        let lag = self.params.install_lag.as_nanos();
        for (at, delay) in schedule.changes() {
            for (k, side) in [(1, Side::Left), (2, Side::Right)] {
                let time = at + k * lag;
                if time < self.end {
                    self.push(time, EventKind::DelayChange { side, delay });
                }
            }
        }
        for flow in 0..self.topology.flows.len() {
            let start = Duration::from_secs(self.topology.flows[flow].start as u64).as_nanos();
            if start < self.end {
                self.push(start, EventKind::FlowStart { flow });
            }
        }

        while self.heap.peek().is_some_and(|e| e.time < self.end) {
            let event = self.heap.pop().expect("peeked");
            let now = event.time;
            self.events += 1;
            match event.kind {
                EventKind::DelayChange { side, delay } => {
                    install_central_delay(self.topology, delay, side);
                    self.installs.push(DelayInstall { time: now, side, delay });
                }
                EventKind::FlowStart { flow } => self.start_flow(now, flow)?,
                EventKind::ServiceComplete { iface } => self.service_complete(now, iface)?,
                EventKind::PacketArrival { node, packet } => self.arrival(now, node, packet)?,
                EventKind::SchemeTick { flow, tick } => self.tick(now, flow, tick),
            }
        }
        self.sink.finish()?;

        // Whatever is still queued or on a wire never arrives.
        for event in self.heap.drain() {
            if let EventKind::PacketArrival { packet, .. } = event.kind {
                self.flows[packet.flow as usize].counters.flushed += 1;
            }
        }
        for iface in self.topology.interfaces.iter_mut() {
            for p in iface.packets.drain(..) {
                self.flows[p.flow as usize].counters.flushed += 1;
                iface.flushed += 1;
            }
        }

        let interfaces = self
            .topology
            .interfaces
            .iter()
            .zip(&self.iface_sent)
            .map(|(i, &sent)| InterfaceReport {
                name: i.name.clone(),
                capacity: i.discipline.queue_capacity,
                packets_sent: sent,
                tail_drops: i.discipline.tail_drops,
                flushed: i.flushed,
                peak_occupancy: i.discipline.peak_occupancy,
            })
            .collect();
        let flows = self
            .flows
            .into_iter()
            .zip(&self.topology.flows)
            .map(|(f, spec)| {
                let (data_sent, retransmissions, timeouts) = match &f.sender {
                    Some(SenderEnd::Tcp(s)) => (s.stats.segments_sent, s.stats.retransmissions, s.stats.timeouts),
                    Some(SenderEnd::Udp(s)) => (s.datagrams_sent, 0, 0),
                    None => (0, 0, 0),
                };
                let data_received = match &f.receiver {
                    Some(ReceiverEnd::Tcp(r)) => r.segments_received,
                    Some(ReceiverEnd::Udp(r)) => r.datagrams_received,
                    None => 0,
                };
                FlowReport {
                    number: spec.number(),
                    scheme: spec.scheme.clone(),
                    direction: spec.direction,
                    counters: f.counters,
                    data_sent,
                    data_received,
                    retransmissions,
                    timeouts,
                    final_state: f.sender.as_ref().map(SenderEnd::state),
                    trace: f.trace.map(|t| t.samples().to_vec()).unwrap_or_default(),
                }
            })
            .collect();
        Ok(RunReport {
            interfaces,
            flows,
            installs: self.installs,
            schedule: schedule.values.clone(),
            events: self.events,
            duration: self.end,
        })
    }
}

fn initial_sequence_number(seed: u64, flow: usize, stream: u64) -> u32 {
    let mut rng = SplitMix64::new(seed ^ ((flow as u64) << 1 | stream).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (rng.next_u64() >> 32) as u32
}

/// Runs the simulation for `params.runtime` seconds, handing every tapped
/// packet to `sink`. A sink error aborts the run.
pub fn run<S: CaptureSink + ?Sized>(
    topology: &mut Topology,
    schedule: &VariableDelaySchedule,
    params: &RunParams,
    sink: &mut S,
) -> Result<RunReport> {
    let flows = (0..topology.flows.len())
        .map(|i| {
            let (sender_host, receiver_host) = topology.endpoints(i);
            FlowRuntime {
                sender_host,
                receiver_host,
                isn: [
                    initial_sequence_number(params.seed, i, 0),
                    initial_sequence_number(params.seed, i, 1),
                ],
                ip_id: [0, 0],
                sender: None,
                receiver: None,
                trace: None,
                counters: FlowCounters::default(),
            }
        })
        .collect();
    let iface_count = topology.interfaces.len();
    let sim = Simulation {
        topology,
        params,
        sink,
        heap: BinaryHeap::new(),
        seq: 0,
        end: Duration::from_secs(params.runtime as u64).as_nanos(),
        flows,
        jitter: SplitMix64::for_stream(params.seed, Stream::Jitter),
        iface_sent: vec![0; iface_count],
        installs: Vec::new(),
        actions: Vec::new(),
        events: 0,
    };
    sim.run(schedule)
}

/// `trace-<flow#>-<scheme>.log`.
pub fn trace_file_name(flow_number: usize, scheme: &str) -> String {
    format!("trace-{flow_number}-{scheme}.log")
}

/// Validates the experiment, writes `metadata.json`, runs it with PCAP
/// capture into `params.output_dir` and writes trace files if enabled.
/// `progress` receives one line per stage.
pub fn run_experiment(
    params: &RunParams,
    groups: &[FlowGroup],
    progress: &mut dyn FnMut(&str),
) -> Result<RunReport> {
    config::validate(params, groups)?;
    let mut groups = groups.to_vec();
    config::sort_groups(&mut groups);
    let dir = &params.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    progress("Flows have been sorted by their start");
    for (i, f) in expand_flows(&groups).iter().enumerate() {
        progress(&format!(
            "  flow {}: {} {} starting at {} s",
            i + 1,
            f.scheme,
            f.direction.arrow(),
            f.start
        ));
    }
    config::save_metadata(params, &groups, dir)?;
    progress(&format!("Saved {}", dir.join(config::METADATA_FILE).display()));

    progress("Creating the dumbbell topology");
    let mut topology = build_topology(&groups, params);
    progress("Setting up queuing disciplines");
    let schedule = generate_delay_schedule(params);
    progress("Starting recordings at hosts");
    let mut sink = PcapSink::create(dir, &topology.flows, params)?;
    progress("Starting servers");
    progress("Starting clients and varying delay");
    let report = run(&mut topology, &schedule, params, &mut sink)?;
    if sink.records_dropped > 0 {
        progress(&format!("Capture loss removed {} sender records", sink.records_dropped));
    }

    if params.trace {
        for f in &report.flows {
            let path: PathBuf = dir.join(trace_file_name(f.number, &f.scheme));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut out = BufWriter::new(file);
            for s in &f.trace {
                serde_json::to_writer(&mut out, s)?;
                out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
            out.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    progress("Cleaning up");
    progress("SUCCESS");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::MemorySink;
    use crate::config::parse_layout;

    fn one_flow(scheme: &str, extra: &str) -> Vec<FlowGroup> {
        parse_layout(&format!("- scheme: {scheme}\n  flows: 1\n  start: 0\n  direction: ->\n{extra}")).unwrap()
    }

    fn params(base_ms: u64, runtime: u32) -> RunParams {
        let mut p = RunParams::new(Duration::from_millis(base_ms), Duration::from_secs(100), Duration::ZERO, 1);
        p.runtime = runtime;
        p
    }

    fn simulate(groups: &[FlowGroup], p: &RunParams) -> (RunReport, MemorySink) {
        let mut t = build_topology(groups, p);
        let mut sink = MemorySink::default();
        let report = run(&mut t, &generate_delay_schedule(p), p, &mut sink).unwrap();
        (report, sink)
    }

    #[test]
    fn event_order_within_an_instant() {
        let kinds = [
            EventKind::SchemeTick { flow: 0, tick: Tick::Rto },
            EventKind::ServiceComplete { iface: 0 },
            EventKind::FlowStart { flow: 0 },
            EventKind::DelayChange { side: Side::Left, delay: Duration::ZERO },
        ];
        let mut heap = BinaryHeap::new();
        for (seq, kind) in kinds.into_iter().enumerate() {
            heap.push(Event { time: 5, rank: kind.rank(), seq: seq as u64, kind });
        }
        heap.push(Event { time: 4, rank: 4, seq: 9, kind: EventKind::SchemeTick { flow: 1, tick: Tick::Rto } });
        let ranks: Vec<(u64, u8)> = std::iter::from_fn(|| heap.pop()).map(|e| (e.time, e.rank)).collect();
        assert_eq!(ranks, vec![(4, 4), (5, 0), (5, 1), (5, 2), (5, 4)]);
    }

    #[test]
    fn packets_are_conserved() {
        let groups = parse_layout(
            "- scheme: cubic\n  flows: 2\n  start: 0\n  direction: ->\n- scheme: copa\n  flows: 1\n  start: 1\n  direction: <-\n",
        )
        .unwrap();
        let mut p = params(10, 3);
        p.central_rate = 20.0;
        p.q1 = 50;
        p.q2 = 50;
        let (report, _) = simulate(&groups, &p);
        assert!(report.total_drops() > 0);
        let mut dropped = 0;
        for f in &report.flows {
            let c = f.counters;
            assert_eq!(c.injected, c.delivered + c.dropped + c.flushed, "flow {}", f.number);
            dropped += c.dropped;
        }
        assert_eq!(dropped, report.total_drops());
    }

    #[test]
    fn unshaped_path_has_zero_one_way_delay() {
        let mut p = params(0, 1);
        p.central_rate = 0.0;
        let (_, sink) = simulate(&one_flow("reno", ""), &p);
        // Nothing is lost or reordered, so data packets pair up in order.
        let sent: Vec<(u64, &SimPacket)> = sink.tap(0, Role::Sender).filter(|(_, p)| p.is_data()).collect();
        let received: Vec<(u64, &SimPacket)> = sink.tap(0, Role::Receiver).filter(|(_, p)| p.is_data()).collect();
        let mut matched = 0;
        for ((ts, ps), (tr, pr)) in sent.iter().zip(&received) {
            assert_eq!(ps, pr);
            assert_eq!(ts, tr);
            matched += 1;
        }
        assert!(matched > 1000);
    }

    #[test]
    fn one_way_delay_includes_every_link() {
        let extra = "  left-delay: 1ms\n  left-rate: 100\n  right-delay: 1ms\n  right-rate: 100\n";
        let (_, sink) = simulate(&one_flow("cubic", extra), &params(8, 2));
        let sent: std::collections::HashMap<u16, u64> =
            sink.tap(0, Role::Sender).filter(|(_, p)| p.is_data()).map(|(t, p)| (p.ip_id, t)).collect();
        let delays: Vec<u64> = sink
            .tap(0, Role::Receiver)
            .filter(|(t, p)| p.is_data() && *t > 1_000_000_000)
            .map(|(t, p)| t - sent[&p.ip_id])
            .collect();
        assert!(!delays.is_empty());
        assert!(delays.iter().all(|&d| d >= 10_000_000));
    }

    #[test]
    fn saturated_link_serializes_exactly() {
        let mut p = params(5, 2);
        p.central_rate = 10.0;
        let (_, sink) = simulate(&one_flow("cubic", ""), &p);
        // Back-to-back full-size data packets leave the bottleneck 1.2 ms apart.
        let arrivals: Vec<(u64, u32)> =
            sink.tap(0, Role::Receiver).map(|(t, p)| (t, p.size())).collect();
        let gaps: Vec<u64> = arrivals
            .windows(2)
            .filter(|w| w[0].1 == 1500 && w[1].1 == 1500 && w[0].0 > 1_000_000_000)
            .map(|w| w[1].0 - w[0].0)
            .collect();
        assert!(gaps.len() > 100);
        assert_eq!(*gaps.iter().min().unwrap(), 1_200_000);
        let exact = gaps.iter().filter(|&&g| g == 1_200_000).count();
        assert!(exact * 10 > gaps.len() * 9, "{exact} of {}", gaps.len());
    }

    #[test]
    fn delay_changes_installed_left_then_right() {
        let mut p = params(0, 1);
        p.delta = Duration::from_millis(150);
        p.step = Duration::from_millis(140);
        p.max_delay = Duration::from_millis(140);
        let (report, _) = simulate(&one_flow("cubic", ""), &p);
        let first: Vec<_> = report.installs.iter().take(2).collect();
        assert_eq!(first[0].time, 154_000_000);
        assert_eq!(first[0].side, Side::Left);
        assert_eq!(first[1].time, 158_000_000);
        assert_eq!(first[1].side, Side::Right);
        assert!(report.installs.iter().all(|i| i.delay <= p.max_delay));
    }

    #[test]
    fn identical_inputs_identical_traces() {
        let mut p = params(20, 2);
        p.jitter = Duration::from_millis(2);
        p.max_delay = Duration::from_millis(50);
        let groups = one_flow("bbr", "");
        let (_, a) = simulate(&groups, &p);
        let (_, b) = simulate(&groups, &p);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn ip_ids_count_per_direction() {
        let (_, sink) = simulate(&one_flow("vegas", ""), &params(5, 1));
        let ids: Vec<u16> = sink.tap(0, Role::Sender).filter(|(_, p)| p.is_data()).map(|(_, p)| p.ip_id).take(5).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
        let ack_ids: Vec<u16> =
            sink.tap(0, Role::Sender).filter(|(_, p)| !p.is_data()).map(|(_, p)| p.ip_id).take(3).collect();
        assert_eq!(ack_ids, vec![0, 1, 2]);
    }

    #[test]
    fn empty_layout_runs() {
        let (report, sink) = simulate(&[], &params(5, 1));
        assert!(report.flows.is_empty());
        assert!(sink.records.is_empty());
    }
}
