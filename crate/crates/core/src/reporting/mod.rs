//! Curves, aggregated series, statistics and plots built from flow logs.

mod plot;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{flow_log_name, FlowLog};
use crate::config::{load_metadata, Direction, METADATA_FILE};
use crate::error::{Error, Result};

pub use plot::{parse_color, Palette, Rgb, TAB10};
pub use stats::{nearest_rank, CurveStats, StatsReport};

/// Curves shorter than this get no rate statistic.
pub const MIN_RATE_DURATION: f64 = 0.005;
pub const DEFAULT_INTERVAL: f64 = 0.5;

/// Jain's fairness index `(Σx)² / (m·Σx²)`. `None` when every rate is zero.
pub fn jains_index(rates: &[f64]) -> Result<Option<f64>> {
    if rates.is_empty() {
        return Err(Error::Invalid("Jain's index of an empty set of rates".into()));
    }
    let sum: f64 = rates.iter().sum();
    let squares: f64 = rates.iter().map(|x| x * x).sum();
    if squares == 0.0 {
        return Ok(None);
    }
    let j = sum * sum / (rates.len() as f64 * squares);
    // Rounding can push an equal split a hair above one.
    Ok(Some(j.min(1.0)))
}

/// A flow property that can define subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    Scheme,
    Direction,
}

impl Property {
    pub fn as_str(self) -> &'static str {
        match self {
            Property::Scheme => "scheme",
            Property::Direction => "direction",
        }
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scheme" => Ok(Property::Scheme),
            "direction" => Ok(Property::Direction),
            other => Err(Error::Invalid(format!(
                "unsupported subset property {other:?}: only scheme and direction are allowed"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportType {
    PerFlow,
    Total,
    /// Properties are deduplicated and kept in canonical order.
    PerSubset(Vec<Property>),
}

impl ReportType {
    /// Parses a space-separated property list such as `"scheme direction"`.
    pub fn subset(fields: &str) -> Result<Self> {
        let mut props = fields.split_whitespace().map(str::parse).collect::<Result<Vec<Property>>>()?;
        if props.is_empty() {
            return Err(Error::Invalid("per-subset plotting needs at least one property".into()));
        }
        props.sort();
        props.dedup();
        Ok(ReportType::PerSubset(props))
    }

    /// `per-flow`, `total`, `per-scheme`, `per-direction`, `per-scheme-direction`.
    pub fn name(&self) -> String {
        match self {
            ReportType::PerFlow => "per-flow".into(),
            ReportType::Total => "total".into(),
            ReportType::PerSubset(props) => {
                let parts: Vec<&str> = props.iter().map(|p| p.as_str()).collect();
                format!("per-{}", parts.join("-"))
            }
        }
    }
}

impl fmt::Display for ReportType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One flow's log with the layout properties it was run with.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowData {
    /// One-based flow number.
    pub number: usize,
    pub scheme: String,
    pub direction: Direction,
    pub log: FlowLog,
}

/// A property value; directions order leftward first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Value {
    Scheme(String),
    Direction(Direction),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Scheme(s) => f.write_str(s),
            Value::Direction(d) => f.write_str(d.arrow()),
        }
    }
}

impl FlowData {
    fn property(&self, p: Property) -> Value {
        match p {
            Property::Scheme => Value::Scheme(self.scheme.clone()),
            Property::Direction => Value::Direction(self.direction),
        }
    }
}

/// Loads `data-<n>.log` for every flow listed in `<dir>/metadata.json`.
pub fn load_flows(dir: &Path) -> Result<Vec<FlowData>> {
    let meta = load_metadata(&dir.join(METADATA_FILE))?;
    meta.flows()
        .into_iter()
        .enumerate()
        .map(|(i, (scheme, direction))| {
            let log = FlowLog::load(&dir.join(flow_log_name(i + 1)))?;
            Ok(FlowData {
                number: i + 1,
                scheme,
                direction,
                log,
            })
        })
        .collect()
}

/// A group of flows whose data is merged for plotting and statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    /// Label without the statistic.
    pub label: String,
    /// Indices into the flow slice the curve was built from.
    pub members: Vec<usize>,
    /// Earliest first arrival of the members, seconds.
    pub start: Option<f64>,
    /// Latest last arrival of the members, seconds.
    pub end: Option<f64>,
}

impl Curve {
    fn new(label: String, members: Vec<usize>, flows: &[FlowData]) -> Self {
        let start = members.iter().filter_map(|&i| flows[i].log.first_arrival).reduce(f64::min);
        let end = members.iter().filter_map(|&i| flows[i].log.last_arrival).reduce(f64::max);
        Curve {
            label,
            members,
            start,
            end,
        }
    }

    pub fn duration(&self) -> Option<f64> {
        Some(self.end? - self.start?)
    }

    /// Every member packet as (arrival s, delay s, size bytes), flow by flow.
    pub fn packets<'a>(&'a self, flows: &'a [FlowData]) -> impl Iterator<Item = (f64, f64, u32)> + 'a {
        self.members.iter().flat_map(move |&i| {
            let log = &flows[i].log;
            log.arrivals
                .iter()
                .zip(&log.delays)
                .zip(&log.sizes)
                .map(|((&a, &d), &s)| (a, d, s))
        })
    }

    pub fn packet_count(&self, flows: &[FlowData]) -> usize {
        self.members.iter().map(|&i| flows[i].log.arrivals.len()).sum()
    }

    pub fn bytes_received(&self, flows: &[FlowData]) -> u64 {
        self.members.iter().map(|&i| flows[i].log.bytes_received()).sum()
    }

    pub fn bytes_sent(&self, flows: &[FlowData]) -> u64 {
        self.members.iter().map(|&i| flows[i].log.bytes_sent).sum()
    }

    pub fn bytes_lost(&self, flows: &[FlowData]) -> u64 {
        self.members.iter().map(|&i| flows[i].log.bytes_lost).sum()
    }

    /// Overall average rate in Mbit/s; `None` without packets or when the
    /// curve lasts under 5 ms.
    pub fn average_rate(&self, flows: &[FlowData]) -> Option<f64> {
        let d = self.duration().filter(|d| *d >= MIN_RATE_DURATION)?;
        Some(self.bytes_received(flows) as f64 * 8.0 / d / 1e6)
    }

    /// Mean one-way delay in ms, summed flow by flow.
    pub fn average_delay(&self, flows: &[FlowData]) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for &i in &self.members {
            sum += flows[i].log.delays.iter().sum::<f64>();
            n += flows[i].log.delays.len();
        }
        (n > 0).then(|| sum / n as f64 * 1e3)
    }

    pub fn loss_percent(&self, flows: &[FlowData]) -> Option<f64> {
        crate::analysis::loss_percent(self.bytes_lost(flows), self.bytes_sent(flows))
    }
}

fn flow_count(n: usize) -> String {
    if n == 1 {
        "1 flow".into()
    } else {
        format!("{n} flows")
    }
}

/// Splits flows into curves for a report type.
pub fn build_curves(flows: &[FlowData], report: &ReportType) -> Vec<Curve> {
    match report {
        ReportType::PerFlow => flows
            .iter()
            .enumerate()
            .map(|(i, f)| Curve::new(format!("Flow {}: {} {}", f.number, f.scheme, f.direction), vec![i], flows))
            .collect(),
        ReportType::Total => {
            vec![Curve::new(
                format!("Total: {}", flow_count(flows.len())),
                (0..flows.len()).collect(),
                flows,
            )]
        }
        ReportType::PerSubset(props) => {
            let mut groups: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
            for (i, f) in flows.iter().enumerate() {
                let key = props.iter().map(|&p| f.property(p)).collect();
                groups.entry(key).or_default().push(i);
            }
            groups
                .into_iter()
                .map(|(key, members)| {
                    let values: Vec<String> = key.iter().map(Value::to_string).collect();
                    let label = format!("{} : {}", values.join(" "), flow_count(members.len()));
                    Curve::new(label, members, flows)
                })
                .collect()
        }
    }
}

/// Number of aggregation slots covering `[0, max_end]`.
pub fn slot_count(max_end: f64, interval: f64) -> usize {
    (max_end / interval).floor() as usize + 1
}

fn slot_of(arrival: f64, interval: f64, slots: usize) -> usize {
    ((arrival / interval).floor() as usize).min(slots - 1)
}

/// Values per aggregation slot; slot `k` covers `[k·interval, (k+1)·interval)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub interval: f64,
    pub slots: Vec<Option<f64>>,
}

impl Series {
    /// (slot start, value) for slots that have a value.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(move |(k, v)| v.map(|v| (k as f64 * self.interval, v)))
    }
}

/// Latest end over all curves; zero when no curve has packets.
pub fn max_end(curves: &[Curve]) -> f64 {
    curves.iter().filter_map(|c| c.end).fold(0.0, f64::max)
}

/// Bytes per slot; the rate in Mbit/s is `bytes · 8 / interval / 1e6`.
pub fn slot_bytes(curve: &Curve, flows: &[FlowData], interval: f64, slots: usize) -> Vec<u64> {
    let mut bytes = vec![0u64; slots];
    for (arrival, _, size) in curve.packets(flows) {
        bytes[slot_of(arrival, interval, slots)] += size as u64;
    }
    bytes
}

/// Average rate per slot in Mbit/s, defined over the slots the curve spans.
pub fn rate_series(curve: &Curve, flows: &[FlowData], interval: f64, slots: usize) -> Series {
    let bytes = slot_bytes(curve, flows, interval, slots);
    let span = match (curve.start, curve.end) {
        (Some(s), Some(e)) => slot_of(s, interval, slots)..=slot_of(e, interval, slots),
        _ => 1..=0,
    };
    Series {
        interval,
        slots: bytes
            .iter()
            .enumerate()
            .map(|(k, &b)| span.contains(&k).then(|| b as f64 * 8.0 / interval / 1e6))
            .collect(),
    }
}

/// Mean one-way delay per slot in ms; slots without packets have none.
pub fn delay_series(curve: &Curve, flows: &[FlowData], interval: f64, slots: usize) -> Series {
    let mut acc = vec![(0.0f64, 0usize); slots];
    for (arrival, delay, _) in curve.packets(flows) {
        let a = &mut acc[slot_of(arrival, interval, slots)];
        a.0 += delay;
        a.1 += 1;
    }
    Series {
        interval,
        slots: acc.into_iter().map(|(s, n)| (n > 0).then(|| s / n as f64 * 1e3)).collect(),
    }
}

/// Jain's index per slot over the curves whose span encloses the whole slot.
pub fn jain_series(curves: &[Curve], rates: &[Series], interval: f64, slots: usize) -> Series {
    let values = (0..slots)
        .map(|k| {
            let (lo, hi) = (k as f64 * interval, (k + 1) as f64 * interval);
            let eligible: Vec<f64> = curves
                .iter()
                .zip(rates)
                .filter(|(c, _)| matches!((c.start, c.end), (Some(s), Some(e)) if s <= lo && hi <= e))
                .map(|(_, r)| r.slots[k].unwrap_or(0.0))
                .collect();
            if eligible.is_empty() {
                None
            } else {
                jains_index(&eligible).ok().flatten()
            }
        })
        .collect();
    Series { interval, slots: values }
}

/// Options for [`emit_reports`].
#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub interval: f64,
    pub palette: Palette,
    pub jain_color: Rgb,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            interval: DEFAULT_INTERVAL,
            palette: Palette::default(),
            jain_color: TAB10[0],
        }
    }
}

pub fn artifact_names(report: &ReportType) -> [String; 5] {
    let t = report.name();
    [
        format!("{t}-avg-rate.svg"),
        format!("{t}-avg-jain.svg"),
        format!("{t}-avg-delay.svg"),
        format!("{t}-stats.log"),
        format!("{t}-ppt-delay.svg"),
    ]
}

/// Writes the plots and the statistics file of one report type. Everything
/// built from averages is written before the per-packet artifacts, which hold
/// a whole curve's packets in memory. `notice` receives stage and skip notes.
pub fn emit_reports(
    flows: &[FlowData],
    report: &ReportType,
    out_dir: &Path,
    options: &PlotOptions,
    notice: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>> {
    let interval = options.interval;
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::Invalid(format!("aggregation interval must be positive, got {interval}")));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let [rate_path, jain_path, delay_path, stats_path, ppt_path] = artifact_names(report).map(|n| out_dir.join(n));
    let type_name = report.name();

    notice("Loading data of the curves to make average plots and stats...");
    let curves = build_curves(flows, report);
    let slots = slot_count(max_end(&curves), interval);
    for c in &curves {
        if c.packet_count(flows) == 0 {
            notice(&format!("Curve \"{}\" has no packets and is skipped in every plot", c.label));
        } else if c.average_rate(flows).is_none() {
            notice(&format!("Curve \"{}\" lasts under 5 ms and is skipped in the rate plot", c.label));
        }
        if c.loss_percent(flows).is_none() {
            notice(&format!("Loss of curve \"{}\" cannot be computed: nothing was sent", c.label));
        }
    }

    notice("Plotting average throughput...");
    let rates: Vec<Series> = curves.iter().map(|c| rate_series(c, flows, interval, slots)).collect();
    let rate_lines: Vec<plot::Trace> = curves
        .iter()
        .zip(&rates)
        .enumerate()
        .filter_map(|(i, (c, s))| {
            let avg = c.average_rate(flows)?;
            Some(plot::Trace {
                label: format!("{} ({avg:.6} Mbps)", c.label),
                color: options.palette.color(i),
                points: s.points().collect(),
            })
        })
        .collect();
    plot::line_chart(
        &rate_path,
        &format!("{type_name}: average throughput per {interval} s"),
        "Throughput (Mbit/s)",
        &rate_lines,
    )?;

    notice("Plotting average one-way delay...");
    let delay_lines: Vec<plot::Trace> = curves
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let avg = c.average_delay(flows)?;
            Some(plot::Trace {
                label: format!("{} ({avg:.6} ms)", c.label),
                color: options.palette.color(i),
                points: delay_series(c, flows, interval, slots).points().collect(),
            })
        })
        .collect();
    plot::line_chart(
        &delay_path,
        &format!("{type_name}: average one-way delay per {interval} s"),
        "One-way delay (ms)",
        &delay_lines,
    )?;

    notice("Plotting average Jain's index...");
    let jain = jain_series(&curves, &rates, interval, slots);
    let overall = overall_jain(&curves, flows);
    let jain_label = match overall {
        Some(j) => format!("Jain's index over {} ({j:.6})", curve_count(curves.len())),
        None => format!("Jain's index over {}", curve_count(curves.len())),
    };
    plot::line_chart(
        &jain_path,
        &format!("{type_name}: average Jain's index per {interval} s"),
        "Jain's index",
        &[plot::Trace {
            label: jain_label,
            color: options.jain_color,
            points: jain.points().collect(),
        }],
    )?;

    notice("Saving average statistics...");
    let mut stats = StatsReport::averages(&curves, flows);
    std::fs::write(&stats_path, stats.averages_text()).map_err(|e| Error::io(&stats_path, e))?;

    notice("Plotting per packet one-way delay...");
    for (st, c) in stats.curves.iter_mut().zip(&curves) {
        st.add_per_packet(c, flows);
    }
    let clouds: Vec<plot::Trace> = curves
        .iter()
        .zip(&stats.curves)
        .enumerate()
        .filter_map(|(i, (c, s))| {
            let p95 = s.p95_delay?;
            Some(plot::Trace {
                label: format!("{} ({p95:.6} ms)", c.label),
                color: options.palette.color(i),
                points: c.packets(flows).map(|(a, d, _)| (a, d * 1e3)).collect(),
            })
        })
        .collect();
    plot::scatter_chart(
        &ppt_path,
        &format!("{type_name}: per-packet one-way delay, 95th percentile in labels"),
        "One-way delay (ms)",
        &clouds,
    )?;

    notice("Saving per-packet statistics...");
    std::fs::write(&stats_path, stats.to_text()).map_err(|e| Error::io(&stats_path, e))?;
    Ok(vec![rate_path, jain_path, delay_path, stats_path, ppt_path])
}

/// Loads the logs in `input` and emits every requested report type into `output`.
pub fn plot_dir(
    input: &Path,
    output: &Path,
    reports: &[ReportType],
    options: &PlotOptions,
    notice: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::Invalid("choose at least one report type: per-flow, total or per-subset".into()));
    }
    let flows = load_flows(input)?;
    let mut written = Vec::new();
    for r in reports {
        written.extend(emit_reports(&flows, r, output, options, notice)?);
    }
    Ok(written)
}

fn curve_count(n: usize) -> String {
    if n == 1 {
        "1 curve".into()
    } else {
        format!("{n} curves")
    }
}

/// Jain's index over the overall average rates of the curves that have one.
pub fn overall_jain(curves: &[Curve], flows: &[FlowData]) -> Option<f64> {
    let rates: Vec<f64> = curves.iter().filter_map(|c| c.average_rate(flows)).collect();
    jains_index(&rates).ok().flatten()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(number: usize, scheme: &str, direction: Direction, packets: &[(f64, f64, u32)]) -> FlowData {
        let mut log = FlowLog::default();
        for &(a, d, s) in packets {
            log.push(a, d, s);
        }
        log.bytes_sent = log.bytes_received();
        FlowData {
            number,
            scheme: scheme.into(),
            direction,
            log,
        }
    }

    fn ten_flows() -> Vec<FlowData> {
        let mut v = Vec::new();
        for i in 0..10 {
            let (scheme, dir) = match i {
                0..=2 => ("bbr", Direction::Leftward),
                3..=5 => ("bbr", Direction::Rightward),
                6 | 7 => ("copa", Direction::Leftward),
                _ => ("copa", Direction::Rightward),
            };
            v.push(flow(i + 1, scheme, dir, &[(i as f64, 0.01, 1500)]));
        }
        v
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jains_index(&[5.0; 4]).unwrap(), Some(1.0));
        assert_eq!(jains_index(&[1.0, 0.0, 0.0, 0.0]).unwrap(), Some(0.25));
        assert_eq!(jains_index(&[0.0, 0.0]).unwrap(), None);
        assert!(jains_index(&[]).is_err());
        // Independent evaluation of the formula for two rates.
        let (a, b) = (49.59f64, 50.25f64);
        let want = (a + b).powi(2) / (2.0 * (a * a + b * b));
        let got = jains_index(&[a, b]).unwrap().unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!(got > 0.99995 && got < 0.99996);
    }

    #[test]
    fn type_names() {
        assert_eq!(ReportType::PerFlow.name(), "per-flow");
        assert_eq!(ReportType::subset("direction scheme").unwrap().name(), "per-scheme-direction");
        assert_eq!(ReportType::subset("scheme").unwrap().name(), "per-scheme");
        assert!(ReportType::subset("rate").is_err());
        assert!(ReportType::subset("  ").is_err());
    }

    #[test]
    fn curve_partitions() {
        let flows = ten_flows();
        let per_sd = build_curves(&flows, &ReportType::subset("scheme direction").unwrap());
        let labels: Vec<&str> = per_sd.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["bbr <- : 3 flows", "bbr -> : 3 flows", "copa <- : 2 flows", "copa -> : 2 flows"]);
        let total = build_curves(&flows, &ReportType::Total);
        assert_eq!(total.len(), 1);
        assert_eq!(total[0].label, "Total: 10 flows");
        assert_eq!((total[0].start, total[0].end), (Some(0.0), Some(9.0)));
        assert_eq!(build_curves(&flows, &ReportType::PerFlow).len(), 10);
        let right: Vec<FlowData> = flows.into_iter().filter(|f| f.direction == Direction::Rightward).collect();
        assert_eq!(build_curves(&right, &ReportType::subset("direction").unwrap()).len(), 1);
    }

    #[test]
    fn aggregation_slots() {
        let flows = vec![flow(1, "cubic", Direction::Rightward, &[(0.1, 0.01, 1000), (0.2, 0.03, 500), (1.2, 0.02, 250)])];
        let curves = build_curves(&flows, &ReportType::PerFlow);
        let n = slot_count(max_end(&curves), 0.5);
        assert_eq!(n, 3);
        let rate = rate_series(&curves[0], &flows, 0.5, n);
        assert_eq!(rate.slots, vec![Some(1500.0 * 8.0 / 0.5 / 1e6), Some(0.0), Some(250.0 * 8.0 / 0.5 / 1e6)]);
        let delay = delay_series(&curves[0], &flows, 0.5, n);
        assert_eq!(delay.slots[1], None);
        assert!((delay.slots[0].unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn jain_slots_need_enclosing_curves() {
        // A spans [0, 20], B starts at 10.
        let a: Vec<(f64, f64, u32)> = (0..=40).map(|i| (i as f64 * 0.5, 0.0, 1000)).collect();
        let b: Vec<(f64, f64, u32)> = (20..=40).map(|i| (i as f64 * 0.5, 0.0, 3000)).collect();
        let flows = vec![flow(1, "x", Direction::Rightward, &a), flow(2, "y", Direction::Rightward, &b)];
        let curves = build_curves(&flows, &ReportType::PerFlow);
        let n = slot_count(max_end(&curves), 1.0);
        let rates: Vec<Series> = curves.iter().map(|c| rate_series(c, &flows, 1.0, n)).collect();
        let jain = jain_series(&curves, &rates, 1.0, n);
        for k in 0..10 {
            assert_eq!(jain.slots[k], Some(1.0), "slot {k}");
        }
        let r = |v: f64| v * 8.0 / 1e6;
        let want = jains_index(&[r(2000.0), r(6000.0)]).unwrap();
        assert_eq!(jain.slots[12], want);
        assert_eq!(jain.slots[20], None);
    }

    #[test]
    fn disjoint_curves_never_share_a_slot() {
        let flows = vec![
            flow(1, "x", Direction::Rightward, &[(0.0, 0.0, 100), (2.0, 0.0, 100)]),
            flow(2, "x", Direction::Rightward, &[(3.0, 0.0, 100), (5.0, 0.0, 100)]),
        ];
        let curves = build_curves(&flows, &ReportType::PerFlow);
        let n = slot_count(max_end(&curves), 1.0);
        let rates: Vec<Series> = curves.iter().map(|c| rate_series(c, &flows, 1.0, n)).collect();
        let jain = jain_series(&curves, &rates, 1.0, n);
        // Slots 1 and 4 are eligible but carry no bytes, so the index is undefined.
        assert_eq!(jain.slots, vec![Some(1.0), None, None, Some(1.0), None, None]);
    }

    #[test]
    fn short_curves_have_no_rate() {
        let flows = vec![flow(1, "x", Direction::Rightward, &[(1.0, 0.0, 100), (1.003, 0.0, 100)])];
        let c = &build_curves(&flows, &ReportType::Total)[0];
        assert_eq!(c.average_rate(&flows), None);
        assert!(c.average_delay(&flows).is_some());
    }
}
