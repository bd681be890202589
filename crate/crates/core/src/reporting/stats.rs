//! The two-section statistics file.

use std::fmt::Write as _;

use super::{overall_jain, Curve, FlowData, MIN_RATE_DURATION};

/// Nearest-rank percentile of ascending `sorted`: element `ceil(p/100 · n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Statistics of one curve. Delays are in ms, rates in Mbit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveStats {
    pub label: String,
    pub packets: usize,
    pub duration: Option<f64>,
    pub average_rate: Option<f64>,
    pub average_delay: Option<f64>,
    pub loss: Option<f64>,
    pub median_delay: Option<f64>,
    /// Mean over the sorted per-packet delays.
    pub mean_delay: Option<f64>,
    pub p95_delay: Option<f64>,
}

impl CurveStats {
    /// Section-one values only; the per-packet fields stay empty.
    pub fn averages(curve: &Curve, flows: &[FlowData]) -> Self {
        CurveStats {
            label: curve.label.clone(),
            packets: curve.packet_count(flows),
            duration: curve.duration(),
            average_rate: curve.average_rate(flows),
            average_delay: curve.average_delay(flows),
            loss: curve.loss_percent(flows),
            median_delay: None,
            mean_delay: None,
            p95_delay: None,
        }
    }

    /// Fills the per-packet fields, holding the whole curve's delays at once.
    pub fn add_per_packet(&mut self, curve: &Curve, flows: &[FlowData]) {
        let mut delays: Vec<f64> = curve.packets(flows).map(|(_, d, _)| d * 1e3).collect();
        delays.sort_by(f64::total_cmp);
        self.median_delay = nearest_rank(&delays, 50.0);
        self.p95_delay = nearest_rank(&delays, 95.0);
        self.mean_delay = (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64);
    }

    fn rate_text(&self) -> String {
        match (self.average_rate, self.duration) {
            (Some(r), _) => format!("{r:.6} Mbps"),
            (None, None) => "unavailable (no packets)".into(),
            (None, Some(_)) => format!("unavailable (duration under {} ms)", MIN_RATE_DURATION * 1e3),
        }
    }

    fn loss_text(&self) -> String {
        match self.loss {
            Some(l) => format!("{l:.6} %"),
            None => "unavailable (nothing sent)".into(),
        }
    }
}

fn ms(v: Option<f64>) -> String {
    v.map_or_else(|| "unavailable (no packets)".into(), |v| format!("{v:.6} ms"))
}

/// The statistics of one report type.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub jain: Option<f64>,
    pub curves: Vec<CurveStats>,
}

impl StatsReport {
    pub fn averages(curves: &[Curve], flows: &[FlowData]) -> Self {
        StatsReport {
            jain: overall_jain(curves, flows),
            curves: curves.iter().map(|c| CurveStats::averages(c, flows)).collect(),
        }
    }

    pub fn compute(curves: &[Curve], flows: &[FlowData]) -> Self {
        let mut s = Self::averages(curves, flows);
        for (st, c) in s.curves.iter_mut().zip(curves) {
            st.add_per_packet(c, flows);
        }
        s
    }

    pub fn averages_text(&self) -> String {
        let mut out = String::from("== Average and loss statistics ==\n\n");
        match self.jain {
            Some(j) => {
                let _ = writeln!(out, "Average Jain's index  : {j:.6}");
            }
            None => out.push_str("Average Jain's index  : unavailable (no curve has an average rate)\n"),
        }
        for c in &self.curves {
            let _ = write!(
                out,
                "\n-- Curve \"{}\":\nAverage throughput    : {}\nAverage one-way delay : {}\nLoss                  : {}\n",
                c.label,
                c.rate_text(),
                ms(c.average_delay),
                c.loss_text()
            );
        }
        out
    }

    pub fn per_packet_text(&self) -> String {
        let mut out = String::from("\n===== Per-packet statistics =====\n");
        for c in &self.curves {
            let _ = write!(
                out,
                "\n-- Curve \"{}\":\nMedian per-packet one-way delay          : {}\nAverage per-packet one-way delay         : {}\n95th percentile per-packet one-way delay : {}\n",
                c.label,
                ms(c.median_delay),
                ms(c.mean_delay),
                ms(c.p95_delay)
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.averages_text() + &self.per_packet_text()
    }
}
