//! Periodic samples of a model's state, written as JSON lines.

use std::io::Write;

use serde::Serialize;

use super::SchemeState;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSample {
    /// Seconds since the start of the run.
    pub time: f64,
    pub cwnd: f64,
    pub ssthresh: Option<f64>,
    /// Smoothed RTT in milliseconds.
    pub rtt: Option<f64>,
    pub min_rtt: Option<f64>,
    /// Mbit/s.
    pub pacing_rate: Option<f64>,
    pub mode: &'static str,
}

#[derive(Debug, Clone)]
pub struct SchemeTrace {
    period: u64,
    next: u64,
    samples: Vec<TraceSample>,
}

impl SchemeTrace {
    pub fn new(period: u64, first: u64) -> Self {
        SchemeTrace {
            period: period.max(1),
            next: first,
            samples: Vec::new(),
        }
    }

    /// Time of the next sample.
    pub fn due(&self) -> u64 {
        self.next
    }

    pub fn sample(&mut self, now: u64, state: &SchemeState) {
        let ms = |ns: u64| (ns > 0 && ns != u64::MAX).then(|| ns as f64 / 1e6);
        self.samples.push(TraceSample {
            time: now as f64 / 1e9,
            cwnd: state.cwnd,
            ssthresh: state.ssthresh.is_finite().then_some(state.ssthresh),
            rtt: ms(state.rtt_estimate),
            min_rtt: ms(state.min_rtt),
            pacing_rate: state.pacing_rate.map(|r| r / 1e6),
            mode: state.mode,
        });
        while self.next <= now {
            self.next += self.period;
        }
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
