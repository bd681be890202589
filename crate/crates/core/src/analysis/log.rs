//! The five-line JSON flow log and its exact text form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Per-flow analysis result. Times are seconds since the base time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowLog {
    pub first_arrival: Option<f64>,
    pub last_arrival: Option<f64>,
    pub bytes_lost: u64,
    pub bytes_sent: u64,
    pub arrivals: Vec<f64>,
    pub delays: Vec<f64>,
    pub sizes: Vec<u32>,
}

impl FlowLog {
    /// Appends one matched packet.
    pub fn push(&mut self, arrival: f64, delay: f64, size: u32) {
        self.first_arrival.get_or_insert(arrival);
        self.last_arrival = Some(arrival);
        self.arrivals.push(arrival);
        self.delays.push(delay);
        self.sizes.push(size);
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn bytes_received(&self) -> u64 {
        self.sizes.iter().map(|&s| s as u64).sum()
    }

    /// Lost bytes as a percentage of sent bytes; `None` when nothing was sent.
    pub fn loss_percent(&self) -> Option<f64> {
        loss_percent(self.bytes_lost, self.bytes_sent)
    }

    /// The file contents: five JSON lines, separators as Python's `json.dumps`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "null".to_string(), py_float);
        let _ = writeln!(out, "[{}, {}]", opt(self.first_arrival), opt(self.last_arrival));
        let _ = writeln!(out, "[{}, {}]", self.bytes_lost, self.bytes_sent);
        write_list(&mut out, self.arrivals.iter().map(|&v| py_float(v)));
        write_list(&mut out, self.delays.iter().map(|&v| py_float(v)));
        write_list(&mut out, self.sizes.iter().map(|v| v.to_string()));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Invalid(format!("flow log: missing {what} line")))
        };
        fn line<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
            Ok(serde_json::from_str(s)?)
        }
        let [first_arrival, last_arrival]: [Option<f64>; 2] = line(next("first/last arrival")?)?;
        let [bytes_lost, bytes_sent]: [u64; 2] = line(next("byte count")?)?;
        let log = FlowLog {
            first_arrival,
            last_arrival,
            bytes_lost,
            bytes_sent,
            arrivals: line(next("arrival")?)?,
            delays: line(next("delay")?)?,
            sizes: line(next("size")?)?,
        };
        if log.arrivals.len() != log.delays.len() || log.arrivals.len() != log.sizes.len() {
            return Err(Error::Invalid("flow log: list lengths differ".into()));
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FlowLog::parse(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }
}

fn write_list(out: &mut String, items: impl Iterator<Item = String>) {
    out.push('[');
    for (i, item) in items.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&item);
    }
    out.push_str("]\n");
}

/// `bytes_lost / bytes_sent * 100`, or `None` when nothing was sent.
pub fn loss_percent(bytes_lost: u64, bytes_sent: u64) -> Option<f64> {
    (bytes_sent > 0).then(|| bytes_lost as f64 / bytes_sent as f64 * 100.0)
}

/// Formats a float the way Python's `repr` does: shortest round-trip digits,
/// positional between 1e-4 and 1e16, otherwise `d.ddde+XX`.
pub fn py_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Infinity".into() } else { "-Infinity".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let n = digits.len() as i32;
    if (-4..16).contains(&exp) {
        let body = if exp < 0 {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        } else if exp + 1 >= n {
            format!("{digits}{}.0", "0".repeat((exp + 1 - n) as usize))
        } else {
            let (int, frac) = digits.split_at((exp + 1) as usize);
            format!("{int}.{frac}")
        };
        format!("{sign}{body}")
    } else {
        let exp_sign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{mantissa}e{exp_sign}{:02}", exp.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn python_float_repr() {
        let cases = [
            (0.0, "0.0"),
            (1.0, "1.0"),
            (0.5, "0.5"),
            (0.1, "0.1"),
            (123.456, "123.456"),
            (1e-4, "0.0001"),
            (1.5e-5, "1.5e-05"),
            (1e-5, "1e-05"),
            (1e16, "1e+16"),
            (1.25e16, "1.25e+16"),
            (9999999999999998.0, "9999999999999998.0"),
            (-2.5, "-2.5"),
            (0.000123, "0.000123"),
            (60.000001, "60.000001"),
            (100.0, "100.0"),
        ];
        for (v, want) in cases {
            assert_eq!(py_float(v), want, "{v:e}");
        }
    }

    #[test]
    fn empty_log_text() {
        let log = FlowLog {
            bytes_lost: 4500,
            bytes_sent: 4500,
            ..FlowLog::default()
        };
        assert_eq!(log.to_text(), "[null, null]\n[4500, 4500]\n[]\n[]\n[]\n");
    }

    #[test]
    fn populated_log_text() {
        let mut log = FlowLog::default();
        log.push(0.5, 0.012, 1500);
        log.push(1.0, 0.0, 52);
        log.bytes_sent = 3052;
        log.bytes_lost = 1500;
        assert_eq!(
            log.to_text(),
            "[0.5, 1.0]\n[1500, 3052]\n[0.5, 1.0]\n[0.012, 0.0]\n[1500, 52]\n"
        );
    }

    #[test]
    fn loss_formula() {
        assert_eq!(loss_percent(50, 1000), Some(5.0));
        assert_eq!(loss_percent(0, 1000), Some(0.0));
        assert_eq!(loss_percent(0, 0), None);
        assert_eq!(loss_percent(1500, 4500), Some(1500.0 / 4500.0 * 100.0));
    }

    #[test]
    fn rejects_ragged_lists() {
        assert!(FlowLog::parse("[0.1, 0.1]\n[0, 10]\n[0.1]\n[]\n[10]\n").is_err());
        assert!(FlowLog::parse("[null, null]\n[0, 0]\n[]\n").is_err());
    }

    proptest! {
        #[test]
        fn py_float_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let text = py_float(v);
            prop_assert_eq!(text.parse::<f64>().unwrap(), v);
            let json: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(json, v);
        }

        #[test]
        fn text_round_trips(
            packets in proptest::collection::vec((0u64..100_000_000, 0u64..1_000_000, 20u32..1500), 0..50),
            lost in 0u64..100_000,
        ) {
            let mut log = FlowLog::default();
            let mut t = 0;
            for (gap, delay, size) in packets {
                t += gap;
                log.push(t as f64 / 1e6, delay as f64 / 1e6, size);
            }
            log.bytes_lost = lost;
            log.bytes_sent = lost + log.bytes_received();
            prop_assert_eq!(FlowLog::parse(&log.to_text()).unwrap(), log);
        }
    }
}
