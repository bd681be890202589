//! Experiment description: the layout file, run parameters and the
//! reproducibility metadata written next to the captures.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::schemes;

pub const DEFAULT_QUEUE: u32 = 1000;
pub const DEFAULT_CENTRAL_RATE: f64 = 100.0;
pub const MIN_DELTA: Duration = Duration::from_millis(10);
pub const MAX_RUNTIME: u32 = 60;
pub const METADATA_FILE: &str = "metadata.json";
pub const METADATA_VERSION: u32 = 1;

/// Non-negative time span stored as integer nanoseconds.
///
/// Accepted text forms are a bare number (milliseconds), `Nus`, `Nms` and
/// `Ns`, where `N` may carry a fractional part. Sub-nanosecond fractions are
/// rounded half-to-even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Duration(u64);

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_nanos(ns: u64) -> Self {
        Duration(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        Duration(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        Duration(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        Duration(s * 1_000_000_000)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub const fn as_micros(self) -> u64 {
        self.0 / 1_000
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_millis_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Parses a duration whose bare-number unit is `default_unit_ns`
    /// nanoseconds (used by `--max-delay`, whose bare form is microseconds).
    pub fn parse_with_default_unit(text: &str, default_unit_ns: u64) -> Result<Self> {
        let s = text.trim();
        let err = || Error::Duration(text.to_string());
        let (number, unit) = if let Some(n) = s.strip_suffix("us") {
            (n, 1_000)
        } else if let Some(n) = s.strip_suffix("ms") {
            (n, 1_000_000)
        } else if let Some(n) = s.strip_suffix('s') {
            (n, 1_000_000_000)
        } else {
            (s, default_unit_ns)
        };
        decimal_to_nanos(number.trim(), unit).map(Duration).ok_or_else(err)
    }
}

/// Exact decimal parsing: `int[.frac] * unit` rounded half-to-even.
fn decimal_to_nanos(number: &str, unit: u64) -> Option<u64> {
    let number = number.strip_prefix('+').unwrap_or(number);
    let (int_part, frac_part) = match number.split_once('.') {
        Some((i, f)) => (i, f),
        None => (number, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let int: u128 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let mut total = int.checked_mul(unit as u128)?;
    if !frac_part.is_empty() {
        // frac / 10^len * unit, kept exact as a rational.
        let digits = frac_part.trim_end_matches('0');
        if !digits.is_empty() {
            if digits.len() > 30 {
                return None;
            }
            let num: u128 = digits.parse().ok()?;
            let den: u128 = 10u128.pow(digits.len() as u32);
            let scaled = num.checked_mul(unit as u128)?;
            let (q, r) = (scaled / den, scaled % den);
            let twice = r * 2;
            let round_up = twice > den || (twice == den && q % 2 == 1);
            total = total.checked_add(q + round_up as u128)?;
        }
    }
    u64::try_from(total).ok()
}

impl FromStr for Duration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Duration::parse_with_default_unit(s, 1_000_000)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = self.0;
        if ns == 0 {
            write!(f, "0us")
        } else if ns % 1_000_000_000 == 0 {
            write!(f, "{}s", ns / 1_000_000_000)
        } else if ns % 1_000_000 == 0 {
            write!(f, "{}ms", ns / 1_000_000)
        } else if ns % 1_000 == 0 {
            write!(f, "{}us", ns / 1_000)
        } else {
            let frac = format!("{:03}", ns % 1_000);
            write!(f, "{}.{}us", ns / 1_000, frac.trim_end_matches('0'))
        }
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Sender in the right half, receiver in the left half (`<-`).
    Leftward,
    /// Sender in the left half, receiver in the right half (`->`).
    Rightward,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::Leftward => "<-",
            Direction::Rightward => "->",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.arrow())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "->" | "rightward" | "right" => Ok(Direction::Rightward),
            "<-" | "leftward" | "left" => Ok(Direction::Leftward),
            other => Err(Error::Invalid(format!("direction {other:?}: expected -> or <-"))),
        }
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.arrow())
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One layout entry: a group of identical flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowGroup {
    pub scheme: String,
    pub flows: u32,
    pub start: u32,
    pub direction: Direction,
    pub left_delay: Duration,
    /// Mbit/s; zero leaves the rate unshaped.
    pub left_rate: f64,
    pub left_queues: u32,
    pub right_delay: Duration,
    pub right_rate: f64,
    pub right_queues: u32,
}

const LAYOUT_KEYS: [&str; 10] = [
    "direction",
    "flows",
    "left-delay",
    "left-queues",
    "left-rate",
    "right-delay",
    "right-queues",
    "right-rate",
    "scheme",
    "start",
];

#[derive(Default)]
struct RawEntry {
    line: usize,
    values: Vec<(String, Option<String>, usize)>,
}

fn strip_comment(line: &str) -> &str {
    // A '#' starts a comment unless it sits inside quotes.
    let mut in_single = false;
    let mut in_double = false;
    for (i, c) in line.char_indices() {
        match c {
            '\'' if !in_double => in_single = !in_single,
            '"' if !in_single => in_double = !in_double,
            '#' if !in_single && !in_double => {
                if i == 0 || line[..i].ends_with(char::is_whitespace) {
                    return &line[..i];
                }
            }
            _ => {}
        }
    }
    line
}

fn scalar(raw: &str) -> Option<String> {
    let v = raw.trim();
    if v.is_empty() || v == "null" || v == "~" || v == "Null" || v == "NULL" {
        return None;
    }
    if v.len() >= 2
        && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\'')))
    {
        return Some(v[1..v.len() - 1].to_string());
    }
    Some(v.to_string())
}

/// Parses a layout document: a sequence of flat `key: value` mappings.
///
/// Missing or null delays and rates become zero, missing or null queue sizes
/// become 1000 packets. The start-versus-runtime check is done by
/// [`validate`].
pub fn parse_layout(text: &str) -> Result<Vec<FlowGroup>> {
    let mut entries: Vec<RawEntry> = Vec::new();
    let mut current: Option<RawEntry> = None;
    let mut item_indent: Option<usize> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line).trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if line.trim() == "---" || line.trim() == "[]" {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let body = line.trim_start();
        let layout_err = |reason: String| Error::Layout { line: line_no, reason };

        let kv = if let Some(rest) = body.strip_prefix('-').filter(|r| r.is_empty() || r.starts_with(' ')) {
            if let Some(prev) = current.take() {
                entries.push(prev);
            }
            current = Some(RawEntry {
                line: line_no,
                values: Vec::new(),
            });
            let rest = rest.trim_start();
            item_indent = Some(indent + 1);
            if rest.is_empty() {
                continue;
            }
            rest
        } else {
            if current.is_none() {
                return Err(layout_err("expected a sequence item starting with '-'".into()));
            }
            if item_indent.map_or(true, |i| indent < i) {
                return Err(layout_err("mapping key is not indented under its '-' item".into()));
            }
            body
        };

        let (key, value) = kv
            .split_once(':')
            .ok_or_else(|| layout_err(format!("expected 'key: value', found {kv:?}")))?;
        let key = key.trim();
        if !LAYOUT_KEYS.contains(&key) {
            return Err(layout_err(format!("unknown key {key:?}")));
        }
        if value.trim_start().starts_with(['{', '[', '|', '>']) && value.trim() != "[]" {
            return Err(layout_err(format!("value of {key:?} must be a plain scalar")));
        }
        let entry = current.as_mut().expect("entry open");
        if entry.values.iter().any(|(k, _, _)| k == key) {
            return Err(layout_err(format!("duplicate key {key:?}")));
        }
        entry.values.push((key.to_string(), scalar(value), line_no));
    }
    if let Some(prev) = current.take() {
        entries.push(prev);
    }

    entries.into_iter().map(group_from_entry).collect()
}

fn group_from_entry(entry: RawEntry) -> Result<FlowGroup> {
    let get = |key: &str| -> Option<(&str, usize)> {
        entry
            .values
            .iter()
            .find(|(k, _, _)| k == key)
            .and_then(|(_, v, l)| v.as_deref().map(|v| (v, *l)))
    };
    let required = |key: &str| -> Result<(&str, usize)> {
        get(key).ok_or_else(|| Error::Layout {
            line: entry.line,
            reason: format!("missing required key {key:?}"),
        })
    };
    let bad = |line: usize, reason: String| Error::Layout { line, reason };

    let (scheme, line) = required("scheme")?;
    if schemes::lookup(scheme).is_none() {
        return Err(bad(line, Error::UnknownScheme(scheme.to_string()).to_string()));
    }
    let (flows, line) = required("flows")?;
    let flows: i64 = flows
        .parse()
        .map_err(|_| bad(line, format!("flows must be an integer, found {flows:?}")))?;
    if flows <= 0 {
        return Err(bad(line, format!("flows must be positive, found {flows}")));
    }
    let (start, line) = required("start")?;
    let start: i64 = start
        .parse()
        .map_err(|_| bad(line, format!("start must be an integer second, found {start:?}")))?;
    if start < 0 {
        return Err(bad(line, format!("start must be non-negative, found {start}")));
    }
    let (direction, line) = required("direction")?;
    let direction: Direction = direction.parse().map_err(|e: Error| bad(line, e.to_string()))?;

    let delay = |key: &str| -> Result<Duration> {
        match get(key) {
            None => Ok(Duration::ZERO),
            Some((v, l)) => v.parse().map_err(|e: Error| bad(l, e.to_string())),
        }
    };
    let rate = |key: &str| -> Result<f64> {
        match get(key) {
            None => Ok(0.0),
            Some((v, l)) => match v.parse::<f64>() {
                Ok(r) if r.is_finite() && r >= 0.0 => Ok(r),
                _ => Err(bad(l, format!("{key} must be a non-negative number of Mbit/s, found {v:?}"))),
            },
        }
    };
    let queue = |key: &str| -> Result<u32> {
        match get(key) {
            None => Ok(DEFAULT_QUEUE),
            Some((v, l)) => match v.parse::<u32>() {
                Ok(q) if q > 0 => Ok(q),
                _ => Err(bad(l, format!("{key} must be a positive packet count, found {v:?}"))),
            },
        }
    };

    Ok(FlowGroup {
        scheme: scheme.to_string(),
        flows: u32::try_from(flows).map_err(|_| bad(entry.line, "flows is too large".into()))?,
        start: u32::try_from(start).map_err(|_| bad(entry.line, "start is too large".into()))?,
        direction,
        left_delay: delay("left-delay")?,
        left_rate: rate("left-rate")?,
        left_queues: queue("left-queues")?,
        right_delay: delay("right-delay")?,
        right_rate: rate("right-rate")?,
        right_queues: queue("right-queues")?,
    })
}

fn format_rate(rate: f64) -> String {
    let s = format!("{rate}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Writes groups back as a layout document with keys in alphabetical order.
pub fn format_layout(groups: &[FlowGroup]) -> String {
    let mut out = String::new();
    for g in groups {
        out.push_str(&format!("- direction: {}\n", g.direction));
        out.push_str(&format!("  flows: {}\n", g.flows));
        out.push_str(&format!("  left-delay: {}\n", g.left_delay));
        out.push_str(&format!("  left-queues: {}\n", g.left_queues));
        out.push_str(&format!("  left-rate: {}\n", format_rate(g.left_rate)));
        out.push_str(&format!("  right-delay: {}\n", g.right_delay));
        out.push_str(&format!("  right-queues: {}\n", g.right_queues));
        out.push_str(&format!("  right-rate: {}\n", format_rate(g.right_rate)));
        out.push_str(&format!("  scheme: {}\n", g.scheme));
        out.push_str(&format!("  start: {}\n", g.start));
    }
    out
}

const LAYOUT_HEADER: &str = "\
# Delays/rates are optional: if lacking or null, they are set to 0us/0.0
# and a zero delay/rate is the same as leaving it unset.
# Sizes of queues are optional: if lacking or null, they are set to 1000.
";

/// Groups written to a fresh layout file: two cubic flows from second 0 and
/// two vegas flows from half the runtime.
pub fn default_groups(runtime: u32) -> Vec<FlowGroup> {
    let group = |scheme: &str, start: u32| FlowGroup {
        scheme: scheme.to_string(),
        flows: 2,
        start,
        direction: Direction::Rightward,
        left_delay: Duration::ZERO,
        left_rate: 0.0,
        left_queues: DEFAULT_QUEUE,
        right_delay: Duration::ZERO,
        right_rate: 0.0,
        right_queues: DEFAULT_QUEUE,
    };
    vec![group("cubic", 0), group("vegas", runtime / 2)]
}

pub fn default_layout(runtime: u32) -> String {
    format!("{LAYOUT_HEADER}{}", format_layout(&default_groups(runtime)))
}

/// Reads the layout at `path`, creating it with default contents first when
/// it does not exist. Returns the groups and whether the file was generated.
pub fn load_or_create_layout(path: &Path, runtime: u32) -> Result<(Vec<FlowGroup>, bool)> {
    if !path.exists() {
        let text = default_layout(runtime);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        return Ok((parse_layout(&text)?, true));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok((parse_layout(&text)?, false))
}

pub fn total_flows(groups: &[FlowGroup]) -> usize {
    groups.iter().map(|g| g.flows as usize).sum()
}

/// Stable sort by start second; equal starts keep file order.
pub fn sort_groups(groups: &mut [FlowGroup]) {
    groups.sort_by_key(|g| g.start);
}

/// Parameters of one run, everything except the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub base: Duration,
    pub delta: Duration,
    pub step: Duration,
    #[serde(default)]
    pub jitter: Duration,
    pub runtime: u32,
    /// Mbit/s of the central link; zero leaves it unshaped.
    pub central_rate: f64,
    pub max_delay: Duration,
    pub seed: u64,
    pub q1: u32,
    pub q2: u32,
    pub output_dir: PathBuf,
    /// Time between a delta boundary and the new delay taking effect at the
    /// left router, and again between the left and the right router.
    #[serde(default = "default_install_lag")]
    pub install_lag: Duration,
    /// Probability that a record is missing from a sender capture.
    #[serde(default)]
    pub capture_loss: f64,
    /// Emit `trace-<flow>-<scheme>.log` files.
    #[serde(default)]
    pub trace: bool,
    /// UNIX second that simulated time zero maps to in captures.
    #[serde(default = "default_epoch")]
    pub capture_epoch: u64,
    #[serde(default)]
    pub model: schemes::ModelParams,
}

fn default_install_lag() -> Duration {
    Duration::from_millis(4)
}

fn default_epoch() -> u64 {
    DEFAULT_CAPTURE_EPOCH
}

pub const DEFAULT_CAPTURE_EPOCH: u64 = 1_000_000_000;

impl RunParams {
    /// Parameters with every optional field at its default. The seed still
    /// has to be chosen by the caller.
    pub fn new(base: Duration, delta: Duration, step: Duration, seed: u64) -> Self {
        RunParams {
            base,
            delta,
            step,
            jitter: Duration::ZERO,
            runtime: 30,
            central_rate: DEFAULT_CENTRAL_RATE,
            max_delay: Duration::from_secs(100),
            seed,
            q1: DEFAULT_QUEUE,
            q2: DEFAULT_QUEUE,
            output_dir: PathBuf::from("dumps"),
            install_lag: default_install_lag(),
            capture_loss: 0.0,
            trace: false,
            capture_epoch: DEFAULT_CAPTURE_EPOCH,
            model: schemes::ModelParams::default(),
        }
    }
}

/// Seconds since the UNIX epoch, used when no seed is given.
pub fn wall_clock_seed() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Checks run parameters against each other and against the layout.
pub fn validate(params: &RunParams, groups: &[FlowGroup]) -> Result<()> {
    let invalid = |m: String| Err(Error::Invalid(m));
    if params.runtime < 1 || params.runtime > MAX_RUNTIME {
        return invalid(format!("runtime must lie in [1, {MAX_RUNTIME}] seconds, got {}", params.runtime));
    }
    if params.delta < MIN_DELTA {
        return invalid(format!("delta must be at least {MIN_DELTA}, got {}", params.delta));
    }
    if params.base > params.max_delay {
        return invalid(format!("base delay {} exceeds max delay {}", params.base, params.max_delay));
    }
    if params.step > params.max_delay {
        return invalid(format!("step {} exceeds max delay {}", params.step, params.max_delay));
    }
    if params.jitter > params.max_delay {
        return invalid(format!("jitter {} exceeds max delay {}", params.jitter, params.max_delay));
    }
    if !(params.central_rate.is_finite() && params.central_rate >= 0.0) {
        return invalid(format!("central rate must be non-negative, got {}", params.central_rate));
    }
    if params.q1 == 0 || params.q2 == 0 {
        return invalid("central queue sizes must be positive".into());
    }
    if !(0.0..1.0).contains(&params.capture_loss) {
        return invalid(format!("capture loss must lie in [0, 1), got {}", params.capture_loss));
    }
    for (i, g) in groups.iter().enumerate() {
        if schemes::lookup(&g.scheme).is_none() {
            return Err(Error::UnknownScheme(g.scheme.clone()));
        }
        if g.flows == 0 {
            return invalid(format!("group {}: flow count must be positive", i + 1));
        }
        if g.start >= params.runtime {
            return invalid(format!(
                "group {}: start second {} is not below the runtime of {} s",
                i + 1,
                g.start,
                params.runtime
            ));
        }
        for (name, d) in [("left-delay", g.left_delay), ("right-delay", g.right_delay)] {
            if d > params.max_delay {
                return invalid(format!("group {}: {name} {d} exceeds max delay {}", i + 1, params.max_delay));
            }
        }
    }
    Ok(())
}

/// Everything needed to reproduce a run, saved as `metadata.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format_version: u32,
    #[serde(flatten)]
    pub params: RunParams,
    /// Fully defaulted groups, sorted by start second.
    pub groups: Vec<FlowGroup>,
}

impl Metadata {
    pub fn new(params: RunParams, groups: Vec<FlowGroup>) -> Self {
        Metadata {
            format_version: METADATA_VERSION,
            params,
            groups,
        }
    }

    /// Per-flow (scheme, direction) in flow-number order.
    pub fn flows(&self) -> Vec<(String, Direction)> {
        let mut sorted = self.groups.clone();
        sort_groups(&mut sorted);
        sorted
            .iter()
            .flat_map(|g| std::iter::repeat((g.scheme.clone(), g.direction)).take(g.flows as usize))
            .collect()
    }
}

/// Writes `<dir>/metadata.json` and returns the saved document.
pub fn save_metadata(params: &RunParams, groups: &[FlowGroup], dir: &Path) -> Result<Metadata> {
    let meta = Metadata::new(params.clone(), groups.to_vec());
    write_metadata(&meta, &dir.join(METADATA_FILE))?;
    Ok(meta)
}

pub fn write_metadata(meta: &Metadata, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_metadata(path: &Path) -> Result<Metadata> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta: Metadata = serde_json::from_str(&text)?;
    if meta.format_version != METADATA_VERSION {
        return Err(Error::Invalid(format!(
            "{}: unsupported metadata format version {}",
            path.display(),
            meta.format_version
        )));
    }
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING_ENTRY: &str = "\
- direction: ->
  flows: 2
  left-delay: 0us
  left-queues: 2000
  left-rate: 100.0
  right-delay: 5ms
  right-queues: 3000
  right-rate: 100
  scheme: vegas
  start: 5
";

    #[test]
    fn parses_documented_entry() {
        let groups = parse_layout(LISTING_ENTRY).unwrap();
        assert_eq!(
            groups,
            vec![FlowGroup {
                scheme: "vegas".into(),
                flows: 2,
                start: 5,
                direction: Direction::Rightward,
                left_delay: Duration::ZERO,
                left_rate: 100.0,
                left_queues: 2000,
                right_delay: Duration::from_millis(5),
                right_rate: 100.0,
                right_queues: 3000,
            }]
        );
    }

    #[test]
    fn nulls_and_missing_fields_default() {
        let text = "\
- direction: <-
  flows: 1
  left-delay: null
  left-queues: null
  left-rate: ~
  scheme: cubic
  start: 0
";
        let g = &parse_layout(text).unwrap()[0];
        assert_eq!(g.left_delay, Duration::ZERO);
        assert_eq!(g.right_delay, Duration::ZERO);
        assert_eq!(g.left_rate, 0.0);
        assert_eq!(g.right_rate, 0.0);
        assert_eq!(g.left_queues, 1000);
        assert_eq!(g.right_queues, 1000);
    }

    #[test]
    fn empty_document() {
        let groups = parse_layout("").unwrap();
        assert!(groups.is_empty());
        assert_eq!(total_flows(&groups), 0);
        assert!(parse_layout("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn layout_errors() {
        let unknown = LISTING_ENTRY.replace("vegas", "pantheon_sprout");
        assert!(matches!(parse_layout(&unknown), Err(Error::Layout { line: 9, .. })));
        let zero = LISTING_ENTRY.replace("flows: 2", "flows: 0");
        assert!(parse_layout(&zero).is_err());
        let neg = LISTING_ENTRY.replace("flows: 2", "flows: -3");
        assert!(parse_layout(&neg).is_err());
        let bad_delay = LISTING_ENTRY.replace("5ms", "5 parsecs");
        assert!(matches!(parse_layout(&bad_delay), Err(Error::Layout { line: 6, .. })));
        let bad_key = LISTING_ENTRY.replace("start: 5", "begin: 5");
        assert!(parse_layout(&bad_key).is_err());
        let missing = LISTING_ENTRY.replace("  scheme: vegas\n", "");
        assert!(parse_layout(&missing).is_err());
        assert!(parse_layout("flows: 2\n").is_err());
    }

    #[test]
    fn default_layout_vegas_start() {
        for (runtime, expected) in [(10, 5), (1, 0), (60, 30)] {
            let groups = parse_layout(&default_layout(runtime)).unwrap();
            assert_eq!(groups.len(), 2);
            assert_eq!(groups[0].scheme, "cubic");
            assert_eq!(groups[0].start, 0);
            assert_eq!(groups[0].flows, 2);
            assert_eq!(groups[1].scheme, "vegas");
            assert_eq!(groups[1].flows, 2);
            assert_eq!(groups[1].start, expected);
        }
    }

    #[test]
    fn duration_forms() {
        let cases = [
            ("30ms", 30_000_000),
            ("0.5s", 500_000_000),
            ("10", 10_000_000),
            ("5000us", 5_000_000),
            ("1.5", 1_500_000),
            ("0us", 0),
            ("2.0005us", 2_000), // half-to-even: 2000.5 ns -> 2000
            ("2.0015us", 2_002), // 2001.5 ns -> 2002
            ("100s", 100_000_000_000),
        ];
        for (text, ns) in cases {
            assert_eq!(text.parse::<Duration>().unwrap().as_nanos(), ns, "{text}");
        }
        for bad in ["", "ms", "-5ms", "1e3ms", "5 min", "abc", "1.2.3s"] {
            assert!(bad.parse::<Duration>().is_err(), "{bad}");
        }
        assert_eq!(
            Duration::parse_with_default_unit("100000000", 1_000).unwrap(),
            Duration::from_secs(100)
        );
    }

    #[test]
    fn duration_display() {
        assert_eq!(Duration::from_millis(30).to_string(), "30ms");
        assert_eq!(Duration::from_micros(1500).to_string(), "1500us");
        assert_eq!(Duration::from_nanos(1500).to_string(), "1.5us");
        assert_eq!(Duration::from_nanos(1).to_string(), "0.001us");
        assert_eq!(Duration::from_secs(2).to_string(), "2s");
        assert_eq!(Duration::ZERO.to_string(), "0us");
    }

    #[test]
    fn validation() {
        let groups = parse_layout(LISTING_ENTRY).unwrap();
        let mut p = RunParams::new(Duration::from_millis(30), Duration::from_millis(500), Duration::from_millis(10), 1);
        p.runtime = 10;
        validate(&p, &groups).unwrap();

        let mut bad = p.clone();
        bad.runtime = 61;
        assert!(validate(&bad, &groups).is_err());
        bad.runtime = 0;
        assert!(validate(&bad, &groups).is_err());

        let mut bad = p.clone();
        bad.runtime = 5; // start == runtime
        assert!(validate(&bad, &groups).is_err());

        let mut bad = p.clone();
        bad.delta = Duration::from_millis(9);
        assert!(validate(&bad, &groups).is_err());

        let mut bad = p.clone();
        bad.max_delay = Duration::from_millis(20);
        assert!(validate(&bad, &groups).is_err());
    }

    #[test]
    fn stable_sort_by_start() {
        let mut groups = parse_layout(&default_layout(10)).unwrap();
        groups.reverse();
        let mut a = groups[0].clone();
        a.scheme = "bbr".into();
        groups.push(a);
        sort_groups(&mut groups);
        let order: Vec<_> = groups.iter().map(|g| (g.start, g.scheme.as_str())).collect();
        assert_eq!(order, vec![(0, "cubic"), (5, "vegas"), (5, "bbr")]);
    }

    #[test]
    fn metadata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let groups = parse_layout(LISTING_ENTRY).unwrap();
        let p = RunParams::new(Duration::from_millis(30), Duration::from_millis(500), Duration::from_millis(10), 3);
        let saved = save_metadata(&p, &groups, dir.path()).unwrap();
        assert_eq!(saved.params.seed, 3);
        let loaded = load_metadata(&dir.path().join(METADATA_FILE)).unwrap();
        assert_eq!(saved, loaded);
    }
}
