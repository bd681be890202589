//! The `run`, `analyze`, `plot` and `clean` subcommands.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::analysis::{analyze_dir, Progress};
use crate::config::{
    self, load_metadata, load_or_create_layout, total_flows, wall_clock_seed, Duration, RunParams,
};
use crate::emulator::run_experiment;
use crate::reporting::{parse_color, plot_dir, Palette, PlotOptions, ReportType};

const MS: u64 = 1_000_000;
const US: u64 = 1_000;

#[derive(Debug, Parser)]
#[command(name = "dumbbell", version, about = "Dumbbell-topology congestion control testbed")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run flows through the emulated dumbbell and record their captures.
    Run(RunArgs),
    /// Extract per-flow data logs from the captures.
    Analyze(AnalyzeArgs),
    /// Build plots and statistics from the data logs.
    Plot(PlotArgs),
    /// Delete generated files from the three output directories.
    Clean(CleanArgs),
}

fn duration_ms(s: &str) -> Result<Duration, String> {
    Duration::parse_with_default_unit(s, MS).map_err(|e| e.to_string())
}

fn duration_us(s: &str) -> Result<Duration, String> {
    Duration::parse_with_default_unit(s, US).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Initial delay at both ends of the central link: N (ms), Nus, Nms or Ns.
    #[arg(value_parser = duration_ms, required_unless_present = "from_metadata")]
    pub base: Option<Duration>,
    /// The central delay changes every delta; set it above the runtime for a constant delay.
    #[arg(value_parser = duration_ms, required_unless_present = "from_metadata")]
    pub delta: Option<Duration>,
    /// Amount by which the central delay moves every delta, kept within [0, max-delay].
    #[arg(value_parser = duration_ms, required_unless_present = "from_metadata")]
    pub step: Option<Duration>,
    /// Optional jitter on the central delay.
    #[arg(value_parser = duration_ms)]
    pub jitter: Option<Duration>,
    /// Output directory for metadata.json and the captures [default: dumps].
    #[arg(short, long, value_name = "DIR")]
    pub dir: Option<PathBuf>,
    /// Layout file with the flow groups; created with example groups if missing.
    #[arg(short, long, value_name = "FILE", default_value = "layout.yml")]
    pub layout: PathBuf,
    /// Central link rate in Mbit/s; zero leaves it unshaped.
    #[arg(short, long, value_name = "MBITPS", default_value_t = config::DEFAULT_CENTRAL_RATE)]
    pub rate: f64,
    /// Runtime in seconds, 1 to 60.
    #[arg(short = 't', long, value_name = "SEC", default_value_t = 30)]
    pub runtime: u32,
    /// Upper bound for delays and jitter: N (us), Nus, Nms or Ns.
    #[arg(short, long, value_name = "USEC", value_parser = duration_us, default_value = "100000000")]
    pub max_delay: Duration,
    /// Seed of the delay walk; the current UNIX time when omitted.
    #[arg(short, long)]
    pub seed: Option<u64>,
    /// Accepted for compatibility; captures are written directly.
    #[arg(short, long, value_name = "MiB")]
    pub buffer: Option<u32>,
    /// Accepted for compatibility; schemes are built in.
    #[arg(short, long, value_name = "DIR")]
    pub pantheon: Option<PathBuf>,
    /// Queue size at the left router's end of the central link (-q1).
    #[arg(long, value_name = "SIZE")]
    pub first_queue: Option<u32>,
    /// Queue size at the right router's end of the central link (-q2).
    #[arg(long, value_name = "SIZE")]
    pub second_queue: Option<u32>,
    /// Queue size at both ends of the central link, same as -q1 N -q2 N.
    #[arg(short, long, value_name = "SIZE")]
    pub queues: Option<u32>,
    /// Rerun the experiment stored in a metadata file.
    #[arg(long, value_name = "FILE")]
    pub from_metadata: Option<PathBuf>,
    /// Also write per-flow congestion state traces.
    #[arg(long)]
    pub trace: bool,
    /// Probability of dropping a record from sender captures.
    #[arg(long, value_name = "P")]
    pub capture_loss: Option<f64>,
    /// Delay between a delta boundary and the new delay taking effect at each router.
    #[arg(long, value_name = "DURATION", value_parser = duration_ms)]
    pub install_lag: Option<Duration>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Folder with metadata.json and the captures.
    #[arg(short, long, value_name = "DIR", default_value = "dumps")]
    pub dir: PathBuf,
    /// Folder for the data logs.
    #[arg(short, long, value_name = "OUTPUT_DIR", default_value = "graphs/data")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Folder with the data logs.
    #[arg(short, long, value_name = "DIR", default_value = "graphs/data")]
    pub dir: PathBuf,
    /// Folder for plots and statistics.
    #[arg(short, long, value_name = "OUTPUT_DIR", default_value = "graphs")]
    pub output_dir: PathBuf,
    /// One curve per flow.
    #[arg(short = 'f', long)]
    pub per_flow: bool,
    /// One curve for all flows together.
    #[arg(short, long)]
    pub total: bool,
    /// One curve per subset of flows sharing the listed fields (scheme, direction).
    #[arg(short = 's', long, value_name = "\"FIELD1 FIELD2...\"")]
    pub per_subset: Vec<String>,
    /// Aggregation interval of the average plots in seconds.
    #[arg(short, long, value_name = "SEC", default_value_t = crate::reporting::DEFAULT_INTERVAL)]
    pub interval: f64,
    /// Space-separated color cycle for the curves.
    #[arg(short, long, value_name = "\"COLOR1 COLOR2...\"")]
    pub colors: Option<String>,
    /// Color of the Jain's index curve; the first cycle color by default.
    #[arg(short, long, value_name = "COLOR")]
    pub jains_index_color: Option<String>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Clean all three directories, same as -pdg.
    #[arg(short, long)]
    pub all: bool,
    /// Clean the capture directory.
    #[arg(short, long, visible_alias = "pcaps")]
    pub pcap: bool,
    /// Clean the data-log directory.
    #[arg(short, long)]
    pub data: bool,
    /// Clean the graphs directory.
    #[arg(short, long, visible_alias = "graphs")]
    pub graph: bool,
    /// Among chosen files, delete those belonging to senders only.
    #[arg(short, long, visible_alias = "sender")]
    pub senders: bool,
    /// Among chosen files, delete those belonging to receivers only.
    #[arg(short, long, visible_alias = "receiver")]
    pub receivers: bool,
    /// Among chosen files, delete those common to senders and receivers.
    #[arg(short, long)]
    pub mutual: bool,
    /// Capture directory (-f1).
    #[arg(long, value_name = "FOLDER1", default_value = "dumps")]
    pub folder1: PathBuf,
    /// Data-log directory (-f2).
    #[arg(long, value_name = "FOLDER2", default_value = "graphs/data")]
    pub folder2: PathBuf,
    /// Graphs directory (-f3).
    #[arg(long, value_name = "FOLDER3", default_value = "graphs")]
    pub folder3: PathBuf,
}

/// Rewrites the two-character short options (`-q1`, `-f2`, ...) to their
/// long forms so the parser accepts them.
pub fn normalize_args<I, T>(args: I) -> Vec<OsString>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    const ALIASES: [(&str, &str); 5] = [
        ("-q1", "--first-queue"),
        ("-q2", "--second-queue"),
        ("-f1", "--folder1"),
        ("-f2", "--folder2"),
        ("-f3", "--folder3"),
    ];
    args.into_iter()
        .map(Into::into)
        .map(|arg| {
            let Some(s) = arg.to_str() else { return arg };
            for (short, long) in ALIASES {
                if s == short {
                    return long.into();
                }
                if let Some(value) = s.strip_prefix(short).and_then(|v| v.strip_prefix('=')) {
                    return format!("{long}={value}").into();
                }
            }
            arg
        })
        .collect()
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse_from(normalize_args(std::env::args_os()));
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                // Some errors already print their source.
                if !msg.ends_with(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze(a),
        Command::Plot(a) => plot(a),
        Command::Clean(a) => clean(a),
    }
}

fn run(a: RunArgs) -> anyhow::Result<()> {
    if a.buffer.is_some() {
        println!("Note: -b/--buffer has no effect, captures are written without a kernel buffer");
    }
    if a.pantheon.is_some() {
        println!("Note: -p/--pantheon has no effect, the schemes are built in");
    }
    let (mut params, groups) = match &a.from_metadata {
        Some(path) => {
            let meta = load_metadata(path)?;
            println!("Reproducing the experiment from {}", path.display());
            (meta.params, meta.groups)
        }
        None => {
            let (Some(base), Some(delta), Some(step)) = (a.base, a.delta, a.step) else {
                bail!("base, delta and step are required");
            };
            let mut p = RunParams::new(base, delta, step, a.seed.unwrap_or_else(wall_clock_seed));
            p.jitter = a.jitter.unwrap_or(Duration::ZERO);
            p.runtime = a.runtime;
            p.central_rate = a.rate;
            p.max_delay = a.max_delay;
            p.q1 = a.first_queue.or(a.queues).unwrap_or(config::DEFAULT_QUEUE);
            p.q2 = a.second_queue.or(a.queues).unwrap_or(config::DEFAULT_QUEUE);
            if let Some(lag) = a.install_lag {
                p.install_lag = lag;
            }
            if let Some(loss) = a.capture_loss {
                p.capture_loss = loss;
            }
            p.trace = a.trace;
            // Keep the runtime valid before a default layout is derived from it.
            config::validate(&p, &[])?;
            let (groups, created) = load_or_create_layout(&a.layout, p.runtime)?;
            if created {
                println!("Layout file {} did not exist and was created with example groups", a.layout.display());
            }
            (p, groups)
        }
    };
    if let Some(dir) = a.dir {
        params.output_dir = dir;
    } else if a.from_metadata.is_none() {
        params.output_dir = PathBuf::from("dumps");
    }
    println!("Testing:");
    println!("Total number of flows is {}", total_flows(&groups));
    println!("Seed is {}", params.seed);
    let report = run_experiment(&params, &groups, &mut |line| println!("{line}"))?;
    for i in &report.interfaces {
        if i.tail_drops > 0 {
            println!("  {}: {} packets dropped", i.name, i.tail_drops);
        }
    }
    println!("Done.");
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let mut last = None;
    analyze_dir(&a.dir, &a.output_dir, &mut |p| match p {
        Progress::Flow { number, scheme, direction } => {
            last = None;
            println!("Flow {number}: {scheme} {direction}");
        }
        Progress::Percent { percent, elapsed_secs } => {
            // One line per ten percent keeps logs readable.
            let decile = percent / 10;
            if last != Some(decile) {
                last = Some(decile);
                println!("  {percent:>3}% processed in {elapsed_secs:.2} s");
            }
        }
        Progress::Line(line) => println!("{line}"),
    })
    .with_context(|| format!("analyzing {}", a.dir.display()))?;
    println!("SUCCESS");
    Ok(())
}

fn plot(a: PlotArgs) -> anyhow::Result<()> {
    let mut reports = Vec::new();
    if a.per_flow {
        reports.push(ReportType::PerFlow);
    }
    if a.total {
        reports.push(ReportType::Total);
    }
    for fields in &a.per_subset {
        reports.push(ReportType::subset(fields)?);
    }
    if reports.is_empty() {
        bail!("choose at least one type of plots: -f/--per-flow, -t/--total or -s/--per-subset");
    }
    let palette = match &a.colors {
        Some(list) => Palette::parse(list)?,
        None => Palette::default(),
    };
    let jain_color = match &a.jains_index_color {
        Some(c) => parse_color(c)?,
        None => palette.color(0),
    };
    let options = PlotOptions {
        interval: a.interval,
        palette,
        jain_color,
    };
    plot_dir(&a.dir, &a.output_dir, &reports, &options, &mut |line| println!("{line}"))?;
    println!("SUCCESS");
    Ok(())
}

/// Which generated files a clean pass deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanFilter {
    pub senders: bool,
    pub receivers: bool,
    pub mutual: bool,
}

impl CleanFilter {
    pub const ALL: CleanFilter = CleanFilter {
        senders: true,
        receivers: true,
        mutual: true,
    };

    /// Whether `name` is a generated file selected by this filter.
    pub fn selects(&self, name: &str) -> bool {
        let generated = Path::new(name)
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e, "pcap" | "json" | "svg" | "png" | "log"));
        if !generated {
            return false;
        }
        if name.ends_with("-sender.pcap") {
            self.senders
        } else if name.ends_with("-receiver.pcap") {
            self.receivers
        } else {
            self.mutual
        }
    }
}

/// Deletes the selected files directly inside `dir`, then the directory
/// itself if that left it empty. A missing directory is not an error.
/// Returns the deleted files.
pub fn clean_dir(dir: &Path, filter: CleanFilter) -> crate::Result<Vec<PathBuf>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(crate::Error::io(dir, e)),
    };
    let mut victims = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| crate::Error::io(dir, e))?;
        let is_file = entry.file_type().map_err(|e| crate::Error::io(entry.path(), e))?.is_file();
        if is_file && filter.selects(&entry.file_name().to_string_lossy()) {
            victims.push(entry.path());
        }
    }
    victims.sort();
    for v in &victims {
        fs::remove_file(v).map_err(|e| crate::Error::io(v, e))?;
    }
    Ok(victims)
}

/// Deletes the chosen files of every folder, then removes the folders that
/// this cleaning emptied, innermost first. Returns the removed folders.
pub fn clean_dirs(dirs: &[&Path], filter: CleanFilter, report: &mut dyn FnMut(&Path, usize)) -> crate::Result<Vec<PathBuf>> {
    let mut touched = Vec::new();
    for &dir in dirs {
        let removed = clean_dir(dir, filter)?;
        report(dir, removed.len());
        if !removed.is_empty() {
            touched.push(dir.to_path_buf());
        }
    }
    let mut candidates: Vec<&Path> = dirs.to_vec();
    candidates.sort_by_key(|d| std::cmp::Reverse(d.components().count()));
    let mut gone = Vec::new();
    for dir in candidates {
        // A folder counts as emptied by us if files went from it or from a
        // folder below it.
        if !touched.iter().any(|t| t.starts_with(dir)) || gone.iter().any(|g: &PathBuf| g == dir) {
            continue;
        }
        let empty = match fs::read_dir(dir) {
            Ok(mut e) => e.next().is_none(),
            Err(_) => false,
        };
        if empty {
            fs::remove_dir(dir).map_err(|e| crate::Error::io(dir, e))?;
            gone.push(dir.to_path_buf());
        }
    }
    Ok(gone)
}

fn clean(a: CleanArgs) -> anyhow::Result<()> {
    let mut dirs = Vec::new();
    if a.all || a.pcap {
        dirs.push(a.folder1.as_path());
    }
    if a.all || a.data {
        dirs.push(a.folder2.as_path());
    }
    if a.all || a.graph {
        dirs.push(a.folder3.as_path());
    }
    if dirs.is_empty() {
        println!("No directory chosen: use -p, -d, -g or -a");
        return Ok(());
    }
    let filter = if a.senders || a.receivers || a.mutual {
        CleanFilter {
            senders: a.senders,
            receivers: a.receivers,
            mutual: a.mutual,
        }
    } else {
        CleanFilter::ALL
    };
    let gone = clean_dirs(&dirs, filter, &mut |dir, n| println!("{}: {n} files deleted", dir.display()))?;
    for dir in gone {
        println!("{}: directory was left empty and removed", dir.display());
    }
    Ok(())
}
