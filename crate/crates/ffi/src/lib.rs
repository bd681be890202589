//! C ABI for the dumbbell emulator.
//!
//! Every function returns a [`DblStatus`]. On failure a message is kept per
//! thread and can be read with [`dbl_last_error`]. Objects cross the boundary
//! as opaque handles that the caller frees with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dumbbell::analysis::{analyze_dir, FlowLog};
use dumbbell::config::{self, Duration, RunParams};
use dumbbell::emulator::{generate_delay_schedule, run_experiment, VariableDelaySchedule};
use dumbbell::reporting::{jains_index, plot_dir, PlotOptions, ReportType};
use dumbbell::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DblStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Malformed = 4,
    /// The value is mathematically undefined, e.g. Jain's index of all zeros.
    Undefined = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Report-type bits for [`dbl_plot`].
pub const DBL_REPORT_PER_FLOW: u32 = 1;
pub const DBL_REPORT_TOTAL: u32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DblStatus, String);

fn status_of(e: &Error) -> DblStatus {
    match e {
        Error::Io { .. } => DblStatus::Io,
        Error::Capture { .. }
        | Error::UnsupportedLinkType { .. }
        | Error::Metadata(_)
        | Error::Layout { .. }
        | Error::DigestCollision { .. } => DblStatus::Malformed,
        Error::Flow { reason, .. } if reason.contains("missing") => DblStatus::Io,
        _ => DblStatus::InvalidArgument,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording its failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DblStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DblStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DblStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DblStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DblStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// The last error of the calling thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn dbl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Jain's fairness index of `len` rates.
///
/// # Safety
/// `rates` must point to `len` readable doubles and `out` to a writable one.
#[no_mangle]
pub unsafe extern "C" fn dbl_jains_index(rates: *const f64, len: usize, out_index: *mut f64) -> DblStatus {
    guard(|| {
        if rates.is_null() {
            return Err(null("rates"));
        }
        let out_index = out(out_index, "out_index")?;
        let values = std::slice::from_raw_parts(rates, len);
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Failure(DblStatus::InvalidArgument, "rates must be finite and non-negative".into()));
        }
        match jains_index(values)? {
            Some(j) => {
                *out_index = j;
                Ok(())
            }
            None => Err(Failure(DblStatus::Undefined, "every rate is zero".into())),
        }
    })
}

/// Parses `N`, `Nus`, `Nms` or `Ns`; a bare number is in `default_unit_ns`.
///
/// # Safety
/// `text` must be a nul-terminated string and `out_ns` writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_parse_duration(text: *const c_char, default_unit_ns: u64, out_ns: *mut u64) -> DblStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out_ns = out(out_ns, "out_ns")?;
        *out_ns = Duration::parse_with_default_unit(text, default_unit_ns)?.as_nanos();
        Ok(())
    })
}

/// Opaque central-delay schedule.
pub struct DblSchedule(VariableDelaySchedule);

/// Builds the per-delta central delay schedule.
///
/// # Safety
/// `out_schedule` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_schedule_new(
    base_ns: u64,
    delta_ns: u64,
    step_ns: u64,
    max_delay_ns: u64,
    runtime_s: u32,
    seed: u64,
    out_schedule: *mut *mut DblSchedule,
) -> DblStatus {
    guard(|| {
        let out_schedule = out(out_schedule, "out_schedule")?;
        let mut p = RunParams::new(
            Duration::from_nanos(base_ns),
            Duration::from_nanos(delta_ns),
            Duration::from_nanos(step_ns),
            seed,
        );
        p.max_delay = Duration::from_nanos(max_delay_ns);
        p.runtime = runtime_s;
        config::validate(&p, &[])?;
        *out_schedule = Box::into_raw(Box::new(DblSchedule(generate_delay_schedule(&p))));
        Ok(())
    })
}

/// Number of delta intervals.
///
/// # Safety
/// `schedule` must come from [`dbl_schedule_new`]; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_schedule_len(schedule: *const DblSchedule, out_len: *mut usize) -> DblStatus {
    guard(|| {
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        *out(out_len, "out_len")? = s.0.values.len();
        Ok(())
    })
}

/// Delay of interval `k` in nanoseconds.
///
/// # Safety
/// `schedule` must come from [`dbl_schedule_new`]; `out_ns` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_schedule_value(schedule: *const DblSchedule, k: usize, out_ns: *mut u64) -> DblStatus {
    guard(|| {
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        let out_ns = out(out_ns, "out_ns")?;
        let v = s.0.values.get(k).ok_or_else(|| {
            Failure(DblStatus::OutOfRange, format!("interval {k} of {}", s.0.values.len()))
        })?;
        *out_ns = v.as_nanos();
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from [`dbl_schedule_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dbl_schedule_free(schedule: *mut DblSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Run parameters. Durations are nanoseconds.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DblRunConfig {
    pub base_ns: u64,
    pub delta_ns: u64,
    pub step_ns: u64,
    pub jitter_ns: u64,
    pub runtime_s: u32,
    /// Mbit/s; zero leaves the central link unshaped.
    pub central_rate: f64,
    pub max_delay_ns: u64,
    pub seed: u64,
    pub q1: u32,
    pub q2: u32,
}

/// Fills `config` with the defaults: constant zero delay, 30 s, 100 Mbit/s.
///
/// # Safety
/// `config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_run_config_default(config: *mut DblRunConfig) -> DblStatus {
    guard(|| {
        let p = RunParams::new(Duration::ZERO, Duration::from_secs(100), Duration::ZERO, 0);
        *out(config, "config")? = DblRunConfig {
            base_ns: p.base.as_nanos(),
            delta_ns: p.delta.as_nanos(),
            step_ns: p.step.as_nanos(),
            jitter_ns: p.jitter.as_nanos(),
            runtime_s: p.runtime,
            central_rate: p.central_rate,
            max_delay_ns: p.max_delay.as_nanos(),
            seed: p.seed,
            q1: p.q1,
            q2: p.q2,
        };
        Ok(())
    })
}

/// Runs the experiment described by `config` and the layout file, writing
/// metadata and captures to `output_dir`. A missing layout is created with
/// the example groups.
///
/// # Safety
/// `config` must be readable; the paths must be nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dbl_run(
    config: *const DblRunConfig,
    layout_path: *const c_char,
    output_dir: *const c_char,
) -> DblStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let layout = PathBuf::from(str_arg(layout_path, "layout_path")?);
        let dir = PathBuf::from(str_arg(output_dir, "output_dir")?);
        let mut p = RunParams::new(
            Duration::from_nanos(c.base_ns),
            Duration::from_nanos(c.delta_ns),
            Duration::from_nanos(c.step_ns),
            c.seed,
        );
        p.jitter = Duration::from_nanos(c.jitter_ns);
        p.runtime = c.runtime_s;
        p.central_rate = c.central_rate;
        p.max_delay = Duration::from_nanos(c.max_delay_ns);
        p.q1 = c.q1;
        p.q2 = c.q2;
        p.output_dir = dir;
        config::validate(&p, &[])?;
        let (groups, _) = config::load_or_create_layout(&layout, p.runtime)?;
        run_experiment(&p, &groups, &mut |_| {})?;
        Ok(())
    })
}

/// Reruns the experiment saved in a metadata file into `output_dir`.
///
/// # Safety
/// The paths must be nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dbl_run_metadata(metadata_path: *const c_char, output_dir: *const c_char) -> DblStatus {
    guard(|| {
        let meta = config::load_metadata(&PathBuf::from(str_arg(metadata_path, "metadata_path")?))?;
        let mut p = meta.params;
        p.output_dir = PathBuf::from(str_arg(output_dir, "output_dir")?);
        run_experiment(&p, &meta.groups, &mut |_| {})?;
        Ok(())
    })
}

/// Writes one flow log per flow of the captures in `input_dir`.
///
/// # Safety
/// The paths must be nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dbl_analyze(input_dir: *const c_char, output_dir: *const c_char) -> DblStatus {
    guard(|| {
        let input = PathBuf::from(str_arg(input_dir, "input_dir")?);
        let output = PathBuf::from(str_arg(output_dir, "output_dir")?);
        analyze_dir(&input, &output, &mut |_| {})?;
        Ok(())
    })
}

/// Emits plots and statistics. `reports` is a set of `DBL_REPORT_*` bits;
/// `subset_fields` (may be null) adds a per-subset report such as
/// `"scheme direction"`. Colors are the defaults.
///
/// # Safety
/// The paths must be nul-terminated strings; `subset_fields` may be null.
#[no_mangle]
pub unsafe extern "C" fn dbl_plot(
    input_dir: *const c_char,
    output_dir: *const c_char,
    reports: u32,
    subset_fields: *const c_char,
    interval_s: f64,
) -> DblStatus {
    guard(|| {
        let input = PathBuf::from(str_arg(input_dir, "input_dir")?);
        let output = PathBuf::from(str_arg(output_dir, "output_dir")?);
        let mut types = Vec::new();
        if reports & DBL_REPORT_PER_FLOW != 0 {
            types.push(ReportType::PerFlow);
        }
        if reports & DBL_REPORT_TOTAL != 0 {
            types.push(ReportType::Total);
        }
        if !subset_fields.is_null() {
            types.push(ReportType::subset(str_arg(subset_fields, "subset_fields")?)?);
        }
        let options = PlotOptions {
            interval: interval_s,
            ..PlotOptions::default()
        };
        plot_dir(&input, &output, &types, &options, &mut |_| {})?;
        Ok(())
    })
}

/// Opaque flow log.
pub struct DblFlowLog(FlowLog);

/// Loads a `data-<n>.log` file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out_log` writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_flow_log_load(path: *const c_char, out_log: *mut *mut DblFlowLog) -> DblStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let out_log = out(out_log, "out_log")?;
        let log = FlowLog::load(&path).map_err(|e| match e {
            Error::Io { .. } => Failure::from(e),
            other => Failure(DblStatus::Malformed, other.to_string()),
        })?;
        *out_log = Box::into_raw(Box::new(DblFlowLog(log)));
        Ok(())
    })
}

/// Number of received packets.
///
/// # Safety
/// `log` must come from [`dbl_flow_log_load`]; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_flow_log_len(log: *const DblFlowLog, out_len: *mut usize) -> DblStatus {
    guard(|| {
        let l = log.as_ref().ok_or_else(|| null("log"))?;
        *out(out_len, "out_len")? = l.0.arrivals.len();
        Ok(())
    })
}

/// Lost and sent byte totals.
///
/// # Safety
/// `log` must come from [`dbl_flow_log_load`]; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_flow_log_bytes(
    log: *const DblFlowLog,
    out_lost: *mut u64,
    out_sent: *mut u64,
) -> DblStatus {
    guard(|| {
        let l = log.as_ref().ok_or_else(|| null("log"))?;
        let lost = out(out_lost, "out_lost")?;
        let sent = out(out_sent, "out_sent")?;
        *lost = l.0.bytes_lost;
        *sent = l.0.bytes_sent;
        Ok(())
    })
}

/// Arrival (s), one-way delay (s) and size (bytes) of packet `i`.
///
/// # Safety
/// `log` must come from [`dbl_flow_log_load`]; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn dbl_flow_log_packet(
    log: *const DblFlowLog,
    i: usize,
    out_arrival: *mut f64,
    out_delay: *mut f64,
    out_size: *mut u32,
) -> DblStatus {
    guard(|| {
        let l = &log.as_ref().ok_or_else(|| null("log"))?.0;
        let (a, d, s) = (out(out_arrival, "out_arrival")?, out(out_delay, "out_delay")?, out(out_size, "out_size")?);
        if i >= l.arrivals.len() {
            return Err(Failure(DblStatus::OutOfRange, format!("packet {i} of {}", l.arrivals.len())));
        }
        *a = l.arrivals[i];
        *d = l.delays[i];
        *s = l.sizes[i];
        Ok(())
    })
}

/// # Safety
/// `log` must come from [`dbl_flow_log_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dbl_flow_log_free(log: *mut DblFlowLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
