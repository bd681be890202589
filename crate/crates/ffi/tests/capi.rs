use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dumbbell_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn c_path(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn last_error() -> String {
    let p = dbl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn jains_index_statuses() {
    let mut j = 0.0;
    unsafe {
        assert_eq!(dbl_jains_index([5.0, 5.0, 5.0].as_ptr(), 3, &mut j), DblStatus::Ok);
        assert_eq!(j, 1.0);
        assert!(dbl_last_error().is_null());
        assert_eq!(dbl_jains_index([1.0, 0.0, 0.0, 0.0].as_ptr(), 4, &mut j), DblStatus::Ok);
        assert_eq!(j, 0.25);
        assert_eq!(dbl_jains_index([0.0, 0.0].as_ptr(), 2, &mut j), DblStatus::Undefined);
        assert!(last_error().contains("zero"));
        assert_eq!(dbl_jains_index([1.0].as_ptr(), 0, &mut j), DblStatus::InvalidArgument);
        assert_eq!(dbl_jains_index([-1.0].as_ptr(), 1, &mut j), DblStatus::InvalidArgument);
        assert_eq!(dbl_jains_index(ptr::null(), 1, &mut j), DblStatus::NullPointer);
        assert_eq!(dbl_jains_index([1.0].as_ptr(), 1, ptr::null_mut()), DblStatus::NullPointer);
    }
}

#[test]
fn durations() {
    let mut ns = 0;
    unsafe {
        assert_eq!(dbl_parse_duration(c("30ms").as_ptr(), 1_000_000, &mut ns), DblStatus::Ok);
        assert_eq!(ns, 30_000_000);
        assert_eq!(dbl_parse_duration(c("250").as_ptr(), 1_000, &mut ns), DblStatus::Ok);
        assert_eq!(ns, 250_000);
        assert_eq!(dbl_parse_duration(c("1.5s").as_ptr(), 1, &mut ns), DblStatus::Ok);
        assert_eq!(ns, 1_500_000_000);
        assert_eq!(dbl_parse_duration(c("ten ms").as_ptr(), 1, &mut ns), DblStatus::InvalidArgument);
        assert!(last_error().contains("ten ms"));
        assert_eq!(dbl_parse_duration(ptr::null(), 1, &mut ns), DblStatus::NullPointer);
    }
}

#[test]
fn square_wave_schedule() {
    let ms = 1_000_000;
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(dbl_schedule_new(0, 150 * ms, 140 * ms, 140 * ms, 3, 9, &mut s), DblStatus::Ok);
        let mut n = 0;
        assert_eq!(dbl_schedule_len(s, &mut n), DblStatus::Ok);
        assert_eq!(n, 20);
        for k in 0..n {
            let mut v = 0;
            assert_eq!(dbl_schedule_value(s, k, &mut v), DblStatus::Ok);
            assert_eq!(v, if k % 2 == 0 { 0 } else { 140 * ms });
        }
        let mut v = 0;
        assert_eq!(dbl_schedule_value(s, n, &mut v), DblStatus::OutOfRange);
        dbl_schedule_free(s);
        dbl_schedule_free(ptr::null_mut());
        assert_eq!(dbl_schedule_new(0, 150 * ms, 0, 0, 61, 1, &mut s), DblStatus::InvalidArgument);
        assert!(last_error().contains("runtime"));
    }
}

#[test]
fn pipeline_through_the_c_api() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("layout.yml");
    std::fs::write(&layout, "- scheme: cubic\n  flows: 1\n  start: 0\n  direction: ->\n").unwrap();
    let (dumps, data, graphs) = (dir.path().join("dumps"), dir.path().join("data"), dir.path().join("graphs"));
    let mut cfg = std::mem::MaybeUninit::<DblRunConfig>::uninit();
    unsafe {
        assert_eq!(dbl_run_config_default(cfg.as_mut_ptr()), DblStatus::Ok);
        let mut cfg = cfg.assume_init();
        assert_eq!((cfg.runtime_s, cfg.central_rate, cfg.q1), (30, 100.0, 1000));
        cfg.runtime_s = 2;
        cfg.base_ns = 10_000_000;
        cfg.central_rate = 20.0;
        cfg.seed = 3;
        assert_eq!(dbl_run(&cfg, c_path(&layout).as_ptr(), c_path(&dumps).as_ptr()), DblStatus::Ok);
        assert_eq!(dbl_analyze(c_path(&dumps).as_ptr(), c_path(&data).as_ptr()), DblStatus::Ok);
        let fields = c("scheme direction");
        assert_eq!(
            dbl_plot(c_path(&data).as_ptr(), c_path(&graphs).as_ptr(), DBL_REPORT_TOTAL, fields.as_ptr(), 0.5),
            DblStatus::Ok
        );
        assert!(graphs.join("total-stats.log").is_file());
        assert!(graphs.join("per-scheme-direction-ppt-delay.svg").is_file());

        let mut log = ptr::null_mut();
        assert_eq!(dbl_flow_log_load(c_path(&data.join("data-1.log")).as_ptr(), &mut log), DblStatus::Ok);
        let (mut n, mut lost, mut sent) = (0, 0, 0);
        assert_eq!(dbl_flow_log_len(log, &mut n), DblStatus::Ok);
        assert_eq!(dbl_flow_log_bytes(log, &mut lost, &mut sent), DblStatus::Ok);
        assert!(n > 100);
        let (mut a, mut d, mut size) = (0.0, 0.0, 0);
        let mut received = 0u64;
        for i in 0..n {
            assert_eq!(dbl_flow_log_packet(log, i, &mut a, &mut d, &mut size), DblStatus::Ok);
            assert!(d >= 0.01, "delay {d}");
            received += size as u64;
        }
        assert_eq!(received + lost, sent);
        assert_eq!(dbl_flow_log_packet(log, n, &mut a, &mut d, &mut size), DblStatus::OutOfRange);
        dbl_flow_log_free(log);

        // Same metadata, same captures.
        let again = dir.path().join("again");
        let meta = c_path(&dumps.join("metadata.json"));
        assert_eq!(dbl_run_metadata(meta.as_ptr(), c_path(&again).as_ptr()), DblStatus::Ok);
        for name in ["1-cubic-sender.pcap", "1-cubic-receiver.pcap"] {
            assert_eq!(std::fs::read(dumps.join(name)).unwrap(), std::fs::read(again.join(name)).unwrap());
        }
    }
}

#[test]
fn failures_carry_messages() {
    let dir = tempfile::tempdir().unwrap();
    let missing = c_path(&dir.path().join("nothing"));
    let mut log = ptr::null_mut();
    unsafe {
        assert_eq!(dbl_analyze(missing.as_ptr(), missing.as_ptr()), DblStatus::Io);
        assert!(last_error().contains("metadata.json"));
        assert_eq!(dbl_flow_log_load(missing.as_ptr(), &mut log), DblStatus::Io);
        assert!(log.is_null());
        let bad = dir.path().join("bad.log");
        std::fs::write(&bad, "[1, 2]\n").unwrap();
        assert_eq!(dbl_flow_log_load(c_path(&bad).as_ptr(), &mut log), DblStatus::Malformed);
        assert_eq!(dbl_plot(missing.as_ptr(), missing.as_ptr(), 0, ptr::null(), 0.5), DblStatus::InvalidArgument);
        assert_eq!(
            dbl_plot(missing.as_ptr(), missing.as_ptr(), DBL_REPORT_TOTAL, c("rate").as_ptr(), 0.5),
            DblStatus::InvalidArgument
        );
        assert!(last_error().contains("rate"));
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dumbbell.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["dbl_jains_index", "dbl_schedule_new", "dbl_run", "dbl_analyze", "dbl_plot", "dbl_flow_log_free"] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from the header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler, syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
