use dumbbell::analysis::FlowLog;
use dumbbell::config::Direction;
use dumbbell::reporting::{
    build_curves, emit_reports, jain_series, jains_index, max_end, rate_series, slot_bytes, slot_count, FlowData,
    PlotOptions, ReportType,
};
use proptest::prelude::*;

const SCHEMES: [&str; 3] = ["cubic", "vegas", "bbr"];

/// Packets as (gap s, delay s, size) turned into a log with ascending arrivals.
fn flow(number: usize, scheme: usize, leftward: bool, start: f64, packets: Vec<(f64, f64, u32)>, lost: u64) -> FlowData {
    let mut log = FlowLog::default();
    let mut t = start;
    for (gap, delay, size) in packets {
        t += gap;
        log.push(t, delay, size);
    }
    log.bytes_lost = lost;
    log.bytes_sent = log.bytes_received() + lost;
    FlowData {
        number,
        scheme: SCHEMES[scheme].into(),
        direction: if leftward { Direction::Leftward } else { Direction::Rightward },
        log,
    }
}

fn flows() -> impl Strategy<Value = Vec<FlowData>> {
    let one = (
        0..3usize,
        any::<bool>(),
        0.0..5.0f64,
        prop::collection::vec((0.0..0.05f64, 0.0..0.3f64, 40..1500u32), 0..200),
        0..20_000u64,
    );
    prop::collection::vec(one, 1..6).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (s, l, start, p, lost))| flow(i + 1, s, l, start, p, lost))
            .collect()
    })
}

fn reports() -> [ReportType; 4] {
    [
        ReportType::PerFlow,
        ReportType::Total,
        ReportType::subset("scheme").unwrap(),
        ReportType::subset("direction scheme").unwrap(),
    ]
}

proptest! {
    #[test]
    fn slots_hold_every_delivered_byte(flows in flows(), interval in 0.01..2.0f64) {
        for report in reports() {
            let curves = build_curves(&flows, &report);
            let slots = slot_count(max_end(&curves), interval);
            for c in &curves {
                let bytes = slot_bytes(c, &flows, interval, slots);
                prop_assert_eq!(bytes.iter().sum::<u64>(), c.bytes_received(&flows));
                let series = rate_series(c, &flows, interval, slots);
                let from_rates: f64 = series.slots.iter().flatten().map(|r| r * interval * 1e6 / 8.0).sum();
                prop_assert!((from_rates - c.bytes_received(&flows) as f64).abs() <= slots as f64);
            }
        }
    }

    #[test]
    fn curves_partition_the_flows(flows in flows()) {
        for report in reports() {
            let curves = build_curves(&flows, &report);
            let mut members: Vec<usize> = curves.iter().flat_map(|c| c.members.clone()).collect();
            members.sort_unstable();
            prop_assert_eq!(members, (0..flows.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn jain_stays_within_bounds(rates in prop::collection::vec(0.0..1e4f64, 1..40)) {
        let m = rates.len() as f64;
        match jains_index(&rates).unwrap() {
            Some(j) => prop_assert!(j >= 1.0 / m - 1e-12 && j <= 1.0 + 1e-12, "{}", j),
            None => prop_assert!(rates.iter().all(|r| *r == 0.0)),
        }
    }

    #[test]
    fn jain_slots_stay_within_bounds(flows in flows(), interval in 0.05..1.0f64) {
        let curves = build_curves(&flows, &ReportType::PerFlow);
        let slots = slot_count(max_end(&curves), interval);
        let rates: Vec<_> = curves.iter().map(|c| rate_series(c, &flows, interval, slots)).collect();
        let jain = jain_series(&curves, &rates, interval, slots);
        let m = curves.len() as f64;
        for j in jain.slots.iter().flatten() {
            prop_assert!(*j >= 1.0 / m - 1e-12 && *j <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn distinct_subsets_degenerate_to_flows(flows in flows()) {
        // Renumber schemes so every flow is alone in its subset.
        let flows: Vec<FlowData> = flows
            .into_iter()
            .enumerate()
            .map(|(i, mut f)| {
                f.scheme = format!("s{i:02}");
                f
            })
            .collect();
        let per_flow = build_curves(&flows, &ReportType::PerFlow);
        let per_subset = build_curves(&flows, &ReportType::subset("scheme").unwrap());
        let key = |c: &dumbbell::reporting::Curve| (c.members.clone(), c.start.map(f64::to_bits), c.end.map(f64::to_bits));
        let a: Vec<_> = per_flow.iter().map(key).collect();
        let b: Vec<_> = per_subset.iter().map(key).collect();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stats_do_not_depend_on_the_interval(flows in flows()) {
        let dir = tempfile::tempdir().unwrap();
        for report in reports() {
            let mut texts = Vec::new();
            for (k, interval) in [0.1, 0.5, 1.0].into_iter().enumerate() {
                let out = dir.path().join(k.to_string());
                let options = PlotOptions { interval, ..PlotOptions::default() };
                let written = emit_reports(&flows, &report, &out, &options, &mut |_| {}).unwrap();
                texts.push(std::fs::read_to_string(&written[3]).unwrap());
            }
            prop_assert_eq!(&texts[0], &texts[1]);
            prop_assert_eq!(&texts[1], &texts[2]);
        }
    }
}
