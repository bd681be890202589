use crate::config::{Duration, RunParams};
use crate::rng::{SplitMix64, Stream};

/// Central-link delays, one per `delta` interval of the runtime, generated
/// before the run starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDelaySchedule {
    pub base: Duration,
    pub delta: Duration,
    pub step: Duration,
    pub seed: u64,
    pub max_delay: Duration,
    pub values: Vec<Duration>,
}

impl VariableDelaySchedule {
    /// Delay in effect during interval `k` (the last value persists).
    pub fn value(&self, k: usize) -> Duration {
        self.values.get(k).or(self.values.last()).copied().unwrap_or(self.base)
    }

    /// Start of each interval after the first, paired with its delay.
    pub fn changes(&self) -> impl Iterator<Item = (u64, Duration)> + '_ {
        let delta = self.delta.as_nanos();
        self.values.iter().enumerate().skip(1).map(move |(k, &d)| (k as u64 * delta, d))
    }
}

/// Walks from `base` by `±step` per interval, choosing the sign with a fair
/// coin. A step that would leave `[0, max_delay]` takes the other sign; if
/// both leave the range the value saturates at the bound it ran into.
pub fn generate_delay_schedule(params: &RunParams) -> VariableDelaySchedule {
    let runtime = Duration::from_secs(params.runtime as u64).as_nanos();
    let delta = params.delta.as_nanos().max(1);
    let count = if delta > runtime { 1 } else { runtime.div_ceil(delta) as usize };
    let (base, step, max) = (params.base.as_nanos(), params.step.as_nanos(), params.max_delay.as_nanos());

    let mut rng = SplitMix64::for_stream(params.seed, Stream::DelaySchedule);
    let mut values = Vec::with_capacity(count);
    let mut current = base.min(max);
    values.push(Duration::from_nanos(current));
    for _ in 1..count {
        let up = rng.coin();
        let raised = current.checked_add(step).filter(|&v| v <= max);
        let lowered = current.checked_sub(step);
        current = match (up, raised, lowered) {
            (true, Some(v), _) => v,
            (true, None, Some(v)) => v,
            (true, None, None) => max,
            (false, _, Some(v)) => v,
            (false, Some(v), None) => v,
            (false, None, None) => 0,
        };
        values.push(Duration::from_nanos(current));
    }
    VariableDelaySchedule {
        base: params.base,
        delta: params.delta,
        step: params.step,
        seed: params.seed,
        max_delay: params.max_delay,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(base_ms: u64, delta_ms: u64, step_ms: u64, max_ms: u64, runtime: u32, seed: u64) -> RunParams {
        let mut p = RunParams::new(
            Duration::from_millis(base_ms),
            Duration::from_millis(delta_ms),
            Duration::from_millis(step_ms),
            seed,
        );
        p.max_delay = Duration::from_millis(max_ms);
        p.runtime = runtime;
        p
    }

    #[test]
    fn square_wave_regardless_of_seed() {
        for seed in [0, 1, 3, 42, u64::MAX] {
            let s = generate_delay_schedule(&params(0, 150, 140, 140, 10, seed));
            assert_eq!(s.values.len(), 67);
            for (k, v) in s.values.iter().enumerate() {
                let expected = if k % 2 == 0 { 0 } else { 140 };
                assert_eq!(*v, Duration::from_millis(expected), "seed {seed} k {k}");
            }
        }
    }

    #[test]
    fn constant_when_delta_exceeds_runtime() {
        let s = generate_delay_schedule(&params(8, 100_000, 10, 100_000, 10, 7));
        assert_eq!(s.values, vec![Duration::from_millis(8)]);
        assert_eq!(s.changes().count(), 0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let p = params(30, 500, 10, 100_000, 30, 3);
        let a = generate_delay_schedule(&p);
        let b = generate_delay_schedule(&p);
        assert_eq!(a, b);
        assert_eq!(a.values[0], Duration::from_millis(30));
        let other = generate_delay_schedule(&params(30, 500, 10, 100_000, 30, 4));
        assert_ne!(a.values, other.values);
    }

    #[test]
    fn saturates_when_step_exceeds_range() {
        // max 5 ms, step 10 ms: neither sign fits from 3 ms.
        let s = generate_delay_schedule(&params(3, 10, 10, 5, 1, 9));
        for v in &s.values[1..] {
            assert!(*v == Duration::ZERO || *v == Duration::from_millis(5));
        }
    }

    proptest! {
        #[test]
        fn values_stay_in_bounds(
            base in 0u64..200, step in 0u64..200, extra in 0u64..200,
            delta in 10u64..2000, runtime in 1u32..=60, seed in any::<u64>()
        ) {
            let max = base.max(step) + extra;
            let s = generate_delay_schedule(&params(base, delta, step, max, runtime, seed));
            prop_assert_eq!(s.values[0], Duration::from_millis(base));
            let expected_len = if delta > runtime as u64 * 1000 { 1 } else { (runtime as u64 * 1000).div_ceil(delta) as usize };
            prop_assert_eq!(s.values.len(), expected_len);
            for w in s.values.windows(2) {
                prop_assert!(w[1] <= Duration::from_millis(max));
                let diff = w[0].as_nanos().abs_diff(w[1].as_nanos());
                // A full step unless clamped at a bound.
                let at_bound = w[1] == Duration::ZERO || w[1] == Duration::from_millis(max);
                prop_assert!(diff == step * 1_000_000 || at_bound);
            }
        }
    }
}
