//! SplitMix64, the generator behind every random decision in a run.
//!
//! The algorithm is fixed so that schedules and jitter sequences can be
//! reproduced bit-for-bit by other implementations:
//!
//! ```text
//! state += 0x9e3779b97f4a7c15
//! z = state
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! return z ^ (z >> 31)
//! ```
//!
//! Independent streams are derived by xoring the run seed with a per-purpose
//! salt (see [`Stream`]).

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

/// Per-purpose salts applied to the run seed.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    DelaySchedule,
    Jitter,
    CaptureLoss,
}

impl Stream {
    fn salt(self) -> u64 {
        match self {
            Stream::DelaySchedule => 0,
            Stream::Jitter => 0x6a09_e667_f3bc_c908,
            Stream::CaptureLoss => 0xbb67_ae85_84ca_a73b,
        }
    }
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn for_stream(seed: u64, stream: Stream) -> Self {
        SplitMix64::new(seed ^ stream.salt())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Fair coin taken from the most significant bit.
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform double in `[0, 1)` built from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[-bound, bound]`.
    pub fn symmetric(&mut self, bound: u64) -> i64 {
        if bound == 0 {
            return 0;
        }
        let span = 2 * bound + 1;
        (self.next_u64() % span) as i64 - bound as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vector() {
        // Published SplitMix64 outputs for seed 1234567.
        let mut rng = SplitMix64::new(1_234_567);
        assert_eq!(rng.next_u64(), 6_457_827_717_110_365_317);
        assert_eq!(rng.next_u64(), 3_203_168_211_198_807_973);
        assert_eq!(rng.next_u64(), 9_817_491_932_198_370_423);
    }

    #[test]
    fn unit_interval() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn symmetric_bounds() {
        let mut rng = SplitMix64::new(9);
        for _ in 0..10_000 {
            let v = rng.symmetric(5);
            assert!((-5..=5).contains(&v));
        }
        assert_eq!(rng.symmetric(0), 0);
    }
}
