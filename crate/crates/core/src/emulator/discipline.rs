use std::collections::VecDeque;

use crate::config::Duration;
use crate::rng::SplitMix64;

/// Egress shaping of one interface, after NetEm: every packet gets a send
/// time `max(now + delay + jitter, previous send time) + transmission time`
/// when it is enqueued, and the queue holds it until then. The queue limit
/// counts every packet held, whether it is waiting for the link or for its
/// delay to expire; arrivals beyond it are tail-dropped.
#[derive(Debug, Clone)]
pub struct LinkDiscipline {
    /// Mbit/s; zero leaves the interface unshaped.
    pub rate: f64,
    pub delay: Duration,
    pub jitter: Duration,
    pub queue_capacity: u32,
    queue: VecDeque<Queued>,
    last_send: u64,
    pub tail_drops: u64,
    pub peak_occupancy: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Queued {
    pub id: u64,
    pub enqueued: u64,
    pub send_time: u64,
}

impl LinkDiscipline {
    pub fn new(rate: f64, delay: Duration, jitter: Duration, queue_capacity: u32) -> Self {
        LinkDiscipline {
            rate,
            delay,
            jitter,
            queue_capacity,
            queue: VecDeque::new(),
            last_send: 0,
            tail_drops: 0,
            peak_occupancy: 0,
        }
    }

    /// Nanoseconds needed to put `bytes` on the wire.
    pub fn transmission_time(&self, bytes: u32) -> u64 {
        if self.rate > 0.0 {
            (bytes as f64 * 8000.0 / self.rate).round() as u64
        } else {
            0
        }
    }

    /// Accepts packet `id` at `now` and returns its send time, or `None` when
    /// the queue is full. `rng` is only consulted when jitter is set.
    pub fn enqueue(&mut self, now: u64, id: u64, bytes: u32, rng: &mut SplitMix64) -> Option<u64> {
        if self.queue.len() >= self.queue_capacity as usize {
            self.tail_drops += 1;
            return None;
        }
        let mut delay = self.delay.as_nanos() as i128;
        if !self.jitter.is_zero() {
            delay += rng.symmetric(self.jitter.as_nanos()) as i128;
        }
        let ready = now as i128 + delay.max(0);
        let send_time = (ready as u64).max(self.last_send) + self.transmission_time(bytes);
        self.last_send = send_time;
        self.queue.push_back(Queued {
            id,
            enqueued: now,
            send_time,
        });
        self.peak_occupancy = self.peak_occupancy.max(self.queue.len() as u32);
        Some(send_time)
    }

    /// Removes the head packet; its send time must have come.
    pub fn dequeue(&mut self, now: u64) -> Option<Queued> {
        match self.queue.front() {
            Some(q) if q.send_time <= now => self.queue.pop_front(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn queued(&self) -> impl Iterator<Item = &Queued> {
        self.queue.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn back_to_back_serialization() {
        // 1500 bytes at 100 Mbit/s is 120 us on the wire.
        let mut d = LinkDiscipline::new(100.0, Duration::ZERO, Duration::ZERO, 1000);
        let mut rng = SplitMix64::new(0);
        let times: Vec<u64> = (0..10).map(|i| d.enqueue(0, i, 1500, &mut rng).unwrap()).collect();
        for w in times.windows(2) {
            assert_eq!(w[1] - w[0], 120_000);
        }
        assert_eq!(times[0], 120_000);
    }

    #[test]
    fn tail_drop_at_capacity() {
        let mut d = LinkDiscipline::new(0.0, Duration::from_millis(10), Duration::ZERO, 3);
        let mut rng = SplitMix64::new(0);
        for i in 0..3 {
            assert!(d.enqueue(0, i, 1500, &mut rng).is_some());
        }
        assert!(d.enqueue(0, 3, 1500, &mut rng).is_none());
        assert_eq!(d.tail_drops, 1);
        assert_eq!(d.peak_occupancy, 3);
        assert!(d.dequeue(9_999_999).is_none());
        assert_eq!(d.dequeue(10_000_000).unwrap().id, 0);
        assert!(d.enqueue(10_000_000, 4, 1500, &mut rng).is_some());
    }

    #[test]
    fn delay_change_keeps_sampled_send_times() {
        // Two-packet hand simulation: the first packet is enqueued under a
        // 5 ms delay, then the delay rises to 20 ms.
        let mut d = LinkDiscipline::new(0.0, Duration::from_millis(5), Duration::ZERO, 10);
        let mut rng = SplitMix64::new(0);
        assert_eq!(d.enqueue(0, 0, 1500, &mut rng), Some(5_000_000));
        d.delay = Duration::from_millis(20);
        assert_eq!(d.enqueue(1_000_000, 1, 1500, &mut rng), Some(21_000_000));
        // Lowering it again never lets a later packet overtake.
        d.delay = Duration::ZERO;
        assert_eq!(d.enqueue(2_000_000, 2, 1500, &mut rng), Some(21_000_000));
    }

    proptest! {
        #[test]
        fn fifo_with_jitter(
            arrivals in proptest::collection::vec(0u64..1_000_000, 1..200),
            jitter_us in 0u64..5_000,
            rate in prop_oneof![Just(0.0), 1.0f64..1000.0],
            seed in any::<u64>(),
        ) {
            let mut sorted = arrivals.clone();
            sorted.sort_unstable();
            let mut d = LinkDiscipline::new(rate, Duration::from_millis(2), Duration::from_micros(jitter_us), 10_000);
            let mut rng = SplitMix64::new(seed);
            let mut sends = Vec::new();
            for (i, t) in sorted.iter().enumerate() {
                sends.push((d.enqueue(*t, i as u64, 1500, &mut rng).unwrap(), i as u64));
            }
            prop_assert!(sends.windows(2).all(|w| w[0].0 <= w[1].0));
            let mut out = Vec::new();
            while let Some(q) = d.dequeue(u64::MAX) {
                out.push(q.id);
            }
            prop_assert_eq!(out, (0..sorted.len() as u64).collect::<Vec<_>>());
        }
    }
}
