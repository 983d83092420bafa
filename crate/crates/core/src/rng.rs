//! Keyed, splittable random streams.
//!
//! A stream is a ChaCha8 generator whose key is derived from
//! `(seed, purpose, channel)` and whose 64-bit stream id is the path index.
//! Path `i` therefore sees the same numbers regardless of how paths are
//! scheduled across workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Purpose tags separating independent estimator families under one seed.
pub mod purpose {
    pub const HEAT_CONTENT: u64 = 0x51;
    pub const MU: u64 = 0x4d55;
    pub const PILOT: u64 = 0x5049;
    pub const TAIL: u64 = 0x5441;
    pub const MOMENT: u64 = 0x4d4f;
    pub const FUNCTIONAL: u64 = 0x4651;
    pub const GEOMETRY: u64 = 0x47;
    pub const CONSTANTS: u64 = 0x43;
    pub const CLOCK_MOMENTS: u64 = 0x434d;
}

/// Channels within one path, so that start points, increments and clocks
/// stay aligned under common random numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Start = 1,
    Increments = 2,
    Clock = 3,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Stream `stream` of the generator keyed by `key`.
    pub fn new(key: u64, stream: u64) -> Self {
        let mut state = key;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Stream for path `index` of an estimator identified by `(seed, purpose)`.
    pub fn for_path(seed: u64, purpose: u64, channel: Channel, index: u64) -> Self {
        let mut state = seed ^ purpose.rotate_left(17);
        let a = splitmix64(&mut state);
        let mut state = a ^ (channel as u64).rotate_left(41);
        Self::new(splitmix64(&mut state), index)
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    #[inline]
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }

    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        // Lemire's multiply-shift; the bias is below 2^-64 * n.
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// The three per-path streams of one estimator family.
#[derive(Clone, Debug)]
pub struct PathStreams {
    pub start: RngStream,
    pub increments: RngStream,
    pub clock: RngStream,
}

impl PathStreams {
    pub fn new(seed: u64, purpose: u64, index: u64) -> Self {
        Self {
            start: RngStream::for_path(seed, purpose, Channel::Start, index),
            increments: RngStream::for_path(seed, purpose, Channel::Increments, index),
            clock: RngStream::for_path(seed, purpose, Channel::Clock, index),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_stream() {
        let mut a = RngStream::for_path(7, purpose::MU, Channel::Increments, 3);
        let mut b = RngStream::for_path(7, purpose::MU, Channel::Increments, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn neighbouring_keys_differ() {
        let draw = |seed, purpose, channel, index| {
            RngStream::for_path(seed, purpose, channel, index).next_u64()
        };
        let base = draw(7, purpose::MU, Channel::Increments, 3);
        assert_ne!(base, draw(8, purpose::MU, Channel::Increments, 3));
        assert_ne!(base, draw(7, purpose::TAIL, Channel::Increments, 3));
        assert_ne!(base, draw(7, purpose::MU, Channel::Start, 3));
        assert_ne!(base, draw(7, purpose::MU, Channel::Increments, 4));
    }

    #[test]
    fn uniform_is_open() {
        let mut r = RngStream::new(1, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 3.0 * (1.0f64 / 12.0 / n as f64).sqrt());
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = RngStream::new(2, 0);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[r.below(5) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 5.0 * 90.0);
        }
    }
}
