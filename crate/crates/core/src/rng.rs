//! Small deterministic PRNG used wherever reproducibility is contractual.
//!
//! SplitMix64 is used instead of an external RNG crate so that seeded outputs
//! are stable across dependency upgrades. Per-ray streams are derived by
//! hashing (seed, sensor, ray) so any subset of rays reproduces the full run.

/// SplitMix64 generator (public-domain algorithm by Sebastiano Vigna).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive an independent stream from a seed and a list of stream ids.
    pub fn derive(seed: u64, ids: &[u64]) -> Self {
        let mut s = Self::new(seed);
        let mut mix = s.next_u64();
        for &id in ids {
            mix ^= id.wrapping_mul(0x9e37_79b9_7f4a_7c15);
            s = Self::new(mix);
            mix = s.next_u64();
        }
        Self::new(mix)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        // 53 mantissa bits
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn next_usize(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let a: Vec<u64> = (0..8).map(|_| 0).scan(SplitMix64::new(7), |r, _| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(SplitMix64::new(7), |r, _| Some(r.next_u64())).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = (0..8).map(|_| 0).scan(SplitMix64::new(8), |r, _| Some(r.next_u64())).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn derive_separates_streams() {
        let mut a = SplitMix64::derive(1, &[0, 5]);
        let mut b = SplitMix64::derive(1, &[0, 6]);
        let mut a2 = SplitMix64::derive(1, &[0, 5]);
        assert_ne!(a.next_u64(), b.next_u64());
        let mut a = SplitMix64::derive(1, &[0, 5]);
        assert_eq!(a.next_u64(), a2.next_u64());
    }

    #[test]
    fn uniform_in_range() {
        let mut r = SplitMix64::new(3);
        for _ in 0..1000 {
            let x = r.uniform(2.0, 5.0);
            assert!((2.0..5.0).contains(&x));
        }
    }
}
