//! Deterministic random streams.
//!
//! Every random choice in the crate goes through [`XorShift64Star`] seeded via
//! [`splitmix64`], so patterns and samples are reproducible across platforms and
//! crate versions.

use std::collections::BTreeSet;

/// One round of the splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; stable across runs and platforms.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// xorshift64* generator.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    /// Seeds the generator through splitmix64; a zero state is remapped.
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { 0x9E37_79B9_7F4A_7C15 } else { s },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // rejection to avoid modulo bias
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal variate (Box-Muller, one output per call).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `k` distinct indices from `0..n`, uniformly, returned ascending.
    /// Returns all of `0..n` when `k >= n`.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        if k >= n {
            return (0..n).collect();
        }
        // Floyd's algorithm
        let mut chosen = BTreeSet::new();
        for j in (n - k)..n {
            let t = self.below(j as u64 + 1) as usize;
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}

/// Purpose tags for independent evaluation streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Queries,
    VerificationDistractors,
    RetrievalDistractors,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Queries => 1,
            Purpose::VerificationDistractors => 2,
            Purpose::RetrievalDistractors => 3,
        }
    }
}

/// Stream for one (sequence, repetition, purpose) unit. The seed depends only on
/// its inputs, never on the order in which units are evaluated.
pub fn derive_rng(master_seed: u64, sequence_id: &str, rep: u32, purpose: Purpose) -> XorShift64Star {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ stable_hash(sequence_id.as_bytes()));
    h = splitmix64(h ^ u64::from(rep));
    h = splitmix64(h ^ purpose.tag());
    XorShift64Star::new(h)
}
