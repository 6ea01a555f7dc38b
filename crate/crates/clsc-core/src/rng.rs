//! Counter-based random stream.
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so the k-th
//! draw of a stream never depends on how many draws other streams made.
//! That keeps simulation traces bit-identical across policies that replan
//! a different number of times.

/// SplitMix64 finaliser; full-period bijective mixer on `u64`.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed, stateless random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Raw 64-bit draw for `(stream, counter)`.
    pub fn draw(&self, stream: u64, counter: u64) -> u64 {
        // Two mixing rounds decorrelate the key components.
        mix(mix(self.seed ^ mix(stream)).wrapping_add(counter))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn unit(&self, stream: u64, counter: u64) -> f64 {
        (self.draw(stream, counter) >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform draw in `[lo, hi)`; returns `lo` for a degenerate interval.
    pub fn uniform(&self, stream: u64, counter: u64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        lo + (hi - lo) * self.unit(stream, counter)
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn uniform_usize(&self, stream: u64, counter: u64, lo: usize, hi: usize) -> usize {
        if hi <= lo {
            return lo;
        }
        let span = (hi - lo + 1) as u64;
        lo + (self.draw(stream, counter) % span) as usize
    }
}

/// Stable stream id from a label; used to split streams by parameter class.
pub fn stream_id(label: &str) -> u64 {
    // FNV-1a; stability across platforms matters, speed does not.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}
