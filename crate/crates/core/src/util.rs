//! Small shared utilities: a deterministic PRNG for seeded scenarios and
//! tests, and an optional scoped-thread helper for data-parallel maps.
//!
//! The PRNG is hand-rolled (splitmix64) so that seeded runs are reproducible
//! bit-for-bit regardless of dependency versions.

/// Deterministic 64-bit PRNG (splitmix64).
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Worker count from the SIM_THREADS environment variable; absent or
/// unparsable means serial. Read once per process.
pub fn sim_threads() -> usize {
    static THREADS: std::sync::OnceLock<usize> = std::sync::OnceLock::new();
    *THREADS.get_or_init(|| match std::env::var("SIM_THREADS") {
        Ok(s) => s.trim().parse::<usize>().unwrap_or(1).max(1),
        Err(_) => 1,
    })
}

/// Applies `f` to disjoint chunks of `out`, optionally across scoped threads.
///
/// `f(chunk_start, chunk)` must write `chunk` as a pure function of its
/// index range, so the result is identical for any worker count. Reductions
/// must not use this; they stay serial to keep summation order fixed.
pub fn par_chunks(out: &mut [f64], threads: usize, f: impl Fn(usize, &mut [f64]) + Sync) {
    let n = out.len();
    if threads <= 1 || n < 4096 {
        f(0, out);
        return;
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|s| {
        for (idx, piece) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || f(idx * chunk, piece));
        }
    });
}
