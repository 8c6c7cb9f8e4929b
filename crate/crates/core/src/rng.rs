//! Counter-based random streams.
//!
//! Every random decision in the toolkit draws from an [`RngStream`] keyed by
//! `(master_seed, epoch, sample_index, operator)`. A stream's `n`-th value is
//! a pure function of its key and `n`, so results do not depend on which
//! thread processes which sample, or in what order.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 / MurmurHash3 finalizer (Stafford variant 13).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Odd increment with enough bit transitions, as in `SplittableRandom`.
#[inline]
fn mix_gamma(z: u64) -> u64 {
    let mut z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z = (z ^ (z >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z = (z ^ (z >> 33)) | 1;
    if (z ^ (z >> 1)).count_ones() < 24 {
        z ^= 0xaaaa_aaaa_aaaa_aaaa;
    }
    z
}

/// Which consumer a stream belongs to. Values are part of the reproducibility
/// contract and must not be renumbered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum OperatorTag {
    Shuffle = 1,
    Decision = 2,
    GaussianBlur = 3,
    GridDropout = 4,
    MixSame = 5,
    MixDiff = 6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub epoch: u64,
    pub sample_index: u64,
    pub tag: OperatorTag,
}

impl StreamKey {
    pub fn new(epoch: u64, sample_index: u64, tag: OperatorTag) -> Self {
        Self {
            epoch,
            sample_index,
            tag,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    base: u64,
    gamma: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, key: StreamKey) -> Self {
        let mut h = mix64(master_seed ^ 0x6b65_6570_6175_6721);
        h = mix64(h ^ key.epoch.wrapping_mul(GOLDEN_GAMMA));
        h = mix64(h ^ mix64(key.sample_index));
        h = mix64(h ^ (key.tag as u64));
        Self {
            base: h,
            gamma: mix_gamma(h.wrapping_add(GOLDEN_GAMMA)),
            counter: 0,
        }
    }

    /// Value at an arbitrary position, without advancing the stream.
    #[inline]
    pub fn value_at(&self, index: u64) -> u64 {
        mix64(self.base.wrapping_add(index.wrapping_add(1).wrapping_mul(self.gamma)))
    }

    /// Number of values drawn so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.value_at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform integer in `[0, bound)` (Lemire's multiply-shift with
    /// rejection). Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "RngStream::below called with bound 0");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn below_usize(&mut self, bound: usize) -> usize {
        self.below(bound as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.below_usize(items.len())])
        }
    }
}
