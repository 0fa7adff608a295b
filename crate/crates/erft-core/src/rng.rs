//! Counter-based randomness for reproducible, order-independent sampling.
//!
//! Each trial owns a stream keyed by `(master_seed, trial_index)`, so trials
//! are i.i.d. by construction and an ensemble can be evaluated in any order
//! or degree of parallelism with bit-identical aggregate results. The mixer
//! is the splitmix64 finalizer applied to `key + n * GOLDEN` for draw
//! counter `n`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic stream of fair bits for one trial.
#[derive(Debug, Clone)]
pub struct CoinStream {
    key: u64,
    counter: u64,
}

impl CoinStream {
    pub fn for_trial(master_seed: u64, trial_index: u64) -> Self {
        let key = mix(master_seed ^ mix(trial_index.wrapping_mul(GOLDEN) ^ 0xA076_1D64_78BD_642F));
        CoinStream { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter += 1;
        out
    }

    /// One fair bit.
    pub fn bit(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Source of fair bits for the ontic engine: either a pseudo-random trial
/// stream or a fixed word used by exhaustive enumeration.
pub trait BitSource {
    fn bit(&mut self) -> bool;
}

impl BitSource for CoinStream {
    fn bit(&mut self) -> bool {
        CoinStream::bit(self)
    }
}

/// Replays the binary digits of a fixed word, least significant first.
/// Enumerating all words of the right width visits every combination of
/// initial phases and coins exactly once.
#[derive(Debug, Clone)]
pub struct FixedBits {
    word: u64,
    position: u32,
    width: u32,
}

impl FixedBits {
    pub fn new(word: u64, width: u32) -> Self {
        assert!(width <= 64);
        FixedBits {
            word,
            position: 0,
            width,
        }
    }
}

impl BitSource for FixedBits {
    fn bit(&mut self) -> bool {
        assert!(
            self.position < self.width,
            "enumeration underestimated the bit budget"
        );
        let bit = self.word >> self.position & 1 == 1;
        self.position += 1;
        bit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_keys_reproduce_identical_streams() {
        let mut a = CoinStream::for_trial(7, 42);
        let mut b = CoinStream::for_trial(7, 42);
        for _ in 0..256 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_trials_decorrelate() {
        let mut a = CoinStream::for_trial(7, 0);
        let mut b = CoinStream::for_trial(7, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn bits_are_roughly_balanced() {
        let mut ones = 0usize;
        let trials = 10_000;
        for i in 0..trials {
            let mut s = CoinStream::for_trial(123, i);
            if s.bit() {
                ones += 1;
            }
        }
        let frac = ones as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.02, "first-bit bias: {frac}");
    }

    #[test]
    fn fixed_bits_replay_the_word() {
        let mut src = FixedBits::new(0b1011, 4);
        assert!(src.bit());
        assert!(src.bit());
        assert!(!src.bit());
        assert!(src.bit());
    }
}
