//! Seed selection by the method of conditional expectations.
//!
//! The cost of a seed is the sum of per-node indicator costs supplied by
//! the caller.  Exact mode evaluates every seed of the family once and
//! then fixes the seed a batch of bits at a time, always descending into
//! the half-space (more generally, batch range) of smallest average
//! cost; the chosen seed therefore costs no more than the family
//! average.  For seed spaces too large to sweep, a deterministic sampled
//! search takes the best of a fixed number of pseudorandom seeds.

use alloc::vec::Vec;
use core::fmt;

use crate::bits::Seed;
use crate::hash::HashFamily;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DerandError {
    TooLargeToEnumerate { seed_bits: u32, cap: u64 },
    NoSamples,
}

impl fmt::Display for DerandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerandError::TooLargeToEnumerate { seed_bits, cap } => {
                write!(f, "2^{seed_bits} seeds exceed enumeration cap {cap}")
            }
            DerandError::NoSamples => write!(f, "sample size must be positive"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum DerandMode {
    /// Full sweep with conditional-expectation descent.
    Exact,
    /// Best of N pseudorandom seeds.
    Sampled,
}

/// A selected seed together with its provenance.
#[derive(Clone, Debug)]
pub struct DerandResult {
    pub seed: Seed,
    pub achieved_cost: f64,
    /// Average cost over the full family (exact mode) or over the
    /// sampled seeds (sampled mode).
    pub family_mean: f64,
    pub evaluations: u64,
    pub mode: DerandMode,
}

/// Exhaustive conditional-expectation descent.
///
/// `batch_bits` seed bits are fixed per step (each step corresponds to
/// one broadcast-and-aggregate exchange); ties between batch values are
/// broken toward the numerically smallest value.
pub fn derandomize_exact(
    family: &HashFamily,
    cost: &mut dyn FnMut(&Seed) -> f64,
    batch_bits: u32,
    max_enumeration: u64,
) -> Result<DerandResult, DerandError> {
    let s = family.seed_bits();
    if s >= 63 || (1u64 << s) > max_enumeration {
        return Err(DerandError::TooLargeToEnumerate { seed_bits: s, cap: max_enumeration });
    }
    let total = 1u64 << s;
    let costs: Vec<f64> = (0..total).map(|i| cost(&Seed::from_index(s, i))).collect();
    // prefix sums make every range mean one subtraction
    let mut acc = alloc::vec![0.0f64; costs.len() + 1];
    for (i, &c) in costs.iter().enumerate() {
        acc[i + 1] = acc[i] + c;
    }
    let range_mean = |lo: u64, hi: u64| (acc[hi as usize] - acc[lo as usize]) / (hi - lo) as f64;
    let family_mean = range_mean(0, total);

    let batch = batch_bits.max(1);
    let mut fixed = 0u32;
    let mut lo = 0u64;
    let mut hi = total;
    while fixed < s {
        let step = batch.min(s - fixed);
        let width = (hi - lo) >> step;
        let mut best_value = 0u64;
        let mut best_mean = f64::INFINITY;
        for value in 0..(1u64 << step) {
            let m = range_mean(lo + value * width, lo + (value + 1) * width);
            if m < best_mean {
                best_mean = m;
                best_value = value;
            }
        }
        lo += best_value * width;
        hi = lo + width;
        fixed += step;
    }
    debug_assert_eq!(hi, lo + 1);
    Ok(DerandResult {
        seed: Seed::from_index(s, lo),
        achieved_cost: costs[lo as usize],
        family_mean,
        evaluations: total,
        mode: DerandMode::Exact,
    })
}

/// Deterministic sampled search: evaluates `samples` seeds drawn from a
/// splitmix64 stream and keeps the first one of minimum cost.
pub fn derandomize_sampled(
    family: &HashFamily,
    cost: &mut dyn FnMut(&Seed) -> f64,
    samples: u32,
    rng_seed: u64,
) -> Result<DerandResult, DerandError> {
    if samples == 0 {
        return Err(DerandError::NoSamples);
    }
    let s = family.seed_bits();
    let mut rng = SplitMix64::new(rng_seed);
    let mut best: Option<(Seed, f64)> = None;
    let mut sum = 0.0f64;
    for _ in 0..samples {
        let seed = random_seed(s, &mut rng);
        let c = cost(&seed);
        sum += c;
        if best.as_ref().map_or(true, |(_, b)| c < *b) {
            best = Some((seed, c));
        }
    }
    let (seed, achieved_cost) = best.unwrap();
    Ok(DerandResult {
        seed,
        achieved_cost,
        family_mean: sum / samples as f64,
        evaluations: samples as u64,
        mode: DerandMode::Sampled,
    })
}

fn random_seed(bits: u32, rng: &mut SplitMix64) -> Seed {
    let mut seed = Seed::zero(bits);
    for i in 0..bits {
        if rng.next_u64() & 1 == 1 {
            seed.set_bit(i);
        }
    }
    seed
}

pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> HashFamily {
        HashFamily::new(2, 8, 3).unwrap() // p = 11, 8 seed bits
    }

    #[test]
    fn exact_beats_family_mean() {
        let f = family();
        // cost favors seeds whose hash of 0 is small
        let mut cost = |seed: &Seed| f.eval(seed, 0) as f64 + (f.eval(seed, 5) % 3) as f64;
        let r = derandomize_exact(&f, &mut cost, 2, 1 << 20).unwrap();
        assert!(r.achieved_cost <= r.family_mean + 1e-9);
        assert_eq!(r.evaluations, 1u64 << f.seed_bits());
        assert_eq!(r.mode, DerandMode::Exact);
        // re-evaluating the chosen seed reproduces the recorded cost
        assert_eq!(cost(&r.seed), r.achieved_cost);
    }

    #[test]
    fn exact_finds_global_min_with_full_batch() {
        let f = family();
        let mut cost = |seed: &Seed| ((f.eval_field(seed, 3) * 7) % 13) as f64;
        let whole = f.seed_bits();
        let r = derandomize_exact(&f, &mut cost, whole, 1 << 20).unwrap();
        let best = (0..1u64 << whole)
            .map(|i| cost(&Seed::from_index(whole, i)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.achieved_cost, best);
    }

    #[test]
    fn exact_ties_break_low() {
        let f = family();
        let mut cost = |_: &Seed| 1.0;
        let r = derandomize_exact(&f, &mut cost, 3, 1 << 20).unwrap();
        assert_eq!(r.seed, Seed::from_index(f.seed_bits(), 0));
    }

    #[test]
    fn exact_respects_cap() {
        let f = family();
        let err = derandomize_exact(&f, &mut |_| 0.0, 1, 100).unwrap_err();
        assert!(matches!(err, DerandError::TooLargeToEnumerate { .. }));
    }

    #[test]
    fn sampled_is_deterministic_and_no_worse_than_its_pool() {
        let f = family();
        let mut cost = |seed: &Seed| f.eval(seed, 1) as f64;
        let a = derandomize_sampled(&f, &mut cost, 16, 42).unwrap();
        let b = derandomize_sampled(&f, &mut cost, 16, 42).unwrap();
        assert_eq!(a.seed, b.seed);
        assert!(a.achieved_cost <= a.family_mean + 1e-9);
        assert_eq!(a.mode, DerandMode::Sampled);
    }
}
