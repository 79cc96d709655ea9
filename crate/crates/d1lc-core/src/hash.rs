//! k-wise independent hash families from random polynomials.
//!
//! A family member is a degree-(k-1) polynomial over GF(p), where p is
//! the smallest prime at least `max(domain_size, 2^range_bits)`.  The
//! seed supplies the k coefficients as consecutive chunks of
//! `ceil(log2 p)` bits, each reduced mod p.  Outputs are field values
//! folded into `range_bits` bits; shorter outputs are most-significant
//! prefixes, so a function's shorter outputs are always consistent with
//! its longer ones.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::{BitStr, Seed};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HashError {
    BadParameter(&'static str),
    PrefixTooLong { prefix: u32, seed_bits: u32 },
    LenOutOfRange { len: u32, range_bits: u32 },
    TooLargeToEnumerate,
}

impl fmt::Display for HashError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HashError::BadParameter(what) => write!(f, "bad parameter: {what}"),
            HashError::PrefixTooLong { prefix, seed_bits } => {
                write!(f, "prefix of {prefix} bits exceeds seed length {seed_bits}")
            }
            HashError::LenOutOfRange { len, range_bits } => {
                write!(f, "requested {len} output bits, family provides {range_bits}")
            }
            HashError::TooLargeToEnumerate => write!(f, "family too large to enumerate"),
        }
    }
}

fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    if x % 2 == 0 {
        return x == 2;
    }
    let mut d = 3u64;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn next_prime(mut x: u64) -> u64 {
    while !is_prime(x) {
        x += 1;
    }
    x
}

#[derive(Clone, Debug)]
pub struct HashFamily {
    k: u32,
    prime: u64,
    domain_size: u64,
    range_bits: u32,
    chunk_bits: u32,
}

impl HashFamily {
    /// A k-wise independent family over `0..domain_size` producing
    /// `range_bits`-bit outputs.
    pub fn new(k: u32, domain_size: u64, range_bits: u32) -> Result<HashFamily, HashError> {
        if k == 0 {
            return Err(HashError::BadParameter("independence k must be positive"));
        }
        if domain_size == 0 {
            return Err(HashError::BadParameter("empty domain"));
        }
        if range_bits == 0 || range_bits > 40 {
            return Err(HashError::BadParameter("range_bits must be in 1..=40"));
        }
        if domain_size > 1 << 40 {
            return Err(HashError::BadParameter("domain too large"));
        }
        let prime = next_prime(domain_size.max(1u64 << range_bits));
        let chunk_bits = 64 - (prime - 1).leading_zeros();
        Ok(HashFamily { k, prime, domain_size, range_bits, chunk_bits })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn domain_size(&self) -> u64 {
        self.domain_size
    }

    pub fn range_bits(&self) -> u32 {
        self.range_bits
    }

    /// Seed length in bits: one `ceil(log2 p)` chunk per coefficient.
    pub fn seed_bits(&self) -> u32 {
        self.k * self.chunk_bits
    }

    pub fn chunk_bits(&self) -> u32 {
        self.chunk_bits
    }

    fn coefficients(&self, seed: &Seed) -> Vec<u64> {
        (0..self.k)
            .map(|j| seed.chunk(j * self.chunk_bits, self.chunk_bits) % self.prime)
            .collect()
    }

    fn eval_coeffs(&self, coeffs: &[u64], x: u64) -> u64 {
        // Horner, highest coefficient first.
        let p = self.prime as u128;
        let mut acc = 0u128;
        for &a in coeffs.iter().rev() {
            acc = (acc * x as u128 + a as u128) % p;
        }
        acc as u64
    }

    /// Raw field output in `0..p`.
    pub fn eval_field(&self, seed: &Seed, x: u64) -> u64 {
        debug_assert!(x < self.domain_size, "input outside domain");
        self.eval_coeffs(&self.coefficients(seed), x)
    }

    /// Output folded to `range_bits` bits.
    pub fn eval(&self, seed: &Seed, x: u64) -> u64 {
        self.eval_field(seed, x) & ((1u64 << self.range_bits) - 1)
    }

    /// The `len` most significant bits of the folded output.
    pub fn eval_bits(&self, seed: &Seed, x: u64, len: u32) -> Result<BitStr, HashError> {
        if len > self.range_bits {
            return Err(HashError::LenOutOfRange { len, range_bits: self.range_bits });
        }
        Ok(BitStr::new(len, self.eval(seed, x) >> (self.range_bits - len)))
    }

    /// All seeds extending `prefix` to the full seed length, in index
    /// order.  Refused when the completion count does not fit in a word.
    pub fn seed_iter(&self, prefix: &Seed) -> Result<SeedIter<'_>, HashError> {
        if prefix.len() > self.seed_bits() {
            return Err(HashError::PrefixTooLong {
                prefix: prefix.len(),
                seed_bits: self.seed_bits(),
            });
        }
        let free = self.seed_bits() - prefix.len();
        if free > 48 {
            return Err(HashError::TooLargeToEnumerate);
        }
        Ok(SeedIter { family: self, prefix: prefix.clone(), next: 0, end: 1u64 << free })
    }

    /// Exhaustively verifies k-wise independence over `inputs` by
    /// sweeping the coefficient space `[0,p)^k`: every k-tuple of
    /// distinct inputs must take each field value combination exactly
    /// `p^(k-t)` times, and the folded outputs of the first input are
    /// histogrammed to expose the mod-2^range_bits bias.
    pub fn independence_test(
        &self,
        inputs: &[u64],
        max_enumeration: u64,
    ) -> Result<IndependenceReport, HashError> {
        if inputs.is_empty() {
            return Err(HashError::BadParameter("no inputs"));
        }
        let k = self.k as usize;
        let mut space = 1u64;
        for _ in 0..k {
            space = space
                .checked_mul(self.prime)
                .filter(|&s| s <= max_enumeration)
                .ok_or(HashError::TooLargeToEnumerate)?;
        }
        let t = k.min(inputs.len());
        let tuples = combinations(inputs, t);
        let mut counts: Vec<BTreeMap<Vec<u64>, u64>> =
            alloc::vec![BTreeMap::new(); tuples.len()];
        let mut histogram = alloc::vec![0u64; 1usize << self.range_bits];
        let mut coeffs = alloc::vec![0u64; k];
        loop {
            for (tuple, count) in tuples.iter().zip(counts.iter_mut()) {
                let outputs: Vec<u64> =
                    tuple.iter().map(|&x| self.eval_coeffs(&coeffs, x)).collect();
                *count.entry(outputs).or_insert(0) += 1;
            }
            let folded = self.eval_coeffs(&coeffs, inputs[0]) & ((1u64 << self.range_bits) - 1);
            histogram[folded as usize] += 1;
            // odometer over [0,p)^k
            let mut j = 0;
            loop {
                if j == k {
                    break;
                }
                coeffs[j] += 1;
                if coeffs[j] < self.prime {
                    break;
                }
                coeffs[j] = 0;
                j += 1;
            }
            if j == k {
                break;
            }
        }
        let mut expected = space;
        for _ in 0..t {
            expected /= self.prime;
        }
        let mut exact = true;
        for count in &counts {
            // missing value combinations count as zero occurrences
            let combos = pow_u64(self.prime, t as u32);
            if count.len() as u64 != combos {
                exact = false;
            }
            if count.values().any(|&c| c != expected) {
                exact = false;
            }
        }
        let per_seed = space / pow_u64(self.prime, 1);
        let bit_histogram: Vec<u64> = histogram.iter().map(|&c| c / per_seed.max(1)).collect();
        let bias_exact = histogram.iter().all(|&c| c % per_seed.max(1) == 0);
        Ok(IndependenceReport {
            coefficient_space: space,
            tuples_checked: tuples.len() as u64,
            exact: exact && bias_exact,
            bit_histogram,
        })
    }
}

fn pow_u64(b: u64, e: u32) -> u64 {
    (0..e).fold(1u64, |a, _| a * b)
}

fn combinations(items: &[u64], t: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..t).collect();
    if t == 0 || t > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // advance the combination
        let mut j = t;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if idx[j] + 1 <= items.len() - (t - j) {
                idx[j] += 1;
                for l in j + 1..t {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Outcome of [`HashFamily::independence_test`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndependenceReport {
    /// Size of the swept coefficient space, `p^k`.
    pub coefficient_space: u64,
    pub tuples_checked: u64,
    /// True iff all tuple distributions were exactly uniform over the
    /// field and folding bias matched the exact residue counts.
    pub exact: bool,
    /// Per folded value: occurrences among the `p` field values,
    /// i.e. the count of residues in `[0,p)` congruent to the value.
    pub bit_histogram: Vec<u64>,
}

pub struct SeedIter<'a> {
    family: &'a HashFamily,
    prefix: Seed,
    next: u64,
    end: u64,
}

impl Iterator for SeedIter<'_> {
    type Item = Seed;

    fn next(&mut self) -> Option<Seed> {
        if self.next >= self.end {
            return None;
        }
        let total = self.family.seed_bits();
        let free = total - self.prefix.len();
        let mut s = Seed::zero(total);
        for i in 0..self.prefix.len() {
            if self.prefix.bit(i) == 1 {
                s.set_bit(i);
            }
        }
        for i in 0..free {
            if (self.next >> (free - 1 - i)) & 1 == 1 {
                s.set_bit(self.prefix.len() + i);
            }
        }
        self.next += 1;
        Some(s)
    }
}
