//! Fixed-width bit strings and variable-width seeds.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A bit string of length at most 64, stored right-aligned in a `u64`.
///
/// Bucket addresses and palette color strings are short (their width is a
/// slowly growing function of `log log` of the maximum degree), so a single
/// word is always enough.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BitStr {
    len: u32,
    bits: u64,
}

impl BitStr {
    pub const EMPTY: BitStr = BitStr { len: 0, bits: 0 };

    /// Builds a string of `len` bits from the low `len` bits of `bits`.
    pub fn new(len: u32, bits: u64) -> BitStr {
        assert!(len <= 64, "bit string too long");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        BitStr { len, bits: bits & mask }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.bits
    }

    /// True iff `self` is a prefix of `other` (every string prefixes itself).
    pub fn is_prefix_of(&self, other: &BitStr) -> bool {
        self.len <= other.len && (other.bits >> (other.len - self.len)) == self.bits
    }

    /// The first `len` bits of `self`.
    pub fn prefix(&self, len: u32) -> BitStr {
        assert!(len <= self.len, "prefix longer than string");
        BitStr { len, bits: self.bits >> (self.len - len) }
    }

    /// Appends `extra` bits of `ext` on the right.
    pub fn extend(&self, ext: u64, extra: u32) -> BitStr {
        BitStr::new(self.len + extra, (self.bits << extra) | ext)
    }
}

impl fmt::Debug for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.len).rev() {
            write!(f, "{}", (self.bits >> i) & 1)?;
        }
        if self.len == 0 {
            write!(f, "ε")?;
        }
        Ok(())
    }
}

/// A seed of `len` bits, packed little-endian into `u64` words.
///
/// Bit 0 is the most significant bit: for seed spaces small enough to
/// enumerate, the seed with index `i` is the `len`-bit binary expansion
/// of `i`, so a prefix of the seed selects a contiguous range of indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Seed {
    len: u32,
    words: Vec<u64>,
}

impl Seed {
    pub fn zero(len: u32) -> Seed {
        Seed { len, words: alloc::vec![0u64; ((len as usize) + 63) / 64] }
    }

    /// The `len`-bit seed whose bits are the binary expansion of `index`.
    /// Requires `len <= 64`.
    pub fn from_index(len: u32, index: u64) -> Seed {
        assert!(len <= 64, "indexable seeds fit one word");
        if len < 64 {
            assert!(index < (1u64 << len), "index out of range");
        }
        let mut s = Seed::zero(len);
        for i in 0..len {
            if (index >> (len - 1 - i)) & 1 == 1 {
                s.set_bit(i);
            }
        }
        s
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: u32) -> u64 {
        debug_assert!(i < self.len);
        (self.words[(i / 64) as usize] >> (i % 64)) & 1
    }

    pub fn set_bit(&mut self, i: u32) {
        debug_assert!(i < self.len);
        self.words[(i / 64) as usize] |= 1u64 << (i % 64);
    }

    /// Reads `width <= 64` bits starting at bit `start` as an integer,
    /// most significant bit first.  Bits past the end read as zero.
    pub fn chunk(&self, start: u32, width: u32) -> u64 {
        debug_assert!(width <= 64);
        let mut v = 0u64;
        for i in 0..width {
            v <<= 1;
            if start + i < self.len {
                v |= self.bit(start + i);
            }
        }
        v
    }

    pub fn to_hex(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        let nibbles = ((self.len as usize) + 3) / 4;
        for nb in 0..nibbles.max(1) {
            let mut v = 0u64;
            for j in 0..4 {
                let i = (nb * 4 + j) as u32;
                v <<= 1;
                if i < self.len {
                    v |= self.bit(i);
                }
            }
            write!(out, "{v:x}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_semantics() {
        let a = BitStr::new(3, 0b101);
        let b = BitStr::new(5, 0b10110);
        assert!(a.is_prefix_of(&b));
        assert!(a.is_prefix_of(&a));
        assert!(!b.is_prefix_of(&a));
        assert!(BitStr::EMPTY.is_prefix_of(&a));
        assert_eq!(b.prefix(3), a);
        assert_eq!(a.extend(0b10, 2), b);
        let c = BitStr::new(3, 0b100);
        assert!(!c.is_prefix_of(&b));
    }

    #[test]
    fn seed_index_roundtrip() {
        let s = Seed::from_index(5, 0b10110);
        assert_eq!(s.bit(0), 1);
        assert_eq!(s.bit(1), 0);
        assert_eq!(s.bit(4), 0);
        assert_eq!(s.chunk(0, 5), 0b10110);
        assert_eq!(s.chunk(1, 3), 0b011);
        // reads past the end are zero-padded
        assert_eq!(s.chunk(3, 4), 0b1000);
    }

    #[test]
    fn hex_is_msb_first() {
        let s = Seed::from_index(8, 0xa5);
        assert_eq!(s.to_hex(), "a5");
    }
}
