//! Fixed-width bitstrings.
//!
//! Bits are indexed from 0 to n-1 with index 0 printed leftmost. The packed
//! `u64` value stores bit 0 in the most significant used position, so the
//! integer order of values is the lexicographic order of the printed strings
//! and a string's value doubles as its vertex id.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported string width.
pub const MAX_BITS: usize = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u8,
    value: u64,
}

impl BitString {
    pub fn zeros(len: usize) -> Result<Self> {
        Self::from_value(0, len)
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::from_value(mask(len), len)
    }

    pub fn from_value(value: u64, len: usize) -> Result<Self> {
        if len > MAX_BITS {
            return Err(Error::validation(format!(
                "bitstring width {len} exceeds the supported maximum {MAX_BITS}"
            )));
        }
        if value & !mask(len) != 0 {
            return Err(Error::validation(format!(
                "value {value} does not fit in {len} bits"
            )));
        }
        Ok(Self {
            len: len as u8,
            value,
        })
    }

    /// Builds from individual bits, index 0 first.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut value = 0u64;
        for &b in bits {
            value = (value << 1) | b as u64;
        }
        Self::from_value(value, bits.len())
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    fn shift(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    pub fn get(&self, i: usize) -> Result<bool> {
        self.check_index(i)?;
        Ok(self.bit(i))
    }

    /// Unchecked read; `i` must be `< len`.
    pub(crate) fn bit(&self, i: usize) -> bool {
        (self.value >> self.shift(i)) & 1 == 1
    }

    pub fn with_bit(&self, i: usize, b: bool) -> Result<Self> {
        self.check_index(i)?;
        let m = 1u64 << self.shift(i);
        let value = if b { self.value | m } else { self.value & !m };
        Ok(Self {
            len: self.len,
            value,
        })
    }

    pub fn flip(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        Ok(Self {
            len: self.len,
            value: self.value ^ (1u64 << self.shift(i)),
        })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::validation(format!(
                "bit index {i} out of range for a {}-bit string",
                self.len
            )));
        }
        Ok(())
    }

    /// `x|_J`: the bits at positions `j`, in the order given by `j`.
    pub fn restrict(&self, j: &[usize]) -> Result<Self> {
        for &i in j {
            self.check_index(i)?;
        }
        Ok(self.restrict_unchecked(j))
    }

    pub(crate) fn restrict_unchecked(&self, j: &[usize]) -> Self {
        let mut value = 0u64;
        for &i in j {
            value = (value << 1) | self.bit(i) as u64;
        }
        Self {
            len: j.len() as u8,
            value,
        }
    }

    /// Overwrites positions `j` with the bits of `pattern` (which is read in
    /// `j` order). Indices must be in range and `pattern.len() == j.len()`.
    pub(crate) fn replace_unchecked(&self, j: &[usize], pattern: u64) -> Self {
        let k = j.len();
        let mut value = self.value;
        for (pos, &i) in j.iter().enumerate() {
            let b = (pattern >> (k - 1 - pos)) & 1;
            let m = 1u64 << self.shift(i);
            value = if b == 1 { value | m } else { value & !m };
        }
        Self {
            len: self.len,
            value,
        }
    }

    /// `x || y`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let len = self.len() + other.len();
        if len > MAX_BITS {
            return Err(Error::validation(format!(
                "concatenation width {len} exceeds {MAX_BITS}"
            )));
        }
        let value = if other.is_empty() {
            self.value
        } else {
            (self.value << other.len()) | other.value
        };
        Ok(Self {
            len: len as u8,
            value,
        })
    }

    /// The sub-string of bits `[start, start+len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let j: Vec<usize> = (start..start + len).collect();
        self.restrict(&j)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    pub fn contains_substring(&self, pat: &str) -> bool {
        self.to_string().contains(pat)
    }
}

pub(crate) fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::validation(format!("invalid bit {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
