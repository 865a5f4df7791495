//! Explicit-length bit strings.
//!
//! Membership vectors, sort keys and z-order keys are all carried as
//! [`BitString`]s. Bit 0 is the most significant bit.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An ordered sequence of bits with an explicit length. The empty string is valid.
///
/// The derived `Ord` is lexicographic (a proper prefix sorts first), which is
/// what prefix-keyed level maps want. Use [`BitString::numeric_cmp`] to compare
/// strings as unsigned big-endian integers.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit string {input:?}: expected only '0' and '1'")]
pub struct ParseBitStringError {
    input: String,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The low `width` bits of `value`, most significant first.
    ///
    /// Bits of `value` above `width` are dropped; callers check range first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        let bits = (0..width)
            .rev()
            .map(|i| i < 64 && (value >> i) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, index: usize) -> Option<bool> {
        self.bits.get(index).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// The first `n` bits. Saturates at the full string when `n > len`.
    pub fn prefix(&self, n: usize) -> BitString {
        Self {
            bits: self.bits[..n.min(self.bits.len())].to_vec(),
        }
    }

    pub fn starts_with(&self, prefix: &BitString) -> bool {
        self.bits.starts_with(&prefix.bits)
    }

    /// Length of the longest prefix shared with `other`.
    pub fn common_prefix_len(&self, other: &BitString) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Compare as unsigned big-endian integers; leading zeros are insignificant.
    pub fn numeric_cmp(&self, other: &BitString) -> Ordering {
        let a = self.significant();
        let b = other.significant();
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    }

    fn significant(&self) -> &[bool] {
        let start = self.bits.iter().position(|&b| b).unwrap_or(self.bits.len());
        &self.bits[start..]
    }

    /// Integer value, if it fits in 128 bits.
    pub fn to_u128(&self) -> Option<u128> {
        let sig = self.significant();
        if sig.len() > 128 {
            return None;
        }
        Some(sig.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(ParseBitStringError { input: s.to_owned() }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString::from_bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn prefix_and_empty() {
        let b = bs("001000");
        assert_eq!(b.prefix(0), BitString::new());
        assert_eq!(b.prefix(4), bs("0010"));
        assert_eq!(b.prefix(6), b);
        assert_eq!(b.prefix(9), b);
        assert!(BitString::new().is_empty());
        assert_eq!(bs("").len(), 0);
    }

    #[test]
    fn numeric_order_ignores_leading_zeros() {
        assert_eq!(bs("0101").numeric_cmp(&bs("101")), Ordering::Equal);
        assert_eq!(bs("1011001").numeric_cmp(&bs("111111")), Ordering::Greater);
        assert_eq!(bs("000").numeric_cmp(&bs("")), Ordering::Equal);
        assert_eq!(bs("001000").numeric_cmp(&bs("001001")), Ordering::Less);
    }

    #[test]
    fn u64_roundtrip() {
        assert_eq!(BitString::from_u64(89, 7).to_string(), "1011001");
        assert_eq!(BitString::from_u64(89, 7).to_u128(), Some(89));
        assert_eq!(BitString::from_u64(0, 0).to_u128(), Some(0));
    }

    #[test]
    fn rejects_garbage() {
        assert!("0102".parse::<BitString>().is_err());
        let json: Result<BitString, _> = serde_json::from_str("\"01x\"");
        assert!(json.is_err());
        assert_eq!(serde_json::to_string(&bs("0110")).unwrap(), "\"0110\"");
    }

    #[test]
    fn common_prefix() {
        assert_eq!(bs("001000").common_prefix_len(&bs("001011")), 4);
        assert_eq!(bs("000000").common_prefix_len(&bs("111111")), 0);
    }
}
