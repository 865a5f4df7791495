//! Z-order (Morton) linearization of k-dimensional unsigned coordinates.
//!
//! Bit layout: key bit `g * k + d` (0 = most significant) is bit `b - 1 - g`
//! of coordinate `d`. Groups run MSB-first and dimension 0 leads each group,
//! so on an 8x8 grid `(2, 0)` encodes to `001000` and `(0, 1)` to `000001`.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;

/// Largest supported bits per dimension; coordinates are `u64`.
pub const MAX_BITS_PER_DIM: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZOrderError {
    #[error("invalid geometry: k = {k}, b = {b} (need k >= 1 and 1 <= b <= 64)")]
    InvalidGeometry { k: usize, b: u32 },
    #[error("expected {expected} coordinates, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("coordinate {value} in dimension {dim} does not fit in {b} bits")]
    OutOfRange { dim: usize, value: u64, b: u32 },
    #[error("key has {actual} bits, expected k * b = {expected}")]
    MalformedKey { expected: usize, actual: usize },
    #[error("rectangle corner lo[{dim}] = {lo} exceeds hi[{dim}] = {hi}")]
    InvertedRange { dim: usize, lo: u64, hi: u64 },
    #[error("keys have different geometry: (k={k1}, b={b1}) vs (k={k2}, b={b2})")]
    GeometryMismatch { k1: usize, b1: u32, k2: usize, b2: u32 },
}

/// Dimension count and bits per dimension shared by every coordinate in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub k: usize,
    pub b: u32,
}

impl Geometry {
    pub fn new(k: usize, b: u32) -> Result<Self, ZOrderError> {
        if k == 0 || b == 0 || b > MAX_BITS_PER_DIM {
            return Err(ZOrderError::InvalidGeometry { k, b });
        }
        Ok(Self { k, b })
    }

    /// Total key width `k * b`.
    pub fn key_bits(&self) -> usize {
        self.k * self.b as usize
    }

    /// Largest coordinate value representable in one dimension.
    pub fn max_coord(&self) -> u64 {
        if self.b == 64 {
            u64::MAX
        } else {
            (1u64 << self.b) - 1
        }
    }

    pub fn check(&self, coords: &Coordinates) -> Result<(), ZOrderError> {
        if coords.dims() != self.k {
            return Err(ZOrderError::DimensionMismatch {
                expected: self.k,
                actual: coords.dims(),
            });
        }
        match coords.values().iter().enumerate().find(|(_, &v)| v > self.max_coord()) {
            Some((dim, &value)) => Err(ZOrderError::OutOfRange { dim, value, b: self.b }),
            None => Ok(()),
        }
    }
}

/// A point in k-dimensional unsigned integer space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coordinates(Vec<u64>);

impl Coordinates {
    pub fn new(values: Vec<u64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<u64>> for Coordinates {
    fn from(values: Vec<u64>) -> Self {
        Self(values)
    }
}

impl<const N: usize> From<[u64; N]> for Coordinates {
    fn from(values: [u64; N]) -> Self {
        Self(values.to_vec())
    }
}

impl std::fmt::Display for Coordinates {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// An interleaved key. Its length is always `k * b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZKey {
    value: BitString,
    geometry: Geometry,
}

impl ZKey {
    /// Wrap a raw bit string, checking its length against the geometry.
    pub fn from_bits(value: BitString, geometry: Geometry) -> Result<Self, ZOrderError> {
        if value.len() != geometry.key_bits() {
            return Err(ZOrderError::MalformedKey {
                expected: geometry.key_bits(),
                actual: value.len(),
            });
        }
        Ok(Self { value, geometry })
    }

    pub fn bits(&self) -> &BitString {
        &self.value
    }

    pub fn into_bits(self) -> BitString {
        self.value
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
}

impl PartialOrd for ZKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        (self.geometry == other.geometry).then(|| self.value.cmp(&other.value))
    }
}

pub fn encode(coords: &Coordinates, geometry: Geometry) -> Result<ZKey, ZOrderError> {
    geometry.check(coords)?;
    let mut value = BitString::new();
    for shift in (0..geometry.b).rev() {
        for &c in coords.values() {
            value.push((c >> shift) & 1 == 1);
        }
    }
    Ok(ZKey { value, geometry })
}

pub fn decode(key: &ZKey) -> Result<Coordinates, ZOrderError> {
    let Geometry { k, b } = key.geometry;
    if key.value.len() != key.geometry.key_bits() {
        return Err(ZOrderError::MalformedKey {
            expected: key.geometry.key_bits(),
            actual: key.value.len(),
        });
    }
    let mut values = vec![0u64; k];
    for (i, &bit) in key.value.bits().iter().enumerate() {
        let (group, dim) = (i / k, i % k);
        if bit {
            values[dim] |= 1 << (b as usize - 1 - group);
        }
    }
    Ok(Coordinates(values))
}

fn check_rect(lo: &Coordinates, hi: &Coordinates) -> Result<(), ZOrderError> {
    if lo.dims() != hi.dims() {
        return Err(ZOrderError::DimensionMismatch {
            expected: lo.dims(),
            actual: hi.dims(),
        });
    }
    for (dim, (&l, &h)) in lo.values().iter().zip(hi.values()).enumerate() {
        if l > h {
            return Err(ZOrderError::InvertedRange { dim, lo: l, hi: h });
        }
    }
    Ok(())
}

/// Map a rectangle to the z-interval spanned by its two corners.
///
/// Every point inside the rectangle lands inside the interval, but the
/// interval can also hold keys of points outside it; filter with [`contains`].
pub fn rect_to_zrange(
    lo: &Coordinates,
    hi: &Coordinates,
    geometry: Geometry,
) -> Result<(ZKey, ZKey), ZOrderError> {
    check_rect(lo, hi)?;
    Ok((encode(lo, geometry)?, encode(hi, geometry)?))
}

/// Longest bit prefix shared by both interval endpoints. May be empty.
pub fn range_prefix(zlo: &ZKey, zhi: &ZKey) -> Result<BitString, ZOrderError> {
    if zlo.geometry != zhi.geometry {
        return Err(ZOrderError::GeometryMismatch {
            k1: zlo.geometry.k,
            b1: zlo.geometry.b,
            k2: zhi.geometry.k,
            b2: zhi.geometry.b,
        });
    }
    Ok(zlo.value.prefix(zlo.value.common_prefix_len(&zhi.value)))
}

/// True iff `lo[d] <= point[d] <= hi[d]` in every dimension.
pub fn contains(lo: &Coordinates, hi: &Coordinates, point: &Coordinates) -> Result<bool, ZOrderError> {
    check_rect(lo, hi)?;
    if point.dims() != lo.dims() {
        return Err(ZOrderError::DimensionMismatch {
            expected: lo.dims(),
            actual: point.dims(),
        });
    }
    Ok(lo
        .values()
        .iter()
        .zip(hi.values())
        .zip(point.values())
        .all(|((&l, &h), &p)| l <= p && p <= h))
}
