//! Storage estimate for a 14-day contact history.
//!
//! Every contact costs one 128-bit entry, so the estimate in KB is
//! `sum(s_i) * 128 / (8 * 1024)`. The value is kept as an exact bit count
//! and only rounded when displayed.

use std::fmt;

pub const RETENTION_DAYS: usize = 14;
pub const ENTRY_BITS: u128 = 128;
const BITS_PER_KB: u128 = 8 * 1024;

/// Contacts recorded on each of the 14 retained days.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContactHistogram(pub [u64; RETENTION_DAYS]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected {RETENTION_DAYS} daily counts, got {0}")]
pub struct HistogramLenError(pub usize);

impl ContactHistogram {
    pub fn uniform(per_day: u64) -> Self {
        ContactHistogram([per_day; RETENTION_DAYS])
    }

    pub fn total(&self) -> u128 {
        self.0.iter().map(|&s| s as u128).sum()
    }
}

impl TryFrom<&[u64]> for ContactHistogram {
    type Error = HistogramLenError;

    fn try_from(days: &[u64]) -> Result<Self, Self::Error> {
        days.try_into()
            .map(ContactHistogram)
            .map_err(|_| HistogramLenError(days.len()))
    }
}

/// An exact storage size, held in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Kilobytes {
    bits: u128,
}

impl Kilobytes {
    pub fn from_bits(bits: u128) -> Self {
        Kilobytes { bits }
    }

    pub fn from_bytes(bytes: u64) -> Self {
        Kilobytes {
            bits: bytes as u128 * 8,
        }
    }

    pub fn bits(self) -> u128 {
        self.bits
    }

    /// Numerator and denominator of the KB value.
    pub fn as_ratio(self) -> (u128, u128) {
        (self.bits, BITS_PER_KB)
    }

    pub fn as_f64(self) -> f64 {
        self.bits as f64 / BITS_PER_KB as f64
    }

    /// Value in hundredths of a KB, rounded half up.
    pub fn hundredths(self) -> u128 {
        (self.bits * 100 * 2 + BITS_PER_KB) / (2 * BITS_PER_KB)
    }
}

/// Formats as `21.88 KB`.
impl fmt::Display for Kilobytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hundredths();
        write!(f, "{}.{:02} KB", h / 100, h % 100)
    }
}

pub fn memory_estimate(h: &ContactHistogram) -> Kilobytes {
    Kilobytes::from_bits(h.total() * ENTRY_BITS)
}
