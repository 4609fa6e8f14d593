//! On-device contact store.
//!
//! Records are keyed by ciphertext. The last-seen timestamp sits beside the
//! ciphertext in the clear so the device can dedup and evict without ever
//! decrypting. Capacity is accounted per 128-bit entry, matching the memory
//! model in [`crate::memory`]; timestamps are bookkeeping and not counted.

use std::collections::BTreeMap;

use crate::crypto::Ciphertext;
use crate::id::NodeId;

/// Bytes charged against capacity for each stored entry.
pub const ENTRY_BYTES: u64 = 16;

/// 128 KB of on-board storage.
pub const DEFAULT_CAPACITY_BYTES: u64 = 128 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContactRecord {
    pub ciphertext: Ciphertext,
    pub last_seen: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Inserted,
    Updated,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("contact store full: {used} of {capacity} bytes used")]
pub struct CapacityError {
    pub used: u64,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactStore {
    owner: NodeId,
    records: BTreeMap<Ciphertext, u64>,
    capacity_bytes: u64,
}

impl ContactStore {
    pub fn new(owner: NodeId) -> Self {
        Self::with_capacity(owner, DEFAULT_CAPACITY_BYTES)
    }

    pub fn with_capacity(owner: NodeId, capacity_bytes: u64) -> Self {
        ContactStore {
            owner,
            records: BTreeMap::new(),
            capacity_bytes,
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn payload_bytes(&self) -> u64 {
        self.records.len() as u64 * ENTRY_BYTES
    }

    pub fn last_seen(&self, ct: &Ciphertext) -> Option<u64> {
        self.records.get(ct).copied()
    }

    /// Records in ascending ciphertext order.
    pub fn records(&self) -> impl Iterator<Item = ContactRecord> + '_ {
        self.records
            .iter()
            .map(|(&ciphertext, &last_seen)| ContactRecord {
                ciphertext,
                last_seen,
            })
    }

    /// Inserts a new entry or refreshes the timestamp of an existing one.
    pub fn record_contact(&mut self, ct: Ciphertext, now: u64) -> Result<RecordOutcome, CapacityError> {
        if let Some(last_seen) = self.records.get_mut(&ct) {
            *last_seen = now;
            return Ok(RecordOutcome::Updated);
        }
        let used = self.payload_bytes();
        if used + ENTRY_BYTES > self.capacity_bytes {
            return Err(CapacityError {
                used,
                capacity: self.capacity_bytes,
            });
        }
        self.records.insert(ct, now);
        Ok(RecordOutcome::Inserted)
    }

    /// Inclusive window: a sighting exactly `window` seconds ago still counts.
    pub fn seen_within(&self, ct: &Ciphertext, now: u64, window: u64) -> bool {
        self.records
            .get(ct)
            .is_some_and(|&last_seen| now.saturating_sub(last_seen) <= window)
    }

    /// Drops every record whose age exceeds `retention`; returns how many.
    pub fn evict_expired(&mut self, now: u64, retention: u64) -> usize {
        let before = self.records.len();
        self.records
            .retain(|_, last_seen| now.saturating_sub(*last_seen) <= retention);
        before - self.records.len()
    }

    pub(crate) fn insert_raw(&mut self, record: ContactRecord) {
        self.records.insert(record.ciphertext, record.last_seen);
    }
}
