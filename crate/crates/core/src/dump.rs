//! Binary store dump, the format the backend ingests.
//!
//! All integers are big-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "STRK"
//! 4       2     version (1)
//! 6       2     reserved (0)
//! 8       8     owner node id
//! 16      4     record count
//! 20      24*n  records: 16-byte ciphertext, u64 last_seen
//! ```
//!
//! Records are written in strictly ascending ciphertext order and `load`
//! rejects anything else, so every store has exactly one encoding.

use crate::crypto::Ciphertext;
use crate::id::NodeId;
use crate::store::{ContactRecord, ContactStore, ENTRY_BYTES};

pub const MAGIC: [u8; 4] = *b"STRK";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const COUNT_LEN: usize = 4;
pub const RECORD_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    BadVersion(u16),
    #[error("reserved header field is {0:#06x}, expected 0")]
    Reserved(u16),
    #[error("owner node id is zero")]
    ZeroOwner,
    #[error("dump truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("{0} trailing bytes after last record")]
    Trailing(usize),
    #[error("record {0} is out of order or duplicated")]
    Unordered(usize),
    #[error("dump owner {found} does not match expected {expected}")]
    Owner { expected: NodeId, found: NodeId },
    #[error("{records} records exceed store capacity")]
    Capacity { records: usize },
}

pub fn dump(store: &ContactStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + COUNT_LEN + store.len() * RECORD_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&store.owner().to_be_bytes());
    out.extend_from_slice(&(store.len() as u32).to_be_bytes());
    for rec in store.records() {
        out.extend_from_slice(rec.ciphertext.as_bytes());
        out.extend_from_slice(&rec.last_seen.to_be_bytes());
    }
    out
}

/// Reads only the owner field, for routing a dump before a full parse.
pub fn peek_owner(bytes: &[u8]) -> Result<NodeId, FormatError> {
    parse_header(bytes)
}

fn need(bytes: &[u8], n: usize) -> Result<(), FormatError> {
    if bytes.len() < n {
        Err(FormatError::Truncated {
            needed: n,
            have: bytes.len(),
        })
    } else {
        Ok(())
    }
}

fn parse_header(bytes: &[u8]) -> Result<NodeId, FormatError> {
    need(bytes, HEADER_LEN)?;
    if bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = u16::from_be_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let reserved = u16::from_be_bytes([bytes[6], bytes[7]]);
    if reserved != 0 {
        return Err(FormatError::Reserved(reserved));
    }
    let owner = u64::from_be_bytes(bytes[8..16].try_into().expect("8 bytes"));
    NodeId::new(owner).map_err(|_| FormatError::ZeroOwner)
}

/// Parses a dump into a store with the default capacity.
pub fn load(bytes: &[u8], owner: NodeId) -> Result<ContactStore, FormatError> {
    load_with_capacity(bytes, owner, crate::store::DEFAULT_CAPACITY_BYTES)
}

pub fn load_with_capacity(
    bytes: &[u8],
    owner: NodeId,
    capacity_bytes: u64,
) -> Result<ContactStore, FormatError> {
    let found = parse_header(bytes)?;
    if found != owner {
        return Err(FormatError::Owner {
            expected: owner,
            found,
        });
    }
    need(bytes, HEADER_LEN + COUNT_LEN)?;
    let count = u32::from_be_bytes(bytes[16..20].try_into().expect("4 bytes")) as usize;
    let body = &bytes[HEADER_LEN + COUNT_LEN..];
    let expected = count
        .checked_mul(RECORD_LEN)
        .ok_or(FormatError::Capacity { records: count })?;
    need(body, expected).map_err(|_| FormatError::Truncated {
        needed: HEADER_LEN + COUNT_LEN + expected,
        have: bytes.len(),
    })?;
    if body.len() > expected {
        return Err(FormatError::Trailing(body.len() - expected));
    }
    if count as u64 * ENTRY_BYTES > capacity_bytes {
        return Err(FormatError::Capacity { records: count });
    }

    let mut store = ContactStore::with_capacity(owner, capacity_bytes);
    let mut prev: Option<Ciphertext> = None;
    for (i, chunk) in body.chunks_exact(RECORD_LEN).enumerate() {
        let ciphertext = Ciphertext(chunk[..16].try_into().expect("16 bytes"));
        let last_seen = u64::from_be_bytes(chunk[16..].try_into().expect("8 bytes"));
        if prev.is_some_and(|p| p >= ciphertext) {
            return Err(FormatError::Unordered(i));
        }
        prev = Some(ciphertext);
        store.insert_raw(ContactRecord {
            ciphertext,
            last_seen,
        });
    }
    Ok(store)
}
