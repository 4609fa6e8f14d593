//! Scenario simulation, geometric ground truth and detection scoring.

mod compare;
mod engine;
mod oracle;
pub mod presets;
mod scenario;
pub mod trace;

use std::collections::BTreeMap;

pub use compare::{compare, compare_banded, ContactMap, DetectionReport, Pair};
pub use engine::run;
pub use oracle::{oracle_contacts, oracle_contacts_with_radius, ContactInterval, ContactTruth};
pub use scenario::{DeviceSpec, RandomWaypoint, Scenario, Waypoint, SCHEMA_VERSION};
pub use trace::{TraceEvent, TraceFormat, TraceRecord};

use crate::crypto::{derive_key, ContactCipher, CryptoError};
use crate::device::DeviceError;
use crate::dump::{self, FormatError};
use crate::id::NodeId;
use crate::radio::RadioError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Radio(#[from] RadioError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("store of node {node}: {source}")]
    Format { node: NodeId, source: FormatError },
    #[error("store of node {node}: {source}")]
    Crypto { node: NodeId, source: CryptoError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Final store dumps, keyed by owner.
    pub stores: BTreeMap<NodeId, Vec<u8>>,
    pub trace: Vec<TraceRecord>,
    pub truth: Option<ContactTruth>,
}

impl SimulationResult {
    /// Decrypts every store with its owner's derived key.
    pub fn contacts(&self) -> Result<ContactMap, DecodeError> {
        decrypt_dumps(self.stores.iter().map(|(&id, bytes)| (id, bytes.as_slice())))
    }

    pub fn trace_text(&self, format: TraceFormat) -> String {
        trace::render(&self.trace, format)
    }

    /// Canonical byte image of trace plus dumps, for determinism checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.trace_text(TraceFormat::Records).into_bytes();
        for (id, dump) in &self.stores {
            out.extend_from_slice(&id.get().to_be_bytes());
            out.extend_from_slice(&(dump.len() as u64).to_be_bytes());
            out.extend_from_slice(dump);
        }
        out
    }
}

/// Decrypts a store dump owned by `owner`.
pub fn decrypt_dump(owner: NodeId, bytes: &[u8]) -> Result<BTreeMap<NodeId, u64>, DecodeError> {
    let store = dump::load(bytes, owner).map_err(|source| DecodeError::Format { node: owner, source })?;
    let cipher = ContactCipher::new(&derive_key(owner));
    store
        .records()
        .map(|r| {
            cipher
                .decrypt(&r.ciphertext)
                .map(|peer| (peer, r.last_seen))
                .map_err(|source| DecodeError::Crypto { node: owner, source })
        })
        .collect()
}

pub fn decrypt_dumps<'a>(
    dumps: impl IntoIterator<Item = (NodeId, &'a [u8])>,
) -> Result<ContactMap, DecodeError> {
    dumps
        .into_iter()
        .map(|(id, bytes)| Ok((id, decrypt_dump(id, bytes)?)))
        .collect()
}
