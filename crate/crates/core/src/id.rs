use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// 64-bit device identity, the only payload a beacon carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct NodeId(NonZeroU64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NodeIdError {
    #[error("node id must be non-zero")]
    Zero,
    #[error("invalid node id {0:?}: expected decimal or 0x-prefixed hex")]
    Parse(String),
}

impl NodeId {
    pub fn new(value: u64) -> Result<Self, NodeIdError> {
        NonZeroU64::new(value).map(NodeId).ok_or(NodeIdError::Zero)
    }

    pub fn get(self) -> u64 {
        self.0.get()
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.get().to_be_bytes()
    }
}

impl TryFrom<u64> for NodeId {
    type Error = NodeIdError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for u64 {
    fn from(id: NodeId) -> u64 {
        id.get()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.get(), f)
    }
}

/// Accepts decimal (`42`) or hex (`0x2a`).
impl FromStr for NodeId {
    type Err = NodeIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => s.parse::<u64>(),
        };
        NodeId::new(parsed.map_err(|_| NodeIdError::Parse(s.to_owned()))?)
    }
}
