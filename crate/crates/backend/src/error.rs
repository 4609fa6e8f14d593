use securetrack_core::crypto::CryptoError;
use securetrack_core::dump::FormatError;
use securetrack_core::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("unknown student {0:?}")]
    UnknownStudent(String),
    #[error("unknown case {0}")]
    UnknownCase(u64),
    #[error("student {0:?} is already registered")]
    DuplicateStudent(String),
    #[error("node {0} is already registered to another student")]
    DuplicateNode(NodeId),
    #[error("dump belongs to node {found}, but the student is registered to node {expected}")]
    OwnerMismatch { expected: NodeId, found: NodeId },
    #[error("malformed store dump: {0}")]
    Format(#[from] FormatError),
    #[error("store entry failed to decrypt: {0}")]
    Crypto(#[from] CryptoError),
    #[error("case {0} has not been decrypted")]
    CaseNotDecrypted(u64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BackendError {
    /// Stable machine-readable tag for API error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            BackendError::UnknownStudent(_) => "UnknownStudent",
            BackendError::UnknownCase(_) => "UnknownCase",
            BackendError::DuplicateStudent(_) => "DuplicateStudent",
            BackendError::DuplicateNode(_) => "DuplicateNode",
            BackendError::OwnerMismatch { .. } => "OwnerMismatch",
            BackendError::Format(_) => "FormatError",
            BackendError::Crypto(_) => "PadError",
            BackendError::CaseNotDecrypted(_) => "CaseNotDecrypted",
            BackendError::Invalid(_) => "InvalidInput",
            BackendError::Snapshot { .. } => "SnapshotError",
            BackendError::Io(_) => "IoError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("notifier failed for {recipient}: {message}")]
pub struct NotifierError {
    pub recipient: String,
    pub message: String,
}
