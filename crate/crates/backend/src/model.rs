use serde::{Deserialize, Serialize};

use securetrack_core::NodeId;

pub const FOURTEEN_DAYS: u64 = 14 * 86_400;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub student_id: String,
    /// Email address or phone number.
    pub contact_info: String,
    pub node_id: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseStatus {
    Registered,
    Decrypted,
    Notified,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case_id: u64,
    pub student_id: String,
    pub reported_at: u64,
    pub status: CaseStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DecryptedContact {
    pub node_id: NodeId,
    pub last_seen: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureNotice {
    pub case_id: u64,
    pub recipient_student_id: String,
    pub channel: String,
    pub last_contact_at: u64,
    pub sent_at: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exposures {
    pub drafts: Vec<ExposureNotice>,
    /// Contacts whose node has no registered student.
    pub unmapped: Vec<DecryptedContact>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NotifyFailure {
    pub recipient_student_id: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NotifyOutcome {
    /// Notices stamped by this call.
    pub sent: Vec<ExposureNotice>,
    pub failed: Vec<NotifyFailure>,
}
