//! Central database and the case pipeline: register a positive case from a
//! device dump, decrypt it, map contacts to students, notify them.
//!
//! Decryption key material comes from the student's registered node id only;
//! the student id gates access. A dump is never decrypted unless its owner
//! field matches the node bound to the student named in the request.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use securetrack_core::crypto::{derive_key, ContactCipher};
use securetrack_core::dump;
use securetrack_core::NodeId;

use crate::error::BackendError;
use crate::model::*;
use crate::notifier::{Message, Notifier};

pub const SNAPSHOT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
struct CaseEntry {
    report: CaseReport,
    contacts: Vec<DecryptedContact>,
    /// Notices keyed by recipient, created on first mapping.
    notices: BTreeMap<String, ExposureNotice>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Database {
    students: BTreeMap<String, StudentRecord>,
    by_node: BTreeMap<NodeId, String>,
    cases: BTreeMap<u64, CaseEntry>,
    next_case: u64,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn students(&self) -> impl Iterator<Item = &StudentRecord> {
        self.students.values()
    }

    pub fn student(&self, student_id: &str) -> Option<&StudentRecord> {
        self.students.get(student_id)
    }

    pub fn student_for_node(&self, node: NodeId) -> Option<&StudentRecord> {
        self.by_node.get(&node).and_then(|s| self.students.get(s))
    }

    pub fn case(&self, case_id: u64) -> Result<&CaseReport, BackendError> {
        self.cases
            .get(&case_id)
            .map(|c| &c.report)
            .ok_or(BackendError::UnknownCase(case_id))
    }

    pub fn cases(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.values().map(|c| &c.report)
    }

    pub fn case_contacts(&self, case_id: u64) -> Result<&[DecryptedContact], BackendError> {
        self.cases
            .get(&case_id)
            .map(|c| c.contacts.as_slice())
            .ok_or(BackendError::UnknownCase(case_id))
    }

    pub fn register_student(
        &mut self,
        student_id: &str,
        contact_info: &str,
        node_id: NodeId,
    ) -> Result<StudentRecord, BackendError> {
        let student_id = student_id.trim();
        let contact_info = contact_info.trim();
        if student_id.is_empty() || contact_info.is_empty() {
            return Err(BackendError::Invalid(
                "student_id and contact_info are required".into(),
            ));
        }
        if self.students.contains_key(student_id) {
            return Err(BackendError::DuplicateStudent(student_id.to_owned()));
        }
        if self.by_node.contains_key(&node_id) {
            return Err(BackendError::DuplicateNode(node_id));
        }
        let record = StudentRecord {
            student_id: student_id.to_owned(),
            contact_info: contact_info.to_owned(),
            node_id,
        };
        self.by_node.insert(node_id, record.student_id.clone());
        self.students.insert(record.student_id.clone(), record.clone());
        Ok(record)
    }

    /// Registers a positive case and decrypts its device dump. Contacts
    /// outside the 14 days ending at `reported_at` are dropped.
    pub fn register_case(
        &mut self,
        student_id: &str,
        store_dump: &[u8],
        reported_at: u64,
    ) -> Result<(CaseReport, Vec<DecryptedContact>), BackendError> {
        let student = self
            .students
            .get(student_id)
            .ok_or_else(|| BackendError::UnknownStudent(student_id.to_owned()))?;
        let expected = student.node_id;
        let found = dump::peek_owner(store_dump)?;
        if found != expected {
            return Err(BackendError::OwnerMismatch { expected, found });
        }
        let store = dump::load(store_dump, expected)?;
        let cipher = ContactCipher::new(&derive_key(expected));
        let window_start = reported_at.saturating_sub(FOURTEEN_DAYS);
        let mut contacts = Vec::new();
        for rec in store.records() {
            let node_id = cipher.decrypt(&rec.ciphertext)?;
            if (window_start..=reported_at).contains(&rec.last_seen) {
                contacts.push(DecryptedContact {
                    node_id,
                    last_seen: rec.last_seen,
                });
            }
        }
        contacts.sort();

        self.next_case += 1;
        let report = CaseReport {
            case_id: self.next_case,
            student_id: student.student_id.clone(),
            reported_at,
            status: CaseStatus::Decrypted,
        };
        self.cases.insert(
            report.case_id,
            CaseEntry {
                report: report.clone(),
                contacts: contacts.clone(),
                notices: BTreeMap::new(),
            },
        );
        Ok((report, contacts))
    }

    /// One draft per contact with a registered student; the rest come back
    /// as unmapped.
    pub fn map_contacts(&self, contacts: &[DecryptedContact]) -> Exposures {
        let mut out = Exposures::default();
        for c in contacts {
            match self.student_for_node(c.node_id) {
                Some(s) => out.drafts.push(ExposureNotice {
                    case_id: 0,
                    recipient_student_id: s.student_id.clone(),
                    channel: s.contact_info.clone(),
                    last_contact_at: c.last_seen,
                    sent_at: None,
                }),
                None => out.unmapped.push(*c),
            }
        }
        out
    }

    /// Current exposure view of a case, merging any stamps already recorded.
    pub fn exposures(&mut self, case_id: u64) -> Result<Exposures, BackendError> {
        let entry = self
            .cases
            .get(&case_id)
            .ok_or(BackendError::UnknownCase(case_id))?;
        let mut mapped = self.map_contacts(&entry.contacts);
        let index_student = entry.report.student_id.clone();
        mapped.drafts.retain(|d| d.recipient_student_id != index_student);
        let entry = self.cases.get_mut(&case_id).expect("checked above");
        for draft in &mut mapped.drafts {
            draft.case_id = case_id;
            let stored = entry
                .notices
                .entry(draft.recipient_student_id.clone())
                .or_insert_with(|| draft.clone());
            *draft = stored.clone();
        }
        Ok(mapped)
    }

    /// Sends every unsent notice for a case. Already-stamped notices are
    /// skipped, so repeating the call only retries earlier failures.
    pub async fn notify(
        &mut self,
        case_id: u64,
        notifier: &Notifier,
        now: u64,
    ) -> Result<NotifyOutcome, BackendError> {
        if self.case(case_id)?.status < CaseStatus::Decrypted {
            return Err(BackendError::CaseNotDecrypted(case_id));
        }
        let drafts = self.exposures(case_id)?.drafts;
        let mut outcome = NotifyOutcome::default();
        for draft in drafts.into_iter().filter(|d| d.sent_at.is_none()) {
            match notifier.send(&Message::for_notice(&draft)).await {
                Ok(()) => {
                    let entry = self.cases.get_mut(&case_id).expect("case exists");
                    let stored = entry
                        .notices
                        .get_mut(&draft.recipient_student_id)
                        .expect("mapped above");
                    stored.sent_at = Some(now);
                    outcome.sent.push(stored.clone());
                }
                Err(e) => outcome.failed.push(NotifyFailure {
                    recipient_student_id: draft.recipient_student_id,
                    message: e.message,
                }),
            }
        }
        if outcome.failed.is_empty() {
            let entry = self.cases.get_mut(&case_id).expect("case exists");
            entry.report.status = CaseStatus::Notified;
        }
        Ok(outcome)
    }

    // ---- snapshot persistence ----

    pub fn to_snapshot(&self) -> String {
        let snap = Snapshot {
            schema: SNAPSHOT_SCHEMA,
            next_case: self.next_case,
            students: self
                .students
                .values()
                .map(|s| StudentRow {
                    student_id: s.student_id.clone(),
                    contact_info: s.contact_info.clone(),
                    node_id: s.node_id.to_string(),
                })
                .collect(),
            cases: self
                .cases
                .values()
                .map(|c| CaseRow {
                    case_id: c.report.case_id,
                    student_id: c.report.student_id.clone(),
                    reported_at: c.report.reported_at,
                    status: c.report.status,
                    contacts: c
                        .contacts
                        .iter()
                        .map(|k| ContactRow {
                            node_id: k.node_id.to_string(),
                            last_seen: k.last_seen,
                        })
                        .collect(),
                    notices: c.notices.values().cloned().collect(),
                })
                .collect(),
        };
        toml::to_string(&snap).expect("snapshot serializes")
    }

    pub fn from_snapshot(text: &str) -> Result<Self, String> {
        let snap: Snapshot = toml::from_str(text).map_err(|e| e.to_string())?;
        if snap.schema != SNAPSHOT_SCHEMA {
            return Err(format!("unsupported snapshot schema {}", snap.schema));
        }
        let mut db = Database::new();
        for s in snap.students {
            let node: NodeId = s.node_id.parse().map_err(|e| format!("{e}"))?;
            db.register_student(&s.student_id, &s.contact_info, node)
                .map_err(|e| e.to_string())?;
        }
        for c in snap.cases {
            let contacts = c
                .contacts
                .into_iter()
                .map(|k| {
                    Ok(DecryptedContact {
                        node_id: k.node_id.parse().map_err(|e| format!("{e}"))?,
                        last_seen: k.last_seen,
                    })
                })
                .collect::<Result<Vec<_>, String>>()?;
            let notices = c
                .notices
                .into_iter()
                .map(|n| (n.recipient_student_id.clone(), n))
                .collect();
            db.cases.insert(
                c.case_id,
                CaseEntry {
                    report: CaseReport {
                        case_id: c.case_id,
                        student_id: c.student_id,
                        reported_at: c.reported_at,
                        status: c.status,
                    },
                    contacts,
                    notices,
                },
            );
        }
        db.next_case = snap.next_case.max(db.cases.keys().copied().max().unwrap_or(0));
        Ok(db)
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let snapshot_err = |message: String| BackendError::Snapshot {
            path: path.display().to_string(),
            message,
        };
        match fs::read_to_string(path) {
            Ok(text) => Database::from_snapshot(&text).map_err(snapshot_err),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Database::new()),
            Err(e) => Err(snapshot_err(e.to_string())),
        }
    }

    /// Writes to a sibling temp file and renames it over `path`, so readers
    /// only ever see a complete snapshot.
    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("db");
        let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_snapshot().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    schema: u32,
    next_case: u64,
    #[serde(default)]
    students: Vec<StudentRow>,
    #[serde(default)]
    cases: Vec<CaseRow>,
}

// Node ids are strings here: TOML integers stop at i64::MAX.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudentRow {
    student_id: String,
    contact_info: String,
    node_id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseRow {
    case_id: u64,
    student_id: String,
    reported_at: u64,
    status: CaseStatus,
    #[serde(default)]
    contacts: Vec<ContactRow>,
    #[serde(default)]
    notices: Vec<ExposureNotice>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactRow {
    node_id: String,
    last_seen: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use securetrack_core::crypto::encrypt_contact;
    use securetrack_core::store::ContactStore;

    fn id(v: u64) -> NodeId {
        NodeId::new(v).unwrap()
    }

    fn dump_for(owner: u64, peers: &[(u64, u64)]) -> Vec<u8> {
        let key = derive_key(id(owner));
        let mut s = ContactStore::new(id(owner));
        for &(p, t) in peers {
            s.record_contact(encrypt_contact(&key, id(p)), t).unwrap();
        }
        dump::dump(&s)
    }

    fn seeded() -> Database {
        let mut db = Database::new();
        db.register_student("S1", "s1@uni.edu", id(1)).unwrap();
        db.register_student("S2", "+1-555-0102", id(2)).unwrap();
        db.register_student("S3", "s3@uni.edu", id(3)).unwrap();
        db
    }

    #[test]
    fn registration_guards() {
        let mut db = seeded();
        assert!(matches!(
            db.register_student("S1", "x@y", id(9)),
            Err(BackendError::DuplicateStudent(_))
        ));
        assert!(matches!(
            db.register_student("S9", "x@y", id(1)),
            Err(BackendError::DuplicateNode(_))
        ));
        assert!(matches!(
            db.register_student(" ", "x@y", id(9)),
            Err(BackendError::Invalid(_))
        ));
        assert_eq!(db.students().count(), 3);
    }

    #[test]
    fn case_decrypts_within_window() {
        let mut db = seeded();
        let now = 20 * 86_400;
        let old = now - FOURTEEN_DAYS - 1;
        let bytes = dump_for(3, &[(1, now - 10), (2, old), (7, now - FOURTEEN_DAYS)]);
        let (report, contacts) = db.register_case("S3", &bytes, now).unwrap();
        assert_eq!(report.status, CaseStatus::Decrypted);
        let nodes: Vec<_> = contacts.iter().map(|c| c.node_id.get()).collect();
        assert_eq!(nodes, [1, 7]);
    }

    #[test]
    fn case_errors() {
        let mut db = seeded();
        assert!(matches!(
            db.register_case("nobody", &dump_for(3, &[]), 0),
            Err(BackendError::UnknownStudent(_))
        ));
        assert!(matches!(
            db.register_case("S3", &dump_for(5, &[(1, 0)]), 0),
            Err(BackendError::OwnerMismatch { .. })
        ));
        assert!(matches!(
            db.register_case("S3", b"junk", 0),
            Err(BackendError::Format(_))
        ));
        let mut bad = dump_for(3, &[(1, 0)]);
        bad[20] ^= 0x55;
        assert!(matches!(
            db.register_case("S3", &bad, 0),
            Err(BackendError::Crypto(_))
        ));
        assert_eq!(db.cases().count(), 0);
    }

    #[test]
    fn empty_dump_case() {
        let mut db = seeded();
        let (report, contacts) = db.register_case("S3", &dump_for(3, &[]), 600).unwrap();
        assert!(contacts.is_empty());
        assert_eq!(report.status, CaseStatus::Decrypted);
        assert!(db.exposures(report.case_id).unwrap().drafts.is_empty());
    }

    #[test]
    fn mapping_partitions_contacts() {
        let db = seeded();
        let c = |n, t| DecryptedContact {
            node_id: id(n),
            last_seen: t,
        };
        let ex = db.map_contacts(&[c(1, 5), c(42, 6)]);
        assert_eq!(ex.drafts.len(), 1);
        assert_eq!(ex.drafts[0].recipient_student_id, "S1");
        assert_eq!(ex.unmapped, [c(42, 6)]);
        assert_eq!(db.map_contacts(&[]), Exposures::default());
    }

    #[tokio::test]
    async fn notify_is_idempotent() {
        let mut db = seeded();
        let (report, _) = db
            .register_case("S3", &dump_for(3, &[(1, 100), (2, 200)]), 600)
            .unwrap();
        let sink = Notifier::Memory(Default::default());
        let first = db.notify(report.case_id, &sink, 1000).await.unwrap();
        assert_eq!(first.sent.len(), 2);
        assert!(first.sent.iter().all(|n| n.sent_at == Some(1000)));
        assert_eq!(db.case(report.case_id).unwrap().status, CaseStatus::Notified);
        let again = db.notify(report.case_id, &sink, 2000).await.unwrap();
        assert!(again.sent.is_empty());
        let Notifier::Memory(msgs) = sink else {
            unreachable!()
        };
        assert_eq!(msgs.lock().unwrap().len(), 2);
    }

    #[tokio::test]
    async fn notify_unknown_case() {
        let mut db = seeded();
        assert!(matches!(
            db.notify(9, &Notifier::Memory(Default::default()), 0).await,
            Err(BackendError::UnknownCase(9))
        ));
    }

    #[tokio::test]
    async fn snapshot_round_trip() {
        let mut db = seeded();
        db.register_student("SX", "big@uni.edu", id(u64::MAX)).unwrap();
        let (report, _) = db
            .register_case("S3", &dump_for(3, &[(1, 100), (42, 7)]), 600)
            .unwrap();
        db.notify(report.case_id, &Notifier::Memory(Default::default()), 900)
            .await
            .unwrap();
        let text = db.to_snapshot();
        let back = Database::from_snapshot(&text).unwrap();
        assert_eq!(back, db);
        assert!(Database::from_snapshot("schema = 2\nnext_case = 0\n").is_err());
    }
}
