//! Exposure notice delivery.
//!
//! Real email/SMS gateways are out of scope. A notifier takes a channel (the
//! recipient's contact info), a subject and a body; the webhook variant posts
//! the whole message as JSON so an external relay can do the rest.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::io::AsyncWriteExt;

use crate::error::NotifierError;
use crate::model::ExposureNotice;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub channel: String,
    pub subject: String,
    pub body: String,
    pub case_id: u64,
    pub recipient_student_id: String,
    pub last_contact_at: u64,
}

impl Message {
    pub fn for_notice(notice: &ExposureNotice) -> Self {
        Message {
            channel: notice.channel.clone(),
            subject: "Possible exposure to an infectious disease".to_owned(),
            body: format!(
                "Student {}: your device recorded close contact with a confirmed case \
                 (last contact at t={}s). Please get tested and contact the student health center.",
                notice.recipient_student_id, notice.last_contact_at
            ),
            case_id: notice.case_id,
            recipient_student_id: notice.recipient_student_id.clone(),
            last_contact_at: notice.last_contact_at,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Notifier {
    Stdout,
    /// Appends one JSON line per message.
    File(PathBuf),
    /// POSTs each message as JSON; any non-2xx reply is a failure.
    Webhook(String),
    /// Collects messages in memory, for tests.
    Memory(Arc<Mutex<Vec<Message>>>),
}

/// Parses `stdout`, `file:<path>`, `webhook:<url>` or `memory`.
impl FromStr for Notifier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "stdout" => Ok(Notifier::Stdout),
            _ if s == "memory" => Ok(Notifier::Memory(Arc::default())),
            Some(("file", path)) if !path.is_empty() => Ok(Notifier::File(PathBuf::from(path))),
            Some(("webhook", url)) if url.starts_with("http://") || url.starts_with("https://") => {
                Ok(Notifier::Webhook(url.to_owned()))
            }
            _ => Err(format!(
                "invalid notifier {s:?}: expected stdout, file:<path>, webhook:<url> or memory"
            )),
        }
    }
}

impl Notifier {
    pub async fn send(&self, msg: &Message) -> Result<(), NotifierError> {
        let fail = |message: String| NotifierError {
            recipient: msg.recipient_student_id.clone(),
            message,
        };
        let line = serde_json::to_string(msg).expect("message serializes");
        match self {
            Notifier::Stdout => {
                let mut out = tokio::io::stdout();
                out.write_all(format!("{line}\n").as_bytes())
                    .await
                    .map_err(|e| fail(e.to_string()))?;
                out.flush().await.map_err(|e| fail(e.to_string()))
            }
            Notifier::File(path) => {
                let mut f = tokio::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .await
                    .map_err(|e| fail(format!("{}: {e}", path.display())))?;
                f.write_all(format!("{line}\n").as_bytes())
                    .await
                    .map_err(|e| fail(e.to_string()))?;
                f.flush().await.map_err(|e| fail(e.to_string()))
            }
            Notifier::Webhook(url) => {
                let resp = reqwest::Client::new()
                    .post(url)
                    .json(msg)
                    .send()
                    .await
                    .map_err(|e| fail(e.to_string()))?;
                if resp.status().is_success() {
                    Ok(())
                } else {
                    Err(fail(format!("webhook returned {}", resp.status())))
                }
            }
            Notifier::Memory(sink) => {
                sink.lock().expect("sink lock").push(msg.clone());
                Ok(())
            }
        }
    }
}
