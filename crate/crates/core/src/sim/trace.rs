use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::device::{EventKind, ReceiveOutcome};
use crate::id::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceEvent {
    Transmitting,
    Receiving,
    UnsafeProximity,
    Discarded,
    SavedNew,
    RedundantUpdated,
}

impl From<EventKind> for TraceEvent {
    fn from(k: EventKind) -> Self {
        match k {
            EventKind::Transmitting => TraceEvent::Transmitting,
            EventKind::Receiving => TraceEvent::Receiving,
            EventKind::UnsafeProximity => TraceEvent::UnsafeProximity,
        }
    }
}

impl From<ReceiveOutcome> for TraceEvent {
    fn from(o: ReceiveOutcome) -> Self {
        match o {
            ReceiveOutcome::Discarded => TraceEvent::Discarded,
            ReceiveOutcome::SavedNew => TraceEvent::SavedNew,
            ReceiveOutcome::RedundantUpdated => TraceEvent::RedundantUpdated,
        }
    }
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Transmitting => "Transmitting",
            TraceEvent::Receiving => "Receiving",
            TraceEvent::UnsafeProximity => "UnsafeProximity",
            TraceEvent::Discarded => "Discarded",
            TraceEvent::SavedNew => "SavedNew",
            TraceEvent::RedundantUpdated => "RedundantUpdated",
        }
    }
}

/// One trace line. Field order is part of the output format.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: u64,
    pub node: NodeId,
    pub event: TraceEvent,
    pub peer: Option<NodeId>,
    pub rssi: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceFormat {
    /// Aligned columns for humans.
    Text,
    /// One JSON object per line.
    #[default]
    Records,
}

impl TraceRecord {
    pub fn to_line(&self, format: TraceFormat) -> String {
        match format {
            TraceFormat::Records => serde_json::to_string(self).expect("record serializes"),
            TraceFormat::Text => {
                let mut s = format!("{:>10} {:>6} {:<16}", self.time, self.node, self.event.as_str());
                match self.peer {
                    Some(p) => write!(s, " {:>6}", p).unwrap(),
                    None => s.push_str("      -"),
                }
                match self.rssi {
                    Some(r) => write!(s, " {:>8.2}", r).unwrap(),
                    None => s.push_str("        -"),
                }
                s
            }
        }
    }
}

pub fn render(trace: &[TraceRecord], format: TraceFormat) -> String {
    let mut out = String::new();
    for rec in trace {
        out.push_str(&rec.to_line(format));
        out.push('\n');
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
