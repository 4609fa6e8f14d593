//! Per-device beacon protocol.
//!
//! A device beacons its id on a fixed schedule starting at boot (t = 0) and
//! listens continuously in between. A reception at or above the RSSI
//! threshold from a peer not seen within the dedup window is encrypted and
//! stored, and answered with one extra beacon so a peer whose receive window
//! missed the periodic beacon still records us. A repeat within the window
//! only refreshes the timestamp and triggers nothing, which keeps two devices
//! from bouncing beacons off each other.
//!
//! Emitted [`DeviceEvent`]s mirror the prototype's indicator LEDs: red on
//! transmit, green on receive, yellow on an in-range peer.

use serde::{Deserialize, Serialize};

use crate::crypto::{derive_key, ContactCipher, ContactKey};
use crate::id::NodeId;
use crate::store::{CapacityError, ContactStore};

pub const MINUTE: u64 = 60;
pub const DAY: u64 = 86_400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeaconFrame {
    pub sender: NodeId,
    /// Offset from the calibration transmit power, dB.
    pub tx_power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Seconds between scheduled beacons.
    pub beacon_interval: u64,
    /// Seconds within which a repeat sighting is redundant.
    pub dedup_window: u64,
    /// Seconds a record survives after its last sighting.
    pub retention: u64,
    /// dBm; receptions at or above this are contacts.
    pub rssi_threshold: f64,
    /// Fraction of deliveries the receiver actually hears, in (0, 1].
    pub listen_duty_cycle: f64,
    /// dB offset from the calibration transmit power.
    pub tx_power: f64,
    pub capacity_bytes: u64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            beacon_interval: MINUTE,
            dedup_window: DAY,
            retention: 14 * DAY,
            rssi_threshold: -25.0,
            listen_duty_cycle: 1.0,
            tx_power: 0.0,
            capacity_bytes: crate::store::DEFAULT_CAPACITY_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("invalid device config: {0}")]
    Config(&'static str),
    #[error("clock went backwards on node {node}: {now} < {last}")]
    ClockRegression { node: NodeId, now: u64, last: u64 },
    #[error("node {0} received its own beacon")]
    OwnFrame(NodeId),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.beacon_interval == 0 {
            return Err(DeviceError::Config("beacon_interval must be > 0"));
        }
        if self.dedup_window == 0 {
            return Err(DeviceError::Config("dedup_window must be > 0"));
        }
        if self.retention < self.dedup_window {
            return Err(DeviceError::Config("retention must be >= dedup_window"));
        }
        if !(self.listen_duty_cycle > 0.0 && self.listen_duty_cycle <= 1.0) {
            return Err(DeviceError::Config("listen_duty_cycle must be in (0, 1]"));
        }
        if !self.rssi_threshold.is_finite() || !self.tx_power.is_finite() {
            return Err(DeviceError::Config("rssi_threshold and tx_power must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Transmitting,
    Receiving,
    UnsafeProximity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceEvent {
    pub kind: EventKind,
    pub node: NodeId,
    pub time: u64,
    pub peer: Option<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiveOutcome {
    Discarded,
    SavedNew,
    RedundantUpdated,
}

pub fn extra_broadcast_due(outcome: ReceiveOutcome) -> bool {
    outcome == ReceiveOutcome::SavedNew
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickOutput {
    pub beacon: Option<BeaconFrame>,
    pub events: Vec<DeviceEvent>,
    pub evicted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub outcome: ReceiveOutcome,
    /// The catch-up beacon, present iff the outcome is `SavedNew`.
    pub extra_beacon: Option<BeaconFrame>,
    pub events: Vec<DeviceEvent>,
}

#[derive(Clone)]
pub struct Device {
    id: NodeId,
    config: DeviceConfig,
    next_beacon_at: u64,
    last_time: u64,
    store: ContactStore,
    key: ContactKey,
    cipher: ContactCipher,
}

impl std::fmt::Debug for Device {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Device")
            .field("id", &self.id)
            .field("config", &self.config)
            .field("next_beacon_at", &self.next_beacon_at)
            .field("store", &self.store)
            .finish_non_exhaustive()
    }
}

impl Device {
    pub fn new(id: NodeId, config: DeviceConfig) -> Result<Self, DeviceError> {
        config.validate()?;
        let key = derive_key(id);
        Ok(Device {
            id,
            config,
            next_beacon_at: 0,
            last_time: 0,
            store: ContactStore::with_capacity(id, config.capacity_bytes),
            key,
            cipher: ContactCipher::new(&key),
        })
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.config
    }

    pub fn key(&self) -> &ContactKey {
        &self.key
    }

    pub fn store(&self) -> &ContactStore {
        &self.store
    }

    pub fn next_beacon_at(&self) -> u64 {
        self.next_beacon_at
    }

    fn frame(&self) -> BeaconFrame {
        BeaconFrame {
            sender: self.id,
            tx_power: self.config.tx_power,
        }
    }

    fn event(&self, kind: EventKind, time: u64, peer: Option<NodeId>) -> DeviceEvent {
        DeviceEvent {
            kind,
            node: self.id,
            time,
            peer,
        }
    }

    fn advance_clock(&mut self, now: u64) -> Result<(), DeviceError> {
        if now < self.last_time {
            return Err(DeviceError::ClockRegression {
                node: self.id,
                now,
                last: self.last_time,
            });
        }
        self.last_time = now;
        Ok(())
    }

    /// Fires the scheduled beacon if it is due, then runs retention eviction.
    ///
    /// At most one beacon per call; a caller that skips ahead several
    /// intervals gets one beacon and the schedule catches up on later ticks.
    pub fn on_tick(&mut self, now: u64) -> Result<TickOutput, DeviceError> {
        self.advance_clock(now)?;
        if now < self.next_beacon_at {
            return Ok(TickOutput::default());
        }
        self.next_beacon_at += self.config.beacon_interval;
        let evicted = self.store.evict_expired(now, self.config.retention);
        Ok(TickOutput {
            beacon: Some(self.frame()),
            events: vec![self.event(EventKind::Transmitting, now, None)],
            evicted,
        })
    }

    pub fn on_receive(&mut self, frame: &BeaconFrame, rssi: f64, now: u64) -> Result<Reception, DeviceError> {
        if frame.sender == self.id {
            return Err(DeviceError::OwnFrame(self.id));
        }
        self.advance_clock(now)?;
        let peer = frame.sender;
        let mut events = vec![self.event(EventKind::Receiving, now, Some(peer))];

        if rssi < self.config.rssi_threshold {
            return Ok(Reception {
                outcome: ReceiveOutcome::Discarded,
                extra_beacon: None,
                events,
            });
        }

        let ct = self.cipher.encrypt(peer);
        let redundant = self.store.seen_within(&ct, now, self.config.dedup_window);
        self.store.record_contact(ct, now)?;
        events.push(self.event(EventKind::UnsafeProximity, now, Some(peer)));

        let outcome = if redundant {
            ReceiveOutcome::RedundantUpdated
        } else {
            ReceiveOutcome::SavedNew
        };
        let extra_beacon = extra_broadcast_due(outcome).then(|| {
            events.push(self.event(EventKind::Transmitting, now, None));
            self.frame()
        });
        Ok(Reception {
            outcome,
            extra_beacon,
            events,
        })
    }
}
