//! Discrete-event loop.
//!
//! Events are ordered by `(time, node, sequence)`. Every device boots with a
//! scheduled beacon at t = 0. A catch-up beacon triggered by a new contact is
//! queued at the same timestamp, after the delivery that caused it, and is
//! traced as `Transmitting` when it actually goes on air.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::{BeaconFrame, Device, DeviceEvent, EventKind};
use crate::dump;
use crate::id::NodeId;
use crate::radio::Medium;

use super::scenario::Scenario;
use super::trace::{TraceEvent, TraceRecord};
use super::{SimError, SimulationResult};

// Keeps the duty-cycle stream independent of the medium's shadowing stream.
const LISTEN_STREAM: u64 = 0x6c69_7374_656e;

enum Action {
    Tick,
    Extra { frame: BeaconFrame, event: DeviceEvent },
}

struct Scheduled {
    time: u64,
    node: NodeId,
    seq: u64,
    action: Action,
}

impl Scheduled {
    fn key(&self) -> (u64, NodeId, u64) {
        (self.time, self.node, self.seq)
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so BinaryHeap pops the earliest event.
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

struct Engine<'a> {
    scenario: &'a Scenario,
    devices: BTreeMap<NodeId, Device>,
    medium: Medium,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    listen_rng: ChaCha8Rng,
    positions_at: Option<u64>,
    trace: Vec<TraceRecord>,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let mut medium =
            Medium::new(scenario.model, scenario.seed).map_err(|e| SimError::Config(e.to_string()))?;
        let mut devices = BTreeMap::new();
        for spec in &scenario.devices {
            medium
                .register(spec.id, spec.position)
                .map_err(|e| SimError::Config(e.to_string()))?;
            devices.insert(spec.id, Device::new(spec.id, spec.config)?);
        }
        let mut engine = Engine {
            scenario,
            devices,
            medium,
            queue: BinaryHeap::new(),
            seq: 0,
            listen_rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ LISTEN_STREAM),
            positions_at: None,
            trace: Vec::new(),
        };
        let ids: Vec<NodeId> = engine.devices.keys().copied().collect();
        for id in ids {
            engine.schedule(0, id, Action::Tick);
        }
        Ok(engine)
    }

    fn schedule(&mut self, time: u64, node: NodeId, action: Action) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            node,
            seq: self.seq,
            action,
        });
    }

    fn sync_positions(&mut self, t: u64) -> Result<(), SimError> {
        if self.positions_at == Some(t) {
            return Ok(());
        }
        for spec in &self.scenario.devices {
            self.medium.move_to(spec.id, spec.position_at(t))?;
        }
        self.positions_at = Some(t);
        Ok(())
    }

    fn record(
        &mut self,
        time: u64,
        node: NodeId,
        event: TraceEvent,
        peer: Option<NodeId>,
        rssi: Option<f64>,
    ) {
        self.trace.push(TraceRecord {
            time,
            node,
            event,
            peer,
            rssi,
        });
    }

    fn record_event(&mut self, e: &DeviceEvent, rssi: Option<f64>) {
        self.record(e.time, e.node, e.kind.into(), e.peer, rssi);
    }

    fn transmit(&mut self, frame: BeaconFrame, now: u64) -> Result<(), SimError> {
        self.sync_positions(now)?;
        for delivery in self.medium.broadcast(&frame)? {
            let device = self.devices.get_mut(&delivery.receiver).expect("registered");
            let duty = device.config().listen_duty_cycle;
            if duty < 1.0 && self.listen_rng.random::<f64>() >= duty {
                continue;
            }
            let rx = device.on_receive(&frame, delivery.rssi, now)?;
            let rssi = Some(delivery.rssi);
            let mut pending = None;
            for e in &rx.events {
                match e.kind {
                    EventKind::Receiving => {
                        self.record_event(e, rssi);
                        self.record(now, e.node, rx.outcome.into(), e.peer, rssi);
                    }
                    EventKind::UnsafeProximity => self.record_event(e, rssi),
                    EventKind::Transmitting => pending = Some(*e),
                }
            }
            if let (Some(frame), Some(event)) = (rx.extra_beacon, pending) {
                self.schedule(now, delivery.receiver, Action::Extra { frame, event });
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<SimulationResult, SimError> {
        while let Some(ev) = self.queue.pop() {
            if ev.time > self.scenario.duration {
                break;
            }
            match ev.action {
                Action::Tick => {
                    let device = self.devices.get_mut(&ev.node).expect("registered");
                    let out = device.on_tick(ev.time)?;
                    let next = device.next_beacon_at();
                    for e in &out.events {
                        self.record_event(e, None);
                    }
                    if let Some(frame) = out.beacon {
                        self.transmit(frame, ev.time)?;
                    }
                    self.schedule(next, ev.node, Action::Tick);
                }
                Action::Extra { frame, event } => {
                    self.record_event(&event, None);
                    self.transmit(frame, ev.time)?;
                }
            }
        }
        let stores = self
            .devices
            .iter()
            .map(|(&id, d)| (id, dump::dump(d.store())))
            .collect();
        Ok(SimulationResult {
            stores,
            trace: self.trace,
            truth: None,
        })
    }
}

/// Runs a scenario to completion. Events at exactly `duration` are included.
pub fn run(scenario: &Scenario) -> Result<SimulationResult, SimError> {
    Engine::new(scenario)?.run()
}
