//! Geometric ground truth.
//!
//! Samples every device's position on a fixed time grid and marks a pair in
//! contact whenever their Euclidean distance is within the contact radius.
//! Nothing here touches RSSI, the path-loss model or the device protocol, so
//! agreement with a simulation run is an independent check of the calibrated
//! threshold. Position interpolation is deliberately re-derived here from the
//! raw waypoints rather than borrowed from the scenario type.

use serde::{Deserialize, Serialize};

use crate::id::NodeId;

use super::scenario::{DeviceSpec, Scenario};
use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContactInterval {
    /// Always the smaller id of the pair.
    pub a: NodeId,
    pub b: NodeId,
    /// First and last sample time in contact, inclusive.
    pub start: u64,
    pub end: u64,
}

impl ContactInterval {
    pub fn span(&self) -> u64 {
        self.end - self.start
    }

    pub fn pair(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }
}

/// Maximal contact intervals, sorted by `(a, b, start)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactTruth {
    pub intervals: Vec<ContactInterval>,
}

impl ContactTruth {
    pub fn pairs(&self) -> std::collections::BTreeSet<(NodeId, NodeId)> {
        self.intervals.iter().map(ContactInterval::pair).collect()
    }
}

fn sample_xy(d: &DeviceSpec, t: u64) -> (f64, f64) {
    let (mut t0, mut x0, mut y0) = (0.0, d.position.x, d.position.y);
    let t = t as f64;
    for wp in &d.waypoints {
        let (t1, x1, y1) = (wp.time as f64, wp.position.x, wp.position.y);
        if t < t1 {
            let f = (t - t0) / (t1 - t0);
            return (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        }
        (t0, x0, y0) = (t1, x1, y1);
    }
    (x0, y0)
}

/// Brute-force sweep with the scenario's own radius.
pub fn oracle_contacts(scenario: &Scenario) -> Result<ContactTruth, SimError> {
    oracle_contacts_with_radius(scenario, scenario.contact_radius)
}

pub fn oracle_contacts_with_radius(scenario: &Scenario, radius: f64) -> Result<ContactTruth, SimError> {
    scenario.validate()?;
    if !crate::radio::positive(radius) {
        return Err(SimError::Config("oracle radius must be > 0".into()));
    }
    let mut devices: Vec<&DeviceSpec> = scenario.devices.iter().collect();
    devices.sort_by_key(|d| d.id);
    let n = devices.len();
    let r2 = radius * radius;

    let mut times: Vec<u64> = (0..=scenario.duration)
        .step_by(scenario.oracle_step as usize)
        .collect();
    if times.last() != Some(&scenario.duration) {
        times.push(scenario.duration);
    }

    // open[i][j] = start time of the running interval, if any
    let mut open: Vec<Option<u64>> = vec![None; n * n];
    let mut last_in: Vec<u64> = vec![0; n * n];
    let mut intervals = Vec::new();
    let mut pos = vec![(0.0, 0.0); n];
    for &t in &times {
        for (p, d) in pos.iter_mut().zip(&devices) {
            *p = sample_xy(d, t);
        }
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let k = i * n + j;
                if dx * dx + dy * dy <= r2 {
                    if open[k].is_none() {
                        open[k] = Some(t);
                    }
                    last_in[k] = t;
                } else if let Some(start) = open[k].take() {
                    intervals.push(ContactInterval {
                        a: devices[i].id,
                        b: devices[j].id,
                        start,
                        end: last_in[k],
                    });
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let k = i * n + j;
            if let Some(start) = open[k] {
                intervals.push(ContactInterval {
                    a: devices[i].id,
                    b: devices[j].id,
                    start,
                    end: last_in[k],
                });
            }
        }
    }
    intervals.sort();
    Ok(ContactTruth { intervals })
}
