//! Simulated broadcast medium with a log-distance path-loss model.
//!
//! `rssi(d) = rssi_at_ref - 10 * n * log10(d / d0)`, distances in feet.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::device::BeaconFrame;
use crate::id::NodeId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadioError {
    #[error("unknown sender {0}")]
    UnknownSender(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} already registered")]
    Duplicate(NodeId),
    #[error("invalid path-loss model: {0}")]
    Model(&'static str),
    #[error("position must be finite")]
    Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossModel {
    /// dBm at `ref_distance`, for a transmitter at calibration power.
    pub rssi_at_ref: f64,
    /// Feet.
    pub ref_distance: f64,
    pub exponent: f64,
    /// Deliveries below this are lost.
    pub noise_floor: f64,
    /// Distances below this are clamped.
    pub min_distance: f64,
    /// Standard deviation of optional log-normal shadowing, dB. Zero disables it.
    pub shadowing_sigma: f64,
}

pub const DEFAULT_EXPONENT: f64 = 2.0;
pub const CALIBRATION_RSSI: f64 = -25.0;
pub const CALIBRATION_DISTANCE_FT: f64 = 6.0;

impl Default for PathLossModel {
    /// Classroom calibration: -25 dBm at 6 ft with n = 2.
    fn default() -> Self {
        calibrate(CALIBRATION_RSSI, CALIBRATION_DISTANCE_FT, DEFAULT_EXPONENT)
    }
}

/// False for NaN as well as for values <= 0.
pub(crate) fn positive(v: f64) -> bool {
    v > 0.0
}

impl PathLossModel {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !positive(self.exponent) {
            return Err(RadioError::Model("exponent must be > 0"));
        }
        if !positive(self.ref_distance) {
            return Err(RadioError::Model("ref_distance must be > 0"));
        }
        if !positive(self.min_distance) {
            return Err(RadioError::Model("min_distance must be > 0"));
        }
        if self.shadowing_sigma.is_nan() || self.shadowing_sigma < 0.0 {
            return Err(RadioError::Model("shadowing_sigma must be >= 0"));
        }
        if !self.rssi_at_ref.is_finite() || !self.noise_floor.is_finite() {
            return Err(RadioError::Model("rssi_at_ref and noise_floor must be finite"));
        }
        Ok(())
    }

    pub fn rssi_at(&self, distance: f64) -> f64 {
        let d = distance.max(self.min_distance);
        self.rssi_at_ref - 10.0 * self.exponent * (d / self.ref_distance).log10()
    }

    /// Inverse of [`rssi_at`](Self::rssi_at) for distances above the clamp.
    pub fn distance_for(&self, rssi: f64) -> f64 {
        self.ref_distance * 10f64.powf((self.rssi_at_ref - rssi) / (10.0 * self.exponent))
    }
}

/// Builds a model whose curve passes through `(target_distance, target_rssi)`,
/// with a 1 ft reference distance.
pub fn calibrate(target_rssi: f64, target_distance: f64, exponent: f64) -> PathLossModel {
    let ref_distance = 1.0;
    PathLossModel {
        rssi_at_ref: target_rssi + 10.0 * exponent * (target_distance / ref_distance).log10(),
        ref_distance,
        exponent,
        noise_floor: -90.0,
        min_distance: 0.1,
        shadowing_sigma: 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Delivery {
    pub receiver: NodeId,
    pub rssi: f64,
}

#[derive(Debug, Clone)]
pub struct Medium {
    devices: BTreeMap<NodeId, Position>,
    model: PathLossModel,
    rng: ChaCha8Rng,
}

impl Medium {
    pub fn new(model: PathLossModel, seed: u64) -> Result<Self, RadioError> {
        model.validate()?;
        Ok(Medium {
            devices: BTreeMap::new(),
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn model(&self) -> &PathLossModel {
        &self.model
    }

    pub fn register(&mut self, node: NodeId, pos: Position) -> Result<(), RadioError> {
        if !pos.is_finite() {
            return Err(RadioError::Position);
        }
        if self.devices.contains_key(&node) {
            return Err(RadioError::Duplicate(node));
        }
        self.devices.insert(node, pos);
        Ok(())
    }

    pub fn position(&self, node: NodeId) -> Option<Position> {
        self.devices.get(&node).copied()
    }

    pub fn move_to(&mut self, node: NodeId, pos: Position) -> Result<(), RadioError> {
        if !pos.is_finite() {
            return Err(RadioError::Position);
        }
        let slot = self.devices.get_mut(&node).ok_or(RadioError::UnknownNode(node))?;
        *slot = pos;
        Ok(())
    }

    /// Fans a frame out to every other device at or above the noise floor,
    /// in ascending receiver id order.
    pub fn broadcast(&mut self, frame: &BeaconFrame) -> Result<Vec<Delivery>, RadioError> {
        let origin = self
            .position(frame.sender)
            .ok_or(RadioError::UnknownSender(frame.sender))?;
        let shadowing = (self.model.shadowing_sigma > 0.0)
            .then(|| Normal::new(0.0, self.model.shadowing_sigma).expect("validated sigma"));
        let mut out = Vec::new();
        for (&receiver, &pos) in &self.devices {
            if receiver == frame.sender {
                continue;
            }
            let mut rssi = self.model.rssi_at(origin.distance(pos)) + frame.tx_power;
            if let Some(normal) = &shadowing {
                rssi += normal.sample(&mut self.rng);
            }
            if rssi >= self.model.noise_floor {
                out.push(Delivery { receiver, rssi });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: u64) -> NodeId {
        NodeId::new(v).unwrap()
    }

    fn frame(sender: u64) -> BeaconFrame {
        BeaconFrame {
            sender: id(sender),
            tx_power: 0.0,
        }
    }

    #[test]
    fn calibrated_curve_values() {
        let m = PathLossModel::default();
        assert!((m.rssi_at(6.0) - -25.0).abs() < 1e-12);
        // -25 + 20 log10 6
        assert!((m.rssi_at_ref - -9.436975).abs() < 1e-5);
        assert!((m.rssi_at(1.0) - -9.44).abs() < 0.01);
        assert!((m.rssi_at(12.0) - -31.02).abs() < 0.01);
        assert!((m.rssi_at(3.0) - -18.98).abs() < 0.01);
    }

    #[test]
    fn calibrate_at_reference() {
        let m = calibrate(-25.0, 1.0, 2.0);
        assert_eq!(m.rssi_at_ref, -25.0);
    }

    #[test]
    fn distance_clamped() {
        let m = PathLossModel::default();
        assert_eq!(m.rssi_at(0.0), m.rssi_at(0.1));
    }

    #[test]
    fn distance_for_inverts() {
        let m = PathLossModel::default();
        assert!((m.distance_for(-25.0) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_models_rejected() {
        let m = PathLossModel {
            exponent: 0.0,
            ..PathLossModel::default()
        };
        assert!(Medium::new(m, 0).is_err());
        let m = PathLossModel {
            min_distance: -1.0,
            ..PathLossModel::default()
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn triangle_broadcast() {
        // node 3 sits 3 ft from both 1 and 2
        let mut med = Medium::new(PathLossModel::default(), 0).unwrap();
        med.register(id(1), Position::new(0.0, 0.0)).unwrap();
        med.register(id(2), Position::new(0.0, 6.0)).unwrap();
        med.register(id(3), Position::new(0.0, 3.0)).unwrap();
        let d = med.broadcast(&frame(3)).unwrap();
        assert_eq!(d.iter().map(|d| d.receiver.get()).collect::<Vec<_>>(), [1, 2]);
        for delivery in d {
            assert!((delivery.rssi - -18.98).abs() < 0.01);
        }
    }

    #[test]
    fn floor_and_self_delivery() {
        let mut med = Medium::new(PathLossModel::default(), 0).unwrap();
        med.register(id(1), Position::new(0.0, 0.0)).unwrap();
        assert!(med.broadcast(&frame(1)).unwrap().is_empty());
        med.register(id(2), Position::new(1e6, 0.0)).unwrap();
        assert!(med.broadcast(&frame(1)).unwrap().is_empty());
        assert_eq!(med.broadcast(&frame(9)), Err(RadioError::UnknownSender(id(9))));
    }

    #[test]
    fn moves() {
        let mut med = Medium::new(PathLossModel::default(), 0).unwrap();
        med.register(id(1), Position::new(0.0, 0.0)).unwrap();
        med.register(id(2), Position::new(12.0, 0.0)).unwrap();
        let far = med.broadcast(&frame(1)).unwrap()[0].rssi;
        med.move_to(id(2), Position::new(12.0, 0.0)).unwrap();
        assert_eq!(med.broadcast(&frame(1)).unwrap()[0].rssi, far);
        med.move_to(id(2), Position::new(50.0, 0.0)).unwrap();
        med.move_to(id(2), Position::new(6.0, 0.0)).unwrap();
        assert!((med.broadcast(&frame(1)).unwrap()[0].rssi - -25.0).abs() < 1e-9);
        assert_eq!(
            med.move_to(id(7), Position::default()),
            Err(RadioError::UnknownNode(id(7)))
        );
        assert_eq!(
            med.register(id(1), Position::default()),
            Err(RadioError::Duplicate(id(1)))
        );
    }

    #[test]
    fn tx_power_shifts_rssi() {
        let mut med = Medium::new(PathLossModel::default(), 0).unwrap();
        med.register(id(1), Position::new(0.0, 0.0)).unwrap();
        med.register(id(2), Position::new(6.0, 0.0)).unwrap();
        let d = med
            .broadcast(&BeaconFrame {
                sender: id(1),
                tx_power: -3.0,
            })
            .unwrap();
        assert!((d[0].rssi - -28.0).abs() < 1e-9);
    }

    #[test]
    fn shadowing_is_seeded() {
        let model = PathLossModel {
            shadowing_sigma: 4.0,
            ..PathLossModel::default()
        };
        let run = |seed| {
            let mut med = Medium::new(model, seed).unwrap();
            med.register(id(1), Position::new(0.0, 0.0)).unwrap();
            med.register(id(2), Position::new(6.0, 0.0)).unwrap();
            (0..5)
                .map(|_| med.broadcast(&frame(1)).unwrap()[0].rssi)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
