//! Scenario definition and its TOML config format.
//!
//! ```toml
//! schema = 1
//! duration = 600
//! seed = 7
//!
//! [model]
//! calibration = { rssi = -25.0, distance = 6.0, exponent = 2.0 }
//!
//! [device_defaults]
//! beacon_interval = 60
//!
//! [[devices]]
//! id = 1
//! x = 0.0
//! y = 0.0
//! waypoints = [{ t = 300, x = 10.0, y = 0.0 }]
//! ```

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::DeviceConfig;
use crate::id::NodeId;
use crate::radio::{calibrate, PathLossModel, Position};

use super::SimError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CONTACT_RADIUS_FT: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Waypoint {
    pub time: u64,
    pub position: Position,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceSpec {
    pub id: NodeId,
    pub position: Position,
    /// Strictly increasing times, all after t = 0.
    pub waypoints: Vec<Waypoint>,
    pub config: DeviceConfig,
}

impl DeviceSpec {
    pub fn fixed(id: NodeId, position: Position) -> Self {
        DeviceSpec {
            id,
            position,
            waypoints: Vec::new(),
            config: DeviceConfig::default(),
        }
    }

    /// Linear interpolation between waypoints; holds still after the last.
    pub fn position_at(&self, t: u64) -> Position {
        let mut from = Waypoint {
            time: 0,
            position: self.position,
        };
        for &wp in &self.waypoints {
            if t < wp.time {
                let span = (wp.time - from.time) as f64;
                let f = (t - from.time) as f64 / span;
                return Position::new(
                    from.position.x + (wp.position.x - from.position.x) * f,
                    from.position.y + (wp.position.y - from.position.y) * f,
                );
            }
            from = wp;
        }
        from.position
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub devices: Vec<DeviceSpec>,
    pub duration: u64,
    pub model: PathLossModel,
    pub seed: u64,
    /// Seconds between oracle samples.
    pub oracle_step: u64,
    /// Feet.
    pub contact_radius: f64,
}

impl Scenario {
    pub fn new(devices: Vec<DeviceSpec>, duration: u64) -> Self {
        Scenario {
            devices,
            duration,
            model: PathLossModel::default(),
            seed: 0,
            oracle_step: 1,
            contact_radius: DEFAULT_CONTACT_RADIUS_FT,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.duration == 0 {
            return bad("duration must be > 0".into());
        }
        if self.oracle_step == 0 {
            return bad("oracle_step must be > 0".into());
        }
        if !(self.contact_radius > 0.0 && self.contact_radius.is_finite()) {
            return bad("contact_radius must be a positive number".into());
        }
        if self.devices.is_empty() {
            return bad("scenario has no devices".into());
        }
        self.model
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        let mut seen = BTreeSet::new();
        for d in &self.devices {
            if !seen.insert(d.id) {
                return bad(format!("duplicate device id {}", d.id));
            }
            if !d.position.is_finite() {
                return bad(format!("device {}: position must be finite", d.id));
            }
            d.config
                .validate()
                .map_err(|e| SimError::Config(format!("device {}: {e}", d.id)))?;
            let mut prev = 0;
            for wp in &d.waypoints {
                if wp.time <= prev {
                    return bad(format!(
                        "device {}: waypoint times must be strictly increasing and after t=0",
                        d.id
                    ));
                }
                if !wp.position.is_finite() {
                    return bad(format!("device {}: waypoint position must be finite", d.id));
                }
                prev = wp.time;
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| SimError::Config(e.message().to_owned()))?;
        cfg.into_scenario()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioConfig::from_scenario(self)).expect("scenario serializes")
    }

    /// Random-waypoint mobility in a rectangular room.
    pub fn random_waypoint(params: &RandomWaypoint) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let point = |rng: &mut ChaCha8Rng| {
            Position::new(
                rng.random_range(0.0..params.width),
                rng.random_range(0.0..params.height),
            )
        };
        let devices = (1..=params.nodes as u64)
            .map(|raw| {
                let id = NodeId::new(raw).expect("ids start at 1");
                let start = point(&mut rng);
                let mut waypoints = Vec::new();
                let (mut t, mut at) = (0u64, start);
                while t < params.duration {
                    let target = point(&mut rng);
                    let speed = rng.random_range(params.min_speed..=params.max_speed);
                    let travel = ((at.distance(target) / speed).ceil() as u64).max(1);
                    t += travel;
                    waypoints.push(Waypoint {
                        time: t,
                        position: target,
                    });
                    at = target;
                    let pause = rng.random_range(0..=params.max_pause);
                    if pause > 0 {
                        t += pause;
                        waypoints.push(Waypoint {
                            time: t,
                            position: at,
                        });
                    }
                }
                DeviceSpec {
                    id,
                    position: start,
                    waypoints,
                    config: DeviceConfig::default(),
                }
            })
            .collect();
        Scenario {
            seed: params.seed,
            ..Scenario::new(devices, params.duration)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomWaypoint {
    pub nodes: usize,
    pub duration: u64,
    /// Room size, feet.
    pub width: f64,
    pub height: f64,
    /// Feet per second.
    pub min_speed: f64,
    pub max_speed: f64,
    /// Seconds.
    pub max_pause: u64,
    pub seed: u64,
}

impl Default for RandomWaypoint {
    fn default() -> Self {
        RandomWaypoint {
            nodes: 20,
            duration: 2 * 3600,
            width: 40.0,
            height: 40.0,
            min_speed: 0.5,
            max_speed: 2.0,
            max_pause: 300,
            seed: 0,
        }
    }
}

// ---- config document ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    schema: u32,
    duration: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_oracle_step")]
    oracle_step: u64,
    #[serde(default = "default_contact_radius")]
    contact_radius: f64,
    #[serde(default)]
    model: ModelConfig,
    #[serde(default)]
    device_defaults: DeviceOverrides,
    devices: Vec<DeviceEntry>,
}

fn default_oracle_step() -> u64 {
    1
}

fn default_contact_radius() -> f64 {
    DEFAULT_CONTACT_RADIUS_FT
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<Calibration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rssi_at_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ref_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shadowing_sigma: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Calibration {
    rssi: f64,
    distance: f64,
    exponent: f64,
}

impl ModelConfig {
    fn build(&self) -> Result<PathLossModel, SimError> {
        let mut model = match &self.calibration {
            Some(c) => {
                if self.rssi_at_ref.is_some() || self.exponent.is_some() || self.ref_distance.is_some() {
                    return Err(SimError::Config(
                        "model: calibration conflicts with rssi_at_ref/exponent/ref_distance".into(),
                    ));
                }
                if !crate::radio::positive(c.distance) {
                    return Err(SimError::Config("model: calibration distance must be > 0".into()));
                }
                calibrate(c.rssi, c.distance, c.exponent)
            }
            None => PathLossModel::default(),
        };
        if let Some(v) = self.rssi_at_ref {
            model.rssi_at_ref = v;
        }
        if let Some(v) = self.ref_distance {
            model.ref_distance = v;
        }
        if let Some(v) = self.exponent {
            model.exponent = v;
        }
        if let Some(v) = self.noise_floor {
            model.noise_floor = v;
        }
        if let Some(v) = self.min_distance {
            model.min_distance = v;
        }
        if let Some(v) = self.shadowing_sigma {
            model.shadowing_sigma = v;
        }
        Ok(model)
    }
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    beacon_interval: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dedup_window: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retention: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rssi_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    listen_duty_cycle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tx_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity_bytes: Option<u64>,
}

impl DeviceOverrides {
    fn apply(&self, mut c: DeviceConfig) -> DeviceConfig {
        c.beacon_interval = self.beacon_interval.unwrap_or(c.beacon_interval);
        c.dedup_window = self.dedup_window.unwrap_or(c.dedup_window);
        c.retention = self.retention.unwrap_or(c.retention);
        c.rssi_threshold = self.rssi_threshold.unwrap_or(c.rssi_threshold);
        c.listen_duty_cycle = self.listen_duty_cycle.unwrap_or(c.listen_duty_cycle);
        c.tx_power = self.tx_power.unwrap_or(c.tx_power);
        c.capacity_bytes = self.capacity_bytes.unwrap_or(c.capacity_bytes);
        c
    }

    fn diff(base: &DeviceConfig, c: &DeviceConfig) -> Self {
        fn keep<T: PartialEq + Copy>(a: T, b: T) -> Option<T> {
            (a != b).then_some(b)
        }
        DeviceOverrides {
            beacon_interval: keep(base.beacon_interval, c.beacon_interval),
            dedup_window: keep(base.dedup_window, c.dedup_window),
            retention: keep(base.retention, c.retention),
            rssi_threshold: keep(base.rssi_threshold, c.rssi_threshold),
            listen_duty_cycle: keep(base.listen_duty_cycle, c.listen_duty_cycle),
            tx_power: keep(base.tx_power, c.tx_power),
            capacity_bytes: keep(base.capacity_bytes, c.capacity_bytes),
        }
    }

    fn is_empty(&self) -> bool {
        self.beacon_interval.is_none()
            && self.dedup_window.is_none()
            && self.retention.is_none()
            && self.rssi_threshold.is_none()
            && self.listen_duty_cycle.is_none()
            && self.tx_power.is_none()
            && self.capacity_bytes.is_none()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceEntry {
    id: u64,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "DeviceOverrides::is_empty")]
    config: DeviceOverrides,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    waypoints: Vec<WaypointEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointEntry {
    t: u64,
    x: f64,
    y: f64,
}

impl ScenarioConfig {
    fn into_scenario(self) -> Result<Scenario, SimError> {
        if self.schema != SCHEMA_VERSION {
            return Err(SimError::Config(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        let base = self.device_defaults.apply(DeviceConfig::default());
        let devices = self
            .devices
            .into_iter()
            .map(|d| {
                let id = NodeId::new(d.id).map_err(|e| SimError::Config(e.to_string()))?;
                Ok(DeviceSpec {
                    id,
                    position: Position::new(d.x, d.y),
                    waypoints: d
                        .waypoints
                        .into_iter()
                        .map(|w| Waypoint {
                            time: w.t,
                            position: Position::new(w.x, w.y),
                        })
                        .collect(),
                    config: d.config.apply(base),
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let scenario = Scenario {
            devices,
            duration: self.duration,
            model: self.model.build()?,
            seed: self.seed,
            oracle_step: self.oracle_step,
            contact_radius: self.contact_radius,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn from_scenario(s: &Scenario) -> Self {
        let base = DeviceConfig::default();
        ScenarioConfig {
            schema: SCHEMA_VERSION,
            duration: s.duration,
            seed: s.seed,
            oracle_step: s.oracle_step,
            contact_radius: s.contact_radius,
            model: ModelConfig {
                calibration: None,
                rssi_at_ref: Some(s.model.rssi_at_ref),
                ref_distance: Some(s.model.ref_distance),
                exponent: Some(s.model.exponent),
                noise_floor: Some(s.model.noise_floor),
                min_distance: Some(s.model.min_distance),
                shadowing_sigma: Some(s.model.shadowing_sigma),
            },
            device_defaults: DeviceOverrides::default(),
            devices: s
                .devices
                .iter()
                .map(|d| DeviceEntry {
                    id: d.id.get(),
                    x: d.position.x,
                    y: d.position.y,
                    config: DeviceOverrides::diff(&base, &d.config),
                    waypoints: d
                        .waypoints
                        .iter()
                        .map(|w| WaypointEntry {
                            t: w.time,
                            x: w.position.x,
                            y: w.position.y,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
