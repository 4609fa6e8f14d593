//! Browser bindings for the static demo page in `www/`.
//!
//! Every export returns JSON text; the plain functions in [`demo`] do the
//! work so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod demo {
    use serde::Serialize;

    use securetrack_core::device::DeviceConfig;
    use securetrack_core::memory::{memory_estimate, ContactHistogram};
    use securetrack_core::radio::PathLossModel;
    use securetrack_core::sim::{
        compare_banded, oracle_contacts_with_radius, run, RandomWaypoint, Scenario, TraceEvent,
    };

    #[derive(Serialize)]
    struct CurvePoint {
        distance: f64,
        rssi: f64,
        saved: bool,
    }

    /// RSSI against distance for the default calibrated model.
    pub fn rssi_curve(max_distance: f64, steps: u32) -> Result<String, String> {
        if !(max_distance.is_finite() && max_distance > 0.0) || steps < 2 {
            return Err("need a positive distance and at least two steps".into());
        }
        let model = PathLossModel::default();
        let threshold = DeviceConfig::default().rssi_threshold;
        let points: Vec<_> = (0..steps)
            .map(|i| {
                let distance = max_distance * f64::from(i + 1) / f64::from(steps);
                let rssi = model.rssi_at(distance);
                CurvePoint {
                    distance,
                    rssi,
                    saved: rssi >= threshold,
                }
            })
            .collect();
        Ok(serde_json::to_string(&points).expect("curve serializes"))
    }

    /// Accepts one number (same every day) or 14 comma-separated counts.
    pub fn estimate(input: &str) -> Result<String, String> {
        let counts = input
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|e| format!("{s:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let hist = match counts.as_slice() {
            [n] => ContactHistogram::uniform(*n),
            days => ContactHistogram::try_from(days).map_err(|e| e.to_string())?,
        };
        let kb = memory_estimate(&hist);
        Ok(serde_json::json!({ "entries": hist.total().to_string(), "kb": kb.as_f64(), "display": kb.to_string() })
            .to_string())
    }

    #[derive(Serialize)]
    struct Frame {
        t: u64,
        positions: Vec<[f64; 2]>,
    }

    #[derive(Serialize)]
    struct Save {
        t: u64,
        node: u64,
        peer: u64,
    }

    #[derive(Serialize)]
    struct Run {
        width: f64,
        height: f64,
        ids: Vec<u64>,
        frames: Vec<Frame>,
        saves: Vec<Save>,
        stores: Vec<(u64, Vec<u64>)>,
        detected: usize,
        missed: Vec<(u64, u64)>,
        spurious: Vec<(u64, u64)>,
    }

    /// Random-waypoint run scored against the geometric truth, with
    /// positions sampled every `frame_step` seconds for animation.
    pub fn simulate(nodes: u32, duration: u64, seed: u64, frame_step: u64) -> Result<String, String> {
        if !(2..=60).contains(&nodes) || !(60..=4 * 3600).contains(&duration) || frame_step == 0 {
            return Err("nodes must be 2-60, duration 60-14400 s, frame step positive".into());
        }
        let params = RandomWaypoint {
            nodes: nodes as usize,
            duration,
            seed,
            ..RandomWaypoint::default()
        };
        let scenario = Scenario::random_waypoint(&params);
        let result = run(&scenario).map_err(|e| e.to_string())?;
        let contacts = result.contacts().map_err(|e| e.to_string())?;
        let r = scenario.contact_radius;
        let inner = oracle_contacts_with_radius(&scenario, r - 0.5).map_err(|e| e.to_string())?;
        let outer = oracle_contacts_with_radius(&scenario, r + 0.5).map_err(|e| e.to_string())?;
        let report = compare_banded(&contacts, &inner, &outer, 120);

        let frames = (0..=duration)
            .step_by(frame_step as usize)
            .map(|t| Frame {
                t,
                positions: scenario
                    .devices
                    .iter()
                    .map(|d| {
                        let p = d.position_at(t);
                        [p.x, p.y]
                    })
                    .collect(),
            })
            .collect();
        let saves = result
            .trace
            .iter()
            .filter(|rec| rec.event == TraceEvent::SavedNew)
            .filter_map(|rec| {
                Some(Save {
                    t: rec.time,
                    node: rec.node.get(),
                    peer: rec.peer?.get(),
                })
            })
            .collect();
        let pair = |(a, b): &(securetrack_core::NodeId, securetrack_core::NodeId)| (a.get(), b.get());
        let out = Run {
            width: params.width,
            height: params.height,
            ids: scenario.devices.iter().map(|d| d.id.get()).collect(),
            frames,
            saves,
            stores: contacts
                .iter()
                .map(|(o, peers)| (o.get(), peers.keys().map(|p| p.get()).collect()))
                .collect(),
            detected: report.detected.len(),
            missed: report.missed.iter().map(pair).collect(),
            spurious: report.spurious.iter().map(pair).collect(),
        };
        Ok(serde_json::to_string(&out).expect("run serializes"))
    }
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// JSON array of `{distance, rssi, saved}`.
#[wasm_bindgen(js_name = rssiCurve)]
pub fn rssi_curve(max_distance: f64, steps: u32) -> Result<String, JsError> {
    js(demo::rssi_curve(max_distance, steps))
}

#[wasm_bindgen(js_name = estimateMemory)]
pub fn estimate_memory(input: &str) -> Result<String, JsError> {
    js(demo::estimate(input))
}

#[wasm_bindgen]
pub fn simulate(nodes: u32, duration: u32, seed: u32, frame_step: u32) -> Result<String, JsError> {
    js(demo::simulate(
        nodes,
        duration.into(),
        seed.into(),
        frame_step.into(),
    ))
}
