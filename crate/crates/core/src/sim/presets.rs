//! Reference layouts from the bench prototype.

use crate::id::NodeId;
use crate::radio::Position;

use super::scenario::{DeviceSpec, Scenario};

pub const TEN_MINUTES: u64 = 600;

fn id(v: u64) -> NodeId {
    NodeId::new(v).expect("non-zero")
}

/// Nodes 1 and 2, 7 ft apart, for ten minutes. Neither should record the other.
pub fn two_apart() -> Scenario {
    Scenario {
        seed: 7,
        ..Scenario::new(
            vec![
                DeviceSpec::fixed(id(1), Position::new(0.0, 0.0)),
                DeviceSpec::fixed(id(2), Position::new(7.0, 0.0)),
            ],
            TEN_MINUTES,
        )
    }
}

/// [`two_apart`] plus node 3 halfway between them (3.5 ft from each).
pub fn triangle() -> Scenario {
    let mut s = two_apart();
    s.devices.push(DeviceSpec::fixed(id(3), Position::new(3.5, 0.0)));
    s
}

/// Node 2 stands 3 ft from node 1 until `contact_end`, walks 100 ft away over
/// the next minute, and returns to 3 ft at `return_at` (if given). Both are
/// static while apart.
pub fn encounter(contact_end: u64, return_at: Option<u64>, duration: u64) -> Scenario {
    use super::scenario::Waypoint;
    let near = Position::new(3.0, 0.0);
    let far = Position::new(100.0, 0.0);
    let mut waypoints = vec![
        Waypoint {
            time: contact_end,
            position: near,
        },
        Waypoint {
            time: contact_end + 60,
            position: far,
        },
    ];
    if let Some(back) = return_at {
        waypoints.push(Waypoint {
            time: back - 60,
            position: far,
        });
        waypoints.push(Waypoint {
            time: back,
            position: near,
        });
    }
    Scenario::new(
        vec![
            DeviceSpec::fixed(id(1), Position::new(0.0, 0.0)),
            DeviceSpec {
                waypoints,
                ..DeviceSpec::fixed(id(2), near)
            },
        ],
        duration,
    )
}
