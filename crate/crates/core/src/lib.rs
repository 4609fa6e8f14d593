//! Wearable contact tracing: beaconing devices that keep an encrypted local
//! record of nearby peers, plus the simulation tooling to check them against
//! geometric ground truth.
//!
//! * [`device`]: per-device beacon/receive protocol
//! * [`crypto`], [`store`], [`dump`], [`memory`]: encrypted contact storage
//! * [`radio`]: path-loss model and broadcast medium
//! * [`sim`]: discrete-event runner, ground-truth oracle, scoring

pub mod crypto;
pub mod device;
pub mod dump;
pub mod id;
pub mod memory;
pub mod radio;
pub mod sim;
pub mod store;

pub use id::NodeId;
