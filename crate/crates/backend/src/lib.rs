//! Health-center backend for SecureTrack.
//!
//! Keeps the student registry, decrypts the contact store of a device whose
//! owner tested positive, maps decrypted node ids back to students and sends
//! exposure notices. Everything is reachable through [`api::router`].

pub mod api;
pub mod db;
pub mod error;
pub mod model;
pub mod notifier;
pub mod server;

pub use db::Database;
pub use error::{BackendError, NotifierError};
pub use notifier::{Message, Notifier};
pub use server::{ServeConfig, Server};
