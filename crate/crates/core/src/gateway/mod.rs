//! A local session server: newline-delimited JSON over TCP.
//!
//! One learner seat (a lockstep program or a human typing), any number of
//! observers. See [`protocol`] for the record schema.

pub mod client;
pub mod protocol;
pub mod server;

pub use client::{observe, run_learner, Client};
pub use protocol::{ClientRecord, Mode, Role, ServerRecord, WireEvent, PROTOCOL_VERSION};
pub use server::{serve, Seat, ServeConfig, Server};
