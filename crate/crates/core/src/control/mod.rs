//! Live operation: command queue, simulation loop and network transport.

pub mod protocol;
pub mod server;
pub mod service;

pub use protocol::{decode_message, encode_message, Command, ErrorEvent, Frame, Hello, Snapshot};
pub use server::Server;
pub use service::{run_loop, CommandQueue, Envelope, LiveOptions, LiveSim, Outbound};
