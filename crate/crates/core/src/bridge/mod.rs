//! Live bridge between a simulation session and an operator console.
//!
//! Transport is a TCP stream of newline-delimited JSON objects, each with a
//! `type` field. The field-level schema is documented in `docs/protocol.md`.

mod protocol;
mod server;
mod session;

pub use protocol::{
    decode_server_line, encode, parse_client_line, ClientMessage, Envelope, MapInfo, ServerMessage,
    PROTOCOL_VERSION,
};
pub use server::{serve, serve_on, ServeOptions, TELEMETRY_HZ};
pub use session::{Recording, Session, LIVE_DROPOUT_GRACE};
