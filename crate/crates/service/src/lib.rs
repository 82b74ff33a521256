//! Networked host for live World Cafe sessions.
//!
//! A [`hub::Hub`] owns every session, serializes its commands, writes each
//! resulting event to the [`store`] before broadcasting it, and fires
//! scheduled rotations. Clients speak the newline-delimited [`protocol`]
//! over TCP or WebSocket; [`http`] exposes the request/response API and
//! [`sim`] drives scripted multi-client runs on a virtual clock.

pub mod app;
pub mod auth;
pub mod clock;
pub mod config;
pub mod conn;
pub mod delphi;
pub mod http;
pub mod hub;
pub mod protocol;
pub mod repo_http;
pub mod server;
pub mod sim;
pub mod store;

pub use app::{ApiError, CreateSessionRequest, Service};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use config::ServiceConfig;
pub use hub::{FrameSink, Hub, RecordingSink};
pub use protocol::{CommandEnvelope, EventEnvelope, ServerFrame};
