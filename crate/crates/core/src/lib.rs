//! Condition-based maintenance engine for simulated railway assets.
//!
//! The crate is organised along the seven OSA-CBM processing levels:
//!
//! | level | module |
//! |-------|--------|
//! | 1 sensing | [`simulator`] (ground-truth degradation and noisy sensors) |
//! | 2 signal processing | [`signal`] |
//! | 3 condition monitoring | [`monitor`] |
//! | 4 health assessment / diagnosis | [`diagnosis`] |
//! | 5 prognostics | [`prognostics`] |
//! | 6 decision support | [`decision`] |
//! | 7 presentation | [`service`] (HTTP/SSE API), [`cli`] and [`report`] |
//!
//! [`engine`] wires the levels into a single ordered tick, persists every
//! event to an append-only NDJSON log ([`domain::codec`]) and replays logs
//! deterministically. [`scenario`] loads fleet and policy configuration.
//!
//! ```no_run
//! use cbm::engine::Engine;
//! use cbm::scenario::Scenario;
//!
//! let scenario = Scenario::railyard_default();
//! let mut engine = Engine::new(scenario).unwrap();
//! while !engine.finished() {
//!     for event in engine.tick().unwrap() {
//!         println!("{}", cbm::domain::codec::encode_event(&event).unwrap());
//!     }
//! }
//! ```

pub mod cli;
pub mod decision;
pub mod diagnosis;
pub mod domain;
pub mod engine;
pub mod error;
pub mod monitor;
pub mod prognostics;
pub mod report;
pub mod scenario;
pub mod service;
pub mod signal;
pub mod simulator;

pub use error::{Error, Result};
