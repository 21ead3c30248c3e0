//! File formats, project layout, command-line tool and elicitation service
//! for learning weighted STL specifications from pairwise preferences.
//!
//! The algorithms live in [`wstlpref_core`]; this crate adds everything that
//! needs `std`: JSON documents ([`format`]), atomic on-disk storage
//! ([`store`]), configuration files ([`config`]), elicitation sessions
//! ([`session`]) and the HTTP service that serves them ([`serve`]).

pub mod cli;
pub mod config;
mod error;
pub mod format;
pub mod serve;
pub mod session;
pub mod store;

pub use error::{Error, Result};
pub use wstlpref_core as core;
