//! Experiment configuration documents.
//!
//! A document is a list of `[section]` blocks holding `key = value` lines;
//! `#` starts a comment. Numbers take unit suffixes (`2.7 kG`, `100 mK`,
//! `550 kHz`) and lists may be written explicitly (`1, 2, 4 ms`) or as
//! `linspace(a, b, n) unit` / `logspace(a, b, n) unit`.
//!
//! ```text
//! [system]        # any SivParams key, plus b_mag, alpha, temperature
//! [noise]         # repeatable: model = ou | quasistatic | g_factor | tabulated | c13
//! [experiment]    # exactly one: type = odmr | rabi | ramsey | cpmg | t1 | pumping | readout_histogram | ple
//! [run]           # seed, shots, out, dt, workers
//! ```
//!
//! Anything left out of `[system]` or the protocol keys of `[experiment]`
//! falls back to the shipped `defaults.cfg`.

mod canonical;
mod document;
mod error;
mod schema;
mod units;

pub use canonical::canonical;
pub use document::{parse_document, Entry, Section, ValueList};
pub use error::ConfigError;
pub use schema::{
    parse_config, parse_config_file, parse_config_with_base, CpmgFit, Defaults, ExperimentConfig, ExperimentSpec, NoiseSpec,
    Protocol, RunConfig, SystemConfig,
};
pub use units::{format_number, Dim};

use std::sync::OnceLock;

const DEFAULTS_TEXT: &str = include_str!("../../defaults.cfg");

/// The shipped defaults (calibrated emitter parameters and protocol timing).
///
/// Parsed once; a broken defaults file is a build defect, hence the panic.
pub fn defaults() -> &'static Defaults {
    static CELL: OnceLock<Defaults> = OnceLock::new();
    CELL.get_or_init(|| schema::parse_defaults(DEFAULTS_TEXT).unwrap_or_else(|e| panic!("defaults.cfg: {e}")))
}

/// Text of the shipped defaults file.
pub fn defaults_text() -> &'static str {
    DEFAULTS_TEXT
}
