//! Command-line front end: model bundles, SVG training curves and the
//! `inspect`/`train`/`evaluate`/`predict`/`plot` subcommands.

pub mod bundle;
pub mod commands;
pub mod error;
pub mod plot;

pub use bundle::{load_bundle, save_bundle, ModelBundle};
pub use error::CliError;
