//! Configuration, presets and result serialization for the command-line front end.

pub mod config;
pub mod presets;
pub mod report;

pub use config::{load_config, parse_config, validate_config, RunConfig};
pub use presets::{run_preset, Preset};
pub use report::{ResultBundle, SchmidtSummary};
