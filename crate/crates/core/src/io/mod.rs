//! Configuration, persistence and rendering.

pub mod config;
pub mod output;
pub mod render;
pub mod snapshot;

pub use config::{load_config, parse_config, RunConfig};
pub use output::{
    load_run, simulate_config, update_manifest, write_run, write_verdicts, Manifest, ManifestEntry,
    StoredRun,
};
pub use render::{read_png_metadata, write_png};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
