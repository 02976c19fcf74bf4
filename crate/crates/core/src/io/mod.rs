//! Dataset ingestion and serialization formats.
//!
//! Trajectories are delimiter-separated text for inspectability; descriptor
//! payloads are binary because real datasets reach 10^5 frames at thousands
//! of dimensions. The manifest is JSON with a schema version. All three
//! formats round-trip byte-identically: write, read, write again produces
//! the same bytes.

pub mod dataset;
pub mod descriptor;
pub mod manifest;
pub mod sweep_csv;
pub mod trajectory;

pub use dataset::{load_dataset, save_suite, LoadedDataset};
pub use descriptor::{read_descriptors, write_descriptors};
pub use manifest::{BenchmarkManifest, EnvType, ManifestCase, ManifestEnvironment};
pub use trajectory::{read_trajectory, write_trajectory};
