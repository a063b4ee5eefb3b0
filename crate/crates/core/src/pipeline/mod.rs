//! Batch orchestration: ingest, fragment, compute with caching, reassemble
//! and report.

mod cache;
mod config;
mod golden;
mod run;

pub use cache::{CacheRecord, DiskCache};
pub use config::{
    CacheConfig, ConfigError, InputConfig, OutputConfig, PipelineConfig, RunConfig, RunMode, SourceKind,
};
pub use golden::{diff_golden, reference_reports, GoldenDiff, GOLDEN_FILES};
pub use run::{
    execute, run_pipeline, slug, write_outputs, Failure, GtSource, MoleculeReport, PipelineError,
    PipelineOutcome, Purpose, ScfLogEntry, Stage,
};
