//! Configuration, corpus metadata and batch orchestration.

mod config;
mod corpus;
mod pipeline;

pub use config::{AnalysisConfig, EmitFlags, SizeClassConfig};
pub use corpus::{load_corpus_metadata, read_corpus, InstrumentRecord};
pub use pipeline::{
    run_corpus, run_instrument, CorpusReport, InstrumentReport, PlateReport, Stage, StageTiming,
    Status, SCHEMA_VERSION,
};
