pub mod ingest;
pub mod model;
pub mod seed;
pub mod text;
pub mod promptgen;
pub mod taskreg;
pub mod composer;
pub mod evalkit;
pub mod export;
pub mod pipeline;
