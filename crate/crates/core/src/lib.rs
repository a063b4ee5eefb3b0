pub mod fragment;
pub mod hf;
pub mod metrics;
pub mod molio;
pub mod pipeline;
pub mod reassembly;
