//! Link prediction on signed multi-relational knowledge graphs, with the
//! message-passing connectivity of the GNN expressed as an explicit,
//! schema-level policy decoupled from the graph data.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`kg`] — the graph data model, triple-table and Synthea ingestion,
//!    negative-edge synthesis, patient-level splitting, validation.
//! 2. [`connectivity`] — message rules, the C1–C4 presets, message-graph
//!    construction, and the seen/unseen inference mask.
//! 3. [`nn`] — the from-scratch differentiable core (encoder, decoder,
//!    loss, gradients, Adam) in 64-bit floats throughout.
//! 4. [`datagen`] — a desk-scale synthetic clinical-record generator.
//! 5. [`train`] — the training loop and inductive care-action prediction.
//! 6. [`eval`] — metrics, the four batch experiments, and report files.

pub mod connectivity;
pub mod datagen;
pub mod eval;
pub mod kg;
pub mod nn;
pub mod test_support;
pub mod train;
