//! gaplab — a laboratory for the statistics of gaps between consecutive
//! primes.
//!
//! A bit-packed segmented sieve streams primes in order through a single
//! collector that maintains every statistic of interest (gap histogram,
//! generalized Brun sums, the prime harmonic sum, maximal-gap records, first
//! occurrences, pair counts), snapshotting at configurable thresholds. The
//! `models` module evaluates the closed-form estimates these statistics are
//! compared against, `analysis` turns checkpoints into tables, fits, and
//! sign-change series, and `store` persists runs for resumption and exports
//! CSV.

pub mod analysis;
pub mod cli;
pub mod collector;
pub mod constants;
mod kahan;
pub mod models;
pub mod pipeline;
pub mod sieve;
pub mod store;

pub use kahan::KahanSum;
