//! Multi-agent hyperparameter optimization engine.
//!
//! The engine runs a recommend → evaluate → decide loop over native
//! classifiers with stratified k-fold cross-validation. Recommendations and
//! decisions come either from deterministic heuristic agents or from an
//! LLM-backed chat transport with strict structured-output parsing and
//! heuristic fallback. Every run writes a replayable JSONL audit log, and
//! random-search / TPE baselines run over the same search spaces for
//! comparison.

pub mod agents;
pub mod baselines;
pub mod data;
pub mod evaluation;
pub mod gateway;
pub mod models;
pub mod orchestrator;
pub mod space;
pub mod stats;

pub(crate) mod seeding {
    /// Derive an independent seed from a base seed and a stream index
    /// (SplitMix64 over the combined value).
    pub fn derive(seed: u64, stream: u64) -> u64 {
        let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}
