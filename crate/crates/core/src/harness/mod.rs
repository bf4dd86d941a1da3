//! Seeded experiment pipelines and their CSV/JSON output.
//!
//! Every pipeline takes a [`Scenario`] and returns rows that carry the
//! scenario fingerprint. Grid points run in parallel with per-point seeds
//! `seed ^ index`; inside a point, Monte Carlo work is split into a fixed
//! number of batches per round, each with its own ChaCha stream, so the
//! results do not depend on thread count or scheduling.

pub mod ber;
pub mod flow;
pub mod link;
pub mod mask;
pub mod output;
pub mod scenario;
pub mod sync;

pub use ber::{run_ber, BerRecord};
pub use flow::{run_flow_sim, FlowSummary};
pub use link::{run_link_model, LinkReport, LinkRow, LinkSummary};
pub use mask::{search_scrambler_mask, MaskReport};
pub use output::{OutputFormat, RunMeta};
pub use scenario::Scenario;
pub use sync::{run_sync_experiment, SyncRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for batch `stream` of grid point `point_seed`.
pub fn batch_rng(point_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(stream);
    rng
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Whether `events` out of `trials` is within a 3σ-equivalent band of the
/// rate `p`. Large expected counts use the normal approximation; small ones
/// use two one-sided Poisson tails at the 3σ level (0.135 %).
pub fn consistent_3sigma(events: u64, trials: u64, p: f64) -> bool {
    let mean = trials as f64 * p;
    if mean >= 25.0 {
        let sigma = (mean * (1.0 - p)).sqrt();
        return (events as f64 - mean).abs() <= 3.0 * sigma;
    }
    const TAIL: f64 = 0.00135;
    let (upper, lower) = poisson_tails(events, mean);
    upper >= TAIL && lower >= TAIL
}

/// `(P[X >= k], P[X <= k])` for `X ~ Poisson(mean)`.
fn poisson_tails(k: u64, mean: f64) -> (f64, f64) {
    let mut term = (-mean).exp();
    let mut below = 0.0; // P[X < k]
    for j in 0..k {
        below += term;
        term *= mean / (j + 1) as f64;
    }
    let at = term;
    ((1.0 - below).max(at), (below + at).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson_interval(100, 1_000_000, 1.96);
        assert!(lo < 1e-4 && hi > 1e-4);
        assert!((lo - 8.2e-5).abs() < 2e-6 && (hi - 1.22e-4).abs() < 3e-6);
        let (lo, hi) = wilson_interval(0, 1000, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
    }

    #[test]
    fn three_sigma_rules() {
        assert!(consistent_3sigma(1000, 1_000_000, 1e-3));
        assert!(consistent_3sigma(1090, 1_000_000, 1e-3));
        assert!(!consistent_3sigma(1200, 1_000_000, 1e-3));
        assert!(consistent_3sigma(0, 10_000, 1e-10));
        assert!(!consistent_3sigma(1, 10_000, 1e-10));
        assert!(consistent_3sigma(3, 1000, 2e-3));
        assert!(!consistent_3sigma(0, 1000, 1e-2));
    }

    #[test]
    fn batch_streams_differ() {
        use rand::RngCore;
        let a = batch_rng(7, 0).next_u64();
        let b = batch_rng(7, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, batch_rng(7, 0).next_u64());
    }
}
