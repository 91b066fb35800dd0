//! Counter-based random streams: one independent ChaCha stream per `(seed, stream id)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Environment variable overriding the worker count of parallel estimators.
pub const WORKERS_ENV: &str = "POISSON_FORMS_WORKERS";

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Runs `f` on a rayon pool sized by [`WORKERS_ENV`] when it is set.
///
/// Results never depend on the worker count: every parallel estimator in the
/// crate draws from per-index streams and reduces in index order.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
