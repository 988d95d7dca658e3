//! Thread-pool free row executor built on scoped threads.

use std::num::NonZeroUsize;
use std::thread;

use tsica_core::exec::Executor;

/// Environment variable overriding the default thread count.
pub const THREADS_ENV: &str = "TSICA_THREADS";

/// Runs rows on up to `threads` scoped threads. Each row is still computed
/// by one call, so results do not depend on the thread count.
#[derive(Debug, Clone, Copy)]
pub struct Threaded {
    threads: usize,
}

impl Threaded {
    pub fn new(threads: usize) -> Self {
        Self {
            threads: threads.max(1),
        }
    }

    /// Thread count from `TSICA_THREADS`, else the available parallelism.
    pub fn from_env() -> Self {
        let env = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        Self::new(env.unwrap_or_else(|| {
            thread::available_parallelism()
                .map(NonZeroUsize::get)
                .unwrap_or(1)
        }))
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl Executor for Threaded {
    fn for_each_row(
        &self,
        out: &mut [f64],
        row_len: usize,
        task: &(dyn Fn(usize, &mut [f64]) + Sync),
    ) {
        if row_len == 0 || out.is_empty() {
            return;
        }
        let rows = out.len().div_ceil(row_len);
        let workers = self.threads.min(rows);
        if workers <= 1 {
            for (i, row) in out.chunks_mut(row_len).enumerate() {
                task(i, row);
            }
            return;
        }
        let per = rows.div_ceil(workers);
        thread::scope(|scope| {
            for (w, block) in out.chunks_mut(per * row_len).enumerate() {
                scope.spawn(move || {
                    for (i, row) in block.chunks_mut(row_len).enumerate() {
                        task(w * per + i, row);
                    }
                });
            }
        });
    }
}
