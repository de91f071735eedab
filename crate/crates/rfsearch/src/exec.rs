use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Instant;

use rfsearch_core::search::{Clock, Executor};

/// Scoped worker threads pulling job indices from a shared counter.
/// Results come back in job order whatever order they finish in.
#[derive(Clone, Copy, Debug, Default)]
pub struct ThreadExecutor;

impl Executor for ThreadExecutor {
    fn map<T, F>(&self, jobs: usize, parallelism: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = parallelism.clamp(1, jobs.max(1));
        if workers == 1 {
            return (0..jobs).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut done: Vec<(usize, T)> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= jobs {
                                break out;
                            }
                            out.push((i, f(i)));
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
                .collect()
        });
        done.sort_unstable_by_key(|&(i, _)| i);
        done.into_iter().map(|(_, t)| t).collect()
    }
}

/// Monotonic nanoseconds since construction.
#[derive(Clone, Copy, Debug)]
pub struct SystemClock(Instant);

impl Default for SystemClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for SystemClock {
    fn now_nanos(&self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}
