use alloc::vec::Vec;

/// Runs independent jobs, possibly concurrently. Results must come back in
/// job order.
pub trait Executor {
    fn map<T, F>(&self, jobs: usize, parallelism: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs jobs one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, jobs: usize, _parallelism: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..jobs).map(f).collect()
    }
}

impl<X: Executor + ?Sized> Executor for &X {
    fn map<T, F>(&self, jobs: usize, parallelism: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (**self).map(jobs, parallelism, f)
    }
}

/// Monotonic time source for phase timings.
pub trait Clock {
    fn now_nanos(&self) -> u64;
}

/// Always zero; for `no_std` use and tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_nanos(&self) -> u64 {
        0
    }
}
