use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::{ThreadPool, ThreadPoolBuilder};

/// Resolves a worker budget; 0 means one worker per available CPU.
pub fn resolve(workers: usize) -> usize {
    if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    }
}

/// Shared pool with exactly `workers` threads. Pools are cached per size.
pub(crate) fn pool(workers: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let workers = resolve(workers);
    let mut pools = POOLS.get_or_init(Default::default).lock().unwrap();
    pools
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(move |i| format!("wt-{workers}-{i}"))
                    .build()
                    .expect("failed to spawn worker pool"),
            )
        })
        .clone()
}

/// Runs `f` inside the pool for `workers`. Library calls made from inside
/// that pool with the same worker count reuse it directly.
pub fn install<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    pool(workers).install(f)
}
