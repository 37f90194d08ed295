pub mod gnh;
pub mod hodge;
pub mod modes;
pub mod propagate;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Evaluate `f` over `0..count`, optionally on several threads, returning
/// the results in index order (output is identical for any thread count).
pub fn parallel_map<T: Send>(
    count: usize,
    threads: usize,
    f: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(count));
    std::thread::scope(|scope| {
        for _ in 0..threads.min(count) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let value = f(i);
                collected.lock().expect("worker poisoned").push((i, value));
            });
        }
    });
    let mut items = collected.into_inner().expect("collection poisoned");
    items.sort_by_key(|&(i, _)| i);
    items.into_iter().map(|(_, v)| v).collect()
}
