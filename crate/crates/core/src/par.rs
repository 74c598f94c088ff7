//! Deterministic work sharing. Grid loops are split into fixed-size chunks;
//! workers claim chunks through an atomic counter and store their results by
//! chunk index, and the caller combines them in chunk order. The reduction
//! tree therefore never depends on the number of threads, and outputs are
//! bit-stable across thread counts.

use std::sync::atomic::{AtomicUsize, Ordering};

static THREADS: AtomicUsize = AtomicUsize::new(0);

/// Thread count used by grid evaluations; 0 means "not configured yet".
pub fn set_threads(n: usize) {
    THREADS.store(n, Ordering::SeqCst);
}

pub fn current_threads() -> usize {
    let configured = THREADS.load(Ordering::SeqCst);
    if configured > 0 {
        return configured;
    }
    match std::env::var("THETAREP_THREADS") {
        Ok(v) => v.parse().unwrap_or(1).max(1),
        Err(_) => 1,
    }
}

/// Evaluate `f` on the chunked range [0, n) and return per-chunk results in
/// chunk order.
pub fn chunked_results<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    assert!(chunk > 0);
    let n_chunks = n.div_ceil(chunk);
    let threads = current_threads().min(n_chunks.max(1));
    if threads <= 1 || n_chunks <= 1 {
        return (0..n_chunks)
            .map(|i| f(i * chunk..((i + 1) * chunk).min(n)))
            .collect();
    }
    let mut slots: Vec<Option<T>> = (0..n_chunks).map(|_| None).collect();
    let next = AtomicUsize::new(0);
    let slot_ptr = SlotTable(slots.as_mut_ptr());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            let f = &f;
            let next = &next;
            let slot_ptr = &slot_ptr;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n_chunks {
                    break;
                }
                let out = f(i * chunk..((i + 1) * chunk).min(n));
                // each chunk index is claimed exactly once, so the write is
                // exclusive
                unsafe {
                    *slot_ptr.0.add(i) = Some(out);
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}

struct SlotTable<T>(*mut Option<T>);
unsafe impl<T: Send> Sync for SlotTable<T> {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_results_cover_range() {
        let parts = chunked_results(103, 10, |r| r.sum::<usize>());
        assert_eq!(parts.len(), 11);
        let total: usize = parts.iter().sum();
        assert_eq!(total, (0..103).sum::<usize>());
    }

    #[test]
    fn identical_results_across_thread_counts() {
        let f = |r: std::ops::Range<usize>| -> f64 {
            r.map(|i| ((i as f64) * 0.1).sin() / (1.0 + i as f64)).sum()
        };
        set_threads(1);
        let a: Vec<f64> = chunked_results(1000, 64, f);
        set_threads(4);
        let b: Vec<f64> = chunked_results(1000, 64, f);
        set_threads(1);
        assert_eq!(a, b);
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        assert!(sa.to_bits() == sb.to_bits());
    }
}
