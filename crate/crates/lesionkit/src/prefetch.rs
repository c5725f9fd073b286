//! Multi-threaded prefetching over an [`ImageProvider`].
//!
//! Workers claim positions of the requested order strictly in sequence and
//! may run ahead of the consumer by at most `capacity + workers` positions,
//! so no more than that many items are ever decoded but undelivered. A
//! reorder buffer keyed by position hands items out in the requested order
//! whatever the scheduling.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};

use lesionkit_core::augment::ProviderErrorKind;
use lesionkit_core::{ImageProvider, Provenance, ProviderError, Sample};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PrefetchError {
    #[error("worker count must be ≥ 1")]
    NoWorkers,
    #[error("buffer capacity must be ≥ 1")]
    NoCapacity,
    #[error("failed to spawn worker: {0}")]
    Spawn(String),
}

type Item = Result<Sample, ProviderError>;

#[derive(Default)]
struct State {
    next_claim: usize,
    delivered: usize,
    ready: BTreeMap<usize, Item>,
    peak: usize,
    shutdown: bool,
}

struct Shared {
    provider: Arc<dyn ImageProvider>,
    order: Vec<usize>,
    window: usize,
    state: Mutex<State>,
    item_ready: Condvar,
    space_free: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        // A poisoned lock only means a thread panicked while holding it; the
        // bookkeeping is still consistent because every update is a single step.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Ordered stream of samples produced by a worker pool. Dropping it stops
/// the workers and joins them.
pub struct PrefetchStream {
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
    next: usize,
}

pub fn prefetch_stream(
    provider: Arc<dyn ImageProvider>,
    order: Vec<usize>,
    workers: usize,
    capacity: usize,
) -> Result<PrefetchStream, PrefetchError> {
    if workers == 0 {
        return Err(PrefetchError::NoWorkers);
    }
    if capacity == 0 {
        return Err(PrefetchError::NoCapacity);
    }
    let shared = Arc::new(Shared {
        provider,
        order,
        window: capacity + workers,
        state: Mutex::new(State::default()),
        item_ready: Condvar::new(),
        space_free: Condvar::new(),
    });
    let mut stream = PrefetchStream {
        shared: Arc::clone(&shared),
        workers: Vec::with_capacity(workers),
        next: 0,
    };
    for i in 0..workers {
        let s = Arc::clone(&shared);
        let handle = thread::Builder::new()
            .name(format!("prefetch-{i}"))
            .spawn(move || worker(&s))
            .map_err(|e| PrefetchError::Spawn(e.to_string()))?;
        stream.workers.push(handle);
    }
    Ok(stream)
}

fn worker(shared: &Shared) {
    loop {
        let pos = {
            let mut st = shared.lock();
            loop {
                if st.shutdown || st.next_claim >= shared.order.len() {
                    return;
                }
                if st.next_claim < st.delivered + shared.window {
                    break;
                }
                st = shared
                    .space_free
                    .wait(st)
                    .unwrap_or_else(|e| e.into_inner());
            }
            st.next_claim += 1;
            st.next_claim - 1
        };
        let index = shared.order[pos];
        let item = panic::catch_unwind(AssertUnwindSafe(|| shared.provider.get(index)))
            .unwrap_or_else(|_| {
                Err(ProviderError::new(
                    Provenance {
                        base_index: index,
                        ..Provenance::default()
                    },
                    ProviderErrorKind::Load(format!("worker panicked on item {index}")),
                ))
            });
        let mut st = shared.lock();
        st.ready.insert(pos, item);
        st.peak = st.peak.max(st.ready.len());
        drop(st);
        shared.item_ready.notify_all();
    }
}

impl PrefetchStream {
    /// Largest number of decoded items that were waiting for delivery at once.
    pub fn peak_undelivered(&self) -> usize {
        self.shared.lock().peak
    }

    /// The most that can ever be waiting: `capacity + workers`.
    pub fn bound(&self) -> usize {
        self.shared.window
    }
}

impl Iterator for PrefetchStream {
    type Item = Item;

    fn next(&mut self) -> Option<Item> {
        if self.next >= self.shared.order.len() {
            return None;
        }
        let mut st = self.shared.lock();
        let item = loop {
            if let Some(item) = st.ready.remove(&self.next) {
                break item;
            }
            st = self
                .shared
                .item_ready
                .wait(st)
                .unwrap_or_else(|e| e.into_inner());
        };
        st.delivered += 1;
        drop(st);
        self.next += 1;
        self.shared.space_free.notify_all();
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.shared.order.len() - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PrefetchStream {}

impl Drop for PrefetchStream {
    fn drop(&mut self) {
        self.shared.lock().shutdown = true;
        self.shared.space_free.notify_all();
        for h in self.workers.drain(..) {
            let _ = h.join();
        }
    }
}
