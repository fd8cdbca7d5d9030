//! Allocation audit for dense matrices.
//!
//! When armed, every dense `Mat` allocation is checked against a dimension
//! limit: a matrix with *both* dimensions above the limit is recorded as a
//! violation. The fitting pipeline is required to keep every dense object
//! tall-thin (one dimension O(n), the other O(k)), and the performance tests
//! arm this hook to prove it.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

static ARMED: AtomicBool = AtomicBool::new(false);
static LIMIT: AtomicUsize = AtomicUsize::new(usize::MAX);
static VIOLATIONS: Mutex<Vec<(usize, usize)>> = Mutex::new(Vec::new());

/// Arm the audit: any subsequent dense allocation with both dims > `limit`
/// is recorded. Clears previously recorded violations.
pub fn arm(limit: usize) {
    *VIOLATIONS.lock().unwrap() = Vec::new();
    LIMIT.store(limit, Ordering::SeqCst);
    ARMED.store(true, Ordering::SeqCst);
}

/// Disarm the audit. Recorded violations are kept until the next `arm`.
pub fn disarm() {
    ARMED.store(false, Ordering::SeqCst);
}

/// Violations recorded since the last `arm`, as (rows, cols) pairs.
pub fn violations() -> Vec<(usize, usize)> {
    VIOLATIONS.lock().unwrap().clone()
}

#[inline]
pub(crate) fn record_alloc(rows: usize, cols: usize) {
    if ARMED.load(Ordering::Relaxed) {
        let limit = LIMIT.load(Ordering::Relaxed);
        if rows > limit && cols > limit {
            VIOLATIONS.lock().unwrap().push((rows, cols));
        }
    }
}
