use super::SpecialValue;
use std::cell::RefCell;

/// Aggregate truncation diagnostics over every [`SpecialValue`] produced inside [`track`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TruncationStats {
    pub calls: usize,
    pub max_terms_used: usize,
    pub max_est_error: f64,
}

impl TruncationStats {
    pub fn merge(&mut self, other: &TruncationStats) {
        self.calls += other.calls;
        self.max_terms_used = self.max_terms_used.max(other.max_terms_used);
        self.max_est_error = self.max_est_error.max(other.max_est_error);
    }
}

thread_local! {
    static FRAMES: RefCell<Vec<TruncationStats>> = const { RefCell::new(Vec::new()) };
}

pub(super) fn record(v: &SpecialValue) {
    FRAMES.with(|f| {
        for s in f.borrow_mut().iter_mut() {
            s.calls += 1;
            s.max_terms_used = s.max_terms_used.max(v.terms_used);
            if v.est_error.is_finite() {
                s.max_est_error = s.max_est_error.max(v.est_error);
            }
        }
    });
}

/// Run `f` and collect truncation diagnostics of all special-function calls it makes
/// on the current thread. Nested calls aggregate into every enclosing frame.
pub fn track<T>(f: impl FnOnce() -> T) -> (T, TruncationStats) {
    FRAMES.with(|fr| fr.borrow_mut().push(TruncationStats::default()));
    let out = f();
    let stats = FRAMES.with(|fr| fr.borrow_mut().pop().unwrap_or_default());
    (out, stats)
}
