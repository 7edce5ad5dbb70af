use std::sync::{Condvar, Mutex};

/// Single-item hand-off where a newer value replaces an unconsumed one.
#[derive(Debug, Default)]
pub struct LatestSlot<T> {
    state: Mutex<(Option<T>, bool)>,
    ready: Condvar,
}

impl<T> LatestSlot<T> {
    pub fn new() -> Self {
        Self {
            state: Mutex::new((None, false)),
            ready: Condvar::new(),
        }
    }

    /// Stores `value`, returning whatever it displaced.
    pub fn put(&self, value: T) -> Option<T> {
        let mut s = self.state.lock().expect("slot lock");
        let old = s.0.replace(value);
        self.ready.notify_one();
        old
    }

    /// No more values will arrive; pending `take` calls drain and return.
    pub fn close(&self) {
        self.state.lock().expect("slot lock").1 = true;
        self.ready.notify_all();
    }

    /// Blocks until a value is available, or `None` once closed and empty.
    pub fn take(&self) -> Option<T> {
        let mut s = self.state.lock().expect("slot lock");
        loop {
            if let Some(v) = s.0.take() {
                return Some(v);
            }
            if s.1 {
                return None;
            }
            s = self.ready.wait(s).expect("slot lock");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latest_wins_and_close() {
        let slot = LatestSlot::new();
        assert_eq!(slot.put(1), None);
        assert_eq!(slot.put(2), Some(1));
        assert_eq!(slot.take(), Some(2));
        slot.close();
        assert_eq!(slot.take(), None);
    }

    #[test]
    fn take_blocks_until_put() {
        let slot = std::sync::Arc::new(LatestSlot::new());
        let s2 = slot.clone();
        let h = std::thread::spawn(move || s2.take());
        std::thread::sleep(std::time::Duration::from_millis(20));
        slot.put(7);
        assert_eq!(h.join().unwrap(), Some(7));
    }
}
