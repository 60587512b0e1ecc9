use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

/// Millisecond time source for step timestamps.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock;

impl Clock for WallClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Advances by a fixed tick on every reading, so runs against scripted
/// collaborators log identical timestamps.
#[derive(Debug)]
pub struct LogicalClock {
    next: AtomicU64,
    tick_ms: u64,
}

impl LogicalClock {
    pub fn new(tick_ms: u64) -> Self {
        Self { next: AtomicU64::new(0), tick_ms }
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::new(1000)
    }
}

impl Clock for LogicalClock {
    fn now_ms(&self) -> u64 {
        self.next.fetch_add(self.tick_ms, Ordering::SeqCst)
    }
}

/// Which clock each run gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockKind {
    Wall,
    Logical,
}

impl ClockKind {
    pub fn make(self) -> Box<dyn Clock> {
        match self {
            ClockKind::Wall => Box::new(WallClock),
            ClockKind::Logical => Box::new(LogicalClock::default()),
        }
    }
}
