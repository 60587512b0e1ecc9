use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Token bucket with a capacity of one: over any window of `w` seconds at
/// most `rate * w + 1` acquisitions complete.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_free: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `per_second` must be positive and finite.
    pub fn new(per_second: f64) -> Self {
        assert!(per_second > 0.0 && per_second.is_finite(), "rate must be positive");
        Self { interval: Duration::from_secs_f64(1.0 / per_second), next_free: Mutex::new(None) }
    }

    /// Blocks until a request may be issued. Callers are serialized.
    pub fn acquire(&self) -> Instant {
        let mut next = self.next_free.lock().expect("rate limiter poisoned");
        let mut now = Instant::now();
        if let Some(t) = *next {
            if t > now {
                thread::sleep(t - now);
                now = Instant::now();
            }
        }
        *next = Some(now + self.interval);
        now
    }
}
