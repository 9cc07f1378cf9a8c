use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// A blocking token bucket.
///
/// Starts full. Refills continuously at `rate` tokens per second up to
/// `capacity`.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<BucketState>,
}

#[derive(Debug)]
struct BucketState {
    tokens: f64,
    last_refill: Instant,
}

impl TokenBucket {
    pub fn new(rate: f64, capacity: f64) -> Self {
        assert!(rate > 0.0, "rate must be positive");
        assert!(capacity >= 1.0, "capacity must allow at least one request");
        TokenBucket {
            rate,
            capacity,
            state: Mutex::new(BucketState {
                tokens: capacity,
                last_refill: Instant::now(),
            }),
        }
    }

    /// A bucket allowing `rate` requests per second with a burst of one second's worth.
    pub fn per_second(rate: f64) -> Self {
        TokenBucket::new(rate, rate.max(1.0))
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Takes one token if available, otherwise returns how long to wait for it.
    pub fn try_acquire(&self) -> Result<(), Duration> {
        let mut state = self.state.lock().expect("token bucket poisoned");
        let now = Instant::now();
        let elapsed = now.duration_since(state.last_refill).as_secs_f64();
        state.tokens = (state.tokens + elapsed * self.rate).min(self.capacity);
        state.last_refill = now;
        if state.tokens >= 1.0 {
            state.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - state.tokens) / self.rate))
        }
    }

    /// Blocks until a token is available and takes it.
    pub fn acquire(&self) {
        while let Err(wait) = self.try_acquire() {
            thread::sleep(wait);
        }
    }
}
