use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{Clock, GatewayError};

const WINDOW: Duration = Duration::from_secs(60);

/// Sliding-window limiter: at most `requests_per_minute` grants in any 60 s window.
///
/// Shared by every caller of one provider profile.
pub struct RateLimiter {
    requests_per_minute: u32,
    clock: Arc<dyn Clock>,
    granted: Mutex<VecDeque<Duration>>,
}

impl std::fmt::Debug for RateLimiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RateLimiter")
            .field("requests_per_minute", &self.requests_per_minute)
            .finish()
    }
}

impl RateLimiter {
    pub fn new(requests_per_minute: u32, clock: Arc<dyn Clock>) -> Self {
        assert!(requests_per_minute > 0, "requests_per_minute must be positive");
        Self {
            requests_per_minute,
            clock,
            granted: Mutex::new(VecDeque::new()),
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Grants a slot now, or returns how long until one frees up.
    fn try_acquire(&self) -> Result<(), Duration> {
        let now = self.clock.now();
        let mut granted = self.granted.lock().unwrap();
        while let Some(&oldest) = granted.front() {
            if now.saturating_sub(oldest) >= WINDOW {
                granted.pop_front();
            } else {
                break;
            }
        }
        if granted.len() < self.requests_per_minute as usize {
            granted.push_back(now);
            Ok(())
        } else {
            let oldest = *granted.front().expect("window is full");
            Err((oldest + WINDOW).saturating_sub(now).max(Duration::from_millis(1)))
        }
    }

    /// Waits for a slot, or fails with `RateLimited` when `wait` is false.
    pub async fn acquire(&self, wait: bool) -> Result<(), GatewayError> {
        loop {
            match self.try_acquire() {
                Ok(()) => return Ok(()),
                Err(_) if !wait => {
                    return Err(GatewayError::RateLimited {
                        requests_per_minute: self.requests_per_minute,
                    })
                }
                Err(delay) => self.clock.sleep(delay).await,
            }
        }
    }
}
