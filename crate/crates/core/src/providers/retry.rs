use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{CompletionProvider, EmbeddingProvider, RerankDoc, RerankHit, RerankProvider};
use crate::error::{Error, Result};

const WINDOW: Duration = Duration::from_secs(60);

/// Source of time for backoff and rate limiting.
pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's own origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Clock that only moves when someone sleeps on it.
#[derive(Debug, Default)]
pub struct SimulatedClock {
    now: Mutex<Duration>,
}

impl SimulatedClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().expect("clock poisoned") += d;
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("clock poisoned")
    }
    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RequestPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub backoff_multiplier: f64,
    pub max_delay_ms: u64,
    /// Upper bound on calls started in any 60 second window.
    pub calls_per_minute: Option<u32>,
    pub max_in_flight: usize,
}

impl Default for RequestPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay_ms: 500,
            backoff_multiplier: 2.0,
            max_delay_ms: 30_000,
            calls_per_minute: None,
            max_in_flight: 8,
        }
    }
}

impl RequestPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_attempts == 0 {
            return Err(Error::InvalidParam("max_attempts must be >= 1".into()));
        }
        if !(self.backoff_multiplier >= 1.0) {
            return Err(Error::InvalidParam("backoff_multiplier must be >= 1".into()));
        }
        if self.calls_per_minute == Some(0) {
            return Err(Error::InvalidParam("calls_per_minute must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidParam("max_in_flight must be positive".into()));
        }
        Ok(())
    }

    /// Delay before attempt `attempt + 1`, where `attempt` is 1-based.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.backoff_multiplier.powi(attempt.saturating_sub(1) as i32);
        let ms = (self.base_delay_ms as f64 * factor).min(self.max_delay_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempted<T> {
    pub value: T,
    pub attempts: u32,
}

fn retryable(err: &Error) -> bool {
    matches!(err, Error::Provider(_) | Error::Io(_))
}

/// Runs `action` until it succeeds or `policy.max_attempts` is used up.
/// The action receives the 1-based attempt number.
pub fn with_retry<T, F>(policy: &RequestPolicy, clock: &dyn Clock, mut action: F) -> Result<Attempted<T>>
where
    F: FnMut(u32) -> Result<T>,
{
    policy.validate()?;
    let mut attempt = 0;
    loop {
        attempt += 1;
        match action(attempt) {
            Ok(value) => return Ok(Attempted { value, attempts: attempt }),
            Err(e) if !retryable(&e) => return Err(e),
            Err(e) if attempt >= policy.max_attempts => {
                return Err(Error::RetriesExhausted { attempts: attempt, last: e.to_string() })
            }
            Err(e) => {
                let delay = policy.backoff(attempt);
                warn!(attempt, ?delay, error = %e, "provider call failed, backing off");
                clock.sleep(delay);
            }
        }
    }
}

/// Sliding-window limiter: no 60 second window contains more than `limit` starts.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    starts: VecDeque<Duration>,
}

impl RateLimiter {
    pub fn new(calls_per_minute: u32) -> Self {
        Self { limit: calls_per_minute.max(1) as usize, starts: VecDeque::new() }
    }

    /// Blocks on `clock` until a call may start, then records the start time.
    pub fn acquire(&mut self, clock: &dyn Clock) -> Duration {
        loop {
            let now = clock.now();
            while let Some(&front) = self.starts.front() {
                if now.saturating_sub(front) >= WINDOW {
                    self.starts.pop_front();
                } else {
                    break;
                }
            }
            if self.starts.len() < self.limit {
                self.starts.push_back(now);
                return now;
            }
            let front = *self.starts.front().expect("non-empty window");
            clock.sleep(front + WINDOW - now);
        }
    }
}

#[derive(Debug)]
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

impl InFlight {
    fn enter(&self) -> InFlightGuard<'_> {
        let mut n = self.count.lock().expect("semaphore poisoned");
        while *n >= self.max {
            n = self.freed.wait(n).expect("semaphore poisoned");
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().expect("semaphore poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

/// Applies a [`RequestPolicy`] (retries, rate limit, in-flight bound) to any provider.
pub struct Resilient<P> {
    inner: P,
    policy: RequestPolicy,
    clock: Arc<dyn Clock>,
    limiter: Option<Mutex<RateLimiter>>,
    in_flight: InFlight,
}

impl<P> Resilient<P> {
    pub fn new(inner: P, policy: RequestPolicy, clock: Arc<dyn Clock>) -> Result<Self> {
        policy.validate()?;
        Ok(Self {
            inner,
            limiter: policy.calls_per_minute.map(|n| Mutex::new(RateLimiter::new(n))),
            in_flight: InFlight { count: Mutex::new(0), freed: Condvar::new(), max: policy.max_in_flight },
            policy,
            clock,
        })
    }

    fn call<T>(&self, mut f: impl FnMut(&P) -> Result<T>) -> Result<T> {
        let _slot = self.in_flight.enter();
        with_retry(&self.policy, self.clock.as_ref(), |_| {
            if let Some(l) = &self.limiter {
                l.lock().expect("limiter poisoned").acquire(self.clock.as_ref());
            }
            f(&self.inner)
        })
        .map(|a| a.value)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for Resilient<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        self.call(|p| p.embed(texts))
    }
}

impl<P: CompletionProvider> CompletionProvider for Resilient<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn complete(&self, prompt: &str, temperature: f64, max_tokens: u32) -> Result<String> {
        self.call(|p| p.complete(prompt, temperature, max_tokens))
    }
}

impl<P: RerankProvider> RerankProvider for Resilient<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn rerank(&self, query: &str, documents: &[RerankDoc<'_>], top_n: usize) -> Result<Vec<RerankHit>> {
        self.call(|p| p.rerank(query, documents, top_n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn fast_policy(max_attempts: u32) -> RequestPolicy {
        RequestPolicy { max_attempts, ..Default::default() }
    }

    #[test]
    fn succeeds_on_third_attempt() {
        let clock = SimulatedClock::default();
        let out = with_retry(&fast_policy(3), &clock, |n| {
            if n < 3 {
                Err(Error::Provider(format!("flaky {n}")))
            } else {
                Ok("done")
            }
        })
        .unwrap();
        assert_eq!(out, Attempted { value: "done", attempts: 3 });
        // 500ms then 1000ms of backoff
        assert_eq!(clock.now(), Duration::from_millis(1500));
    }

    #[test]
    fn gives_up_after_max_attempts() {
        let clock = SimulatedClock::default();
        let calls = AtomicU32::new(0);
        let err = with_retry::<(), _>(&fast_policy(3), &clock, |n| {
            calls.fetch_add(1, Ordering::SeqCst);
            Err(Error::Provider(format!("boom {n}")))
        })
        .unwrap_err();
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        match err {
            Error::RetriesExhausted { attempts, last } => {
                assert_eq!(attempts, 3);
                assert!(last.contains("boom 3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_retryable_errors_return_immediately() {
        let clock = SimulatedClock::default();
        let calls = AtomicU32::new(0);
        let err = with_retry::<(), _>(&fast_policy(5), &clock, |_| {
            calls.fetch_add(1, Ordering::SeqCst);
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        })
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn zero_attempts_rejected() {
        assert!(fast_policy(0).validate().is_err());
    }

    #[test]
    fn backoff_is_capped() {
        let p =
            RequestPolicy { base_delay_ms: 1000, backoff_multiplier: 10.0, max_delay_ms: 5000, ..Default::default() };
        assert_eq!(p.backoff(1), Duration::from_millis(1000));
        assert_eq!(p.backoff(2), Duration::from_millis(5000));
    }

    #[test]
    fn rate_limit_window_never_exceeds_budget() {
        for n in [1u32, 3, 7] {
            let clock = SimulatedClock::default();
            let mut limiter = RateLimiter::new(n);
            let mut starts = Vec::new();
            for i in 0..(3 * n + 1) {
                // irregular arrivals
                clock.advance(Duration::from_millis(u64::from(i % 3) * 7_000));
                starts.push(limiter.acquire(&clock));
            }
            for (i, &s) in starts.iter().enumerate() {
                let in_window = starts[i..].iter().take_while(|&&t| t < s + WINDOW).count();
                assert!(in_window <= n as usize, "n={n}: {in_window} calls within 60s of {s:?}");
            }
            // the (n+1)-th call had to wait for the first window to close
            assert!(starts[n as usize] >= starts[0] + WINDOW);
        }
    }
}
