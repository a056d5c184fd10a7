//! Transient detection: a binary event flag raised by the signal
//! derivative and lowered once the signal holds a steady band for a full
//! settle window.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Detector tuning per signal (volts or amperes and their rates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventDetectorConfig {
    /// |d(signal)/dt| above this raises the flag, in signal-units/second.
    pub derivative_threshold: f64,
    /// The signal must hold still this long before the flag clears, in
    /// seconds.
    pub settle_window: f64,
    /// "Still" means every sample within this distance of the running mean,
    /// in signal units.
    pub settle_band: f64,
}

impl Default for EventDetectorConfig {
    fn default() -> Self {
        Self {
            derivative_threshold: 500.0,
            settle_window: 50e-3,
            settle_band: 0.5,
        }
    }
}

impl EventDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.derivative_threshold > 0.0 && self.settle_window > 0.0 && self.settle_band > 0.0;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "event detector parameters must all be > 0, got threshold={} settle_window={} settle_band={}",
                self.derivative_threshold, self.settle_window, self.settle_band
            )));
        }
        Ok(())
    }
}

/// Binary transient markers for one node: voltage, current, and their OR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventFlag {
    pub omega_v: u8,
    pub omega_i: u8,
    pub omega: u8,
}

/// `omega = omega_v OR omega_i`.
pub fn combine_events(omega_v: u8, omega_i: u8) -> EventFlag {
    debug_assert!(omega_v <= 1 && omega_i <= 1, "inputs must be binary");
    EventFlag {
        omega_v,
        omega_i,
        omega: omega_v | omega_i,
    }
}

/// Streaming transient detector over one scalar signal.
///
/// Keeps the trailing `settle_window` of samples with O(1) amortized
/// updates (running sum plus monotonic min/max deques), so it can be fed
/// at the integrator step rate.
#[derive(Debug, Clone)]
pub struct EventDetector {
    cfg: EventDetectorConfig,
    samples: VecDeque<(f64, f64)>,
    sum: f64,
    min_deque: VecDeque<(f64, f64)>,
    max_deque: VecDeque<(f64, f64)>,
    last: Option<(f64, f64)>,
    first_time: Option<f64>,
    flag: bool,
}

impl EventDetector {
    pub fn new(cfg: EventDetectorConfig) -> Self {
        Self {
            cfg,
            samples: VecDeque::new(),
            sum: 0.0,
            min_deque: VecDeque::new(),
            max_deque: VecDeque::new(),
            last: None,
            first_time: None,
            flag: false,
        }
    }

    /// Feed one sample and return the current flag (0 or 1).
    pub fn push(&mut self, time: f64, value: f64) -> u8 {
        let derivative = self
            .last
            .filter(|(t_prev, _)| time > *t_prev)
            .map(|(t_prev, x_prev)| (value - x_prev) / (time - t_prev));
        self.last = Some((time, value));
        self.first_time.get_or_insert(time);

        self.samples.push_back((time, value));
        self.sum += value;
        while matches!(self.min_deque.back(), Some(&(_, v)) if v >= value) {
            self.min_deque.pop_back();
        }
        self.min_deque.push_back((time, value));
        while matches!(self.max_deque.back(), Some(&(_, v)) if v <= value) {
            self.max_deque.pop_back();
        }
        self.max_deque.push_back((time, value));

        let horizon = time - self.cfg.settle_window;
        while matches!(self.samples.front(), Some(&(t, _)) if t < horizon) {
            let (t, v) = self.samples.pop_front().unwrap();
            self.sum -= v;
            if matches!(self.min_deque.front(), Some(&(ft, _)) if ft == t) {
                self.min_deque.pop_front();
            }
            if matches!(self.max_deque.front(), Some(&(ft, _)) if ft == t) {
                self.max_deque.pop_front();
            }
        }

        if matches!(derivative, Some(d) if d.abs() > self.cfg.derivative_threshold) {
            self.flag = true;
        } else if self.flag && self.covers_settle_window(time) {
            let mean = self.sum / self.samples.len() as f64;
            let max = self.max_deque.front().map_or(mean, |&(_, v)| v);
            let min = self.min_deque.front().map_or(mean, |&(_, v)| v);
            if max - mean <= self.cfg.settle_band && mean - min <= self.cfg.settle_band {
                self.flag = false;
            }
        }
        self.flag as u8
    }

    pub fn flag(&self) -> u8 {
        self.flag as u8
    }

    /// Settling is only decidable once the history spans a full window.
    fn covers_settle_window(&self, now: f64) -> bool {
        self.first_time
            .is_some_and(|t0| now - t0 >= self.cfg.settle_window * (1.0 - 1e-9))
    }
}

/// Flag state after replaying a sample history `(time, value)`. The history
/// should span at least one settle window for the clear condition to be
/// decidable.
pub fn event_detect(history: &[(f64, f64)], cfg: &EventDetectorConfig) -> u8 {
    let mut detector = EventDetector::new(*cfg);
    let mut flag = 0;
    for &(t, x) in history {
        flag = detector.push(t, x);
    }
    flag
}
