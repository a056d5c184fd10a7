//! Spike trains and the time windows they live in.

use crate::error::{Error, Result};

/// A coding window in absolute simulation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window must satisfy start < end, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Ordered binary spike events over one coding window — the only currency
/// exchanged between the electrical and neural layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    window: Window,
    times: Vec<f64>,
}

impl SpikeTrain {
    /// Build a train, enforcing strictly increasing in-window times.
    pub fn new(window: Window, times: Vec<f64>) -> Result<Self> {
        for pair in times.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidInput(format!(
                    "spike times must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if let (Some(first), Some(last)) = (times.first(), times.last()) {
            if !window.contains(*first) || !window.contains(*last) {
                return Err(Error::InvalidInput(format!(
                    "spike times [{first}, {last}] leave the window [{}, {}]",
                    window.start, window.end
                )));
            }
        }
        Ok(Self { window, times })
    }

    pub fn empty(window: Window) -> Self {
        Self { window, times: Vec::new() }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Delay of the first spike relative to the window start.
    pub fn first_latency(&self) -> Option<f64> {
        self.times.first().map(|t| t - self.window.start)
    }

    /// Time of the in-train spike closest to `t` (trains are sorted, so
    /// this is a binary search).
    pub fn nearest_spike(&self, t: f64) -> Option<f64> {
        if self.times.is_empty() {
            return None;
        }
        let idx = self.times.partition_point(|&s| s < t);
        let mut best = None;
        for candidate in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if let Some(&s) = self.times.get(candidate) {
                best = match best {
                    None => Some(s),
                    Some(b) if (s - t).abs() < (b - t).abs() => Some(s),
                    other => other,
                };
            }
        }
        best
    }
}

/// Uniform evaluation grid over a window; `steps` intervals give
/// `steps + 1` sample points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub window: Window,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(window: Window, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput("time grid needs at least one step".into()));
        }
        Ok(Self { window, steps })
    }

    pub fn dt(&self) -> f64 {
        self.window.duration() / self.steps as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.window.start + self.dt() * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.point(i))
    }
}
