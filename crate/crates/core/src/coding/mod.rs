//! Signal-to-spike conversion: deterministic rate and latency coding, the
//! inverse rate decode, and binned cross-entropy between trains.

mod event;

pub use event::{combine_events, event_detect, EventDetector, EventDetectorConfig, EventFlag};

use crate::error::{Error, Result};
use crate::snn::{SpikeTrain, Window};

/// Histogram smoothing for cross-entropy; removes zero bins.
pub const CE_EPSILON: f64 = 1e-6;

/// How sampled values map into spikes over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingConfig {
    /// Window length in seconds.
    pub window: f64,
    /// Histogram resolution for cross-entropy.
    pub bins: usize,
    /// Spike count at full scale for rate coding.
    pub max_spikes: usize,
    /// Signal range mapped onto [0, 1]; values outside are clamped.
    pub value_range: (f64, f64),
}

impl CodingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) {
            return Err(Error::InvalidInput(format!(
                "coding window must be > 0, got {}",
                self.window
            )));
        }
        if self.max_spikes < 1 || self.bins < self.max_spikes {
            return Err(Error::InvalidInput(format!(
                "coding needs bins >= max_spikes >= 1, got bins={} max_spikes={}",
                self.bins, self.max_spikes
            )));
        }
        let (lo, hi) = self.value_range;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "value range must be non-degenerate, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    fn normalize(&self, x: f64) -> f64 {
        let (lo, hi) = self.value_range;
        ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Rate coding: `round(x_norm * max_spikes)` spikes, evenly spaced across
/// the window (spike j of n sits at the center of slot j). Larger values
/// never produce fewer spikes.
pub fn rate_encode(x: f64, cfg: &CodingConfig, window: Window) -> SpikeTrain {
    let n = (cfg.normalize(x) * cfg.max_spikes as f64).round() as usize;
    let slot = window.duration() / n.max(1) as f64;
    let times: Vec<f64> = (0..n)
        .map(|j| window.start + (j as f64 + 0.5) * slot)
        .collect();
    SpikeTrain::new(window, times).expect("centered slots are ordered and in-window")
}

/// Latency coding: one spike at `window * (1 - x_norm)` after the window
/// start — larger values spike earlier.
pub fn latency_encode(x: f64, cfg: &CodingConfig, window: Window) -> SpikeTrain {
    let t = window.start + window.duration() * (1.0 - cfg.normalize(x));
    SpikeTrain::new(window, vec![t]).expect("latency spike lies in the window")
}

/// Inverse of [`rate_encode`], exact up to half a quantization step.
pub fn rate_decode(train: &SpikeTrain, cfg: &CodingConfig) -> Result<f64> {
    let n = train.len();
    if n > cfg.max_spikes {
        return Err(Error::InvalidInput(format!(
            "train has {n} spikes, rate coding allows at most {}",
            cfg.max_spikes
        )));
    }
    let (lo, hi) = cfg.value_range;
    Ok(lo + (n as f64 / cfg.max_spikes as f64) * (hi - lo))
}

/// Bin a train into `bins` slots over its own window.
fn histogram(train: &SpikeTrain, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0f64; bins];
    let w = train.window();
    let span = w.duration();
    for &t in train.times() {
        let idx = (((t - w.start) / span) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1.0;
    }
    counts
}

/// Normalize a histogram, then epsilon-smooth it into a strictly positive
/// distribution: `p_i = (h_i + eps) / (sum(h) + bins * eps)`.
fn smoothed_distribution(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let normalized: Vec<f64> = if total > 0.0 {
        counts.iter().map(|c| c / total).collect()
    } else {
        vec![0.0; counts.len()]
    };
    let mass: f64 = normalized.iter().sum::<f64>() + counts.len() as f64 * CE_EPSILON;
    normalized.iter().map(|h| (h + CE_EPSILON) / mass).collect()
}

/// Cross-entropy `-sum p ln q` between the binned, smoothed forms of the
/// two trains. Equals the entropy of `p` when the trains occupy identical
/// bins, which is also its minimum over `q` (Gibbs' inequality).
pub fn cross_entropy(p_train: &SpikeTrain, q_train: &SpikeTrain, bins: usize) -> f64 {
    debug_assert_eq!(p_train.window(), q_train.window(), "trains must share the window");
    debug_assert!(bins > 0);
    let p = smoothed_distribution(&histogram(p_train, bins));
    let q = smoothed_distribution(&histogram(q_train, bins));
    -p.iter().zip(&q).map(|(pi, qi)| pi * qi.ln()).sum::<f64>()
}
