//! Droop law, secondary-control objectives and the online gain-adaptation
//! rule `R_d' = R_d - a * dw`.

use crate::error::{Error, Result};
use crate::grid::GridState;

/// Allowed range for virtual droop resistances. The adaptation rule is
/// unbounded on paper; clamping keeps the virtual resistance positive and
/// the converter passive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for GainBounds {
    fn default() -> Self {
        Self { min: 0.1, max: 10.0 }
    }
}

impl GainBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0) || !(self.max >= self.min) {
            return Err(Error::InvalidInput(format!(
                "gain bounds must satisfy 0 < min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Per-node droop gains in ohms, always inside their bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DroopGainVector {
    gains: Vec<f64>,
    bounds: GainBounds,
}

impl DroopGainVector {
    pub fn new(gains: Vec<f64>, bounds: GainBounds) -> Result<Self> {
        bounds.validate()?;
        for (k, g) in gains.iter().enumerate() {
            if !g.is_finite() || *g < bounds.min || *g > bounds.max {
                return Err(Error::InvalidInput(format!(
                    "droop gain for node {} is {} outside [{}, {}]",
                    k + 1,
                    g,
                    bounds.min,
                    bounds.max
                )));
            }
        }
        Ok(Self { gains, bounds })
    }

    pub fn uniform(n: usize, gain: f64, bounds: GainBounds) -> Result<Self> {
        Self::new(vec![gain; n], bounds)
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn get(&self, node: usize) -> f64 {
        self.gains[node]
    }

    pub fn values(&self) -> &[f64] {
        &self.gains
    }

    pub fn bounds(&self) -> GainBounds {
        self.bounds
    }

    /// Replace one gain with an already-clamped value.
    pub fn set(&mut self, node: usize, gain: f64) {
        debug_assert!(gain >= self.bounds.min && gain <= self.bounds.max);
        self.gains[node] = gain;
    }
}

/// Secondary-control configuration: global voltage reference, per-unit
/// sharing weights and the adaptation rate `a` of the gain rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlObjectives {
    pub v_ref: f64,
    pub sharing_ratings: Vec<f64>,
    pub adaptation_rate: f64,
}

impl ControlObjectives {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_ref > 0.0) {
            return Err(Error::InvalidInput(format!(
                "v_ref must be > 0, got {}",
                self.v_ref
            )));
        }
        if !(self.adaptation_rate >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "adaptation rate must be >= 0, got {}",
                self.adaptation_rate
            )));
        }
        if self.sharing_ratings.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidInput("sharing ratings must be > 0".into()));
        }
        Ok(())
    }
}

/// Snapshot of how far the run is from the two secondary objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryMetrics {
    pub avg_voltage_error: f64,
    pub sharing_error: f64,
}

/// Mean voltage over active nodes minus the global reference.
pub fn average_voltage_error(state: &GridState, objectives: &ControlObjectives) -> Result<f64> {
    let active: Vec<f64> = state
        .voltages
        .iter()
        .zip(&state.active)
        .filter(|(_, a)| **a)
        .map(|(v, _)| *v)
        .collect();
    if active.is_empty() {
        return Err(Error::InvalidInput(
            "average voltage error is undefined with no active nodes".into(),
        ));
    }
    Ok(active.iter().sum::<f64>() / active.len() as f64 - objectives.v_ref)
}

/// Per-unit sharing spread `max_k(i_k / rating_k) - min_k(i_k / rating_k)`
/// over the nodes passed in (callers filter to active nodes). Fewer than
/// two entries yield zero spread.
pub fn sharing_error(currents: &[f64], ratings: &[f64]) -> f64 {
    assert_eq!(currents.len(), ratings.len(), "dimension mismatch");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, r) in currents.iter().zip(ratings) {
        let per_unit = i / r;
        lo = lo.min(per_unit);
        hi = hi.max(per_unit);
    }
    if currents.len() < 2 {
        0.0
    } else {
        hi - lo
    }
}

/// Eq.-style gain adaptation: `clamp(gain - a * delta_w, min, max)`.
pub fn update_droop_gain(gain: f64, delta_w: f64, a: f64, bounds: GainBounds) -> f64 {
    (gain - a * delta_w).clamp(bounds.min, bounds.max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(voltages: Vec<f64>, active: Vec<bool>) -> GridState {
        let n = voltages.len();
        GridState {
            time: 0.0,
            voltages,
            source_currents: vec![0.0; n],
            active,
        }
    }

    fn objectives(v_ref: f64) -> ControlObjectives {
        ControlObjectives {
            v_ref,
            sharing_ratings: vec![1.0; 4],
            adaptation_rate: 2.0,
        }
    }

    #[test]
    fn voltage_error_zero_at_reference() {
        let s = state(vec![315.0; 4], vec![true; 4]);
        assert_eq!(average_voltage_error(&s, &objectives(315.0)).unwrap(), 0.0);
    }

    #[test]
    fn voltage_error_uses_arithmetic_mean() {
        let s = state(vec![314.0, 316.0, 315.0, 315.0], vec![true; 4]);
        assert_eq!(average_voltage_error(&s, &objectives(315.0)).unwrap(), 0.0);
        let s = state(vec![310.0; 4], vec![true; 4]);
        assert_eq!(average_voltage_error(&s, &objectives(315.0)).unwrap(), -5.0);
    }

    #[test]
    fn voltage_error_ignores_inactive_and_rejects_none_active() {
        let s = state(vec![310.0, 320.0], vec![true, false]);
        assert_eq!(average_voltage_error(&s, &objectives(315.0)).unwrap(), -5.0);
        let s = state(vec![310.0, 320.0], vec![false, false]);
        assert!(average_voltage_error(&s, &objectives(315.0)).is_err());
    }

    #[test]
    fn sharing_error_cases() {
        assert_eq!(sharing_error(&[10.0, 20.0], &[1.0, 2.0]), 0.0);
        assert_eq!(sharing_error(&[7.5, 7.5], &[1.0, 1.0]), 0.0);
        assert_eq!(sharing_error(&[10.0, 10.0], &[1.0, 2.0]), 5.0);
        assert_eq!(sharing_error(&[42.0], &[2.0]), 0.0);
    }

    #[test]
    fn gain_update_examples() {
        let b = GainBounds::default();
        assert_eq!(update_droop_gain(2.0, 0.0, 2.0, b), 2.0);
        assert_eq!(update_droop_gain(2.0, 0.1, 2.0, b), 1.8);
        // Unclamped value would be -2: positivity is preserved by the clamp.
        assert_eq!(update_droop_gain(2.0, 2.0, 2.0, b), 0.1);
    }

    #[test]
    fn gain_vector_rejects_out_of_bounds() {
        let b = GainBounds::default();
        assert!(DroopGainVector::new(vec![2.0, 11.0], b).is_err());
        assert!(DroopGainVector::new(vec![2.0, 0.05], b).is_err());
        assert!(DroopGainVector::new(vec![2.0], GainBounds { min: -1.0, max: 2.0 }).is_err());
    }

    proptest! {
        /// No stream of updates ever pushes a gain out of its bounds.
        #[test]
        fn clamp_keeps_gains_positive(deltas in proptest::collection::vec(-5.0f64..5.0, 1..200)) {
            let b = GainBounds::default();
            let mut gain = 2.0;
            for dw in deltas {
                gain = update_droop_gain(gain, dw, 2.0, b);
                prop_assert!(gain >= b.min && gain <= b.max);
            }
        }

        /// Larger dw gives a smaller-or-equal updated gain for fixed a > 0.
        #[test]
        fn update_is_monotone_in_delta(gain in 0.1f64..10.0, d1 in -3.0f64..3.0, d2 in -3.0f64..3.0) {
            let b = GainBounds::default();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(update_droop_gain(gain, hi, 2.0, b) <= update_droop_gain(gain, lo, 2.0, b));
        }
    }
}
