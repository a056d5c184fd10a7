//! Synaptic weights and spike-timing-dependent plasticity.

use crate::error::{Error, Result};
use crate::grid::AdmittanceMatrix;
use crate::snn::spike::SpikeTrain;

/// Clamp range for synaptic weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for WeightBounds {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0 }
    }
}

impl WeightBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.max > self.min) || !self.min.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weight bounds must satisfy min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Dense (pre, post) synaptic weight matrix, every entry inside its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseMatrix {
    n: usize,
    weights: Vec<f64>,
    bounds: WeightBounds,
}

impl SynapseMatrix {
    pub fn zeros(n: usize, bounds: WeightBounds) -> Result<Self> {
        bounds.validate()?;
        let fill = 0.0f64.clamp(bounds.min, bounds.max);
        Ok(Self { n, weights: vec![fill; n * n], bounds })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bounds(&self) -> WeightBounds {
        self.bounds
    }

    pub fn get(&self, pre: usize, post: usize) -> f64 {
        self.weights[pre * self.n + post]
    }

    pub fn set(&mut self, pre: usize, post: usize, w: f64) {
        self.weights[pre * self.n + post] = w.clamp(self.bounds.min, self.bounds.max);
    }

    /// Add `delta` to every off-diagonal weight, clamping per entry, and
    /// return the mean change actually applied — the "variation of weights"
    /// that feeds the droop adaptation rule.
    pub fn apply_uniform_delta(&mut self, delta: f64) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut applied = 0.0;
        for pre in 0..self.n {
            for post in 0..self.n {
                if pre == post {
                    continue;
                }
                let old = self.get(pre, post);
                let new = (old + delta).clamp(self.bounds.min, self.bounds.max);
                self.weights[pre * self.n + post] = new;
                applied += new - old;
            }
        }
        applied / (self.n * (self.n - 1)) as f64
    }
}

/// STDP window amplitudes and time constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            a_plus: 0.05,
            a_minus: 0.05,
            tau_plus: 5e-3,
            tau_minus: 5e-3,
        }
    }
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.a_plus > 0.0 && self.a_minus > 0.0 && self.tau_plus > 0.0 && self.tau_minus > 0.0;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "stdp parameters must all be > 0, got a+={} a-={} tau+={} tau-={}",
                self.a_plus, self.a_minus, self.tau_plus, self.tau_minus
            )));
        }
        Ok(())
    }
}

fn pair_contribution(dt: f64, params: &StdpParams) -> f64 {
    if dt >= 0.0 {
        params.a_plus * (-dt / params.tau_plus).exp()
    } else {
        -params.a_minus * (dt / params.tau_minus).exp()
    }
}

/// Window Δw from nearest-neighbor STDP pairing.
///
/// Each post spike pairs with its nearest pre spike and each pre spike with
/// its nearest post spike; the two sums are averaged. The symmetric form
/// keeps |Δw| bounded by the spike count while negating exactly under a
/// pre/post swap with symmetric parameters.
pub fn stdp_update(pre: &SpikeTrain, post: &SpikeTrain, params: &StdpParams) -> f64 {
    debug_assert_eq!(pre.window(), post.window(), "trains must share the window");
    if pre.is_empty() || post.is_empty() {
        return 0.0;
    }
    let post_centric: f64 = post
        .times()
        .iter()
        .map(|&t_post| pair_contribution(t_post - pre.nearest_spike(t_post).unwrap(), params))
        .sum();
    let pre_centric: f64 = pre
        .times()
        .iter()
        .map(|&t_pre| pair_contribution(post.nearest_spike(t_pre).unwrap() - t_pre, params))
        .sum();
    0.5 * (post_centric + pre_centric)
}

/// Seed synaptic weights from the tie-line admittances: each off-diagonal
/// |Y_ij| is normalized by the largest off-diagonal magnitude and scaled to
/// the upper weight bound; diagonals stay at zero.
pub fn init_weights_from_admittance(
    y: &AdmittanceMatrix,
    bounds: WeightBounds,
) -> Result<SynapseMatrix> {
    bounds.validate()?;
    let n = y.n();
    let mut peak = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                peak = peak.max(y.get(i, j).abs());
            }
        }
    }
    if peak == 0.0 {
        return Err(Error::InvalidInput(
            "admittance matrix has no off-diagonal coupling to seed weights from".into(),
        ));
    }
    let mut weights = SynapseMatrix::zeros(n, bounds)?;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                weights.set(i, j, y.get(i, j).abs() / peak * bounds.max);
            }
        }
    }
    Ok(weights)
}
