//! Leaky integrate-and-fire neuron with an exact exponential membrane
//! update (stable for any step size, exact for piecewise-constant input).

/// Spike indicator: 1 for x > 0, else 0.
pub fn heaviside(x: f64) -> u8 {
    if x > 0.0 {
        1
    } else {
        0
    }
}

/// What happens to the membrane when the threshold is crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResetMode {
    /// Drop the membrane by exactly the threshold.
    #[default]
    SubtractThreshold,
    /// Snap back to the rest potential.
    ToRest,
}

/// Membrane RC parameters and firing threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    /// Membrane resistance in ohms.
    pub r_mem: f64,
    /// Membrane capacitance in farads.
    pub c_mem: f64,
    /// Rest potential in volts.
    pub v_rest: f64,
    /// Firing threshold in volts (strictly above rest).
    pub v_threshold: f64,
    pub reset: ResetMode,
}

impl NeuronParams {
    pub fn tau(&self) -> f64 {
        self.r_mem * self.c_mem
    }

    pub fn is_valid(&self) -> bool {
        self.r_mem > 0.0 && self.c_mem > 0.0 && self.v_threshold > self.v_rest
    }
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            r_mem: 1.0,
            c_mem: 1.0,
            v_rest: 0.0,
            v_threshold: 1.0,
            reset: ResetMode::SubtractThreshold,
        }
    }
}

/// Membrane potential plus firing bookkeeping for one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub v_mem: f64,
    pub last_spike_time: Option<f64>,
    /// Local clock advanced by `lif_step`, in seconds since reset.
    pub time: f64,
}

impl NeuronState {
    pub fn at_rest(params: &NeuronParams) -> Self {
        Self {
            v_mem: params.v_rest,
            last_spike_time: None,
            time: 0.0,
        }
    }
}

/// Advance the membrane by `dt` under a constant input current.
///
/// The membrane relaxes exponentially toward `V_r + I R` with time constant
/// `R C`; crossing the threshold emits a spike and applies the reset rule.
pub fn lif_step(
    state: &NeuronState,
    params: &NeuronParams,
    input_current: f64,
    dt: f64,
) -> (NeuronState, bool) {
    debug_assert!(params.is_valid());
    debug_assert!(dt > 0.0);
    let target = params.v_rest + input_current * params.r_mem;
    let decay = (-dt / params.tau()).exp();
    let mut v = target + (state.v_mem - target) * decay;
    let time = state.time + dt;
    let spiked = heaviside(v - params.v_threshold) == 1;
    if spiked {
        v = match params.reset {
            ResetMode::SubtractThreshold => v - params.v_threshold,
            ResetMode::ToRest => params.v_rest,
        };
    }
    (
        NeuronState {
            v_mem: v,
            last_spike_time: if spiked { Some(time) } else { state.last_spike_time },
            time,
        },
        spiked,
    )
}
