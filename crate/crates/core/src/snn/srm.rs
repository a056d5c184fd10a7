//! Spike-response-model forward pass: membrane potential as a weighted sum
//! of exponentially filtered input trains plus a self-refractory kernel.

use crate::error::{Error, Result};
use crate::snn::neuron::NeuronParams;
use crate::snn::plasticity::SynapseMatrix;
use crate::snn::spike::{SpikeTrain, TimeGrid};

/// Kernel time constants: `alpha(t) = e^(-t/tau_syn)` for the synaptic
/// stimulus and `beta(t) = -V_th e^(-t/tau_refr)` for the refractory drop,
/// both supported on t >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub tau_syn: f64,
    pub tau_refr: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { tau_syn: 2e-3, tau_refr: 1e-3 }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_syn > 0.0) || !(self.tau_refr > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel time constants must be > 0, got tau_syn={} tau_refr={}",
                self.tau_syn, self.tau_refr
            )));
        }
        Ok(())
    }
}

/// Run one postsynaptic neuron over the grid.
///
/// `inputs[j]` is presynaptic neuron j's train; the membrane is
/// `v(t) = sum_j w(j, post) (alpha * s_j)(t) + (beta * s_post)(t)` and an
/// output spike is emitted at every grid point where v exceeds the
/// threshold. Returns the sampled membrane trace and the output train.
///
/// The exponential kernels are accumulated exactly between grid points, so
/// input spikes need not lie on the grid.
pub fn srm_forward(
    inputs: &[SpikeTrain],
    weights: &SynapseMatrix,
    post: usize,
    kernels: &KernelParams,
    params: &NeuronParams,
    grid: &TimeGrid,
) -> Result<(Vec<f64>, SpikeTrain)> {
    kernels.validate()?;
    if inputs.len() != weights.n() {
        return Err(Error::InvalidInput(format!(
            "{} input trains for a {}-neuron synapse matrix",
            inputs.len(),
            weights.n()
        )));
    }
    if post >= weights.n() {
        return Err(Error::InvalidInput(format!(
            "postsynaptic index {post} out of range 0..{}",
            weights.n()
        )));
    }
    for train in inputs {
        if train.window() != grid.window {
            return Err(Error::InvalidInput(format!(
                "input train window [{}, {}] does not match the evaluation window [{}, {}]",
                train.window().start,
                train.window().end,
                grid.window.start,
                grid.window.end
            )));
        }
    }

    let dt = grid.dt();
    let syn_decay = (-dt / kernels.tau_syn).exp();
    let refr_decay = (-dt / kernels.tau_refr).exp();
    let n = inputs.len();

    // Filtered synaptic state per presynaptic train and a cursor into its
    // spike list.
    let mut syn = vec![0.0f64; n];
    let mut cursor = vec![0usize; n];
    let mut refr = 0.0f64;
    let mut membrane = Vec::with_capacity(grid.steps + 1);
    let mut out_times = Vec::new();

    for i in 0..=grid.steps {
        let t = grid.point(i);
        if i > 0 {
            for s in syn.iter_mut() {
                *s *= syn_decay;
            }
            refr *= refr_decay;
        }
        // Absorb spikes up to and including this grid point with their
        // exact partial decay e^(-(t - s)/tau).
        for (j, train) in inputs.iter().enumerate() {
            let times = train.times();
            while cursor[j] < times.len() && times[cursor[j]] <= t {
                syn[j] += (-(t - times[cursor[j]]) / kernels.tau_syn).exp();
                cursor[j] += 1;
            }
        }

        let mut v = refr;
        for (j, s) in syn.iter().enumerate() {
            v += weights.get(j, post) * s;
        }
        membrane.push(v);

        if v > params.v_threshold {
            out_times.push(t);
            refr -= params.v_threshold;
        }
    }

    let train = SpikeTrain::new(grid.window, out_times)?;
    Ok((membrane, train))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::plasticity::WeightBounds;
    use crate::snn::spike::Window;
    use approx::assert_relative_eq;

    fn grid() -> TimeGrid {
        TimeGrid::new(Window::new(0.0, 10e-3).unwrap(), 100).unwrap()
    }

    fn matrix_with(w01: f64) -> SynapseMatrix {
        let mut m = SynapseMatrix::zeros(2, WeightBounds::default()).unwrap();
        m.set(0, 1, w01);
        m
    }

    fn train_at(times: Vec<f64>) -> SpikeTrain {
        SpikeTrain::new(Window::new(0.0, 10e-3).unwrap(), times).unwrap()
    }

    #[test]
    fn zero_weights_give_silent_neuron() {
        let inputs = vec![train_at(vec![1e-3, 2e-3]), train_at(vec![])];
        let weights = SynapseMatrix::zeros(2, WeightBounds::default()).unwrap();
        let (membrane, out) = srm_forward(
            &inputs,
            &weights,
            1,
            &KernelParams::default(),
            &NeuronParams::default(),
            &grid(),
        )
        .unwrap();
        assert!(membrane.iter().all(|v| *v == 0.0));
        assert!(out.is_empty());
    }

    #[test]
    fn single_impulse_matches_hand_convolution() {
        let t0 = 2e-3;
        let w = 0.5;
        let kernels = KernelParams { tau_syn: 2e-3, tau_refr: 1e-3 };
        let inputs = vec![train_at(vec![t0]), train_at(vec![])];
        let (membrane, out) = srm_forward(
            &inputs,
            &matrix_with(w),
            1,
            &kernels,
            &NeuronParams::default(),
            &grid(),
        )
        .unwrap();
        assert!(out.is_empty(), "0.5 peak stays sub-threshold");
        let g = grid();
        for (i, v) in membrane.iter().enumerate() {
            let t = g.point(i);
            let expected = if t >= t0 { w * (-(t - t0) / kernels.tau_syn).exp() } else { 0.0 };
            assert_relative_eq!(*v, expected, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn subthreshold_membrane_is_linear_in_weights() {
        let inputs = vec![train_at(vec![1e-3, 3e-3, 7e-3]), train_at(vec![])];
        let kernels = KernelParams::default();
        let params = NeuronParams { v_threshold: 100.0, ..NeuronParams::default() };
        let (single, _) =
            srm_forward(&inputs, &matrix_with(0.3), 1, &kernels, &params, &grid()).unwrap();
        let (double, _) =
            srm_forward(&inputs, &matrix_with(0.6), 1, &kernels, &params, &grid()).unwrap();
        for (a, b) in single.iter().zip(&double) {
            assert_relative_eq!(2.0 * a, *b, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn refractory_kernel_suppresses_repeated_firing() {
        // A strong burst of input spikes holds the drive above threshold
        // for most of the window; the self-inhibition must fire on fewer
        // grid points than the drive alone crosses.
        let spikes: Vec<f64> = (1..=20).map(|i| i as f64 * 1e-4).collect();
        let inputs = vec![train_at(spikes), train_at(vec![])];
        let params = NeuronParams::default();
        let (_, out) = srm_forward(
            &inputs,
            &matrix_with(1.0),
            1,
            &KernelParams::default(),
            &params,
            &grid(),
        )
        .unwrap();
        let silent = NeuronParams { v_threshold: 1e9, ..params };
        let (drive, _) = srm_forward(
            &inputs,
            &matrix_with(1.0),
            1,
            &KernelParams::default(),
            &silent,
            &grid(),
        )
        .unwrap();
        let unchecked = drive.iter().filter(|v| **v > params.v_threshold).count();
        assert!(!out.is_empty());
        assert!(
            out.len() < unchecked,
            "{} spikes should be fewer than {} threshold crossings of the raw drive",
            out.len(),
            unchecked
        );
        // Output invariants: strictly increasing inside the window.
        let times = out.times();
        for pair in times.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn mismatched_window_is_rejected() {
        let other = SpikeTrain::new(Window::new(0.0, 5e-3).unwrap(), vec![1e-3]).unwrap();
        let err = srm_forward(
            &[other, train_at(vec![])],
            &matrix_with(0.5),
            1,
            &KernelParams::default(),
            &NeuronParams::default(),
            &grid(),
        );
        assert!(err.is_err());
    }
}
