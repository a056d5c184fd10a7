//! Spiking substrate: LIF neuron dynamics, the spike-response-model forward
//! pass, surrogate-gradient training pieces and STDP weight updates.

mod gradient;
mod neuron;
mod plasticity;
mod spike;
mod srm;

pub use gradient::{backprop_step, surrogate_gradient, BackpropContext};
pub use neuron::{heaviside, lif_step, NeuronParams, NeuronState, ResetMode};
pub use plasticity::{init_weights_from_admittance, stdp_update, StdpParams, SynapseMatrix, WeightBounds};
pub use spike::{SpikeTrain, TimeGrid, Window};
pub use srm::{srm_forward, KernelParams};
