//! Surrogate-gradient pieces for backprop-style training through the
//! non-differentiable spike.

use std::f64::consts::PI;

/// Smooth stand-in for the spike derivative: `(1/pi) / (1 + (pi u)^2)`,
/// evaluated at the membrane's distance from threshold.
pub fn surrogate_gradient(u: f64) -> f64 {
    (1.0 / PI) / (1.0 + (PI * u).powi(2))
}

/// The three factors of the chain rule dL/dW = dL/dS * dS/dU * dU/dW; the
/// middle factor is approximated by [`surrogate_gradient`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackpropContext {
    /// dL/dS_out.
    pub loss_grad_wrt_spikes: f64,
    /// dU/dW_in: the presynaptic activity trace.
    pub presyn_trace: f64,
    /// Membrane sample U in volts.
    pub membrane_sample: f64,
}

/// Weight gradient `dL/dS * g(U - V_th) * dU/dW`.
pub fn backprop_step(ctx: &BackpropContext, v_threshold: f64) -> f64 {
    ctx.loss_grad_wrt_spikes
        * surrogate_gradient(ctx.membrane_sample - v_threshold)
        * ctx.presyn_trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn surrogate_peak_is_one_over_pi() {
        assert_relative_eq!(surrogate_gradient(0.0), 1.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn surrogate_at_one_over_pi() {
        assert_relative_eq!(surrogate_gradient(1.0 / PI), 1.0 / (2.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn quadrature_matches_antiderivative() {
        // Integral of the surrogate over [-100, 100] is
        // (1/pi^2) * 2 * atan(100 pi); composite Simpson at h = 1 mV.
        let (a, b) = (-100.0f64, 100.0f64);
        let n = 200_000usize; // even
        let h = (b - a) / n as f64;
        let mut sum = surrogate_gradient(a) + surrogate_gradient(b);
        for i in 1..n {
            let coeff = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += coeff * surrogate_gradient(a + h * i as f64);
        }
        let quadrature = sum * h / 3.0;
        let exact = (1.0 / (PI * PI)) * 2.0 * (100.0 * PI).atan();
        assert!(
            (quadrature - exact).abs() <= 1e-6,
            "quadrature {quadrature} vs exact {exact}"
        );
    }

    #[test]
    fn zero_factor_kills_gradient() {
        let ctx = BackpropContext {
            loss_grad_wrt_spikes: 0.0,
            presyn_trace: 3.0,
            membrane_sample: 0.7,
        };
        assert_eq!(backprop_step(&ctx, 1.0), 0.0);
    }

    #[test]
    fn gradient_peaks_at_threshold() {
        let ctx = BackpropContext {
            loss_grad_wrt_spikes: 1.0,
            presyn_trace: 1.0,
            membrane_sample: 1.0,
        };
        assert_relative_eq!(backprop_step(&ctx, 1.0), 1.0 / PI, max_relative = 1e-15);
    }

    /// Smoothed three-neuron model used as the finite-difference oracle:
    /// two presynaptic activities feed one output through weights, the hard
    /// spike is replaced by the arctan activation whose derivative is the
    /// surrogate, and the loss is squared error against a target rate.
    struct SmoothedModel {
        x: [f64; 2],
        v_th: f64,
        target: f64,
    }

    impl SmoothedModel {
        fn membrane(&self, w: &[f64; 2]) -> f64 {
            w[0] * self.x[0] + w[1] * self.x[1]
        }

        fn activation(&self, u: f64) -> f64 {
            (1.0 / (PI * PI)) * (PI * (u - self.v_th)).atan()
        }

        fn loss(&self, w: &[f64; 2]) -> f64 {
            let s = self.activation(self.membrane(w));
            0.5 * (s - self.target).powi(2)
        }
    }

    #[test]
    fn backprop_matches_finite_differences_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let model = SmoothedModel {
                x: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                v_th: rng.gen_range(0.5..1.5),
                target: rng.gen_range(-0.05..0.05),
            };
            let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let u = model.membrane(&w);
            let s = model.activation(u);
            for j in 0..2 {
                let ctx = BackpropContext {
                    loss_grad_wrt_spikes: s - model.target,
                    presyn_trace: model.x[j],
                    membrane_sample: u,
                };
                let analytic = backprop_step(&ctx, model.v_th);
                let h = 1e-5;
                let mut wp = w;
                wp[j] += h;
                let mut wm = w;
                wm[j] -= h;
                let numeric = (model.loss(&wp) - model.loss(&wm)) / (2.0 * h);
                assert!(
                    (analytic - numeric).abs() <= 1e-5,
                    "analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }

    proptest! {
        /// Even, strictly positive, maximal at the origin.
        #[test]
        fn surrogate_shape(u in -50.0f64..50.0) {
            let g = surrogate_gradient(u);
            prop_assert!(g > 0.0);
            prop_assert!((g - surrogate_gradient(-u)).abs() <= 1e-18 + 1e-12 * g);
            prop_assert!(g <= surrogate_gradient(0.0));
        }
    }
}
