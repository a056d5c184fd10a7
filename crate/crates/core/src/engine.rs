//! Co-simulation loop: the grid integrates continuously at `dt`; the
//! coding + neural layer executes at coding-window boundaries only, and
//! timed events fire at their scheduled instants.

use crate::coding::{
    combine_events, cross_entropy, latency_encode, rate_encode, CodingConfig, EventDetector,
    EventDetectorConfig,
};
use crate::droop::{
    average_voltage_error, sharing_error, update_droop_gain, ControlObjectives, DroopGainVector,
    GainBounds, SecondaryMetrics,
};
use crate::error::{Error, Result};
use crate::grid::{
    apply_outage, build_admittance, steady_state_solve, step, GridState, NetworkTopology,
    OutageOutcome,
};
use crate::snn::{
    init_weights_from_admittance, srm_forward, stdp_update, KernelParams, NeuronParams, SpikeTrain,
    StdpParams, SynapseMatrix, TimeGrid, WeightBounds, Window,
};

/// Window and ranges for the two coded channels; voltage is rate-coded and
/// current latency-coded over the same window geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingSpec {
    pub window: f64,
    pub bins: usize,
    pub max_spikes: usize,
    pub voltage_range: (f64, f64),
    pub current_range: (f64, f64),
}

impl Default for CodingSpec {
    fn default() -> Self {
        Self {
            window: 10e-3,
            bins: 100,
            max_spikes: 20,
            voltage_range: (0.0, 400.0),
            current_range: (0.0, 50.0),
        }
    }
}

impl CodingSpec {
    pub fn voltage_config(&self) -> CodingConfig {
        CodingConfig {
            window: self.window,
            bins: self.bins,
            max_spikes: self.max_spikes,
            value_range: self.voltage_range,
        }
    }

    pub fn current_config(&self) -> CodingConfig {
        CodingConfig {
            window: self.window,
            bins: self.bins,
            max_spikes: self.max_spikes,
            value_range: self.current_range,
        }
    }

    fn validate(&self) -> Result<()> {
        self.voltage_config().validate()?;
        self.current_config().validate()
    }
}

/// Whether Eq.-style adaptation consumes each window's weight variation or
/// the running sum since the start of the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaWMode {
    #[default]
    PerWindow,
    RunningSum,
}

/// A scheduled disturbance.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Swap one node's load resistance.
    LoadStep { node: usize, resistance: f64 },
    /// Take one DER out of service.
    DerOutage { node: usize },
    /// Move the global voltage reference.
    ReferenceStep { v_ref: f64 },
}

/// Full declarative description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: NetworkTopology,
    pub objectives: ControlObjectives,
    /// Initial droop gain per node, ohms.
    pub initial_gains: Vec<f64>,
    pub gain_bounds: GainBounds,
    pub coding: CodingSpec,
    pub detector: EventDetectorConfig,
    pub stdp: StdpParams,
    pub weight_bounds: WeightBounds,
    pub delta_w_mode: DeltaWMode,
    pub timeline: Vec<TimedEvent>,
    pub duration: f64,
    pub dt: f64,
    pub adaptation_enabled: bool,
    /// Reserved for future stochastic coders; the current pipeline is fully
    /// deterministic and ignores it.
    pub seed: u64,
    /// Optional start state; `None` starts at the static-droop steady state.
    pub initial_voltages: Option<Vec<f64>>,
}

impl Scenario {
    pub fn steps_per_window(&self) -> usize {
        (self.coding.window / self.dt).round() as usize
    }

    pub fn window_count(&self) -> usize {
        (self.duration / self.coding.window).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.topology.len();
        build_admittance(&self.topology)?;
        self.objectives.validate()?;
        if self.objectives.sharing_ratings.len() != n {
            return Err(Error::Scenario(format!(
                "{} sharing ratings for {} nodes",
                self.objectives.sharing_ratings.len(),
                n
            )));
        }
        if self.initial_gains.len() != n {
            return Err(Error::Scenario(format!(
                "{} initial droop gains for {} nodes",
                self.initial_gains.len(),
                n
            )));
        }
        DroopGainVector::new(self.initial_gains.clone(), self.gain_bounds)?;
        self.coding.validate()?;
        self.detector.validate()?;
        self.stdp.validate()?;
        self.weight_bounds.validate()?;
        if !(self.duration > 0.0) {
            return Err(Error::Scenario(format!(
                "sim.duration must be > 0, got {}",
                self.duration
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Scenario(format!("sim.dt must be > 0, got {}", self.dt)));
        }
        let spw = self.coding.window / self.dt;
        if spw < 1.0 - 1e-9 || (spw - spw.round()).abs() > 1e-6 * spw.round().max(1.0) {
            return Err(Error::Scenario(format!(
                "coding.window ({}) must be a whole number of sim.dt steps ({})",
                self.coding.window, self.dt
            )));
        }
        let windows = self.duration / self.coding.window;
        if windows < 1.0 - 1e-9 || (windows - windows.round()).abs() > 1e-6 * windows.round().max(1.0)
        {
            return Err(Error::Scenario(format!(
                "sim.duration ({}) must be a whole number of coding windows ({})",
                self.duration, self.coding.window
            )));
        }
        let mut last_time = 0.0;
        for (i, event) in self.timeline.iter().enumerate() {
            if !(event.time >= 0.0) || event.time > self.duration {
                return Err(Error::Scenario(format!(
                    "events[{i}].time = {} outside [0, {}]",
                    event.time, self.duration
                )));
            }
            if event.time < last_time {
                return Err(Error::Scenario(format!(
                    "events[{i}].time = {} is earlier than its predecessor (events must be sorted)",
                    event.time
                )));
            }
            last_time = event.time;
            match &event.kind {
                EventKind::LoadStep { node, resistance } => {
                    if *node >= n {
                        return Err(Error::Scenario(format!(
                            "events[{i}].node references node {} but only {n} nodes are defined",
                            node + 1
                        )));
                    }
                    if !(*resistance > 0.0) {
                        return Err(Error::Scenario(format!(
                            "events[{i}].resistance must be > 0, got {resistance}"
                        )));
                    }
                }
                EventKind::DerOutage { node } => {
                    if *node >= n {
                        return Err(Error::Scenario(format!(
                            "events[{i}].node references node {} but only {n} nodes are defined",
                            node + 1
                        )));
                    }
                }
                EventKind::ReferenceStep { v_ref } => {
                    if !(*v_ref > 0.0) {
                        return Err(Error::Scenario(format!(
                            "events[{i}].v_ref must be > 0, got {v_ref}"
                        )));
                    }
                }
            }
        }
        if let Some(init) = &self.initial_voltages {
            if init.len() != n {
                return Err(Error::Scenario(format!(
                    "sim.initial_voltages has {} entries for {n} nodes",
                    init.len()
                )));
            }
            if init.iter().any(|v| !v.is_finite()) {
                return Err(Error::Scenario("sim.initial_voltages must be finite".into()));
            }
        }
        Ok(())
    }
}

/// One per-node slice of a trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWindow {
    pub voltage: f64,
    pub current: f64,
    /// Droop gain in effect during this window.
    pub droop_gain: f64,
    pub omega: u8,
    /// Rate-coded voltage spike count.
    pub spike_count: usize,
    /// Latency of the current spike relative to the window start, seconds.
    pub latency: Option<f64>,
    /// Weight variation consumed by the gain update this window.
    pub delta_w: f64,
    /// Cross-entropy between the voltage and current trains.
    pub cross_entropy: f64,
}

/// One row per coding window; `time` is the sampling instant at the window
/// end.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub nodes: Vec<NodeWindow>,
    pub avg_voltage_error: f64,
    pub sharing_error: f64,
}

/// Result of a run: the windowed records plus out-of-band artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Snapped coding window length in seconds.
    pub window: f64,
    /// Absolute output-spike times of each node's own SRM neuron.
    pub snn_spikes: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Trace {
    pub fn node_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.nodes.len())
    }
}

/// Apply one timed event to the running grid.
pub fn schedule_event(
    state: &mut GridState,
    topology: &mut NetworkTopology,
    v_ref: &mut f64,
    event: &TimedEvent,
    warnings: &mut Vec<String>,
) -> Result<()> {
    match &event.kind {
        EventKind::LoadStep { node, resistance } => {
            topology.set_load_resistance(*node, *resistance)?;
        }
        EventKind::DerOutage { node } => {
            if apply_outage(state, *node)? == OutageOutcome::AlreadyInactive {
                warnings.push(format!(
                    "t={}: outage of node {} ignored (already inactive)",
                    event.time,
                    node + 1
                ));
            }
        }
        EventKind::ReferenceStep { v_ref: new_ref } => {
            if !(*new_ref > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "reference step to {new_ref} V is not positive"
                )));
            }
            *v_ref = *new_ref;
        }
    }
    Ok(())
}

/// Execute a scenario, emitting one [`TraceRecord`] per coding window.
/// Fully deterministic: identical scenarios produce identical traces.
pub fn run(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let n = scenario.topology.len();
    let mut topology = scenario.topology.clone();
    let y = build_admittance(&topology)?;
    let mut v_ref = scenario.objectives.v_ref;
    let adaptation_rate = scenario.objectives.adaptation_rate;
    let mut gains = DroopGainVector::new(scenario.initial_gains.clone(), scenario.gain_bounds)?;
    let mut warnings = Vec::new();

    let mut state = match &scenario.initial_voltages {
        Some(voltages) => GridState::from_voltages(voltages.clone(), &gains, v_ref),
        None => steady_state_solve(&topology, &y, &gains, v_ref, &vec![true; n])?,
    };

    let mut detectors_v: Vec<EventDetector> =
        (0..n).map(|_| EventDetector::new(scenario.detector)).collect();
    let mut detectors_i: Vec<EventDetector> =
        (0..n).map(|_| EventDetector::new(scenario.detector)).collect();
    for k in 0..n {
        detectors_v[k].push(0.0, state.voltages[k]);
        detectors_i[k].push(0.0, state.source_currents[k]);
    }

    let mut weights: Vec<SynapseMatrix> = (0..n)
        .map(|_| init_weights_from_admittance(&y, scenario.weight_bounds))
        .collect::<Result<_>>()?;
    let kernels = KernelParams::default();
    let neuron = NeuronParams::default();
    let coding_v = scenario.coding.voltage_config();
    let coding_i = scenario.coding.current_config();

    let spw = scenario.steps_per_window();
    let window_count = scenario.window_count();
    let window_len = spw as f64 * scenario.dt;
    let total_steps = spw * window_count;

    // Events fire at the integration step nearest their timestamp.
    let mut timeline: Vec<(usize, &TimedEvent)> = scenario
        .timeline
        .iter()
        .map(|e| ((e.time / scenario.dt).round() as usize, e))
        .collect();
    timeline.sort_by_key(|(step_index, _)| *step_index);
    for (step_index, event) in &timeline {
        if *step_index >= total_steps {
            warnings.push(format!(
                "t={}: event coincides with the end of the run and has no effect",
                event.time
            ));
        }
    }
    let mut next_event = 0usize;

    let mut records = Vec::with_capacity(window_count);
    let mut snn_spikes: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut dw_running = vec![0.0f64; n];

    for w in 0..window_count {
        let gains_in_effect = gains.clone();
        for s in 0..spw {
            let global_step = w * spw + s;
            while next_event < timeline.len() && timeline[next_event].0 == global_step {
                schedule_event(&mut state, &mut topology, &mut v_ref, timeline[next_event].1, &mut warnings)?;
                next_event += 1;
            }
            state = step(&state, &gains, &topology, &y, v_ref, scenario.dt)?;
            // Pin time to the exact step product to avoid accumulation drift.
            state.time = (global_step + 1) as f64 * scenario.dt;
            for k in 0..n {
                detectors_v[k].push(state.time, state.voltages[k]);
                detectors_i[k].push(state.time, state.source_currents[k]);
            }
        }

        let t_end = (w + 1) as f64 * window_len;
        let window = Window::new(t_end - window_len, t_end)?;
        let mut next_gains = gains.clone();
        let mut nodes = Vec::with_capacity(n);
        for k in 0..n {
            let flag = combine_events(detectors_v[k].flag(), detectors_i[k].flag());
            let mut row = NodeWindow {
                voltage: state.voltages[k],
                current: state.source_currents[k],
                droop_gain: gains_in_effect.get(k),
                omega: flag.omega,
                spike_count: 0,
                latency: None,
                delta_w: 0.0,
                cross_entropy: 0.0,
            };
            // The event gate applies to sampling and learning alike, and an
            // out-of-service DER's neuron no longer emits at all.
            if flag.omega == 1 && state.active[k] {
                let v_train = rate_encode(state.voltages[k], &coding_v, window);
                let i_train = latency_encode(state.source_currents[k], &coding_i, window);
                let grid = TimeGrid::new(window, scenario.coding.bins)?;
                let inputs: Vec<SpikeTrain> = (0..n)
                    .map(|j| if j == k { v_train.clone() } else { SpikeTrain::empty(window) })
                    .collect();
                for post in 0..n {
                    let (_, out) = srm_forward(&inputs, &weights[k], post, &kernels, &neuron, &grid)?;
                    if post == k {
                        snn_spikes[k].extend_from_slice(out.times());
                    }
                }
                let raw = stdp_update(&v_train, &i_train, &scenario.stdp);
                let applied = weights[k].apply_uniform_delta(raw);
                dw_running[k] += applied;
                let dw = match scenario.delta_w_mode {
                    DeltaWMode::PerWindow => applied,
                    DeltaWMode::RunningSum => dw_running[k],
                };
                row.spike_count = v_train.len();
                row.latency = i_train.first_latency();
                row.delta_w = dw;
                row.cross_entropy = cross_entropy(&v_train, &i_train, scenario.coding.bins);
                if scenario.adaptation_enabled {
                    next_gains.set(
                        k,
                        update_droop_gain(gains_in_effect.get(k), dw, adaptation_rate, scenario.gain_bounds),
                    );
                }
            }
            nodes.push(row);
        }

        let objectives_now = ControlObjectives {
            v_ref,
            sharing_ratings: scenario.objectives.sharing_ratings.clone(),
            adaptation_rate,
        };
        let avg_err = match average_voltage_error(&state, &objectives_now) {
            Ok(e) => e,
            // All DERs out: report the bus average so the trace stays total.
            Err(_) => state.voltages.iter().sum::<f64>() / n as f64 - v_ref,
        };
        let (active_currents, active_ratings): (Vec<f64>, Vec<f64>) = (0..n)
            .filter(|&k| state.active[k])
            .map(|k| (state.source_currents[k], scenario.objectives.sharing_ratings[k]))
            .unzip();
        let share_err = sharing_error(&active_currents, &active_ratings);

        records.push(TraceRecord {
            time: t_end,
            nodes,
            avg_voltage_error: avg_err,
            sharing_error: share_err,
        });
        gains = next_gains;
    }

    Ok(Trace {
        records,
        window: window_len,
        snn_spikes,
        warnings,
    })
}

/// Paired static/adaptive traces over the same scenario and timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineComparison {
    pub static_trace: Trace,
    pub adaptive_trace: Trace,
    pub static_final: SecondaryMetrics,
    pub adaptive_final: SecondaryMetrics,
}

/// Run the scenario twice — adaptation off, then on — under identical
/// events, and summarize the final secondary metrics.
pub fn compare_baseline(scenario: &Scenario) -> Result<BaselineComparison> {
    let static_scenario = Scenario { adaptation_enabled: false, ..scenario.clone() };
    let adaptive_scenario = Scenario { adaptation_enabled: true, ..scenario.clone() };
    let static_trace = run(&static_scenario)?;
    let adaptive_trace = run(&adaptive_scenario)?;
    let finals = |trace: &Trace| -> Result<SecondaryMetrics> {
        let last = trace
            .records
            .last()
            .ok_or_else(|| Error::Scenario("scenario produced an empty trace".into()))?;
        Ok(SecondaryMetrics {
            avg_voltage_error: last.avg_voltage_error,
            sharing_error: last.sharing_error,
        })
    };
    Ok(BaselineComparison {
        static_final: finals(&static_trace)?,
        adaptive_final: finals(&adaptive_trace)?,
        static_trace,
        adaptive_trace,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::grid::{LineParams, NodeParams};

    pub(crate) fn ring_scenario() -> Scenario {
        let nodes: Vec<NodeParams> = [450e-6, 500e-6, 480e-6, 520e-6]
            .iter()
            .enumerate()
            .map(|(id, &capacitance)| NodeParams {
                id,
                capacitance,
                load_resistance: Some(50.0),
                rating: 1.0,
            })
            .collect();
        let lines = vec![
            LineParams { endpoints: (0, 1), resistance: 0.5 },
            LineParams { endpoints: (1, 2), resistance: 0.25 },
            LineParams { endpoints: (2, 3), resistance: 0.6 },
            LineParams { endpoints: (3, 0), resistance: 0.8 },
        ];
        Scenario {
            topology: NetworkTopology::new(nodes, lines).unwrap(),
            objectives: ControlObjectives {
                v_ref: 315.0,
                sharing_ratings: vec![1.0; 4],
                adaptation_rate: 2.0,
            },
            initial_gains: vec![2.0; 4],
            gain_bounds: GainBounds::default(),
            coding: CodingSpec::default(),
            detector: EventDetectorConfig::default(),
            stdp: StdpParams::default(),
            weight_bounds: WeightBounds::default(),
            delta_w_mode: DeltaWMode::PerWindow,
            timeline: vec![],
            duration: 0.5,
            dt: 1e-5,
            adaptation_enabled: true,
            seed: 0,
            initial_voltages: None,
        }
    }

    fn with_events(mut scenario: Scenario) -> Scenario {
        scenario.duration = 1.0;
        scenario.timeline = vec![
            TimedEvent { time: 0.2, kind: EventKind::LoadStep { node: 0, resistance: 25.0 } },
            TimedEvent { time: 0.6, kind: EventKind::DerOutage { node: 2 } },
        ];
        scenario
    }

    #[test]
    fn quiet_scenario_generates_no_spikes_at_all() {
        // Starting at the steady state with no events, no window ever sees a
        // transient.
        let trace = run(&ring_scenario()).unwrap();
        assert_eq!(trace.records.len(), 50);
        for record in &trace.records {
            for node in &record.nodes {
                assert_eq!(node.omega, 0);
                assert_eq!(node.spike_count, 0);
                assert_eq!(node.delta_w, 0.0);
            }
        }
    }

    #[test]
    fn outage_silences_the_node_after_settle() {
        let trace = run(&with_events(ring_scenario())).unwrap();
        let settle_end = 0.6 + 0.05 + 2.0 * trace.window;
        for record in &trace.records {
            if record.time > settle_end {
                let node = &record.nodes[2];
                assert_eq!(node.spike_count, 0, "node 3 raster at t={}", record.time);
                assert_eq!(node.latency, None);
            }
        }
        // The outage transient itself must have been captured by someone.
        let captured = trace
            .records
            .iter()
            .filter(|r| r.time > 0.6 && r.time <= 0.65)
            .any(|r| r.nodes.iter().any(|nw| nw.omega == 1));
        assert!(captured);
    }

    #[test]
    fn adaptation_off_keeps_gains_constant() {
        let mut scenario = with_events(ring_scenario());
        scenario.adaptation_enabled = false;
        let trace = run(&scenario).unwrap();
        for record in &trace.records {
            for node in &record.nodes {
                assert_eq!(node.droop_gain, 2.0);
            }
        }
    }

    #[test]
    fn zero_adaptation_rate_matches_disabled_adaptation_bit_for_bit() {
        let mut zero_rate = with_events(ring_scenario());
        zero_rate.objectives.adaptation_rate = 0.0;
        let mut disabled = with_events(ring_scenario());
        disabled.adaptation_enabled = false;
        assert_eq!(run(&zero_rate).unwrap().records, run(&disabled).unwrap().records);
    }

    #[test]
    fn replay_is_deterministic() {
        let scenario = with_events(ring_scenario());
        let a = run(&scenario).unwrap();
        let b = run(&scenario).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncating_the_timeline_preserves_the_prefix() {
        let full = run(&with_events(ring_scenario())).unwrap();
        let mut truncated_scenario = with_events(ring_scenario());
        truncated_scenario.timeline.pop(); // drop the outage at 0.6 s
        let truncated = run(&truncated_scenario).unwrap();
        let boundary = 0.6;
        for (a, b) in full.records.iter().zip(&truncated.records) {
            if a.time < boundary {
                assert_eq!(a, b, "records before the removed event must agree");
            }
        }
    }

    #[test]
    fn gains_stay_inside_bounds_in_adaptive_runs() {
        let trace = run(&with_events(ring_scenario())).unwrap();
        let bounds = GainBounds::default();
        for record in &trace.records {
            for node in &record.nodes {
                assert!(node.droop_gain >= bounds.min && node.droop_gain <= bounds.max);
            }
        }
    }

    #[test]
    fn gain_updates_follow_the_adaptation_rule_exactly() {
        let trace = run(&with_events(ring_scenario())).unwrap();
        let bounds = GainBounds::default();
        for pair in trace.records.windows(2) {
            for k in 0..4 {
                let expected =
                    update_droop_gain(pair[0].nodes[k].droop_gain, pair[0].nodes[k].delta_w, 2.0, bounds);
                assert_eq!(pair[1].nodes[k].droop_gain, expected);
            }
        }
    }

    #[test]
    fn compare_baseline_reports_both_runs() {
        let comparison = compare_baseline(&with_events(ring_scenario())).unwrap();
        for record in &comparison.static_trace.records {
            for node in &record.nodes {
                assert_eq!(node.droop_gain, 2.0);
            }
        }
        let moved = comparison
            .adaptive_trace
            .records
            .iter()
            .any(|r| r.nodes.iter().any(|nw| nw.droop_gain != 2.0));
        assert!(moved, "adaptive gains should move on a perturbed scenario");
        assert_eq!(
            comparison.static_final.avg_voltage_error,
            comparison.static_trace.records.last().unwrap().avg_voltage_error
        );
    }

    #[test]
    fn running_sum_mode_accumulates_delta_w() {
        let mut scenario = with_events(ring_scenario());
        scenario.delta_w_mode = DeltaWMode::RunningSum;
        let trace = run(&scenario).unwrap();
        // The gain rule must still hold against the recorded dw, and the dw
        // column must be the cumulative variation (non-decreasing here
        // because the aligned trains only potentiate).
        let bounds = GainBounds::default();
        let mut last_dw = vec![0.0f64; 4];
        for pair in trace.records.windows(2) {
            for k in 0..4 {
                let expected =
                    update_droop_gain(pair[0].nodes[k].droop_gain, pair[0].nodes[k].delta_w, 2.0, bounds);
                assert_eq!(pair[1].nodes[k].droop_gain, expected);
            }
        }
        for record in &trace.records {
            for (k, node) in record.nodes.iter().enumerate() {
                if node.delta_w != 0.0 {
                    assert!(node.delta_w >= last_dw[k], "running sum must not shrink");
                    last_dw[k] = node.delta_w;
                }
            }
        }
        assert!(last_dw.iter().any(|d| *d > 0.0));
    }

    #[test]
    fn overridden_start_settles_then_goes_quiet() {
        // A flat start away from equilibrium raises omega during the initial
        // transient; after the settle window everything must go quiet again.
        let mut scenario = ring_scenario();
        scenario.initial_voltages = Some(vec![315.0; 4]);
        scenario.adaptation_enabled = false;
        scenario.duration = 0.3;
        let trace = run(&scenario).unwrap();
        let first = &trace.records[0];
        assert!(first.nodes.iter().any(|nw| nw.omega == 1), "start-up transient captured");
        for record in &trace.records {
            if record.time > 0.15 {
                for node in &record.nodes {
                    assert_eq!(node.omega, 0, "t={}", record.time);
                    assert_eq!(node.spike_count, 0);
                }
            }
        }
    }

    #[test]
    fn identical_load_step_leaves_trace_unchanged() {
        let mut scenario = ring_scenario();
        scenario.timeline = vec![TimedEvent {
            time: 0.2,
            kind: EventKind::LoadStep { node: 0, resistance: 50.0 },
        }];
        let with_noop = run(&scenario).unwrap();
        let without = run(&ring_scenario()).unwrap();
        assert_eq!(with_noop.records, without.records);
    }

    #[test]
    fn reference_step_raises_every_steady_voltage() {
        let mut scenario = ring_scenario();
        scenario.adaptation_enabled = false; // hold gains at 2 for the oracle
        scenario.timeline = vec![TimedEvent {
            time: 0.1,
            kind: EventKind::ReferenceStep { v_ref: 320.0 },
        }];
        let trace = run(&scenario).unwrap();
        let before = &trace.records[5]; // t = 0.06
        let after = trace.records.last().unwrap();
        // Comparative statics against the linear-solve oracle.
        let y = build_admittance(&scenario.topology).unwrap();
        let gains = DroopGainVector::new(vec![2.0; 4], GainBounds::default()).unwrap();
        let oracle_before =
            steady_state_solve(&scenario.topology, &y, &gains, 315.0, &[true; 4]).unwrap();
        let oracle_after =
            steady_state_solve(&scenario.topology, &y, &gains, 320.0, &[true; 4]).unwrap();
        for k in 0..4 {
            assert!(after.nodes[k].voltage > before.nodes[k].voltage);
            assert!((before.nodes[k].voltage - oracle_before.voltages[k]).abs() < 0.1);
            assert!((after.nodes[k].voltage - oracle_after.voltages[k]).abs() < 0.1);
        }
    }

    #[test]
    fn repeated_outage_warns_and_stays_idempotent() {
        let mut scenario = ring_scenario();
        scenario.timeline = vec![
            TimedEvent { time: 0.1, kind: EventKind::DerOutage { node: 1 } },
            TimedEvent { time: 0.2, kind: EventKind::DerOutage { node: 1 } },
        ];
        let trace = run(&scenario).unwrap();
        assert_eq!(trace.warnings.len(), 1);
        assert!(trace.warnings[0].contains("already inactive"));
    }

    #[test]
    fn invalid_scenarios_are_rejected_before_running() {
        let mut scenario = ring_scenario();
        scenario.duration = 0.0;
        assert!(run(&scenario).is_err());

        let mut scenario = ring_scenario();
        scenario.timeline = vec![TimedEvent { time: 99.0, kind: EventKind::DerOutage { node: 0 } }];
        assert!(run(&scenario).is_err());

        let mut scenario = ring_scenario();
        scenario.timeline = vec![TimedEvent { time: 0.1, kind: EventKind::DerOutage { node: 9 } }];
        assert!(run(&scenario).is_err());
    }
}
