//! Scenario document parsing and validation.
//!
//! A scenario is a TOML document with sections `nodes`, `lines`, `control`,
//! `coding`, `detector`, `stdp`, `events` and `sim`; only `nodes`, `lines`,
//! `control` and `sim` are required. Node ids are 1-based in documents and
//! column names, 0-based in memory.

use serde::Deserialize;

use crate::coding::EventDetectorConfig;
use crate::droop::{ControlObjectives, GainBounds};
use crate::engine::{CodingSpec, DeltaWMode, EventKind, Scenario, TimedEvent};
use crate::error::{Error, Result};
use crate::grid::{LineParams, NetworkTopology, NodeParams};
use crate::snn::{StdpParams, WeightBounds};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    sim: SimSection,
    control: ControlSection,
    nodes: Vec<NodeSection>,
    lines: Vec<LineSection>,
    coding: Option<CodingSection>,
    detector: Option<DetectorSection>,
    stdp: Option<StdpSection>,
    #[serde(default)]
    events: Vec<EventSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    duration: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_true")]
    adaptation: bool,
    #[serde(default)]
    seed: u64,
    initial_voltages: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlSection {
    v_ref: f64,
    droop_gain: f64,
    #[serde(default = "default_adaptation_rate")]
    adaptation_rate: f64,
    #[serde(default = "default_gain_min")]
    gain_min: f64,
    #[serde(default = "default_gain_max")]
    gain_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSection {
    id: usize,
    capacitance: f64,
    load_resistance: Option<f64>,
    #[serde(default = "default_rating")]
    rating: f64,
    /// Per-node override of control.droop_gain.
    droop_gain: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineSection {
    nodes: [usize; 2],
    resistance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodingSection {
    #[serde(default = "default_window")]
    window: f64,
    #[serde(default = "default_bins")]
    bins: usize,
    #[serde(default = "default_max_spikes")]
    max_spikes: usize,
    #[serde(default = "default_voltage_range")]
    voltage_range: [f64; 2],
    #[serde(default = "default_current_range")]
    current_range: [f64; 2],
}

impl Default for CodingSection {
    fn default() -> Self {
        Self {
            window: default_window(),
            bins: default_bins(),
            max_spikes: default_max_spikes(),
            voltage_range: default_voltage_range(),
            current_range: default_current_range(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    #[serde(default = "default_derivative_threshold")]
    derivative_threshold: f64,
    #[serde(default = "default_settle_window")]
    settle_window: f64,
    #[serde(default = "default_settle_band")]
    settle_band: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StdpSection {
    #[serde(default = "default_stdp_amplitude")]
    a_plus: f64,
    #[serde(default = "default_stdp_amplitude")]
    a_minus: f64,
    #[serde(default = "default_stdp_tau")]
    tau_plus: f64,
    #[serde(default = "default_stdp_tau")]
    tau_minus: f64,
    #[serde(default = "default_w_min")]
    w_min: f64,
    #[serde(default = "default_w_max")]
    w_max: f64,
    #[serde(default = "default_delta_w_mode")]
    delta_w_mode: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventSection {
    time: f64,
    kind: String,
    node: Option<usize>,
    resistance: Option<f64>,
    v_ref: Option<f64>,
}

fn default_dt() -> f64 {
    1e-5
}
fn default_true() -> bool {
    true
}
fn default_adaptation_rate() -> f64 {
    2.0
}
fn default_gain_min() -> f64 {
    0.1
}
fn default_gain_max() -> f64 {
    10.0
}
fn default_rating() -> f64 {
    1.0
}
fn default_window() -> f64 {
    10e-3
}
fn default_bins() -> usize {
    100
}
fn default_max_spikes() -> usize {
    20
}
fn default_voltage_range() -> [f64; 2] {
    [0.0, 400.0]
}
fn default_current_range() -> [f64; 2] {
    [0.0, 50.0]
}
fn default_derivative_threshold() -> f64 {
    500.0
}
fn default_settle_window() -> f64 {
    50e-3
}
fn default_settle_band() -> f64 {
    0.5
}
fn default_stdp_amplitude() -> f64 {
    0.05
}
fn default_stdp_tau() -> f64 {
    5e-3
}
fn default_w_min() -> f64 {
    0.0
}
fn default_w_max() -> f64 {
    1.0
}
fn default_delta_w_mode() -> String {
    "window".into()
}

const REQUIRED_SECTIONS: [&str; 4] = ["nodes", "lines", "control", "sim"];

/// Parse and fully validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Scenario(e.to_string()))?;
    let missing: Vec<&str> = REQUIRED_SECTIONS
        .iter()
        .filter(|section| !table.contains_key(**section))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(Error::Scenario(format!(
            "missing required sections: {}",
            missing.join(", ")
        )));
    }
    // Re-parse from the text so serde errors carry line numbers.
    let doc: ScenarioDoc =
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
    build(doc)
}

fn build(doc: ScenarioDoc) -> Result<Scenario> {
    let n = doc.nodes.len();
    if n == 0 {
        return Err(Error::Scenario("nodes: at least one node is required".into()));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut ratings = Vec::with_capacity(n);
    let mut gains = Vec::with_capacity(n);
    for (i, node) in doc.nodes.iter().enumerate() {
        if node.id != i + 1 {
            return Err(Error::Scenario(format!(
                "nodes[{i}].id: expected {} (ids are 1-based and consecutive), got {}",
                i + 1,
                node.id
            )));
        }
        if !(node.capacitance > 0.0) {
            return Err(Error::Scenario(format!(
                "nodes[{i}].capacitance: must be > 0, got {}",
                node.capacitance
            )));
        }
        if let Some(r) = node.load_resistance {
            if !(r > 0.0) {
                return Err(Error::Scenario(format!(
                    "nodes[{i}].load_resistance: must be > 0, got {r}"
                )));
            }
        }
        if !(node.rating > 0.0) {
            return Err(Error::Scenario(format!(
                "nodes[{i}].rating: must be > 0, got {}",
                node.rating
            )));
        }
        nodes.push(NodeParams {
            id: i,
            capacitance: node.capacitance,
            load_resistance: node.load_resistance,
            rating: node.rating,
        });
        ratings.push(node.rating);
        gains.push(node.droop_gain.unwrap_or(doc.control.droop_gain));
    }

    let mut lines = Vec::with_capacity(doc.lines.len());
    for (i, line) in doc.lines.iter().enumerate() {
        for endpoint in line.nodes {
            if endpoint == 0 || endpoint > n {
                return Err(Error::Scenario(format!(
                    "lines[{i}].nodes: references node {endpoint} but only {n} nodes are defined"
                )));
            }
        }
        if line.nodes[0] == line.nodes[1] {
            return Err(Error::Scenario(format!(
                "lines[{i}].nodes: endpoints must be distinct, got ({}, {})",
                line.nodes[0], line.nodes[1]
            )));
        }
        if !(line.resistance > 0.0) {
            return Err(Error::Scenario(format!(
                "lines[{i}].resistance: must be > 0, got {}",
                line.resistance
            )));
        }
        lines.push(LineParams {
            endpoints: (line.nodes[0] - 1, line.nodes[1] - 1),
            resistance: line.resistance,
        });
    }

    let topology = NetworkTopology::new(nodes, lines)
        .map_err(|e| Error::Scenario(e.to_string()))?;

    if !(doc.control.v_ref > 0.0) {
        return Err(Error::Scenario(format!(
            "control.v_ref: must be > 0, got {}",
            doc.control.v_ref
        )));
    }
    if !(doc.control.adaptation_rate >= 0.0) {
        return Err(Error::Scenario(format!(
            "control.adaptation_rate: must be >= 0, got {}",
            doc.control.adaptation_rate
        )));
    }
    let gain_bounds = GainBounds { min: doc.control.gain_min, max: doc.control.gain_max };
    gain_bounds
        .validate()
        .map_err(|_| {
            Error::Scenario(format!(
                "control.gain_min/gain_max: must satisfy 0 < min <= max, got [{}, {}]",
                doc.control.gain_min, doc.control.gain_max
            ))
        })?;
    for (i, g) in gains.iter().enumerate() {
        if *g < gain_bounds.min || *g > gain_bounds.max || !g.is_finite() {
            return Err(Error::Scenario(format!(
                "nodes[{i}].droop_gain: {g} outside gain bounds [{}, {}]",
                gain_bounds.min, gain_bounds.max
            )));
        }
    }

    let coding_section = doc.coding.unwrap_or_default();
    let coding = CodingSpec {
        window: coding_section.window,
        bins: coding_section.bins,
        max_spikes: coding_section.max_spikes,
        voltage_range: (coding_section.voltage_range[0], coding_section.voltage_range[1]),
        current_range: (coding_section.current_range[0], coding_section.current_range[1]),
    };
    coding
        .voltage_config()
        .validate()
        .map_err(|e| Error::Scenario(format!("coding.voltage_range/window/bins: {e}")))?;
    coding
        .current_config()
        .validate()
        .map_err(|e| Error::Scenario(format!("coding.current_range/window/bins: {e}")))?;

    let detector = match doc.detector {
        Some(d) => EventDetectorConfig {
            derivative_threshold: d.derivative_threshold,
            settle_window: d.settle_window,
            settle_band: d.settle_band,
        },
        None => EventDetectorConfig::default(),
    };
    detector
        .validate()
        .map_err(|e| Error::Scenario(format!("detector: {e}")))?;

    let (stdp, weight_bounds, delta_w_mode) = match doc.stdp {
        Some(s) => {
            let params = StdpParams {
                a_plus: s.a_plus,
                a_minus: s.a_minus,
                tau_plus: s.tau_plus,
                tau_minus: s.tau_minus,
            };
            params
                .validate()
                .map_err(|e| Error::Scenario(format!("stdp: {e}")))?;
            let bounds = WeightBounds { min: s.w_min, max: s.w_max };
            bounds
                .validate()
                .map_err(|e| Error::Scenario(format!("stdp.w_min/w_max: {e}")))?;
            let mode = match s.delta_w_mode.as_str() {
                "window" => DeltaWMode::PerWindow,
                "running_sum" => DeltaWMode::RunningSum,
                other => {
                    return Err(Error::Scenario(format!(
                        "stdp.delta_w_mode: expected \"window\" or \"running_sum\", got \"{other}\""
                    )))
                }
            };
            (params, bounds, mode)
        }
        None => (StdpParams::default(), WeightBounds::default(), DeltaWMode::PerWindow),
    };

    let mut timeline = Vec::with_capacity(doc.events.len());
    for (i, event) in doc.events.iter().enumerate() {
        let node_field = |field: &Option<usize>| -> Result<usize> {
            let id = field.ok_or_else(|| {
                Error::Scenario(format!("events[{i}].node: required for kind \"{}\"", event.kind))
            })?;
            if id == 0 || id > n {
                return Err(Error::Scenario(format!(
                    "events[{i}].node: references node {id} but only {n} nodes are defined"
                )));
            }
            Ok(id - 1)
        };
        let reject = |field: &str, present: bool| -> Result<()> {
            if present {
                return Err(Error::Scenario(format!(
                    "events[{i}].{field}: not applicable to kind \"{}\"",
                    event.kind
                )));
            }
            Ok(())
        };
        let kind = match event.kind.as_str() {
            "load_step" => {
                reject("v_ref", event.v_ref.is_some())?;
                let resistance = event.resistance.ok_or_else(|| {
                    Error::Scenario(format!("events[{i}].resistance: required for kind \"load_step\""))
                })?;
                if !(resistance > 0.0) {
                    return Err(Error::Scenario(format!(
                        "events[{i}].resistance: must be > 0, got {resistance}"
                    )));
                }
                EventKind::LoadStep { node: node_field(&event.node)?, resistance }
            }
            "der_outage" => {
                reject("resistance", event.resistance.is_some())?;
                reject("v_ref", event.v_ref.is_some())?;
                EventKind::DerOutage { node: node_field(&event.node)? }
            }
            "reference_step" => {
                reject("node", event.node.is_some())?;
                reject("resistance", event.resistance.is_some())?;
                let v_ref = event.v_ref.ok_or_else(|| {
                    Error::Scenario(format!("events[{i}].v_ref: required for kind \"reference_step\""))
                })?;
                if !(v_ref > 0.0) {
                    return Err(Error::Scenario(format!(
                        "events[{i}].v_ref: must be > 0, got {v_ref}"
                    )));
                }
                EventKind::ReferenceStep { v_ref }
            }
            other => {
                return Err(Error::Scenario(format!(
                    "events[{i}].kind: unknown kind \"{other}\" (expected load_step, der_outage or reference_step)"
                )))
            }
        };
        timeline.push(TimedEvent { time: event.time, kind });
    }

    let scenario = Scenario {
        topology,
        objectives: ControlObjectives {
            v_ref: doc.control.v_ref,
            sharing_ratings: ratings,
            adaptation_rate: doc.control.adaptation_rate,
        },
        initial_gains: gains,
        gain_bounds,
        coding,
        detector,
        stdp,
        weight_bounds,
        delta_w_mode,
        timeline,
        duration: doc.sim.duration,
        dt: doc.sim.dt,
        adaptation_enabled: doc.sim.adaptation,
        seed: doc.sim.seed,
        initial_voltages: doc.sim.initial_voltages,
    };
    scenario.validate().map_err(|e| match e {
        Error::Scenario(msg) => Error::Scenario(msg),
        other => Error::Scenario(other.to_string()),
    })?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[sim]
duration = 0.1

[control]
v_ref = 315.0
droop_gain = 2.0

[[nodes]]
id = 1
capacitance = 450e-6
load_resistance = 50.0

[[nodes]]
id = 2
capacitance = 500e-6

[[lines]]
nodes = [1, 2]
resistance = 0.5
"#;

    #[test]
    fn minimal_document_uses_defaults() {
        let scenario = parse_scenario(MINIMAL).unwrap();
        assert_eq!(scenario.topology.len(), 2);
        assert_eq!(scenario.dt, 1e-5);
        assert_eq!(scenario.coding.window, 10e-3);
        assert_eq!(scenario.coding.max_spikes, 20);
        assert!(scenario.adaptation_enabled);
        assert_eq!(scenario.initial_gains, vec![2.0, 2.0]);
        assert_eq!(scenario.stdp, StdpParams::default());
        assert!(scenario.timeline.is_empty());
    }

    #[test]
    fn empty_document_lists_required_sections() {
        let err = parse_scenario("").unwrap_err().to_string();
        for section in ["nodes", "lines", "control", "sim"] {
            assert!(err.contains(section), "{err} should mention {section}");
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let text = MINIMAL.replace("duration = 0.1", "duration = 0.1\ndurration = 5");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("durration"), "{err}");
        assert!(err.contains("line"), "line info expected: {err}");
    }

    #[test]
    fn out_of_range_line_reference_names_the_field() {
        let text = MINIMAL.replace("nodes = [1, 2]", "nodes = [1, 9]");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("lines[0].nodes"), "{err}");
        assert!(err.contains('9'), "{err}");
    }

    #[test]
    fn event_fields_are_cross_checked_against_kind() {
        let with_event = format!(
            "{MINIMAL}\n[[events]]\ntime = 0.05\nkind = \"der_outage\"\nnode = 1\nresistance = 3.0\n"
        );
        let err = parse_scenario(&with_event).unwrap_err().to_string();
        assert!(err.contains("events[0].resistance"), "{err}");

        let missing_field = format!("{MINIMAL}\n[[events]]\ntime = 0.05\nkind = \"load_step\"\nnode = 1\n");
        let err = parse_scenario(&missing_field).unwrap_err().to_string();
        assert!(err.contains("events[0].resistance"), "{err}");

        let unknown = format!("{MINIMAL}\n[[events]]\ntime = 0.05\nkind = \"explode\"\n");
        let err = parse_scenario(&unknown).unwrap_err().to_string();
        assert!(err.contains("events[0].kind"), "{err}");
    }

    #[test]
    fn node_ids_must_be_consecutive() {
        let text = MINIMAL.replace("id = 2", "id = 4");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("nodes[1].id"), "{err}");
    }

    #[test]
    fn per_node_gain_override_applies() {
        let text = MINIMAL.replace(
            "id = 2\ncapacitance = 500e-6",
            "id = 2\ncapacitance = 500e-6\ndroop_gain = 1.5",
        );
        let scenario = parse_scenario(&text).unwrap();
        assert_eq!(scenario.initial_gains, vec![2.0, 1.5]);
    }
}
