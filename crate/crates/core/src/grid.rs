//! Physical layer: a droop-sourced DC microgrid modeled as a linear RC
//! network and integrated with a classical fixed-step RK4 scheme.
//!
//! Each bus k carries a capacitance `C_k`, an optional constant-resistance
//! load, and (while active) a droop source injecting
//! `i_k = (V_ref - v_k) / R_d,k`. Buses couple through the resistive
//! tie-line Laplacian `Y`.

use crate::droop::DroopGainVector;
use crate::error::{Error, Result};

/// Per-bus physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParams {
    /// Node index (0-based, equal to the node's position in the topology).
    pub id: usize,
    /// Bus capacitance in farads.
    pub capacitance: f64,
    /// Constant-resistance load in ohms; `None` means no local load.
    pub load_resistance: Option<f64>,
    /// Per-unit current-sharing weight.
    pub rating: f64,
}

impl NodeParams {
    fn validate(&self, index: usize) -> Result<()> {
        if self.id != index {
            return Err(Error::Topology(format!(
                "node at position {} has id {} (ids must equal positions)",
                index, self.id
            )));
        }
        if !(self.capacitance > 0.0) {
            return Err(Error::Topology(format!(
                "node {}: capacitance must be > 0, got {}",
                display_id(self.id),
                self.capacitance
            )));
        }
        if let Some(r) = self.load_resistance {
            if !(r > 0.0) {
                return Err(Error::Topology(format!(
                    "node {}: load_resistance must be > 0, got {}",
                    display_id(self.id),
                    r
                )));
            }
        }
        if !(self.rating > 0.0) {
            return Err(Error::Topology(format!(
                "node {}: rating must be > 0, got {}",
                display_id(self.id),
                self.rating
            )));
        }
        Ok(())
    }
}

/// A resistive tie line between two buses.
#[derive(Debug, Clone, PartialEq)]
pub struct LineParams {
    /// Unordered pair of node indices.
    pub endpoints: (usize, usize),
    /// Line resistance in ohms.
    pub resistance: f64,
}

/// Nodes plus tie lines. Local invariants (positive parameters, distinct
/// endpoints, no duplicate lines) are enforced on construction;
/// connectivity is checked by [`build_admittance`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    nodes: Vec<NodeParams>,
    lines: Vec<LineParams>,
}

/// Node ids are 0-based internally and 1-based in every message and column
/// name; this keeps the two in sync.
fn display_id(id: usize) -> usize {
    id + 1
}

impl NetworkTopology {
    pub fn new(nodes: Vec<NodeParams>, lines: Vec<LineParams>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Topology("topology has no nodes".into()));
        }
        for (index, node) in nodes.iter().enumerate() {
            node.validate(index)?;
        }
        let n = nodes.len();
        let mut seen = std::collections::HashSet::new();
        for line in &lines {
            let (a, b) = line.endpoints;
            if a >= n || b >= n {
                return Err(Error::Topology(format!(
                    "line ({}, {}) references a node outside 1..={}",
                    display_id(a),
                    display_id(b),
                    n
                )));
            }
            if a == b {
                return Err(Error::Topology(format!(
                    "line endpoints must be distinct, got ({}, {})",
                    display_id(a),
                    display_id(b)
                )));
            }
            if !(line.resistance > 0.0) {
                return Err(Error::Topology(format!(
                    "line ({}, {}): resistance must be > 0, got {}",
                    display_id(a),
                    display_id(b),
                    line.resistance
                )));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::Topology(format!(
                    "duplicate line between nodes {} and {}",
                    display_id(key.0),
                    display_id(key.1)
                )));
            }
        }
        Ok(Self { nodes, lines })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeParams] {
        &self.nodes
    }

    pub fn lines(&self) -> &[LineParams] {
        &self.lines
    }

    /// Swap the load at `node`; used by timed load-step events.
    pub fn set_load_resistance(&mut self, node: usize, resistance: f64) -> Result<()> {
        if node >= self.nodes.len() {
            return Err(Error::InvalidInput(format!(
                "load step references unknown node {}",
                display_id(node)
            )));
        }
        if !(resistance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "load step resistance must be > 0, got {resistance}"
            )));
        }
        self.nodes[node].load_resistance = Some(resistance);
        Ok(())
    }
}

/// Tie-line conductance Laplacian in siemens: off-diagonal (i, j) is
/// `-1/r_ij`, diagonals sum the incident conductances, shunt elements
/// (loads, droop resistances) are held separately.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl AdmittanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

/// Build the line Laplacian, rejecting disconnected topologies with the
/// isolated component spelled out.
pub fn build_admittance(topology: &NetworkTopology) -> Result<AdmittanceMatrix> {
    let n = topology.len();
    check_connected(topology)?;
    let mut entries = vec![0.0; n * n];
    for line in topology.lines() {
        let (a, b) = line.endpoints;
        let g = 1.0 / line.resistance;
        entries[a * n + b] -= g;
        entries[b * n + a] -= g;
        entries[a * n + a] += g;
        entries[b * n + b] += g;
    }
    Ok(AdmittanceMatrix { n, entries })
}

fn check_connected(topology: &NetworkTopology) -> Result<()> {
    let n = topology.len();
    let mut adjacency = vec![Vec::new(); n];
    for line in topology.lines() {
        let (a, b) = line.endpoints;
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut reached = vec![false; n];
    let mut stack = vec![0usize];
    reached[0] = true;
    while let Some(k) = stack.pop() {
        for &j in &adjacency[k] {
            if !reached[j] {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    if reached.iter().all(|&r| r) {
        return Ok(());
    }
    let isolated: Vec<String> = (0..n)
        .filter(|&k| !reached[k])
        .map(|k| display_id(k).to_string())
        .collect();
    Err(Error::Disconnected(format!(
        "nodes {{{}}} are not connected to node 1",
        isolated.join(", ")
    )))
}

/// Electrical state of the grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    /// Simulation time in seconds.
    pub time: f64,
    /// Bus voltages in volts.
    pub voltages: Vec<f64>,
    /// Droop-injected source currents in amperes (0 for inactive nodes).
    pub source_currents: Vec<f64>,
    /// Whether each node's DER is still in service.
    pub active: Vec<bool>,
}

impl GridState {
    /// State with explicit voltages, all sources in service, currents
    /// derived from the droop law.
    pub fn from_voltages(voltages: Vec<f64>, gains: &DroopGainVector, v_ref: f64) -> Self {
        let active = vec![true; voltages.len()];
        let source_currents = droop_currents(&voltages, &active, gains, v_ref);
        Self {
            time: 0.0,
            voltages,
            source_currents,
            active,
        }
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }
}

fn droop_currents(voltages: &[f64], active: &[bool], gains: &DroopGainVector, v_ref: f64) -> Vec<f64> {
    voltages
        .iter()
        .zip(active)
        .enumerate()
        .map(|(k, (&v, &a))| if a { (v_ref - v) / gains.get(k) } else { 0.0 })
        .collect()
}

/// Bus-voltage time derivatives in V/s:
/// `C_k dv_k/dt = active_k (V_ref - v_k)/R_d,k - v_k/R_load,k - (Y v)_k`.
pub fn grid_derivatives(
    state: &GridState,
    gains: &DroopGainVector,
    topology: &NetworkTopology,
    y: &AdmittanceMatrix,
    v_ref: f64,
) -> Vec<f64> {
    derivatives_raw(&state.voltages, &state.active, gains, topology, y, v_ref)
}

fn derivatives_raw(
    voltages: &[f64],
    active: &[bool],
    gains: &DroopGainVector,
    topology: &NetworkTopology,
    y: &AdmittanceMatrix,
    v_ref: f64,
) -> Vec<f64> {
    let n = voltages.len();
    let mut dv = vec![0.0; n];
    for k in 0..n {
        let node = &topology.nodes()[k];
        let mut current = 0.0;
        if active[k] {
            current += (v_ref - voltages[k]) / gains.get(k);
        }
        if let Some(r_load) = node.load_resistance {
            current -= voltages[k] / r_load;
        }
        let row = y.row(k);
        let mut line_out = 0.0;
        for j in 0..n {
            line_out += row[j] * voltages[j];
        }
        current -= line_out;
        dv[k] = current / node.capacitance;
    }
    dv
}

/// One classical RK4 step of length `dt`. Deterministic; inactive nodes
/// keep their droop term excluded. Fails if any voltage leaves the finite
/// range, naming the node and time.
pub fn step(
    state: &GridState,
    gains: &DroopGainVector,
    topology: &NetworkTopology,
    y: &AdmittanceMatrix,
    v_ref: f64,
    dt: f64,
) -> Result<GridState> {
    assert!(dt > 0.0, "dt must be > 0");
    let n = state.len();
    let v0 = &state.voltages;
    let eval = |v: &[f64]| derivatives_raw(v, &state.active, gains, topology, y, v_ref);

    let k1 = eval(v0);
    let mut stage = vec![0.0; n];
    for i in 0..n {
        stage[i] = v0[i] + 0.5 * dt * k1[i];
    }
    let k2 = eval(&stage);
    for i in 0..n {
        stage[i] = v0[i] + 0.5 * dt * k2[i];
    }
    let k3 = eval(&stage);
    for i in 0..n {
        stage[i] = v0[i] + dt * k3[i];
    }
    let k4 = eval(&stage);

    let time = state.time + dt;
    let mut voltages = vec![0.0; n];
    for i in 0..n {
        voltages[i] = v0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !voltages[i].is_finite() {
            return Err(Error::IntegrationBlowup {
                node: display_id(i),
                time,
                detail: format!("voltage became {} (dt too large for the grid time constants?)", voltages[i]),
            });
        }
    }
    let source_currents = droop_currents(&voltages, &state.active, gains, v_ref);
    Ok(GridState {
        time,
        voltages,
        source_currents,
        active: state.active.clone(),
    })
}

/// Direct linear solve of the DC operating point:
/// `(diag(active_k/R_d,k) + diag(1/R_load,k) + Y) v = active_k V_ref/R_d,k`.
///
/// Independent of the RK4 path; used as the oracle for dynamic runs.
pub fn steady_state_solve(
    topology: &NetworkTopology,
    y: &AdmittanceMatrix,
    gains: &DroopGainVector,
    v_ref: f64,
    active: &[bool],
) -> Result<GridState> {
    let n = topology.len();
    if active.len() != n {
        return Err(Error::InvalidInput(format!(
            "active mask has {} entries for {} nodes",
            active.len(),
            n
        )));
    }
    let any_source = active.iter().any(|&a| a);
    let any_load = topology.nodes().iter().any(|p| p.load_resistance.is_some());
    if !any_source && !any_load {
        return Err(Error::Singular(
            "no active droop source and no load: the operating point is undefined".into(),
        ));
    }

    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = y.get(i, j);
        }
        if active[i] {
            a[(i, i)] += 1.0 / gains.get(i);
            b[i] = v_ref / gains.get(i);
        }
        if let Some(r_load) = topology.nodes()[i].load_resistance {
            a[(i, i)] += 1.0 / r_load;
        }
    }

    let solution = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("steady-state system is singular".into()))?;

    // KCL residual check: C dv/dt must vanish at the operating point.
    let residual = &a * &solution - &b;
    let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if worst > 1e-9 {
        return Err(Error::Singular(format!(
            "steady-state residual {worst:.3e} A exceeds 1e-9 A (near-singular system)"
        )));
    }

    let voltages: Vec<f64> = solution.iter().copied().collect();
    let source_currents = droop_currents(&voltages, active, gains, v_ref);
    Ok(GridState {
        time: 0.0,
        voltages,
        source_currents,
        active: active.to_vec(),
    })
}

/// Result of [`apply_outage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutageOutcome {
    Applied,
    /// The node was already out; the call is idempotent and the caller may
    /// record a warning.
    AlreadyInactive,
}

/// Take a DER out of service: the droop source current is forced to zero
/// from now on while the bus capacitance and any load stay connected.
pub fn apply_outage(state: &mut GridState, node: usize) -> Result<OutageOutcome> {
    if node >= state.len() {
        return Err(Error::InvalidInput(format!(
            "outage references unknown node {}",
            display_id(node)
        )));
    }
    if !state.active[node] {
        return Ok(OutageOutcome::AlreadyInactive);
    }
    state.active[node] = false;
    state.source_currents[node] = 0.0;
    Ok(OutageOutcome::Applied)
}
