//! Trace exporters: the CSV schema and plot-ready data series.
//!
//! CSV columns, in order: `time`, then per node k (1-based):
//! `v_k, i_k, rd_k, omega_k, spikes_v_k, lat_i_k, dw_k, ce_k`, then
//! `avg_v_err, share_err`. Numbers are written with Rust's shortest
//! round-trip formatting, so a deterministic trace exports to identical
//! bytes and parses back to identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::engine::{NodeWindow, Trace, TraceRecord};
use crate::error::{Error, Result};

const FIELDS_PER_NODE: usize = 8;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

/// Render the CSV header for `n` nodes.
pub fn csv_header(n: usize) -> String {
    let mut header = String::from("time");
    for k in 1..=n {
        write!(
            header,
            ",v_{k},i_{k},rd_{k},omega_{k},spikes_v_{k},lat_i_{k},dw_{k},ce_{k}"
        )
        .unwrap();
    }
    header.push_str(",avg_v_err,share_err");
    header
}

fn render_row(record: &TraceRecord) -> String {
    let mut row = String::new();
    write!(row, "{}", record.time).unwrap();
    for node in &record.nodes {
        write!(
            row,
            ",{},{},{},{},{}",
            node.voltage, node.current, node.droop_gain, node.omega, node.spike_count
        )
        .unwrap();
        match node.latency {
            Some(lat) => write!(row, ",{lat}").unwrap(),
            None => row.push(','),
        }
        write!(row, ",{},{}", node.delta_w, node.cross_entropy).unwrap();
    }
    write!(row, ",{},{}", record.avg_voltage_error, record.sharing_error).unwrap();
    row
}

/// Write the whole trace as CSV. Deterministic byte output for a
/// deterministic trace; an empty trace is an error.
pub fn export_csv(trace: &Trace, path: &Path) -> Result<()> {
    if trace.records.is_empty() {
        return Err(Error::InvalidInput("refusing to export an empty trace".into()));
    }
    let n = trace.node_count();
    let mut out = csv_header(n);
    out.push('\n');
    for record in &trace.records {
        out.push_str(&render_row(record));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Parse a CSV produced by [`export_csv`] back into records.
pub fn import_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    let columns = header.split(',').count();
    if columns < 3 + FIELDS_PER_NODE || (columns - 3) % FIELDS_PER_NODE != 0 {
        return Err(Error::InvalidInput(format!(
            "unexpected column count {columns} in CSV header"
        )));
    }
    let n = (columns - 3) / FIELDS_PER_NODE;
    let parse = |field: &str, what: &str| -> Result<f64> {
        field
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad {what} value: {field:?}")))
    };
    let mut records = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::InvalidInput(format!(
                "row has {} fields, header has {columns}",
                fields.len()
            )));
        }
        let mut nodes = Vec::with_capacity(n);
        for k in 0..n {
            let base = 1 + k * FIELDS_PER_NODE;
            nodes.push(NodeWindow {
                voltage: parse(fields[base], "v")?,
                current: parse(fields[base + 1], "i")?,
                droop_gain: parse(fields[base + 2], "rd")?,
                omega: parse(fields[base + 3], "omega")? as u8,
                spike_count: parse(fields[base + 4], "spikes_v")? as usize,
                latency: if fields[base + 5].is_empty() {
                    None
                } else {
                    Some(parse(fields[base + 5], "lat_i")?)
                },
                delta_w: parse(fields[base + 6], "dw")?,
                cross_entropy: parse(fields[base + 7], "ce")?,
            });
        }
        records.push(TraceRecord {
            time: parse(fields[0], "time")?,
            nodes,
            avg_voltage_error: parse(fields[columns - 2], "avg_v_err")?,
            sharing_error: parse(fields[columns - 1], "share_err")?,
        });
    }
    Ok(records)
}

/// Reconstruct a node's rate-coded voltage spike times for one record; the
/// encoder places spike j of n at the center of slot j.
fn rate_spike_times(record: &TraceRecord, node: &NodeWindow, window: f64) -> Vec<f64> {
    let n = node.spike_count;
    if n == 0 {
        return Vec::new();
    }
    let start = record.time - window;
    let slot = window / n as f64;
    (0..n).map(|j| start + (j as f64 + 0.5) * slot).collect()
}

/// Emit plain-text data series, one file per figure-equivalent:
/// voltage/current/droop-gain/omega trajectories as `x y` pairs and spike
/// rasters as one event time per line.
pub fn emit_plot_data(trace: &Trace, dir: &Path) -> Result<()> {
    if trace.records.is_empty() {
        return Err(Error::InvalidInput("refusing to plot an empty trace".into()));
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let n = trace.node_count();

    let write_series = |name: String, value: &dyn Fn(&TraceRecord) -> String| -> Result<()> {
        let path = dir.join(name);
        let mut out = String::new();
        for record in &trace.records {
            writeln!(out, "{} {}", record.time, value(record)).unwrap();
        }
        fs::write(&path, out).map_err(|e| io_err(&path, e))
    };

    for k in 0..n {
        write_series(format!("voltage_node{}.txt", k + 1), &|r| r.nodes[k].voltage.to_string())?;
        write_series(format!("current_node{}.txt", k + 1), &|r| r.nodes[k].current.to_string())?;
        write_series(format!("droop_gain_node{}.txt", k + 1), &|r| {
            r.nodes[k].droop_gain.to_string()
        })?;
        write_series(format!("omega_node{}.txt", k + 1), &|r| r.nodes[k].omega.to_string())?;

        // Rasters: voltage (rate) spikes, current (latency) spikes, and the
        // node's own SRM output spikes, absolute times.
        let mut v_raster = String::new();
        let mut i_raster = String::new();
        for record in &trace.records {
            for t in rate_spike_times(record, &record.nodes[k], trace.window) {
                writeln!(v_raster, "{t}").unwrap();
            }
            if let Some(lat) = record.nodes[k].latency {
                writeln!(i_raster, "{}", record.time - trace.window + lat).unwrap();
            }
        }
        let path = dir.join(format!("raster_v_node{}.txt", k + 1));
        fs::write(&path, v_raster).map_err(|e| io_err(&path, e))?;
        let path = dir.join(format!("raster_i_node{}.txt", k + 1));
        fs::write(&path, i_raster).map_err(|e| io_err(&path, e))?;
        let mut snn_raster = String::new();
        for t in &trace.snn_spikes[k] {
            writeln!(snn_raster, "{t}").unwrap();
        }
        let path = dir.join(format!("raster_snn_node{}.txt", k + 1));
        fs::write(&path, snn_raster).map_err(|e| io_err(&path, e))?;
    }

    write_series("avg_voltage_error.txt".into(), &|r| r.avg_voltage_error.to_string())?;
    write_series("sharing_error.txt".into(), &|r| r.sharing_error.to_string())?;
    Ok(())
}
