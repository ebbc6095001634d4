//! Running configured experiments and writing their CSV and JSON outputs.
//!
//! Trace CSV columns: `round,action,fidelity,success_prob,resources`.
//! Sweep CSV columns: `p_w,p_z,initial_fidelity,winner,value,gain,status`
//! followed by `value[<strategy>]` and `status[<strategy>]` per strategy.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::resources::{interpolate_to_fidelity, interpolate_to_resources, relative_gain, InterpolationStatus};
use crate::strategies::{format_steps, run_strategy, run_tcp_from, Scenario, StrategyKind, StrategyTrace, TraceEnd};

pub use config::{bundled, bundled_names, Axis, ExperimentConfig, GraphSpec, Mode, SweepConfig};

/// `%.15g`-style formatting: 15 significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.14e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..15).contains(&exp) {
        trim_zeros(&format!("{:.*}", (14 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Value as it appears in the CSV output.
fn rounded(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

pub fn trace_csv(trace: &StrategyTrace) -> String {
    let mut out = String::from("round,action,fidelity,success_prob,resources\n");
    for r in &trace.rounds {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.round,
            format_steps(&r.steps),
            fmt_sig(r.fidelity),
            fmt_sig(r.success_prob),
            fmt_sig(r.resources)
        );
    }
    out
}

/// File-name form of a strategy id.
pub fn file_stem(kind: StrategyKind) -> String {
    kind.to_string().replace(':', "_")
}

fn run_configured(cfg: &ExperimentConfig, scenario: &Scenario, kind: StrategyKind) -> Result<StrategyTrace> {
    let stop = cfg.stop_rule();
    match kind {
        StrategyKind::Tcp => run_tcp_from(scenario, cfg.tcp_first(), stop),
        _ => run_strategy(scenario, kind, stop),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Interpolation {
    pub value: f64,
    pub p: f64,
    pub bracket: Option<(usize, usize)>,
    pub status: InterpolationStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub status: String,
    pub initial_fidelity: Option<f64>,
    pub final_fidelity: Option<f64>,
    pub max_fidelity: Option<f64>,
    pub rounds: Option<usize>,
    pub final_resources: Option<f64>,
    pub end: Option<TraceEnd>,
    pub saturated: Option<bool>,
    pub successful: Option<bool>,
    pub interpolation: Option<Interpolation>,
    pub csv: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub graph: String,
    pub noise: String,
    pub mode: Mode,
    pub target_fidelity: Option<f64>,
    pub total_resources: Option<f64>,
    pub strategies: Vec<StrategySummary>,
}

fn interpolate(cfg: &ExperimentConfig, trace: &StrategyTrace) -> Result<Option<Interpolation>> {
    let r = match cfg.mode {
        Mode::Trace => return Ok(None),
        Mode::FixedFidelity => interpolate_to_fidelity(trace, cfg.target_fidelity.unwrap())?,
        Mode::FixedResources => interpolate_to_resources(trace, cfg.total_resources.unwrap())?,
    };
    Ok(Some(Interpolation { value: r.value, p: r.p, bracket: r.bracket, status: r.status }))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Runs every strategy of `cfg` on its scenario and writes one CSV per
/// strategy plus `summary.json` into `out_dir`. A strategy that fails is
/// reported in the summary; the others still run.
pub fn run_scenario(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let scenario = cfg.scenario()?;
    let kinds = cfg.strategy_kinds()?;
    fs::create_dir_all(out_dir)?;
    let traces: Vec<Result<StrategyTrace>> = kinds.par_iter().map(|&k| run_configured(cfg, &scenario, k)).collect();
    let mut strategies = Vec::new();
    for (kind, trace) in kinds.iter().zip(traces) {
        let summary = match trace {
            Ok(t) => {
                let csv = format!("{}.csv", file_stem(*kind));
                write(&out_dir.join(&csv), &trace_csv(&t))?;
                StrategySummary {
                    strategy: kind.to_string(),
                    status: "ok".into(),
                    initial_fidelity: Some(t.initial_fidelity()),
                    final_fidelity: Some(t.final_fidelity()),
                    max_fidelity: Some(t.max_fidelity()),
                    rounds: Some(t.calls()),
                    final_resources: Some(t.final_resources()),
                    end: Some(t.end),
                    saturated: Some(t.end == TraceEnd::Saturated),
                    successful: Some(t.successful()),
                    interpolation: interpolate(cfg, &t)?,
                    csv: Some(csv),
                }
            }
            Err(e) => StrategySummary {
                strategy: kind.to_string(),
                status: format!("error: {e}"),
                initial_fidelity: None,
                final_fidelity: None,
                max_fidelity: None,
                rounds: None,
                final_resources: None,
                end: None,
                saturated: None,
                successful: None,
                interpolation: None,
                csv: None,
            },
        };
        strategies.push(summary);
    }
    let summary = RunSummary {
        name: cfg.name.clone(),
        graph: scenario.graph.to_string(),
        noise: scenario.noise.describe(),
        mode: cfg.mode,
        target_fidelity: cfg.target_fidelity,
        total_resources: cfg.total_resources,
        strategies,
    };
    write(&out_dir.join("summary.json"), &json(&summary))?;
    Ok(summary)
}

/// One strategy's entry in a sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellValue {
    pub strategy: String,
    /// Resources at the target fidelity, or fidelity at the budget.
    pub value: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WinnerCell {
    pub p_w: f64,
    pub p_z: f64,
    pub initial_fidelity: Option<f64>,
    /// Strategy id, `same` (target met without purification) or `none`.
    pub winner: String,
    pub value: Option<f64>,
    /// Fixed-resources mode: relative fidelity gain of the winner in percent.
    pub gain: Option<f64>,
    pub status: String,
    pub table: Vec<CellValue>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub name: String,
    pub graph: String,
    pub mode: Mode,
    pub target_fidelity: Option<f64>,
    pub total_resources: Option<f64>,
    pub gate: f64,
    pub z_qubits: Vec<usize>,
    pub pw: Vec<f64>,
    pub pz: Vec<f64>,
    pub strategies: Vec<String>,
    pub cells: Vec<WinnerCell>,
}

/// Picks the winner from a cell table: the smallest resources (fixed
/// fidelity) or the largest fidelity (fixed resources) among entries with a
/// value; earlier strategies win exact ties.
pub fn pick_winner(mode: Mode, table: &[CellValue]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in table.iter().enumerate() {
        let Some(v) = c.value else { continue };
        let better = match (mode, best) {
            (_, None) => true,
            (Mode::FixedResources, Some((_, b))) => v > b,
            (_, Some((_, b))) => v < b,
        };
        if better {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn status_name(s: InterpolationStatus) -> &'static str {
    match s {
        InterpolationStatus::Interpolated => "interpolated",
        InterpolationStatus::Same => "same",
        InterpolationStatus::Unreachable => "unreachable",
        InterpolationStatus::Capped => "capped",
    }
}

fn sweep_cell(cfg: &ExperimentConfig, kinds: &[StrategyKind], p_w: f64, p_z: f64) -> WinnerCell {
    let mut cell = WinnerCell {
        p_w,
        p_z,
        initial_fidelity: None,
        winner: "none".into(),
        value: None,
        gain: None,
        status: "ok".into(),
        table: Vec::new(),
    };
    let scenario = match cfg.cell_scenario(p_w, p_z) {
        Ok(s) => s,
        Err(e) => {
            cell.status = format!("error: {e}");
            return cell;
        }
    };
    let f0 = match scenario.initial_state() {
        Ok(s) => s.fidelity(),
        Err(e) => {
            cell.status = format!("error: {e}");
            return cell;
        }
    };
    cell.initial_fidelity = Some(rounded(f0));
    for &kind in kinds {
        let entry = run_configured(cfg, &scenario, kind).and_then(|t| interpolate(cfg, &t));
        cell.table.push(match entry {
            Ok(Some(i)) => {
                let usable = matches!(
                    i.status,
                    InterpolationStatus::Interpolated | InterpolationStatus::Capped | InterpolationStatus::Same
                );
                CellValue {
                    strategy: kind.to_string(),
                    value: usable.then(|| rounded(i.value)),
                    status: status_name(i.status).into(),
                }
            }
            Ok(None) => CellValue { strategy: kind.to_string(), value: None, status: "trace".into() },
            Err(e) => CellValue { strategy: kind.to_string(), value: None, status: format!("error: {e}") },
        });
    }
    match cfg.mode {
        Mode::FixedFidelity if f0 >= cfg.target_fidelity.unwrap() => {
            cell.winner = "same".into();
            cell.value = Some(rounded(scenario.base_resources()));
        }
        mode => {
            if let Some(i) = pick_winner(mode, &cell.table) {
                cell.winner = cell.table[i].strategy.clone();
                cell.value = cell.table[i].value;
                if mode == Mode::FixedResources {
                    cell.gain = cell.value.and_then(|v| relative_gain(f0, v).ok()).map(rounded);
                }
            }
        }
    }
    cell
}

/// Runs the configured sweep and writes `cells.csv` and `grid.json`.
/// Cells are computed in parallel and assembled in grid order (`p_w` outer,
/// `p_z` inner); failures stay inside their cell.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepResult> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep: section missing".into()))?;
    if cfg.mode == Mode::Trace {
        return Err(Error::Config("mode: a sweep needs fixed_fidelity or fixed_resources".into()));
    }
    let kinds = cfg.strategy_kinds()?;
    let (pw, pz) = (sweep.pw.values(), sweep.pz.values());
    let coords: Vec<(f64, f64)> = pw.iter().flat_map(|&w| pz.iter().map(move |&z| (w, z))).collect();
    let cells: Vec<WinnerCell> = coords.par_iter().map(|&(w, z)| sweep_cell(cfg, &kinds, w, z)).collect();
    let result = SweepResult {
        name: cfg.name.clone(),
        graph: cfg.graph.build()?.to_string(),
        mode: cfg.mode,
        target_fidelity: cfg.target_fidelity,
        total_resources: cfg.total_resources,
        gate: cfg.noise.gate,
        z_qubits: sweep.z_qubits.clone(),
        pw,
        pz,
        strategies: kinds.iter().map(|k| k.to_string()).collect(),
        cells,
    };
    fs::create_dir_all(out_dir)?;
    write(&out_dir.join("cells.csv"), &sweep_csv(&result))?;
    write(&out_dir.join("grid.json"), &json(&result))?;
    Ok(result)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("p_w,p_z,initial_fidelity,winner,value,gain,status");
    for s in &result.strategies {
        let _ = write!(out, ",value[{s}]");
    }
    for s in &result.strategies {
        let _ = write!(out, ",status[{s}]");
    }
    out.push('\n');
    for c in &result.cells {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_sig(c.p_w),
            fmt_sig(c.p_z),
            opt(c.initial_fidelity),
            c.winner,
            opt(c.value),
            opt(c.gain),
            csv_field(&c.status)
        );
        for v in &c.table {
            let _ = write!(out, ",{}", opt(v.value));
        }
        for v in &c.table {
            let _ = write!(out, ",{}", csv_field(&v.status));
        }
        out.push('\n');
    }
    out
}

/// Default output directory for a config: `out/<name>`.
pub fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    let name = if cfg.name.is_empty() { "run" } else { &cfg.name };
    PathBuf::from("out").join(name)
}
