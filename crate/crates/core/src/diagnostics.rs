//! Synchronization error metrics and parameter sweeps over α and (α, ξ).
//!
//! Sweep cells are independent integrations run in parallel; results are
//! assembled in index order, so a sweep is bit-reproducible regardless of
//! scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::netsim::{
    integrate_with, NetworkSystem, OdeSystem, Perturbation, Trajectory, DEFAULT_DT,
};

/// Time-averaged error below this counts as synchronized.
pub const SYNC_THRESHOLD: f64 = 1e-3;

/// Integration step, horizon and averaging window for one sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// `[t_lo, t_hi]` over which the sync error is averaged.
    pub window: (f64, f64),
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_end: 2000.0,
            window: (1000.0, 2000.0),
        }
    }
}

impl SimConfig {
    /// Integrates up to the end of `window`.
    pub fn with_window(dt: f64, lo: f64, hi: f64) -> Self {
        Self {
            dt,
            t_end: hi,
            window: (lo, hi),
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(0.0 <= lo && lo <= hi && hi <= self.t_end + 0.5 * self.dt) {
            return Err(Error::WindowOutOfRange {
                lo,
                hi,
                start: 0.0,
                end: self.t_end,
            });
        }
        Ok(())
    }
}

/// Largest pairwise Euclidean distance between vertex blocks.
pub fn sync_error(x: &[f64], n: usize, m: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let xi = &x[i * m..(i + 1) * m];
        for j in (i + 1)..n {
            let xj = &x[j * m..(j + 1) * m];
            let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            worst = worst.max(d2);
        }
    }
    worst.sqrt()
}

/// [`sync_error`] at every saved step.
pub fn sync_error_series(traj: &Trajectory) -> Vec<f64> {
    traj.states
        .iter()
        .map(|x| sync_error(x, traj.n, traj.m))
        .collect()
}

fn in_window(t: f64, (lo, hi): (f64, f64), dt: f64) -> bool {
    let eps = 1e-6 * dt;
    t >= lo - eps && t <= hi + eps
}

/// Mean sync error over saved steps with `t ∈ [lo, hi]`.
pub fn time_avg_sync_error(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let (start, end) = (traj.t0, traj.t_end());
    let eps = 1e-6 * traj.dt;
    if traj.is_empty() || lo > hi || lo < start - eps || hi > end + eps {
        return Err(Error::WindowOutOfRange { lo, hi, start, end });
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for (k, x) in traj.states.iter().enumerate() {
        if in_window(traj.time(k), window, traj.dt) {
            sum += sync_error(x, traj.n, traj.m);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::WindowOutOfRange { lo, hi, start, end });
    }
    Ok(sum / count as f64)
}

/// Time-averaged sync error over `config.window`, computed while
/// integrating so no trajectory is stored.
pub fn windowed_sync_error(sys: &NetworkSystem, x0: &[f64], config: &SimConfig) -> Result<f64> {
    config.validate()?;
    let (n, m) = (sys.n(), sys.m());
    let (mut sum, mut count) = (0.0, 0usize);
    integrate_with(sys, x0, 0.0, config.dt, config.steps(), |_, t, x| {
        if in_window(t, config.window, config.dt) {
            sum += sync_error(x, n, m);
            count += 1;
        }
    })?;
    if count == 0 {
        let (lo, hi) = config.window;
        return Err(Error::WindowOutOfRange {
            lo,
            hi,
            start: 0.0,
            end: config.t_end,
        });
    }
    Ok(sum / count as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub label: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Value(f64),
    Diverged,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Cell::Value(v) => Some(v),
            Cell::Diverged => None,
        }
    }

    pub fn is_synchronized(&self) -> bool {
        matches!(*self, Cell::Value(v) if v < SYNC_THRESHOLD)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{v}"),
            Cell::Diverged => f.write_str("diverged"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub seed: Option<u64>,
    pub dt: f64,
    pub t_end: f64,
    pub window: (f64, f64),
}

impl SweepMeta {
    pub fn from_config(config: &SimConfig, seed: Option<u64>) -> Self {
        Self {
            seed,
            dt: config.dt,
            t_end: config.t_end,
            window: config.window,
        }
    }
}

/// Grid of time-averaged sync errors. With two axes, cell `(i, j)` is
/// stored at `i·|axis2| + j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub cells: Vec<Cell>,
    pub meta: SweepMeta,
}

impl SweepResult {
    fn width2(&self) -> usize {
        self.axis2.as_ref().map_or(1, |a| a.values.len())
    }

    pub fn get(&self, i: usize, j: usize) -> Cell {
        self.cells[i * self.width2() + j]
    }

    /// Largest finite cell, or 0 when there is none.
    pub fn max_value(&self) -> f64 {
        self.cells
            .iter()
            .filter_map(Cell::value)
            .fold(0.0, f64::max)
    }

    /// Header row holds axis2 values (or the cell label for 1-D sweeps);
    /// the first column holds axis1 values.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![match &self.axis2 {
            Some(a2) => format!("{}\\{}", self.axis1.label, a2.label),
            None => self.axis1.label.clone(),
        }];
        match &self.axis2 {
            Some(a2) => header.extend(a2.values.iter().map(f64::to_string)),
            None => header.push("sync_error".into()),
        }
        out.write_record(&header)?;
        let w2 = self.width2();
        for (i, a1) in self.axis1.values.iter().enumerate() {
            let mut row = vec![a1.to_string()];
            row.extend(self.cells[i * w2..(i + 1) * w2].iter().map(Cell::to_string));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Plain (P2) 8-bit greyscale: axis1 runs left to right, axis2 bottom
    /// to top; 0 is black and the grid maximum white. Diverged cells are white.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        let (width, height) = (self.axis1.values.len(), self.width2());
        let max = self.max_value();
        writeln!(w, "P2")?;
        writeln!(w, "{width} {height}")?;
        writeln!(w, "255")?;
        for row in (0..height).rev() {
            let line: Vec<String> = (0..width)
                .map(|col| {
                    let level = match self.get(col, row) {
                        Cell::Diverged => 255,
                        Cell::Value(_) if max == 0.0 => 0,
                        Cell::Value(v) => (255.0 * v / max).round().clamp(0.0, 255.0) as u8,
                    };
                    level.to_string()
                })
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Scale and axis metadata to accompany [`write_pgm`](Self::write_pgm).
    pub fn pgm_sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "format": "P2",
            "width": self.axis1.values.len(),
            "height": self.width2(),
            "scale_min": 0.0,
            "scale_max": self.max_value(),
            "x_axis": self.axis1,
            "y_axis": self.axis2,
            "y_order": "top row is the last axis2 value",
            "diverged_cells": self.cells.iter().filter(|c| matches!(c, Cell::Diverged)).count(),
            "meta": self.meta,
        })
    }
}

fn run_cell(sys: &NetworkSystem, ic: &[f64], config: &SimConfig) -> Result<Cell> {
    match windowed_sync_error(sys, ic, config) {
        Ok(v) => Ok(Cell::Value(v)),
        Err(Error::Diverged { .. }) => Ok(Cell::Diverged),
        Err(e) => Err(e),
    }
}

fn check_axis(label: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParams(format!("{label} grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "{label} grid has non-finite values"
        )));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams(format!("{label} grid must be sorted")));
    }
    Ok(())
}

fn check_ic(base: &NetworkSystem, ic: &[f64]) -> Result<()> {
    if ic.len() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            found: ic.len(),
        });
    }
    Ok(())
}

/// One cell per α: time-averaged sync error from the shared initial state.
pub fn alpha_sweep(
    base: &NetworkSystem,
    alphas: &[f64],
    ic: &[f64],
    config: &SimConfig,
    seed: Option<u64>,
) -> Result<SweepResult> {
    check_axis("alpha", alphas)?;
    check_ic(base, ic)?;
    config.validate()?;
    let cells = alphas
        .par_iter()
        .map(|&alpha| run_cell(&base.with_alpha(alpha), ic, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis1: Axis::new("alpha", alphas.to_vec()),
        axis2: None,
        cells,
        meta: SweepMeta::from_config(config, seed),
    })
}

/// `V_ij = ξ·shape`, optionally modulated by `cos(ωt)`.
#[derive(Clone, Debug)]
pub struct PerturbationShape {
    pub i: usize,
    pub j: usize,
    pub shape: Matrix,
    pub omega: Option<f64>,
}

impl PerturbationShape {
    pub fn scaled(&self, xi: f64) -> Perturbation {
        let base = self.shape.scale(xi);
        match self.omega {
            Some(omega) => Perturbation::cosine(self.i, self.j, base, omega),
            None => Perturbation::constant(self.i, self.j, base),
        }
    }
}

/// Grid over (α, ξ) with the shaped perturbation added to `base`.
pub fn colormap_sweep(
    base: &NetworkSystem,
    alphas: &[f64],
    xis: &[f64],
    shape: &PerturbationShape,
    ic: &[f64],
    config: &SimConfig,
    seed: Option<u64>,
) -> Result<SweepResult> {
    check_axis("alpha", alphas)?;
    check_axis("xi", xis)?;
    check_ic(base, ic)?;
    config.validate()?;
    // validates the shape against the graph once, up front
    let template = {
        let mut ps = base.perturbations().to_vec();
        ps.push(shape.scaled(0.0));
        base.clone().with_perturbations(ps)?
    };
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| xis.iter().map(move |&x| (a, x)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(alpha, xi)| {
            let mut ps = base.perturbations().to_vec();
            ps.push(shape.scaled(xi));
            let sys = template.with_alpha(alpha).with_perturbations(ps)?;
            run_cell(&sys, ic, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis1: Axis::new("alpha", alphas.to_vec()),
        axis2: Some(Axis::new("xi", xis.to_vec())),
        cells,
        meta: SweepMeta::from_config(config, seed),
    })
}

/// Evenly spaced values `start, start+step, …` up to `stop` (inclusive
/// within half a step), each computed as `start + k·step`.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::InvalidParams(format!(
            "bad range {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}
