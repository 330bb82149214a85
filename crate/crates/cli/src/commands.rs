//! Execution of resolved configurations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use netsync_core::diagnostics::{
    alpha_sweep, colormap_sweep, sync_error, PerturbationShape, SimConfig, SweepResult,
};
use netsync_core::dynamics::lorenz_field;
use netsync_core::graphs::{lambda2_analytic, spectrum, ZERO_EIGENVALUE_TOL};
use netsync_core::matcore::inf_norm;
use netsync_core::netsim::{integrate_with, spread_initial_condition, Perturbation, Trajectory};
use netsync_core::stability::{alpha_c_general, persistence_bound_with_kappa};
use netsync_core::NetworkSystem;

use crate::config::{
    coupling_from_rows, matrix_from_rows, regular_kind, ColormapConfig, CriticalConfig,
    PersistenceConfig, PerturbationConfig, RunConfig, SimulateConfig, SpectrumConfig, SweepConfig,
    SystemConfig,
};
use crate::CliError;

/// Agreement required between numeric and closed-form λ₂.
const ANALYTIC_TOL: f64 = 1e-9;

pub fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match cfg {
        RunConfig::Spectrum(c) => spectrum_cmd(c, cfg, out),
        RunConfig::Critical(c) => critical_cmd(c, cfg, out),
        RunConfig::Simulate(c) => simulate_cmd(c, cfg, out),
        RunConfig::Sweep(c) => sweep_cmd(c, cfg, out),
        RunConfig::Colormap(c) => colormap_cmd(c, cfg, out),
        RunConfig::Persistence(c) => persistence_cmd(c, cfg, out),
    }
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn emit(out: &mut dyn Write, mut doc: Value, cfg: &RunConfig) -> Result<(), CliError> {
    doc["config"] = config_json(cfg);
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Short decimal form: rounds to 10 places and drops trailing zeros.
fn tidy(v: f64) -> String {
    let s = format!("{:.10}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn spectrum_cmd(c: &SpectrumConfig, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let g = c.graph.build()?;
    let d = spectrum(&g)?;
    let values: Vec<f64> = d
        .eigenvalues
        .iter()
        .map(|&v| {
            if v.abs() <= ZERO_EIGENVALUE_TOL {
                0.0
            } else {
                v
            }
        })
        .collect();
    let line: Vec<String> = values.iter().map(|&v| tidy(v)).collect();
    writeln!(out, "eigenvalues: {}", line.join(" "))?;
    if let Some(&l2) = values.get(1) {
        writeln!(out, "lambda2: {}", tidy(l2))?;
        if let Some(kind) = regular_kind(&c.graph.source) {
            let want = lambda2_analytic(kind, g.n())?;
            let verdict = if (l2 - want).abs() <= ANALYTIC_TOL {
                "match"
            } else {
                "MISMATCH"
            };
            writeln!(
                out,
                "analytic lambda2 ({kind}, n = {}): {} ({verdict})",
                g.n(),
                tidy(want)
            )?;
        }
    }
    writeln!(out, "config: {}", config_json(cfg))?;
    Ok(())
}

fn critical_cmd(c: &CriticalConfig, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let g = c.system.graph.build()?;
    let h = coupling_from_rows(&c.system.h)?;
    let report = alpha_c_general(&g, c.system.lorenz.params()?, &h)?;
    emit(out, report.to_json(c.alpha), cfg)
}

fn network(system: &SystemConfig, alpha: f64) -> Result<NetworkSystem, CliError> {
    let g = system.graph.build()?;
    let field = Arc::new(lorenz_field(system.lorenz.params()?));
    Ok(NetworkSystem::new(
        g,
        field,
        coupling_from_rows(&system.h)?,
        alpha,
    )?)
}

fn perturbation(p: &PerturbationConfig, xi: f64) -> Result<Perturbation, CliError> {
    Ok(shape(p)?.scaled(xi))
}

fn shape(p: &PerturbationConfig) -> Result<PerturbationShape, CliError> {
    Ok(PerturbationShape {
        i: p.edge.0,
        j: p.edge.1,
        shape: matrix_from_rows(&p.shape)?,
        omega: p.omega,
    })
}

fn initial_state(sys: &NetworkSystem, base: &[f64], spread: f64) -> Result<Vec<f64>, CliError> {
    if base.len() != sys.m() {
        return Err(CliError::Usage(format!(
            "--ic-base has {} entries, the oscillator has {}",
            base.len(),
            sys.m()
        )));
    }
    Ok(spread_initial_condition(sys.n(), base, spread))
}

fn steps_for(tmax: f64, dt: f64) -> Result<usize, CliError> {
    if !(dt > 0.0 && tmax > 0.0 && tmax.is_finite()) {
        return Err(CliError::Usage(format!(
            "need dt > 0 and tmax > 0, got dt = {dt}, tmax = {tmax}"
        )));
    }
    Ok((tmax / dt).round() as usize)
}

fn simulate_cmd(c: &SimulateConfig, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mut sys = network(&c.system, c.alpha)?;
    if let Some((p, xi)) = &c.perturbation {
        sys = sys.with_perturbations(vec![perturbation(p, *xi)?])?;
    }
    let x0 = initial_state(&sys, &c.initial.base, c.initial.spread)?;
    let steps = steps_for(c.tmax, c.dt)?;
    if c.stride == 0 {
        return Err(CliError::Usage("--stride must be >= 1".into()));
    }
    let keep = c.out.is_some();
    let mut states = Vec::new();
    let last = integrate_with(&sys, &x0, 0.0, c.dt, steps, |k, _, x| {
        if keep && k % c.stride == 0 {
            states.push(x.to_vec());
        }
    })?;
    if let Some(path) = &c.out {
        let traj = Trajectory {
            t0: 0.0,
            dt: c.dt * c.stride as f64,
            n: sys.n(),
            m: sys.m(),
            states,
        };
        let mut w = create(path)?;
        traj.write_csv(&mut w)?;
        w.flush()?;
    }
    let doc = json!({
        "t_end": steps as f64 * c.dt,
        "steps": steps,
        "initial_sync_error": sync_error(&x0, sys.n(), sys.m()),
        "final_sync_error": sync_error(&last, sys.n(), sys.m()),
    });
    emit(out, doc, cfg)
}

fn write_sweep_files(result: &SweepResult, c: &SweepConfig) -> Result<(), CliError> {
    if let Some(path) = &c.out {
        let mut w = create(path)?;
        result.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &c.pgm {
        let mut w = create(path)?;
        result.write_pgm(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &c.pgm_meta {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &result.pgm_sidecar())
            .map_err(|e| CliError::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}

fn sim_config(c: &SweepConfig) -> SimConfig {
    SimConfig {
        dt: c.dt,
        t_end: c.tmax,
        window: c.window,
    }
}

fn sweep_cmd(c: &SweepConfig, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let base = network(&c.system, 0.0)?;
    let x0 = initial_state(&base, &c.initial.base, c.initial.spread)?;
    let result = alpha_sweep(&base, &c.alphas, &x0, &sim_config(c), c.system.graph.seed)?;
    write_sweep_files(&result, c)?;
    emit(out, json!({ "result": result }), cfg)
}

fn colormap_cmd(c: &ColormapConfig, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let s = &c.sweep;
    let base = network(&s.system, 0.0)?;
    let x0 = initial_state(&base, &s.initial.base, s.initial.spread)?;
    let result = colormap_sweep(
        &base,
        &s.alphas,
        &c.xis,
        &shape(&c.perturbation)?,
        &x0,
        &sim_config(s),
        s.system.graph.seed,
    )?;
    write_sweep_files(&result, s)?;
    emit(out, json!({ "result": result }), cfg)
}

fn persistence_cmd(
    c: &PersistenceConfig,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let g = c.system.graph.build()?;
    let h = coupling_from_rows(&c.system.h)?;
    let report = alpha_c_general(&g, c.system.lorenz.params()?, &h)?;
    let p = perturbation(&c.perturbation, c.xi)?;
    // rejects perturbations off the graph's edges
    network(&c.system, c.alpha)?.with_perturbations(vec![p.clone()])?;
    let rep = persistence_bound_with_kappa(&report, c.alpha, &g, &[p], c.convention, c.kappa)?;
    let mut doc = serde_json::to_value(rep).map_err(|e| CliError::Io(e.into()))?;
    doc["xi_bound"] = rep
        .xi_bound(inf_norm(&matrix_from_rows(&c.perturbation.shape)?))
        .into();
    doc["beta"] = report.beta.into();
    doc["lambda2"] = report.lambda2.into();
    doc["mu1"] = report.mu1.into();
    doc["alpha_c"] = report.alpha_critical.into();
    emit(out, doc, cfg)
}
