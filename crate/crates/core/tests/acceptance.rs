//! Acceptance criteria, one line per criterion. Run with
//! `cargo test -p netsync-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netsync_core::diagnostics::{
    alpha_sweep, colormap_sweep, linspace_step, sync_error_series, time_avg_sync_error,
    PerturbationShape, SimConfig, SYNC_THRESHOLD,
};
use netsync_core::dynamics::{beta_inf, lorenz_field, lyapunov_decrease_check};
use netsync_core::graphs::{
    build_regular, lambda2_analytic, lambda2_bounds, laplacian, spectrum, RegularKind,
};
use netsync_core::matcore::{inf_norm, jacobi_eig, kron};
use netsync_core::netsim::{
    integrate_with, project_modes, rk4_integrate_strided, spread_initial_condition,
    synchronized_state, Isolated, Perturbation,
};
use netsync_core::stability::{
    alpha_c_general, alpha_c_two_dd, alpha_c_two_minors, alpha_c_two_sym, persistence_bound,
    EtaConvention, DEFAULT_CRITERION_GRID,
};
use netsync_core::{CouplingMatrix, LorenzParams, Matrix, NetworkSystem};

use common::*;

const BETA_TARGET: f64 = 58.22;
const BETA_TOL: f64 = 0.01;
const BETA_BUDGET: Duration = Duration::from_millis(1);

const ALPHA_DD_TARGET: f64 = 29.11;
const ALPHA_DD_TOL: f64 = 0.01;
const ALPHA_SYM_TARGET: f64 = 13.03;
const ALPHA_SYM_TOL: f64 = 0.1;
const ALPHA_MINORS_TARGET: f64 = 7.5546;
const ALPHA_MINORS_TOL: f64 = 0.01;
const P2_ROOT_TARGET: f64 = 6.5972;
const P2_ROOT_TOL: f64 = 0.001;
const SWEEP_BUDGET: Duration = Duration::from_secs(30);

const SPECTRAL_TOL: f64 = 1e-9;
const SPECTRAL_BUDGET: Duration = Duration::from_secs(10);

const SYNCED_ERROR: f64 = 1e-8;
const UNSYNCED_MEAN: f64 = 1.0;
const DYNAMICS_BUDGET: Duration = Duration::from_secs(60);

const ONSET_RANGE: (f64, f64) = (0.4, 0.7);
const ONSET_BUDGET: Duration = Duration::from_secs(600);

const XI_BOUND_CONSTANT: f64 = 0.11125;
const XI_BOUND_COSINE: f64 = 7.42e-2;
const XI_BOUND_TOL: f64 = 5e-5;

const RK4_RATIO_MIN: f64 = 15.0;
const KRON_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-12;

const IC_BASE: [f64; 3] = [-7.0, 10.0, 5.0];
const IC_SPREAD: f64 = 0.014;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn classic() -> LorenzParams {
    LorenzParams::classic()
}

fn k2() -> netsync_core::Graph {
    build_regular(RegularKind::Complete, 2).unwrap()
}

fn two_ic() -> Vec<f64> {
    spread_initial_condition(2, &IC_BASE, IC_SPREAD)
}

fn criterion_1() -> Outcome {
    let h = CouplingMatrix::identity(3);
    let start = Instant::now();
    let beta = beta_inf(classic(), &h);
    let took = start.elapsed();
    outcome(
        (beta - BETA_TARGET).abs() <= BETA_TOL && took < BETA_BUDGET,
        format!("beta = {beta:.6} (want {BETA_TARGET} ± {BETA_TOL}), {took:?}"),
    )
}

fn criterion_2_dd_minors_order() -> Outcome {
    let report = alpha_c_general(&k2(), classic(), &CouplingMatrix::identity(3)).unwrap();
    let dd = report.alpha_critical;
    let start = Instant::now();
    let minors = alpha_c_two_minors(classic(), DEFAULT_CRITERION_GRID).unwrap();
    let sym = alpha_c_two_sym(classic(), DEFAULT_CRITERION_GRID).unwrap();
    let took = start.elapsed();
    let ok_dd = (dd - ALPHA_DD_TARGET).abs() <= ALPHA_DD_TOL
        && (alpha_c_two_dd(classic()) - dd).abs() <= 1e-12;
    let ok_minors = (minors.alpha_critical - ALPHA_MINORS_TARGET).abs() <= ALPHA_MINORS_TOL
        && (minors.p2_root - P2_ROOT_TARGET).abs() <= P2_ROOT_TOL;
    let ok_order = minors.alpha_critical <= sym && sym <= dd;
    outcome(
        ok_dd && ok_minors && ok_order && took < SWEEP_BUDGET,
        format!(
            "dd = {dd:.4}, minors = {:.4} (p2 root {:.4}), sym = {sym:.4}; order minors <= sym <= dd: {ok_order}; sweeps {took:?}",
            minors.alpha_critical, minors.p2_root
        ),
    )
}

fn criterion_2_symmetric_part() -> Outcome {
    let start = Instant::now();
    let sym = alpha_c_two_sym(classic(), DEFAULT_CRITERION_GRID).unwrap();
    let took = start.elapsed();
    outcome(
        (sym - ALPHA_SYM_TARGET).abs() <= ALPHA_SYM_TOL && took < SWEEP_BUDGET,
        format!("sym = {sym:.4} (want {ALPHA_SYM_TARGET} ± {ALPHA_SYM_TOL}), {took:?}"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut multiplicities_ok = true;
    for n in 3..=40 {
        for kind in RegularKind::ALL {
            let d = spectrum(&build_regular(kind, n).unwrap()).unwrap();
            worst = worst.max((d.eigenvalues[1] - lambda2_analytic(kind, n).unwrap()).abs());
            if kind == RegularKind::Star {
                let count = |target: f64| {
                    d.eigenvalues
                        .iter()
                        .filter(|&&v| (v - target).abs() <= SPECTRAL_TOL)
                        .count()
                };
                multiplicities_ok &= count(0.0) == 1 && count(1.0) == n - 2 && count(n as f64) == 1;
            }
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= SPECTRAL_TOL && multiplicities_ok && took < SPECTRAL_BUDGET,
        format!("max |lambda2 - closed form| = {worst:.2e}, star multiplicities ok: {multiplicities_ok}, {took:?}"),
    )
}

fn criterion_4() -> Outcome {
    let mut violations = 0;
    for seed in 0..100 {
        let g = random_graph(1000 + seed);
        let l2 = spectrum(&g).unwrap().eigenvalues[1];
        let (lo, hi) = lambda2_bounds(&g).unwrap();
        if !(lo <= l2 + 1e-12 && l2 <= hi + 1e-12) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations on 100 graphs"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let synced =
        rk4_integrate_strided(&two_lorenz(30.0), &two_ic(), 0.0, 1e-3, 50_000, 50_000).unwrap();
    let err_50 = sync_error_series(&synced)[1];
    let loose = rk4_integrate_strided(&two_lorenz(0.1), &two_ic(), 0.0, 1e-3, 200_000, 1).unwrap();
    let mean = time_avg_sync_error(&loose, (100.0, 200.0)).unwrap();
    let took = start.elapsed();
    outcome(
        err_50 < SYNCED_ERROR && mean > UNSYNCED_MEAN && took < DYNAMICS_BUDGET,
        format!("alpha=30: error(t=50) = {err_50:.3e}; alpha=0.1: mean error on [100,200] = {mean:.3}; {took:?}"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let alphas = linspace_step(0.1, 1.0, 0.1).unwrap();
    let config = SimConfig::with_window(1e-3, 200.0, 400.0);
    let sweep = alpha_sweep(&two_lorenz(0.0), &alphas, &two_ic(), &config, None).unwrap();
    let took = start.elapsed();
    let synced: Vec<bool> = sweep.cells.iter().map(|c| c.is_synchronized()).collect();
    let onset = synced.iter().position(|&s| s).map(|k| alphas[k]);
    let monotone = synced.windows(2).all(|w| w[1] || !w[0]);
    let pass = matches!(onset, Some(a) if a >= ONSET_RANGE.0 - 1e-9 && a <= ONSET_RANGE.1 + 1e-9)
        && monotone
        && took < ONSET_BUDGET;
    let cells: Vec<String> = sweep
        .cells
        .iter()
        .map(|c| format!("{:.2e}", c.value().unwrap_or(f64::NAN)))
        .collect();
    outcome(
        pass,
        format!(
            "onset alpha = {onset:?}, cells [{}], {took:?}",
            cells.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let s = [1.5, -2.0, 20.0];
    let field = lorenz_field(classic());
    let steps = 10_000;
    let mut reference = Vec::with_capacity(steps + 1);
    integrate_with(&Isolated(&field), &s, 0.0, 1e-3, steps, |_, _, x| {
        reference.push(x.to_vec())
    })
    .unwrap();
    let mut mismatches = 0;
    for alpha in [0.0, 1.0, 30.0] {
        let sys = NetworkSystem::new(
            build_regular(RegularKind::Ring, 6).unwrap(),
            std::sync::Arc::new(lorenz_field(classic())),
            CouplingMatrix::identity(3),
            alpha,
        )
        .unwrap();
        let traj =
            rk4_integrate_strided(&sys, &synchronized_state(6, &s), 0.0, 1e-3, steps, 1).unwrap();
        for (k, want) in reference.iter().enumerate() {
            for v in 0..6 {
                let got = traj.vertex(k, v);
                if got
                    .iter()
                    .zip(want)
                    .any(|(a, b)| a.to_bits() != b.to_bits())
                {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} non-identical vertex blocks over 3 × 10^4 steps"),
    )
}

fn constant_shape() -> Matrix {
    Matrix::from_rows(&[[1.0, 0.0, -1.0], [0.0, -1.0, 0.0], [-1.0, 0.0, 1.0]]).unwrap()
}

fn cosine_shape() -> Matrix {
    Matrix::from_rows(&[[1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap()
}

fn criterion_8() -> Outcome {
    let report = alpha_c_general(&k2(), classic(), &CouplingMatrix::identity(3)).unwrap();
    let persistent = |xi: f64| {
        persistence_bound(
            &report,
            30.0,
            &k2(),
            &[Perturbation::constant(0, 1, constant_shape().scale(xi))],
            EtaConvention::PerMode,
        )
        .unwrap()
    };
    let xi_bound = persistent(0.0).xi_bound(inf_norm(&constant_shape()));
    let flags_ok = [-0.11, -0.1, -0.05, 0.05, 0.1, 0.111]
        .iter()
        .all(|&xi| persistent(xi).persistent)
        && !persistent(0.2).persistent;
    let shape = PerturbationShape {
        i: 0,
        j: 1,
        shape: constant_shape(),
        omega: None,
    };
    let map = colormap_sweep(
        &two_lorenz(0.0),
        &[30.0],
        &[0.1],
        &shape,
        &two_ic(),
        &SimConfig::default(),
        None,
    )
    .unwrap();
    let cell = map.get(0, 0);
    outcome(
        cell.is_synchronized() && flags_ok && (xi_bound - XI_BOUND_CONSTANT).abs() <= XI_BOUND_TOL,
        format!("xi bound = {xi_bound:.5}, flags ok: {flags_ok}, cell(alpha=30, xi=0.1) = {cell}"),
    )
}

fn criterion_9() -> Outcome {
    let report = alpha_c_general(&k2(), classic(), &CouplingMatrix::identity(3)).unwrap();
    let rep = persistence_bound(
        &report,
        30.0,
        &k2(),
        &[Perturbation::cosine(
            0,
            1,
            cosine_shape().scale(0.05),
            1000.0,
        )],
        EtaConvention::PerMode,
    )
    .unwrap();
    let xi_bound = rep.xi_bound(inf_norm(&cosine_shape()));
    let alphas = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0];
    let shape = PerturbationShape {
        i: 0,
        j: 1,
        shape: cosine_shape(),
        omega: Some(1000.0),
    };
    let map = colormap_sweep(
        &two_lorenz(0.0),
        &alphas,
        &[0.05],
        &shape,
        &two_ic(),
        &SimConfig::default(),
        None,
    )
    .unwrap();
    let all_synced = map.cells.iter().all(|c| c.is_synchronized());
    let worst = map
        .cells
        .iter()
        .filter_map(|c| c.value())
        .fold(0.0, f64::max);
    outcome(
        (xi_bound - XI_BOUND_COSINE).abs() <= XI_BOUND_TOL && all_synced,
        format!("xi bound = {xi_bound:.5e}; omega=1000, xi=0.05 column synced for alpha >= 1: {all_synced} (max cell {worst:.2e}, threshold {SYNC_THRESHOLD})"),
    )
}

fn criterion_10_properties() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let ratio = rk4_decay_error(0.1) / rk4_decay_error(0.05);
    let mut kron_worst: f64 = 0.0;
    let mut jacobi_worst: f64 = 0.0;
    let mut energy_worst: f64 = 0.0;
    for n in (2..=10).cycle().take(100) {
        let (a, b, u, v) = (
            random_matrix(&mut r, 3, 3),
            random_matrix(&mut r, 3, 3),
            random_matrix(&mut r, 3, 3),
            random_matrix(&mut r, 3, 3),
        );
        let lhs = kron(&a, &b)
            .unwrap()
            .matmul(&kron(&u, &v).unwrap())
            .unwrap();
        let rhs = kron(&a.matmul(&u).unwrap(), &b.matmul(&v).unwrap()).unwrap();
        kron_worst = kron_worst.max(lhs.max_abs_diff(&rhs) / inf_norm(&lhs).max(1.0));

        let s = random_symmetric(&mut r, n);
        let d = jacobi_eig(&s).unwrap();
        jacobi_worst =
            jacobi_worst.max(inf_norm(&s.sub(&d.reconstruct()).unwrap()) / inf_norm(&s).max(1.0));

        let g = build_regular(RegularKind::Path, n).unwrap();
        let x = random_matrix(&mut r, 1, 3 * n).as_slice().to_vec();
        let (p, q) = project_modes(&g, 3, &x).unwrap();
        let sq = |w: &[f64]| w.iter().map(|c| c * c).sum::<f64>();
        energy_worst = energy_worst.max((sq(&p) + sq(&q) - sq(&x)).abs() / sq(&x).max(1.0));
    }
    let mut laplacian_ok = true;
    for seed in 0..50 {
        let g = random_graph(seed);
        let l = laplacian(&g);
        let d = spectrum(&g).unwrap();
        let zero_count = d.eigenvalues.iter().filter(|v| v.abs() <= 1e-9).count();
        laplacian_ok &= l.is_symmetric()
            && (0..g.n()).all(|i| l.row(i).iter().sum::<f64>() == 0.0)
            && d.eigenvalues.iter().all(|&v| v >= -1e-9)
            && zero_count == g.component_count();
    }
    let pass = ratio >= RK4_RATIO_MIN
        && kron_worst <= KRON_TOL
        && jacobi_worst <= JACOBI_TOL
        && energy_worst <= ENERGY_TOL
        && laplacian_ok;
    outcome(
        pass,
        format!(
            "rk4 ratio {ratio:.2}, kron {kron_worst:.1e}, jacobi {jacobi_worst:.1e}, energy {energy_worst:.1e}, laplacian ok: {laplacian_ok}"
        ),
    )
}

fn criterion_10_lyapunov() -> Outcome {
    let frac = lyapunov_decrease_check(classic(), 10_000, 1);
    outcome(
        frac == 0.0,
        format!("violation fraction outside the stated absorbing set: {frac}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1 beta reproduction", criterion_1),
        (
            "2 critical coupling chain (dd, minors, ordering)",
            criterion_2_dd_minors_order,
        ),
        (
            "2 symmetric-part critical coupling",
            criterion_2_symmetric_part,
        ),
        ("3 spectral tables", criterion_3),
        ("4 lambda2 bounds", criterion_4),
        ("5 sync dynamics", criterion_5),
        ("6 empirical threshold", criterion_6),
        ("7 manifold invariance", criterion_7),
        ("8 persistence, constant edge perturbation", criterion_8),
        ("9 persistence, cosine edge perturbation", criterion_9),
        ("10 property suites", criterion_10_properties),
        (
            "10 Lyapunov decrease outside the absorbing set",
            criterion_10_lyapunov,
        ),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let result = run();
        println!(
            "{} criterion {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
