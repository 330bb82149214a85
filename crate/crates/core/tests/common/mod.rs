#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netsync_core::dynamics::{lorenz_field, state_bounds, LinearField};
use netsync_core::graphs::{build_random, build_regular, RandomModel, RegularKind};
use netsync_core::netsim::{integrate_with, Isolated};
use netsync_core::{AbsorbingSet, CouplingMatrix, Graph, LorenzParams, Matrix, NetworkSystem};

/// Connected random graph drawn from one of the three models, picked by seed.
pub fn random_graph(seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(6..40);
    let model = match seed % 3 {
        0 => RandomModel::ErdosRenyi {
            p: rng.gen_range(0.15..0.6),
        },
        1 => RandomModel::WattsStrogatz {
            k: 2 * rng.gen_range(1..3),
            p: rng.gen_range(0.0..0.5),
        },
        _ => RandomModel::BarabasiAlbert {
            m: rng.gen_range(1..4),
        },
    };
    build_random(model, n, seed).expect("connected random graph")
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-5.0..5.0))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = random_matrix(rng, n, n);
    Matrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)))
}

/// Global error at t = 1 of RK4 on `ẋ = −x` with step `dt`.
pub fn rk4_decay_error(dt: f64) -> f64 {
    let field = LinearField::new(Matrix::from_rows(&[[-1.0]]).unwrap()).unwrap();
    let steps = (1.0 / dt).round() as usize;
    let x = integrate_with(&Isolated(&field), &[1.0], 0.0, dt, steps, |_, _, _| {}).unwrap();
    (x[0] - (-1.0f64).exp()).abs()
}

pub fn two_lorenz(alpha: f64) -> NetworkSystem {
    NetworkSystem::new(
        build_regular(RegularKind::Complete, 2).unwrap(),
        Arc::new(lorenz_field(LorenzParams::classic())),
        CouplingMatrix::identity(3),
        alpha,
    )
    .unwrap()
}

/// Outcome of following one Lorenz trajectory against a candidate
/// absorbing set.
#[derive(Debug)]
pub struct EntryOutcome {
    pub start: Vec<f64>,
    pub entry_time: Option<f64>,
    pub exited_after_entry: bool,
    /// Largest `V / level` after `t = 50`.
    pub worst_ratio_late: f64,
}

impl EntryOutcome {
    pub fn ok(&self, deadline: f64) -> bool {
        matches!(self.entry_time, Some(t) if t <= deadline) && !self.exited_after_entry
    }
}

/// Integrates `starts` uniform starting points from twice the bounding box,
/// each lying outside `set`, with RK4 (dt = 1e-3) until `t_end`.
pub fn absorbing_entry(
    set: &AbsorbingSet,
    starts: usize,
    seed: u64,
    t_end: f64,
) -> Vec<EntryOutcome> {
    let params = LorenzParams::classic();
    let field = lorenz_field(params);
    let ranges = state_bounds(params).ranges(params, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < starts {
        let x0: Vec<f64> = ranges
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..hi))
            .collect();
        if set.contains(&x0) {
            continue;
        }
        let dt = 1e-3;
        let mut entry_time = None;
        let mut exited = false;
        let mut worst: f64 = 0.0;
        integrate_with(
            &Isolated(&field),
            &x0,
            0.0,
            dt,
            (t_end / dt).round() as usize,
            |_, t, x| {
                let inside = set.contains(x);
                match entry_time {
                    None if inside => entry_time = Some(t),
                    Some(_) if !inside => exited = true,
                    _ => {}
                }
                if t >= 50.0 {
                    worst = worst.max(set.lyapunov(x) / set.level);
                }
            },
        )
        .unwrap();
        out.push(EntryOutcome {
            start: x0,
            entry_time,
            exited_after_entry: exited,
            worst_ratio_late: worst,
        });
    }
    out
}
