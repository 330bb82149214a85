//! The coupled network `ẋᵢ = f(xᵢ) − α Σⱼ Lᵢⱼ H xⱼ` with optional linear
//! edge perturbations, integrated by fixed-step RK4.
//!
//! The right-hand side is assembled blockwise; `L ⊗ H` is never formed.
//! The coupling for vertex `i` is accumulated as `Σ_{j∼i} H(xⱼ − xᵢ)`,
//! which equals `−Σⱼ Lᵢⱼ H xⱼ` and is exactly zero when neighbouring
//! blocks are equal.

use std::io::Write;
use std::sync::Arc;

use crate::dynamics::{CouplingMatrix, VectorField};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::matcore::{inf_norm, Matrix};

/// States with any component above this magnitude abort integration.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// A system of ODEs `ẋ = F(t, x)` on ℝᵈ.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Writes `F(t, x)` into `dx`; slices have length [`dim`](Self::dim).
    fn rhs_into(&self, t: f64, x: &[f64], dx: &mut [f64]);
}

/// A single uncoupled oscillator viewed as an [`OdeSystem`].
pub struct Isolated<'a>(pub &'a dyn VectorField);

impl OdeSystem for Isolated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rhs_into(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        self.0.eval(x, dx);
    }
}

/// Time dependence of an edge perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Modulation {
    Constant,
    Cosine { omega: f64 },
}

impl Modulation {
    #[inline]
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Cosine { omega } => (omega * t).cos(),
        }
    }
}

/// Linear perturbation `V_ij(t)` acting on vertex `i` through `x_j − x_i`.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub i: usize,
    pub j: usize,
    pub base: Matrix,
    pub modulation: Modulation,
}

impl Perturbation {
    pub fn constant(i: usize, j: usize, base: Matrix) -> Self {
        Self {
            i,
            j,
            base,
            modulation: Modulation::Constant,
        }
    }

    pub fn cosine(i: usize, j: usize, base: Matrix, omega: f64) -> Self {
        Self {
            i,
            j,
            base,
            modulation: Modulation::Cosine { omega },
        }
    }

    pub fn at(&self, t: f64) -> Matrix {
        self.base.scale(self.modulation.factor(t))
    }

    /// `sup_t ‖V_ij(t)‖_∞`; the cosine factor reaches 1.
    pub fn sup_inf_norm(&self) -> f64 {
        inf_norm(&self.base)
    }
}

#[derive(Clone)]
pub struct NetworkSystem {
    graph: Graph,
    field: Arc<dyn VectorField>,
    h: CouplingMatrix,
    alpha: f64,
    perturbations: Vec<Perturbation>,
    // indices into `perturbations`, grouped by the vertex they act on
    by_vertex: Vec<Vec<usize>>,
}

impl std::fmt::Debug for NetworkSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NetworkSystem")
            .field("n", &self.graph.n())
            .field("m", &self.field.dim())
            .field("alpha", &self.alpha)
            .field("perturbations", &self.perturbations.len())
            .finish()
    }
}

impl NetworkSystem {
    /// `alpha` may be negative for exploratory runs; such runs normally end
    /// in [`Error::Diverged`].
    pub fn new(
        graph: Graph,
        field: Arc<dyn VectorField>,
        h: CouplingMatrix,
        alpha: f64,
    ) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        if h.dim() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                found: h.dim(),
            });
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidParams(format!(
                "alpha must be finite, got {alpha}"
            )));
        }
        let by_vertex = vec![Vec::new(); graph.n()];
        Ok(Self {
            graph,
            field,
            h,
            alpha,
            perturbations: Vec::new(),
            by_vertex,
        })
    }

    pub fn with_perturbations(mut self, perturbations: Vec<Perturbation>) -> Result<Self> {
        let m = self.m();
        for p in &perturbations {
            if p.i >= self.n() || p.j >= self.n() || !self.graph.has_edge(p.i, p.j) {
                return Err(Error::InvalidGraph(format!(
                    "perturbation on ({}, {}) is not an edge",
                    p.i, p.j
                )));
            }
            if p.base.rows() != m || p.base.cols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: p.base.rows().max(p.base.cols()),
                });
            }
        }
        self.by_vertex = vec![Vec::new(); self.n()];
        for (k, p) in perturbations.iter().enumerate() {
            self.by_vertex[p.i].push(k);
        }
        self.perturbations = perturbations;
        Ok(self)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn field(&self) -> &dyn VectorField {
        self.field.as_ref()
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.field.dim()
    }

    /// Stacked right-hand side, checked.
    pub fn rhs(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut dx = vec![0.0; x.len()];
        self.rhs_into(t, x, &mut dx);
        Ok(dx)
    }
}

impl OdeSystem for NetworkSystem {
    fn dim(&self) -> usize {
        self.n() * self.m()
    }

    fn rhs_into(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let m = self.m();
        let h = self.h.matrix();
        for i in 0..self.n() {
            let xi = &x[i * m..(i + 1) * m];
            let out = &mut dx[i * m..(i + 1) * m];
            self.field.eval(xi, out);
            for (a, o) in out.iter_mut().enumerate() {
                let ha = h.row(a);
                let mut c = 0.0;
                for &j in self.graph.neighbors(i) {
                    let xj = &x[j * m..(j + 1) * m];
                    for b in 0..m {
                        c += ha[b] * (xj[b] - xi[b]);
                    }
                }
                *o += self.alpha * c;
            }
            for &k in &self.by_vertex[i] {
                let p = &self.perturbations[k];
                let factor = p.modulation.factor(t);
                let xj = &x[p.j * m..(p.j + 1) * m];
                for (a, o) in out.iter_mut().enumerate() {
                    let va = p.base.row(a);
                    let mut c = 0.0;
                    for b in 0..m {
                        c += va[b] * (xj[b] - xi[b]);
                    }
                    *o += factor * c;
                }
            }
        }
    }
}

/// Reusable stage buffers for classical RK4.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step(&mut self, sys: &(impl OdeSystem + ?Sized), t: f64, dt: f64, x: &mut [f64]) {
        let half = 0.5 * dt;
        sys.rhs_into(t, x, &mut self.k1);
        for ((tmp, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *tmp = xi + half * k;
        }
        sys.rhs_into(t + half, &self.tmp, &mut self.k2);
        for ((tmp, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *tmp = xi + half * k;
        }
        sys.rhs_into(t + half, &self.tmp, &mut self.k3);
        for ((tmp, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *tmp = xi + dt * k;
        }
        sys.rhs_into(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn check_bounded(x: &[f64], t: f64) -> Result<()> {
    if x.iter().all(|v| v.abs() <= DIVERGENCE_LIMIT) {
        Ok(())
    } else {
        Err(Error::Diverged { t })
    }
}

/// Integrates `steps` RK4 steps from `x0` at `t0`, calling `observe(k, t_k, x_k)`
/// for `k = 0..=steps`. Returns the final state.
pub fn integrate_with(
    sys: &(impl OdeSystem + ?Sized),
    x0: &[f64],
    t0: f64,
    dt: f64,
    steps: usize,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<Vec<f64>> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: x0.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    let mut x = x0.to_vec();
    check_bounded(&x, t0)?;
    let mut rk = Rk4::new(x.len());
    observe(0, t0, &x);
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * dt;
        rk.step(sys, t, dt, &mut x);
        let t_next = t0 + k as f64 * dt;
        check_bounded(&x, t_next)?;
        observe(k, t_next, &x);
    }
    Ok(x)
}

/// Saved states on a uniform grid `t_k = t0 + k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    /// Spacing between saved states.
    pub dt: f64,
    /// Vertices per state.
    pub n: usize,
    /// Oscillator dimension.
    pub m: usize,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Block of vertex `v` at saved step `k`.
    pub fn vertex(&self, k: usize, v: usize) -> &[f64] {
        &self.states[k][v * self.m..(v + 1) * self.m]
    }

    /// CSV with header `t,v0_x0,…,v{n−1}_x{m−1}`, one row per saved state.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for v in 0..self.n {
            for c in 0..self.m {
                header.push(format!("v{v}_x{c}"));
            }
        }
        out.write_record(&header)?;
        for (k, s) in self.states.iter().enumerate() {
            let mut row = vec![self.time(k).to_string()];
            row.extend(s.iter().map(f64::to_string));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// RK4 trajectory keeping every state.
pub fn rk4_integrate(sys: &NetworkSystem, x0: &[f64], dt: f64, steps: usize) -> Result<Trajectory> {
    rk4_integrate_strided(sys, x0, 0.0, dt, steps, 1)
}

/// RK4 trajectory keeping every `stride`-th state (the initial state is always kept).
pub fn rk4_integrate_strided(
    sys: &NetworkSystem,
    x0: &[f64],
    t0: f64,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    if steps == 0 || stride == 0 {
        return Err(Error::InvalidParams("steps and stride must be >= 1".into()));
    }
    let mut states = Vec::with_capacity(steps / stride + 1);
    integrate_with(sys, x0, t0, dt, steps, |k, _, x| {
        if k % stride == 0 {
            states.push(x.to_vec());
        }
    })?;
    Ok(Trajectory {
        t0,
        dt: dt * stride as f64,
        n: sys.n(),
        m: sys.m(),
        states,
    })
}

/// `n` copies of `s` stacked.
pub fn synchronized_state(n: usize, s: &[f64]) -> Vec<f64> {
    s.iter().copied().cycle().take(n * s.len()).collect()
}

/// Vertex `k` starts at `base + k·spread·u` with `u = (−1, 1, 0, …)/√2`,
/// so consecutive vertices are `spread` apart in the Euclidean norm.
pub fn spread_initial_condition(n: usize, base: &[f64], spread: f64) -> Vec<f64> {
    let m = base.len();
    let mut dir = vec![0.0; m];
    if m == 1 {
        dir[0] = 1.0;
    } else {
        dir[0] = -std::f64::consts::FRAC_1_SQRT_2;
        dir[1] = std::f64::consts::FRAC_1_SQRT_2;
    }
    (0..n)
        .flat_map(|k| {
            let dir = &dir;
            base.iter()
                .zip(dir)
                .map(move |(b, d)| b + k as f64 * spread * d)
        })
        .collect()
}

/// Splits `x` into its component on the synchronization manifold (the
/// vertex average replicated) and the transversal remainder.
pub fn project_modes(g: &Graph, m: usize, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.n();
    if m == 0 || x.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            found: x.len(),
        });
    }
    let mut mean = vec![0.0; m];
    for block in x.chunks(m) {
        for (s, v) in mean.iter_mut().zip(block) {
            *s += v;
        }
    }
    for s in &mut mean {
        *s /= n as f64;
    }
    let normal = synchronized_state(n, &mean);
    let transversal = x.iter().zip(&normal).map(|(a, b)| a - b).collect();
    Ok((normal, transversal))
}

fn check_len(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// `(Df(x₂) − 2αH) z`: the linearised dynamics of `z = x₁ − x₂` for two
/// coupled oscillators.
pub fn variational_two(
    field: &dyn VectorField,
    h: &CouplingMatrix,
    alpha: f64,
    x2: &[f64],
    z: &[f64],
) -> Result<Vec<f64>> {
    let m = field.dim();
    if h.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: h.dim(),
        });
    }
    check_len(m, x2)?;
    check_len(m, z)?;
    let a = field.jacobian(x2).sub(&h.matrix().scale(2.0 * alpha))?;
    a.mul_vec(z)
}

/// `(PᵀDf(s)P − αλⱼD) y`: one decoupled transversal mode.
pub fn mode_rhs(
    field: &dyn VectorField,
    h: &CouplingMatrix,
    alpha: f64,
    lambda_j: f64,
    s: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    mode_matrix(field, h, alpha, lambda_j, s)?.mul_vec(y)
}

/// The mode matrix `PᵀDf(s)P − αλⱼD`.
pub fn mode_matrix(
    field: &dyn VectorField,
    h: &CouplingMatrix,
    alpha: f64,
    lambda_j: f64,
    s: &[f64],
) -> Result<Matrix> {
    if !(lambda_j >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "lambda_j must be >= 0, got {lambda_j}"
        )));
    }
    let m = field.dim();
    if h.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: h.dim(),
        });
    }
    check_len(m, s)?;
    let p = h.eigenvectors();
    let a = p.transpose().matmul(&field.jacobian(s))?.matmul(p)?;
    a.sub(&Matrix::diag(h.eigenvalues()).scale(alpha * lambda_j))
}
