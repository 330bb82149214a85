//! Critical coupling and persistence computations.
//!
//! * [`alpha_c_general`]: `α_c = β/(λ₂μ₁)` for any connected graph.
//! * [`alpha_c_two_dd`], [`alpha_c_two_sym`], [`alpha_c_two_minors`]: the
//!   three two-oscillator Lorenz criteria (diagonal dominance, negative
//!   definite symmetric part by eigenvalues, and by leading minors).
//! * [`persistence_bound`]: the largest summed edge perturbation under
//!   which the synchronization manifold survives.
//! * [`contraction_rate_estimate`]: empirical decay rate of the slowest
//!   transversal mode.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    beta_closed_form, beta_inf, lorenz_field, state_bounds, CouplingMatrix, LorenzParams,
    VectorField,
};
use crate::error::{Error, Result};
use crate::graphs::{laplacian, spectrum, Graph, ZERO_EIGENVALUE_TOL};
use crate::matcore::{inf_norm, jacobi_eig, principal_minor_dets, symmetric_part, Matrix};
use crate::netsim::{mode_matrix, NetworkSystem, OdeSystem, Rk4, DIVERGENCE_LIMIT};

/// (y, z) grid points per axis for the two-oscillator criteria.
pub const DEFAULT_CRITERION_GRID: usize = 101;

/// Smallest grid accepted by [`alpha_c_two_sym`].
pub const MIN_CRITERION_GRID: usize = 50;

/// Bisection tolerance on α.
pub const ALPHA_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub beta: f64,
    pub lambda2: f64,
    pub mu1: f64,
    #[serde(rename = "alpha_c")]
    pub alpha_critical: f64,
}

impl CouplingReport {
    pub fn new(beta: f64, lambda2: f64, mu1: f64) -> Result<Self> {
        if !(lambda2 > ZERO_EIGENVALUE_TOL) {
            return Err(Error::Disconnected);
        }
        if !(mu1 > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: mu1,
            });
        }
        Ok(Self {
            beta,
            lambda2,
            mu1,
            alpha_critical: beta / (lambda2 * mu1),
        })
    }

    /// Contraction margin `η(α) = αλ₂μ₁ − β`.
    pub fn eta(&self, alpha: f64) -> f64 {
        alpha * self.lambda2 * self.mu1 - self.beta
    }

    /// `η(α)/(λ₂μ₁) = α − α_c`, the margin of a single transversal mode.
    pub fn eta_per_mode(&self, alpha: f64) -> f64 {
        alpha - self.alpha_critical
    }

    pub fn to_json(&self, alpha: Option<f64>) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("plain struct");
        if let Some(alpha) = alpha {
            v["alpha"] = alpha.into();
            v["eta"] = self.eta(alpha).into();
        }
        v
    }
}

/// α_c for Lorenz oscillators on `g` with coupling `h`.
pub fn alpha_c_general(
    g: &Graph,
    params: LorenzParams,
    h: &CouplingMatrix,
) -> Result<CouplingReport> {
    if h.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: h.dim(),
        });
    }
    if g.n() < 2 {
        return Err(Error::TooSmall {
            what: "critical coupling",
            n: g.n(),
            min: 2,
        });
    }
    let lambda2 = spectrum(g)?.eigenvalues[1];
    CouplingReport::new(beta_inf(params, h), lambda2, h.mu1())
}

/// `β/2` with the closed-form β for H = I.
pub fn alpha_c_two_dd(params: LorenzParams) -> f64 {
    beta_closed_form(params) / 2.0
}

/// `sup ‖Df‖_∞ / 2`, sampled on a `grid`-per-axis lattice over `ranges`.
/// Works for any field; a field with vanishing Jacobian gives 0.
pub fn alpha_c_two_dd_sampled(
    field: &dyn VectorField,
    ranges: &[(f64, f64)],
    grid: usize,
) -> Result<f64> {
    if ranges.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: ranges.len(),
        });
    }
    let grid = grid.max(2);
    let total = grid.pow(ranges.len() as u32);
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; ranges.len()];
    for mut idx in 0..total {
        for (c, &(lo, hi)) in ranges.iter().enumerate() {
            x[c] = lo + (hi - lo) * (idx % grid) as f64 / (grid - 1) as f64;
            idx /= grid;
        }
        best = best.max(inf_norm(&field.jacobian(&x)));
    }
    Ok(best / 2.0)
}

fn yz_grid(params: LorenzParams, grid: usize) -> Vec<(f64, f64)> {
    let w = state_bounds(params).ymax;
    let zc = 2.0 * params.r();
    let axis = |k: usize| -w + 2.0 * w * k as f64 / (grid - 1) as f64;
    (0..grid)
        .flat_map(|iy| (0..grid).map(move |iz| (axis(iy), zc + axis(iz))))
        .collect()
}

/// Whether `sym(Df(x)) − 2αI` has only negative eigenvalues at every grid
/// point `(y, z)` with `|y| ≤ rb/√(σ(b−1))`, `|z − 2r| ≤ rb/√(σ(b−1))`.
/// The symmetric part does not depend on `x`.
pub fn symmetric_certificate(params: LorenzParams, alpha: f64, grid: usize) -> Result<bool> {
    let field = lorenz_field(params);
    let shift = Matrix::identity(3).scale(2.0 * alpha);
    let points = yz_grid(params, grid.max(2));
    points
        .par_iter()
        .map(|&(y, z)| {
            let m = symmetric_part(&field.jacobian(&[0.0, y, z]))?.sub(&shift)?;
            Ok(jacobi_eig(&m)?.eigenvalues.iter().all(|&l| l < 0.0))
        })
        .try_reduce(|| true, |a, b| Ok(a && b))
}

/// Smallest α (to [`ALPHA_TOL`]) for which [`symmetric_certificate`] holds.
pub fn alpha_c_two_sym(params: LorenzParams, grid: usize) -> Result<f64> {
    if grid < MIN_CRITERION_GRID {
        return Err(Error::InvalidParams(format!(
            "criterion grid needs >= {MIN_CRITERION_GRID} points per axis, got {grid}"
        )));
    }
    bisect_threshold(|alpha| symmetric_certificate(params, alpha, grid))
}

/// Smallest α ≥ 0 (to [`ALPHA_TOL`]) at which a monotone certificate holds.
fn bisect_threshold(holds: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    if holds(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while !holds(hi)? {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > 60 {
            return Err(Error::NoConvergence { iterations });
        }
    }
    while hi - lo > ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The leading principal minors of `sym(Df) − 2αI` as polynomials in α.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinorsReport {
    /// `D₁ < 0` holds for `α > −σ/2`, which never binds for α ≥ 0.
    pub p1_bound: f64,
    /// Largest root of `D₂(α)` at the extremal `z`.
    pub p2_root: f64,
    /// Largest real root of `D₃(α)` over the `(y, z)` grid.
    pub p3_root: f64,
    /// Whether that maximum sits at the corner `y = −w`, `z = 2r + w`.
    pub p3_max_at_corner: bool,
    #[serde(rename = "alpha_c")]
    pub alpha_critical: f64,
}

/// Larger root of `D₂(α) = 4α² + 2(σ+1)α + σ − (r+σ−z)²/4`.
pub fn p2_largest_root(params: LorenzParams, z: f64) -> f64 {
    let (sigma, r) = (params.sigma(), params.r());
    let c2 = (r + sigma - z).powi(2);
    (-2.0 * (sigma + 1.0) + 2.0 * ((sigma + 1.0).powi(2) - 4.0 * sigma + c2).sqrt()) / 8.0
}

/// Coefficients `[a₃, a₂, a₁, a₀]` of `D₃(α) = det(sym(Df) − 2αI)`.
pub fn p3_coefficients(params: LorenzParams, y: f64, z: f64) -> [f64; 4] {
    let (sigma, r, b) = (params.sigma(), params.r(), params.b());
    let c2 = (r + sigma - z).powi(2);
    [
        -8.0,
        -4.0 * b - 4.0 * (sigma + 1.0),
        -2.0 * sigma - 2.0 * b * (sigma + 1.0) + c2 / 2.0 + y * y / 2.0,
        -sigma * b + b / 4.0 * c2 + y * y / 4.0,
    ]
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

/// Real roots of `a x³ + b x² + c x + d` (`a ≠ 0`), ascending, each polished
/// with a few Newton steps.
pub fn real_cubic_roots(coeffs: [f64; 4]) -> Vec<f64> {
    let [a, b, c, d] = coeffs;
    let (p, q, r) = (b / a, c / a, d / a);
    // x = t − p/3 gives t³ + e t + f = 0
    let e = q - p * p / 3.0;
    let f = 2.0 * p.powi(3) / 27.0 - p * q / 3.0 + r;
    let shift = -p / 3.0;
    let disc = -(4.0 * e.powi(3) + 27.0 * f * f);
    let mut roots: Vec<f64> = if e.abs() < 1e-300 {
        vec![(-f).cbrt() + shift]
    } else if disc > 0.0 {
        let amp = 2.0 * (-e / 3.0).sqrt();
        let arg = ((3.0 * f) / (2.0 * e) * (-3.0 / e).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| amp * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect()
    } else {
        let s = (f * f / 4.0 + e.powi(3) / 27.0).max(0.0).sqrt();
        vec![(-f / 2.0 + s).cbrt() + (-f / 2.0 - s).cbrt() + shift]
    };
    let deriv = [3.0 * a, 2.0 * b, c];
    for x in &mut roots {
        for _ in 0..3 {
            let dp = poly_eval(&deriv, *x);
            if dp == 0.0 {
                break;
            }
            *x -= poly_eval(&coeffs, *x) / dp;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// The leading-minor criterion for two Lorenz oscillators with H = I.
pub fn alpha_c_two_minors(params: LorenzParams, grid: usize) -> Result<MinorsReport> {
    let grid = grid.max(2);
    let w = state_bounds(params).ymax;
    let z_top = 2.0 * params.r() + w;
    let p2_root = p2_largest_root(params, z_top);

    let largest = |y: f64, z: f64| {
        real_cubic_roots(p3_coefficients(params, y, z))
            .into_iter()
            .filter(|&a| a > 0.0)
            .fold(None, |acc: Option<f64>, a| {
                Some(acc.map_or(a, |m| m.max(a)))
            })
    };
    let p3_root = yz_grid(params, grid)
        .par_iter()
        .filter_map(|&(y, z)| largest(y, z))
        .reduce_with(f64::max)
        .ok_or(Error::NoRealRoot)?;
    let corner = largest(-w, z_top).ok_or(Error::NoRealRoot)?;
    let p1_bound = -params.sigma() / 2.0;

    Ok(MinorsReport {
        p1_bound,
        p2_root,
        p3_root,
        p3_max_at_corner: (p3_root - corner).abs() <= 1e-9 * corner.abs().max(1.0),
        alpha_critical: p2_root.max(p3_root).max(0.0),
    })
}

/// Leading minors of `sym(Df(0, y, z)) − 2αI`, for cross-checking the
/// polynomial forms.
pub fn minors_at(params: LorenzParams, alpha: f64, y: f64, z: f64) -> Result<Vec<f64>> {
    let m = symmetric_part(&lorenz_field(params).jacobian(&[0.0, y, z]))?
        .sub(&Matrix::identity(3).scale(2.0 * alpha))?;
    principal_minor_dets(&m)
}

/// Which margin the persistence bound uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaConvention {
    /// `η = αλ₂μ₁ − β`.
    General,
    /// `η = α − α_c`, normalised per transversal mode.
    #[default]
    PerMode,
}

impl std::str::FromStr for EtaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Self::General),
            "per-mode" | "per_mode" => Ok(Self::PerMode),
            other => Err(Error::Parse(format!("unknown eta convention {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PersistenceReport {
    pub alpha: f64,
    pub eta: f64,
    pub convention: EtaConvention,
    #[serde(rename = "l_inf_norm")]
    pub l_inf_norm: f64,
    pub kappa: f64,
    pub bound: f64,
    #[serde(rename = "measured_perturbation")]
    pub measured_perturbation: f64,
    pub persistent: bool,
}

impl PersistenceReport {
    /// Largest `|ξ|` for a perturbation `ξ·shape` with `sup_t ‖shape(t)‖_∞ = shape_norm`.
    pub fn xi_bound(&self, shape_norm: f64) -> f64 {
        self.bound / shape_norm
    }
}

/// Persistence test with κ = 1 (the ∞-norm case).
pub fn persistence_bound(
    report: &CouplingReport,
    alpha: f64,
    g: &Graph,
    perturbations: &[crate::netsim::Perturbation],
    convention: EtaConvention,
) -> Result<PersistenceReport> {
    persistence_bound_with_kappa(report, alpha, g, perturbations, convention, 1.0)
}

/// `bound = η/(2κ‖L‖_∞)`; persistent iff `Σ sup_t ‖V_ij(t)‖_∞ < bound`.
pub fn persistence_bound_with_kappa(
    report: &CouplingReport,
    alpha: f64,
    g: &Graph,
    perturbations: &[crate::netsim::Perturbation],
    convention: EtaConvention,
    kappa: f64,
) -> Result<PersistenceReport> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidParams(format!(
            "kappa must be >= 1, got {kappa}"
        )));
    }
    let eta = match convention {
        EtaConvention::General => report.eta(alpha),
        EtaConvention::PerMode => report.eta_per_mode(alpha),
    };
    if !(eta > 0.0) {
        return Err(Error::SubcriticalAlpha { eta });
    }
    let l_inf_norm = inf_norm(&laplacian(g));
    let bound = eta / (2.0 * kappa * l_inf_norm);
    let measured_perturbation: f64 = perturbations.iter().map(|p| p.sup_inf_norm()).sum();
    Ok(PersistenceReport {
        alpha,
        eta,
        convention,
        l_inf_norm,
        kappa,
        bound,
        measured_perturbation,
        persistent: measured_perturbation < bound,
    })
}

/// `γ = η − δ₀k`; positive means the contraction survives the perturbation.
pub fn coppel_margin(eta: f64, k: f64, delta0: f64) -> f64 {
    eta - delta0 * k
}

/// Growth exponent `η + 3Mkδ + k·ln(1+δ)/h` after an integrally small
/// perturbation (η < 0 is the unperturbed decay exponent). Negative means
/// stability is preserved.
pub fn integral_perturbation_margin(eta: f64, k: f64, m: f64, delta: f64, h: f64) -> f64 {
    eta + 3.0 * m * k * delta + k * (1.0 + delta).ln() / h
}

/// Bound on `‖∫_{t₁}^{t₂} ξ cos(ωs)·shape ds‖_∞` over windows `|t₂ − t₁| ≤ h`.
pub fn cosine_integral_bound(xi: f64, shape_norm: f64, omega: f64, h: f64) -> f64 {
    let window = if omega > 0.0 { h.min(2.0 / omega) } else { h };
    xi.abs() * shape_norm * window
}

/// Joint state `(s, y)`: a reference orbit `ṡ = f(s)` and one mode
/// `ẏ = (PᵀDf(s)P − αλD) y`.
struct ModeFlow<'a> {
    field: &'a dyn VectorField,
    h: &'a CouplingMatrix,
    alpha: f64,
    lambda: f64,
}

impl OdeSystem for ModeFlow<'_> {
    fn dim(&self) -> usize {
        2 * self.field.dim()
    }

    fn rhs_into(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let m = self.field.dim();
        let (s, y) = x.split_at(m);
        let (ds, dy) = dx.split_at_mut(m);
        self.field.eval(s, ds);
        let a = mode_matrix(self.field, self.h, self.alpha, self.lambda, s).expect("dims checked");
        a.mul_vec_into(y, dy);
    }
}

/// Least-squares slopes of `log‖y(t)‖` for each unit starting vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionEstimate {
    pub lambda2: f64,
    pub slopes: Vec<f64>,
    /// The largest slope: the slowest contraction observed.
    pub rate: f64,
}

/// Integrates the λ₂ mode along the reference orbit from `s0`, renormalising
/// `y` every step, and fits `log‖y‖` against `t`.
pub fn contraction_rate_estimate(
    sys: &NetworkSystem,
    s0: &[f64],
    tmax: f64,
    dt: f64,
) -> Result<ContractionEstimate> {
    let m = sys.m();
    if s0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: s0.len(),
        });
    }
    if !(dt > 0.0 && tmax > dt) {
        return Err(Error::InvalidParams("need 0 < dt < tmax".into()));
    }
    let lambda2 = spectrum(sys.graph())?.eigenvalues[1];
    let flow = ModeFlow {
        field: sys.field(),
        h: sys.coupling(),
        alpha: sys.alpha(),
        lambda: lambda2,
    };
    let steps = (tmax / dt).round() as usize;
    let mut slopes = Vec::with_capacity(m);
    for unit in 0..m {
        let mut x = vec![0.0; 2 * m];
        x[..m].copy_from_slice(s0);
        x[m + unit] = 1.0;
        let mut rk = Rk4::new(2 * m);
        let mut log_norm = 0.0;
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push((0.0, 0.0));
        for k in 1..=steps {
            rk.step(&flow, (k - 1) as f64 * dt, dt, &mut x);
            let t = k as f64 * dt;
            if x[..m].iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
                return Err(Error::Diverged { t });
            }
            let norm = x[m..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Diverged { t });
            }
            log_norm += norm.ln();
            for v in &mut x[m..] {
                *v /= norm;
            }
            samples.push((t, log_norm));
        }
        slopes.push(least_squares_slope(&samples));
    }
    let rate = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionEstimate {
        lambda2,
        slopes,
        rate,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, y) in points {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    num / den
}
