//! The isolated oscillator and the bound β on its transformed Jacobian over
//! the absorbing ellipsoid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{inf_norm, jacobi_eig, Matrix, SpectralDecomp};

/// Default grid points per axis when β is sampled.
pub const DEFAULT_BETA_GRID: usize = 41;

/// An autonomous vector field `ẋ = f(x)` on ℝᵐ with its Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `dx`. Both slices have length [`dim`](Self::dim).
    fn eval(&self, x: &[f64], dx: &mut [f64]);

    fn jacobian(&self, x: &[f64]) -> Matrix;

    fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.dim()];
        self.eval(x, &mut dx);
        dx
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorenzParams {
    sigma: f64,
    r: f64,
    b: f64,
}

impl LorenzParams {
    pub fn new(sigma: f64, r: f64, b: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma must be > 0, got {sigma}"
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParams(format!("r must be > 0, got {r}")));
        }
        if !(b.is_finite() && b > 1.0) {
            return Err(Error::InvalidParams(format!("b must be > 1, got {b}")));
        }
        Ok(Self { sigma, r, b })
    }

    /// σ = 10, r = 28, b = 8/3.
    pub fn classic() -> Self {
        Self {
            sigma: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self::classic()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Lorenz {
    pub params: LorenzParams,
}

pub fn lorenz_field(params: LorenzParams) -> Lorenz {
    Lorenz { params }
}

impl VectorField for Lorenz {
    fn dim(&self) -> usize {
        3
    }

    #[inline]
    fn eval(&self, s: &[f64], ds: &mut [f64]) {
        let LorenzParams { sigma, r, b } = self.params;
        let (x, y, z) = (s[0], s[1], s[2]);
        ds[0] = sigma * (y - x);
        ds[1] = x * (r - z) - y;
        ds[2] = -b * z + x * y;
    }

    fn jacobian(&self, s: &[f64]) -> Matrix {
        let LorenzParams { sigma, r, b } = self.params;
        let (x, y, z) = (s[0], s[1], s[2]);
        Matrix::from_rows(&[[-sigma, sigma, 0.0], [r - z, -1.0, -x], [y, x, -b]])
            .expect("Lorenz Jacobian is finite for finite states")
    }
}

/// `ẋ = A x`.
#[derive(Clone, Debug)]
pub struct LinearField {
    pub a: Matrix,
}

impl LinearField {
    pub fn new(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        Ok(Self { a })
    }

    /// The zero field on ℝᵐ.
    pub fn zero(m: usize) -> Self {
        Self {
            a: Matrix::zeros(m, m),
        }
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        self.a.mul_vec_into(x, dx);
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        self.a.clone()
    }
}

/// Sublevel set `{x : ⟨x−a, Q(x−a)⟩ ≤ 2ρ}` of `V(x) = ½⟨x−a, Q(x−a)⟩`.
#[derive(Clone, Debug)]
pub struct AbsorbingSet {
    pub center: Vec<f64>,
    /// Positive diagonal of Q.
    pub q: Vec<f64>,
    pub level: f64,
}

impl AbsorbingSet {
    pub fn new(center: Vec<f64>, q: Vec<f64>, level: f64) -> Result<Self> {
        if center.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: q.len(),
            });
        }
        if q.iter().any(|&v| !(v > 0.0)) || !(level > 0.0) {
            return Err(Error::InvalidParams(
                "absorbing set needs positive Q diagonal and level".into(),
            ));
        }
        Ok(Self { center, q, level })
    }

    pub fn q_matrix(&self) -> Matrix {
        Matrix::diag(&self.q)
    }

    /// V(x).
    pub fn lyapunov(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.center)
            .zip(&self.q)
            .map(|((xi, ai), qi)| qi * (xi - ai) * (xi - ai))
            .sum::<f64>()
    }

    /// ∇V(x) = Q(x − a).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .zip(&self.q)
            .map(|((xi, ai), qi)| qi * (xi - ai))
            .collect()
    }

    /// `V̇ = ⟨∇V, f⟩` along `field`.
    pub fn lyapunov_derivative(&self, field: &dyn VectorField, x: &[f64]) -> f64 {
        let f = field.eval_vec(x);
        self.gradient(x).iter().zip(&f).map(|(g, v)| g * v).sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lyapunov(x) <= self.level
    }
}

/// Ω for Lorenz: center (0, 0, 2r), Q = diag(r, σ, σ), level b²r²/(2(b−1)).
pub fn lorenz_absorbing_set(params: LorenzParams) -> AbsorbingSet {
    let LorenzParams { sigma, r, b } = params;
    AbsorbingSet {
        center: vec![0.0, 0.0, 2.0 * r],
        q: vec![r, sigma, sigma],
        level: b * b * r * r / (2.0 * (b - 1.0)),
    }
}

/// Same ellipsoid family as [`lorenz_absorbing_set`] but with level
/// σb²r²/(2(b−1)), the smallest one enclosing the region where `V̇ ≥ 0`.
/// The stated level lacks the factor σ and does not enclose it.
pub fn lorenz_enclosing_set(params: LorenzParams) -> AbsorbingSet {
    let mut set = lorenz_absorbing_set(params);
    set.level *= params.sigma;
    set
}

/// Half-widths of the axis-aligned box around Ω: `|x| ≤ xmax`,
/// `|y| ≤ ymax`, `|z − 2r| ≤ zdev`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateBounds {
    pub xmax: f64,
    pub ymax: f64,
    pub zdev: f64,
}

impl StateBounds {
    /// `(lo, hi)` per axis, for the box scaled by `factor` about its center.
    pub fn ranges(&self, params: LorenzParams, factor: f64) -> [(f64, f64); 3] {
        let zc = 2.0 * params.r;
        [
            (-factor * self.xmax, factor * self.xmax),
            (-factor * self.ymax, factor * self.ymax),
            (zc - factor * self.zdev, zc + factor * self.zdev),
        ]
    }
}

pub fn state_bounds(params: LorenzParams) -> StateBounds {
    let LorenzParams { sigma, r, b } = params;
    let xmax = b * r.sqrt() / (b - 1.0).sqrt();
    let yz = r * b / (sigma * (b - 1.0)).sqrt();
    StateBounds {
        xmax,
        ymax: yz,
        zdev: yz,
    }
}

/// Branches of the closed-form bound on `sup ‖Df‖_∞` over Ω for the Lorenz
/// field: `[2σ, ymax + r + 1 + xmax, xmax + ymax + b]`.
pub fn beta_branches(params: LorenzParams) -> [f64; 3] {
    let StateBounds { xmax, ymax, .. } = state_bounds(params);
    let LorenzParams { sigma, r, b } = params;
    [2.0 * sigma, ymax + r + 1.0 + xmax, xmax + ymax + b]
}

/// Closed-form β for H = I.
pub fn beta_closed_form(params: LorenzParams) -> f64 {
    beta_branches(params)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// β = sup ‖PᵀDf(x)P‖_∞ over Ω: closed form when H is the identity,
/// otherwise sampled on the default grid.
pub fn beta_inf(params: LorenzParams, h: &CouplingMatrix) -> f64 {
    if h.is_identity() {
        beta_closed_form(params)
    } else {
        beta_sampled(params, h, DEFAULT_BETA_GRID)
    }
}

/// Max of ‖PᵀDf(x)P‖_∞ over a `grid³` lattice spanning Ω's bounding box.
pub fn beta_sampled(params: LorenzParams, h: &CouplingMatrix, grid: usize) -> f64 {
    let grid = grid.max(2);
    let field = lorenz_field(params);
    let [xr, yr, zr] = state_bounds(params).ranges(params, 1.0);
    let p = h.eigenvectors();
    let pt = p.transpose();
    let axis = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (grid - 1) as f64;
    (0..grid)
        .into_par_iter()
        .map(|ix| {
            let x = axis(xr, ix);
            let mut best = f64::NEG_INFINITY;
            for iy in 0..grid {
                let y = axis(yr, iy);
                for iz in 0..grid {
                    let z = axis(zr, iz);
                    let df = field.jacobian(&[x, y, z]);
                    let a = pt
                        .matmul(&df)
                        .and_then(|m| m.matmul(p))
                        .expect("3x3 products");
                    best = best.max(inf_norm(&a));
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Symmetric positive-definite coupling matrix H = P D Pᵀ.
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    h: Matrix,
    decomp: SpectralDecomp,
}

impl CouplingMatrix {
    pub fn new(h: Matrix) -> Result<Self> {
        let decomp = jacobi_eig(&h)?;
        let mu1 = decomp.eigenvalues[0];
        if !(mu1 > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: mu1,
            });
        }
        Ok(Self { h, decomp })
    }

    pub fn identity(m: usize) -> Self {
        Self::new(Matrix::identity(m)).expect("identity is positive-definite")
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.h
    }

    pub fn decomp(&self) -> &SpectralDecomp {
        &self.decomp
    }

    /// Smallest eigenvalue μ₁.
    pub fn mu1(&self) -> f64 {
        self.decomp.eigenvalues[0]
    }

    /// P.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.decomp.eigenvectors
    }

    /// Eigenvalues μ₁ ≤ … ≤ μₘ (the diagonal of D).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.decomp.eigenvalues
    }

    pub fn is_identity(&self) -> bool {
        self.h == Matrix::identity(self.dim())
    }
}

/// Fraction of states, drawn uniformly from twice Ω's bounding box and
/// lying outside Ω, where `V̇ ≥ 0`. `samples` counts only states outside Ω.
pub fn lyapunov_decrease_check(params: LorenzParams, samples: usize, seed: u64) -> f64 {
    let ranges = state_bounds(params).ranges(params, 2.0);
    lyapunov_decrease_fraction(
        &lorenz_absorbing_set(params),
        &lorenz_field(params),
        &ranges,
        samples,
        seed,
    )
}

/// [`lyapunov_decrease_check`] for an arbitrary set, field and sampling box.
pub fn lyapunov_decrease_fraction(
    omega: &AbsorbingSet,
    field: &dyn VectorField,
    ranges: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut outside, mut violations) = (0usize, 0usize);
    // a box lying entirely inside Ω would never yield a sample
    let max_draws = samples.saturating_mul(1000).max(1000);
    for _ in 0..max_draws {
        if outside == samples {
            break;
        }
        let x: Vec<f64> = ranges
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..hi))
            .collect();
        if omega.contains(&x) {
            continue;
        }
        outside += 1;
        if omega.lyapunov_derivative(field, &x) >= 0.0 {
            violations += 1;
        }
    }
    violations as f64 / outside.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLASSIC: LorenzParams = LorenzParams {
        sigma: 10.0,
        r: 28.0,
        b: 8.0 / 3.0,
    };

    #[test]
    fn params_validation() {
        assert!(LorenzParams::new(10.0, 28.0, 1.0).is_err());
        assert!(LorenzParams::new(0.0, 28.0, 2.0).is_err());
        assert!(LorenzParams::new(10.0, -1.0, 2.0).is_err());
        assert_eq!(LorenzParams::new(10.0, 28.0, 8.0 / 3.0).unwrap(), CLASSIC);
    }

    #[test]
    fn lorenz_eval_examples() {
        let f = lorenz_field(CLASSIC);
        assert_eq!(f.eval_vec(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        let v = f.eval_vec(&[1.0, 1.0, 1.0]);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 26.0);
        assert!((v[2] - (1.0 - 8.0 / 3.0)).abs() < 1e-15);
        let j = f.jacobian(&[0.0, 0.0, 0.0]);
        assert_eq!(
            j,
            Matrix::from_rows(&[
                [-10.0, 10.0, 0.0],
                [28.0, -1.0, 0.0],
                [0.0, 0.0, -8.0 / 3.0]
            ])
            .unwrap()
        );
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let f = lorenz_field(CLASSIC);
        let [xr, yr, zr] = state_bounds(CLASSIC).ranges(CLASSIC, 1.0);
        let omega = lorenz_absorbing_set(CLASSIC);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        let step = 1e-4;
        while checked < 20 {
            let x = [
                rng.gen_range(xr.0..xr.1),
                rng.gen_range(yr.0..yr.1),
                rng.gen_range(zr.0..zr.1),
            ];
            if !omega.contains(&x) {
                continue;
            }
            checked += 1;
            let j = f.jacobian(&x);
            for col in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[col] += step;
                xm[col] -= step;
                let (fp, fm) = (f.eval_vec(&xp), f.eval_vec(&xm));
                for row in 0..3 {
                    let fd = (fp[row] - fm[row]) / (2.0 * step);
                    assert!((fd - j.get(row, col)).abs() <= 1e-5);
                }
            }
        }
    }

    #[test]
    fn absorbing_set_examples() {
        let omega = lorenz_absorbing_set(CLASSIC);
        assert_eq!(omega.center, vec![0.0, 0.0, 56.0]);
        assert_eq!(omega.q, vec![28.0, 10.0, 10.0]);
        assert!((2.0 * omega.level - 3345.0666666).abs() < 1e-6);
        assert_eq!(omega.lyapunov(&[0.0, 0.0, 56.0]), 0.0);
        assert!(omega.contains(&[0.0, 0.0, 56.0]));
        assert!(!omega.contains(&[100.0, 0.0, 56.0]));
    }

    #[test]
    fn state_bounds_examples() {
        let sb = state_bounds(CLASSIC);
        assert!((sb.xmax - 10.928).abs() < 5e-3);
        assert!((sb.ymax - 18.287).abs() < 5e-3);
        assert_eq!(sb.ymax, sb.zdev);
        let wide = state_bounds(LorenzParams::new(1e12, 28.0, 8.0 / 3.0).unwrap());
        assert!(wide.ymax < 1e-4);
        let sb = state_bounds(LorenzParams::new(1.0, 1.0, 2.0).unwrap());
        assert!((sb.xmax - 2.0).abs() < 1e-15 && (sb.ymax - 2.0).abs() < 1e-15);
    }

    #[test]
    fn beta_examples() {
        let i3 = CouplingMatrix::identity(3);
        let beta = beta_inf(CLASSIC, &i3);
        assert!((beta - 58.22).abs() < 0.01, "{beta}");
        assert_eq!(
            beta,
            beta_branches(CLASSIC).into_iter().fold(f64::MIN, f64::max)
        );
        let sampled = beta_sampled(CLASSIC, &i3, DEFAULT_BETA_GRID);
        assert!(sampled <= beta + 1e-9);
        let p = LorenzParams::new(30.0, 1.0, 2.0).unwrap();
        assert_eq!(beta_inf(p, &i3), 60.0);
    }

    #[test]
    fn beta_sampled_with_rotated_coupling() {
        // a permutation-similar H leaves ‖PᵀDfP‖_∞ bounded by the box maximum
        let h = CouplingMatrix::new(
            Matrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        assert!((h.mu1() - 1.0).abs() < 1e-12);
        let b = beta_inf(CLASSIC, &h);
        assert!(b.is_finite() && b > 0.0);
        // deterministic
        assert_eq!(b, beta_sampled(CLASSIC, &h, DEFAULT_BETA_GRID));
    }

    #[test]
    fn coupling_matrix_validation() {
        assert!(matches!(
            CouplingMatrix::new(Matrix::diag(&[1.0, -1.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            CouplingMatrix::new(Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap()),
            Err(Error::NotSymmetric { .. })
        ));
        let h = CouplingMatrix::identity(3);
        assert!(h.is_identity());
        assert!(h.decomp().reconstruct().max_abs_diff(h.matrix()) < 1e-9);
    }

    #[test]
    fn lyapunov_derivative_closed_form() {
        let omega = lorenz_absorbing_set(CLASSIC);
        let f = lorenz_field(CLASSIC);
        let LorenzParams { sigma, r, b } = CLASSIC;
        let closed = |x: f64, y: f64, z: f64| {
            -sigma * (r * x * x + y * y + b * (z - r) * (z - r) - b * r * r)
        };
        for x in [
            [3.0, -2.0, 40.0],
            [0.0, 0.0, 2.0 * r + 500.0],
            [-7.0, 10.0, 5.0],
        ] {
            let got = omega.lyapunov_derivative(&f, &x);
            let want = closed(x[0], x[1], x[2]);
            assert!((got - want).abs() < 1e-8 * want.abs().max(1.0));
        }
        assert!(omega.lyapunov_derivative(&f, &[0.0, 0.0, 2.0 * r + 500.0]) < 0.0);
        // V̇ > 0 at the centre of the small ellipsoid, which only the
        // σ-scaled level encloses
        let at = [0.0, 0.0, r];
        assert!(omega.lyapunov_derivative(&f, &at) > 0.0);
        assert!(!omega.contains(&at));
        assert!(lorenz_enclosing_set(CLASSIC).contains(&at));
    }

    #[test]
    fn stated_level_misses_part_of_the_growth_region() {
        let frac = lyapunov_decrease_check(CLASSIC, 10_000, 1);
        assert!(frac > 0.05, "{frac}");
    }

    #[test]
    fn enclosing_level_has_no_violations() {
        let set = lorenz_enclosing_set(CLASSIC);
        let ranges = state_bounds(CLASSIC).ranges(CLASSIC, 2.0 * CLASSIC.sigma().sqrt());
        let frac = lyapunov_decrease_fraction(&set, &lorenz_field(CLASSIC), &ranges, 10_000, 1);
        assert_eq!(frac, 0.0);
    }
}
