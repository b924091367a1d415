//! Euclidean action of a Gaussian-basis path.
//!
//! With `q(τ) = Σ qᵢ Gᵢ(τ)`, the oscillator action `∫ ½m q̇² + ½mω² q²`
//! is the quadratic form `½ qᵀAq` with
//!
//! ```text
//! A_ij = m·∫Ġᵢ Ġⱼ + mω²·∫Gᵢ Gⱼ
//! ```
//!
//! Both integrals have closed forms in the center separation. General
//! polynomial potentials go through periodic trapezoid quadrature, which
//! also serves as the independent check on the closed forms.

use crate::basis::{for_each_image, wrap, PathState};
use crate::error::{config, Error, Result};
use crate::linalg;

pub const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// Couplings between bumps further apart than this many widths are dropped.
pub const DEFAULT_BAND_CUT: f64 = 8.0;

/// Minimum quadrature points per width accepted by [`action_quadrature`].
pub const QUADRATURE_POINTS_PER_WIDTH: f64 = 16.0;

/// Window half-width, in widths, of the local action difference.
pub const DELTA_WINDOW: f64 = 8.0;

/// `∫ Gᵢ Gⱼ dτ` over the real line for centers `delta` apart.
pub fn overlap_coeff(delta: f64, width: f64) -> f64 {
    SQRT_HALF_PI * width * (-delta * delta / (2.0 * width * width)).exp()
}

/// `∫ Ġᵢ Ġⱼ dτ` over the real line for centers `delta` apart.
pub fn kinetic_coeff(delta: f64, width: f64) -> f64 {
    let r2 = delta * delta / (width * width);
    SQRT_HALF_PI / width * (1.0 - r2) * (-0.5 * r2).exp()
}

/// Sums `kernel` over every periodic image of the separation `a − b` that
/// lies within `cutoff`.
pub fn periodic_kernel(a: f64, b: f64, period: f64, cutoff: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for_each_image(wrap(a - b, period), period, cutoff, |d| acc += kernel(d));
    acc
}

#[derive(Debug, Clone)]
struct RowSegment {
    start: usize,
    values: Vec<f64>,
}

/// Banded symmetric coefficient matrix of the oscillator action.
///
/// Rows are stored as runs of contiguous nonzero columns so the row products
/// used by the heat-bath vectorize.
#[derive(Debug, Clone)]
pub struct QuadraticAction {
    n: usize,
    rows: Vec<Vec<RowSegment>>,
    diag: Vec<f64>,
    band_width: usize,
    band_cut: f64,
    mass: f64,
    omega: f64,
}

/// Assembles `A` for the given geometry. Every periodic image of a pair
/// separation is included as long as it lies within `band_cut · width`; when
/// `band_cut · width < T/2` that is just the minimal image.
pub fn assemble_quadratic(
    centers: &[f64],
    width: f64,
    period: f64,
    mass: f64,
    omega: f64,
    band_cut: f64,
) -> Result<QuadraticAction> {
    if !(width > 0.0) || !(period > 0.0) {
        return config(format!("width and period must be positive (ξ={width}, T={period})"));
    }
    if !(mass > 0.0) || !(omega >= 0.0) {
        return config(format!("need m > 0 and ω ≥ 0 (m={mass}, ω={omega})"));
    }
    if !(band_cut > 0.0) {
        return config(format!("band cut must be positive, got {band_cut}"));
    }
    let n = centers.len();
    if n == 0 {
        return config("no centers");
    }
    let cutoff = band_cut * width;
    let pot = mass * omega * omega;
    let mut dense = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d0 = wrap(centers[i] - centers[j], period);
            if i != j && d0 == 0.0 {
                return Err(Error::Singular(format!(
                    "centers {i} and {j} coincide at τ = {}",
                    centers[i]
                )));
            }
            let mut v = 0.0;
            for_each_image(d0, period, cutoff, |d| {
                v += mass * kinetic_coeff(d, width) + pot * overlap_coeff(d, width);
            });
            dense[i * n + j] = v;
            dense[j * n + i] = v;
        }
    }
    Ok(QuadraticAction::from_dense(&dense, n, band_cut, mass, omega))
}

impl QuadraticAction {
    pub(crate) fn from_dense(dense: &[f64], n: usize, band_cut: f64, mass: f64, omega: f64) -> Self {
        let mut rows = Vec::with_capacity(n);
        let mut band_width = 0;
        for i in 0..n {
            let mut segs: Vec<RowSegment> = Vec::new();
            for j in 0..n {
                let v = dense[i * n + j];
                if v == 0.0 {
                    continue;
                }
                let dist = i.abs_diff(j).min(n - i.abs_diff(j));
                band_width = band_width.max(dist);
                match segs.last_mut() {
                    Some(s) if s.start + s.values.len() == j => s.values.push(v),
                    _ => segs.push(RowSegment {
                        start: j,
                        values: vec![v],
                    }),
                }
            }
            rows.push(segs);
        }
        let diag = (0..n).map(|i| dense[i * n + i]).collect();
        Self {
            n,
            rows,
            diag,
            band_width,
            band_cut,
            mass,
            omega,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn band_cut(&self) -> f64 {
        self.band_cut
    }

    /// Largest cyclic index distance `|i − j|` with `A_ij ≠ 0`.
    pub fn band_width(&self) -> usize {
        self.band_width
    }

    /// Number of stored nonzero couplings.
    pub fn nonzeros(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|s| s.values.len()))
            .sum()
    }

    pub fn diag(&self, k: usize) -> f64 {
        self.diag[k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|s| (s.start..s.start + s.values.len()).contains(&j))
            .map_or(0.0, |s| s.values[j - s.start])
    }

    pub fn dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for (i, row) in self.rows.iter().enumerate() {
            for s in row {
                out[i * n + s.start..i * n + s.start + s.values.len()].copy_from_slice(&s.values);
            }
        }
        out
    }

    /// `(A q)_k`.
    #[inline]
    pub fn row_dot(&self, k: usize, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for s in &self.rows[k] {
            acc += dot(&s.values, &q[s.start..s.start + s.values.len()]);
        }
        acc
    }

    /// `½ qᵀAq`.
    pub fn action(&self, q: &[f64]) -> f64 {
        assert_eq!(q.len(), self.n);
        0.5 * (0..self.n).map(|k| q[k] * self.row_dot(k, q)).sum::<f64>()
    }

    /// `S(q + dq·e_k) − S(q)`.
    #[inline]
    pub fn delta(&self, q: &[f64], k: usize, dq: f64) -> f64 {
        dq * self.row_dot(k, q) + 0.5 * self.diag[k] * dq * dq
    }

    pub fn is_positive_definite(&self) -> bool {
        linalg::cholesky(&self.dense(), self.n).is_some()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `L = ½ m q̇² + Σₖ cₖ qᵏ` with potential degree at most 4.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    mass: f64,
    potential: [f64; 5],
}

impl LagrangianSpec {
    /// `coeffs[k]` multiplies `q^k`.
    pub fn new(mass: f64, coeffs: &[f64]) -> Result<Self> {
        if !(mass > 0.0) {
            return config(format!("mass must be positive, got {mass}"));
        }
        if coeffs.len() > 5 {
            return config(format!(
                "potential degree {} exceeds the supported maximum of 4",
                coeffs.len() - 1
            ));
        }
        let mut potential = [0.0; 5];
        potential[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self { mass, potential })
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, &[0.0, 0.0, 0.5 * mass * omega * omega])
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn potential(&self) -> &[f64; 5] {
        &self.potential
    }

    /// True when the conditional law of a single amplitude is Gaussian and
    /// centered on the usual heat-bath mean.
    pub fn is_quadratic(&self) -> bool {
        self.potential[1] == 0.0 && self.potential[3] == 0.0 && self.potential[4] == 0.0
    }

    /// `ω` such that the quadratic part reads `½mω²q²`.
    pub fn omega(&self) -> f64 {
        (2.0 * self.potential[2] / self.mass).max(0.0).sqrt()
    }

    #[inline]
    pub fn lagrangian(&self, q: f64, v: f64) -> f64 {
        let c = &self.potential;
        let pot = c[0] + q * (c[1] + q * (c[2] + q * (c[3] + q * c[4])));
        0.5 * self.mass * v * v + pot
    }
}

fn required_points(path: &PathState) -> usize {
    (QUADRATURE_POINTS_PER_WIDTH * path.period() / path.width()).ceil() as usize
}

/// Periodic trapezoid rule for `∫₀ᵀ L(q, q̇) dτ` on `n_points` uniform nodes,
/// using the full periodic image sum of the path.
pub fn action_quadrature(path: &PathState, spec: &LagrangianSpec, n_points: usize) -> Result<f64> {
    let required = required_points(path);
    if n_points < required {
        return Err(Error::InsufficientQuadrature {
            required,
            given: n_points,
        });
    }
    let h = path.period() / n_points as f64;
    let sum: f64 = (0..n_points)
        .map(|j| {
            let tau = j as f64 * h;
            spec.lagrangian(path.eval_periodic(tau), path.velocity_periodic(tau))
        })
        .sum();
    Ok(h * sum)
}

/// Action functional used by the samplers.
pub trait PathAction: Sync {
    fn total(&self, path: &PathState) -> f64;

    /// `S(q + dq·e_site) − S(q)`.
    fn delta(&self, path: &PathState, site: usize, dq: f64) -> f64;

    /// The exact coefficient matrix, when the action is a quadratic form.
    fn as_quadratic(&self) -> Option<&QuadraticAction> {
        None
    }
}

impl PathAction for QuadraticAction {
    fn total(&self, path: &PathState) -> f64 {
        self.action(path.amplitudes())
    }

    fn delta(&self, path: &PathState, site: usize, dq: f64) -> f64 {
        QuadraticAction::delta(self, path.amplitudes(), site, dq)
    }

    fn as_quadratic(&self) -> Option<&QuadraticAction> {
        Some(self)
    }
}

/// General polynomial action on a fixed quadrature grid.
#[derive(Debug, Clone)]
pub struct QuadratureAction {
    spec: LagrangianSpec,
    n_points: usize,
}

impl QuadratureAction {
    pub fn new(spec: LagrangianSpec, n_points: usize) -> Self {
        Self { spec, n_points }
    }

    /// Smallest admissible grid for `path`.
    pub fn for_path(spec: LagrangianSpec, path: &PathState) -> Self {
        Self::new(spec, required_points(path))
    }

    pub fn spec(&self) -> &LagrangianSpec {
        &self.spec
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }
}

impl PathAction for QuadratureAction {
    fn total(&self, path: &PathState) -> f64 {
        action_quadrature(path, &self.spec, self.n_points)
            .expect("quadrature grid validated at construction")
    }

    /// Same nodes as [`action_quadrature`], restricted to those within
    /// `DELTA_WINDOW` widths of the updated center.
    fn delta(&self, path: &PathState, site: usize, dq: f64) -> f64 {
        if dq == 0.0 {
            return 0.0;
        }
        let n = self.n_points;
        let period = path.period();
        let width = path.width();
        let h = period / n as f64;
        let c = path.centers()[site];
        let inv_w2 = 1.0 / (width * width);
        let half = DELTA_WINDOW * width;
        let nodes: Box<dyn Iterator<Item = usize>> = if 2.0 * half >= period {
            Box::new(0..n)
        } else {
            let lo = ((c - half) / h).ceil() as i64;
            let hi = ((c + half) / h).floor() as i64;
            Box::new((lo..=hi).map(move |j| j.rem_euclid(n as i64) as usize))
        };
        let mut acc = 0.0;
        for j in nodes {
            let tau = j as f64 * h;
            let mut g = 0.0;
            let mut dg = 0.0;
            for_each_image(wrap(tau - c, period), period, crate::basis::IMAGE_CUTOFF * width, |d| {
                let e = (-d * d * inv_w2).exp();
                g += e;
                dg += -2.0 * d * inv_w2 * e;
            });
            let q = path.eval_periodic(tau);
            let v = path.velocity_periodic(tau);
            acc += self.spec.lagrangian(q + dq * g, v + dq * dg) - self.spec.lagrangian(q, v);
        }
        h * acc
    }
}
