//! Four-dimensional Euclidean U(1) and SU(2) gauge fields on a periodic box.
//!
//! Each component is a sum of Gaussian bumps,
//! `A^c_μ(x) = Σᵢ a[μ][c][i] · exp(−|x − xᵢ|²/ξ²)`, with the Gaussian summed
//! over all periodic images so the field is smooth across the box boundary.
//! Only the amplitudes are sampled. There is no gauge fixing.

mod chain;
mod grid;
pub mod su2;
mod wilson;

use std::str::FromStr;

use rand::Rng;

use crate::basis::{for_each_image, wrap, IMAGE_CUTOFF};
use crate::error::{config, Error, Result};

pub use chain::{
    advance_gauge_chains, advance_gauge_chains_checkpointed, init_gauge_chains, run_gauge_ensemble,
    GaugeChain, GaugeConfig, GaugeEnsemble, GaugeMeasurements, GAUGE_TUNE_INTERVAL,
};
pub use grid::{average_lagrangian, GaugeGrid};
pub use wilson::{
    compare_potential_fits, loop_links, static_potential, wilson_loop, FitComparison, WilsonLoopSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    U1,
    SU2,
}

impl Group {
    pub fn colors(self) -> usize {
        match self {
            Self::U1 => 1,
            Self::SU2 => 3,
        }
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u1" => Ok(Self::U1),
            "su2" => Ok(Self::SU2),
            _ => config(format!("unknown gauge group `{s}` (u1|su2)")),
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::U1 => "u1",
            Self::SU2 => "su2",
        })
    }
}

/// Index pairs `μ < ν` in the order used for stored field strengths.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Stored pair index of `(μ, ν)` and the sign relating `F_μν` to it.
pub fn pair_index(mu: usize, nu: usize) -> Option<(usize, f64)> {
    if mu == nu {
        return None;
    }
    let (a, b, s) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
    PAIRS.iter().position(|&p| p == (a, b)).map(|k| (k, s))
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Fills `out[pair·colors + a]` from the potential `a_comp[μ·colors + c]`
/// and its gradient `grad(α, μ·colors + c)`.
#[inline]
pub(crate) fn field_from(
    group: Group,
    coupling: f64,
    a_comp: &[f64],
    grad: impl Fn(usize, usize) -> f64,
    out: &mut [f64],
) {
    let nc = group.colors();
    for (p, &(mu, nu)) in PAIRS.iter().enumerate() {
        for c in 0..nc {
            out[p * nc + c] = grad(mu, nu * nc + c) - grad(nu, mu * nc + c);
        }
        if group == Group::SU2 {
            let am = [a_comp[mu * 3], a_comp[mu * 3 + 1], a_comp[mu * 3 + 2]];
            let an = [a_comp[nu * 3], a_comp[nu * 3 + 1], a_comp[nu * 3 + 2]];
            let x = cross(am, an);
            for c in 0..3 {
                out[p * 3 + c] += coupling * x[c];
            }
        }
    }
}

/// `½ Σ_{μ<ν, a} (F^a_μν)²`, which equals `¼ Σ_{μν, a} (F^a_μν)²`.
#[inline]
pub(crate) fn density_from(f: &[f64]) -> f64 {
    0.5 * f.iter().map(|v| v * v).sum::<f64>()
}

/// Field strength at one point, antisymmetric in `(μ, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStrength {
    colors: usize,
    values: Vec<f64>,
}

impl FieldStrength {
    pub fn get(&self, mu: usize, nu: usize, a: usize) -> f64 {
        match pair_index(mu, nu) {
            None => 0.0,
            Some((p, s)) => s * self.values[p * self.colors + a],
        }
    }

    /// Values in [`PAIRS`] order, color fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFieldState {
    group: Group,
    amplitudes: Vec<f64>,
    centers: Vec<[f64; 4]>,
    width: f64,
    size: f64,
    coupling: f64,
}

impl GaugeFieldState {
    /// Zero field on the given centers.
    pub fn new(
        group: Group,
        centers: Vec<[f64; 4]>,
        width: f64,
        size: f64,
        coupling: f64,
    ) -> Result<Self> {
        if !(width > 0.0) || !(size > 0.0) || !coupling.is_finite() {
            return config(format!(
                "need ξ > 0, L > 0 and finite g (ξ={width}, L={size}, g={coupling})"
            ));
        }
        if centers.is_empty() {
            return config("a gauge field needs at least one center");
        }
        if let Some(c) = centers.iter().find(|c| c.iter().any(|&x| !(0.0..size).contains(&x))) {
            return config(format!("center {c:?} outside [0, {size})⁴"));
        }
        let n = 4 * group.colors() * centers.len();
        Ok(Self {
            group,
            amplitudes: vec![0.0; n],
            centers,
            width,
            size,
            coupling,
        })
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn colors(&self) -> usize {
        self.group.colors()
    }

    /// Number of field components `4 · colors`.
    pub fn components(&self) -> usize {
        4 * self.colors()
    }

    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[[f64; 4]] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn volume(&self) -> f64 {
        self.size.powi(4)
    }

    /// Flat index of `a[μ][c][i]`.
    #[inline]
    pub fn index(&self, mu: usize, c: usize, i: usize) -> usize {
        (mu * self.colors() + c) * self.centers.len() + i
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    /// Copy with every center moved by `shift` (mod L).
    pub fn shifted(&self, shift: [f64; 4]) -> Self {
        let mut out = self.clone();
        for c in &mut out.centers {
            for k in 0..4 {
                c[k] = (c[k] + shift[k]).rem_euclid(self.size);
                if c[k] >= self.size {
                    c[k] = 0.0;
                }
            }
        }
        out
    }

    /// Periodized one-axis factor and its derivative at offset `d = x − c`.
    #[inline]
    pub(crate) fn axis_factor(&self, d: f64) -> (f64, f64) {
        let inv_w2 = 1.0 / (self.width * self.width);
        let (mut v, mut dv) = (0.0, 0.0);
        for_each_image(wrap(d, self.size), self.size, IMAGE_CUTOFF * self.width, |e| {
            let g = (-e * e * inv_w2).exp();
            v += g;
            dv += -2.0 * e * inv_w2 * g;
        });
        (v, dv)
    }

    /// `A^c_μ(x)` for every component, indexed `μ·colors + c`.
    pub fn potential(&self, x: [f64; 4]) -> Vec<f64> {
        self.potential_and_gradient(x).0
    }

    /// The `colors` components of `A_μ(x)`.
    pub fn potential_dir(&self, x: [f64; 4], mu: usize) -> Vec<f64> {
        let nc = self.colors();
        let n = self.centers.len();
        let mut out = vec![0.0; nc];
        for (i, c) in self.centers.iter().enumerate() {
            let g: f64 = (0..4).map(|k| self.axis_factor(x[k] - c[k]).0).product();
            if g == 0.0 {
                continue;
            }
            for (col, o) in out.iter_mut().enumerate() {
                *o += self.amplitudes[(mu * nc + col) * n + i] * g;
            }
        }
        out
    }

    /// Potential and analytic gradient; the gradient is indexed
    /// `α·components + μ·colors + c` for `∂_α A^c_μ`.
    pub fn potential_and_gradient(&self, x: [f64; 4]) -> (Vec<f64>, Vec<f64>) {
        let comps = self.components();
        let n = self.centers.len();
        let mut a = vec![0.0; comps];
        let mut da = vec![0.0; 4 * comps];
        for (i, c) in self.centers.iter().enumerate() {
            let f: [(f64, f64); 4] = std::array::from_fn(|k| self.axis_factor(x[k] - c[k]));
            let g = f[0].0 * f[1].0 * f[2].0 * f[3].0;
            let dg: [f64; 4] = std::array::from_fn(|k| {
                (0..4).map(|j| if j == k { f[j].1 } else { f[j].0 }).product()
            });
            for comp in 0..comps {
                let amp = self.amplitudes[comp * n + i];
                if amp == 0.0 {
                    continue;
                }
                a[comp] += amp * g;
                for alpha in 0..4 {
                    da[alpha * comps + comp] += amp * dg[alpha];
                }
            }
        }
        (a, da)
    }

    pub fn field_strength(&self, x: [f64; 4]) -> FieldStrength {
        let (a, da) = self.potential_and_gradient(x);
        let comps = self.components();
        let mut values = vec![0.0; 6 * self.colors()];
        field_from(self.group, self.coupling, &a, |al, c| da[al * comps + c], &mut values);
        FieldStrength {
            colors: self.colors(),
            values,
        }
    }

    /// `L(x) = ¼ Σ_{μν,a} (F^a_μν)²`.
    pub fn lagrangian_density(&self, x: [f64; 4]) -> f64 {
        density_from(&self.field_strength(x).values)
    }
}

/// `n⁴` centers on a uniform lattice `j·L/n` in each direction.
pub fn lattice_centers(n: usize, size: f64) -> Vec<[f64; 4]> {
    let s = size / n as f64;
    let mut out = Vec::with_capacity(n.pow(4));
    for i0 in 0..n {
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    out.push([i0 as f64 * s, i1 as f64 * s, i2 as f64 * s, i3 as f64 * s]);
                }
            }
        }
    }
    out
}

pub fn random_centers<R: Rng + ?Sized>(n: usize, size: f64, rng: &mut R) -> Vec<[f64; 4]> {
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..size)))
        .collect()
}

/// `∫d⁴x GᵢGⱼ = (ξ√(π/2))⁴ · e^{−|Δ|²/2ξ²}` over ℝ⁴.
pub fn overlap_4d(delta: [f64; 4], width: f64) -> f64 {
    let c = (width * crate::action::SQRT_HALF_PI).powi(4);
    let d2: f64 = delta.iter().map(|d| d * d).sum();
    c * (-d2 / (2.0 * width * width)).exp()
}

/// `∫d⁴x ∂_ρGᵢ ∂_σGⱼ` over ℝ⁴ with `Δ = xᵢ − xⱼ`.
pub fn gradient_overlap_4d(delta: [f64; 4], width: f64, rho: usize, sigma: usize) -> f64 {
    let w2 = width * width;
    let kron = if rho == sigma { 1.0 / w2 } else { 0.0 };
    overlap_4d(delta, width) * (kron - delta[rho] * delta[sigma] / (w2 * w2))
}

/// Per-axis image sums `Σₙ e^{−e²/2ξ²}·eᵏ`, `k = 0, 1, 2`, over `e = Δ + nL`.
fn image_moments(d: f64, width: f64, size: f64) -> [f64; 3] {
    let mut m = [0.0; 3];
    for_each_image(wrap(d, size), size, IMAGE_CUTOFF * width, |e| {
        let g = (-e * e / (2.0 * width * width)).exp();
        m[0] += g;
        m[1] += e * g;
        m[2] += e * e * g;
    });
    m
}

/// Dense matrix `M` of the U(1) action `S = ½ aᵀ M a` on the periodic box, in
/// closed form from the 4D gradient overlaps summed over all images.
/// Rows follow [`GaugeFieldState::index`].
pub fn abelian_quadratic_form(state: &GaugeFieldState) -> Result<Vec<f64>> {
    if state.group() != Group::U1 {
        return config("the closed-form quadratic action exists only for U(1)");
    }
    let n = state.n_centers();
    let w = state.width();
    let w2 = w * w;
    let c = (w * crate::action::SQRT_HALF_PI).powi(4);
    let dim = 4 * n;
    let mut m = vec![0.0; dim * dim];
    for i in 0..n {
        for j in 0..n {
            let xi = state.centers()[i];
            let xj = state.centers()[j];
            let mom: [[f64; 3]; 4] = std::array::from_fn(|k| image_moments(xi[k] - xj[k], w, state.size()));
            let prod0 = |skip: &[usize]| -> f64 {
                (0..4).filter(|k| !skip.contains(k)).map(|k| mom[k][0]).product()
            };
            // P_ρσ(i, j) summed over images
            let p = |rho: usize, sigma: usize| -> f64 {
                if rho == sigma {
                    c * (prod0(&[]) / w2 - mom[rho][2] * prod0(&[rho]) / (w2 * w2))
                } else {
                    -c * mom[rho][1] * mom[sigma][1] * prod0(&[rho, sigma]) / (w2 * w2)
                }
            };
            let trace: f64 = (0..4).map(|mu| p(mu, mu)).sum();
            for nu in 0..4 {
                for nu2 in 0..4 {
                    let kron = if nu == nu2 { trace } else { 0.0 };
                    m[(nu * n + i) * dim + nu2 * n + j] = kron - p(nu2, nu);
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_state(group: Group, seed: u64, n: usize, w: f64, l: f64, amp: f64) -> GaugeFieldState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = random_centers(n, l, &mut rng);
        let mut s = GaugeFieldState::new(group, centers, w, l, 1.0).unwrap();
        for a in s.amplitudes_mut() {
            *a = rng.random_range(-amp..amp);
        }
        s
    }

    #[test]
    fn zero_field_is_zero_everywhere() {
        let s = GaugeFieldState::new(Group::SU2, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
        let x = [0.3, 1.7, 0.2, 1.1];
        assert!(s.potential(x).iter().all(|&v| v == 0.0));
        assert!(s.field_strength(x).values().iter().all(|&v| v == 0.0));
        assert_eq!(s.lagrangian_density(x), 0.0);
    }

    #[test]
    fn bump_center_gives_its_amplitude() {
        let mut s = GaugeFieldState::new(Group::U1, vec![[1.0, 1.0, 1.0, 1.0]], 0.5, 8.0, 1.0).unwrap();
        let k = s.index(2, 0, 0);
        s.amplitudes_mut()[k] = 0.7;
        let a = s.potential([1.0; 4]);
        assert_eq!(a, vec![0.0, 0.0, 0.7, 0.0]);
    }

    #[test]
    fn color_dimension_follows_group() {
        let u = GaugeFieldState::new(Group::U1, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
        let s = GaugeFieldState::new(Group::SU2, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
        assert_eq!((u.colors(), u.amplitudes().len()), (1, 64));
        assert_eq!((s.colors(), s.amplitudes().len()), (3, 192));
        assert!("SU2".parse::<Group>().is_ok() && "su3".parse::<Group>().is_err());
    }

    #[test]
    fn axial_bump_has_no_field_at_its_center() {
        // A_x from a single bump: F_xν = −∂_ν A_x vanishes where ∇G does
        let mut s = GaugeFieldState::new(Group::U1, vec![[1.0; 4]], 0.5, 4.0, 1.0).unwrap();
        s.amplitudes_mut()[0] = 1.3;
        assert!(s.lagrangian_density([1.0; 4]).abs() < 1e-30);
        assert!(s.lagrangian_density([1.2, 1.1, 1.0, 0.9]) > 0.0);
    }

    #[test]
    fn field_strength_matches_finite_differences() {
        for (seed, group) in [(1, Group::U1), (2, Group::SU2), (3, Group::SU2)] {
            let s = random_state(group, seed, 12, 0.5, 2.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let nc = s.colors();
            for _ in 0..20 {
                let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..2.0));
                let f = s.field_strength(x);
                let a = s.potential(x);
                let h = 1e-5;
                let deriv = |alpha: usize, comp: usize| {
                    let mut xp = x;
                    let mut xm = x;
                    xp[alpha] += h;
                    xm[alpha] -= h;
                    (s.potential(xp)[comp] - s.potential(xm)[comp]) / (2.0 * h)
                };
                for mu in 0..4 {
                    for nu in 0..4 {
                        for c in 0..nc {
                            let mut fd = deriv(mu, nu * nc + c) - deriv(nu, mu * nc + c);
                            if group == Group::SU2 {
                                let am = [a[mu * 3], a[mu * 3 + 1], a[mu * 3 + 2]];
                                let an = [a[nu * 3], a[nu * 3 + 1], a[nu * 3 + 2]];
                                fd += cross(am, an)[c];
                            }
                            assert!((f.get(mu, nu, c) - fd).abs() < 1e-6, "{group} μ{mu} ν{nu} c{c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lagrangian_is_nonnegative() {
        let s = random_state(Group::SU2, 9, 16, 0.5, 2.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..2.0));
            assert!(s.lagrangian_density(x) >= 0.0);
        }
    }

    #[test]
    fn closed_form_overlaps() {
        assert!((overlap_4d([0.0; 4], 1.0) - (std::f64::consts::PI / 2.0).powi(2)).abs() < 1e-15);
        let d = [0.3, -0.2, 0.1, 0.4];
        // symmetric in ρσ and in exchanging the two centers
        for r in 0..4 {
            for s in 0..4 {
                let a = gradient_overlap_4d(d, 0.5, r, s);
                assert_eq!(a, gradient_overlap_4d(d, 0.5, s, r));
                assert_eq!(a, gradient_overlap_4d(d.map(|x| -x), 0.5, r, s));
            }
        }
    }

    #[test]
    fn abelian_form_is_symmetric_and_positive() {
        let s = GaugeFieldState::new(Group::U1, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
        let m = abelian_quadratic_form(&s).unwrap();
        let dim = 64;
        for i in 0..dim {
            for j in 0..dim {
                assert!((m[i * dim + j] - m[j * dim + i]).abs() < 1e-14);
            }
        }
        assert!(crate::linalg::cholesky(&m, dim).is_some());
        let su2 = GaugeFieldState::new(Group::SU2, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
        assert!(abelian_quadratic_form(&su2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn potential_is_periodic(seed in 0u64..1000, x in proptest::array::uniform4(0.0f64..2.0), axis in 0usize..4) {
            let s = random_state(Group::SU2, seed, 6, 0.4, 2.0, 1.0);
            let mut y = x;
            y[axis] += 2.0;
            let a = s.potential(x);
            let b = s.potential(y);
            let scale = a.iter().map(|v| v.abs()).fold(1e-300, f64::max);
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn field_strength_is_antisymmetric(seed in 0u64..1000, x in proptest::array::uniform4(0.0f64..2.0)) {
            let s = random_state(Group::SU2, seed, 6, 0.4, 2.0, 1.0);
            let f = s.field_strength(x);
            for mu in 0..4 {
                for nu in 0..4 {
                    for c in 0..3 {
                        prop_assert_eq!(f.get(mu, nu, c), -f.get(nu, mu, c));
                    }
                }
            }
        }
    }
}
