//! Rectangular Wilson loops and the static potential.

use super::su2::Su2;
use super::{GaugeFieldState, Group};
use crate::error::{config, Result};
use crate::observables::{jackknife_with, Estimate};

/// An `R × T` rectangle in the `(μ, ν)` plane, `R` along `μ`, traversed
/// counterclockwise from `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct WilsonLoopSpec {
    pub plane: (usize, usize),
    pub r: f64,
    pub t: f64,
    pub anchor: [f64; 4],
    /// Upper bound on the midpoint-rule segment length.
    pub max_segment: f64,
}

impl WilsonLoopSpec {
    pub fn validate(&self, state: &GaugeFieldState) -> Result<()> {
        let (mu, nu) = self.plane;
        if mu == nu || mu > 3 || nu > 3 {
            return config(format!("bad loop plane ({mu}, {nu})"));
        }
        let half = 0.5 * state.size();
        if !(self.r > 0.0 && self.r < half && self.t > 0.0 && self.t < half) {
            return config(format!(
                "loop extents R={} T={} must lie in (0, L/2 = {half})",
                self.r, self.t
            ));
        }
        if !(self.max_segment > 0.0) || self.max_segment > 0.25 * state.width() + 1e-15 {
            return config(format!(
                "segment length {} must be in (0, ξ/4 = {}]",
                self.max_segment,
                0.25 * state.width()
            ));
        }
        Ok(())
    }

    /// `(direction, signed length, midpoint)` of every segment in order.
    fn segments(&self) -> Vec<(usize, f64, [f64; 4])> {
        let (mu, nu) = self.plane;
        let sides = [(mu, self.r), (nu, self.t), (mu, -self.r), (nu, -self.t)];
        let mut pos = self.anchor;
        let mut out = Vec::new();
        for (dir, len) in sides {
            let n = (len.abs() / self.max_segment).ceil().max(1.0) as usize;
            let h = len / n as f64;
            for k in 0..n {
                let mut mid = pos;
                mid[dir] += (k as f64 + 0.5) * h;
                out.push((dir, h, mid));
            }
            pos[dir] += len;
        }
        out
    }
}

/// Ordered SU(2) segment factors `exp(i g h A^a σ^a/2)` around the loop.
pub fn loop_links(state: &GaugeFieldState, spec: &WilsonLoopSpec) -> Result<Vec<Su2>> {
    spec.validate(state)?;
    if state.group() != Group::SU2 {
        return config("loop links are defined for SU(2) only");
    }
    let g = state.coupling();
    Ok(spec
        .segments()
        .into_iter()
        .map(|(dir, h, mid)| {
            let a = state.potential_dir(mid, dir);
            Su2::exp_i([0.5 * g * h * a[0], 0.5 * g * h * a[1], 0.5 * g * h * a[2]])
        })
        .collect())
}

/// `W = cos(g ∮A·dx)` for U(1), `½ Re tr Π exp(i g h A^a σ^a/2)` for SU(2).
pub fn wilson_loop(state: &GaugeFieldState, spec: &WilsonLoopSpec) -> Result<f64> {
    spec.validate(state)?;
    match state.group() {
        Group::U1 => {
            let phase: f64 = spec
                .segments()
                .into_iter()
                .map(|(dir, h, mid)| h * state.potential_dir(mid, dir)[0])
                .sum();
            Ok((state.coupling() * phase).cos())
        }
        Group::SU2 => Ok(loop_links(state, spec)?
            .into_iter()
            .fold(Su2::IDENTITY, Su2::mul)
            .half_trace()),
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `V(R) = −d ln⟨W(R, T)⟩ / dT` by least squares over `t_values`, with a
/// jackknife over chains. `w[chain][k]` is that chain's mean loop at
/// `t_values[k]`.
pub fn static_potential(t_values: &[f64], w: &[Vec<f64>]) -> Result<Estimate> {
    if t_values.len() < 2 {
        return config("the potential fit needs at least two loop extents in T");
    }
    if w.is_empty() || w.iter().any(|row| row.len() != t_values.len()) {
        return config("loop table does not match the T values");
    }
    let n = w.len();
    let totals: Vec<f64> = (0..t_values.len())
        .map(|k| w.iter().map(|row| row[k]).sum())
        .collect();
    jackknife_with(n, |skip| {
        let (count, drop): (f64, Option<&Vec<f64>>) = match skip {
            None => (n as f64, None),
            Some(i) => ((n - 1) as f64, Some(&w[i])),
        };
        let logs: Vec<f64> = totals
            .iter()
            .enumerate()
            .map(|(k, tot)| ((tot - drop.map_or(0.0, |r| r[k])) / count).ln())
            .collect();
        -slope(t_values, &logs)
    })
}

/// Residuals of the two 2-parameter potential models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitComparison {
    /// `V = c₀ − c₁/R`
    pub coulomb: (f64, f64),
    pub coulomb_rss: f64,
    /// `V = σR + c`
    pub linear: (f64, f64),
    pub linear_rss: f64,
}

impl FitComparison {
    pub fn prefers_coulomb(&self) -> bool {
        self.coulomb_rss < self.linear_rss
    }
}

/// Least-squares `y ≈ p + q·x`, returning `(p, q, rss)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let q = slope(x, y);
    let n = x.len() as f64;
    let p = y.iter().sum::<f64>() / n - q * x.iter().sum::<f64>() / n;
    let rss = x.iter().zip(y).map(|(a, b)| (b - p - q * a).powi(2)).sum();
    (p, q, rss)
}

pub fn compare_potential_fits(r: &[f64], v: &[f64]) -> Result<FitComparison> {
    if r.len() < 3 || r.len() != v.len() || r.iter().any(|&x| !(x > 0.0)) {
        return config("fit comparison needs at least three positive R values");
    }
    let inv: Vec<f64> = r.iter().map(|x| 1.0 / x).collect();
    let (c0, minus_c1, coulomb_rss) = line_fit(&inv, v);
    let (c, sigma, linear_rss) = line_fit(r, v);
    Ok(FitComparison {
        coulomb: (c0, -minus_c1),
        coulomb_rss,
        linear: (sigma, c),
        linear_rss,
    })
}
