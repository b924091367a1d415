//! Potential and field strength cached on a uniform periodic grid.
//!
//! A single-amplitude change `a → a + δ` moves `F` linearly in `δ` (each
//! commutator term contains the changed component once), so on the grid
//! `ΔS = c₁δ + c₂δ²` exactly and both coefficients cost one pass over the
//! bump's window.

use super::{cross, density_from, field_from, pair_index, GaugeFieldState, Group};
use crate::basis::wrap;
use crate::error::{config, Result};

/// Half-width of the per-axis update window, in widths.
pub const WINDOW: f64 = 6.0;

#[derive(Debug, Clone)]
struct AxisTable {
    idx: Vec<usize>,
    val: Vec<f64>,
    der: Vec<f64>,
}

#[inline]
fn for_each_window_point(t: &[AxisTable; 4], m: usize, mut f: impl FnMut(usize, f64, [f64; 4])) {
    for (n0, &j0) in t[0].idx.iter().enumerate() {
        let (v0, d0) = (t[0].val[n0], t[0].der[n0]);
        for (n1, &j1) in t[1].idx.iter().enumerate() {
            let (v1, d1) = (t[1].val[n1], t[1].der[n1]);
            let p01 = (j0 * m + j1) * m;
            let v01 = v0 * v1;
            for (n2, &j2) in t[2].idx.iter().enumerate() {
                let (v2, d2) = (t[2].val[n2], t[2].der[n2]);
                let p012 = (p01 + j2) * m;
                let v012 = v01 * v2;
                for (n3, &j3) in t[3].idx.iter().enumerate() {
                    let (v3, d3) = (t[3].val[n3], t[3].der[n3]);
                    let g = v012 * v3;
                    let dg = [
                        d0 * v1 * v2 * v3,
                        v0 * d1 * v2 * v3,
                        v01 * d2 * v3,
                        v012 * d3,
                    ];
                    f(p012 + j3, g, dg);
                }
            }
        }
    }
}

/// What a unit change of `a[ν₀][c₀][i]` does to the stored `F`.
#[derive(Clone, Copy)]
struct Change<'a> {
    table: &'a [AxisTable; 4],
    m: usize,
    comps: usize,
    su2: bool,
    coupling: f64,
    nu0: usize,
    c0: usize,
}

impl Change<'_> {
    /// Calls `f(point, pair·colors + a, D)` for every affected component.
    #[inline]
    fn visit(self, a_cache: &[f64], mut f: impl FnMut(usize, usize, f64)) {
        let mut e = [0.0; 3];
        if self.su2 {
            e[self.c0] = 1.0;
        }
        let mut pairs = [(0, 0, 0.0); 3];
        let mut n = 0;
        for mu in (0..4).filter(|&mu| mu != self.nu0) {
            let (p, s) = pair_index(mu, self.nu0).expect("distinct directions");
            pairs[n] = (mu, p, s);
            n += 1;
        }
        for_each_window_point(self.table, self.m, |pt, g, dg| {
            for &(mu, p, s) in &pairs {
                if self.su2 {
                    let base = pt * self.comps + mu * 3;
                    let am = [a_cache[base], a_cache[base + 1], a_cache[base + 2]];
                    let x = cross(am, e);
                    for a in 0..3 {
                        let kin = if a == self.c0 { dg[mu] } else { 0.0 };
                        f(pt, p * 3 + a, s * (kin + self.coupling * x[a] * g));
                    }
                } else {
                    f(pt, p, s * dg[mu]);
                }
            }
        });
    }
}

#[derive(Debug, Clone)]
pub struct GaugeGrid {
    m: usize,
    h: f64,
    group: Group,
    coupling: f64,
    comps: usize,
    fcomps: usize,
    a: Vec<f64>,
    f: Vec<f64>,
    scratch: Vec<f64>,
    tables: Vec<[AxisTable; 4]>,
    action: f64,
}

impl GaugeGrid {
    /// Grid with the fewest points per axis giving spacing `≤ max_spacing`.
    pub fn new(state: &GaugeFieldState, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return config(format!("grid spacing must be positive, got {max_spacing}"));
        }
        let size = state.size();
        let m = ((size / max_spacing) - 1e-9).ceil().max(1.0) as usize;
        let h = size / m as f64;
        let half = WINDOW * state.width();
        let full = 2.0 * half >= size;
        let tables = state
            .centers()
            .iter()
            .map(|c| {
                std::array::from_fn(|k| {
                    let mut t = AxisTable {
                        idx: Vec::new(),
                        val: Vec::new(),
                        der: Vec::new(),
                    };
                    for j in 0..m {
                        let d = wrap(j as f64 * h - c[k], size);
                        if full || d.abs() <= half {
                            let (v, dv) = state.axis_factor(d);
                            t.idx.push(j);
                            t.val.push(v);
                            t.der.push(dv);
                        }
                    }
                    t
                })
            })
            .collect();
        let points = m.pow(4);
        let comps = state.components();
        let mut grid = Self {
            m,
            h,
            group: state.group(),
            coupling: state.coupling(),
            comps,
            fcomps: 6 * state.colors(),
            a: vec![0.0; points * comps],
            f: vec![0.0; points * 6 * state.colors()],
            scratch: vec![0.0; points * 4 * comps],
            tables,
            action: 0.0,
        };
        grid.recompute(state);
        Ok(grid)
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `S = h⁴ Σ L` as of the last recompute plus applied updates.
    pub fn action(&self) -> f64 {
        self.action
    }

    /// Cached `F` at grid point `p` in [`super::PAIRS`] order.
    pub fn field_at(&self, p: usize) -> &[f64] {
        &self.f[p * self.fcomps..(p + 1) * self.fcomps]
    }

    /// Rebuilds `A`, `F` and `S` from the amplitudes.
    pub fn recompute(&mut self, state: &GaugeFieldState) -> f64 {
        let comps = self.comps;
        let n = state.n_centers();
        self.a.iter_mut().for_each(|v| *v = 0.0);
        let mut da = std::mem::take(&mut self.scratch);
        da.iter_mut().for_each(|v| *v = 0.0);
        let amps = state.amplitudes();
        for i in 0..n {
            let local: Vec<f64> = (0..comps).map(|c| amps[c * n + i]).collect();
            if local.iter().all(|&v| v == 0.0) {
                continue;
            }
            let a = &mut self.a;
            for_each_window_point(&self.tables[i], self.m, |p, g, dg| {
                for (c, &amp) in local.iter().enumerate() {
                    a[p * comps + c] += amp * g;
                    for al in 0..4 {
                        da[(p * 4 + al) * comps + c] += amp * dg[al];
                    }
                }
            });
        }
        let points = self.m.pow(4);
        let fc = self.fcomps;
        let mut s = 0.0;
        for p in 0..points {
            let out = &mut self.f[p * fc..(p + 1) * fc];
            field_from(
                self.group,
                self.coupling,
                &self.a[p * comps..(p + 1) * comps],
                |al, c| da[(p * 4 + al) * comps + c],
                out,
            );
            s += density_from(out);
        }
        self.scratch = da;
        self.action = s * self.h.powi(4);
        self.action
    }

    fn change(&self, nu0: usize, c0: usize, i: usize) -> Change<'_> {
        Change {
            table: &self.tables[i],
            m: self.m,
            comps: self.comps,
            su2: self.group == Group::SU2,
            coupling: self.coupling,
            nu0,
            c0,
        }
    }

    /// `(c₁, c₂)` with `ΔS(δ) = c₁δ + c₂δ²` for `a[ν₀][c₀][i] += δ`.
    pub fn coefficients(&self, nu0: usize, c0: usize, i: usize) -> (f64, f64) {
        let fc = self.fcomps;
        let (mut c1, mut c2) = (0.0, 0.0);
        self.change(nu0, c0, i).visit(&self.a, |pt, k, d| {
            c1 += self.f[pt * fc + k] * d;
            c2 += d * d;
        });
        let h4 = self.h.powi(4);
        (c1 * h4, 0.5 * c2 * h4)
    }

    /// Applies `a[ν₀][c₀][i] += δ` to the cache and returns `ΔS`. The caller
    /// updates the amplitude itself.
    pub fn apply(&mut self, nu0: usize, c0: usize, i: usize, delta: f64) -> f64 {
        let fc = self.fcomps;
        let (mut c1, mut c2) = (0.0, 0.0);
        let change = Change {
            table: &self.tables[i],
            m: self.m,
            comps: self.comps,
            su2: self.group == Group::SU2,
            coupling: self.coupling,
            nu0,
            c0,
        };
        let f = &mut self.f;
        change.visit(&self.a, |pt, k, d| {
            let v = &mut f[pt * fc + k];
            c1 += *v * d;
            c2 += d * d;
            *v += delta * d;
        });
        let comps = self.comps;
        let comp = nu0 * (comps / 4) + c0;
        let a = &mut self.a;
        for_each_window_point(&self.tables[i], self.m, |pt, g, _| {
            a[pt * comps + comp] += delta * g;
        });
        let h4 = self.h.powi(4);
        let ds = (c1 * delta + 0.5 * c2 * delta * delta) * h4;
        self.action += ds;
        ds
    }
}

/// Periodic 4D trapezoid average `L̄ = (1/V₄) ∫ L d⁴x` with spacing at most
/// `h ≤ ξ/2`.
pub fn average_lagrangian(state: &GaugeFieldState, h: f64) -> Result<f64> {
    if h > 0.5 * state.width() {
        return config(format!(
            "grid spacing {h} exceeds ξ/2 = {}",
            0.5 * state.width()
        ));
    }
    let grid = GaugeGrid::new(state, h)?;
    Ok(grid.action() / state.volume())
}
