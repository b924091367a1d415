//! Metropolis chains over gauge amplitudes.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grid::GaugeGrid;
use super::wilson::{static_potential, wilson_loop, WilsonLoopSpec};
use super::{lattice_centers, random_centers, GaugeFieldState, Group, PAIRS};
use crate::basis::{parse_field, CenterMode};
use crate::error::{config, Error, Result};
use crate::observables::{jackknife, Estimate};
use crate::sampler::{derive_seed, equilibration_check, Equilibration};

/// Sweeps between step adjustments during burn-in.
pub const GAUGE_TUNE_INTERVAL: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeConfig {
    pub group: Group,
    pub size: f64,
    pub width: f64,
    pub coupling: f64,
    pub n_sum4: usize,
    /// `Uniform` puts the centers on an `n⁴` lattice.
    pub center_mode: CenterMode,
    /// Grid points per width; the spacing is at most `ξ / grid_per_width`.
    pub grid_per_width: f64,
    pub chains: usize,
    pub burn_in: u64,
    pub measure_sweeps: u64,
    pub thinning: u64,
    pub step: f64,
    pub tune_step: bool,
    /// Metropolis proposals per amplitude visit.
    pub hits: u32,
    /// Hot start range for amplitudes; zero is a cold start.
    pub hot_start: f64,
    pub master_seed: u64,
    pub loop_r: Vec<f64>,
    pub loop_t: Vec<f64>,
    /// Loop anchors per axis; loops are averaged over all anchors and planes.
    pub loop_anchors: usize,
    pub trace_stride: u64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        Self {
            group: Group::U1,
            size: 2.0,
            width: 0.5,
            coupling: 1.0,
            n_sum4: 16,
            center_mode: CenterMode::Uniform,
            grid_per_width: 2.0,
            chains: 4,
            burn_in: 200,
            measure_sweeps: 1000,
            thinning: 10,
            step: 0.5,
            tune_step: true,
            hits: 4,
            hot_start: 0.0,
            master_seed: 0,
            loop_r: vec![0.25, 0.5, 0.75],
            loop_t: vec![0.25, 0.5, 0.75],
            loop_anchors: 2,
            trace_stride: 1,
        }
    }
}

impl GaugeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.size > 0.0) || !(self.width > 0.0) || !self.coupling.is_finite() {
            return config("need L > 0, ξ > 0 and finite g");
        }
        if self.n_sum4 == 0 || self.chains == 0 || self.thinning == 0 || self.trace_stride == 0 {
            return config("n_sum4, chains, thinning and trace_stride must be at least 1");
        }
        if self.center_mode == CenterMode::Uniform && self.lattice_side().is_none() {
            return config(format!(
                "n_sum4 = {} is not a fourth power; use random centers or n⁴ centers",
                self.n_sum4
            ));
        }
        if !(self.grid_per_width >= 2.0) {
            return config("grid_per_width must be at least 2 (spacing ≤ ξ/2)");
        }
        if !(self.step > 0.0) || self.hits == 0 || !(self.hot_start >= 0.0) {
            return config("need step > 0, hits ≥ 1 and hot_start ≥ 0");
        }
        if self.loop_anchors == 0 {
            return config("loop_anchors must be at least 1");
        }
        let probe = GaugeFieldState::new(self.group, vec![[0.0; 4]], self.width, self.size, self.coupling)?;
        for spec in self.loop_specs((0, 1), [0.0; 4]) {
            spec.validate(&probe)?;
        }
        Ok(())
    }

    fn lattice_side(&self) -> Option<usize> {
        let n = (self.n_sum4 as f64).powf(0.25).round() as usize;
        (n.pow(4) == self.n_sum4).then_some(n)
    }

    pub fn total_sweeps(&self) -> u64 {
        self.burn_in + self.measure_sweeps
    }

    pub fn grid_spacing(&self) -> f64 {
        self.width / self.grid_per_width
    }

    fn measurements_due(&self, sweep: u64) -> u64 {
        if sweep < self.burn_in {
            return 0;
        }
        ((sweep - self.burn_in) / self.thinning).min(self.measure_sweeps / self.thinning) + 1
    }

    fn is_measure_point(&self, sweep: u64) -> bool {
        sweep >= self.burn_in
            && (sweep - self.burn_in) % self.thinning == 0
            && sweep <= self.total_sweeps()
    }

    /// Loop geometries, `R` major.
    pub fn loop_grid(&self) -> Vec<(f64, f64)> {
        self.loop_r
            .iter()
            .flat_map(|&r| self.loop_t.iter().map(move |&t| (r, t)))
            .collect()
    }

    fn loop_specs(&self, plane: (usize, usize), anchor: [f64; 4]) -> Vec<WilsonLoopSpec> {
        self.loop_grid()
            .into_iter()
            .map(|(r, t)| WilsonLoopSpec {
                plane,
                r,
                t,
                anchor,
                max_segment: 0.25 * self.width,
            })
            .collect()
    }

    fn anchors(&self) -> Vec<[f64; 4]> {
        lattice_centers(self.loop_anchors, self.size)
    }
}

/// Per-chain accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeMeasurements {
    pub chain: usize,
    pub snapshot_lbar: Option<f64>,
    pub lbar_sum: f64,
    pub records: u64,
    /// Sum over records of the plane- and anchor-averaged loops, in
    /// [`GaugeConfig::loop_grid`] order.
    pub wloop_sum: Vec<f64>,
}

impl GaugeMeasurements {
    pub fn mean_lbar(&self) -> Option<f64> {
        (self.records > 0).then(|| self.lbar_sum / self.records as f64)
    }

    pub fn mean_wloops(&self) -> Vec<f64> {
        let n = self.records.max(1) as f64;
        self.wloop_sum.iter().map(|w| w / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeChain {
    id: usize,
    seed: u64,
    state: GaugeFieldState,
    rng: ChaCha8Rng,
    sweeps_done: u64,
    step: f64,
    window: (u64, u64),
    accepted: u64,
    proposed: u64,
    trace: Vec<(u64, f64)>,
    measurements: GaugeMeasurements,
}

impl GaugeChain {
    pub fn new(cfg: &GaugeConfig, id: usize) -> Result<Self> {
        cfg.validate()?;
        let seed = derive_seed(cfg.master_seed, id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = match cfg.center_mode {
            CenterMode::Uniform => lattice_centers(cfg.lattice_side().expect("validated"), cfg.size),
            CenterMode::Random => random_centers(cfg.n_sum4, cfg.size, &mut rng),
        };
        let mut state = GaugeFieldState::new(cfg.group, centers, cfg.width, cfg.size, cfg.coupling)?;
        if cfg.hot_start > 0.0 {
            for a in state.amplitudes_mut() {
                *a = rng.random_range(-cfg.hot_start..cfg.hot_start);
            }
        }
        Ok(Self {
            id,
            seed,
            state,
            rng,
            sweeps_done: 0,
            step: cfg.step,
            window: (0, 0),
            accepted: 0,
            proposed: 0,
            trace: Vec::new(),
            measurements: GaugeMeasurements {
                chain: id,
                snapshot_lbar: None,
                lbar_sum: 0.0,
                records: 0,
                wloop_sum: vec![0.0; cfg.loop_grid().len()],
            },
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &GaugeFieldState {
        &self.state
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn acceptance(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    pub fn action_trace(&self) -> &[(u64, f64)] {
        &self.trace
    }

    pub fn measurements(&self) -> &GaugeMeasurements {
        &self.measurements
    }

    pub fn equilibration(&self) -> Equilibration {
        let s: Vec<f64> = self.trace.iter().map(|t| t.1).collect();
        equilibration_check(&s)
    }

    /// One multi-hit Metropolis visit of every amplitude, in storage order.
    /// `grid` must be fresh for the current amplitudes on entry and is
    /// rebuilt from scratch on exit.
    pub fn sweep(&mut self, grid: &mut GaugeGrid, hits: u32) {
        let n = self.state.n_centers();
        let nc = self.state.colors();
        for mu in 0..4 {
            for c in 0..nc {
                for i in 0..n {
                    let (c1, c2) = grid.coefficients(mu, c, i);
                    let mut d = 0.0;
                    for _ in 0..hits {
                        let u: f64 = self.rng.random();
                        let r: f64 = self.rng.random();
                        let nd = d + self.step * (2.0 * u - 1.0);
                        let ds = c1 * (nd - d) + c2 * (nd * nd - d * d);
                        if ds <= 0.0 || r < (-ds).exp() {
                            d = nd;
                            self.accepted += 1;
                            self.window.0 += 1;
                        }
                    }
                    self.proposed += hits as u64;
                    self.window.1 += hits as u64;
                    if d != 0.0 {
                        grid.apply(mu, c, i, d);
                        let k = self.state.index(mu, c, i);
                        self.state.amplitudes_mut()[k] += d;
                    }
                }
            }
        }
        grid.recompute(&self.state);
        self.sweeps_done += 1;
    }

    fn tune(&mut self) {
        let (acc, prop) = self.window;
        self.window = (0, 0);
        if prop == 0 {
            return;
        }
        let rate = acc as f64 / prop as f64;
        if !(0.4..=0.6).contains(&rate) {
            self.step *= (rate / 0.5).clamp(0.5, 2.0);
        }
    }

    fn catch_up(&mut self, cfg: &GaugeConfig, grid: &GaugeGrid) -> Result<()> {
        let s = self.sweeps_done;
        if s % cfg.trace_stride == 0 && self.trace.last().is_none_or(|t| t.0 != s) {
            self.trace.push((s, grid.action()));
        }
        if cfg.is_measure_point(s) && self.measurements.records < cfg.measurements_due(s) {
            let lbar = grid.action() / self.state.volume();
            let loops = measure_loops(cfg, &self.state)?;
            let m = &mut self.measurements;
            if m.snapshot_lbar.is_none() {
                m.snapshot_lbar = Some(lbar);
            }
            m.lbar_sum += lbar;
            m.records += 1;
            for (acc, w) in m.wloop_sum.iter_mut().zip(loops) {
                *acc += w;
            }
        }
        Ok(())
    }

    pub fn advance(&mut self, cfg: &GaugeConfig, target: u64) -> Result<()> {
        let mut grid = GaugeGrid::new(&self.state, cfg.grid_spacing())?;
        self.catch_up(cfg, &grid)?;
        while self.sweeps_done < target {
            self.sweep(&mut grid, cfg.hits);
            if cfg.tune_step
                && self.sweeps_done <= cfg.burn_in
                && self.sweeps_done % GAUGE_TUNE_INTERVAL == 0
            {
                self.tune();
            }
            self.catch_up(cfg, &grid)?;
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        let m = &self.measurements;
        let seed_hex: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        writeln!(out, "gausspath-gauge-checkpoint 1").unwrap();
        writeln!(out, "chain {}", self.id).unwrap();
        writeln!(out, "seed {}", self.seed).unwrap();
        writeln!(out, "rng {seed_hex}:{:x}:{:x}", self.rng.get_stream(), self.rng.get_word_pos()).unwrap();
        writeln!(out, "sweeps {}", self.sweeps_done).unwrap();
        writeln!(out, "step {:.16e}", self.step).unwrap();
        writeln!(out, "tune {} {} {} {}", self.window.0, self.window.1, self.accepted, self.proposed).unwrap();
        match m.snapshot_lbar {
            Some(v) => writeln!(out, "snapshot {v:.16e}").unwrap(),
            None => writeln!(out, "snapshot none").unwrap(),
        }
        writeln!(out, "lbar {:.16e} {}", m.lbar_sum, m.records).unwrap();
        out.push_str("wloop");
        for w in &m.wloop_sum {
            write!(out, " {w:.16e}").unwrap();
        }
        out.push('\n');
        writeln!(out, "trace {}", self.trace.len()).unwrap();
        for (s, v) in &self.trace {
            writeln!(out, "{s} {v:.16e}").unwrap();
        }
        let st = &self.state;
        writeln!(
            out,
            "field {} {} {:.16e} {:.16e} {:.16e}",
            st.group(),
            st.n_centers(),
            st.size(),
            st.width(),
            st.coupling()
        )
        .unwrap();
        let comps = st.components();
        let n = st.n_centers();
        for (i, c) in st.centers().iter().enumerate() {
            write!(out, "{:.16e} {:.16e} {:.16e} {:.16e}", c[0], c[1], c[2], c[3]).unwrap();
            for comp in 0..comps {
                write!(out, " {:.16e}", st.amplitudes()[comp * n + i]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let mut pos = 0;
        let mut next = |key: &str| -> Result<(usize, Vec<&str>)> {
            let line = lines
                .get(pos)
                .ok_or_else(|| Error::Checkpoint(format!("file ended before `{key}`")))?;
            pos += 1;
            let mut f = line.split_whitespace();
            if key.is_empty() {
                return Ok((pos, f.collect()));
            }
            if f.next() != Some(key) {
                return Err(Error::Parse {
                    line: pos,
                    msg: format!("expected `{key}`, got `{line}`"),
                });
            }
            Ok((pos, f.collect()))
        };
        let arity = |no: usize, f: &[&str], n: usize| -> Result<()> {
            if f.len() == n {
                Ok(())
            } else {
                Err(Error::Parse {
                    line: no,
                    msg: format!("expected {n} fields, got {}", f.len()),
                })
            }
        };
        let (no, f) = next("gausspath-gauge-checkpoint")?;
        arity(no, &f, 1)?;
        let (no, f) = next("chain")?;
        arity(no, &f, 1)?;
        let id: usize = parse_field(f[0], no)?;
        let (no, f) = next("seed")?;
        arity(no, &f, 1)?;
        let seed: u64 = parse_field(f[0], no)?;
        let (no, f) = next("rng")?;
        arity(no, &f, 1)?;
        let rng = crate::sampler::parse_rng(f[0]).ok_or_else(|| Error::Parse {
            line: no,
            msg: "malformed generator state".into(),
        })?;
        let (no, f) = next("sweeps")?;
        arity(no, &f, 1)?;
        let sweeps_done: u64 = parse_field(f[0], no)?;
        let (no, f) = next("step")?;
        arity(no, &f, 1)?;
        let step: f64 = parse_field(f[0], no)?;
        let (no, f) = next("tune")?;
        arity(no, &f, 4)?;
        let window = (parse_field(f[0], no)?, parse_field(f[1], no)?);
        let accepted: u64 = parse_field(f[2], no)?;
        let proposed: u64 = parse_field(f[3], no)?;
        let (no, f) = next("snapshot")?;
        arity(no, &f, 1)?;
        let snapshot_lbar = match f[0] {
            "none" => None,
            v => Some(parse_field(v, no)?),
        };
        let (no, f) = next("lbar")?;
        arity(no, &f, 2)?;
        let lbar_sum: f64 = parse_field(f[0], no)?;
        let records: u64 = parse_field(f[1], no)?;
        let (no, f) = next("wloop")?;
        let wloop_sum = f.iter().map(|w| parse_field(w, no)).collect::<Result<Vec<f64>>>()?;
        let (no, f) = next("trace")?;
        arity(no, &f, 1)?;
        let n_trace: usize = parse_field(f[0], no)?;
        let mut trace = Vec::with_capacity(n_trace);
        for _ in 0..n_trace {
            let (no, f) = next("")?;
            arity(no, &f, 2)?;
            trace.push((parse_field(f[0], no)?, parse_field(f[1], no)?));
        }
        let (no, f) = next("field")?;
        arity(no, &f, 5)?;
        let group: Group = f[0].parse().map_err(|e: Error| Error::Parse {
            line: no,
            msg: e.to_string(),
        })?;
        let n: usize = parse_field(f[1], no)?;
        let size: f64 = parse_field(f[2], no)?;
        let width: f64 = parse_field(f[3], no)?;
        let coupling: f64 = parse_field(f[4], no)?;
        let comps = 4 * group.colors();
        let mut centers = Vec::with_capacity(n);
        let mut amps = vec![0.0; comps * n];
        for i in 0..n {
            let (no, f) = next("")?;
            arity(no, &f, 4 + comps)?;
            centers.push([
                parse_field(f[0], no)?,
                parse_field(f[1], no)?,
                parse_field(f[2], no)?,
                parse_field(f[3], no)?,
            ]);
            for comp in 0..comps {
                amps[comp * n + i] = parse_field(f[4 + comp], no)?;
            }
        }
        let mut state = GaugeFieldState::new(group, centers, width, size, coupling)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        state.amplitudes_mut().copy_from_slice(&amps);
        Ok(Self {
            id,
            seed,
            state,
            rng,
            sweeps_done,
            step,
            window,
            accepted,
            proposed,
            trace,
            measurements: GaugeMeasurements {
                chain: id,
                snapshot_lbar,
                lbar_sum,
                records,
                wloop_sum,
            },
        })
    }

    pub fn check_compatible(&self, cfg: &GaugeConfig) -> Result<()> {
        let s = &self.state;
        if s.group() != cfg.group
            || s.n_centers() != cfg.n_sum4
            || s.size() != cfg.size
            || s.width() != cfg.width
            || s.coupling() != cfg.coupling
            || self.seed != derive_seed(cfg.master_seed, self.id)
            || self.measurements.wloop_sum.len() != cfg.loop_grid().len()
        {
            return Err(Error::Checkpoint(format!(
                "gauge chain {} was written by a run with different parameters",
                self.id
            )));
        }
        Ok(())
    }
}

/// Loops in [`GaugeConfig::loop_grid`] order, each averaged over all six
/// planes and the anchor lattice.
fn measure_loops(cfg: &GaugeConfig, state: &GaugeFieldState) -> Result<Vec<f64>> {
    let anchors = cfg.anchors();
    let geoms = cfg.loop_grid();
    let mut out = vec![0.0; geoms.len()];
    for &plane in &PAIRS {
        for &anchor in &anchors {
            for (k, spec) in cfg.loop_specs(plane, anchor).iter().enumerate() {
                out[k] += wilson_loop(state, spec)?;
            }
        }
    }
    let n = (PAIRS.len() * anchors.len()) as f64;
    Ok(out.into_iter().map(|w| w / n).collect())
}

#[derive(Debug, Clone)]
pub struct GaugeEnsemble {
    pub chains: Vec<GaugeChain>,
    /// Jackknife over chain means of `L̄`.
    pub lbar: Estimate,
    /// `(R, T, ⟨W⟩)` in [`GaugeConfig::loop_grid`] order.
    pub wloops: Vec<(f64, f64, Estimate)>,
    /// `(R, V(R))`; empty with fewer than two `T` values.
    pub potential: Vec<(f64, Estimate)>,
    pub suspect_chains: Vec<usize>,
}

impl GaugeEnsemble {
    pub fn from_chains(cfg: &GaugeConfig, mut chains: Vec<GaugeChain>) -> Result<Self> {
        chains.sort_by_key(|c| c.id);
        let lbars: Vec<f64> = chains
            .iter()
            .map(|c| c.measurements.mean_lbar().unwrap_or(f64::NAN))
            .collect();
        let lbar = jackknife(&lbars)?;
        let per_chain: Vec<Vec<f64>> = chains.iter().map(|c| c.measurements.mean_wloops()).collect();
        let geoms = cfg.loop_grid();
        let mut wloops = Vec::with_capacity(geoms.len());
        for (k, &(r, t)) in geoms.iter().enumerate() {
            let col: Vec<f64> = per_chain.iter().map(|w| w[k]).collect();
            wloops.push((r, t, jackknife(&col)?));
        }
        let mut potential = Vec::new();
        if cfg.loop_t.len() >= 2 {
            let nt = cfg.loop_t.len();
            for (ri, &r) in cfg.loop_r.iter().enumerate() {
                let table: Vec<Vec<f64>> = per_chain
                    .iter()
                    .map(|w| w[ri * nt..(ri + 1) * nt].to_vec())
                    .collect();
                potential.push((r, static_potential(&cfg.loop_t, &table)?));
            }
        }
        let suspect_chains = chains
            .iter()
            .filter(|c| c.equilibration() == Equilibration::Suspect)
            .map(|c| c.id)
            .collect();
        Ok(Self {
            chains,
            lbar,
            wloops,
            potential,
            suspect_chains,
        })
    }
}

pub fn init_gauge_chains(cfg: &GaugeConfig) -> Result<Vec<GaugeChain>> {
    (0..cfg.chains).map(|i| GaugeChain::new(cfg, i)).collect()
}

pub fn advance_gauge_chains(
    cfg: &GaugeConfig,
    chains: Vec<GaugeChain>,
    threads: usize,
) -> Result<Vec<GaugeChain>> {
    advance_gauge_chains_checkpointed(cfg, chains, threads, 0, |_| Ok(()))
}

/// As [`advance_gauge_chains`], handing each chain to `save` every `every`
/// sweeps and once at the end; `every = 0` saves only at the end.
pub fn advance_gauge_chains_checkpointed(
    cfg: &GaugeConfig,
    chains: Vec<GaugeChain>,
    threads: usize,
    every: u64,
    save: impl Fn(&GaugeChain) -> Result<()> + Sync,
) -> Result<Vec<GaugeChain>> {
    cfg.validate()?;
    let target = cfg.total_sweeps();
    let mut out = crate::sampler::pool(threads)?.install(|| {
        chains
            .into_par_iter()
            .map(|mut c| {
                c.check_compatible(cfg)?;
                while c.sweeps_done < target {
                    let next = if every == 0 {
                        target
                    } else {
                        ((c.sweeps_done / every + 1) * every).min(target)
                    };
                    c.advance(cfg, next)?;
                    if c.sweeps_done < target {
                        save(&c)?;
                    }
                }
                c.advance(cfg, target)?;
                save(&c)?;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    out.sort_by_key(|c| c.id);
    Ok(out)
}

pub fn run_gauge_ensemble(cfg: &GaugeConfig, threads: usize) -> Result<GaugeEnsemble> {
    let chains = advance_gauge_chains(cfg, init_gauge_chains(cfg)?, threads)?;
    GaugeEnsemble::from_chains(cfg, chains)
}
