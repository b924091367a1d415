//! Markov chains over path amplitudes.
//!
//! Each chain owns its path, its generator and its measurement accumulators.
//! Chains never communicate, so an ensemble is a plain parallel map and the
//! result depends only on `(config, master_seed)`.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::action::{
    assemble_quadratic, LagrangianSpec, PathAction, QuadraticAction, QuadratureAction,
    DEFAULT_BAND_CUT,
};
use crate::basis::{build_centers, parse_field, CenterMode, PathState};
use crate::error::{config, Error, Result};
use crate::observables::{
    ChainMeasurements, EnsembleSummary, Histogram, MeasureConfig, MeasurementRecord,
};

/// Sweeps between step-size adjustments during burn-in.
pub const TUNE_INTERVAL: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Updater {
    Heatbath,
    Metropolis,
}

impl FromStr for Updater {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heatbath" => Ok(Self::Heatbath),
            "metropolis" => Ok(Self::Metropolis),
            _ => config(format!("unknown updater `{s}` (heatbath|metropolis)")),
        }
    }
}

impl std::fmt::Display for Updater {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Heatbath => "heatbath",
            Self::Metropolis => "metropolis",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub width: f64,
    pub period: f64,
    pub n_sum: usize,
    pub spec: LagrangianSpec,
    pub chains: usize,
    pub burn_in: u64,
    pub measure_sweeps: u64,
    pub thinning: u64,
    pub updater: Updater,
    /// Initial Metropolis step; tuned during burn-in when `tune_step` is set.
    pub step: f64,
    pub tune_step: bool,
    pub center_mode: CenterMode,
    pub master_seed: u64,
    pub q_hot: f64,
    pub band_cut: f64,
    pub trace_stride: u64,
    pub measure: MeasureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            width: 0.1,
            period: 20.0,
            n_sum: 200,
            spec: LagrangianSpec::harmonic(1.0, 1.0).expect("valid"),
            chains: 400,
            burn_in: 50_000,
            measure_sweeps: 0,
            thinning: 50,
            updater: Updater::Heatbath,
            step: 0.5,
            tune_step: true,
            center_mode: CenterMode::Uniform,
            master_seed: 0,
            q_hot: 2.0,
            band_cut: DEFAULT_BAND_CUT,
            trace_stride: 100,
            measure: MeasureConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !(self.period > 0.0) {
            return config(format!("need ξ > 0 and T > 0 (ξ={}, T={})", self.width, self.period));
        }
        if self.n_sum == 0 || self.chains == 0 {
            return config("n_sum and chains must be at least 1");
        }
        if self.thinning == 0 || self.trace_stride == 0 {
            return config("thinning and trace_stride must be at least 1");
        }
        if !(self.step > 0.0) {
            return config(format!("Metropolis step must be positive, got {}", self.step));
        }
        if !(self.q_hot >= 0.0) || !(self.band_cut > 0.0) {
            return config("need q_hot ≥ 0 and band_cut > 0");
        }
        if self.updater == Updater::Heatbath && !self.spec.is_quadratic() {
            return config("heat-bath needs a quadratic action; use the metropolis updater");
        }
        self.measure.validate(self.period)
    }

    pub fn total_sweeps(&self) -> u64 {
        self.burn_in + self.measure_sweeps
    }

    /// Measurements taken at or before `sweep`: one at the end of burn-in,
    /// then one every `thinning` sweeps.
    fn measurements_due(&self, sweep: u64) -> u64 {
        if sweep < self.burn_in {
            return 0;
        }
        let last = self.measure_sweeps / self.thinning;
        ((sweep - self.burn_in) / self.thinning).min(last) + 1
    }

    fn is_measure_point(&self, sweep: u64) -> bool {
        sweep >= self.burn_in
            && (sweep - self.burn_in) % self.thinning == 0
            && sweep <= self.total_sweeps()
    }
}

/// Per-chain seed: a splitmix64 finalizer applied to
/// `master + (chain + 1)·φ`, with φ the 64-bit golden-ratio increment.
/// Adding chains never changes the seeds of existing ones.
pub fn derive_seed(master: u64, chain: usize) -> u64 {
    let mut z = master.wrapping_add((chain as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The action a chain samples: exact quadratic form or quadrature.
#[derive(Debug, Clone)]
pub enum ChainAction {
    Quadratic(QuadraticAction),
    Quadrature(QuadratureAction),
}

impl ChainAction {
    pub fn build(cfg: &RunConfig, path: &PathState) -> Result<Self> {
        if cfg.spec.is_quadratic() {
            Ok(Self::Quadratic(assemble_quadratic(
                path.centers(),
                path.width(),
                path.period(),
                cfg.spec.mass(),
                cfg.spec.omega(),
                cfg.band_cut,
            )?))
        } else {
            Ok(Self::Quadrature(QuadratureAction::for_path(cfg.spec.clone(), path)))
        }
    }

    fn inner(&self) -> &dyn PathAction {
        match self {
            Self::Quadratic(a) => a,
            Self::Quadrature(a) => a,
        }
    }
}

impl PathAction for ChainAction {
    fn total(&self, path: &PathState) -> f64 {
        self.inner().total(path)
    }

    fn delta(&self, path: &PathState, site: usize, dq: f64) -> f64 {
        self.inner().delta(path, site, dq)
    }

    fn as_quadratic(&self) -> Option<&QuadraticAction> {
        self.inner().as_quadratic()
    }
}

/// Draws `q_k` from its exact conditional law, a Gaussian with mean
/// `−Σ_{j≠k} A_kj q_j / A_kk` and variance `1/A_kk`.
///
/// # Panics
/// If `A_kk ≤ 0`.
pub fn heatbath_update<R: Rng + ?Sized>(
    path: &mut PathState,
    a: &QuadraticAction,
    k: usize,
    rng: &mut R,
) {
    let akk = a.diag(k);
    assert!(akk > 0.0, "non-positive diagonal A[{k}][{k}] = {akk}");
    let q = path.amplitudes_mut();
    let off = a.row_dot(k, q) - akk * q[k];
    let z: f64 = rng.sample(StandardNormal);
    q[k] = -off / akk + z / akk.sqrt();
}

/// Proposes `q_k + step·u` with `u ~ U(−1, 1)` and accepts with probability
/// `min(1, e^{−ΔS})`. Always consumes exactly two uniforms.
pub fn metropolis_update<R: Rng + ?Sized>(
    path: &mut PathState,
    action: &dyn PathAction,
    k: usize,
    step: f64,
    rng: &mut R,
) -> bool {
    let u: f64 = rng.random();
    let r: f64 = rng.random();
    let dq = step * (2.0 * u - 1.0);
    let ds = action.delta(path, k, dq);
    let accept = ds <= 0.0 || r < (-ds).exp();
    if accept {
        path.amplitudes_mut()[k] += dq;
    }
    accept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equilibration {
    Converged,
    Suspect,
}

/// Compares the means of the last two quarters of `trace`; converged when
/// they differ by less than twice the pooled standard error.
pub fn equilibration_check(trace: &[f64]) -> Equilibration {
    let n = trace.len();
    if n < 20 {
        return Equilibration::Suspect;
    }
    let stats = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let v = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (s.len() - 1) as f64;
        (m, v / s.len() as f64)
    };
    let (m3, v3) = stats(&trace[n / 2..3 * n / 4]);
    let (m4, v4) = stats(&trace[3 * n / 4..]);
    let diff = (m3 - m4).abs();
    if diff == 0.0 || diff < 2.0 * (v3 + v4).sqrt() {
        Equilibration::Converged
    } else {
        Equilibration::Suspect
    }
}

/// One Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    id: usize,
    seed: u64,
    path: PathState,
    rng: ChaCha8Rng,
    sweeps_done: u64,
    trace: Vec<(u64, f64)>,
    step: f64,
    window: (u64, u64),
    accepted: u64,
    proposed: u64,
    measurements: ChainMeasurements,
}

impl ChainState {
    /// Fresh chain: centers (drawn from the chain stream in random mode),
    /// then a hot start `qᵢ ~ U(−q_hot, q_hot)`.
    pub fn new(cfg: &RunConfig, id: usize) -> Result<Self> {
        let seed = derive_seed(cfg.master_seed, id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = build_centers(cfg.n_sum, cfg.period, cfg.center_mode, &mut rng);
        let amps = (0..cfg.n_sum)
            .map(|_| {
                if cfg.q_hot > 0.0 {
                    rng.random_range(-cfg.q_hot..cfg.q_hot)
                } else {
                    0.0
                }
            })
            .collect();
        let path = PathState::new(amps, centers, cfg.width, cfg.period)?;
        Ok(Self {
            id,
            seed,
            path,
            rng,
            sweeps_done: 0,
            trace: Vec::new(),
            step: cfg.step,
            window: (0, 0),
            accepted: 0,
            proposed: 0,
            measurements: ChainMeasurements::new(id, &cfg.measure),
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &PathState {
        &self.path
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    /// `(sweep, S)` pairs, every `trace_stride` sweeps starting at 0.
    pub fn action_trace(&self) -> &[(u64, f64)] {
        &self.trace
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Metropolis acceptance over the whole chain so far.
    pub fn acceptance(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    pub fn proposals(&self) -> u64 {
        self.proposed
    }

    pub fn measurements(&self) -> &ChainMeasurements {
        &self.measurements
    }

    pub fn equilibration(&self) -> Equilibration {
        let s: Vec<f64> = self.trace.iter().map(|t| t.1).collect();
        equilibration_check(&s)
    }

    /// One update per site in ascending order.
    pub fn sweep(&mut self, updater: Updater, action: &ChainAction) {
        match updater {
            Updater::Heatbath => {
                let a = action
                    .as_quadratic()
                    .expect("heat-bath needs a quadratic action");
                for k in 0..self.path.len() {
                    heatbath_update(&mut self.path, a, k, &mut self.rng);
                }
            }
            Updater::Metropolis => {
                for k in 0..self.path.len() {
                    let ok = metropolis_update(&mut self.path, action, k, self.step, &mut self.rng);
                    self.accepted += ok as u64;
                    self.window.0 += ok as u64;
                }
                let n = self.path.len() as u64;
                self.proposed += n;
                self.window.1 += n;
            }
        }
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

    fn catch_up(&mut self, cfg: &RunConfig, action: &ChainAction) {
        let s = self.sweeps_done;
        if s % cfg.trace_stride == 0 && self.trace.last().is_none_or(|t| t.0 != s) {
            self.trace.push((s, action.total(&self.path)));
        }
        if cfg.is_measure_point(s) && self.measurements.records < cfg.measurements_due(s) {
            let rec = MeasurementRecord::measure(&self.path, &cfg.measure, self.id, s);
            self.measurements.push(&rec);
        }
    }

    /// Runs until `target` sweeps are done, measuring and tuning on the
    /// schedule of `cfg`. Resuming from a checkpoint and advancing gives the
    /// same state as an uninterrupted run.
    pub fn advance(&mut self, cfg: &RunConfig, action: &ChainAction, target: u64) {
        self.catch_up(cfg, action);
        while self.sweeps_done < target {
            self.sweep(cfg.updater, action);
            if cfg.updater == Updater::Metropolis
                && cfg.tune_step
                && self.sweeps_done <= cfg.burn_in
                && self.sweeps_done % TUNE_INTERVAL == 0
            {
                self.tune();
            }
            self.catch_up(cfg, action);
        }
    }

    /// Text checkpoint: counters, generator state as hex, accumulators,
    /// action trace, then the path record.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        let m = &self.measurements;
        let seed_hex: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        writeln!(out, "gausspath-checkpoint 1").unwrap();
        writeln!(out, "chain {}", self.id).unwrap();
        writeln!(out, "seed {}", self.seed).unwrap();
        writeln!(
            out,
            "rng {seed_hex}:{:x}:{:x}",
            self.rng.get_stream(),
            self.rng.get_word_pos()
        )
        .unwrap();
        writeln!(out, "sweeps {}", self.sweeps_done).unwrap();
        writeln!(out, "step {:.16e}", self.step).unwrap();
        writeln!(
            out,
            "tune {} {} {} {}",
            self.window.0, self.window.1, self.accepted, self.proposed
        )
        .unwrap();
        match m.snapshot_msq {
            Some(v) => writeln!(out, "snapshot {v:.16e}").unwrap(),
            None => writeln!(out, "snapshot none").unwrap(),
        }
        writeln!(out, "thinned {:.16e} {}", m.thinned_msq_sum, m.thinned_count).unwrap();
        writeln!(out, "records {}", m.records).unwrap();
        write!(
            out,
            "hist {:.16e} {} {}",
            m.histogram.q_max(),
            m.histogram.underflow,
            m.histogram.overflow
        )
        .unwrap();
        for c in &m.histogram.counts {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
        out.push_str("corr");
        for c in &m.correlator_sum {
            write!(out, " {c:.16e}").unwrap();
        }
        out.push('\n');
        writeln!(out, "trace {}", self.trace.len()).unwrap();
        for (s, v) in &self.trace {
            writeln!(out, "{s} {v:.16e}").unwrap();
        }
        out.push_str(&self.path.to_text());
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Checkpoint(format!(
                "file ended before `{key}`"
            )))?;
            let mut f = line.split_whitespace();
            if f.next() != Some(key) {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("expected `{key}`, got `{line}`"),
                });
            }
            Ok((no, f.collect()))
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

        let (no, f) = next("gausspath-checkpoint")?;
        if f != ["1"] {
            return Err(Error::Parse {
                line: no,
                msg: "unsupported checkpoint version".into(),
            });
        }
        let (no, f) = next("chain")?;
        arity(no, &f, 1)?;
        let id: usize = parse_field(f[0], no)?;
        let (no, f) = next("seed")?;
        arity(no, &f, 1)?;
        let seed: u64 = parse_field(f[0], no)?;

        let (no, f) = next("rng")?;
        arity(no, &f, 1)?;
        let rng = parse_rng(f[0]).ok_or_else(|| Error::Parse {
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
        let snapshot_msq = match f[0] {
            "none" => None,
            v => Some(parse_field(v, no)?),
        };
        let (no, f) = next("thinned")?;
        arity(no, &f, 2)?;
        let thinned_msq_sum: f64 = parse_field(f[0], no)?;
        let thinned_count: u64 = parse_field(f[1], no)?;
        let (no, f) = next("records")?;
        arity(no, &f, 1)?;
        let records: u64 = parse_field(f[0], no)?;

        let (no, f) = next("hist")?;
        if f.len() < 4 {
            return Err(Error::Parse {
                line: no,
                msg: "histogram needs q_max, underflow, overflow and counts".into(),
            });
        }
        let q_max: f64 = parse_field(f[0], no)?;
        let counts = f[3..]
            .iter()
            .map(|c| parse_field(c, no))
            .collect::<Result<Vec<u64>>>()?;
        let mut histogram = Histogram::new(counts.len(), q_max);
        histogram.underflow = parse_field(f[1], no)?;
        histogram.overflow = parse_field(f[2], no)?;
        histogram.counts = counts;

        let (no, f) = next("corr")?;
        let correlator_sum = f
            .iter()
            .map(|c| parse_field(c, no))
            .collect::<Result<Vec<f64>>>()?;

        let (no, f) = next("trace")?;
        arity(no, &f, 1)?;
        let n_trace: usize = parse_field(f[0], no)?;
        drop(next);
        let mut trace = Vec::with_capacity(n_trace);
        for k in 0..n_trace {
            let (no, line) = lines.next().ok_or_else(|| {
                Error::Checkpoint(format!("expected {n_trace} trace lines, found {k}"))
            })?;
            let f: Vec<&str> = line.split_whitespace().collect();
            arity(no, &f, 2)?;
            trace.push((parse_field(f[0], no)?, parse_field(f[1], no)?));
        }
        let first = lines
            .next()
            .ok_or_else(|| Error::Checkpoint("missing path record".into()))?;
        let mut rest = std::iter::once(first.1).chain(lines.map(|l| l.1));
        let path = PathState::parse_lines(&mut rest, first.0)?;

        Ok(Self {
            id,
            seed,
            path,
            rng,
            sweeps_done,
            trace,
            step,
            window,
            accepted,
            proposed,
            measurements: ChainMeasurements {
                chain: id,
                snapshot_msq,
                thinned_msq_sum,
                thinned_count,
                records,
                histogram,
                correlator_sum,
            },
        })
    }

    /// Checks that a resumed chain matches the run geometry.
    pub fn check_compatible(&self, cfg: &RunConfig) -> Result<()> {
        let p = &self.path;
        let m = &self.measurements;
        if p.len() != cfg.n_sum
            || p.width() != cfg.width
            || p.period() != cfg.period
            || self.seed != derive_seed(cfg.master_seed, self.id)
            || m.histogram.bins() != cfg.measure.bins
            || m.histogram.q_max() != cfg.measure.q_max
            || m.correlator_sum.len() != cfg.measure.lags.len()
        {
            return Err(Error::Checkpoint(format!(
                "chain {} was written by a run with different geometry, seed or measurements",
                self.id
            )));
        }
        Ok(())
    }
}

pub(crate) fn parse_rng(s: &str) -> Option<ChaCha8Rng> {
    let mut parts = s.split(':');
    let (seed_hex, stream, pos) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || seed_hex.len() != 64 {
        return None;
    }
    let mut seed = [0u8; 32];
    for (i, b) in seed.iter_mut().enumerate() {
        *b = u8::from_str_radix(seed_hex.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(u64::from_str_radix(stream, 16).ok()?);
    rng.set_word_pos(u128::from_str_radix(pos, 16).ok()?);
    Some(rng)
}

pub(crate) fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))
}

/// Fresh chains `0..cfg.chains`.
pub fn init_chains(cfg: &RunConfig) -> Result<Vec<ChainState>> {
    cfg.validate()?;
    (0..cfg.chains).map(|i| ChainState::new(cfg, i)).collect()
}

/// Advances every chain to `cfg.total_sweeps()` on `threads` workers
/// (0 = rayon default). Output is in chain-id order.
pub fn advance_chains(
    cfg: &RunConfig,
    chains: Vec<ChainState>,
    threads: usize,
) -> Result<Vec<ChainState>> {
    advance_chains_checkpointed(cfg, chains, threads, 0, |_| Ok(()))
}

/// As [`advance_chains`], handing each chain to `save` every `every` sweeps
/// and once at the end; `every = 0` saves only at the end.
pub fn advance_chains_checkpointed(
    cfg: &RunConfig,
    chains: Vec<ChainState>,
    threads: usize,
    every: u64,
    save: impl Fn(&ChainState) -> Result<()> + Sync,
) -> Result<Vec<ChainState>> {
    cfg.validate()?;
    let target = cfg.total_sweeps();
    let mut out: Vec<ChainState> = pool(threads)?.install(|| {
        chains
            .into_par_iter()
            .map(|mut c| {
                c.check_compatible(cfg)?;
                let action = ChainAction::build(cfg, &c.path)?;
                while c.sweeps_done < target {
                    let next = if every == 0 {
                        target
                    } else {
                        ((c.sweeps_done / every + 1) * every).min(target)
                    };
                    c.advance(cfg, &action, next);
                    if c.sweeps_done < target {
                        save(&c)?;
                    }
                }
                c.advance(cfg, &action, target);
                save(&c)?;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    out.sort_by_key(|c| c.id);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub chains: Vec<ChainState>,
    pub summary: EnsembleSummary,
    /// Chains whose own action trace fails [`equilibration_check`].
    pub suspect_chains: Vec<usize>,
    /// The check applied to the chain-averaged trace.
    pub mean_trace: Equilibration,
}

impl Ensemble {
    pub fn from_chains(cfg: &RunConfig, chains: Vec<ChainState>) -> Result<Self> {
        let acc: Vec<ChainMeasurements> = chains.iter().map(|c| c.measurements.clone()).collect();
        let summary = EnsembleSummary::from_chains(&acc, &cfg.measure)?;
        let suspect_chains = chains
            .iter()
            .filter(|c| c.equilibration() == Equilibration::Suspect)
            .map(|c| c.id)
            .collect();
        let len = chains.iter().map(|c| c.trace.len()).min().unwrap_or(0);
        let mean: Vec<f64> = (0..len)
            .map(|k| chains.iter().map(|c| c.trace[k].1).sum::<f64>() / chains.len() as f64)
            .collect();
        Ok(Self {
            chains,
            summary,
            suspect_chains,
            mean_trace: equilibration_check(&mean),
        })
    }
}

pub fn run_ensemble(cfg: &RunConfig, threads: usize) -> Result<Ensemble> {
    let chains = advance_chains(cfg, init_chains(cfg)?, threads)?;
    Ensemble::from_chains(cfg, chains)
}
