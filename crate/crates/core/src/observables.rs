//! Path observables: `q̄²`, the coordinate histogram and the two-point
//! correlator, plus chain-level jackknife reduction.
//!
//! `q̄²` and `C(τ)` are evaluated in closed form from the Gaussian overlap
//! kernel, so `C(0) = q̄²` holds exactly for every path.

use crate::action::overlap_coeff;
use crate::basis::{for_each_image, wrap, PathState};
use crate::error::{config, Result};

/// Kernel contributions beyond this many widths are below `e^-72` and dropped.
const KERNEL_CUTOFF: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureConfig {
    /// Time samples per path for the histogram.
    pub n_tau: usize,
    pub bins: usize,
    pub q_max: f64,
    pub lags: Vec<f64>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            n_tau: 2000,
            bins: 80,
            q_max: 4.0,
            lags: lag_grid(8.0, 81),
        }
    }
}

/// `n` equally spaced lags on `[0, max]`.
pub fn lag_grid(max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect(),
    }
}

impl MeasureConfig {
    pub fn validate(&self, period: f64) -> Result<()> {
        if self.n_tau < 1000 {
            return config(format!("measure.n_tau must be at least 1000, got {}", self.n_tau));
        }
        if self.bins == 0 || !(self.q_max > 0.0) {
            return config("histogram needs bins ≥ 1 and q_max > 0");
        }
        if let Some(l) = self.lags.iter().find(|&&l| !(0.0..=0.5 * period).contains(&l)) {
            return config(format!("lag {l} outside [0, T/2 = {}]", 0.5 * period));
        }
        Ok(())
    }
}

/// `(1/T) Σᵢⱼ qᵢqⱼ ∫ Gᵢ(τ'+lag) Gⱼ(τ') dτ'` for each lag.
fn shifted_bilinear(path: &PathState, lags: &[f64]) -> Vec<f64> {
    let n = path.len();
    let q = path.amplitudes();
    let c = path.centers();
    let period = path.period();
    let width = path.width();
    let cut = KERNEL_CUTOFF * width;
    let single_image = cut < 0.5 * period;

    // pairwise separations and weights, computed once
    let mut seps = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            seps.push(wrap(c[i] - c[j], period));
            weights.push(q[i] * q[j]);
        }
    }

    lags.iter()
        .map(|&lag| {
            let mut acc = 0.0;
            for (&s, &w) in seps.iter().zip(&weights) {
                if single_image {
                    let mut d = s - lag;
                    if d < -0.5 * period {
                        d += period;
                    } else if d >= 0.5 * period {
                        d -= period;
                    }
                    if d.abs() <= cut {
                        acc += w * overlap_coeff(d, width);
                    }
                } else {
                    for_each_image(wrap(s - lag, period), period, cut, |d| {
                        acc += w * overlap_coeff(d, width);
                    });
                }
            }
            acc / period
        })
        .collect()
}

/// `q̄² = (1/T) ∫₀ᵀ q(τ)² dτ`.
pub fn mean_sq(path: &PathState) -> f64 {
    shifted_bilinear(path, &[0.0])[0]
}

/// `C(τ) = (1/T) ∫₀ᵀ q(τ+τ') q(τ') dτ'` on the given lags.
pub fn correlator(path: &PathState, lags: &[f64]) -> Vec<f64> {
    shifted_bilinear(path, lags)
}

/// Trapezoid-rule `q̄²` on `n_points` nodes of the image-summed path.
pub fn mean_sq_quadrature(path: &PathState, n_points: usize) -> f64 {
    correlator_quadrature(path, 0.0, n_points)
}

pub fn correlator_quadrature(path: &PathState, lag: f64, n_points: usize) -> f64 {
    let h = path.period() / n_points as f64;
    let sum: f64 = (0..n_points)
        .map(|j| {
            let t = j as f64 * h;
            path.eval_periodic(t + lag) * path.eval_periodic(t)
        })
        .sum();
    h * sum / path.period()
}

/// Bin counts over `[−q_max, q_max)` with out-of-range meta-bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    q_max_bits: u64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(bins: usize, q_max: f64) -> Self {
        Self {
            q_max_bits: q_max.to_bits(),
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn q_max(&self) -> f64 {
        f64::from_bits(self.q_max_bits)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.q_max() / self.bins() as f64
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        -self.q_max() + (b as f64 + 0.5) * self.bin_width()
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.in_range() + self.underflow + self.overflow
    }

    pub fn add(&mut self, q: f64) {
        let q_max = self.q_max();
        if q < -q_max {
            self.underflow += 1;
        } else if q >= q_max {
            self.overflow += 1;
        } else {
            let b = ((q + q_max) / self.bin_width()) as usize;
            // guard against rounding at the upper edge
            let b = b.min(self.bins() - 1);
            self.counts[b] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    /// `counts / (in_range · bin_width)`; integrates to one over the range.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.in_range() as f64 * self.bin_width();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }
}

/// Samples the path at `n_tau` uniform times and bins the values.
pub fn histogram_accumulate(path: &PathState, n_tau: usize, hist: &mut Histogram) {
    let h = path.period() / n_tau as f64;
    for j in 0..n_tau {
        hist.add(path.eval(j as f64 * h));
    }
}

/// One measurement of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub chain: usize,
    pub sweep: u64,
    pub msq: f64,
    pub histogram: Histogram,
    pub correlator: Vec<f64>,
}

impl MeasurementRecord {
    pub fn measure(path: &PathState, cfg: &MeasureConfig, chain: usize, sweep: u64) -> Self {
        let mut histogram = Histogram::new(cfg.bins, cfg.q_max);
        histogram_accumulate(path, cfg.n_tau, &mut histogram);
        let correlator = correlator(path, &cfg.lags);
        Self {
            chain,
            sweep,
            msq: mean_sq(path),
            histogram,
            correlator,
        }
    }
}

/// Running per-chain accumulation of [`MeasurementRecord`]s.
///
/// The first record taken at the end of burn-in is the snapshot (one path per
/// chain); later thinned records are averaged separately. Histogram and
/// correlator accumulate over every record.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMeasurements {
    pub chain: usize,
    pub snapshot_msq: Option<f64>,
    pub thinned_msq_sum: f64,
    pub thinned_count: u64,
    pub records: u64,
    pub histogram: Histogram,
    pub correlator_sum: Vec<f64>,
}

impl ChainMeasurements {
    pub fn new(chain: usize, cfg: &MeasureConfig) -> Self {
        Self {
            chain,
            snapshot_msq: None,
            thinned_msq_sum: 0.0,
            thinned_count: 0,
            records: 0,
            histogram: Histogram::new(cfg.bins, cfg.q_max),
            correlator_sum: vec![0.0; cfg.lags.len()],
        }
    }

    pub fn push(&mut self, rec: &MeasurementRecord) {
        if self.snapshot_msq.is_none() {
            self.snapshot_msq = Some(rec.msq);
        } else {
            self.thinned_msq_sum += rec.msq;
            self.thinned_count += 1;
        }
        self.records += 1;
        self.histogram.merge(&rec.histogram);
        for (a, b) in self.correlator_sum.iter_mut().zip(&rec.correlator) {
            *a += b;
        }
    }

    pub fn thinned_msq(&self) -> Option<f64> {
        (self.thinned_count > 0).then(|| self.thinned_msq_sum / self.thinned_count as f64)
    }

    pub fn mean_correlator(&self) -> Vec<f64> {
        let n = self.records.max(1) as f64;
        self.correlator_sum.iter().map(|c| c / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub err: f64,
}

/// Leave-one-out jackknife of a statistic over `n` samples. `estimator(None)`
/// uses every sample, `estimator(Some(i))` drops sample `i`. With a single
/// sample the error is NaN.
pub fn jackknife_with(n: usize, estimator: impl Fn(Option<usize>) -> f64) -> Result<Estimate> {
    if n == 0 {
        return config("jackknife needs at least one sample");
    }
    let mean = estimator(None);
    if n == 1 {
        return Ok(Estimate {
            mean,
            err: f64::NAN,
        });
    }
    let loo: Vec<f64> = (0..n).map(|i| estimator(Some(i))).collect();
    let bar = loo.iter().sum::<f64>() / n as f64;
    let ss: f64 = loo.iter().map(|t| (t - bar) * (t - bar)).sum();
    Ok(Estimate {
        mean,
        err: ((n as f64 - 1.0) / n as f64 * ss).sqrt(),
    })
}

/// Jackknife of the plain mean, for which the leave-one-out spread reduces
/// to `s/√N`. Deviations are taken from the first value so constant input
/// is reproduced exactly.
pub fn jackknife(values: &[f64]) -> Result<Estimate> {
    let n = values.len();
    if n == 0 {
        return config("jackknife needs at least one sample");
    }
    let base = values[0];
    let mean = base + values.iter().map(|v| v - base).sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(Estimate {
            mean,
            err: f64::NAN,
        });
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(Estimate {
        mean,
        err: (ss / (n as f64 * (n as f64 - 1.0))).sqrt(),
    })
}

/// Exact oscillator curves at temperature `1/T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCurves {
    pub mass: f64,
    pub omega: f64,
    pub period: f64,
}

pub fn reference_curves(mass: f64, omega: f64, period: f64) -> ReferenceCurves {
    ReferenceCurves {
        mass,
        omega,
        period,
    }
}

impl ReferenceCurves {
    /// Squared ground-state wave function `√(mω/π) e^{−mωq²}`.
    pub fn density(&self, q: f64) -> f64 {
        let mw = self.mass * self.omega;
        (mw / std::f64::consts::PI).sqrt() * (-mw * q * q).exp()
    }

    /// `(1/2mω)·cosh(ω(T/2−τ))/sinh(ωT/2)`, written with decaying
    /// exponentials to stay finite for large `ωT`.
    pub fn correlator(&self, tau: f64) -> f64 {
        let w = self.omega;
        let t = self.period;
        ((-w * tau).exp() + (-w * (t - tau)).exp()) / (1.0 - (-w * t).exp())
            / (2.0 * self.mass * w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub chains: usize,
    /// End-of-burn-in snapshot, one path per chain.
    pub msq: Estimate,
    /// Chain means of the thinned measurements, when any were taken.
    pub msq_thinned: Option<Estimate>,
    pub bin_centers: Vec<f64>,
    pub density: Vec<Estimate>,
    pub lags: Vec<f64>,
    pub correlator: Vec<Estimate>,
    pub underflow: u64,
    pub overflow: u64,
}

impl EnsembleSummary {
    /// Reduces chain accumulations in chain-id order.
    pub fn from_chains(chains: &[ChainMeasurements], cfg: &MeasureConfig) -> Result<Self> {
        let mut sorted: Vec<&ChainMeasurements> = chains.iter().collect();
        sorted.sort_by_key(|c| c.chain);
        let n = sorted.len();
        if n == 0 {
            return config("no chains to summarize");
        }

        let snap: Vec<f64> = sorted
            .iter()
            .map(|c| c.snapshot_msq.unwrap_or(f64::NAN))
            .collect();
        let msq = jackknife(&snap)?;
        let thinned: Vec<f64> = sorted.iter().filter_map(|c| c.thinned_msq()).collect();
        let msq_thinned = if thinned.len() == n {
            Some(jackknife(&thinned)?)
        } else {
            None
        };

        let mut pooled = Histogram::new(cfg.bins, cfg.q_max);
        for c in &sorted {
            pooled.merge(&c.histogram);
        }
        let bw = pooled.bin_width();
        let total = pooled.in_range();
        let mut density = Vec::with_capacity(cfg.bins);
        for b in 0..cfg.bins {
            density.push(jackknife_with(n, |skip| {
                let (count, tot) = match skip {
                    None => (pooled.counts[b], total),
                    Some(i) => (
                        pooled.counts[b] - sorted[i].histogram.counts[b],
                        total - sorted[i].histogram.in_range(),
                    ),
                };
                if tot == 0 {
                    0.0
                } else {
                    count as f64 / (tot as f64 * bw)
                }
            })?);
        }

        let per_chain: Vec<Vec<f64>> = sorted.iter().map(|c| c.mean_correlator()).collect();
        let mut correlator = Vec::with_capacity(cfg.lags.len());
        for k in 0..cfg.lags.len() {
            let col: Vec<f64> = per_chain.iter().map(|v| v[k]).collect();
            correlator.push(jackknife(&col)?);
        }

        Ok(Self {
            chains: n,
            msq,
            msq_thinned,
            bin_centers: (0..cfg.bins).map(|b| pooled.bin_center(b)).collect(),
            density,
            lags: cfg.lags.clone(),
            correlator,
            underflow: pooled.underflow,
            overflow: pooled.overflow,
        })
    }
}
