//! Smooth periodic paths built from Gaussian bumps.
//!
//! A path on the time circle `[0, T)` is
//!
//! ```text
//! q(τ) = Σᵢ qᵢ · exp(−d(τ, τᵢ)² / ξ²)
//! ```
//!
//! where `d` is the signed minimal-image distance. Only the amplitudes `qᵢ`
//! are dynamical; centers, width and period are fixed for the life of a
//! state.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::error::{config, Error, Result};

/// Distances beyond this many widths contribute exactly zero in `f64` for
/// every kernel used in this crate (`exp(-40²/2)` underflows).
pub const IMAGE_CUTOFF: f64 = 40.0;

/// Signed minimal-image difference `a − b` on a circle of length `period`,
/// in `[−period/2, period/2)`.
pub fn periodic_delta(a: f64, b: f64, period: f64) -> Result<f64> {
    if !(period > 0.0) || !period.is_finite() {
        return config(format!("period must be positive, got {period}"));
    }
    Ok(wrap(a - b, period))
}

#[inline]
pub(crate) fn wrap(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    if r >= 0.5 * period {
        r - period
    } else {
        r
    }
}

/// Calls `f` for every periodic image `d + n·period` with `|d + n·period| <= cutoff`.
#[inline]
pub(crate) fn for_each_image(d: f64, period: f64, cutoff: f64, mut f: impl FnMut(f64)) {
    let n_max = ((cutoff + d.abs()) / period).ceil() as i64;
    for n in -n_max..=n_max {
        let img = d + n as f64 * period;
        if img.abs() <= cutoff {
            f(img);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMode {
    Uniform,
    Random,
}

impl FromStr for CenterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(CenterMode::Uniform),
            "random" => Ok(CenterMode::Random),
            other => config(format!("unknown center mode `{other}` (expected uniform|random)")),
        }
    }
}

impl std::fmt::Display for CenterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CenterMode::Uniform => "uniform",
            CenterMode::Random => "random",
        })
    }
}

/// Uniform mode places `τᵢ = i·T/N` for `i = 1..=N` (stored mod `T`, so the
/// last center sits at 0). Random mode draws i.i.d. uniform centers and sorts
/// them.
pub fn build_centers<R: Rng + ?Sized>(
    n_sum: usize,
    period: f64,
    mode: CenterMode,
    rng: &mut R,
) -> Vec<f64> {
    match mode {
        CenterMode::Uniform => (1..=n_sum)
            .map(|i| {
                if i == n_sum {
                    0.0
                } else {
                    (i as f64 * period / n_sum as f64) % period
                }
            })
            .collect(),
        CenterMode::Random => {
            let mut c: Vec<f64> = (0..n_sum).map(|_| rng.random_range(0.0..period)).collect();
            c.sort_by(f64::total_cmp);
            c
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    amplitudes: Vec<f64>,
    centers: Vec<f64>,
    width: f64,
    period: f64,
}

impl PathState {
    pub fn new(amplitudes: Vec<f64>, centers: Vec<f64>, width: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return config(format!("period must be positive, got {period}"));
        }
        if !(width > 0.0) || !width.is_finite() {
            return config(format!("width must be positive, got {width}"));
        }
        if centers.is_empty() {
            return config("a path needs at least one Gaussian center");
        }
        if amplitudes.len() != centers.len() {
            return config(format!(
                "{} amplitudes for {} centers",
                amplitudes.len(),
                centers.len()
            ));
        }
        if let Some(c) = centers.iter().find(|&&c| !(0.0..period).contains(&c)) {
            return config(format!("center {c} outside [0, {period})"));
        }
        Ok(Self {
            amplitudes,
            centers,
            width,
            period,
        })
    }

    pub fn zeros(centers: Vec<f64>, width: f64, period: f64) -> Result<Self> {
        Self::new(vec![0.0; centers.len()], centers, width, period)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Same geometry, new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Result<Self> {
        Self::new(amplitudes, self.centers.clone(), self.width, self.period)
    }

    /// Path value using the single minimal image of every bump.
    pub fn eval(&self, tau: f64) -> f64 {
        let inv_w2 = 1.0 / (self.width * self.width);
        let cut = IMAGE_CUTOFF * self.width;
        let mut acc = 0.0;
        for (&q, &c) in self.amplitudes.iter().zip(&self.centers) {
            let d = wrap(tau - c, self.period);
            if d.abs() <= cut {
                acc += q * (-d * d * inv_w2).exp();
            }
        }
        acc
    }

    /// Analytic `dq/dτ` of [`PathState::eval`].
    pub fn velocity(&self, tau: f64) -> f64 {
        let inv_w2 = 1.0 / (self.width * self.width);
        let cut = IMAGE_CUTOFF * self.width;
        let mut acc = 0.0;
        for (&q, &c) in self.amplitudes.iter().zip(&self.centers) {
            let d = wrap(tau - c, self.period);
            if d.abs() <= cut {
                acc += q * (-2.0 * d * inv_w2) * (-d * d * inv_w2).exp();
            }
        }
        acc
    }

    /// Path value with every periodic image of every bump summed. Differs
    /// from [`PathState::eval`] by at most `Σ|qᵢ|·exp(−(T/2)²/ξ²)`; used by
    /// the quadrature oracles.
    pub fn eval_periodic(&self, tau: f64) -> f64 {
        let inv_w2 = 1.0 / (self.width * self.width);
        let cut = IMAGE_CUTOFF * self.width;
        let mut acc = 0.0;
        for (&q, &c) in self.amplitudes.iter().zip(&self.centers) {
            let d0 = wrap(tau - c, self.period);
            for_each_image(d0, self.period, cut, |d| {
                acc += q * (-d * d * inv_w2).exp();
            });
        }
        acc
    }

    pub fn velocity_periodic(&self, tau: f64) -> f64 {
        let inv_w2 = 1.0 / (self.width * self.width);
        let cut = IMAGE_CUTOFF * self.width;
        let mut acc = 0.0;
        for (&q, &c) in self.amplitudes.iter().zip(&self.centers) {
            let d0 = wrap(tau - c, self.period);
            for_each_image(d0, self.period, cut, |d| {
                acc += q * (-2.0 * d * inv_w2) * (-d * d * inv_w2).exp();
            });
        }
        acc
    }

    /// Plain-text record: a `N_sum T xi` header followed by one `tau_i q_i`
    /// line per bump, all at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {:.16e} {:.16e}", self.len(), self.period, self.width).unwrap();
        for (c, q) in self.centers.iter().zip(&self.amplitudes) {
            writeln!(out, "{c:.16e} {q:.16e}").unwrap();
        }
        out
    }

    /// Parses the leading record of [`PathState::to_text`] from `lines`,
    /// consuming exactly `N_sum + 1` lines. `first_line` is the 1-based line
    /// number of the header, for error messages.
    pub fn parse_lines<'a>(
        lines: &mut impl Iterator<Item = &'a str>,
        first_line: usize,
    ) -> Result<Self> {
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: first_line,
            msg: "missing `N_sum T xi` header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: first_line,
                msg: format!("expected `N_sum T xi`, got `{header}`"),
            });
        }
        let n: usize = parse_field(fields[0], first_line)?;
        let period: f64 = parse_field(fields[1], first_line)?;
        let width: f64 = parse_field(fields[2], first_line)?;
        let mut centers = Vec::with_capacity(n);
        let mut amplitudes = Vec::with_capacity(n);
        for k in 0..n {
            let line_no = first_line + 1 + k;
            let line = lines.next().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected {n} bump lines, file ended after {k}"),
            })?;
            let mut it = line.split_whitespace();
            let (Some(c), Some(q), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `tau_i q_i`, got `{line}`"),
                });
            };
            centers.push(parse_field(c, line_no)?);
            amplitudes.push(parse_field(q, line_no)?);
        }
        Self::new(amplitudes, centers, width, period).map_err(|e| Error::Parse {
            line: first_line,
            msg: e.to_string(),
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::parse_lines(&mut text.lines(), 1)
    }
}

pub(crate) fn parse_field<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}
