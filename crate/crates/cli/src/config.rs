//! Flat `section.key = value` run files.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use gausspath::action::LagrangianSpec;
use gausspath::gauge::{GaugeConfig, Group};
use gausspath::observables::lag_grid;
use gausspath::oracle::OracleOptions;
use gausspath::sampler::{RunConfig, Updater};

/// A config problem, anchored to a line when one is to blame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self { line: Some(l), msg } => write!(f, "line {l}: {msg}"),
            Self { line: None, msg } => f.write_str(msg),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Simulation {
    Oscillator(RunConfig),
    Gauge(GaugeConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub sim: Simulation,
    /// Sweeps between checkpoint writes; zero writes only at the end.
    pub checkpoint_every: u64,
    pub oracle: OracleOptions,
}

impl RunFile {
    pub fn master_seed(&self) -> u64 {
        match &self.sim {
            Simulation::Oscillator(c) => c.master_seed,
            Simulation::Gauge(c) => c.master_seed,
        }
    }

    pub fn chains(&self) -> usize {
        match &self.sim {
            Simulation::Oscillator(c) => c.chains,
            Simulation::Gauge(c) => c.chains,
        }
    }

    /// Every effective setting in canonical `key = value` form. Parsing the
    /// result gives back an identical `RunFile`.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: &dyn Display| out.push((k.to_string(), v.to_string()));
        match &self.sim {
            Simulation::Oscillator(c) => {
                put("run.kind", &"oscillator");
                put("run.seed", &c.master_seed);
                put("run.checkpoint_every", &self.checkpoint_every);
                put("path.n_sum", &c.n_sum);
                put("path.period", &c.period);
                put("path.width", &c.width);
                put("path.centers", &c.center_mode);
                put("action.mass", &c.spec.mass());
                put("action.potential", &join(c.spec.potential()));
                put("action.band_cut", &c.band_cut);
                put("sampler.chains", &c.chains);
                put("sampler.burn_in", &c.burn_in);
                put("sampler.measure_sweeps", &c.measure_sweeps);
                put("sampler.thinning", &c.thinning);
                put("sampler.updater", &c.updater);
                put("sampler.step", &c.step);
                put("sampler.tune_step", &c.tune_step);
                put("sampler.q_hot", &c.q_hot);
                put("sampler.trace_stride", &c.trace_stride);
                put("measure.n_tau", &c.measure.n_tau);
                put("measure.bins", &c.measure.bins);
                put("measure.q_max", &c.measure.q_max);
                put("measure.lags", &join(&c.measure.lags));
            }
            Simulation::Gauge(c) => {
                put("run.kind", &"gauge");
                put("run.seed", &c.master_seed);
                put("run.checkpoint_every", &self.checkpoint_every);
                put("gauge.group", &c.group);
                put("gauge.size", &c.size);
                put("gauge.width", &c.width);
                put("gauge.coupling", &c.coupling);
                put("gauge.n_sum4", &c.n_sum4);
                put("gauge.centers", &c.center_mode);
                put("gauge.grid_per_width", &c.grid_per_width);
                put("gauge.loop_r", &join(&c.loop_r));
                put("gauge.loop_t", &join(&c.loop_t));
                put("gauge.loop_anchors", &c.loop_anchors);
                put("sampler.chains", &c.chains);
                put("sampler.burn_in", &c.burn_in);
                put("sampler.measure_sweeps", &c.measure_sweeps);
                put("sampler.thinning", &c.thinning);
                put("sampler.step", &c.step);
                put("sampler.tune_step", &c.tune_step);
                put("sampler.hits", &c.hits);
                put("sampler.hot_start", &c.hot_start);
                put("sampler.trace_stride", &c.trace_stride);
            }
        }
        put("oracle.seed", &self.oracle.seed);
        put("oracle.coefficient_scale", &self.oracle.coefficient_scale);
        out
    }

    pub fn echo_text(&self) -> String {
        self.echo()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| err(Some(line), format!("`{key}`: cannot parse `{v}`: {e}"))),
        }
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError>
    where
        T::Err: Display,
    {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| err(Some(line), format!("`{key}`: cannot parse `{s}`: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.1)
    }
}

/// Parses a run file. `seed_override` replaces `run.seed`.
pub fn parse(text: &str, seed_override: Option<u64>) -> Result<RunFile, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| err(Some(line), format!("expected `key = value`, got `{body}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(err(Some(line), format!("empty key or value in `{body}`")));
        }
        if let Some((_, first)) = map.insert(k.to_string(), (v.to_string(), line)) {
            return Err(err(
                Some(line),
                format!("`{k}` already set on line {first}"),
            ));
        }
    }
    let mut e = Entries { map };

    let kind_line = e.line_of("run.kind");
    let kind: String = e
        .take("run.kind")?
        .unwrap_or_else(|| "oscillator".to_string());
    let mut checkpoint_every = 10_000u64;
    e.set("run.checkpoint_every", &mut checkpoint_every)?;
    let mut seed: u64 = e.take("run.seed")?.unwrap_or(0);
    if let Some(s) = seed_override {
        seed = s;
    }
    let mut oracle = OracleOptions::default();
    e.set("oracle.seed", &mut oracle.seed)?;
    e.set("oracle.coefficient_scale", &mut oracle.coefficient_scale)?;

    let sim = match kind.as_str() {
        "oscillator" => Simulation::Oscillator(oscillator(&mut e, seed)?),
        "gauge" => Simulation::Gauge(gauge(&mut e, seed)?),
        other => {
            return Err(err(
                kind_line,
                format!("unknown run.kind `{other}` (oscillator|gauge)"),
            ))
        }
    };
    if let Some((k, (_, line))) = e.map.iter().min_by_key(|(_, v)| v.1) {
        return Err(err(
            Some(*line),
            format!("unknown or unused key `{k}` for a {kind} run"),
        ));
    }
    Ok(RunFile {
        sim,
        checkpoint_every,
        oracle,
    })
}

fn oscillator(e: &mut Entries, seed: u64) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig {
        master_seed: seed,
        ..RunConfig::default()
    };
    e.set("path.n_sum", &mut c.n_sum)?;
    e.set("path.period", &mut c.period)?;
    e.set("path.width", &mut c.width)?;
    e.set("path.centers", &mut c.center_mode)?;

    let mass_line = e.line_of("action.mass");
    let mass: f64 = e.take("action.mass")?.unwrap_or(1.0);
    let omega_line = e.line_of("action.omega");
    let omega: Option<f64> = e.take("action.omega")?;
    let pot_line = e.line_of("action.potential");
    let potential = e.list("action.potential")?;
    c.spec = match (omega, potential) {
        (Some(_), Some(_)) => {
            return Err(err(
                pot_line.max(omega_line),
                "set either action.omega or action.potential, not both",
            ))
        }
        (_, Some(p)) => LagrangianSpec::new(mass, &p).map_err(|x| err(pot_line, x.to_string()))?,
        (w, None) => LagrangianSpec::harmonic(mass, w.unwrap_or(1.0))
            .map_err(|x| err(mass_line.or(omega_line), x.to_string()))?,
    };
    e.set("action.band_cut", &mut c.band_cut)?;

    e.set("sampler.chains", &mut c.chains)?;
    e.set("sampler.burn_in", &mut c.burn_in)?;
    e.set("sampler.measure_sweeps", &mut c.measure_sweeps)?;
    e.set("sampler.thinning", &mut c.thinning)?;
    let updater_line = e.line_of("sampler.updater");
    e.set::<Updater>("sampler.updater", &mut c.updater)?;
    e.set("sampler.step", &mut c.step)?;
    e.set("sampler.tune_step", &mut c.tune_step)?;
    e.set("sampler.q_hot", &mut c.q_hot)?;
    e.set("sampler.trace_stride", &mut c.trace_stride)?;

    e.set("measure.n_tau", &mut c.measure.n_tau)?;
    e.set("measure.bins", &mut c.measure.bins)?;
    e.set("measure.q_max", &mut c.measure.q_max)?;
    let lags_line = e.line_of("measure.lags");
    if let Some(l) = e.list("measure.lags")? {
        c.measure.lags = l;
    }
    let lag_max_line = e.line_of("measure.lag_max");
    let lag_max: Option<f64> = e.take("measure.lag_max")?;
    let lag_count: Option<usize> = e.take("measure.lag_count")?;
    if lag_max.is_some() || lag_count.is_some() {
        if lags_line.is_some() {
            return Err(err(
                lag_max_line.or(lags_line),
                "give measure.lags or measure.lag_max/lag_count, not both",
            ));
        }
        c.measure.lags = lag_grid(lag_max.unwrap_or(8.0), lag_count.unwrap_or(81));
    }

    c.validate().map_err(|x| {
        let msg = x.to_string();
        let line = if msg.contains("heat-bath") {
            updater_line
        } else {
            None
        };
        err(line, msg)
    })?;
    Ok(c)
}

fn gauge(e: &mut Entries, seed: u64) -> Result<GaugeConfig, ConfigError> {
    let mut c = GaugeConfig {
        master_seed: seed,
        ..GaugeConfig::default()
    };
    e.set::<Group>("gauge.group", &mut c.group)?;
    e.set("gauge.size", &mut c.size)?;
    e.set("gauge.width", &mut c.width)?;
    e.set("gauge.coupling", &mut c.coupling)?;
    let n_line = e.line_of("gauge.n_sum4");
    e.set("gauge.n_sum4", &mut c.n_sum4)?;
    e.set("gauge.centers", &mut c.center_mode)?;
    e.set("gauge.grid_per_width", &mut c.grid_per_width)?;
    let loop_line = e.line_of("gauge.loop_r").or(e.line_of("gauge.loop_t"));
    if let Some(r) = e.list("gauge.loop_r")? {
        c.loop_r = r;
    }
    if let Some(t) = e.list("gauge.loop_t")? {
        c.loop_t = t;
    }
    e.set("gauge.loop_anchors", &mut c.loop_anchors)?;

    e.set("sampler.chains", &mut c.chains)?;
    e.set("sampler.burn_in", &mut c.burn_in)?;
    e.set("sampler.measure_sweeps", &mut c.measure_sweeps)?;
    e.set("sampler.thinning", &mut c.thinning)?;
    e.set("sampler.step", &mut c.step)?;
    e.set("sampler.tune_step", &mut c.tune_step)?;
    e.set("sampler.hits", &mut c.hits)?;
    e.set("sampler.hot_start", &mut c.hot_start)?;
    e.set("sampler.trace_stride", &mut c.trace_stride)?;

    c.validate().map_err(|x| {
        let msg = x.to_string();
        let line = if msg.contains("fourth power") {
            n_line
        } else if msg.contains("loop") {
            loop_line
        } else {
            None
        };
        err(line, msg)
    })?;
    Ok(c)
}
