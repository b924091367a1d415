//! `simulate`, `report` and `oracle`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gausspath::action::assemble_quadratic;
use gausspath::basis::build_centers;
use gausspath::gauge::{
    advance_gauge_chains_checkpointed, lattice_centers, GaugeChain, GaugeConfig, GaugeEnsemble,
    GaugeFieldState, GaugeGrid,
};
use gausspath::observables::{jackknife, reference_curves, Histogram};
use gausspath::oracle::{run_oracle, OracleCheck};
use gausspath::sampler::{
    advance_chains_checkpointed, derive_seed, equilibration_check, ChainState, Ensemble,
    Equilibration, RunConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::artifacts::{
    checkpoint_path, fmt_f64, read_csv, unix_now, write_atomic, write_csv, Manifest,
    CHECKPOINT_DIR, MANIFEST,
};
use crate::config::{RunFile, Simulation};

/// Process exit status, mapped from each failure class.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation, bad config or missing inputs.
    Usage(String),
    /// An analytic route disagrees with its quadrature.
    Oracle(String),
    /// Anything else, such as a failed write.
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Oracle(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Oracle(m) | Failure::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn core_err(e: gausspath::Error) -> Failure {
    match e {
        gausspath::Error::Io(_) => Failure::Runtime(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

pub struct SimulateArgs<'a> {
    pub run: &'a RunFile,
    pub out: &'a Path,
    pub threads: usize,
    pub resume: bool,
    pub dry_run: bool,
}

/// Runs an ensemble and writes its artifacts; with `dry_run`, only reports
/// what the run would cost.
pub fn simulate(args: &SimulateArgs, log: &mut dyn Write) -> Result<(), Failure> {
    if args.dry_run {
        return dry_run(args.run, args.threads, log).map_err(runtime);
    }
    fs::create_dir_all(args.out.join(CHECKPOINT_DIR)).map_err(runtime)?;
    let started = unix_now();
    let mut manifest = Manifest::default();
    manifest.push("format", "gausspath-manifest 1");
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    manifest.push(
        "kind",
        match args.run.sim {
            Simulation::Oscillator(_) => "oscillator",
            Simulation::Gauge(_) => "gauge",
        },
    );
    for (k, v) in args.run.echo() {
        manifest.push(format!("config.{k}"), v);
    }
    let seed = args.run.master_seed();
    manifest.push("master_seed", seed);
    for i in 0..args.run.chains() {
        manifest.push(format!("chain_seed.{i}"), derive_seed(seed, i));
    }
    manifest.push("threads", args.threads);
    manifest.push("resumed", args.resume);
    manifest.push("started_unix", started);

    let (suspect, warnings) = match &args.run.sim {
        Simulation::Oscillator(cfg) => simulate_oscillator(cfg, args)?,
        Simulation::Gauge(cfg) => simulate_gauge(cfg, args)?,
    };
    manifest.push("finished_unix", unix_now());
    // single chains fail the plateau test by chance at a few percent, so
    // only the chain-averaged trace sets the flag
    manifest.push("converged", warnings.is_empty());
    manifest.push(
        "suspect_chains",
        suspect
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    for w in &warnings {
        manifest.push("warning", w);
        writeln!(log, "warning: {w}").map_err(runtime)?;
    }
    write_atomic(&args.out.join(MANIFEST), &manifest.to_text()).map_err(runtime)?;
    writeln!(log, "wrote {}", args.out.display()).map_err(runtime)?;
    Ok(())
}

fn dry_run(run: &RunFile, threads: usize, log: &mut dyn Write) -> std::io::Result<()> {
    match &run.sim {
        Simulation::Oscillator(c) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(c.master_seed, 0));
            let centers = build_centers(c.n_sum, c.period, c.center_mode, &mut rng);
            let a = assemble_quadratic(
                &centers,
                c.width,
                c.period,
                c.spec.mass(),
                c.spec.omega(),
                c.band_cut,
            );
            let trace = c.total_sweeps() / c.trace_stride + 1;
            let per_chain = 16 * c.n_sum
                + 8 * c.measure.bins
                + 8 * c.measure.lags.len()
                + 16 * trace as usize
                + a.as_ref().map_or(0, |a| 16 * a.nonzeros());
            writeln!(log, "kind: oscillator")?;
            match &a {
                Ok(a) => writeln!(
                    log,
                    "band_width: {} (nonzeros {})",
                    a.band_width(),
                    a.nonzeros()
                )?,
                Err(e) => writeln!(log, "band_width: unavailable ({e})")?,
            }
            writeln!(log, "sweeps_per_chain: {}", c.total_sweeps())?;
            writeln!(
                log,
                "site_updates: {}",
                c.total_sweeps() as u128 * c.n_sum as u128 * c.chains as u128
            )?;
            writeln!(
                log,
                "measurements_per_chain: {}",
                1 + c.measure_sweeps / c.thinning
            )?;
            writeln!(log, "memory_estimate_bytes: {}", per_chain * c.chains)?;
        }
        Simulation::Gauge(c) => {
            let state = GaugeFieldState::new(
                c.group,
                lattice_centers(1, c.size),
                c.width,
                c.size,
                c.coupling,
            );
            let grid = state.and_then(|s| GaugeGrid::new(&s, c.grid_spacing()));
            writeln!(log, "kind: gauge")?;
            let m = grid.as_ref().map_or(0, |g| g.points_per_axis());
            let comps = 4 * c.group.colors();
            let grid_bytes = m.pow(4) * (comps + 6 * c.group.colors()) * 8;
            writeln!(log, "grid_points_per_axis: {m}")?;
            writeln!(log, "amplitudes_per_chain: {}", comps * c.n_sum4)?;
            writeln!(log, "sweeps_per_chain: {}", c.total_sweeps())?;
            writeln!(
                log,
                "memory_estimate_bytes: {}",
                grid_bytes * threads.max(1).min(c.chains) + c.chains * comps * c.n_sum4 * 8
            )?;
        }
    }
    Ok(())
}

fn load_or_new<T>(
    out: &Path,
    chains: usize,
    resume: bool,
    parse: impl Fn(&str) -> gausspath::Result<T>,
    fresh: impl Fn(usize) -> gausspath::Result<T>,
) -> Result<Vec<T>, Failure> {
    (0..chains)
        .map(|i| {
            let p = checkpoint_path(out, i);
            if resume && p.exists() {
                let text = fs::read_to_string(&p).map_err(runtime)?;
                parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
            } else {
                fresh(i).map_err(core_err)
            }
        })
        .collect()
}

fn save_to(out: &Path) -> impl Fn(usize, String) -> gausspath::Result<()> + Sync + '_ {
    move |id, text| write_atomic(&checkpoint_path(out, id), &text).map_err(gausspath::Error::Io)
}

fn mean_trace(traces: &[&[(u64, f64)]]) -> Vec<(u64, f64)> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    first
        .iter()
        .enumerate()
        .map(|(k, &(s, _))| {
            let sum: f64 = traces
                .iter()
                .map(|t| t.get(k).map_or(f64::NAN, |e| e.1))
                .sum();
            (s, sum / traces.len() as f64)
        })
        .collect()
}

fn write_trace(out: &Path, trace: &[(u64, f64)]) -> Result<(), Failure> {
    write_csv(
        &out.join("trace.csv"),
        &["sweep", "action"],
        trace.iter().map(|(s, v)| vec![s.to_string(), fmt_f64(*v)]),
    )
    .map_err(runtime)
}

fn simulate_oscillator(
    cfg: &RunConfig,
    args: &SimulateArgs,
) -> Result<(Vec<usize>, Vec<String>), Failure> {
    let chains = load_or_new(
        args.out,
        cfg.chains,
        args.resume,
        ChainState::from_checkpoint,
        |i| ChainState::new(cfg, i),
    )?;
    let save = save_to(args.out);
    let chains =
        advance_chains_checkpointed(cfg, chains, args.threads, args.run.checkpoint_every, |c| {
            save(c.id(), c.to_checkpoint())
        })
        .map_err(core_err)?;
    let ens = Ensemble::from_chains(cfg, chains).map_err(core_err)?;
    let out = args.out;
    let s = &ens.summary;

    write_csv(
        &out.join("msq.csv"),
        &["chain", "msq"],
        ens.chains.iter().map(|c| {
            vec![
                c.id().to_string(),
                fmt_f64(c.measurements().snapshot_msq.unwrap_or(f64::NAN)),
            ]
        }),
    )
    .map_err(runtime)?;
    if s.msq_thinned.is_some() {
        write_csv(
            &out.join("msq_thinned.csv"),
            &["chain", "msq"],
            ens.chains.iter().map(|c| {
                vec![
                    c.id().to_string(),
                    fmt_f64(c.measurements().thinned_msq().unwrap_or(f64::NAN)),
                ]
            }),
        )
        .map_err(runtime)?;
    } else {
        let _ = fs::remove_file(out.join("msq_thinned.csv"));
    }
    write_csv(
        &out.join("hist.csv"),
        &["q_center", "density", "err"],
        s.bin_centers
            .iter()
            .zip(&s.density)
            .map(|(q, d)| vec![fmt_f64(*q), fmt_f64(d.mean), fmt_f64(d.err)]),
    )
    .map_err(runtime)?;
    let mut pooled = Histogram::new(cfg.measure.bins, cfg.measure.q_max);
    for c in &ens.chains {
        pooled.merge(&c.measurements().histogram);
    }
    write_csv(
        &out.join("hist_counts.csv"),
        &["q_center", "count"],
        (0..pooled.bins())
            .map(|b| vec![fmt_f64(pooled.bin_center(b)), pooled.counts[b].to_string()])
            .chain([
                vec!["-inf".to_string(), pooled.underflow.to_string()],
                vec!["inf".to_string(), pooled.overflow.to_string()],
            ]),
    )
    .map_err(runtime)?;
    write_csv(
        &out.join("corr.csv"),
        &["tau", "C", "err"],
        s.lags
            .iter()
            .zip(&s.correlator)
            .map(|(t, c)| vec![fmt_f64(*t), fmt_f64(c.mean), fmt_f64(c.err)]),
    )
    .map_err(runtime)?;
    let traces: Vec<&[(u64, f64)]> = ens.chains.iter().map(|c| c.action_trace()).collect();
    write_trace(out, &mean_trace(&traces))?;

    let mut warnings = Vec::new();
    if ens.mean_trace == Equilibration::Suspect {
        warnings.push("chain-averaged action has not reached a plateau".to_string());
    }
    Ok((ens.suspect_chains, warnings))
}

fn simulate_gauge(
    cfg: &GaugeConfig,
    args: &SimulateArgs,
) -> Result<(Vec<usize>, Vec<String>), Failure> {
    let chains = load_or_new(
        args.out,
        cfg.chains,
        args.resume,
        GaugeChain::from_checkpoint,
        |i| GaugeChain::new(cfg, i),
    )?;
    let save = save_to(args.out);
    let chains = advance_gauge_chains_checkpointed(
        cfg,
        chains,
        args.threads,
        args.run.checkpoint_every,
        |c| save(c.id(), c.to_checkpoint()),
    )
    .map_err(core_err)?;
    let ens = GaugeEnsemble::from_chains(cfg, chains).map_err(core_err)?;
    let out = args.out;
    write_csv(
        &out.join("lbar.csv"),
        &["chain", "Lbar"],
        ens.chains.iter().map(|c| {
            vec![
                c.id().to_string(),
                fmt_f64(c.measurements().mean_lbar().unwrap_or(f64::NAN)),
            ]
        }),
    )
    .map_err(runtime)?;
    write_csv(
        &out.join("wloop.csv"),
        &["R", "T_loop", "W", "err"],
        ens.wloops
            .iter()
            .map(|(r, t, w)| vec![fmt_f64(*r), fmt_f64(*t), fmt_f64(w.mean), fmt_f64(w.err)]),
    )
    .map_err(runtime)?;
    write_csv(
        &out.join("potential.csv"),
        &["R", "V", "err"],
        ens.potential
            .iter()
            .map(|(r, v)| vec![fmt_f64(*r), fmt_f64(v.mean), fmt_f64(v.err)]),
    )
    .map_err(runtime)?;
    let traces: Vec<&[(u64, f64)]> = ens.chains.iter().map(|c| c.action_trace()).collect();
    let trace = mean_trace(&traces);
    write_trace(out, &trace)?;
    let mut warnings = Vec::new();
    let values: Vec<f64> = trace.iter().map(|t| t.1).collect();
    if equilibration_check(&values) == Equilibration::Suspect {
        warnings.push("chain-averaged action has not reached the saturation plateau".to_string());
    }
    Ok((ens.suspect_chains, warnings))
}

/// One row of the condition table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub kind: String,
    pub width: f64,
    pub value: gausspath::observables::Estimate,
    pub thinned: Option<gausspath::observables::Estimate>,
    pub reference: f64,
    /// Largest `|C/C_ref − 1|` for `τ ≤ 2`, or `L̄ξ⁴` for gauge runs.
    pub extra: f64,
    /// Largest `|ρ/ρ_ref − 1|` for `|q| ≤ 2`; NaN for gauge runs.
    pub extra2: f64,
}

fn need(dir: &Path, name: &str) -> Result<PathBuf, Failure> {
    let p = dir.join(name);
    if p.exists() {
        Ok(p)
    } else {
        Err(Failure::Usage(format!("missing artifact {}", p.display())))
    }
}

fn run_dirs(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    if dir.join(MANIFEST).exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let rd = fs::read_dir(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST).exists())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Failure::Usage(format!(
            "missing artifact {} (no run found in {} or its subdirectories)",
            dir.join(MANIFEST).display(),
            dir.display()
        )));
    }
    Ok(out)
}

fn manifest_f64(m: &Manifest, key: &str, file: &Path) -> Result<f64, Failure> {
    m.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Failure::Usage(format!("{}: no numeric `{key}`", file.display())))
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

pub fn report_rows(dir: &Path) -> Result<Vec<ReportRow>, Failure> {
    let mut rows = Vec::new();
    for run in run_dirs(dir)? {
        let mpath = run.join(MANIFEST);
        let m = Manifest::parse(&fs::read_to_string(&mpath).map_err(runtime)?);
        let name = run.file_name().map_or_else(
            || run.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        let usage = Failure::Usage;
        match m.get("kind") {
            Some("oscillator") => {
                let width = manifest_f64(&m, "config.path.width", &mpath)?;
                let period = manifest_f64(&m, "config.path.period", &mpath)?;
                let mass = manifest_f64(&m, "config.action.mass", &mpath)?;
                let pot: Vec<f64> = m
                    .get("config.action.potential")
                    .unwrap_or("")
                    .split(',')
                    .filter_map(|s| s.parse().ok())
                    .collect();
                let omega = (2.0 * pot.get(2).copied().unwrap_or(0.0) / mass)
                    .max(0.0)
                    .sqrt();
                let reference = reference_curves(mass, omega, period);
                let msq = read_csv(&need(&run, "msq.csv")?, &["chain", "msq"]).map_err(usage)?;
                let value = jackknife(&column(&msq, 1)).map_err(core_err)?;
                let thinned = match run.join("msq_thinned.csv") {
                    p if p.exists() => {
                        let t = read_csv(&p, &["chain", "msq"]).map_err(Failure::Usage)?;
                        Some(jackknife(&column(&t, 1)).map_err(core_err)?)
                    }
                    _ => None,
                };
                let corr = read_csv(&need(&run, "corr.csv")?, &["tau", "C", "err"])
                    .map_err(Failure::Usage)?;
                let corr_dev = corr
                    .iter()
                    .filter(|r| r[0] <= 2.0 + 1e-12)
                    .map(|r| (r[1] / reference.correlator(r[0]) - 1.0).abs())
                    .fold(0.0, f64::max);
                let hist = read_csv(&need(&run, "hist.csv")?, &["q_center", "density", "err"])
                    .map_err(Failure::Usage)?;
                let hist_dev = hist
                    .iter()
                    .filter(|r| r[0].abs() <= 2.0)
                    .map(|r| (r[1] / reference.density(r[0]) - 1.0).abs())
                    .fold(0.0, f64::max);
                rows.push(ReportRow {
                    run: name,
                    kind: "oscillator".into(),
                    width,
                    value,
                    thinned,
                    reference: reference.correlator(0.0),
                    extra: corr_dev,
                    extra2: hist_dev,
                });
            }
            Some("gauge") => {
                let width = manifest_f64(&m, "config.gauge.width", &mpath)?;
                let lbar = read_csv(&need(&run, "lbar.csv")?, &["chain", "Lbar"])
                    .map_err(Failure::Usage)?;
                need(&run, "wloop.csv")?;
                let value = jackknife(&column(&lbar, 1)).map_err(core_err)?;
                rows.push(ReportRow {
                    run: name,
                    kind: format!("gauge-{}", m.get("config.gauge.group").unwrap_or("?")),
                    width,
                    value,
                    thinned: None,
                    reference: f64::NAN,
                    extra: value.mean * width.powi(4),
                    extra2: f64::NAN,
                });
            }
            other => {
                return Err(Failure::Usage(format!(
                    "{}: unknown run kind {:?}",
                    mpath.display(),
                    other
                )))
            }
        }
    }
    Ok(rows)
}

pub fn report(dir: &Path, log: &mut dyn Write) -> Result<(), Failure> {
    let rows = report_rows(dir)?;
    let osc: Vec<&ReportRow> = rows.iter().filter(|r| r.kind == "oscillator").collect();
    let io = |e: std::io::Error| runtime(e);
    if !osc.is_empty() {
        writeln!(
            log,
            "{:<12} {:>6} {:>10} {:>9} {:>10} {:>9} {:>9} {:>10} {:>10}",
            "run", "xi", "msq", "err", "thinned", "err", "ref", "C dev≤2", "ρ dev≤2"
        )
        .map_err(io)?;
        for r in &osc {
            let (t, te) = r.thinned.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.err));
            writeln!(
                log,
                "{:<12} {:>6} {:>10.4} {:>9.4} {:>10.4} {:>9.4} {:>9.4} {:>9.1}% {:>9.1}%",
                r.run,
                r.width,
                r.value.mean,
                r.value.err,
                t,
                te,
                r.reference,
                100.0 * r.extra,
                100.0 * r.extra2
            )
            .map_err(io)?;
        }
        if osc.len() > 1 {
            let mut by_width = osc.clone();
            by_width.sort_by(|a, b| b.width.total_cmp(&a.width));
            let mono = by_width
                .windows(2)
                .all(|w| w[0].value.mean < w[1].value.mean);
            writeln!(
                log,
                "msq increases as xi decreases: {}",
                if mono { "yes" } else { "no" }
            )
            .map_err(io)?;
        }
    }
    for r in rows.iter().filter(|r| r.kind != "oscillator") {
        writeln!(
            log,
            "{:<12} {:<10} xi {:>6}  Lbar {:.5} ± {:.5}  Lbar·xi⁴ {:.5}",
            r.run, r.kind, r.width, r.value.mean, r.value.err, r.extra
        )
        .map_err(io)?;
    }
    let num = |x: Option<f64>| x.map_or_else(String::new, fmt_f64);
    write_csv(
        &dir.join("report.csv"),
        &[
            "run",
            "kind",
            "xi",
            "value",
            "err",
            "thinned",
            "thinned_err",
            "reference",
            "corr_dev",
            "density_dev",
        ],
        rows.iter().map(|r| {
            vec![
                r.run.clone(),
                r.kind.clone(),
                fmt_f64(r.width),
                fmt_f64(r.value.mean),
                fmt_f64(r.value.err),
                num(r.thinned.map(|e| e.mean)),
                num(r.thinned.map(|e| e.err)),
                fmt_f64(r.reference),
                fmt_f64(r.extra),
                fmt_f64(r.extra2),
            ]
        }),
    )
    .map_err(runtime)
}

/// Runs every analytic-vs-quadrature check; fails if any is out of tolerance.
pub fn oracle(
    run: &RunFile,
    out: Option<&Path>,
    log: &mut dyn Write,
) -> Result<Vec<OracleCheck>, Failure> {
    let checks = run_oracle(&run.oracle);
    let io = |e: std::io::Error| runtime(e);
    writeln!(
        log,
        "{:<22} {:<9} {:>12} {:>10}  result",
        "check", "measure", "worst", "tolerance"
    )
    .map_err(io)?;
    for c in &checks {
        writeln!(
            log,
            "{:<22} {:<9} {:>12.3e} {:>10.0e}  {}",
            c.name,
            c.measure,
            c.worst(),
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(runtime)?;
        write_csv(
            &dir.join("oracle.csv"),
            &["check", "delta", "analytic", "quadrature", "residual"],
            checks.iter().flat_map(|c| {
                c.rows.iter().map(|r| {
                    vec![
                        c.name.to_string(),
                        fmt_f64(r.key),
                        fmt_f64(r.analytic),
                        fmt_f64(r.quadrature),
                        fmt_f64(r.residual),
                    ]
                })
            }),
        )
        .map_err(runtime)?;
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(Failure::Oracle(format!(
            "oracle checks failed: {}",
            failed.join(", ")
        )))
    }
}
