//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs through the real binary wherever a criterion names an artifact, and
//! through the library for the exact-law checks. Long optional checks run
//! only with `GAUSSPATH_LONG=1`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use gausspath::action::assemble_quadratic;
use gausspath::basis::{build_centers, CenterMode};
use gausspath::gauge::{
    average_lagrangian, compare_potential_fits, lattice_centers, loop_links, su2::Su2, wilson_loop,
    GaugeFieldState, GaugeGrid, Group, WilsonLoopSpec, PAIRS,
};
use gausspath::observables::{jackknife, MeasureConfig};
use gausspath::sampler::{advance_chains, init_chains, RunConfig, Updater};
use gausspath_cli::artifacts::read_csv;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

struct Outcome {
    id: &'static str,
    pass: Option<bool>,
    lines: Vec<String>,
}

impl Outcome {
    fn new(id: &'static str) -> Self {
        Self {
            id,
            pass: Some(true),
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.lines
            .push(format!("    [{}] {what}", if ok { "ok" } else { "FAILED" }));
        if !ok {
            self.pass = Some(false);
        }
    }

    fn note(&mut self, what: String) {
        self.lines.push(format!("    {what}"));
    }
}

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets")
}

fn work_dir() -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&d).unwrap();
    d
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn simulate(config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_gausspath"))
        .env_remove("GAUSSPATH_SEED")
        .args(["simulate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&o.stderr).into_owned())
    }
}

/// A preset with some `key = value` lines replaced.
fn variant(preset: &str, name: &str, changes: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(presets().join(preset)).unwrap();
    for (k, v) in changes {
        let line = text
            .lines()
            .find(|l| l.split('=').next().is_some_and(|x| x.trim() == *k))
            .unwrap_or_else(|| panic!("{preset} has no {k}"))
            .to_string();
        text = text.replace(&line, &format!("{k} = {v}"));
    }
    let p = work_dir().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

// 1 ----------------------------------------------------------------------

fn conditions() -> Outcome {
    let mut o = Outcome::new("1 condition reproduction A-D");
    let published = [
        ("A", 2.0, 0.389),
        ("B", 1.0, 0.433),
        ("C", 0.5, 0.464),
        ("D", 0.1, 0.488),
    ];
    let mut means = Vec::new();
    for (name, width, target) in published {
        let out = work_dir().join(format!("cond{name}"));
        let t = Instant::now();
        if let Err(e) = simulate(&presets().join(format!("cond{name}.conf")), &out, threads()) {
            o.check(false, format!("{name}: simulate failed: {e}"));
            continue;
        }
        let secs = t.elapsed().as_secs_f64();
        let msq = read_csv(&out.join("msq.csv"), &["chain", "msq"]).unwrap();
        let e = jackknife(&column(&msq, 1)).unwrap();
        let dev = (e.mean - target).abs();
        o.check(
            dev <= 3.0 * e.err && dev <= 0.02,
            format!(
                "{name} (xi {width}): <msq> = {:.4} ± {:.4} over {} chains, reference {target}, |diff| {:.4} (3σ {:.4}, abs 0.02), {secs:.0} s on {} thread(s)",
                e.mean,
                e.err,
                msq.len(),
                dev,
                3.0 * e.err,
                threads()
            ),
        );
        if let Ok(t) = read_csv(&out.join("msq_thinned.csv"), &["chain", "msq"]) {
            let et = jackknife(&column(&t, 1)).unwrap();
            o.note(format!(
                "{name} thinned mode (reported separately): {:.4} ± {:.4}",
                et.mean, et.err
            ));
        }
        o.check(
            msq.len() >= 100,
            format!("{name}: {} chains (need ≥ 100)", msq.len()),
        );
        means.push(e.mean);
    }
    o.check(
        means.len() == 4 && means.windows(2).all(|w| w[0] < w[1]),
        format!("monotone A < B < C < D: {means:.4?}"),
    );
    o
}

// 2 ----------------------------------------------------------------------

fn correlator() -> Outcome {
    let mut o = Outcome::new("2 correlator, condition D");
    let Ok(rows) = read_csv(&work_dir().join("condD/corr.csv"), &["tau", "C", "err"]) else {
        o.check(false, "condition D corr.csv missing".into());
        return o;
    };
    let mut worst: (f64, f64) = (0.0, 0.0);
    for r in rows.iter().filter(|r| r[0] <= 2.0 + 1e-12) {
        let d = (r[1] / (0.5 * (-r[0]).exp()) - 1.0).abs();
        if d > worst.1 {
            worst = (r[0], d);
        }
    }
    o.check(
        worst.1 <= 0.10,
        format!(
            "max |C/0.5e^-τ − 1| on τ ≤ 2: {:.2}% at τ = {:.1} (limit 10%)",
            100.0 * worst.1,
            worst.0
        ),
    );
    let coarse: Vec<&Vec<f64>> = [2.0, 2.5, 3.0, 3.5, 4.0]
        .iter()
        .filter_map(|t| rows.iter().find(|r| (r[0] - t).abs() < 1e-9))
        .collect();
    let positive = rows
        .iter()
        .filter(|r| r[0] <= 4.0 + 1e-12)
        .all(|r| r[1] > 0.0);
    let decreasing = coarse.len() == 5 && coarse.windows(2).all(|w| w[1][1] < w[0][1]);
    o.check(
        positive && decreasing,
        format!(
            "C > 0 for τ ≤ 4 and decreasing at τ = 2, 2.5, …, 4: {:?}",
            coarse
                .iter()
                .map(|r| format!("{:.4}±{:.4}", r[1], r[2]))
                .collect::<Vec<_>>()
        ),
    );
    o
}

// 3 ----------------------------------------------------------------------

fn distribution() -> Outcome {
    let mut o = Outcome::new("3 distribution, condition D");
    let dir = work_dir().join("condD");
    let (Ok(hist), Ok(counts)) = (
        read_csv(&dir.join("hist.csv"), &["q_center", "density", "err"]),
        read_csv(&dir.join("hist_counts.csv"), &["q_center", "count"]),
    ) else {
        o.check(false, "condition D histogram missing".into());
        return o;
    };
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut used = 0;
    for (h, c) in hist.iter().zip(&counts) {
        if h[0].abs() <= 2.0 && c[1] >= 1000.0 {
            used += 1;
            let exact = (-h[0] * h[0]).exp() / std::f64::consts::PI.sqrt();
            let d = (h[1] / exact - 1.0).abs();
            if d > worst.1 {
                worst = (h[0], d);
            }
        }
    }
    o.check(
        used > 0 && worst.1 <= 0.20,
        format!(
            "max |ρ/ρ_exact − 1| over {used} bins with |q| ≤ 2: {:.1}% at q = {:.2} (limit 20%)",
            100.0 * worst.1,
            worst.0
        ),
    );
    let far: Vec<(f64, f64)> = counts
        .iter()
        .filter(|c| c[0].is_finite() && c[0].abs() >= 2.5 && c[1] > 0.0)
        .map(|c| (c[0], c[1]))
        .collect();
    let reach = far.iter().map(|f| f.0.abs()).fold(0.0, f64::max);
    o.check(
        !far.is_empty(),
        format!(
            "nonzero counts beyond |q| = 2.5: {} bins, farthest bin centre |q| = {reach:.2}",
            far.len()
        ),
    );
    o
}

// 4 ----------------------------------------------------------------------

fn toy(updater: Updater, chains: usize, burn_in: u64, seed: u64) -> RunConfig {
    RunConfig {
        width: 1.0,
        period: 16.0,
        n_sum: 8,
        chains,
        burn_in,
        measure_sweeps: 0,
        updater,
        master_seed: seed,
        center_mode: CenterMode::Uniform,
        trace_stride: burn_in,
        measure: MeasureConfig {
            n_tau: 1000,
            bins: 1,
            q_max: 4.0,
            lags: vec![0.0],
        },
        ..RunConfig::default()
    }
}

fn exact_law() -> Outcome {
    let mut o = Outcome::new("4 exact-law oracle, N_sum = 8");
    let t = Instant::now();
    let hb = toy(Updater::Heatbath, 4000, 100, 404);
    let centers = build_centers(
        8,
        16.0,
        CenterMode::Uniform,
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    let a = assemble_quadratic(&centers, 1.0, 16.0, 1.0, 1.0, hb.band_cut).unwrap();
    let inv = DMatrix::from_row_slice(8, 8, &a.dense())
        .try_inverse()
        .unwrap();

    let chains = advance_chains(&hb, init_chains(&hb).unwrap(), threads()).unwrap();
    let n = chains.len() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..8 {
        for j in i..8 {
            let prod: Vec<f64> = chains
                .iter()
                .map(|c| c.path().amplitudes()[i] * c.path().amplitudes()[j])
                .collect();
            let m = prod.iter().sum::<f64>() / n;
            let sd = (prod.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            worst = worst.max((m - inv[(i, j)]).abs() / (sd / n.sqrt()));
        }
    }
    o.check(
        worst < 5.0,
        format!("heat-bath covariance vs A⁻¹, 36 entries, 4000 independent chains: worst {worst:.2} SE (limit 5)"),
    );

    let mh = toy(Updater::Metropolis, 20_000, 400, 405);
    let chains = advance_chains(&mh, init_chains(&mh).unwrap(), threads()).unwrap();
    let sd = inv[(0, 0)].sqrt();
    let law = Normal::new(0.0, sd).unwrap();
    let bins = 20;
    let edges: Vec<f64> = (1..bins)
        .map(|k| law.inverse_cdf(k as f64 / bins as f64))
        .collect();
    let mut counts = vec![0.0; bins];
    for c in &chains {
        let q = c.path().amplitudes()[0];
        counts[edges.partition_point(|&e| e <= q)] += 1.0;
    }
    let expect = chains.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    o.check(
        p > 0.01,
        format!("Metropolis site-0 marginal vs N(0, (A⁻¹)₀₀): χ² = {chi2:.1} on {} dof, p = {p:.3} (need > 0.01)", bins - 1),
    );
    let secs = t.elapsed().as_secs_f64();
    o.check(secs <= 60.0, format!("runtime {secs:.1} s (limit 60 s)"));
    o
}

// 5 ----------------------------------------------------------------------

fn oracle() -> Outcome {
    let mut o = Outcome::new("5 analytic/quadrature equivalence");
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_gausspath"))
        .env_remove("GAUSSPATH_SEED")
        .arg("oracle")
        .output()
        .unwrap();
    let secs = t.elapsed().as_secs_f64();
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for l in text.lines() {
        o.note(l.to_string());
    }
    let checks = text
        .lines()
        .filter(|l| l.ends_with("PASS") || l.ends_with("FAIL"))
        .count();
    o.check(
        out.status.success() && !text.contains("FAIL") && checks == 9,
        format!("oracle exit {:?}, {checks} checks", out.status.code()),
    );
    o.check(secs <= 120.0, format!("runtime {secs:.1} s (limit 120 s)"));
    o
}

// 6 ----------------------------------------------------------------------

fn is_unitary(u: Su2, tol: f64) -> bool {
    let m = u.matrix().map(|r| r.map(|(re, im)| Complex64::new(re, im)));
    (0..2).all(|i| {
        (0..2).all(|j| {
            let uu: Complex64 = (0..2).map(|k| m[i][k] * m[j][k].conj()).sum();
            let id = if i == j { 1.0 } else { 0.0 };
            (uu - id).norm() <= tol
        })
    }) && {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        (det - 1.0).norm() <= tol
    }
}

fn gauge() -> Outcome {
    let mut o = Outcome::new("6 gauge sector");
    let t = Instant::now();

    // (a)
    let mut zero_ok = true;
    for group in [Group::U1, Group::SU2] {
        let s = GaugeFieldState::new(group, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
        zero_ok &= GaugeGrid::new(&s, 0.25).unwrap().action() == 0.0;
        zero_ok &= average_lagrangian(&s, 0.25).unwrap() == 0.0;
        for &plane in &PAIRS {
            let spec = WilsonLoopSpec {
                plane,
                r: 0.75,
                t: 0.5,
                anchor: [0.1, 0.3, 0.7, 1.9],
                max_segment: 0.125,
            };
            zero_ok &= wilson_loop(&s, &spec).unwrap() == 1.0;
        }
    }
    o.check(
        zero_ok,
        "(a) zero field: S = 0 and W = 1 exactly, U1 and SU2, all planes".into(),
    );

    // (b)
    let mut s = GaugeFieldState::new(Group::SU2, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for a in s.amplitudes_mut() {
        *a = rng.random_range(-3.0..3.0);
    }
    let mut links = 0;
    let mut unitary = true;
    for &plane in &PAIRS {
        let spec = WilsonLoopSpec {
            plane,
            r: 0.75,
            t: 0.75,
            anchor: [0.2, 0.4, 0.6, 0.8],
            max_segment: 0.125,
        };
        let seg = loop_links(&s, &spec).unwrap();
        links += seg.len();
        unitary &= seg.iter().all(|u| is_unitary(*u, 1e-10));
        unitary &= is_unitary(seg.iter().fold(Su2::IDENTITY, |a, b| a.mul(*b)), 1e-10);
    }
    o.check(
        unitary,
        format!("(b) {links} SU2 segment factors and their loop products unitary to 1e-10"),
    );

    // (c), (d)
    let runs = [
        ("u1", "gauge_u1.conf", 0.5f64, vec![]),
        (
            "u1_half",
            "gauge_u1.conf",
            0.25,
            vec![
                ("gauge.size", "1"),
                ("gauge.width", "0.25"),
                ("gauge.loop_r", "0.125,0.25,0.375"),
                ("gauge.loop_t", "0.125,0.25,0.375"),
            ],
        ),
        ("su2", "gauge_su2.conf", 0.5, vec![]),
        (
            "su2_half",
            "gauge_su2.conf",
            0.25,
            vec![
                ("gauge.size", "1"),
                ("gauge.width", "0.25"),
                ("gauge.loop_r", "0.125,0.25,0.375"),
                ("gauge.loop_t", "0.125,0.25,0.375"),
            ],
        ),
    ];
    let mut lbar = Vec::new();
    for (name, preset, width, changes) in &runs {
        let cfg = variant(preset, &format!("{name}.conf"), changes);
        let out = work_dir().join(name);
        if let Err(e) = simulate(&cfg, &out, threads()) {
            o.check(false, format!("{name}: simulate failed: {e}"));
            return o;
        }
        let rows = read_csv(&out.join("lbar.csv"), &["chain", "Lbar"]).unwrap();
        let e = jackknife(&column(&rows, 1)).unwrap();
        o.note(format!(
            "{name}: xi {width}, <Lbar> = {:.4} ± {:.4}, <Lbar>·xi⁴ = {:.5}",
            e.mean,
            e.err,
            e.mean * width.powi(4)
        ));
        lbar.push((e.mean * width.powi(4), e));
    }
    for (k, group) in [(0, "U1"), (2, "SU2")] {
        let (a, b) = (lbar[k].0, lbar[k + 1].0);
        let d = (a / b - 1.0).abs();
        o.check(
            d <= 0.15,
            format!(
                "(c) {group}: <Lbar>·xi⁴ at xi 0.5 vs 0.25 differ by {:.2}% (limit 15%)",
                100.0 * d
            ),
        );
    }
    let (u1, su2) = (lbar[0].1, lbar[2].1);
    o.check(
        su2.mean < 3.0 * u1.mean,
        format!(
            "(d) <Lbar_SU2> = {:.4} ± {:.4} < 3·<Lbar_U1> = {:.4} ± {:.4}",
            su2.mean,
            su2.err,
            3.0 * u1.mean,
            3.0 * u1.err
        ),
    );
    let secs = t.elapsed().as_secs_f64();
    o.check(
        secs <= 1800.0,
        format!("runtime {secs:.0} s (limit 1800 s)"),
    );
    o
}

fn potential_shapes() -> Outcome {
    let mut o = Outcome::new("6(e) potential shapes (optional)");
    if std::env::var("GAUSSPATH_LONG").as_deref() != Ok("1") {
        o.pass = None;
        o.note("multi-hour; set GAUSSPATH_LONG=1 to run".into());
        return o;
    }
    let changes = [
        ("gauge.size", "4"),
        ("gauge.n_sum4", "256"),
        ("gauge.loop_r", "0.5,0.75,1,1.25,1.5"),
        ("gauge.loop_t", "0.5,1,1.5"),
        ("sampler.burn_in", "10000"),
        ("sampler.measure_sweeps", "10000"),
        ("sampler.thinning", "50"),
    ];
    for (group, preset, want_coulomb) in [
        ("U1", "gauge_u1.conf", true),
        ("SU2", "gauge_su2.conf", false),
    ] {
        let cfg = variant(preset, &format!("long_{group}.conf"), &changes);
        let out = work_dir().join(format!("long_{group}"));
        if let Err(e) = simulate(&cfg, &out, threads()) {
            o.check(false, format!("{group}: simulate failed: {e}"));
            continue;
        }
        let v = read_csv(&out.join("potential.csv"), &["R", "V", "err"]).unwrap();
        let fit = compare_potential_fits(&column(&v, 0), &column(&v, 1)).unwrap();
        o.check(
            fit.prefers_coulomb() == want_coulomb,
            format!(
                "{group}: residual Coulomb {:.3e}, linear {:.3e}; expected {}",
                fit.coulomb_rss,
                fit.linear_rss,
                if want_coulomb { "Coulomb" } else { "linear" }
            ),
        );
    }
    o
}

// 7 ----------------------------------------------------------------------

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let mut o = Outcome::new("7 determinism");
    let small = [
        (
            "osc",
            variant(
                "condD.conf",
                "det_osc.conf",
                &[
                    ("sampler.chains", "8"),
                    ("sampler.burn_in", "2000"),
                    ("sampler.measure_sweeps", "500"),
                ],
            ),
        ),
        (
            "gauge",
            variant(
                "gauge_su2.conf",
                "det_gauge.conf",
                &[
                    ("sampler.burn_in", "20"),
                    ("sampler.measure_sweeps", "20"),
                    ("gauge.loop_anchors", "1"),
                ],
            ),
        ),
    ];
    for (name, cfg) in &small {
        let mut outs = Vec::new();
        for (tag, th) in [("a", 1), ("b", 1), ("c", 4)] {
            let dir = work_dir().join(format!("det_{name}_{tag}"));
            let _ = fs::remove_dir_all(&dir);
            simulate(cfg, &dir, th).unwrap();
            outs.push(csv_bytes(&dir));
        }
        let files: Vec<&str> = outs[0].iter().map(|f| f.0.as_str()).collect();
        o.check(
            outs[0] == outs[1],
            format!(
                "{name}: two runs at --threads 1 byte-identical ({})",
                files.join(", ")
            ),
        );
        o.check(
            outs[0] == outs[2],
            format!("{name}: --threads 1 vs --threads 4 byte-identical"),
        );
    }
    o
}

fn main() -> ExitCode {
    // the harness passes libtest flags; only a name filter is honoured
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let all: [(&str, fn() -> Outcome); 8] = [
        ("criterion_1", conditions),
        ("criterion_2", correlator),
        ("criterion_3", distribution),
        ("criterion_4", exact_law),
        ("criterion_5", oracle),
        ("criterion_6", gauge),
        ("criterion_6e", potential_shapes),
        ("criterion_7", determinism),
    ];
    let mut failed = 0;
    for (key, f) in all {
        if !filter.is_empty() && !filter.iter().any(|p| key.contains(p.as_str())) {
            continue;
        }
        let o = f();
        let tag = match o.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed += 1;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("{tag} {}", o.id);
        for l in &o.lines {
            println!("{l}");
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
