use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gausspath_cli::artifacts::read_csv;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gausspath"));
    c.env_remove("GAUSSPATH_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "\
path.width = 0.5
path.n_sum = 40
sampler.chains = 6
sampler.burn_in = 300
sampler.measure_sweeps = 200
sampler.thinning = 20
run.seed = 99
run.checkpoint_every = 70
";

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
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
    out.sort();
    out
}

#[test]
fn dry_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.conf", SMALL);
    let out = tmp.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("band_width: "), "{text}");
    assert!(text.contains("memory_estimate_bytes: "));
    assert!(!out.exists());
}

#[test]
fn bad_config_exits_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.conf",
        "path.width = 0.5\n# fine\nsampler.burn_inn = 5\n",
    );
    let o = run(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.conf:3:"), "{err}");
    assert!(err.contains("sampler.burn_inn"));

    let o = run(&["simulate", "--config", "/nonexistent.conf"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeat_and_resume_give_identical_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.conf", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = run(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            d.to_str().unwrap(),
            "--threads",
            "2",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ref_csvs = csvs(&a);
    assert_eq!(
        ref_csvs.iter().map(|c| c.0.as_str()).collect::<Vec<_>>(),
        [
            "corr.csv",
            "hist.csv",
            "hist_counts.csv",
            "msq.csv",
            "msq_thinned.csv",
            "trace.csv"
        ]
    );
    assert_eq!(ref_csvs, csvs(&b));

    // stop after burn-in, then extend the same chains
    let c = tmp.path().join("c");
    let short = write(
        tmp.path(),
        "short.conf",
        &SMALL.replace("sampler.measure_sweeps = 200", "sampler.measure_sweeps = 0"),
    );
    assert!(
        run(&["simulate", "--config", &short, "--out", c.to_str().unwrap()])
            .status
            .success()
    );
    let o = run(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        c.to_str().unwrap(),
        "--resume",
        "--threads",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(ref_csvs, csvs(&c));
    let m = fs::read_to_string(c.join("manifest.txt")).unwrap();
    assert!(m.contains("resumed: true"));

    // checkpoints from another seed are refused
    let other = write(
        tmp.path(),
        "other.conf",
        &SMALL.replace("run.seed = 99", "run.seed = 98"),
    );
    let o = run(&[
        "simulate",
        "--config",
        &other,
        "--out",
        c.to_str().unwrap(),
        "--resume",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_rebuilds_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.conf", SMALL);
    let a = tmp.path().join("a");
    let o = bin()
        .args(["simulate", "--config", &cfg, "--out", a.to_str().unwrap()])
        .env("GAUSSPATH_SEED", "4242")
        .output()
        .unwrap();
    assert!(o.status.success());
    let m = gausspath_cli::artifacts::Manifest::parse(
        &fs::read_to_string(a.join("manifest.txt")).unwrap(),
    );
    assert_eq!(m.get("master_seed"), Some("4242"));
    assert!(matches!(m.get("converged"), Some("true" | "false")));
    assert!(m.get("chain_seed.5").is_some());
    let echo = write(tmp.path(), "echo.conf", &m.config_text());
    let b = tmp.path().join("b");
    assert!(
        run(&["simulate", "--config", &echo, "--out", b.to_str().unwrap()])
            .status
            .success()
    );
    assert_eq!(csvs(&a), csvs(&b));
}

#[test]
fn report_passes_jackknife_through() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("run1");
    fs::create_dir(&d).unwrap();
    fs::write(
        d.join("manifest.txt"),
        "kind: oscillator\nconfig.path.width: 0.5\nconfig.path.period: 20\nconfig.action.mass: 1\nconfig.action.potential: 0,0,0.5,0,0\n",
    )
    .unwrap();
    let msq = [0.41, 0.52, 0.47, 0.5, 0.39];
    let mut text = "chain,msq\n".to_string();
    for (i, v) in msq.iter().enumerate() {
        text += &format!("{i},{v}\n");
    }
    fs::write(d.join("msq.csv"), text).unwrap();
    fs::write(d.join("corr.csv"), "tau,C,err\n0,0.5,0.01\n1,0.18,0.01\n").unwrap();
    let o = run(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("hist.csv"));

    fs::write(d.join("hist.csv"), "q_center,density,err\n0,0.56,0.01\n").unwrap();
    let o = run(&["report", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    let fields: Vec<&str> = rows.lines().nth(1).unwrap().split(',').collect();
    let n = msq.len() as f64;
    let mean = msq.iter().sum::<f64>() / n;
    let var = msq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let got_mean: f64 = fields[3].parse().unwrap();
    let got_err: f64 = fields[4].parse().unwrap();
    assert!((got_mean - mean).abs() < 1e-15);
    assert!((got_err - (var / n).sqrt()).abs() < 1e-15);

    let o = run(&["report", tmp.path().join("nothing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_fails_on_injected_fault() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["oracle", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 9, "{text}");
    let rows = read_csv(
        &tmp.path().join("oracle.csv"),
        &["check", "delta", "analytic", "quadrature", "residual"],
    );
    assert!(rows.is_err(), "check column is text");

    let cfg = write(
        tmp.path(),
        "bug.conf",
        "oracle.coefficient_scale = 1.000001\n",
    );
    let o = run(&["oracle", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}

#[test]
fn gauge_run_writes_its_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "g.conf",
        "run.kind = gauge\ngauge.group = su2\nsampler.chains = 2\nsampler.burn_in = 10\nsampler.measure_sweeps = 10\nsampler.thinning = 5\ngauge.loop_r = 0.25,0.5\ngauge.loop_t = 0.25,0.5\ngauge.loop_anchors = 1\n",
    );
    let out = tmp.path().join("g");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w = read_csv(&out.join("wloop.csv"), &["R", "T_loop", "W", "err"]).unwrap();
    assert_eq!(w.len(), 4);
    assert!(w.iter().all(|r| r[2] > 0.0 && r[2] < 1.0));
    let v = read_csv(&out.join("potential.csv"), &["R", "V", "err"]).unwrap();
    assert_eq!(v.len(), 2);
    assert_eq!(
        read_csv(&out.join("lbar.csv"), &["chain", "Lbar"])
            .unwrap()
            .len(),
        2
    );
    let o = run(&["report", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("gauge-su2"));
}
