//! CSV tables, checkpoints and the run manifest.
//!
//! Every CSV has one header line and writes floats with 17 significant
//! digits, so values survive a write/read round trip unchanged.
//!
//! The manifest (`manifest.txt`) is plain text, one `key: value` per line:
//!
//! ```text
//! format: gausspath-manifest 1
//! version: <crate version>
//! kind: oscillator | gauge
//! config.<key>: <value>        every effective setting, see `RunFile::echo`
//! master_seed: <u64>
//! chain_seed.<i>: <u64>        one per chain
//! threads: <n>
//! resumed: true | false
//! started_unix: <seconds>
//! finished_unix: <seconds>
//! converged: true | false
//! suspect_chains: <comma list, possibly empty>
//! warning: <text>              zero or more
//! ```
//!
//! The `config.` lines alone rebuild the run file, and with it every CSV.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.txt";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary sibling so a crash never leaves a torn file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| io::Error::other(e.to_string()))?;
    fs::write(path, bytes)
}

/// Reads a numeric CSV, checking the header. Errors name the file.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let name = path.display();
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("cannot read {name}: {e}"))?;
    let got: Vec<String> = r
        .headers()
        .map_err(|e| format!("{name}: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    if got != header {
        return Err(format!(
            "{name}: expected columns {}, found {}",
            header.join(","),
            got.join(",")
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{name}: {e}"))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| format!("{name}:{}: `{f}`: {e}", i + 2))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn checkpoint_path(out: &Path, chain: usize) -> PathBuf {
    out.join(CHECKPOINT_DIR)
        .join(format!("chain_{chain:05}.txt"))
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.0 == key)
            .map(|e| e.1.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| {
                l.split_once(": ")
                    .map(|(k, v)| (k.to_string(), v.to_string()))
            })
            .collect();
        Self { entries }
    }

    /// The `config.` entries as a run file.
    pub fn config_text(&self) -> String {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("config.").map(|k| format!("{k} = {v}\n")))
            .collect()
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let xs = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE];
        write_csv(
            &p,
            &["i", "x"],
            xs.iter()
                .enumerate()
                .map(|(i, x)| vec![i.to_string(), fmt_f64(*x)]),
        )
        .unwrap();
        let rows = read_csv(&p, &["i", "x"]).unwrap();
        for (r, x) in rows.iter().zip(xs) {
            assert_eq!(r[1].to_bits(), x.to_bits());
        }
        assert!(read_csv(&p, &["i", "y"])
            .unwrap_err()
            .contains("expected columns"));
        assert!(read_csv(&dir.path().join("none.csv"), &["i"])
            .unwrap_err()
            .contains("none.csv"));
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest::default();
        m.push("config.path.width", 0.1);
        m.push("master_seed", 7);
        m.push("suspect_chains", "");
        let back = Manifest::parse(&m.to_text());
        assert_eq!(back.get("master_seed"), Some("7"));
        assert_eq!(back.config_text(), "path.width = 0.1\n");
    }
}
