//! CSV tables, run manifests and gnuplot scripts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crate::error::CliError;

/// 17 significant digits, enough to round-trip any f64.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
#[derive(Debug, Clone)]
pub struct Table {
    columns: usize,
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width differs from header");
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, &self.text)?;
        Ok(path)
    }
}

/// Everything needed to rerun a command and reproduce its CSVs exactly.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub extras: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub started: SystemTime,
    pub elapsed: Duration,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# riskwave run manifest");
        let _ = writeln!(s, "tool=riskwave {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command={}", self.command);
        for (k, v) in self.config.iter().chain(&self.extras) {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "outputs={}", self.outputs.join(","));
        let started = self.started.duration_since(UNIX_EPOCH).unwrap_or_default();
        let _ = writeln!(s, "started_unix={}.{:03}", started.as_secs(), started.subsec_millis());
        let _ = writeln!(s, "elapsed_seconds={:.3}", self.elapsed.as_secs_f64());
        s
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// gnuplot script drawing one line per value of a key column.
pub struct PlotScript {
    pub title: String,
    pub csv: String,
    pub x_column: usize,
    pub y_column: usize,
    pub key_column: usize,
    pub keys: Vec<String>,
    pub xlabel: String,
    pub ylabel: String,
}

impl PlotScript {
    pub fn render(&self) -> String {
        let stem = self.csv.trim_end_matches(".csv");
        let keys = self.keys.join(" ");
        format!(
            "set datafile separator ','\n\
             set terminal pngcairo size 900,600\n\
             set output '{stem}.png'\n\
             set title '{}'\n\
             set xlabel '{}'\n\
             set ylabel '{}'\n\
             set key outside right\n\
             plot for [k in \"{keys}\"] '{}' skip 1 using {}:(strcol({}) eq k ? ${} : 1/0) with linespoints title k\n",
            self.title, self.xlabel, self.ylabel, self.csv, self.x_column, self.key_column, self.y_column
        )
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, std::f64::consts::PI] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&["1".into(), "2".into()]);
        assert_eq!(t.text, "a,b\n1,2\n");
    }

    #[test]
    fn plot_script_references_csv() {
        let p = PlotScript {
            title: "t".into(),
            csv: "simulate.csv".into(),
            x_column: 1,
            y_column: 7,
            key_column: 2,
            keys: vec!["MA".into(), "SW".into()],
            xlabel: "t".into(),
            ylabel: "y".into(),
        };
        let s = p.render();
        assert!(s.contains("'simulate.csv'"));
        assert!(s.contains("\"MA SW\""));
        assert!(s.contains("simulate.png"));
    }
}
