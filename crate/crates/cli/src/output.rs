//! CSV tables with a commented header holding the tool version and the fully
//! resolved configuration. Reals are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use shearless_core::ValidatedParams;

use crate::config::ExperimentConfig;

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

impl Value {
    fn render(&self, out: &mut String) {
        match self {
            Value::Int(v) => write!(out, "{v}").unwrap(),
            Value::Real(v) => out.push_str(&real(*v)),
            Value::Text(s) => out.push_str(s),
            Value::Empty => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<String>,
}

impl OutputTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn render(&self, header: &Header) -> String {
        let mut out = header.render(&self.name);
        for note in &self.notes {
            writeln!(out, "# note: {note}").unwrap();
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                v.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, header: &Header) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(self.file_name());
        fs::write(&path, self.render(header))?;
        Ok(path)
    }
}

/// Header block shared by every table of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    experiment: String,
    config: String,
    derived: Vec<(String, String)>,
}

impl Header {
    pub fn new(experiment: &str, config: &ExperimentConfig, params: &ValidatedParams) -> Self {
        Self {
            experiment: experiment.to_string(),
            config: config.to_toml(),
            derived: vec![
                ("period".into(), real(params.period())),
                ("kick_strength".into(), real(params.kick_strength())),
            ],
        }
    }

    fn render(&self, table: &str) -> String {
        let mut out = String::new();
        writeln!(out, "# {TOOL}").unwrap();
        writeln!(out, "# experiment: {}", self.experiment).unwrap();
        writeln!(out, "# table: {table}").unwrap();
        writeln!(out, "# resolved configuration:").unwrap();
        for line in self.config.lines().filter(|l| !l.trim().is_empty()) {
            writeln!(out, "#   {line}").unwrap();
        }
        for (k, v) in &self.derived {
            writeln!(out, "# derived: {k} = {v}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        let c = ExperimentConfig::default();
        let p = c.validate("").unwrap();
        Header::new("test", &c, &p)
    }

    #[test]
    fn reals_have_seventeen_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(-2.0), "-2.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -1e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_layout() {
        let mut t = OutputTable::new("demo", &["n", "x", "tag"]);
        t.push(vec![Value::Int(3), Value::Real(0.5), Value::Empty]);
        t.push(vec![4usize.into(), 1.5.into(), Value::Text("max".into())]);
        t.note("two rows");
        let text = t.render(&header());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# shearless-cli "));
        assert!(lines.iter().any(|l| *l == "# note: two rows"));
        let body: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, ["n,x,tag", "3,5.0000000000000000e-1,", "4,1.5000000000000000e0,max"]);
    }

    #[test]
    fn header_lists_every_key() {
        let text = OutputTable::new("demo", &["x"]).render(&header());
        for key in [
            "J = ", "B0 = ", "N = ", "omega = ", "drive = ", "quantum_substeps = ", "classical_substeps = ",
            "scheme = ", "output_dir = ", "[packet]", "j0 = ", "k0 = ", "delta_j = ", "[sos]", "nx = ",
            "[evolve]", "snapshots_per_period = ", "[rotation]", "p_lo = ", "[floquet]", "sigma = ",
            "prominence = ", "[concurrence]", "pairs = ", "[ensemble]", "rng_seed = ", "kick_strength = ",
            "period = ",
        ] {
            assert!(text.contains(key), "missing {key}");
        }
    }
}
