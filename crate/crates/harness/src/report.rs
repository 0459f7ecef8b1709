use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qbc_core::adversary::{AttackResult, TracePoint};
use qbc_core::Operator;
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig, Suite};
use crate::error::{HarnessError, Result};

/// The parts of a [`RunConfig`] that determine the report; the output path
/// is left out so the same run written to two places gives the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub d: usize,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub directions: Vec<String>,
    pub restarts: usize,
    pub iterations: usize,
    pub kraus_rank: usize,
    pub initial_step: f64,
    pub step_decay: f64,
    pub decay_every: usize,
    pub permutation_samples: usize,
    pub random_states: usize,
    pub bound_samples: usize,
    pub format: OutputFormat,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        Self {
            d: c.d,
            seed: c.seed,
            suites: c.suites.clone(),
            directions: c.directions.iter().map(|d| d.label().to_string()).collect(),
            restarts: c.optimizer.restarts,
            iterations: c.optimizer.iterations,
            kraus_rank: c.optimizer.kraus_rank,
            initial_step: c.optimizer.initial_step,
            step_decay: c.optimizer.step_decay,
            decay_every: c.optimizer.decay_every,
            permutation_samples: c.permutation_samples,
            random_states: c.random_states,
            bound_samples: c.bound_samples,
            format: c.format,
        }
    }
}

/// One checked property. `measured` is the extremal deviation found and the
/// entry passes iff `measured <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub anchor: String,
    /// Number of cases the extremum was taken over.
    pub samples: usize,
}

impl SuiteEntry {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        tolerance: f64,
        anchor: impl Into<String>,
        samples: usize,
    ) -> Self {
        Self {
            name: name.into(),
            // NaN fails
            pass: measured <= tolerance,
            measured,
            tolerance,
            anchor: anchor.into(),
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    pub iteration: usize,
    pub best_p: f64,
}

impl From<&TracePoint> for TraceRow {
    fn from(t: &TracePoint) -> Self {
        Self { restart: t.restart, iteration: t.iteration, best_p: t.best_p }
    }
}

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_rows(m: &Operator) -> MatrixRows {
    m.row_iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEntry {
    pub direction: String,
    pub pi: Vec<usize>,
    pub m: usize,
    /// Cut of the best channel, written `{small side}|{large side}`.
    pub cut: String,
    pub achieved_p: f64,
    /// Best channel re-evaluated through the lifted Kraus sum.
    pub reevaluated_p: f64,
    /// Raw analytic bound; may exceed 1.
    pub bound: f64,
    pub best_restart: usize,
    pub ranks: [usize; 2],
    pub isometry_one: MatrixRows,
    pub isometry_two: MatrixRows,
    pub trace: Vec<TraceRow>,
}

impl AttackEntry {
    pub fn from_result(result: &AttackResult, pi: Vec<usize>, m: usize, reevaluated_p: f64) -> Self {
        Self {
            direction: result.direction.label().to_string(),
            pi,
            m,
            cut: result.cut.label(),
            achieved_p: result.achieved_p,
            reevaluated_p,
            bound: result.bound,
            best_restart: result.best_restart,
            ranks: [result.ranks.0, result.ranks.1],
            isometry_one: matrix_rows(&result.isometries.0),
            isometry_two: matrix_rows(&result.isometries.1),
            trace: result.trace.iter().map(TraceRow::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub suite: Suite,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub suites: Vec<SuiteEntry>,
    pub attacks: Vec<AttackEntry>,
    pub timings: Vec<Timing>,
}

impl Report {
    pub fn empty(config: &RunConfig) -> Self {
        Self { config: config.into(), suites: Vec::new(), attacks: Vec::new(), timings: Vec::new() }
    }

    pub fn all_pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&SuiteEntry> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn load_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.into(), source })?;
    Ok(serde_json::from_str(&text)?)
}

/// Path of the trace file for one attack when several are written:
/// `out.csv` becomes `out_0to1.csv`.
pub fn trace_path(path: &Path, direction: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{direction}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{direction}"),
    };
    path.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| HarnessError::Write { path: path.into(), source })
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["restart", "iteration", "best_p"])?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `report` as JSON, or its optimizer traces as CSV. With one attack
/// (or none, giving a header-only file) the CSV goes to `path`; with several,
/// each goes to [`trace_path`]. Returns the files written.
pub fn emit_report(report: &Report, path: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let werr = |source| HarnessError::Write { path: path.into(), source };
    match format {
        OutputFormat::Json => {
            let mut f = create(path)?;
            f.write_all(report.to_json()?.as_bytes()).map_err(werr)?;
            f.flush().map_err(werr)?;
            Ok(vec![path.to_path_buf()])
        }
        OutputFormat::Csv => {
            if report.attacks.len() <= 1 {
                let rows = report.attacks.first().map(|a| a.trace.as_slice()).unwrap_or(&[]);
                write_trace_csv(rows, create(path)?)?;
                return Ok(vec![path.to_path_buf()]);
            }
            let mut written = Vec::new();
            for attack in &report.attacks {
                let p = trace_path(path, &attack.direction);
                write_trace_csv(&attack.trace, create(&p)?)?;
                written.push(p);
            }
            Ok(written)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_pass_rule() {
        assert!(SuiteEntry::new("a", 1e-12, 1e-9, "", 1).pass);
        assert!(!SuiteEntry::new("a", 1e-8, 1e-9, "", 1).pass);
        assert!(!SuiteEntry::new("a", f64::NAN, 1e-9, "", 1).pass);
    }

    #[test]
    fn trace_paths() {
        assert_eq!(trace_path(Path::new("/tmp/out.csv"), "0to1"), PathBuf::from("/tmp/out_0to1.csv"));
        assert_eq!(trace_path(Path::new("out"), "1to0"), PathBuf::from("out_1to0"));
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        let rows = [TraceRow { restart: 0, iteration: 10, best_p: 0.25 }];
        write_trace_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "restart,iteration,best_p\n0,10,0.25\n");
    }
}
