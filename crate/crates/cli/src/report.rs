use std::io::Write;
use std::path::Path;

use gcrm::estimators::{z_score, WIDE_GATE_ENTRIES, Z_GATE, Z_GATE_WIDE};

use crate::CliError;

pub const HEADER: [&str; 7] = ["experiment", "param_json", "n_index", "estimate", "exact", "std_error", "z_score"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Monte Carlo comparison gated on `|z| <= 5`, or 6 in large reports.
    MonteCarlo,
    /// Deterministic comparison; `std_error` holds the tolerance and the row
    /// passes when `|z| <= 1`.
    Tolerance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n_index: String,
    pub estimate: f64,
    pub exact: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub gate: Gate,
}

impl Row {
    pub fn monte_carlo(n_index: impl Into<String>, estimate: f64, exact: f64, std_error: f64) -> Self {
        let z_score = z_score(estimate, exact, std_error);
        Self { n_index: n_index.into(), estimate, exact, std_error, z_score, gate: Gate::MonteCarlo }
    }

    pub fn tolerance(n_index: impl Into<String>, estimate: f64, exact: f64, tol: f64) -> Self {
        let z_score = z_score(estimate, exact, tol);
        Self { n_index: n_index.into(), estimate, exact, std_error: tol, z_score, gate: Gate::Tolerance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub param_json: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn z_gate(&self) -> f64 {
        let mc = self.rows.iter().filter(|r| r.gate == Gate::MonteCarlo).count();
        if mc > WIDE_GATE_ENTRIES {
            Z_GATE_WIDE
        } else {
            Z_GATE
        }
    }

    pub fn failures(&self) -> Vec<&Row> {
        let gate = self.z_gate();
        self.rows
            .iter()
            .filter(|r| {
                let limit = match r.gate {
                    Gate::MonteCarlo => gate,
                    Gate::Tolerance => 1.0,
                };
                !(r.z_score.abs() <= limit)
            })
            .collect()
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let real = |v: f64| format!("{v:.16e}");
        out.write_record(HEADER)?;
        for r in &self.rows {
            out.write_record([
                self.experiment.clone(),
                self.param_json.clone(),
                r.n_index.clone(),
                real(r.estimate),
                real(r.exact),
                real(r.std_error),
                real(r.z_score),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes to a temporary file next to `path`, then renames it into place.
    pub fn write_atomic(&self, path: &Path) -> Result<(), CliError> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        self.write_csv(tmp.as_file_mut())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
        Ok(())
    }
}
