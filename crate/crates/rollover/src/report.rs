//! Calibration artifacts.
//!
//! A calibration run writes three files into its output directory:
//!
//! - `calibration.toml`: a [`SavedCalibration`] with the fitted model, the
//!   configuration, the seed and the format version.
//! - `residuals.csv`: one row per instrument with columns
//!   `id,maturity,model,lo,hi,residual,in_band`.
//! - `report.txt`: a readable summary.
//!
//! Saved calibrations can also be written and read as JSON; the format follows
//! the file extension.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rollover_core::calibration::{CalibrationConfig, CalibrationResult, InstrumentResidual};
use rollover_core::curve::{ModelSpec, PiecewiseShift};
use rollover_core::date::Date;
use serde::{Deserialize, Serialize};

/// Version of the saved-calibration schema.
pub const FORMAT_VERSION: u32 = 1;

/// File name of the saved calibration inside an output directory.
pub const CALIBRATION_FILE: &str = "calibration.toml";
/// File name of the residual table.
pub const RESIDUALS_FILE: &str = "residuals.csv";
/// File name of the summary.
pub const REPORT_FILE: &str = "report.txt";

/// A calibration together with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedCalibration {
    /// Schema version, [`FORMAT_VERSION`] when written.
    pub format_version: u32,
    /// Program name and version that wrote the file.
    pub generator: String,
    /// Valuation date of the quotes.
    pub date: Date,
    /// Master seed.
    pub seed: u64,
    /// Stages run.
    pub stages: u8,
    /// Configuration used.
    pub config: CalibrationConfig,
    /// Fit.
    pub result: CalibrationResult,
}

/// Failures while writing or reading artifacts.
#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    /// Filesystem error.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: String,
        /// Cause.
        #[source]
        source: std::io::Error,
    },
    /// Malformed saved calibration.
    #[error("{path}: {message}")]
    Parse {
        /// File involved.
        path: String,
        /// Explanation.
        message: String,
    },
    /// Schema version this build cannot read.
    #[error("{path}: format version {found}, expected {FORMAT_VERSION}")]
    Version {
        /// File involved.
        path: String,
        /// Version found.
        found: u32,
    },
    /// Saved model fails validation.
    #[error("{path}: {source}")]
    Model {
        /// File involved.
        path: String,
        /// Cause.
        #[source]
        source: rollover_core::Error,
    },
}

impl SavedCalibration {
    /// Wraps a calibration result.
    pub fn new(date: Date, config: &CalibrationConfig, result: CalibrationResult) -> Self {
        SavedCalibration {
            format_version: FORMAT_VERSION,
            generator: concat!("rollover ", env!("CARGO_PKG_VERSION")).into(),
            date,
            seed: result.seed,
            stages: result.stages,
            config: config.clone(),
            result,
        }
    }

    /// TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("saved calibration serializes to TOML")
    }

    /// JSON text.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("saved calibration serializes to JSON") + "\n"
    }

    /// Writes TOML or JSON according to the extension of `path`.
    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        let text = if is_json(path) { self.to_json() } else { self.to_toml() };
        write(path, &text)
    }

    /// Reads a TOML or JSON file and validates the stored model.
    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let parse = |message: String| ReportError::Parse {
            path: path.display().to_string(),
            message,
        };
        let saved: SavedCalibration = if is_json(path) {
            serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse(e.to_string()))?
        };
        if saved.format_version != FORMAT_VERSION {
            return Err(ReportError::Version {
                path: path.display().to_string(),
                found: saved.format_version,
            });
        }
        check_model(&saved.result.model).map_err(|source| ReportError::Model {
            path: path.display().to_string(),
            source,
        })?;
        Ok(saved)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("json")
}

fn write(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Validates a deserialized model, including its piecewise shifts.
pub fn check_model(m: &ModelSpec) -> rollover_core::Result<()> {
    for p in [&m.rc, &m.lambda, &m.phi] {
        PiecewiseShift::new(p.shift.knots().to_vec(), p.shift.values().to_vec())?;
    }
    m.validate()
}

/// Residual table as CSV text.
pub fn residuals_csv(residuals: &[InstrumentResidual]) -> String {
    let mut s = String::from("id,maturity,model,lo,hi,residual,in_band\n");
    for r in residuals {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e},{}",
            r.id,
            r.maturity,
            r.model,
            r.lo,
            r.hi,
            r.residual,
            r.in_band()
        );
    }
    s
}

/// Readable summary of a calibration.
pub fn summary(saved: &SavedCalibration) -> String {
    let r = &saved.result;
    let mut s = String::new();
    let _ = writeln!(s, "{}", saved.generator);
    let _ = writeln!(s, "valuation date: {}", saved.date);
    let _ = writeln!(s, "stages: {}", saved.stages);
    let _ = writeln!(s, "seed: {}", saved.seed);
    let _ = writeln!(s, "factors: {}", r.model.dim());
    let _ = writeln!(s, "objective: {:e}", r.objective);
    let _ = writeln!(s, "objective evaluations: {}", r.evaluations);
    match (r.mu, saved.config.mu) {
        (Some(mu), Some(_)) => {
            let _ = writeln!(s, "stage 3 smoothness weight: {mu:e} (configured)");
        }
        (Some(mu), None) => {
            let _ = writeln!(s, "stage 3 smoothness weight: {mu:e} (automatic)");
            let _ = writeln!(
                s,
                "  rule: mu = max(H2, 1e-16) / ((K - 1) * 1e-8), where H2 is the stage 2 hinge"
            );
            let _ = writeln!(
                s,
                "  objective and K the number of monthly d0 knots, so a 1 bp step at every"
            );
            let _ = writeln!(s, "  knot costs as much as the stage 2 misfit");
        }
        _ => {}
    }
    let inside = r.residuals.iter().filter(|x| x.in_band()).count();
    let _ = writeln!(s, "instruments in band: {inside} of {}", r.residuals.len());
    for x in r.residuals.iter().filter(|x| !x.in_band()) {
        let _ = writeln!(
            s,
            "  out of band: {} model {:.10} band [{:.10}, {:.10}] excess {:.3} of width",
            x.id,
            x.model,
            x.lo,
            x.hi,
            x.excess_over_width()
        );
    }
    s
}

/// Writes the three artifacts into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, saved: &SavedCalibration) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let files = [
        (CALIBRATION_FILE, saved.to_toml()),
        (RESIDUALS_FILE, residuals_csv(&saved.result.residuals)),
        (REPORT_FILE, summary(saved)),
    ];
    let mut out = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write(&p, &text)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sample() -> SavedCalibration {
        let model = fixtures::basis_model(0).unwrap();
        let result = CalibrationResult {
            a0_bid: model.rc.shift.clone(),
            a0_ask: model.rc.shift.clone(),
            model,
            objective: 1.5e-7,
            mu: Some(0.25),
            residuals: vec![
                InstrumentResidual::new("OIS@1y".into(), 1.0, 0.99, 0.98, 1.0),
                InstrumentResidual::new("1m@0.5y".into(), 0.5, 2.0, 0.0, 1.0),
            ],
            trace: vec![1.0, 0.5, 1.5e-7],
            evaluations: 10,
            seed: 3,
            stages: 3,
        };
        SavedCalibration::new(fixtures::date(0), &CalibrationConfig::default(), result)
    }

    #[test]
    fn toml_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        for name in ["c.toml", "c.json"] {
            let p = dir.path().join(name);
            s.save(&p).unwrap();
            assert_eq!(SavedCalibration::load(&p).unwrap(), s);
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = sample();
        s.format_version = 99;
        let p = dir.path().join("c.toml");
        s.save(&p).unwrap();
        assert!(matches!(SavedCalibration::load(&p), Err(ReportError::Version { found: 99, .. })));
    }

    #[test]
    fn residual_table_flags_misses() {
        let csv = residuals_csv(&sample().result.residuals);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",true"));
        assert!(lines[2].ends_with(",false"));
    }

    #[test]
    fn summary_lists_out_of_band_instruments() {
        let mut s = sample();
        s.config.mu = None;
        let text = summary(&s);
        assert!(text.contains("out of band: 1m@0.5y"));
        assert!(text.contains("(automatic)"));
        assert!(!text.contains("out of band: OIS@1y"));
    }
}
