//! Quote files: CSV and JSON loading and saving.
//!
//! CSV files carry the header `maturity,bid,ask,kind,unit[,entity]`. JSON
//! files hold an array of records with the same keys. The valuation date is
//! taken from the file stem (`quotes_2013-01-01.csv` → 2013-01-01).

use std::fs;
use std::path::Path;

use rollover_core::date::Date;
use rollover_core::market::{Quote, QuoteSet};
use serde::{Deserialize, Serialize};

/// File format of a quote file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Comma-separated values.
    Csv,
    /// JSON array of records.
    Json,
}

impl Format {
    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Result<Self, IoError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            _ => Err(IoError::Format(path.display().to_string())),
        }
    }
}

/// Failures while reading or writing files.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    /// Underlying filesystem error.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: String,
        /// Cause.
        #[source]
        source: std::io::Error,
    },
    /// Malformed row or field.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        /// One-based data row.
        row: usize,
        /// Column name.
        column: String,
        /// Explanation.
        message: String,
    },
    /// Header lacks a required column.
    #[error("header is missing the {0:?} column")]
    Unit(String),
    /// Unsupported file extension.
    #[error("unsupported quote file format: {0}")]
    Format(String),
    /// File stem does not end in an ISO date.
    #[error("no valuation date in file name {0}")]
    Date(String),
    /// Quote rejected by the market layer.
    #[error("row {row}: {source}")]
    Quote {
        /// One-based data row.
        row: usize,
        /// Cause.
        #[source]
        source: rollover_core::Error,
    },
}

/// One textual quote record, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteRecord {
    /// Maturity in years.
    pub maturity: String,
    /// Bid in the declared unit.
    pub bid: String,
    /// Ask in the declared unit.
    pub ask: String,
    /// Instrument kind label.
    pub kind: String,
    /// Unit label: `%`, `bp` or `dec`.
    pub unit: String,
    /// Bank ticker for CDS quotes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
}

const REQUIRED: [&str; 5] = ["maturity", "bid", "ask", "kind", "unit"];

/// Valuation date encoded at the end of a file stem.
pub fn date_from_path(path: &Path) -> Result<Date, IoError> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let bad = || IoError::Date(path.display().to_string());
    let tail = stem.get(stem.len().checked_sub(10).ok_or_else(bad)?..).ok_or_else(bad)?;
    tail.parse().map_err(|_| bad())
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses CSV text into records.
pub fn parse_csv(text: &str) -> Result<Vec<QuoteRecord>, IoError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| IoError::Parse {
            row: 0,
            column: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut idx = [0; 5];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| IoError::Unit(name.into()))?;
    }
    let entity = col("entity");
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| IoError::Parse {
            row: row_no,
            column: "record".into(),
            message: e.to_string(),
        })?;
        let field = |k: usize| -> Result<String, IoError> {
            row.get(idx[k]).map(str::to_string).ok_or_else(|| IoError::Parse {
                row: row_no,
                column: REQUIRED[k].into(),
                message: "missing field".into(),
            })
        };
        out.push(QuoteRecord {
            maturity: field(0)?,
            bid: field(1)?,
            ask: field(2)?,
            kind: field(3)?,
            unit: field(4)?,
            entity: entity.and_then(|k| row.get(k)).filter(|e| !e.is_empty()).map(str::to_string),
        });
    }
    Ok(out)
}

/// Normalizes records into a quote set.
pub fn to_quote_set(date: Date, records: &[QuoteRecord]) -> Result<QuoteSet, IoError> {
    let mut qs = QuoteSet::new(date);
    for (i, r) in records.iter().enumerate() {
        let wrap = |source| IoError::Quote { row: i + 1, source };
        let q = Quote::from_text(&r.maturity, &r.bid, &r.ask, &r.kind, &r.unit, r.entity.as_deref()).map_err(wrap)?;
        qs.insert(q).map_err(wrap)?;
    }
    Ok(qs)
}

/// Loads the textual records of a quote file.
pub fn load_records(path: &Path) -> Result<Vec<QuoteRecord>, IoError> {
    let text = read(path)?;
    match Format::from_path(path)? {
        Format::Csv => parse_csv(&text),
        Format::Json if text.trim().is_empty() => Ok(Vec::new()),
        Format::Json => serde_json::from_str(&text).map_err(|e| IoError::Parse {
            row: e.line(),
            column: format!("char {}", e.column()),
            message: e.to_string(),
        }),
    }
}

/// Loads and normalizes a quote file; the date comes from the file name.
pub fn load_quotes(path: &Path) -> Result<QuoteSet, IoError> {
    let date = date_from_path(path)?;
    to_quote_set(date, &load_records(path)?)
}

/// Records for a normalized quote set, in decimal units.
pub fn records_of(qs: &QuoteSet) -> Vec<QuoteRecord> {
    qs.quotes
        .iter()
        .map(|q| QuoteRecord {
            maturity: q.maturity.to_string(),
            bid: q.bid.to_string(),
            ask: q.ask.to_string(),
            kind: q.kind.as_str().into(),
            unit: "dec".into(),
            entity: q.entity.clone(),
        })
        .collect()
}

/// Writes a quote set in decimal units; the format follows the extension.
pub fn save_quotes(qs: &QuoteSet, path: &Path) -> Result<(), IoError> {
    let records = records_of(qs);
    let text = match Format::from_path(path)? {
        Format::Csv => {
            let mut s = String::from("maturity,bid,ask,kind,unit,entity\n");
            for r in &records {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.maturity,
                    r.bid,
                    r.ask,
                    r.kind,
                    r.unit,
                    r.entity.as_deref().unwrap_or("")
                ));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&records).expect("records serialize") + "\n",
    };
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One row of a per-bank coefficient file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CoefficientRecord {
    /// Number of interest-rate factors of the fit.
    pub factors: usize,
    /// Coefficient label: `bhat`, `bhat1`… or `bhat0(k)`.
    pub coefficient: String,
    /// Bank ticker or `Average`.
    pub entity: String,
    /// Value.
    pub value: f64,
}

/// Loads a coefficient file with header `factors,coefficient,entity,value`.
pub fn load_coefficients(path: &Path) -> Result<Vec<CoefficientRecord>, IoError> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| IoError::Parse {
                row: i + 1,
                column: "record".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rollover_core::market::QuoteKind;

    #[test]
    fn percent_and_bp_rows_normalize() {
        let text = "maturity,bid,ask,kind,unit\n0.5,0.50825,0.50825,IRS,%\n0.5,9.6,9.6,BASIS_1m3m,bp\n";
        let qs = to_quote_set(Date::new(2013, 1, 1).unwrap(), &parse_csv(text).unwrap()).unwrap();
        assert_eq!(qs.quotes[0].bid, 0.0050825);
        assert_eq!(qs.quotes[0].ask, 0.0050825);
        assert_eq!(qs.quotes[1].kind, QuoteKind::Basis1m3m);
        assert_eq!(qs.quotes[1].bid, 0.00096);
    }

    #[test]
    fn empty_text_is_empty_set() {
        assert!(parse_csv("").unwrap().is_empty());
        let qs = to_quote_set(Date::new(2013, 1, 1).unwrap(), &[]).unwrap();
        assert!(qs.is_empty());
    }

    #[test]
    fn missing_unit_column_is_reported() {
        let err = parse_csv("maturity,bid,ask,kind\n1,1,1,OIS\n").unwrap_err();
        assert!(matches!(err, IoError::Unit(c) if c == "unit"));
    }

    #[test]
    fn bad_number_reports_row() {
        let text = "maturity,bid,ask,kind,unit\n1,0.1,0.2,OIS,%\n2,x,0.2,OIS,%\n";
        let err = to_quote_set(Date::new(2013, 1, 1).unwrap(), &parse_csv(text).unwrap()).unwrap_err();
        assert!(matches!(err, IoError::Quote { row: 2, .. }));
    }

    #[test]
    fn date_comes_from_stem() {
        let d = date_from_path(Path::new("data/quotes_2017-10-31.csv")).unwrap();
        assert_eq!(d.to_string(), "2017-10-31");
        assert!(date_from_path(Path::new("quotes.csv")).is_err());
    }
}
