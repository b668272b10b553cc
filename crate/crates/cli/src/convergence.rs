use std::io::Write;
use std::path::Path;

use re_are_core::efficiency::{ConvergenceRecord, SweepPoint};
use serde::Serialize;

pub const CONVERGENCE_HEADER: [&str; 9] = [
    "n_a",
    "n_b",
    "mu1",
    "sigma1_sq",
    "re",
    "are",
    "u",
    "rhs",
    "relative_gap",
];

/// One sweep grid point; `record` is `None` where the point failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub grid_n: Option<u64>,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub record: Option<ConvergenceRecord>,
    pub error: Option<String>,
}

impl From<&SweepPoint> for ConvergenceRow {
    fn from(p: &SweepPoint) -> Self {
        Self {
            grid_n: Some(p.grid_n),
            mu1: p.mu1,
            sigma1_sq: p.sigma1_sq,
            record: p.outcome.as_ref().ok().copied(),
            error: p.outcome.as_ref().err().map(|e| e.to_string()),
        }
    }
}

/// Seventeen significant digits: enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONVERGENCE_HEADER)?;
    for row in rows {
        let fields = match &row.record {
            Some(r) => vec![
                r.n_a.to_string(),
                r.n_b.to_string(),
                format_f64(r.mu1),
                format_f64(r.sigma1_sq),
                format_f64(r.re),
                format_f64(r.are),
                format_f64(r.u),
                format_f64(r.rhs),
                format_f64(r.relative_gap),
            ],
            None => {
                let mut f = vec![String::new(); CONVERGENCE_HEADER.len()];
                f[2] = format_f64(row.mu1);
                f[3] = format_f64(row.sigma1_sq);
                f
            }
        };
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_convergence_csv(rows, &mut buf).map_err(std::io::Error::other)?;
    std::fs::write(path, buf)
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}, column {column}: {reason}")]
    Field {
        line: usize,
        column: &'static str,
        reason: String,
    },
}

/// Parse text produced by [`write_convergence_csv`]. Grid values are not
/// part of the file, so `grid_n` is `None` in the result.
pub fn parse_convergence_csv(text: &str) -> Result<Vec<ConvergenceRow>, ParseError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CONVERGENCE_HEADER {
        return Err(ParseError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let float = |k: usize| {
            field(k).parse::<f64>().map_err(|e| ParseError::Field {
                line,
                column: CONVERGENCE_HEADER[k],
                reason: e.to_string(),
            })
        };
        let int = |k: usize| {
            field(k).parse::<u64>().map_err(|e| ParseError::Field {
                line,
                column: CONVERGENCE_HEADER[k],
                reason: e.to_string(),
            })
        };
        let mu1 = float(2)?;
        let sigma1_sq = float(3)?;
        let record = if field(0).is_empty() {
            None
        } else {
            Some(ConvergenceRecord {
                n_a: int(0)?,
                n_b: int(1)?,
                mu1,
                sigma1_sq,
                re: float(4)?,
                are: float(5)?,
                u: float(6)?,
                rhs: float(7)?,
                relative_gap: float(8)?,
            })
        };
        rows.push(ConvergenceRow {
            grid_n: None,
            mu1,
            sigma1_sq,
            record,
            error: None,
        });
    }
    Ok(rows)
}
