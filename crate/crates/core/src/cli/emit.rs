use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

use super::config::RunConfig;
use crate::error::{KornError, Result};
use crate::verify::SweepReport;

pub const SCHEMA_VERSION: u32 = 1;

/// Compact JSON with every float written as `{:.16e}` (17 significant digits),
/// so that values reparse to the same bits and reports diff cleanly.
struct FixedFloat;

impl Formatter for FixedFloat {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn write_null<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        CompactFormatter.write_null(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedFloat);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization of plain data");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    /// seconds since the Unix epoch; the only field that differs between reruns
    pub timestamp: u64,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub holds: usize,
    pub fails: usize,
    pub unconverged: usize,
    /// records without a verdict (solves, mesh dumps)
    pub informational: usize,
    pub all_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    pub records: Vec<serde_json::Value>,
    pub summary: Summary,
    pub environment: Environment,
}

impl Report {
    /// Counts verdicts from the `verdict` field of each record.
    pub fn new(config: RunConfig, records: Vec<serde_json::Value>) -> Self {
        let mut summary = Summary {
            records: records.len(),
            ..Summary::default()
        };
        for r in &records {
            match r.get("verdict").and_then(|v| v.as_str()) {
                Some("holds") => summary.holds += 1,
                Some("fails") => summary.fails += 1,
                Some("unconverged") => summary.unconverged += 1,
                _ => summary.informational += 1,
            }
        }
        summary.all_hold = summary.fails == 0 && summary.unconverged == 0;
        Report {
            schema_version: SCHEMA_VERSION,
            config,
            records,
            summary,
            environment: Environment::current(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> KornError + '_ {
    move |e| KornError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    let mut text = report.to_json();
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Sweep curve as CSV with header `h,lhs,rhs,ratio`.
pub fn write_sweep_csv(sweep: &SweepReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = io::BufWriter::new(file);
    sweep.write_csv(&mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
