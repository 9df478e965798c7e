//! CSV reports and training curves. Numbers are printed with fixed
//! precision so identical runs produce identical bytes.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use super::{CurvePoint, EvaluationRow};
use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 7] = [
    "level",
    "agent",
    "matches",
    "wins",
    "success_rate",
    "mean_moves",
    "seed",
];
const CURVE_HEADER: [&str; 5] = [
    "episode",
    "won",
    "cumulative_success_rate",
    "episode_reward",
    "valid_moves_used",
];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::file(path, io),
        other => Error::Validation(format!("{}: {other:?}", path.display())),
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    File::create(path).map_err(|e| Error::file(path, e))
}

fn report_record(r: &EvaluationRow) -> [String; 7] {
    [
        r.level.clone(),
        r.agent.clone(),
        r.matches.to_string(),
        r.wins.to_string(),
        format!("{:.6}", r.success_rate),
        format!("{:.4}", r.mean_moves),
        r.seed.to_string(),
    ]
}

/// Report as CSV text with a header row.
pub fn report_to_string(rows: &[EvaluationRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(report_record(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn write_report(path: &Path, rows: &[EvaluationRow]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(report_to_string(rows).as_bytes())
        .map_err(|e| Error::file(path, e))
}

pub fn read_report(path: &Path) -> Result<Vec<EvaluationRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let bad = |what: &str| Error::Validation(format!("{}: bad {what}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != REPORT_HEADER.len() {
            return Err(bad("row length"));
        }
        rows.push(EvaluationRow {
            level: rec[0].to_string(),
            agent: rec[1].to_string(),
            matches: rec[2].parse().map_err(|_| bad("matches"))?,
            wins: rec[3].parse().map_err(|_| bad("wins"))?,
            success_rate: rec[4].parse().map_err(|_| bad("success_rate"))?,
            mean_moves: rec[5].parse().map_err(|_| bad("mean_moves"))?,
            seed: rec[6].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(rows)
}

/// Appends curve rows and flushes after each one.
pub struct CurveWriter {
    path: std::path::PathBuf,
    inner: csv::Writer<File>,
}

impl CurveWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(create(path)?);
        inner.write_record(CURVE_HEADER).map_err(|e| csv_err(path, e))?;
        inner.flush().map_err(|e| Error::file(path, e))?;
        Ok(CurveWriter {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn push(&mut self, p: &CurvePoint) -> Result<()> {
        let rec = [
            p.episode.to_string(),
            (p.won as u8).to_string(),
            format!("{:.6}", p.cumulative_success_rate),
            format!("{:.4}", p.episode_reward),
            p.valid_moves_used.to_string(),
        ];
        self.inner.write_record(rec).map_err(|e| csv_err(&self.path, e))?;
        self.inner.flush().map_err(|e| Error::file(&self.path, e))
    }
}
