//! Result serialization: CSV and JSON-lines with identical fields, written
//! atomically (temp file + rename) so failures leave no partial artifacts.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::bench::protocol::{CvSummary, LearningCurveSummary, RepeatResult};
use crate::error::{Error, Result};

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            tempfile::NamedTempFile::new_in(d)?
        }
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::invalid(format!("csv serialization: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv flush: {e}")))
}

fn to_jsonl_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row)
            .map_err(|e| Error::invalid(format!("json serialization: {e}")))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn write_results_csv(path: impl AsRef<Path>, results: &[RepeatResult]) -> Result<()> {
    write_atomic(path.as_ref(), &to_csv_bytes(results)?)
}

pub fn write_results_jsonl(path: impl AsRef<Path>, results: &[RepeatResult]) -> Result<()> {
    write_atomic(path.as_ref(), &to_jsonl_bytes(results)?)
}

pub fn write_lc_summary_csv(
    path: impl AsRef<Path>,
    summary: &[LearningCurveSummary],
) -> Result<()> {
    write_atomic(path.as_ref(), &to_csv_bytes(summary)?)
}

pub fn write_cv_summary_csv(path: impl AsRef<Path>, summary: &[CvSummary]) -> Result<()> {
    write_atomic(path.as_ref(), &to_csv_bytes(summary)?)
}
