//! CSV loading and atomic file output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDateTime;
use hourcast_core::data::{self, ObservationSeries, PhysicalBounds, Variable, DATETIME_COLUMN};

use crate::error::{CliError, CliResult};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn format_ts(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Csv { path: path.to_path_buf(), message: e.to_string() }
}

/// Header-keyed rows of a CSV file. Header names are trimmed.
pub fn read_rows(path: &Path) -> CliResult<Vec<BTreeMap<String, String>>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
    let headers: Vec<String> = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        rows.push(headers.iter().cloned().zip(rec.iter().map(str::to_string)).collect());
    }
    Ok(rows)
}

/// Parsed, filled and outlier-screened series.
pub fn load_series(path: &Path, bounds: &PhysicalBounds) -> CliResult<ObservationSeries> {
    let rows = read_rows(path)?;
    let (series, flagged) = data::preprocess(&rows, bounds).map_err(|e| match e {
        hourcast_core::Error::EmptyDataset => csv_err(path, "no data rows"),
        other => other.into(),
    })?;
    if flagged > 0 {
        log::info!("{}: replaced {flagged} out-of-range values", path.display());
    }
    Ok(series)
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Serializes `rows` under `header` and writes the file atomically.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(path, e))?;
    write_atomic(path, &bytes)
}

/// The series in the input layout: `datetime` then the seven variables.
pub fn write_series(path: &Path, series: &ObservationSeries) -> CliResult<()> {
    let mut header = vec![DATETIME_COLUMN];
    header.extend(Variable::ALL.iter().map(|v| v.name()));
    let rows = series.records().iter().map(|r| {
        let mut row = vec![format_ts(&r.timestamp)];
        row.extend(Variable::ALL.iter().map(|v| r.get(*v).map(|x| x.to_string()).unwrap_or_default()));
        row
    });
    write_csv(path, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_file_names_the_path() {
        let err = load_series(Path::new("/nonexistent/weather.csv"), &PhysicalBounds::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/weather.csv"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn series_round_trip() {
        use chrono::NaiveDate;
        let t0 = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = hourcast_core::synthetic::generate(50, t0, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series(&p, &s).unwrap();
        assert_eq!(load_series(&p, &PhysicalBounds::default()).unwrap(), s);
    }
}
