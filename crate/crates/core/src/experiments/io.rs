//! CSV persistence for sweeps and probability fields.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that reading a file back reproduces every value exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::propagator::ProbabilityField;

use super::{SweepMetadata, SweepParameter, SweepPoint, SweepResult};

pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e: T::Err| Error::Parse {
        path: path.display().to_string(),
        line,
        message: format!("column {name}: {e} ({raw:?})"),
    })
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("expected header {}, got {}", want.join(","), got.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

const SWEEP_HEADER: [&str; 4] = ["param_name", "param_value", "tau_mm", "eta"];
const FIELD_HEADER: [&str; 3] = ["z_mm", "site_index", "probability"];

pub fn write_sweep_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(SWEEP_HEADER).map_err(|e| csv_error(path, e))?;
    for p in &result.points {
        w.write_record([
            result.parameter.as_str().to_string(),
            fmt_float(p.value),
            fmt_float(p.tau),
            fmt_float(p.eta),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep table. Metadata lives in a separate file, so the returned
/// points carry only what the table holds.
pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<(SweepParameter, Vec<SweepPoint>)> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    check_header(path, r.headers().map_err(|e| csv_error(path, e))?, &SWEEP_HEADER)?;
    let mut parameter = None;
    let mut points = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = k + 2;
        let name: SweepParameter = parse_field(path, line, "param_name", &record[0])?;
        if parameter.is_some_and(|p| p != name) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line,
                message: "mixed parameter names in one sweep file".into(),
            });
        }
        parameter = Some(name);
        points.push(SweepPoint {
            value: parse_field(path, line, "param_value", &record[1])?,
            tau: parse_field(path, line, "tau_mm", &record[2])?,
            eta: parse_field(path, line, "eta", &record[3])?,
        });
    }
    let parameter = parameter.ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 1,
        message: "no data rows".into(),
    })?;
    Ok((parameter, points))
}

/// Writes provenance for a sweep as pretty JSON.
pub fn write_sweep_metadata(metadata: &SweepMetadata, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, metadata).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Long-format table: one row per grid point and site.
pub fn write_field_csv(field: &ProbabilityField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(FIELD_HEADER).map_err(|e| csv_error(path, e))?;
    for (z, row) in field.z.iter().zip(&field.rows) {
        let z = fmt_float(*z);
        for (i, p) in row.iter().enumerate() {
            w.write_record([z.as_str(), &(i + 1).to_string(), &fmt_float(*p)])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv(path: impl AsRef<Path>) -> Result<ProbabilityField> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    check_header(path, r.headers().map_err(|e| csv_error(path, e))?, &FIELD_HEADER)?;
    let mut field = ProbabilityField {
        z: Vec::new(),
        rows: Vec::new(),
    };
    for (k, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = k + 2;
        let z: f64 = parse_field(path, line, "z_mm", &record[0])?;
        let site: usize = parse_field(path, line, "site_index", &record[1])?;
        let p: f64 = parse_field(path, line, "probability", &record[2])?;
        if site == 1 {
            field.z.push(z);
            field.rows.push(Vec::new());
        }
        match field.rows.last_mut() {
            Some(row) if row.len() + 1 == site && field.z.last() == Some(&z) => row.push(p),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line,
                    message: format!("unexpected site_index {site} at z = {z}"),
                })
            }
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ChainSpec, CouplingLaw};

    fn sample() -> SweepResult {
        SweepResult {
            parameter: SweepParameter::NnnM,
            points: vec![
                SweepPoint { value: 0.0, tau: 40.257_501_358_486_65, eta: 0.971_302_426_918_326_9 },
                SweepPoint { value: 0.005, tau: 40.222_5, eta: 1.0 / 3.0 },
            ],
            metadata: SweepMetadata {
                spec: ChainSpec::from_couplings(23, 1.526, 0.189).unwrap(),
                law: CouplingLaw::default(),
                defect: None,
                window_mm: None,
                tool_version: crate::VERSION.into(),
            },
        }
    }

    #[test]
    fn sweep_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let result = sample();
        write_sweep_csv(&result, &path).unwrap();
        let (param, points) = read_sweep_csv(&path).unwrap();
        assert_eq!(param, result.parameter);
        assert_eq!(points, result.points);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("param_name,param_value,tau_mm,eta\n"));
    }

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        let field = ProbabilityField {
            z: vec![0.0, 0.1],
            rows: vec![vec![1.0, 0.0], vec![0.99, 0.01 + 1e-17]],
        };
        write_field_csv(&field, &path).unwrap();
        assert_eq!(read_field_csv(&path).unwrap(), field);
    }

    #[test]
    fn malformed_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "param_name,param_value,tau_mm,eta\nnnn_m,0.0,40.0,0.9\nnnn_m,0.1,abc,0.8\n").unwrap();
        let err = read_sweep_csv(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("tau_mm"));
    }

    #[test]
    fn twelve_significant_digits() {
        let s = fmt_float(0.5);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 12, "{s}");
        assert_eq!(s.parse::<f64>().unwrap(), 0.5);
    }
}
