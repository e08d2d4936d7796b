//! Report files.
//!
//! * `<case>.csv` per ratio report: `case_id,input_id,param_json,lhs,rhs,ratio`.
//! * `<case>-fit.csv` per slope fit: `abscissa,ordinate` rows, then the
//!   summary `slope,residual` as two `#` comment lines.
//! * `summary.csv`: one row per record.
//!
//! Cases with several reports of one kind number them `-1`, `-2`, ...
//! Existing files are never overwritten: a taken name gets a `.1`, `.2`, ...
//! suffix before its extension.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use dzk_core::lab::report::param_json;
use dzk_core::lab::{RatioReport, Report, SlopeFit};
use serde_json::{Map, Value};

use crate::cases::ReportRecord;
use crate::error::{Result, RunnerError};

pub const SUMMARY: &str = "summary.csv";

fn unwritable(path: &Path, source: std::io::Error) -> RunnerError {
    RunnerError::Unwritable {
        path: path.display().to_string(),
        source,
    }
}

fn versioned(name: &str, v: usize) -> String {
    if v == 0 {
        return name.to_string();
    }
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}.{v}.{ext}"),
        None => format!("{name}.{v}"),
    }
}

/// Writes `bytes` to `dir/name`, or to the first free versioned name.
/// Returns the file name used.
pub fn write_new(dir: &Path, name: &str, bytes: &[u8]) -> Result<String> {
    for v in 0.. {
        let file = versioned(name, v);
        let path = dir.join(&file);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                f.write_all(bytes).map_err(|e| unwritable(&path, e))?;
                return Ok(file);
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(unwritable(&path, e)),
        }
    }
    unreachable!("unbounded version search")
}

fn csv_bytes<F>(f: F) -> Vec<u8>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w).expect("writing csv to memory");
        w.flush().expect("flushing csv to memory");
    }
    buf
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn ratio_csv(r: &RatioReport) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["case_id", "input_id", "param_json", "lhs", "rhs", "ratio"])?;
        for row in &r.rows {
            let mut params: Map<String, Value> = r.case.params.clone();
            params.extend(row.params.clone());
            w.write_record([
                r.case.id.as_str(),
                &row.input_id,
                &param_json(&params),
                &row.lhs.to_string(),
                &row.rhs.to_string(),
                &opt(row.ratio()),
            ])?;
        }
        Ok(())
    })
}

pub fn slope_csv(s: &SlopeFit) -> Vec<u8> {
    let mut buf = csv_bytes(|w| {
        w.write_record(["abscissa", "ordinate"])?;
        for (x, y) in s.abscissae.iter().zip(&s.ordinates) {
            w.write_record([x.to_string(), y.to_string()])?;
        }
        Ok(())
    });
    buf.extend_from_slice(format!("# slope,residual\n# {},{}\n", s.slope(), s.residual()).as_bytes());
    buf
}

fn metrics_json(r: &ReportRecord) -> String {
    let m: Map<String, Value> = r.metrics.iter().map(|(k, v)| (k.clone(), Value::from(*v))).collect();
    Value::Object(m).to_string()
}

pub fn summary_csv(records: &[ReportRecord]) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["case_id", "status", "metrics_json", "artifacts", "diagnostics"])?;
        for r in records {
            w.write_record([
                r.case.as_str(),
                r.status.as_str(),
                &metrics_json(r),
                &r.artifacts.join(";"),
                &r.diagnostics.join("; "),
            ])?;
        }
        Ok(())
    })
}

/// Writes every report and payload of `records` plus the summary into `dir`
/// (created if needed), filling in the artifact lists. Returns the summary
/// path.
pub fn emit_reports(records: &mut [ReportRecord], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| unwritable(dir, e))?;
    for rec in records.iter_mut() {
        let ratios = rec.reports.iter().filter(|r| matches!(r, Report::Ratio(_))).count();
        let fits = rec.reports.len() - ratios;
        let (mut i, mut j) = (0, 0);
        let mut written = Vec::new();
        for rep in &rec.reports {
            let (name, bytes) = match rep {
                Report::Ratio(r) => {
                    i += 1;
                    let name = if ratios > 1 { format!("{}-{i}.csv", rec.case) } else { format!("{}.csv", rec.case) };
                    (name, ratio_csv(r))
                }
                Report::Slope(s) => {
                    j += 1;
                    let name = if fits > 1 { format!("{}-fit-{j}.csv", rec.case) } else { format!("{}-fit.csv", rec.case) };
                    (name, slope_csv(s))
                }
            };
            written.push(write_new(dir, &name, &bytes)?);
        }
        for p in &rec.payloads {
            written.push(write_new(dir, &p.name, &p.bytes)?);
        }
        rec.artifacts = written;
    }
    let name = write_new(dir, SUMMARY, &summary_csv(records))?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dzk_core::lab::{CaseId, EstimateCase, RatioRow};

    #[test]
    fn versioned_names() {
        assert_eq!(versioned("a.csv", 0), "a.csv");
        assert_eq!(versioned("a.csv", 2), "a.2.csv");
        assert_eq!(versioned("dump", 1), "dump.1");
    }

    #[test]
    fn ratio_rows_quote_json() {
        let case = EstimateCase::new(CaseId::Unitarity).with("t", 0.5);
        let r = RatioReport::new(case, "f", vec![RatioRow::new("a", 1.0, 2.0), RatioRow::new("b", 0.0, 0.0)]).unwrap();
        let text = String::from_utf8(ratio_csv(&r)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "case_id,input_id,param_json,lhs,rhs,ratio");
        assert_eq!(lines[1], r#"unitarity,a,"{""t"":0.5}",1,2,0.5"#);
        assert!(lines[2].ends_with(",0,0,"));
    }
}
