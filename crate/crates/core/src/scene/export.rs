use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::print::fmt_f64;
use super::run::{FailureRecord, RunLog, RunSummary, StepRecord};
use super::spec::LogFormat;
use super::SceneError;

/// Leading CSV columns; each probe then adds `<name>_fx,<name>_fy,<name>_fz`,
/// and `status` closes the row.
pub const CSV_FIXED_COLUMNS: [&str; 8] =
    ["time", "e_stretch", "e_twist", "e_bend", "e_kinetic", "e_gravity", "contacts", "max_penetration"];

pub fn export_log(log: &RunLog, format: LogFormat, path: &Path) -> Result<(), SceneError> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        LogFormat::Csv => write_csv(log, &mut w)?,
        LogFormat::Jsonl => write_jsonl(log, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> SceneError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => SceneError::Io(e),
        k => SceneError::Log(format!("{k:?}")),
    }
}

fn header(log: &RunLog) -> Vec<String> {
    let mut h: Vec<String> = CSV_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for p in &log.probe_names {
        h.extend(["fx", "fy", "fz"].iter().map(|c| format!("{p}_{c}")));
    }
    h.push("status".into());
    h
}

/// One row per record. An aborted run gets a final row with empty values and
/// `failed: <reason>` as its status.
pub fn write_csv(log: &RunLog, w: impl Write) -> Result<(), SceneError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(log)).map_err(csv_error)?;
    for r in &log.records {
        let e = &r.energy;
        let mut row: Vec<String> = [r.time, e.stretch, e.twist, e.bend, e.kinetic, e.gravity].map(fmt_f64).to_vec();
        row.push(r.contact_count.to_string());
        row.push(fmt_f64(r.max_penetration()));
        for p in &r.probes {
            row.extend(p.iter().map(|x| fmt_f64(*x)));
        }
        row.push("ok".into());
        out.write_record(&row).map_err(csv_error)?;
    }
    if let Some(f) = &log.failure {
        let mut row = vec![fmt_f64(f.time)];
        row.resize(header(log).len() - 1, String::new());
        row.push(format!("failed: {}", f.reason));
        out.write_record(&row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub time: f64,
    /// Columns after `time` and before `status`; `None` where empty.
    pub values: Vec<Option<f64>>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvLog {
    pub columns: Vec<String>,
    pub rows: Vec<CsvRow>,
}

impl CsvLog {
    /// Values of column `name` (excluding `time` and `status`).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        if k == 0 || k + 1 == self.columns.len() {
            return None;
        }
        Some(self.rows.iter().map(|r| r.values[k - 1]).collect())
    }
}

pub fn read_csv(r: impl Read) -> Result<CsvLog, SceneError> {
    let mut rd = csv::Reader::from_reader(r);
    let columns: Vec<String> = rd.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if columns.len() < CSV_FIXED_COLUMNS.len() + 1
        || columns[..CSV_FIXED_COLUMNS.len()] != CSV_FIXED_COLUMNS
        || columns.last().map(String::as_str) != Some("status")
        || !(columns.len() - CSV_FIXED_COLUMNS.len() - 1).is_multiple_of(3)
    {
        return Err(SceneError::Log(format!("unexpected CSV header {columns:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let bad = |what: &str| SceneError::Log(format!("row {}: {what}", i + 1));
        if rec.len() != columns.len() {
            return Err(bad("wrong field count"));
        }
        let num = |s: &str| -> Result<Option<f64>, SceneError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(&format!("`{s}` is not a number")))
            }
        };
        let time = num(&rec[0])?.ok_or_else(|| bad("missing time"))?;
        let values = (1..rec.len() - 1).map(|k| num(&rec[k])).collect::<Result<_, _>>()?;
        rows.push(CsvRow { time, values, status: rec[rec.len() - 1].to_string() });
    }
    Ok(CsvLog { columns, rows })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header { scene: String, probe_names: Vec<String> },
    Step(StepRecord),
    Summary(RunSummary),
    Failure(FailureRecord),
}

fn json_error(e: serde_json::Error) -> SceneError {
    if e.is_io() {
        SceneError::Io(e.into())
    } else {
        SceneError::Log(e.to_string())
    }
}

/// A header line, one line per record, the summary and (for aborted runs) the failure.
pub fn write_jsonl(log: &RunLog, mut w: impl Write) -> Result<(), SceneError> {
    let mut put = |line: &Line| -> Result<(), SceneError> {
        serde_json::to_writer(&mut w, line).map_err(json_error)?;
        w.write_all(b"\n")?;
        Ok(())
    };
    put(&Line::Header { scene: log.scene.clone(), probe_names: log.probe_names.clone() })?;
    for r in &log.records {
        put(&Line::Step(r.clone()))?;
    }
    put(&Line::Summary(log.summary.clone()))?;
    if let Some(f) = &log.failure {
        put(&Line::Failure(f.clone()))?;
    }
    Ok(())
}

pub fn read_jsonl(r: impl Read) -> Result<RunLog, SceneError> {
    let mut log = RunLog::default();
    let (mut header, mut summary) = (false, false);
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| SceneError::Log(format!("line {}: {what}", i + 1));
        let parsed: Line = serde_json::from_str(&line).map_err(|e| bad(&e.to_string()))?;
        match parsed {
            Line::Header { scene, probe_names } if !header && log.records.is_empty() => {
                header = true;
                log.scene = scene;
                log.probe_names = probe_names;
            }
            Line::Step(s) if header && !summary => {
                if s.probes.len() != log.probe_names.len() {
                    return Err(bad("probe count differs from the header"));
                }
                log.records.push(s);
            }
            Line::Summary(s) if header && !summary => {
                summary = true;
                log.summary = s;
            }
            Line::Failure(f) if summary && log.failure.is_none() => log.failure = Some(f),
            _ => return Err(bad("record out of order")),
        }
    }
    if !summary {
        return Err(SceneError::Log("missing summary record".into()));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::scene::run::Energies;

    fn sample(n: usize) -> RunLog {
        let records = (0..n)
            .map(|k| StepRecord {
                step: k,
                time: k as f64 * 1e-3,
                q: vec![0.1 * k as f64, 1.0 / 3.0],
                v: vec![-2.5e-7, 1e300],
                contact_count: k % 2,
                min_phi: (k % 2 == 1).then_some(-1e-5),
                contacts: vec![],
                newton_iterations: k,
                solver: None,
                energy: Energies { stretch: 1.0 / 7.0, twist: 0.0, bend: 2e-9, kinetic: 0.5, gravity: -3.0 },
                probes: vec![Vec3::new(1.0, -2.0, 0.1 * k as f64)],
            })
            .collect();
        RunLog { scene: "t".into(), probe_names: vec!["pull".into()], records, ..Default::default() }
    }

    #[test]
    fn empty_log_is_header_only_csv() {
        let mut buf = Vec::new();
        write_csv(&RunLog::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(read_csv(text.as_bytes()).unwrap().rows.len(), 0);
    }

    #[test]
    fn csv_round_trips_values() {
        let log = sample(11);
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows.len(), 11);
        let fz = back.column("pull_fz").unwrap();
        for (r, v) in log.records.iter().zip(&fz) {
            assert_eq!(v.unwrap(), r.probes[0].z);
        }
        assert_eq!(back.column("e_stretch").unwrap()[3], Some(1.0 / 7.0));
        assert_eq!(back.column("max_penetration").unwrap()[1], Some(1e-5));
    }

    #[test]
    fn jsonl_round_trips_exactly() {
        let mut log = sample(4);
        log.failure = Some(FailureRecord { step: 4, time: 3e-3, reason: "Newton \"diverged\"".into() });
        let mut buf = Vec::new();
        write_jsonl(&log, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).lines().last().unwrap().contains("\"failure\""));
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), log);
    }

    #[test]
    fn failure_row_ends_csv() {
        let mut log = sample(2);
        log.failure = Some(FailureRecord { step: 2, time: 1e-3, reason: "boom".into() });
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        let last = back.rows.last().unwrap();
        assert_eq!(last.status, "failed: boom");
        assert!(last.values.iter().all(Option::is_none));
    }

    #[test]
    fn malformed_jsonl_is_rejected() {
        assert!(read_jsonl(&b"{\"kind\":\"summary\"}\n"[..]).is_err());
        assert!(read_jsonl(&b"not json\n"[..]).is_err());
        assert!(read_jsonl(&b""[..]).is_err());
    }
}
