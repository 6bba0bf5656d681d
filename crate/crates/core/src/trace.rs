//! CI job traces in CSV form.
//!
//! ```text
//! job_id,submit,duration_min,priority,deadline
//! 17,2024-03-01T09:00:00Z,4.5,normal,
//! 18,28495740.25,2.0,critical,28495800
//! ```
//!
//! `submit` and `deadline` accept epoch minutes or ISO-8601 (RFC 3339, or a
//! naive `YYYY-MM-DDTHH:MM[:SS]` taken as UTC). `priority` is `critical` or
//! `normal` and defaults to `normal`; `deadline` may be empty.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{arrival_stats, sample_stats};
use crate::scenario::{ArrivalSpec, ServiceSpec};
use crate::sim::{ArrivalProcess, PriorityClass, ServiceDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub job_id: String,
    /// Epoch minutes.
    pub submit: f64,
    pub duration_min: f64,
    pub priority: PriorityClass,
    /// Epoch minutes.
    pub deadline: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    job_id: String,
    submit: String,
    duration_min: String,
    #[serde(default)]
    priority: String,
    #[serde(default)]
    deadline: String,
}

/// Workload fitted from a trace. Times are relative to the first submission.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedTrace {
    pub records: Vec<TraceRecord>,
    pub arrivals: ArrivalProcess,
    pub service: ServiceDistribution,
    /// Jobs per minute.
    pub lambda: f64,
    pub ca2: f64,
    pub cs2: f64,
}

impl IngestedTrace {
    /// `[arrival]` and `[service]` tables ready to paste into a scenario.
    pub fn scenario_fragment(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Fragment {
            arrival: ArrivalSpec,
            service: ServiceSpec,
        }
        let (ArrivalProcess::Trace { timestamps }, ServiceDistribution::Empirical { samples }) =
            (&self.arrivals, &self.service)
        else {
            unreachable!("ingested traces are always trace/empirical")
        };
        let body = toml::to_string(&Fragment {
            arrival: ArrivalSpec::Trace { timestamps_min: timestamps.clone() },
            service: ServiceSpec::Empirical { samples_min: samples.clone() },
        })
        .map_err(|e| Error::validation(format!("cannot serialize trace fragment: {e}")))?;
        Ok(format!(
            "# {} jobs, lambda = {:.6}/min ({:.3}/hour), ca2 = {:.4}, cs2 = {:.4}\n{body}",
            self.records.len(),
            self.lambda,
            self.lambda * 60.0,
            self.ca2,
            self.cs2
        ))
    }
}

fn parse_time(field: &str, record: usize, what: &str) -> Result<f64> {
    let s = field.trim();
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    let millis = if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        Some(dt.timestamp_millis())
    } else {
        ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .map(|dt| dt.and_utc().timestamp_millis())
    };
    millis
        .map(|ms| ms as f64 / 60_000.0)
        .ok_or_else(|| Error::validation(format!("record {record}: cannot parse {what} time '{s}'")))
}

fn parse_record(raw: RawRecord, record: usize) -> Result<TraceRecord> {
    let submit = parse_time(&raw.submit, record, "submit")?;
    let duration_min: f64 = raw
        .duration_min
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("record {record}: cannot parse duration '{}'", raw.duration_min)))?;
    if !(duration_min > 0.0 && duration_min.is_finite()) {
        return Err(Error::validation(format!("record {record}: duration must be > 0, got {duration_min}")));
    }
    let priority = match raw.priority.trim().to_ascii_lowercase().as_str() {
        "" | "normal" => PriorityClass::Normal,
        "critical" => PriorityClass::Critical,
        other => return Err(Error::validation(format!("record {record}: unknown priority '{other}'"))),
    };
    let deadline = match raw.deadline.trim() {
        "" => None,
        d => Some(parse_time(d, record, "deadline")?),
    };
    Ok(TraceRecord { job_id: raw.job_id, submit, duration_min, priority, deadline })
}

/// Parses CSV records and sorts them by submission time. Record indices in
/// errors count data rows from 1.
pub fn parse_trace<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::validation(format!("trace header: {e}")))?.clone();
    let expected = ["job_id", "submit", "duration_min", "priority", "deadline"];
    if headers.iter().ne(expected) {
        return Err(Error::validation(format!(
            "trace header must be '{}', got '{}'",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<RawRecord>().enumerate() {
        let raw = row.map_err(|e| Error::validation(format!("record {}: {e}", i + 1)))?;
        records.push(parse_record(raw, i + 1)?);
    }
    records.sort_by(|a, b| a.submit.total_cmp(&b.submit));
    Ok(records)
}

pub fn fit_trace(records: Vec<TraceRecord>) -> Result<IngestedTrace> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!("a trace needs at least 2 records, got {}", records.len())));
    }
    let origin = records[0].submit;
    let timestamps: Vec<f64> = records.iter().map(|r| r.submit - origin).collect();
    let durations: Vec<f64> = records.iter().map(|r| r.duration_min).collect();
    let arrivals = arrival_stats(&timestamps)?;
    let service = sample_stats(&durations)?;
    Ok(IngestedTrace {
        records,
        arrivals: ArrivalProcess::Trace { timestamps },
        service: ServiceDistribution::Empirical { samples: durations },
        lambda: arrivals.rate,
        ca2: arrivals.ca2,
        cs2: service.cv2,
    })
}

pub fn ingest_trace(path: impl AsRef<Path>) -> Result<IngestedTrace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    fit_trace(parse_trace(file)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "job_id,submit,duration_min,priority,deadline\n";

    #[test]
    fn mixed_timestamp_formats() {
        let text = format!(
            "{HEADER}a,2024-03-01T09:03:00Z,2.0,critical,2024-03-01T09:30:00+00:00\n\
             b,2024-03-01T09:00:00,4.0,,\n\
             c,2024-03-01 09:06,1.0,normal,\n"
        );
        let recs = parse_trace(text.as_bytes()).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.job_id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
        assert_eq!(recs[1].priority, PriorityClass::Critical);
        assert!((recs[1].deadline.unwrap() - recs[1].submit - 27.0).abs() < 1e-9);
        let fit = fit_trace(recs).unwrap();
        assert_eq!(fit.arrivals, ArrivalProcess::Trace { timestamps: vec![0.0, 3.0, 6.0] });
        assert_eq!(fit.ca2, 0.0);
        assert!((fit.lambda - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors_name_the_record() {
        let text = format!("{HEADER}a,0,1.0,,\nb,5,zero,,\n");
        let err = parse_trace(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("record 2"), "{err}");
        let text = format!("{HEADER}a,0,1.0,,\nb,yesterday,1.0,,\n");
        let err = parse_trace(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("record 2") && err.contains("yesterday"), "{err}");
        let text = format!("{HEADER}a,0,-1.0,,\n");
        assert!(parse_trace(text.as_bytes()).unwrap_err().to_string().contains("record 1"));
        assert!(parse_trace("id,when\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn two_records_cannot_estimate_ca2() {
        let text = format!("{HEADER}a,0,1.0,,\nb,3,2.0,,\n");
        let err = fit_trace(parse_trace(text.as_bytes()).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(ref m) if m.contains("Cₐ²")), "{err}");
        let one = format!("{HEADER}a,0,1.0,,\n");
        assert!(matches!(fit_trace(parse_trace(one.as_bytes()).unwrap()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn fragment_loads_back() {
        let text = format!("{HEADER}a,0,1.0,,\nb,3,2.0,,\nc,7,4.0,,\n");
        let fit = fit_trace(parse_trace(text.as_bytes()).unwrap()).unwrap();
        let frag = fit.scenario_fragment().unwrap();
        #[derive(Deserialize)]
        struct F {
            arrival: ArrivalSpec,
            service: ServiceSpec,
        }
        let f: F = toml::from_str(&frag).unwrap();
        assert_eq!(f.arrival.to_process(), fit.arrivals);
        assert_eq!(f.service.to_distribution(), fit.service);
    }
}
