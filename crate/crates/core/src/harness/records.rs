//! Records and dataset tables as CSV.

use std::io::{Read, Write};

use crate::ela::{FeatureCode, FeatureValue, FeatureVector, UndefinedReason};
use crate::{Behaviour, Dataset, Error, Genotype, Result, Sample};

pub const RECORD_HEADER: [&str; 5] = ["run_id", "eval_count", "feature_code", "value", "status"];

/// One feature value of one run at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub run_id: u32,
    pub eval_count: u64,
    pub code: FeatureCode,
    pub value: FeatureValue,
}

impl RunRecord {
    pub fn key(&self) -> (u32, u64, u8) {
        (self.run_id, self.eval_count, self.code.number())
    }
}

/// Records of one feature vector, in code order.
pub fn records_from(run_id: u32, eval_count: u64, features: &FeatureVector) -> Vec<RunRecord> {
    features
        .values
        .iter()
        .map(|(&code, &value)| RunRecord {
            run_id,
            eval_count,
            code,
            value,
        })
        .collect()
}

/// 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_err(what: &'static str, message: impl Into<String>) -> Error {
    Error::Parse {
        what,
        message: message.into(),
    }
}

fn csv_err(what: &'static str, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_err(what, format!("{other:?}")),
    }
}

fn record_row(r: &RunRecord) -> [String; 5] {
    let value = r.value.value().map(format_f64).unwrap_or_default();
    [
        r.run_id.to_string(),
        r.eval_count.to_string(),
        r.code.to_string(),
        value,
        r.value.status().to_string(),
    ]
}

/// Rows without a header; used for append-only staging files.
pub fn append_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in records {
        w.write_record(record_row(r)).map_err(|e| csv_err("records", e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(|e| csv_err("records", e))?;
    for r in records {
        w.write_record(record_row(r)).map_err(|e| csv_err("records", e))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_record(row: &csv::StringRecord) -> Result<RunRecord> {
    let line = row.position().map_or(0, |p| p.line());
    let bad = |m: String| parse_err("records", format!("line {line}: {m}"));
    if row.len() != 5 {
        return Err(bad(format!("expected 5 fields, found {}", row.len())));
    }
    let run_id = row[0].parse().map_err(|_| bad(format!("bad run_id `{}`", &row[0])))?;
    let eval_count = row[1].parse().map_err(|_| bad(format!("bad eval_count `{}`", &row[1])))?;
    let code: FeatureCode = row[2].parse().map_err(|e: Error| bad(e.to_string()))?;
    let value = match &row[4] {
        "ok" => {
            let v: f64 = row[3].parse().map_err(|_| bad(format!("bad value `{}`", &row[3])))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value `{}`", &row[3])));
            }
            FeatureValue::Value(v)
        }
        status => {
            let reason = match status {
                "insufficient-samples" => UndefinedReason::InsufficientSamples,
                "degenerate-data" => UndefinedReason::DegenerateData,
                other => return Err(bad(format!("unknown status `{other}`"))),
            };
            if !row[3].is_empty() {
                return Err(bad(format!("status `{status}` must have an empty value")));
            }
            FeatureValue::Undefined(reason)
        }
    };
    Ok(RunRecord {
        run_id,
        eval_count,
        code,
        value,
    })
}

fn read_rows<R: Read>(input: R, has_headers: bool) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(has_headers).from_reader(input);
    if has_headers {
        let header = rdr.headers().map_err(|e| csv_err("records", e))?;
        if header.iter().ne(RECORD_HEADER) {
            return Err(parse_err("records", format!("expected header {}", RECORD_HEADER.join(","))));
        }
    }
    rdr.records()
        .map(|row| parse_record(&row.map_err(|e| csv_err("records", e))?))
        .collect()
}

/// Reads a records table and rejects duplicate `(run_id, eval_count, code)` keys.
pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let records = read_rows(input, true)?;
    let mut keys: Vec<_> = records.iter().map(RunRecord::key).collect();
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        let (run, eval, code) = w[0];
        return Err(parse_err(
            "records",
            format!("duplicate record for run {run}, eval_count {eval}, f{code}"),
        ));
    }
    Ok(records)
}

pub(crate) fn read_staged<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    read_rows(input, false)
}

/// Header `x0..x{d-1},fitness,b0,b1`; behaviour cells are empty when absent.
pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..data.dim()).map(|i| format!("x{i}")).collect();
    header.extend(["fitness", "b0", "b1"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err("dataset", e))?;
    for s in data.samples() {
        let mut row: Vec<String> = s.genotype.iter().map(|v| format_f64(*v)).collect();
        row.push(format_f64(s.fitness));
        match s.behaviour {
            Some(b) => row.extend(b.values().map(format_f64)),
            None => row.extend([String::new(), String::new()]),
        }
        w.write_record(&row).map_err(|e| csv_err("dataset", e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| csv_err("dataset", e))?.clone();
    let n = header.len();
    let d = n.saturating_sub(3);
    let expected: Vec<String> = (0..d)
        .map(|i| format!("x{i}"))
        .chain(["fitness", "b0", "b1"].map(String::from))
        .collect();
    if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err("dataset", "expected header x0,...,x{d-1},fitness,b0,b1 with d >= 1"));
    }
    let mut samples = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_err("dataset", e))?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            let v: f64 = row[i]
                .trim()
                .parse()
                .map_err(|_| parse_err("dataset", format!("line {line}: bad number `{}`", &row[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err("dataset", format!("line {line}: non-finite `{}`", &row[i])))
            }
        };
        let x = (0..d).map(num).collect::<Result<Vec<_>>>()?;
        let fitness = num(d)?;
        let behaviour = match (row[d + 1].trim().is_empty(), row[d + 2].trim().is_empty()) {
            (true, true) => None,
            (false, false) => Some(
                Behaviour::new(num(d + 1)?, num(d + 2)?)
                    .map_err(|e| parse_err("dataset", format!("line {line}: {e}")))?,
            ),
            _ => return Err(parse_err("dataset", format!("line {line}: b0 and b1 must both be set or both empty"))),
        };
        let genotype = Genotype::new(x).map_err(|e| parse_err("dataset", format!("line {line}: {e}")))?;
        samples.push(Sample::new(genotype, fitness, behaviour)?);
    }
    if samples.is_empty() {
        return Err(parse_err("dataset", "no rows"));
    }
    Dataset::new(samples)
}
