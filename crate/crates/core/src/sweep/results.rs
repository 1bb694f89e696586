//! CSV row types. Reals are written in scientific notation with 17
//! significant digits, booleans as `true`/`false`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::Variant;
use crate::error::{Error, Result};

pub const RESULT_HEADER: [&str; 11] = [
    "n", "lambda", "k", "r", "variant", "seed", "T", "F", "success", "final_distance", "wall_ms",
];

pub const DRIFT_HEADER: [&str; 13] = [
    "n", "lambda", "k", "r", "variant", "d0", "seed", "ell", "gain", "good", "bad",
    "surviving_good", "surviving_bad",
];

/// One run of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub lambda: usize,
    pub k: f64,
    pub r: f64,
    pub variant: Variant,
    pub seed: u64,
    #[serde(rename = "T")]
    pub iterations: u64,
    #[serde(rename = "F")]
    pub evaluations: u64,
    pub success: bool,
    pub final_distance: usize,
    pub wall_ms: u64,
}

/// One drift probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub n: usize,
    pub lambda: usize,
    pub k: f64,
    pub r: f64,
    pub variant: Variant,
    pub d0: usize,
    pub seed: u64,
    pub ell: usize,
    pub gain: usize,
    pub good: Option<usize>,
    pub bad: Option<usize>,
    pub surviving_good: Option<usize>,
    pub surviving_bad: Option<usize>,
}

pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub(crate) fn record(&self) -> [String; 11] {
        [
            self.n.to_string(),
            self.lambda.to_string(),
            fmt_real(self.k),
            fmt_real(self.r),
            self.variant.to_string(),
            self.seed.to_string(),
            self.iterations.to_string(),
            self.evaluations.to_string(),
            self.success.to_string(),
            self.final_distance.to_string(),
            self.wall_ms.to_string(),
        ]
    }
}

impl DriftRow {
    fn record(&self) -> [String; 13] {
        [
            self.n.to_string(),
            self.lambda.to_string(),
            fmt_real(self.k),
            fmt_real(self.r),
            self.variant.to_string(),
            self.d0.to_string(),
            self.seed.to_string(),
            self.ell.to_string(),
            self.gain.to_string(),
            opt(self.good),
            opt(self.bad),
            opt(self.surviving_good),
            opt(self.surviving_bad),
        ]
    }
}

pub fn write_result_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_drift_rows<W: Write>(out: W, rows: &[DriftRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DRIFT_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R, header: &[&str], path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(input);
    let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Schema {
            path: path.to_owned(),
            reason: format!("expected header {}, found {}", header.join(","), found.join(",")),
        });
    }
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| Error::Schema {
                path: path.to_owned(),
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Parses sweep results; `path` is only used in error messages.
pub fn read_result_rows<R: Read>(input: R, path: &Path) -> Result<Vec<ResultRow>> {
    read_rows(input, &RESULT_HEADER, path)
}

pub fn read_drift_rows<R: Read>(input: R, path: &Path) -> Result<Vec<DriftRow>> {
    read_rows(input, &DRIFT_HEADER, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            n: 64,
            lambda: 3,
            k: 1.0 / 3.0,
            r: 1.0,
            variant: Variant::AllCompete,
            seed: u64::MAX,
            iterations: 12,
            evaluations: 73,
            success: true,
            final_distance: 0,
            wall_ms: 0,
        }
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        write_result_rows(&mut buf, &[row()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,lambda,k,r,variant,seed,T,F,success,final_distance,wall_ms");
        assert_eq!(
            lines.next().unwrap(),
            "64,3,3.3333333333333331e-1,1.0000000000000000e0,all-compete,18446744073709551615,12,73,true,0,0"
        );
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let text = "n,lambda\n1,2\n";
        assert!(matches!(
            read_result_rows(text.as_bytes(), Path::new("x.csv")),
            Err(Error::Schema { .. })
        ));
        let bad_value = "n,lambda,k,r,variant,seed,T,F,success,final_distance,wall_ms\n1,2,x,1,standard,1,1,1,true,0,0\n";
        assert!(read_result_rows(bad_value.as_bytes(), Path::new("x.csv")).is_err());
    }

    #[test]
    fn drift_rows_round_trip_with_missing_accounting() {
        let rows = vec![DriftRow {
            n: 10,
            lambda: 2,
            k: 2.0,
            r: 1.0,
            variant: Variant::Standard,
            d0: 5,
            seed: 9,
            ell: 3,
            gain: 1,
            good: Some(2),
            bad: Some(1),
            surviving_good: None,
            surviving_bad: None,
        }];
        let mut buf = Vec::new();
        write_drift_rows(&mut buf, &rows).unwrap();
        assert_eq!(read_drift_rows(buf.as_slice(), Path::new("d.csv")).unwrap(), rows);
    }
}
