//! File formats: map JSON, QMT JSON and trajectory CSV.
//!
//! Map files look like
//!
//! ```json
//! {"n": 3, "m": 1, "lambda": ["1/10", -0.05, 0], "A": [[0.7], [-0.7], [0]], "B": [[0, 0, 1]]}
//! ```
//!
//! Entries are JSON numbers (read as doubles) or strings matching
//! `^-?\d+(/\d+)?$` (read as exact rationals).

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::QpError;
use crate::map::{MapParts, QPMap, Trajectory};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::transform::Qmt;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub n: usize,
    pub m: usize,
    pub lambda: Vec<Scalar>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Scalar>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Scalar>>,
}

impl From<&QPMap> for MapFile {
    fn from(map: &QPMap) -> Self {
        MapFile {
            n: map.n(),
            m: map.m(),
            lambda: map.lambda().to_vec(),
            a: map.a().to_rows(),
            b: map.b().to_rows(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmtFile {
    #[serde(rename = "C")]
    pub c: Vec<Vec<Scalar>>,
}

/// Where and why a document was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{pointer}: {reason}")]
pub struct Diagnostic {
    /// JSON pointer into the document (`""` for the whole document).
    pub pointer: String,
    pub reason: String,
}

impl Diagnostic {
    fn new(pointer: impl Into<String>, reason: impl Into<String>) -> Self {
        Diagnostic {
            pointer: pointer.into(),
            reason: reason.into(),
        }
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(key),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, Diagnostic> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Diagnostic::new(json_pointer(e.path()), e.inner().to_string()))
}

fn matrix_from_rows(rows: Vec<Vec<Scalar>>, nrows: usize, ncols: usize, name: &str) -> Result<Matrix, Diagnostic> {
    if rows.len() != nrows {
        return Err(Diagnostic::new(
            format!("/{name}"),
            format!("expected {nrows} rows, found {}", rows.len()),
        ));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Diagnostic::new(
                format!("/{name}/{i}"),
                format!("expected {ncols} entries, found {}", r.len()),
            ));
        }
    }
    Matrix::from_rows(rows, ncols).map_err(|e| Diagnostic::new(format!("/{name}"), e.to_string()))
}

impl MapFile {
    /// Dimension checks only; see [`MapFile::into_map`] for full validation.
    pub fn into_parts(self) -> Result<MapParts, Diagnostic> {
        if self.n == 0 {
            return Err(Diagnostic::new("/n", "n must be positive"));
        }
        if self.lambda.len() != self.n {
            return Err(Diagnostic::new(
                "/lambda",
                format!("expected {} entries, found {}", self.n, self.lambda.len()),
            ));
        }
        let a = matrix_from_rows(self.a, self.n, self.m, "A")?;
        let b = matrix_from_rows(self.b, self.m, self.n, "B")?;
        MapParts::new(self.n, self.m, self.lambda, a, b).map_err(|e| Diagnostic::new("", e.to_string()))
    }

    pub fn into_map(self) -> Result<QPMap, Diagnostic> {
        let parts = self.into_parts()?;
        QPMap::validate(parts).map_err(|e| {
            let pointer = match &e {
                QpError::ZeroColumnInA(_) => "/A".to_string(),
                QpError::ZeroRowInB(j) => format!("/B/{j}"),
                QpError::DuplicateBRows(_, k) => format!("/B/{k}"),
                QpError::NonFiniteEntry(what) => format!("/{what}"),
                _ => String::new(),
            };
            Diagnostic::new(pointer, e.to_string())
        })
    }
}

pub fn parse_map_parts(text: &str) -> Result<MapParts, Diagnostic> {
    parse_json::<MapFile>(text)?.into_parts()
}

pub fn parse_map(text: &str) -> Result<QPMap, Diagnostic> {
    parse_json::<MapFile>(text)?.into_map()
}

pub fn map_to_json(map: &QPMap) -> String {
    serde_json::to_string_pretty(&MapFile::from(map)).expect("map serialization cannot fail")
}

pub fn parse_qmt(text: &str) -> Result<Qmt, Diagnostic> {
    let file: QmtFile = parse_json(text)?;
    let n = file.c.len();
    if n == 0 {
        return Err(Diagnostic::new("/C", "C must be a non-empty square matrix"));
    }
    let c = matrix_from_rows(file.c, n, n, "C")?;
    Qmt::new(c).map_err(|e| Diagnostic::new("/C", e.to_string()))
}

pub fn qmt_to_json(qmt: &Qmt) -> String {
    serde_json::to_string_pretty(&QmtFile { c: qmt.c().to_rows() }).expect("qmt serialization cannot fail")
}

/// Writes `t,x1,...,xn` rows with x-values (not logs) to 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> csv::Result<()> {
    let n = traj.states.first().map_or(0, |s| s.dim());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (t, s) in traj.states.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(s.x().iter().map(|x| format!("{x:.16e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory_csv(traj: &Trajectory, path: &Path) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_trajectory_csv(traj, std::io::BufWriter::new(file)).map_err(std::io::Error::other)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::State;

    const EXAMPLE: &str = r#"{"n": 3, "m": 1, "lambda": ["1/10", "-1/20", "-1/20"],
        "A": [["7/10"], ["-7/10"], ["0"]], "B": [["0", "0", "1"]]}"#;

    #[test]
    fn parse_exact_map() {
        let map = parse_map(EXAMPLE).unwrap();
        assert!(map.is_exact());
        assert_eq!(map.lambda()[0], Scalar::ratio(1, 10));
        let again = parse_map(&map_to_json(&map)).unwrap();
        assert_eq!(again, map);
    }

    #[test]
    fn numbers_are_doubles() {
        let map = parse_map(r#"{"n":1,"m":1,"lambda":[0],"A":[[1]],"B":[[1]]}"#).unwrap();
        assert!(!map.is_exact());
    }

    #[test]
    fn empty_quasimonomials() {
        let map = parse_map(r#"{"n":2,"m":0,"lambda":["1/5",0],"A":[[],[]],"B":[]}"#).unwrap();
        assert_eq!(map.m(), 0);
    }

    #[test]
    fn diagnostics_point_into_document() {
        let err = parse_map(r#"{"n":2,"m":1,"lambda":[0,0],"A":[[1],[1]],"B":[[1,"x"]]}"#).unwrap_err();
        assert_eq!(err.pointer, "/B/0/1");
        let err = parse_map(r#"{"n":2,"m":1,"lambda":[0,0],"A":[[1],[1]],"B":[[1]]}"#).unwrap_err();
        assert_eq!(err.pointer, "/B/0");
        let err = parse_map(r#"{"n":2,"m":1,"lambda":[0,0],"A":[[0],[0]],"B":[[1,1]]}"#).unwrap_err();
        assert_eq!(err.pointer, "/A");
        let err = parse_map("[1,2").unwrap_err();
        assert!(!err.reason.is_empty());
    }

    #[test]
    fn qmt_file() {
        let q = parse_qmt(r#"{"C": [["1","1"],["0","-1"]]}"#).unwrap();
        assert_eq!(q.c(), q.c_inv());
        assert!(parse_qmt(r#"{"C": [["1","1"],["1","1"]]}"#).is_err());
        assert!(parse_qmt(r#"{"C": [["1","1"]]}"#).is_err());
    }

    #[test]
    fn csv_layout() {
        let map = parse_map(r#"{"n":2,"m":0,"lambda":["0","0"],"A":[[],[]],"B":[]}"#).unwrap();
        let traj = map.iterate(&State::from_x(&[1.0, 2.0]).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,1.0000000000000000e0,2.0000000000000000e0");
    }
}
