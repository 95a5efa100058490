//! Path files and atomic output.
//!
//! CSV: header `t,x1,...,xn`, one row per sample; a jump at `t` is two
//! consecutive rows with the same `t`, left limit first. Numbers are written
//! with `{:.16e}` (17 significant digits), which is lossless for `f64` and
//! byte-stable across runs.
//!
//! JSON: `{"dim": n, "times": [...], "values": [[...], ...], "jumps": [...]}`
//! with strictly increasing `times`, the right-continuous value at each time,
//! and one `{"time": t, "left": [...]}` entry per jump holding the left limit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use youngflow_core::{PathKind, SampledPath, Trajectory};

use crate::error::{CliError, CliResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_path_csv<W: Write>(path: &SampledPath, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (t, x) in path.times().iter().zip(path.points()) {
        w.write_record(std::iter::once(fmt_f64(*t)).chain(x.iter().map(|v| fmt_f64(*v))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn path_to_csv(path: &SampledPath) -> String {
    let mut buf = Vec::new();
    write_path_csv(path, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Parses the CSV layout above. Repeated times make the path cadlag.
pub fn read_path_csv<R: Read>(input: R) -> Result<SampledPath, String> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.is_empty() || &header[0] != "t" {
        return Err("the first column must be `t`".into());
    }
    let dim = header.len() - 1;
    if dim == 0 {
        return Err("no value columns".into());
    }
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("x{}", k + 1) {
            return Err(format!("column {} should be `x{}`, found `{name}`", k + 2, k + 1));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != dim + 1 {
            return Err(format!("row {}: expected {} fields, found {}", line + 2, dim + 1, record.len()));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: `{s}`: {e}", line + 2));
        times.push(parse(&record[0])?);
        for field in record.iter().skip(1) {
            values.push(parse(field)?);
        }
    }
    let kind = if times.windows(2).any(|w| w[0] == w[1]) { PathKind::Cadlag } else { PathKind::Continuous };
    SampledPath::new(kind, times, values, dim).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    pub dim: usize,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub jumps: Vec<JumpJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpJson {
    pub time: f64,
    pub left: Vec<f64>,
}

impl PathJson {
    pub fn from_path(path: &SampledPath) -> Self {
        let mut times = Vec::with_capacity(path.len());
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(path.len());
        let mut jumps = Vec::new();
        for (i, (t, x)) in path.times().iter().zip(path.points()).enumerate() {
            if i > 0 && path.times()[i - 1] == *t {
                let left = values.pop().expect("a row precedes the jump");
                times.pop();
                jumps.push(JumpJson { time: *t, left });
            }
            times.push(*t);
            values.push(x.to_vec());
        }
        Self { dim: path.dim(), times, values, jumps }
    }

    pub fn to_path(&self) -> Result<SampledPath, String> {
        if self.times.len() != self.values.len() {
            return Err(format!("{} times but {} values", self.times.len(), self.values.len()));
        }
        if let Some(bad) = self.values.iter().chain(self.jumps.iter().map(|j| &j.left)).find(|v| v.len() != self.dim) {
            return Err(format!("a point has {} coordinates, expected {}", bad.len(), self.dim));
        }
        let mut times = Vec::with_capacity(self.times.len() + self.jumps.len());
        let mut values = Vec::with_capacity((self.times.len() + self.jumps.len()) * self.dim);
        let mut jumps = self.jumps.iter().peekable();
        for (t, x) in self.times.iter().zip(&self.values) {
            if let Some(j) = jumps.next_if(|j| j.time == *t) {
                times.push(*t);
                values.extend_from_slice(&j.left);
            }
            times.push(*t);
            values.extend_from_slice(x);
        }
        if let Some(j) = jumps.next() {
            return Err(format!("jump at t = {} does not match a listed time (jumps must be sorted)", j.time));
        }
        let kind = if self.jumps.is_empty() { PathKind::Continuous } else { PathKind::Cadlag };
        SampledPath::new(kind, times, values, self.dim).map_err(|e| e.to_string())
    }
}

pub fn path_to_json(path: &SampledPath) -> String {
    let mut s = serde_json::to_string_pretty(&PathJson::from_path(path)).expect("plain data");
    s.push('\n');
    s
}

pub fn read_path_json(text: &str) -> Result<SampledPath, String> {
    let parsed: PathJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
    parsed.to_path()
}

fn is_json(file: &Path) -> bool {
    file.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a path file, choosing the format by extension (`.json`, else CSV).
pub fn load_path(file: &Path) -> CliResult<SampledPath> {
    let text = fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    let parsed = if is_json(file) { read_path_json(&text) } else { read_path_csv(text.as_bytes()) };
    parsed.map_err(|m| CliError::format(file, m))
}

pub fn save_path(file: &Path, path: &SampledPath) -> CliResult<()> {
    let text = if is_json(file) { path_to_json(path) } else { path_to_csv(path) };
    write_atomic(file, text.as_bytes())
}

/// `t,y1..yd` and, with a Jacobian, `k1_1..kd_d` (row-major).
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let path = &traj.path;
    let d = path.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|k| format!("y{k}")));
    if traj.jacobian.is_some() {
        for i in 1..=d {
            header.extend((1..=d).map(|j| format!("k{i}_{j}")));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("writing to memory");
    for i in 0..path.len() {
        let mut row = vec![fmt_f64(path.times()[i])];
        row.extend(path.point(i).iter().map(|v| fmt_f64(*v)));
        if let Some(k) = &traj.jacobian {
            row.extend(k.point(i).iter().map(|v| fmt_f64(*v)));
        }
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("ascii output")
}

/// Writes `bytes` to a temporary file next to `file` and renames it into place,
/// so readers never see a partial file.
pub fn write_atomic(file: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(file, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(file, e))?;
    tmp.persist(file).map_err(|e| CliError::io(file, e.error))?;
    Ok(())
}
