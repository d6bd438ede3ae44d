use std::fs;
use std::io::Write;
use std::path::Path;

use super::ReferenceField;
use crate::error::{Error, Result};

const CENTERLINE_HEADER: [&str; 3] = ["axis", "coord", "value"];
const FIELD_HEADER: [&str; 4] = ["x", "y", "u", "v"];

/// Centerline velocity profiles: `u` against `y` on `x = 0.5` and `v`
/// against `x` on `y = 0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterlineTable {
    pub u_vs_y: Vec<(f64, f64)>,
    pub v_vs_x: Vec<(f64, f64)>,
    pub provenance: String,
}

/// The published Re = 100 benchmark table shipped with the crate.
pub fn benchmark_re100() -> CenterlineTable {
    parse_centerline(
        include_str!("../../data/re100_centerlines.csv"),
        Path::new("data/re100_centerlines.csv"),
    )
    .expect("bundled table is valid")
}

fn parse_err(path: &Path, row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Splits leading `#` lines from the CSV body.
fn split_comments(text: &str) -> (Vec<&str>, usize, &str) {
    let mut offset = 0;
    let mut comments = Vec::new();
    for line in text.split_inclusive('\n') {
        match line.trim_start().strip_prefix('#') {
            Some(c) => comments.push(c.trim()),
            None => break,
        }
        offset += line.len();
    }
    (comments.clone(), comments.len(), &text[offset..])
}

struct Rows<'a> {
    path: &'a Path,
    header: &'a [&'a str],
    first_line: usize,
}

impl Rows<'_> {
    fn read(&self, body: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let mut records = rdr.records();
        let header_line = self.first_line;
        match records.next() {
            Some(Ok(h)) if h.iter().eq(self.header.iter().copied()) => {}
            Some(Ok(h)) => {
                return Err(parse_err(
                    self.path,
                    header_line,
                    "header",
                    format!(
                        "missing header `{}`, found `{}`",
                        self.header.join(","),
                        h.iter().collect::<Vec<_>>().join(",")
                    ),
                ))
            }
            Some(Err(e)) => return Err(parse_err(self.path, header_line, "header", e.to_string())),
            None => return Err(parse_err(self.path, header_line, "header", "empty file")),
        }
        let mut out = Vec::new();
        for (k, rec) in records.enumerate() {
            let line = header_line + 1 + k;
            let rec = rec.map_err(|e| parse_err(self.path, line, "", e.to_string()))?;
            if rec.len() != self.header.len() {
                return Err(parse_err(
                    self.path,
                    line,
                    "",
                    format!("expected {} fields, found {}", self.header.len(), rec.len()),
                ));
            }
            out.push((line, rec));
        }
        Ok(out)
    }

    fn number(&self, line: usize, rec: &csv::StringRecord, col: usize) -> Result<f64> {
        let name = self.header[col];
        let v: f64 = rec[col].parse().map_err(|_| {
            parse_err(
                self.path,
                line,
                name,
                format!("`{}` is not a number", &rec[col]),
            )
        })?;
        if !v.is_finite() {
            return Err(parse_err(self.path, line, name, "value is not finite"));
        }
        Ok(v)
    }
}

fn parse_centerline(text: &str, path: &Path) -> Result<CenterlineTable> {
    let (comments, n_comments, body) = split_comments(text);
    let rows = Rows {
        path,
        header: &CENTERLINE_HEADER,
        first_line: n_comments + 1,
    };
    let mut u_vs_y: Vec<(f64, f64)> = Vec::new();
    let mut v_vs_x: Vec<(f64, f64)> = Vec::new();
    for (line, rec) in rows.read(body)? {
        let coord = rows.number(line, &rec, 1)?;
        let value = rows.number(line, &rec, 2)?;
        let (profile, wall_hi) = match &rec[0] {
            "y" => (&mut u_vs_y, 1.0),
            "x" => (&mut v_vs_x, 0.0),
            other => {
                return Err(parse_err(
                    path,
                    line,
                    "axis",
                    format!("axis must be `x` or `y`, found `{other}`"),
                ))
            }
        };
        if !(0.0..=1.0).contains(&coord) {
            return Err(parse_err(
                path,
                line,
                "coord",
                format!("{coord} lies outside [0, 1]"),
            ));
        }
        if let Some(&(prev, _)) = profile.last() {
            if coord <= prev {
                return Err(parse_err(
                    path,
                    line,
                    "coord",
                    format!("{coord} does not increase past {prev}"),
                ));
            }
        }
        let expected = if coord == 0.0 {
            Some(0.0)
        } else if coord == 1.0 {
            Some(wall_hi)
        } else {
            None
        };
        if let Some(e) = expected {
            if (value - e).abs() > 1e-12 {
                return Err(parse_err(
                    path,
                    line,
                    "value",
                    format!("wall value {value} contradicts boundary value {e}"),
                ));
            }
        }
        profile.push((coord, value));
    }
    Ok(CenterlineTable {
        u_vs_y,
        v_vs_x,
        provenance: comments.join("\n"),
    })
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

pub fn load_centerline(path: impl AsRef<Path>) -> Result<CenterlineTable> {
    let path = path.as_ref();
    parse_centerline(&read(path)?, path)
}

fn write_comments(out: &mut impl Write, text: &str) -> Result<()> {
    for line in text.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

pub fn write_centerline(path: impl AsRef<Path>, table: &CenterlineTable) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path.as_ref())?);
    write_comments(&mut file, &table.provenance)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CENTERLINE_HEADER)?;
    for (axis, profile) in [("y", &table.u_vs_y), ("x", &table.v_vs_x)] {
        for &(c, v) in profile.iter() {
            w.write_record([axis.to_string(), c.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

impl CenterlineTable {
    pub fn from_field(field: &ReferenceField) -> Self {
        Self {
            u_vs_y: field.centerline_u(),
            v_vs_x: field.centerline_v(),
            provenance: format!(
                "finite-difference streamfunction-vorticity solve, re={}, n={}, iterations={}",
                field.re, field.n, field.iterations
            ),
        }
    }
}

pub fn write_reference(path: impl AsRef<Path>, field: &ReferenceField) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path.as_ref())?);
    write_comments(
        &mut file,
        &format!(
            "re={}\nn={}\ntol={}\niterations={}\nresidual={}",
            field.re, field.n, field.tol, field.iterations, field.residual
        ),
    )?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(FIELD_HEADER)?;
    let n = field.n;
    for j in 0..n {
        for i in 0..n {
            let (u, v) = field.at(i, j);
            w.write_record([field.coords[i], field.coords[j], u, v].map(|x| x.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_reference(path: impl AsRef<Path>) -> Result<ReferenceField> {
    let path = path.as_ref();
    let text = read(path)?;
    let (comments, n_comments, body) = split_comments(&text);
    let meta = |key: &str| -> Option<f64> {
        comments
            .iter()
            .filter_map(|c| c.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .and_then(|(_, v)| v.trim().parse().ok())
    };
    let rows = Rows {
        path,
        header: &FIELD_HEADER,
        first_line: n_comments + 1,
    };
    let records = rows.read(body)?;
    let n = (records.len() as f64).sqrt().round() as usize;
    if n < 2 || n * n != records.len() {
        return Err(parse_err(
            path,
            rows.first_line,
            "",
            format!("{} data rows do not form a square grid", records.len()),
        ));
    }
    let coords: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let mut u = Vec::with_capacity(n * n);
    let mut v = Vec::with_capacity(n * n);
    for (k, (line, rec)) in records.iter().enumerate() {
        let (i, j) = (k % n, k / n);
        for (col, want) in [(0, coords[i]), (1, coords[j])] {
            let got = rows.number(*line, rec, col)?;
            if (got - want).abs() > 1e-9 {
                return Err(parse_err(
                    path,
                    *line,
                    FIELD_HEADER[col],
                    format!("expected grid coordinate {want}, found {got}"),
                ));
            }
        }
        u.push(rows.number(*line, rec, 2)?);
        v.push(rows.number(*line, rec, 3)?);
    }
    Ok(ReferenceField {
        n,
        re: meta("re").unwrap_or(f64::NAN),
        tol: meta("tol").unwrap_or(f64::NAN),
        iterations: meta("iterations").map_or(0, |x| x as usize),
        residual: meta("residual").unwrap_or(f64::NAN),
        coords,
        u,
        v,
    })
}
