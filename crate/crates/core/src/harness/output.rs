use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Truth;
use crate::error::Result;
use crate::problems::Pde;
use crate::weighting::{LossBreakdown, Term};

/// One logged training iteration. Absent terms serialize as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub total: f64,
    #[serde(rename = "L_ic")]
    pub l_ic: Option<f64>,
    #[serde(rename = "L_bc")]
    pub l_bc: Option<f64>,
    #[serde(rename = "L_r")]
    pub l_r: Option<f64>,
    pub lam_ic: Option<f64>,
    pub lam_bc: Option<f64>,
    pub lam_r: Option<f64>,
}

impl HistoryRow {
    pub fn new(
        iter: usize,
        total: f64,
        losses: &LossBreakdown,
        terms: &[Term],
        lambdas: &[f64],
    ) -> Self {
        let lam = |t: Term| terms.iter().position(|&x| x == t).map(|k| lambdas[k]);
        Self {
            iter,
            total,
            l_ic: losses.ic,
            l_bc: losses.bc,
            l_r: losses.r,
            lam_ic: lam(Term::Ic),
            lam_bc: lam(Term::Bc),
            lam_r: lam(Term::R),
        }
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> {
        [self.lam_ic, self.lam_bc, self.lam_r].into_iter().flatten()
    }
}

/// In-memory history mirrored to `history.csv`, flushed every
/// `flush_every` rows.
pub struct HistoryLog {
    pub rows: Vec<HistoryRow>,
    writer: Option<csv::Writer<BufWriter<File>>>,
    flush_every: usize,
}

impl HistoryLog {
    pub fn new(path: Option<&Path>, flush_every: usize) -> Result<Self> {
        let writer = match path {
            Some(p) => Some(csv::Writer::from_writer(BufWriter::new(File::create(p)?))),
            None => None,
        };
        Ok(Self {
            rows: Vec::new(),
            writer,
            flush_every: flush_every.max(1),
        })
    }

    pub fn push(&mut self, row: HistoryRow) -> Result<()> {
        if let Some(w) = &mut self.writer {
            w.serialize(&row)?;
            if (self.rows.len() + 1) % self.flush_every == 0 {
                w.flush()?;
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn finish(&mut self) -> Result<()> {
        if let Some(w) = &mut self.writer {
            if self.rows.is_empty() {
                w.write_record([
                    "iter", "total", "L_ic", "L_bc", "L_r", "lam_ic", "lam_bc", "lam_r",
                ])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes `field.csv`: coordinates, exact, predicted and absolute error per
/// compared output; cavity adds the velocity magnitude.
pub fn write_field(path: &Path, pde: &Pde, truth: &Truth, pred: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let coords: [&str; 2] = match pde {
        Pde::Kg(_) => ["x", "t"],
        _ => ["x", "y"],
    };
    let mut header: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
    let names: &[&str] = match pde {
        Pde::Cavity(_) => &["u", "v", "speed"],
        _ => &["u"],
    };
    for name in names {
        for suffix in ["exact", "pred"] {
            header.push(format!("{name}_{suffix}"));
        }
        header.push(if *name == "u" {
            "abs_err".into()
        } else {
            format!("{name}_abs_err")
        });
    }
    w.write_record(&header)?;
    let n = truth.points.len() / 2;
    let speed = |f: &[Vec<f64>], p: usize| f[0][p].hypot(f[1][p]);
    let mut row = Vec::with_capacity(header.len());
    for p in 0..n {
        row.clear();
        row.push(truth.points[2 * p]);
        row.push(truth.points[2 * p + 1]);
        for k in 0..truth.fields.len() {
            let (e, q) = (truth.fields[k][p], pred[k][p]);
            row.extend([e, q, (q - e).abs()]);
        }
        if truth.fields.len() == 2 {
            let (e, q) = (speed(&truth.fields, p), speed(pred, p));
            row.extend([e, q, (q - e).abs()]);
        }
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
