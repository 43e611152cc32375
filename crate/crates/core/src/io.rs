//! CSV readers and writers. Column layouts are fixed:
//!
//! | artifact    | columns                                             |
//! |-------------|-----------------------------------------------------|
//! | ensemble    | `w, q0.., p0..`                                     |
//! | field       | `node, q, p, re_psi, im_psi, f`                     |
//! | diagnostics | `t, name, value`                                    |
//! | matrix      | `row, col, re, im`                                  |
//! | cochain     | `degree, component, i0, i1, i2, value`              |
//! | family      | `node, r0.., w, re_psi0, im_psi0, ..`               |
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the values bit for bit.

use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, Writer};

use crate::classical::{PhasePoint, WeightedEnsemble};
use crate::cochain::Cochain;
use crate::error::{Error, Result};
use crate::grid::{ParameterGrid, WeightDensity};
use crate::koopman::{ClassicalWaveFunction, PhaseDensity};
use crate::linalg::{CMatrix, CVector, C64};
use crate::mixtures::WaveFamily;

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Io(format!("{what}: cannot parse '{s}' as a number")))
}

fn idx(s: &str, what: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Io(format!("{what}: cannot parse '{s}' as an index")))
}

fn records<R: Read>(r: R) -> Result<(StringRecord, Vec<StringRecord>)> {
    let mut rd = ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rd.headers()?.clone();
    let rows = rd.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_ensemble<W: Write>(w: W, e: &WeightedEnsemble) -> Result<()> {
    let d = e.dim();
    let mut wr = Writer::from_writer(w);
    let mut head = vec!["w".to_string()];
    head.extend((0..d).map(|i| format!("q{i}")));
    head.extend((0..d).map(|i| format!("p{i}")));
    wr.write_record(&head)?;
    for (wt, z) in e.weights().iter().zip(e.points()) {
        let mut row = vec![f(*wt)];
        row.extend(z.q.iter().chain(&z.p).map(|x| f(*x)));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_ensemble<R: Read>(r: R) -> Result<WeightedEnsemble> {
    let (head, rows) = records(r)?;
    if head.len() < 3 || head.len() % 2 == 0 || &head[0] != "w" {
        return Err(Error::Io("ensemble header must be w, q0.., p0..".into()));
    }
    let d = (head.len() - 1) / 2;
    let mut weights = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let v = row.iter().map(|s| num(s, &format!("ensemble row {k}"))).collect::<Result<Vec<_>>>()?;
        weights.push(v[0]);
        points.push(PhasePoint::new(v[1..=d].to_vec(), v[d + 1..].to_vec()));
    }
    WeightedEnsemble::new(weights, points)
}

/// Grid dump of a classical wavefunction and/or density. Missing fields are
/// written as zeros.
pub fn write_field<W: Write>(w: W, psi: Option<&ClassicalWaveFunction>, density: Option<&PhaseDensity>) -> Result<()> {
    let grid = match (psi, density) {
        (Some(p), Some(d)) => {
            p.grid().same_as(d.grid())?;
            p.grid()
        }
        (Some(p), None) => p.grid(),
        (None, Some(d)) => d.grid(),
        (None, None) => return Err(Error::InvalidInput("nothing to write".into())),
    };
    let mut wr = Writer::from_writer(w);
    wr.write_record(["node", "q", "p", "re_psi", "im_psi", "f"])?;
    for k in 0..grid.len() {
        let (q, p) = grid.coords(k);
        let z = psi.map_or(C64::new(0.0, 0.0), |s| s.values()[k]);
        let fv = density.map_or(0.0, |d| d.values()[k]);
        wr.write_record([k.to_string(), f(q), f(p), f(z.re), f(z.im), f(fv)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Streaming `t, name, value` writer.
pub struct DiagnosticsWriter<W: Write> {
    inner: Writer<W>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = Writer::from_writer(w);
        inner.write_record(["t", "name", "value"])?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, t: f64, name: &str, value: f64) -> Result<()> {
        self.inner.write_record([f(t), name.to_string(), f(value)])?;
        Ok(())
    }

    pub fn series(&mut self, name: &str, times: &[f64], values: &[f64]) -> Result<()> {
        for (t, v) in times.iter().zip(values) {
            self.row(*t, name, *v)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn read_diagnostics<R: Read>(r: R) -> Result<Vec<(f64, String, f64)>> {
    let (_, rows) = records(r)?;
    rows.iter()
        .map(|row| {
            if row.len() != 3 {
                return Err(Error::Io("diagnostics rows have three columns".into()));
            }
            Ok((num(&row[0], "t")?, row[1].to_string(), num(&row[2], "value")?))
        })
        .collect()
}

pub fn write_matrix<W: Write>(w: W, m: &CMatrix) -> Result<()> {
    let mut wr = Writer::from_writer(w);
    wr.write_record(["row", "col", "re", "im"])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            wr.write_record([i.to_string(), j.to_string(), f(z.re), f(z.im)])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Entries not listed are zero; the shape is inferred from the largest indices.
pub fn read_matrix<R: Read>(r: R) -> Result<CMatrix> {
    let (_, rows) = records(r)?;
    let mut entries = Vec::with_capacity(rows.len());
    let (mut nr, mut nc) = (0, 0);
    for row in &rows {
        if row.len() != 4 {
            return Err(Error::Io("matrix rows have four columns".into()));
        }
        let (i, j) = (idx(&row[0], "row")?, idx(&row[1], "col")?);
        nr = nr.max(i + 1);
        nc = nc.max(j + 1);
        entries.push((i, j, C64::new(num(&row[2], "re")?, num(&row[3], "im")?)));
    }
    let mut m = CMatrix::zeros(nr, nc);
    for (i, j, z) in entries {
        m[(i, j)] = z;
    }
    Ok(m)
}

/// Defined cells only.
pub fn write_cochain<W: Write>(w: W, c: &Cochain) -> Result<()> {
    let mut wr = Writer::from_writer(w);
    wr.write_record(["degree", "component", "i0", "i1", "i2", "value"])?;
    let deg = c.degree().to_string();
    for (comp, node, v) in c.cells() {
        let m = c.grid().multi(node);
        wr.write_record([deg.clone(), comp.to_string(), m[0].to_string(), m[1].to_string(), m[2].to_string(), f(v)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_family<W: Write>(w: W, fam: &WaveFamily, weight: &WeightDensity) -> Result<()> {
    let grid = fam.grid();
    grid.same_as(weight.grid())?;
    let d = grid.dim();
    let m = fam.state(0).len();
    let mut wr = Writer::from_writer(w);
    let mut head = vec!["node".to_string()];
    head.extend((0..d).map(|a| format!("r{a}")));
    head.push("w".into());
    for c in 0..m {
        head.push(format!("re_psi{c}"));
        head.push(format!("im_psi{c}"));
    }
    wr.write_record(&head)?;
    for k in 0..grid.len() {
        let r = grid.coord(k);
        let mut row = vec![k.to_string()];
        row.extend(r[..d].iter().map(|x| f(*x)));
        row.push(f(weight.values()[k]));
        for z in fam.state(k).iter() {
            row.push(f(z.re));
            row.push(f(z.im));
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a family written on `grid`; node indices must cover the grid once.
pub fn read_family<R: Read>(r: R, grid: ParameterGrid, hbar: f64) -> Result<(WaveFamily, WeightDensity)> {
    let (head, rows) = records(r)?;
    let d = grid.dim();
    let fixed = 2 + d;
    if head.len() <= fixed || (head.len() - fixed) % 2 != 0 {
        return Err(Error::Io(format!("family header must be node, r0..r{}, w, re_psi0, im_psi0, ..", d - 1)));
    }
    if rows.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: rows.len() });
    }
    let m = (head.len() - fixed) / 2;
    let mut w = vec![f64::NAN; grid.len()];
    let mut states = vec![CVector::zeros(m); grid.len()];
    for row in &rows {
        let k = idx(&row[0], "node")?;
        if k >= grid.len() || !w[k].is_nan() {
            return Err(Error::Io(format!("node {k} out of range or repeated")));
        }
        w[k] = num(&row[1 + d], "w")?;
        for c in 0..m {
            states[k][c] = C64::new(num(&row[fixed + 2 * c], "re_psi")?, num(&row[fixed + 2 * c + 1], "im_psi")?);
        }
    }
    let weight = WeightDensity::new(grid.clone(), w)?;
    Ok((WaveFamily::new(grid, states, hbar)?, weight))
}
