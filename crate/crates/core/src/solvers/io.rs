//! Plain-text mapping files: a `rows cols method direction lambda eta`
//! header followed by one matrix row per line. Values are written in
//! shortest round-trip form, so a save/load cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Hyperparams, Mapping};
use crate::error::{Error, Result};

pub fn save_mapping(path: &Path, mapping: &Mapping) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let eta = mapping.hyperparams.eta.map_or_else(|| "-".to_string(), |e| e.to_string());
    writeln!(
        w,
        "{} {} {} {} {} {}",
        mapping.nrows(),
        mapping.ncols(),
        mapping.method,
        mapping.direction,
        mapping.hyperparams.ridge,
        eta
    )
    .map_err(io)?;
    for row in mapping.data.row_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                write!(w, " ").map_err(io)?;
            }
            write!(w, "{v:?}").map_err(io)?;
            first = false;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_mapping(path: &Path) -> Result<Mapping> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols, method, direction, ridge, eta] = fields[..] else {
        return Err(Error::parse(path, 1, "expected `rows cols method direction lambda eta`"));
    };
    let bad = |what: &str| Error::parse(path, 1, format!("bad {what} in header"));
    let rows: usize = rows.parse().map_err(|_| bad("rows"))?;
    let cols: usize = cols.parse().map_err(|_| bad("cols"))?;
    let method = method.parse().map_err(|_| bad("method"))?;
    let direction = direction.parse().map_err(|_| bad("direction"))?;
    let ridge: f64 = ridge.parse().map_err(|_| bad("lambda"))?;
    let eta = match eta {
        "-" => None,
        e => Some(e.parse::<f64>().map_err(|_| bad("eta"))?),
    };

    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (n, line) in lines.enumerate() {
        let line_no = n as u64 + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(path, line_no, format!("`{tok}` is not a finite number")))?;
            values.push(v);
        }
        if values.len() - before != cols {
            return Err(Error::parse(path, line_no, format!("expected {cols} values")));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Dimension(format!("{}: header declares {rows} rows, found {seen}", path.display())));
    }
    Ok(Mapping {
        data: DMatrix::from_row_slice(rows, cols, &values),
        method,
        direction,
        hyperparams: Hyperparams { ridge, eta, ..Hyperparams::default() },
    })
}
