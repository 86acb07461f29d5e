//! Plain-text storage of a [`ScalarField`] with node coordinates.
//!
//! ```text
//! # Ns 33
//! # Ntheta 32
//! # spec_sha256 9f86d0…
//! s_index theta_index x1 x2 u
//! 0 0 1 0 -0.5
//! …
//! ```
//!
//! Rows are ordered with `θ` fastest. Numbers use the shortest representation
//! that reads back to the same `f64`.

use std::io::{BufRead, Write};

use crate::domain::CurvGrid;
use crate::error::{Error, Result};
use crate::solver::ScalarField;

pub const COLUMNS: &str = "s_index theta_index x1 x2 u";

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub spec_sha256: String,
    pub field: ScalarField,
    /// `(x1, x2)` per node, in field order.
    pub coords: Vec<(f64, f64)>,
}

pub fn write_field<W: Write>(mut w: W, g: &CurvGrid, u: &ScalarField) -> Result<()> {
    u.check_grid(g)?;
    writeln!(w, "# Ns {}", g.ns())?;
    writeln!(w, "# Ntheta {}", g.ntheta())?;
    writeln!(w, "# spec_sha256 {}", g.spec().content_hash())?;
    writeln!(w, "{COLUMNS}")?;
    for i in 0..g.ns() {
        for j in 0..g.ntheta() {
            let m = g.node(i, j);
            writeln!(w, "{i} {j} {} {} {}", m.x, m.y, u.at(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix('#')
        .map(str::trim)
        .and_then(|rest| rest.strip_prefix(key))
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::Format(format!("expected header '# {key} …', found {line:?}")))
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str, line_no: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Format(format!("line {line_no}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line_no}: bad {what} {tok:?}")))
}

pub fn read_field<R: BufRead>(r: R) -> Result<FieldFile> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("file ends before {what}")))?
            .map_err(Error::from)
    };
    let ns: usize = parse(Some(header_value(&next("Ns")?, "Ns")?), "Ns", 1)?;
    let ntheta: usize = parse(Some(header_value(&next("Ntheta")?, "Ntheta")?), "Ntheta", 2)?;
    let spec_sha256 = header_value(&next("spec_sha256")?, "spec_sha256")?.to_string();
    let cols = next("column names")?;
    if cols.split_whitespace().collect::<Vec<_>>() != COLUMNS.split_whitespace().collect::<Vec<_>>() {
        return Err(Error::Format(format!("unexpected column line {cols:?}")));
    }
    let n = ns
        .checked_mul(ntheta)
        .ok_or_else(|| Error::Format("grid size overflows".into()))?;
    let mut values = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    let mut line_no = 4;
    loop {
        let line = match lines.next() {
            None => break,
            Some(l) => l?,
        };
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let k = values.len();
        if k == n {
            return Err(Error::Format(format!("line {line_no}: more than {n} data rows")));
        }
        let mut toks = line.split_whitespace();
        let i: usize = parse(toks.next(), "s_index", line_no)?;
        let j: usize = parse(toks.next(), "theta_index", line_no)?;
        if (i, j) != (k / ntheta, k % ntheta) {
            return Err(Error::Format(format!(
                "line {line_no}: node ({i}, {j}) out of order, expected ({}, {})",
                k / ntheta,
                k % ntheta
            )));
        }
        let x: f64 = parse(toks.next(), "x1", line_no)?;
        let y: f64 = parse(toks.next(), "x2", line_no)?;
        let u: f64 = parse(toks.next(), "u", line_no)?;
        if toks.next().is_some() {
            return Err(Error::Format(format!("line {line_no}: trailing columns")));
        }
        coords.push((x, y));
        values.push(u);
    }
    if values.len() != n {
        return Err(Error::Format(format!("{} data rows, expected {n}", values.len())));
    }
    Ok(FieldFile {
        spec_sha256,
        field: ScalarField::new(ns, ntheta, values)?,
        coords,
    })
}
