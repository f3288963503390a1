//! Plain-text dump of a [`QpProblem`] for inspection with external tools.
//!
//! ```text
//! qp maximize <n> <m_eq> <m_in>
//! Q <nnz>
//! <row> <col> <value>        (one line per entry, zero-based, full symmetric)
//! c
//! <value>                    (n lines)
//! Aeq <nnz>
//! <row> <col> <value>
//! beq
//! <value>                    (m_eq lines)
//! Ain <nnz>
//! <row> <col> <value>
//! bin
//! <value>                    (m_in lines)
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so reading a dump
//! back yields the identical problem (row tags excepted).

use std::io::{self, BufRead, Write};

use super::{CooMatrix, LinearConstraints, QpError, QpProblem};

fn write_coo<W: Write>(w: &mut W, name: &str, m: &CooMatrix) -> io::Result<()> {
    writeln!(w, "{name} {}", m.nnz())?;
    for &(r, c, v) in m.entries() {
        writeln!(w, "{r} {c} {v:?}")?;
    }
    Ok(())
}

fn write_vec<W: Write>(w: &mut W, name: &str, v: &[f64]) -> io::Result<()> {
    writeln!(w, "{name}")?;
    for x in v {
        writeln!(w, "{x:?}")?;
    }
    Ok(())
}

pub fn write_text<W: Write>(problem: &QpProblem, mut w: W) -> io::Result<()> {
    let c = &problem.constraints;
    writeln!(
        w,
        "qp maximize {} {} {}",
        problem.dim(),
        c.eq_rhs.len(),
        c.ineq_rhs.len()
    )?;
    write_coo(&mut w, "Q", &problem.quadratic)?;
    write_vec(&mut w, "c", &problem.linear)?;
    write_coo(&mut w, "Aeq", &c.eq)?;
    write_vec(&mut w, "beq", &c.eq_rhs)?;
    write_coo(&mut w, "Ain", &c.ineq)?;
    write_vec(&mut w, "bin", &c.ineq_rhs)?;
    Ok(())
}

struct Lines<R> {
    inner: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String, QpError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of input".into())),
        }
    }

    fn err(&self, message: String) -> QpError {
        QpError::Format {
            line: self.line,
            message,
        }
    }

    fn header(&mut self, name: &str) -> Result<Option<usize>, QpError> {
        let l = self.next_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(format!("expected `{name}`")));
        }
        parts
            .next()
            .map(|n| n.parse().map_err(|_| self.err(format!("bad count `{n}`"))))
            .transpose()
    }

    fn number<T: std::str::FromStr>(&self, raw: Option<&str>) -> Result<T, QpError> {
        raw.and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err("expected a number".into()))
    }

    fn coo(&mut self, name: &str, rows: usize, cols: usize) -> Result<CooMatrix, QpError> {
        let nnz = self
            .header(name)?
            .ok_or_else(|| self.err("missing count".into()))?;
        let mut m = CooMatrix::new(rows, cols);
        for _ in 0..nnz {
            let l = self.next_line()?;
            let mut p = l.split_whitespace();
            let (r, c, v): (usize, usize, f64) = (
                self.number(p.next())?,
                self.number(p.next())?,
                self.number(p.next())?,
            );
            if r >= rows || c >= cols {
                return Err(self.err(format!("entry ({r}, {c}) out of bounds")));
            }
            m.push(r, c, v);
        }
        m.canonicalize();
        Ok(m)
    }

    fn vector(&mut self, name: &str, len: usize) -> Result<Vec<f64>, QpError> {
        self.header(name)?;
        (0..len)
            .map(|_| {
                let l = self.next_line()?;
                self.number(Some(l.trim()))
            })
            .collect()
    }
}

/// Reads a dump produced by [`write_text`]. Row tags are not part of the
/// format and come back empty.
pub fn read_text<R: BufRead>(reader: R) -> Result<QpProblem, QpError> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let head = lines.next_line()?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "qp" || parts[1] != "maximize" {
        return Err(lines.err("expected `qp maximize <n> <m_eq> <m_in>`".into()));
    }
    let n: usize = lines.number(Some(parts[2]))?;
    let m_eq: usize = lines.number(Some(parts[3]))?;
    let m_in: usize = lines.number(Some(parts[4]))?;
    let quadratic = lines.coo("Q", n, n)?;
    let linear = lines.vector("c", n)?;
    let eq = lines.coo("Aeq", m_eq, n)?;
    let eq_rhs = lines.vector("beq", m_eq)?;
    let ineq = lines.coo("Ain", m_in, n)?;
    let ineq_rhs = lines.vector("bin", m_in)?;
    Ok(QpProblem {
        quadratic,
        linear,
        constraints: LinearConstraints {
            eq,
            eq_rhs,
            eq_tags: Vec::new(),
            ineq,
            ineq_rhs,
            ineq_tags: Vec::new(),
        },
    })
}
