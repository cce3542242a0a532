//! Solution dump: mesh path line, one `u` value per node, then `lambda c T E`.

use std::io::{BufRead, Write};

use super::Solution;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionDump {
    pub mesh_path: String,
    pub u: Vec<f64>,
    /// `NaN` for problems without a constraint.
    pub lambda: f64,
    pub c: f64,
    pub t: f64,
    pub e: f64,
}

pub fn write_solution<W: Write>(solution: &Solution<'_>, mesh_path: &str, mut out: W) -> Result<()> {
    if mesh_path.contains('\n') {
        return Err(Error::validation("mesh path must be a single line"));
    }
    writeln!(out, "{mesh_path}")?;
    for v in &solution.u {
        writeln!(out, "{v:.16e}")?;
    }
    writeln!(
        out,
        "{:.16e} {:.16e} {:.16e} {:.16e}",
        solution.lambda.unwrap_or(f64::NAN),
        solution.c.unwrap_or(f64::NAN),
        solution.energies.t,
        solution.energies.e
    )?;
    Ok(())
}

fn parse(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: expected a number, got '{s}'")))
}

pub fn read_solution<R: BufRead>(input: R) -> Result<SolutionDump> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let lines: Vec<&str> = lines.iter().map(|l| l.trim_end()).filter(|l| !l.is_empty()).collect();
    if lines.len() < 2 {
        return Err(Error::Parse("solution dump needs a mesh path and a trailer".into()));
    }
    let trailer: Vec<&str> = lines[lines.len() - 1].split_whitespace().collect();
    if trailer.len() != 4 {
        return Err(Error::Parse(format!(
            "line {}: trailer must hold 'lambda c T E'",
            lines.len()
        )));
    }
    let u = lines[1..lines.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, l)| parse(l.trim(), i + 2))
        .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = trailer.iter().map(|s| parse(s, lines.len())).collect::<Result<_>>()?;
    Ok(SolutionDump {
        mesh_path: lines[0].to_string(),
        u,
        lambda: t[0],
        c: t[1],
        t: t[2],
        e: t[3],
    })
}
