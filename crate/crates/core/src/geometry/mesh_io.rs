//! Plain-text mesh format.
//!
//! ```text
//! nv nt nb
//! x y              (nv lines)
//! i j k            (nt lines, 0-based, counterclockwise)
//! i j loop_id      (nb lines)
//! ```
//!
//! Coordinates are written with 17 significant digits, which round-trips every
//! `f64` exactly. Curve descriptors are not part of the format.

use std::io::{BufRead, Write};

use super::TriMesh;
use crate::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &TriMesh, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {}",
        mesh.num_vertices(),
        mesh.triangles().len(),
        mesh.boundary_edges().len()
    )?;
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e}", p[0], p[1])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in mesh.boundary_edges() {
        writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.loop_id)?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<TriMesh> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut next_fields = |what: &str| -> Result<(usize, Vec<String>)> {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of file, expected {what}")))?;
        Ok((lineno, line?.split_whitespace().map(str::to_owned).collect()))
    };
    let (lineno, header) = next_fields("header")?;
    let [nv, nt, nb] = parse_n::<usize, 3>(&header, lineno)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lineno, f) = next_fields("vertex")?;
        vertices.push(parse_n::<f64, 2>(&f, lineno)?);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (lineno, f) = next_fields("triangle")?;
        triangles.push(parse_n::<usize, 3>(&f, lineno)?);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (lineno, f) = next_fields("boundary edge")?;
        let [i, j, l] = parse_n::<usize, 3>(&f, lineno)?;
        boundary.push(([i, j], l));
    }
    TriMesh::new(vertices, triangles, boundary, None)
}

fn parse_n<T: std::str::FromStr, const N: usize>(fields: &[String], lineno: usize) -> Result<[T; N]> {
    if fields.len() != N {
        return Err(Error::Parse(format!(
            "line {lineno}: expected {N} fields, found {}",
            fields.len()
        )));
    }
    let parsed: Vec<T> = fields
        .iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Parse(format!("line {lineno}: cannot parse '{s}'")))
        })
        .collect::<Result<_>>()?;
    parsed
        .try_into()
        .map_err(|_| Error::Parse(format!("line {lineno}: wrong field count")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = build_mesh(&DomainSpec::Annulus { r_in: 0.7, r_out: 1.9 }, 1).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.boundary_edges(), mesh.boundary_edges());
        let mut again = Vec::new();
        write_mesh(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn malformed_input_is_reported() {
        assert!(matches!(
            read_mesh("3 1 3\n0 0\n1 0\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(read_mesh("1 x 0\n".as_bytes()), Err(Error::Parse(_))));
        // parses, but boundary does not close
        let open = "3 1 2\n0 0\n1 0\n0 1\n0 1 2\n0 1 0\n1 2 0\n";
        assert!(matches!(read_mesh(open.as_bytes()), Err(Error::Validation(_))));
    }

    proptest! {
        #[test]
        fn coordinates_round_trip(x in proptest::num::f64::NORMAL, y in -1e6f64..1e6) {
            let text = format!("{:.16e} {:.16e}", x, y);
            let back: Vec<f64> = text.split(' ').map(|s| s.parse().unwrap()).collect();
            prop_assert_eq!(back[0].to_bits(), x.to_bits());
            prop_assert_eq!(back[1].to_bits(), y.to_bits());
        }
    }
}
