use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature;
use crate::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance on `|(x − center)·ν − ρ|` per edge for a polygon to count as tangential.
pub const TANGENTIAL_TOL: f64 = 1e-12;

/// Parametric planar domain (the box variant also describes `n`-dimensional boxes
/// for the closed forms; only `n = 2` boxes can be meshed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Regular `sides`-gon centered at the origin, one vertex on the positive x-axis.
    RegularPolygon {
        sides: usize,
        area: f64,
    },
    /// Simple polygon, vertices listed counterclockwise.
    Polygon {
        vertices: Vec<Point>,
    },
    Disk {
        radius: f64,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
    },
    /// `∏ (−a_i, a_i)` with `a` sorted ascending.
    Box {
        half_widths: Vec<f64>,
    },
    /// Star-shaped domain with boundary `r(θ) = radius + amplitude·cos(mode·θ)`.
    PerturbedDisk {
        radius: f64,
        mode: u32,
        amplitude: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainMeasures {
    pub area: f64,
    pub perimeter: f64,
    /// Only reported where it is exact: tangential polygons, disks, boxes.
    pub inradius: Option<f64>,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::RegularPolygon { sides, area } => {
                if *sides < 3 {
                    return Err(Error::validation(format!(
                        "regular polygon needs at least 3 sides, got {sides}"
                    )));
                }
                positive("regular polygon area", *area)
            }
            DomainSpec::Polygon { vertices } => validate_polygon(vertices),
            DomainSpec::Disk { radius } => positive("disk radius", *radius),
            DomainSpec::Annulus { r_in, r_out } => {
                positive("annulus inner radius", *r_in)?;
                if !(r_out.is_finite() && r_out > r_in) {
                    return Err(Error::validation(format!(
                        "annulus needs r_in < r_out, got r_in = {r_in}, r_out = {r_out}"
                    )));
                }
                Ok(())
            }
            DomainSpec::Box { half_widths } => {
                if half_widths.len() < 2 {
                    return Err(Error::validation("box needs at least 2 half-widths"));
                }
                for &a in half_widths {
                    positive("box half-width", a)?;
                }
                if half_widths.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::validation("box half-widths must be sorted ascending"));
                }
                Ok(())
            }
            DomainSpec::PerturbedDisk {
                radius,
                mode,
                amplitude,
            } => {
                positive("perturbed disk radius", *radius)?;
                if *mode < 1 {
                    return Err(Error::validation("perturbation mode must be at least 1"));
                }
                if !amplitude.is_finite() || amplitude.abs() >= 0.5 * radius {
                    return Err(Error::validation(format!(
                        "perturbation amplitude {amplitude} must satisfy |t| < R/2 = {}",
                        0.5 * radius
                    )));
                }
                Ok(())
            }
        }
    }

    /// Exact area, perimeter and (where available) inradius.
    pub fn measures(&self) -> Result<DomainMeasures> {
        self.validate()?;
        Ok(match self {
            DomainSpec::RegularPolygon { sides, area } => {
                let rho = regular_polygon_inradius(*sides, *area);
                DomainMeasures {
                    area: *area,
                    perimeter: 2.0 * area / rho,
                    inradius: Some(rho),
                }
            }
            DomainSpec::Polygon { vertices } => DomainMeasures {
                area: signed_area(vertices),
                perimeter: polygon_perimeter(vertices),
                inradius: incircle(vertices, TANGENTIAL_TOL).ok().map(|(_, rho)| rho),
            },
            DomainSpec::Disk { radius } => DomainMeasures {
                area: PI * radius * radius,
                perimeter: 2.0 * PI * radius,
                inradius: Some(*radius),
            },
            DomainSpec::Annulus { r_in, r_out } => DomainMeasures {
                area: PI * (r_out * r_out - r_in * r_in),
                perimeter: 2.0 * PI * (r_in + r_out),
                inradius: None,
            },
            DomainSpec::Box { half_widths } => {
                let n = half_widths.len();
                let sigma = elementary_symmetric(half_widths);
                let scale = 2f64.powi(n as i32);
                DomainMeasures {
                    area: scale * sigma[n],
                    perimeter: scale * sigma[n - 1],
                    inradius: Some(half_widths[0]),
                }
            }
            DomainSpec::PerturbedDisk {
                radius,
                mode,
                amplitude,
            } => {
                let (r0, k, t) = (*radius, f64::from(*mode), *amplitude);
                let speed = |theta: f64| {
                    let r = r0 + t * (k * theta).cos();
                    let dr = -t * k * (k * theta).sin();
                    (r * r + dr * dr).sqrt()
                };
                DomainMeasures {
                    area: PI * r0 * r0 + 0.5 * PI * t * t,
                    perimeter: quadrature::integrate(speed, 0.0, 2.0 * PI, 1e-13)?,
                    inradius: None,
                }
            }
        })
    }
}

fn positive(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} must be positive, got {value}")))
    }
}

/// Inradius of the regular `n`-gon with the given area.
pub fn regular_polygon_inradius(sides: usize, area: f64) -> f64 {
    let n = sides as f64;
    (area / (n * (PI / n).tan())).sqrt()
}

/// Vertices of the regular `n`-gon of the given area, centered at the origin
/// with the first vertex on the positive x-axis.
pub fn regular_polygon_vertices(sides: usize, area: f64) -> Vec<Point> {
    let n = sides as f64;
    let circumradius = regular_polygon_inradius(sides, area) / (PI / n).cos();
    (0..sides)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n;
            [circumradius * theta.cos(), circumradius * theta.sin()]
        })
        .collect()
}

/// Elementary symmetric polynomials `σ_0 = 1, σ_1, …, σ_n` of `a`.
pub fn elementary_symmetric(a: &[f64]) -> Vec<f64> {
    let mut sigma = vec![0.0; a.len() + 1];
    sigma[0] = 1.0;
    for (m, &x) in a.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            sigma[k] += x * sigma[k - 1];
        }
    }
    sigma
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

pub fn polygon_perimeter(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n).map(|i| distance(vertices[i], vertices[(i + 1) % n])).sum()
}

pub(crate) fn distance(p: Point, q: Point) -> f64 {
    (q[0] - p[0]).hypot(q[1] - p[1])
}

fn validate_polygon(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::validation("polygon needs at least 3 vertices"));
    }
    if vertices.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::validation("polygon vertices must be finite"));
    }
    for i in 0..n {
        if distance(vertices[i], vertices[(i + 1) % n]) == 0.0 {
            return Err(Error::validation(format!("polygon edge {i} has zero length")));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            // adjacent edges share a vertex and are allowed to touch there
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::validation(format!(
                    "polygon is not simple: edges {i} and {j} intersect"
                )));
            }
        }
    }
    if signed_area(vertices) <= 0.0 {
        return Err(Error::validation(
            "polygon must be positively oriented (counterclockwise)",
        ));
    }
    Ok(())
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Finds the incircle of a counterclockwise polygon.
///
/// Returns `(center, ρ)` when every edge line lies at distance `ρ` from the
/// center to within `tol · max(1, ρ)`. Otherwise returns the index of the
/// edge with the largest deviation.
pub fn incircle(vertices: &[Point], tol: f64) -> std::result::Result<(Point, f64), usize> {
    let n = vertices.len();
    // least squares for n_i·x0 + ρ = n_i·p_i
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let len = distance(p, q);
        let normal = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
        rows.push(([normal[0], normal[1], 1.0], normal[0] * p[0] + normal[1] * p[1]));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (row, rhs) in &rows {
        for r in 0..3 {
            atb[r] += row[r] * rhs;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let Some(sol) = solve3(ata, atb) else {
        return Err(0);
    };
    let center = [sol[0], sol[1]];
    let rho = sol[2];
    let (worst, deviation) = rows
        .iter()
        .enumerate()
        .map(|(i, (row, rhs))| (i, (row[0] * center[0] + row[1] * center[1] + rho - rhs).abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if rho > 0.0 && deviation <= tol * rho.max(1.0) {
        Ok((center, rho))
    } else {
        Err(worst)
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn regular_square_of_area_pi() {
        let m = DomainSpec::RegularPolygon { sides: 4, area: PI }.measures().unwrap();
        let rho = (PI / 4.0).sqrt();
        assert!(close(m.inradius.unwrap(), rho, 1e-15));
        assert!(close(m.inradius.unwrap(), 0.886227, 1e-6));
        assert!(close(m.perimeter, 7.089815, 1e-6));
        assert!(close(m.perimeter, 2.0 * PI / rho, 1e-15));
    }

    #[test]
    fn disk_and_annulus() {
        let m = DomainSpec::Disk { radius: 1.0 }.measures().unwrap();
        assert_eq!((m.area, m.perimeter, m.inradius), (PI, 2.0 * PI, Some(1.0)));
        let m = DomainSpec::Annulus { r_in: 1.0, r_out: 2.0 }.measures().unwrap();
        assert!(close(m.area, 3.0 * PI, 1e-15));
        assert!(close(m.perimeter, 6.0 * PI, 1e-15));
        assert_eq!(m.inradius, None);
    }

    #[test]
    fn box_measures_in_two_dimensions() {
        let m = DomainSpec::Box {
            half_widths: vec![1.0, 2.0],
        }
        .measures()
        .unwrap();
        assert_eq!((m.area, m.perimeter, m.inradius), (8.0, 12.0, Some(1.0)));
    }

    #[test]
    fn perturbed_disk_area_and_perimeter() {
        let spec = DomainSpec::PerturbedDisk {
            radius: 1.0,
            mode: 3,
            amplitude: 0.1,
        };
        let m = spec.measures().unwrap();
        assert!(close(m.area, PI + 0.005 * PI, 1e-15));
        // perimeter of r = 1 + t cos 3θ exceeds 2π at second order in t
        assert!(m.perimeter > 2.0 * PI && m.perimeter < 2.0 * PI * 1.05);
        let flat = DomainSpec::PerturbedDisk {
            radius: 2.0,
            mode: 1,
            amplitude: 0.0,
        };
        assert!(close(flat.measures().unwrap().perimeter, 4.0 * PI, 1e-13));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            DomainSpec::RegularPolygon { sides: 2, area: 1.0 },
            DomainSpec::RegularPolygon { sides: 5, area: 0.0 },
            DomainSpec::Disk { radius: -1.0 },
            DomainSpec::Annulus { r_in: 2.0, r_out: 1.0 },
            DomainSpec::Box {
                half_widths: vec![2.0, 1.0],
            },
            DomainSpec::Box { half_widths: vec![1.0] },
            DomainSpec::PerturbedDisk {
                radius: 1.0,
                mode: 2,
                amplitude: 0.5,
            },
            DomainSpec::PerturbedDisk {
                radius: 1.0,
                mode: 0,
                amplitude: 0.1,
            },
            // bow-tie
            DomainSpec::Polygon {
                vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            },
            // clockwise
            DomainSpec::Polygon {
                vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
            },
        ];
        for spec in bad {
            assert!(matches!(spec.measures(), Err(Error::Validation(_))), "{spec:?}");
        }
    }

    #[test]
    fn incircle_of_regular_and_irregular_polygons() {
        let hex = regular_polygon_vertices(6, PI);
        let (center, rho) = incircle(&hex, TANGENTIAL_TOL).unwrap();
        assert!(center[0].abs() < 1e-14 && center[1].abs() < 1e-14);
        assert!(close(rho, regular_polygon_inradius(6, PI), 1e-14));
        // any triangle is tangential
        let tri = [[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]];
        let (center, rho) = incircle(&tri, TANGENTIAL_TOL).unwrap();
        assert!(close(rho, 1.0, 1e-14) && close(center[0], 1.0, 1e-14) && close(center[1], 1.0, 1e-14));
        // a 1 x 2 rectangle is not
        let rect = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
        assert!(incircle(&rect, TANGENTIAL_TOL).is_err());
    }

    #[test]
    fn elementary_symmetric_values() {
        let s = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(s, vec![1.0, 6.0, 11.0, 6.0]);
    }

    #[test]
    fn domain_spec_json_rejects_unknown_keys() {
        let ok: DomainSpec = serde_json::from_str(r#"{"kind":"disk","radius":1.5}"#).unwrap();
        assert_eq!(ok, DomainSpec::Disk { radius: 1.5 });
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"disk","radius":1.5,"x":1}"#).is_err());
    }
}
