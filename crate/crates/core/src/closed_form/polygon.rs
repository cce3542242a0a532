use std::f64::consts::PI;

use serde::Serialize;

use crate::geometry::{incircle, polygon_perimeter, DomainSpec, Point, TANGENTIAL_TOL};
use crate::{Error, Result};

/// `E = ∫u` and `T = −E/2` for `β = 0`, `f ≡ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolygonEnergy {
    pub e: f64,
    pub t: f64,
}

/// Energy of the regular `N`-gon of the given area.
///
/// At area `π`, `E(P_N) = π²(3 + tan²(π/N)) / (24 N tan(π/N))`; other areas
/// follow from `T(λΩ) = λ⁴ T(Ω)`.
pub fn regular_polygon_energy(sides: usize, area: f64) -> Result<PolygonEnergy> {
    if sides < 3 {
        return Err(Error::domain(format!("a polygon needs at least 3 sides, got {sides}")));
    }
    if !(area.is_finite() && area > 0.0) {
        return Err(Error::domain(format!("area must be positive, got {area}")));
    }
    let n = sides as f64;
    let tan = (PI / n).tan();
    let e_pi = PI * PI * (3.0 + tan * tan) / (24.0 * n * tan);
    let scale = area / PI;
    let e = e_pi * scale * scale;
    Ok(PolygonEnergy { e, t: -0.5 * e })
}

struct Tangential {
    vertices: Vec<Point>,
    center: Point,
    rho: f64,
    perimeter: f64,
    /// `∫_∂Ω |x − center|² ds`
    second_moment: f64,
}

fn tangential(vertices: &[Point]) -> Result<Tangential> {
    DomainSpec::Polygon {
        vertices: vertices.to_vec(),
    }
    .validate()?;
    let (center, rho) = incircle(vertices, TANGENTIAL_TOL).map_err(|edge| {
        Error::precondition(format!(
            "polygon is not tangential: edge {edge} is not tangent to a common incircle"
        ))
    })?;
    let shifted: Vec<Point> = vertices.iter().map(|p| [p[0] - center[0], p[1] - center[1]]).collect();
    let n = shifted.len();
    // along p + τ(q − p), τ ∈ [0, 1]: ∫|x|² ds = L(|p|² + p·d + |d|²/3)
    let second_moment = (0..n)
        .map(|i| {
            let p = shifted[i];
            let q = shifted[(i + 1) % n];
            let d = [q[0] - p[0], q[1] - p[1]];
            let len = d[0].hypot(d[1]);
            len * (p[0] * p[0] + p[1] * p[1] + p[0] * d[0] + p[1] * d[1] + (d[0] * d[0] + d[1] * d[1]) / 3.0)
        })
        .sum();
    Ok(Tangential {
        perimeter: polygon_perimeter(&shifted),
        vertices: shifted,
        center,
        rho,
        second_moment,
    })
}

/// `E = (ρ/16) ∫_∂Ω |x|² ds` about the incenter, for any tangential polygon.
pub fn tangential_polygon_energy(vertices: &[Point]) -> Result<PolygonEnergy> {
    let tp = tangential(vertices)?;
    let e = tp.rho / 16.0 * tp.second_moment;
    Ok(PolygonEnergy { e, t: -0.5 * e })
}

/// The minimizer `u(x) = (1/(4P)) ∫_∂Ω |y|² ds − |x|²/4` (incenter at the origin)
/// on a tangential polygon, evaluated at a point of the closed polygon.
pub fn tangential_torsion_eval(x: Point, vertices: &[Point]) -> Result<f64> {
    let tp = tangential(vertices)?;
    let local = [x[0] - tp.center[0], x[1] - tp.center[1]];
    if !contains_closed(&tp.vertices, local, 1e-12 * tp.rho.max(1.0)) {
        return Err(Error::domain(format!(
            "point ({}, {}) lies outside the polygon",
            x[0], x[1]
        )));
    }
    Ok(tp.second_moment / (4.0 * tp.perimeter) - 0.25 * (local[0] * local[0] + local[1] * local[1]))
}

/// Point-in-polygon by crossing number, counting points within `tol` of an edge as inside.
fn contains_closed(vertices: &[Point], p: Point, tol: f64) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let tau = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
        let foot = [a[0] + tau * d[0], a[1] + tau * d[1]];
        if (p[0] - foot[0]).hypot(p[1] - foot[1]) <= tol {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_cross = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * d[0];
            if p[0] < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_polygon_vertices;

    #[test]
    fn triangle_and_square_values() {
        let e3 = regular_polygon_energy(3, PI).unwrap().e;
        assert!((e3 - PI * PI / (12.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((e3 - 0.474852).abs() < 1e-6);
        let e4 = regular_polygon_energy(4, PI).unwrap();
        assert!((e4.e - PI * PI / 24.0).abs() < 1e-15);
        assert!((e4.e - 0.411234).abs() < 1e-6);
        assert_eq!(e4.t, -0.5 * e4.e);
        assert!(regular_polygon_energy(2, PI).is_err());
    }

    #[test]
    fn large_n_approaches_disk() {
        let e = regular_polygon_energy(100_000, PI).unwrap().e;
        assert!((e - PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn area_scaling_is_quartic_in_length() {
        let a = regular_polygon_energy(5, PI).unwrap().e;
        let b = regular_polygon_energy(5, 4.0 * PI).unwrap().e;
        assert!((b - 16.0 * a).abs() < 1e-14);
    }

    #[test]
    fn tangential_route_matches_regular_formula() {
        for n in 3..=30 {
            let v = regular_polygon_vertices(n, PI);
            let a = tangential_polygon_energy(&v).unwrap().e;
            let b = regular_polygon_energy(n, PI).unwrap().e;
            assert!((a - b).abs() <= 1e-12 * b, "N = {n}: {a} vs {b}");
        }
        let hex = tangential_polygon_energy(&regular_polygon_vertices(6, PI)).unwrap().e;
        assert!((hex - 0.395709).abs() < 1e-6);
    }

    #[test]
    fn translation_does_not_change_energy() {
        let v: Vec<Point> = regular_polygon_vertices(7, 2.0)
            .iter()
            .map(|p| [p[0] + 3.0, p[1] - 1.0])
            .collect();
        let a = tangential_polygon_energy(&v).unwrap().e;
        let b = regular_polygon_energy(7, 2.0).unwrap().e;
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn non_tangential_polygon_names_an_edge() {
        let rect = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
        match tangential_polygon_energy(&rect) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("edge")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn square_corner_and_center_values() {
        let v = regular_polygon_vertices(4, PI);
        // side s = √π: ∫|x|² ds = 4s³/3, P = 4s, so u = s²/12 − |x|²/4
        let corner = tangential_torsion_eval(v[0], &v).unwrap();
        assert!((corner + PI / 24.0).abs() < 1e-14);
        let center = tangential_torsion_eval([0.0, 0.0], &v).unwrap();
        assert!((center - PI / 12.0).abs() < 1e-14);
        assert!(tangential_torsion_eval([2.0, 0.0], &v).is_err());
    }

    #[test]
    fn boundary_mean_vanishes() {
        // Simpson's rule is exact for the quadratic u along each edge
        let v = regular_polygon_vertices(5, 1.7);
        let mut integral = 0.0;
        let mut perimeter = 0.0;
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let u = |x| tangential_torsion_eval(x, &v).unwrap();
            integral += len / 6.0 * (u(p) + 4.0 * u(m) + u(q));
            perimeter += len;
        }
        assert!((integral / perimeter).abs() < 1e-14);
    }
}
