use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::Serialize;

use super::domain::{distance, regular_polygon_vertices, signed_area, DomainSpec, Point};
use crate::{Error, Result};

/// Refinement levels above this are refused; a level-9 fan already has ~10⁶ triangles.
pub const MAX_LEVEL: usize = 9;

/// Number of sectors in the coarsest disk fan.
const DISK_BASE_SECTORS: usize = 8;
/// Number of sectors in the coarsest annulus grid.
const ANNULUS_BASE_SECTORS: usize = 16;

/// Exact curve approximated by one boundary loop.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCurve {
    Straight,
    /// `hole` marks a loop bounding a hole, whose outward normal points at the center.
    Circle {
        center: Point,
        radius: f64,
        hole: bool,
    },
    /// `r(θ) = radius + amplitude·cos(mode·(θ − phase))` about `center`.
    PerturbedCircle {
        center: Point,
        radius: f64,
        mode: u32,
        amplitude: f64,
        phase: f64,
    },
}

impl BoundaryCurve {
    /// Closest-point (circle) or radial (perturbed circle) projection onto the curve.
    pub fn project(&self, p: Point) -> Point {
        match *self {
            BoundaryCurve::Straight => p,
            BoundaryCurve::Circle { center, radius, .. } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let r = dx.hypot(dy);
                [center[0] + radius * dx / r, center[1] + radius * dy / r]
            }
            BoundaryCurve::PerturbedCircle { center, .. } => {
                let theta = (p[1] - center[1]).atan2(p[0] - center[0]);
                let r = self.polar_radius(theta);
                [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
            }
        }
    }

    fn polar_radius(&self, theta: f64) -> f64 {
        match *self {
            BoundaryCurve::PerturbedCircle {
                radius,
                mode,
                amplitude,
                phase,
                ..
            } => radius + amplitude * (f64::from(mode) * (theta - phase)).cos(),
            BoundaryCurve::Circle { radius, .. } => radius,
            BoundaryCurve::Straight => f64::NAN,
        }
    }

    /// Curvature at the curve point nearest `p`, positive when the domain is
    /// locally convex there (so `1/R` on an outer circle, `−1/R` on a hole).
    pub fn curvature(&self, p: Point) -> f64 {
        match *self {
            BoundaryCurve::Straight => 0.0,
            BoundaryCurve::Circle { radius, hole, .. } => {
                if hole {
                    -1.0 / radius
                } else {
                    1.0 / radius
                }
            }
            BoundaryCurve::PerturbedCircle {
                center,
                mode,
                amplitude,
                phase,
                ..
            } => {
                let theta = (p[1] - center[1]).atan2(p[0] - center[0]);
                let k = f64::from(mode);
                let r = self.polar_radius(theta);
                let dr = -amplitude * k * (k * (theta - phase)).sin();
                let ddr = -amplitude * k * k * (k * (theta - phase)).cos();
                (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5)
            }
        }
    }

    fn moved(&self, rotation: f64, shift: Point) -> BoundaryCurve {
        let (s, c) = rotation.sin_cos();
        let mv = |p: Point| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]];
        match *self {
            BoundaryCurve::Straight => BoundaryCurve::Straight,
            BoundaryCurve::Circle { center, radius, hole } => BoundaryCurve::Circle {
                center: mv(center),
                radius,
                hole,
            },
            BoundaryCurve::PerturbedCircle {
                center,
                radius,
                mode,
                amplitude,
                phase,
            } => BoundaryCurve::PerturbedCircle {
                center: mv(center),
                radius,
                mode,
                amplitude,
                phase: phase + rotation,
            },
        }
    }
}

/// Directed boundary edge; the domain lies to its left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub loop_id: usize,
    /// Arc length along the loop at `nodes[0]`, measured from the loop's lowest-index node.
    pub arc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeshMeasures {
    pub area: f64,
    pub perimeter: f64,
    pub h_max: f64,
}

/// Conforming triangulation with counterclockwise triangles and oriented boundary loops.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    curves: Option<Vec<BoundaryCurve>>,
}

impl TriMesh {
    /// Assembles and validates a mesh. `curves`, when given, is indexed by loop id.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], usize)>,
        curves: Option<Vec<BoundaryCurve>>,
    ) -> Result<Self> {
        let boundary = boundary
            .into_iter()
            .map(|(nodes, loop_id)| BoundaryEdge {
                nodes,
                loop_id,
                arc: 0.0,
            })
            .collect();
        let mut mesh = TriMesh {
            vertices,
            triangles,
            boundary,
            curves,
        };
        mesh.validate()?;
        mesh.compute_arc_lengths();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn curves(&self) -> Option<&[BoundaryCurve]> {
        self.curves.as_deref()
    }

    pub fn with_curves(mut self, curves: Option<Vec<BoundaryCurve>>) -> Result<Self> {
        if let Some(c) = &curves {
            if c.len() < self.loop_count() {
                return Err(Error::validation(format!(
                    "{} curve descriptors for {} boundary loops",
                    c.len(),
                    self.loop_count()
                )));
            }
        }
        self.curves = curves;
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn loop_count(&self) -> usize {
        self.boundary.iter().map(|e| e.loop_id + 1).max().unwrap_or(0)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        tri_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Boundary node flags.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for e in &self.boundary {
            flags[e.nodes[0]] = true;
            flags[e.nodes[1]] = true;
        }
        flags
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
            .map(|[p, q]| [p.min(q), p.max(q)])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    pub fn measures(&self) -> MeshMeasures {
        let area = (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum();
        let perimeter = self
            .boundary
            .iter()
            .map(|e| distance(self.vertices[e.nodes[0]], self.vertices[e.nodes[1]]))
            .sum();
        let h_max = self
            .edges()
            .iter()
            .map(|&[p, q]| distance(self.vertices[p], self.vertices[q]))
            .fold(0.0, f64::max);
        MeshMeasures { area, perimeter, h_max }
    }

    /// Checks orientation, conformity and loop closure.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::validation("mesh has no triangles"));
        }
        if self.vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::validation("mesh has non-finite vertex coordinates"));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::validation(format!("triangle {t} references a missing vertex")));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::validation(format!(
                    "triangle {t} has non-positive signed area (inverted or degenerate)"
                )));
            }
            for (p, q) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                if directed.insert((p, q), t).is_some() {
                    return Err(Error::validation(format!(
                        "directed edge ({p}, {q}) appears in two triangles"
                    )));
                }
            }
        }
        let mut free: Vec<(usize, usize)> = directed
            .keys()
            .filter(|(p, q)| !directed.contains_key(&(*q, *p)))
            .copied()
            .collect();
        free.sort_unstable();
        let mut declared: Vec<(usize, usize)> = self.boundary.iter().map(|e| (e.nodes[0], e.nodes[1])).collect();
        declared.sort_unstable();
        if free != declared {
            return Err(Error::validation(
                "boundary edges do not match the edges owned by exactly one triangle",
            ));
        }
        let mut outgoing: HashMap<usize, usize> = HashMap::new();
        let mut incoming: HashMap<usize, usize> = HashMap::new();
        for e in &self.boundary {
            *outgoing.entry(e.nodes[0]).or_default() += 1;
            *incoming.entry(e.nodes[1]).or_default() += 1;
        }
        if outgoing.values().chain(incoming.values()).any(|&c| c != 1) || outgoing.len() != incoming.len() {
            return Err(Error::validation("boundary edges do not form simple closed loops"));
        }
        let next: HashMap<usize, (usize, usize)> = self
            .boundary
            .iter()
            .map(|e| (e.nodes[0], (e.nodes[1], e.loop_id)))
            .collect();
        for e in &self.boundary {
            if next[&e.nodes[1]].1 != e.loop_id {
                return Err(Error::validation(format!(
                    "boundary loop {} is not closed under a single loop id",
                    e.loop_id
                )));
            }
        }
        if let Some(curves) = &self.curves {
            if curves.len() < self.loop_count() {
                return Err(Error::validation("missing curve descriptor for a boundary loop"));
            }
        }
        Ok(())
    }

    fn compute_arc_lengths(&mut self) {
        let mut by_start: HashMap<usize, usize> = HashMap::new();
        for (i, e) in self.boundary.iter().enumerate() {
            by_start.insert(e.nodes[0], i);
        }
        let mut first: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &self.boundary {
            let entry = first.entry(e.loop_id).or_insert(e.nodes[0]);
            *entry = (*entry).min(e.nodes[0]);
        }
        for (_, start) in first {
            let mut node = start;
            let mut arc = 0.0;
            loop {
                let i = by_start[&node];
                self.boundary[i].arc = arc;
                let [p, q] = self.boundary[i].nodes;
                arc += distance(self.vertices[p], self.vertices[q]);
                node = q;
                if node == start {
                    break;
                }
            }
        }
    }

    /// Uniform red refinement: every triangle splits into four through its edge
    /// midpoints. Boundary midpoints are projected onto the loop's curve when a
    /// curve descriptor is present. Existing vertex indices are preserved.
    pub fn refine(&self) -> Result<TriMesh> {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |p: usize, q: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (p.min(q), p.max(q));
            *midpoint.entry(key).or_insert_with(|| {
                let (a, b) = (vertices[p], vertices[q]);
                vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for e in &self.boundary {
            let [p, q] = e.nodes;
            let m = mid(p, q, &mut vertices);
            if let Some(curves) = &self.curves {
                vertices[m] = curves[e.loop_id].project(vertices[m]);
            }
            boundary.push(([p, m], e.loop_id));
            boundary.push(([m, q], e.loop_id));
        }
        TriMesh::new(vertices, triangles, boundary, self.curves.clone())
    }

    /// Rotates by `angle` about the origin, then translates by `shift`.
    pub fn rigid_motion(&self, angle: f64, shift: Point) -> Result<TriMesh> {
        let (s, c) = angle.sin_cos();
        let vertices = self
            .vertices
            .iter()
            .map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]])
            .collect();
        let curves = self
            .curves
            .as_ref()
            .map(|cs| cs.iter().map(|cv| cv.moved(angle, shift)).collect());
        TriMesh::new(
            vertices,
            self.triangles.clone(),
            self.boundary.iter().map(|e| (e.nodes, e.loop_id)).collect(),
            curves,
        )
    }

    /// Uniform dilation about the origin.
    pub fn scaled(&self, factor: f64) -> Result<TriMesh> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::domain(format!("scale factor must be positive, got {factor}")));
        }
        let vertices = self.vertices.iter().map(|p| [factor * p[0], factor * p[1]]).collect();
        let curves = self.curves.as_ref().map(|cs| {
            cs.iter()
                .map(|cv| match *cv {
                    BoundaryCurve::Straight => BoundaryCurve::Straight,
                    BoundaryCurve::Circle { center, radius, hole } => BoundaryCurve::Circle {
                        center: [factor * center[0], factor * center[1]],
                        radius: factor * radius,
                        hole,
                    },
                    BoundaryCurve::PerturbedCircle {
                        center,
                        radius,
                        mode,
                        amplitude,
                        phase,
                    } => BoundaryCurve::PerturbedCircle {
                        center: [factor * center[0], factor * center[1]],
                        radius: factor * radius,
                        mode,
                        amplitude: factor * amplitude,
                        phase,
                    },
                })
                .collect()
        });
        TriMesh::new(
            vertices,
            self.triangles.clone(),
            self.boundary.iter().map(|e| (e.nodes, e.loop_id)).collect(),
            curves,
        )
    }
}

pub(crate) fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Meshes a domain: a fan about the center refined `level` times for polygons
/// and (perturbed) disks, a structured polar grid for annuli.
pub fn build_mesh(spec: &DomainSpec, level: usize) -> Result<TriMesh> {
    spec.validate()?;
    if level > MAX_LEVEL {
        return Err(Error::validation(format!(
            "refinement level {level} exceeds the maximum {MAX_LEVEL}"
        )));
    }
    match spec {
        DomainSpec::RegularPolygon { sides, area } => {
            let vertices = regular_polygon_vertices(*sides, *area);
            refine_times(fan(&vertices, [0.0, 0.0], BoundaryCurve::Straight)?, level)
        }
        DomainSpec::Polygon { vertices } => {
            let center = area_centroid(vertices);
            refine_times(fan(vertices, center, BoundaryCurve::Straight)?, level)
        }
        DomainSpec::Box { half_widths } => {
            let [a1, a2] = half_widths[..] else {
                return Err(Error::validation(format!(
                    "only two-dimensional boxes can be meshed, got n = {}",
                    half_widths.len()
                )));
            };
            let corners = [[-a1, -a2], [a1, -a2], [a1, a2], [-a1, a2]];
            refine_times(fan(&corners, [0.0, 0.0], BoundaryCurve::Straight)?, level)
        }
        DomainSpec::Disk { radius } => disk_mesh(*radius, level),
        DomainSpec::PerturbedDisk {
            radius,
            mode,
            amplitude,
        } => {
            let disk = disk_mesh(*radius, level)?;
            let curve = BoundaryCurve::PerturbedCircle {
                center: [0.0, 0.0],
                radius: *radius,
                mode: *mode,
                amplitude: *amplitude,
                phase: 0.0,
            };
            // radial blending: a node at radius r moves to r·r(θ)/R
            let vertices = disk
                .vertices
                .iter()
                .map(|&p| {
                    let theta = p[1].atan2(p[0]);
                    let scale = curve.polar_radius(theta) / radius;
                    [p[0] * scale, p[1] * scale]
                })
                .collect();
            TriMesh::new(
                vertices,
                disk.triangles,
                disk.boundary.iter().map(|e| (e.nodes, e.loop_id)).collect(),
                Some(vec![curve]),
            )
            .map_err(|e| Error::validation(format!("perturbed disk mesh inverted: {e}")))
        }
        DomainSpec::Annulus { r_in, r_out } => annulus_mesh(*r_in, *r_out, level),
    }
}

fn refine_times(mut mesh: TriMesh, level: usize) -> Result<TriMesh> {
    for _ in 0..level {
        mesh = mesh.refine()?;
    }
    Ok(mesh)
}

fn area_centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    let area = signed_area(vertices);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [cx / (6.0 * area), cy / (6.0 * area)]
}

/// Fan triangulation about `center`; boundary vertices keep indices `0..n`.
fn fan(boundary: &[Point], center: Point, curve: BoundaryCurve) -> Result<TriMesh> {
    let n = boundary.len();
    let mut vertices = boundary.to_vec();
    vertices.push(center);
    let triangles: Vec<[usize; 3]> = (0..n).map(|j| [n, j, (j + 1) % n]).collect();
    for (t, &[c, a, b]) in triangles.iter().enumerate() {
        if tri_area(vertices[c], vertices[a], vertices[b]) <= 0.0 {
            return Err(Error::validation(format!(
                "polygon is not star-shaped about its centroid (fan triangle {t} inverted)"
            )));
        }
    }
    let edges = (0..n).map(|j| ([j, (j + 1) % n], 0)).collect();
    TriMesh::new(vertices, triangles, edges, Some(vec![curve]))
}

fn disk_mesh(radius: f64, level: usize) -> Result<TriMesh> {
    let m = DISK_BASE_SECTORS;
    let boundary: Vec<Point> = (0..m)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / m as f64;
            [radius * theta.cos(), radius * theta.sin()]
        })
        .collect();
    let curve = BoundaryCurve::Circle {
        center: [0.0, 0.0],
        radius,
        hole: false,
    };
    refine_times(fan(&boundary, [0.0, 0.0], curve)?, level)
}

fn annulus_mesh(r_in: f64, r_out: f64, level: usize) -> Result<TriMesh> {
    let sectors = ANNULUS_BASE_SECTORS << level;
    let base_rings = ((ANNULUS_BASE_SECTORS as f64 * (r_out - r_in)) / (PI * (r_in + r_out)))
        .ceil()
        .max(1.0) as usize;
    let rings = base_rings << level;
    let node = |i: usize, j: usize| i * sectors + (j % sectors);
    let mut vertices = Vec::with_capacity((rings + 1) * sectors);
    for i in 0..=rings {
        let r = if i == rings {
            r_out
        } else {
            r_in + (r_out - r_in) * i as f64 / rings as f64
        };
        for j in 0..sectors {
            let theta = 2.0 * PI * j as f64 / sectors as f64;
            vertices.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * rings * sectors);
    for i in 0..rings {
        for j in 0..sectors {
            let (p00, p10, p11, p01) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    let mut edges = Vec::with_capacity(2 * sectors);
    for j in 0..sectors {
        edges.push(([node(rings, j), node(rings, j + 1)], 0));
        edges.push(([node(0, j + 1), node(0, j)], 1));
    }
    let curves = vec![
        BoundaryCurve::Circle {
            center: [0.0, 0.0],
            radius: r_out,
            hole: false,
        },
        BoundaryCurve::Circle {
            center: [0.0, 0.0],
            radius: r_in,
            hole: true,
        },
    ];
    TriMesh::new(vertices, triangles, edges, Some(curves))
}
