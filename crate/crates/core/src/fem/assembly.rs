use rayon::prelude::*;
use sprs::{CsMat, TriMat};

use crate::closed_form::RadialProfile;
use crate::geometry::{distance, TriMesh};
use crate::{Error, Result};

/// Gradients of the three P1 basis functions times `2|T|`, and `|T|`.
pub(crate) fn shape_gradients(mesh: &TriMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let v = mesh.vertices();
    let tri = mesh.triangles()[t];
    let p = [v[tri[0]], v[tri[1]], v[tri[2]]];
    let g = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        [p[j][1] - p[k][1], p[k][0] - p[j][0]]
    });
    (g, mesh.triangle_area(t))
}

/// Piecewise-constant gradient of the P1 interpolant on triangle `t`.
pub(crate) fn gradient(mesh: &TriMesh, t: usize, u: &[f64]) -> [f64; 2] {
    let (g, area) = shape_gradients(mesh, t);
    let tri = mesh.triangles()[t];
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += u[tri[i]] * g[i][0];
        out[1] += u[tri[i]] * g[i][1];
    }
    [out[0] / (2.0 * area), out[1] / (2.0 * area)]
}

fn to_csr(n: usize, entries: impl Iterator<Item = (usize, usize, f64)>, capacity: usize) -> CsMat<f64> {
    let mut tri = TriMat::with_capacity((n, n), capacity);
    for (i, j, v) in entries {
        tri.add_triplet(i, j, v);
    }
    tri.to_csr()
}

/// Stiffness matrix `∫∇φ_i·∇φ_j`. Each diagonal entry is reset to minus the
/// sum of its row's off-diagonal entries, so constants lie in the kernel to
/// rounding of that one sum.
pub fn stiffness(mesh: &TriMesh) -> CsMat<f64> {
    let local: Vec<([usize; 3], [[f64; 3]; 3])> = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|t| {
            let (g, area) = shape_gradients(mesh, t);
            let mut k = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    k[i][j] = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) / (4.0 * area);
                }
            }
            (mesh.triangles()[t], k)
        })
        .collect();
    let entries = local
        .iter()
        .flat_map(|(tri, k)| (0..9).map(move |ij| (tri[ij / 3], tri[ij % 3], k[ij / 3][ij % 3])));
    let mut k = to_csr(mesh.num_vertices(), entries, 9 * local.len());
    for (i, mut row) in k.outer_iterator_mut().enumerate() {
        let off = accurate_sum(row.iter().filter(|(j, _)| *j != i).map(|(_, v)| *v));
        if let Some(d) = row.get_mut(i) {
            *d = -off;
        }
    }
    k
}

/// Neumaier-compensated sum.
pub(crate) fn accurate_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut err) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        err += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + err
}

/// Boundary mass matrix `∫_∂ φ_i φ_j`.
pub fn boundary_mass(mesh: &TriMesh) -> CsMat<f64> {
    let v = mesh.vertices();
    let entries = mesh.boundary_edges().iter().flat_map(|e| {
        let [p, q] = e.nodes;
        let len = distance(v[p], v[q]);
        [
            (p, p, len / 3.0),
            (q, q, len / 3.0),
            (p, q, len / 6.0),
            (q, p, len / 6.0),
        ]
    });
    to_csr(mesh.num_vertices(), entries, 4 * mesh.boundary_edges().len())
}

/// Constraint functional `b_i = ∫_∂ φ_i`; it sums to the mesh perimeter.
pub fn boundary_functional(mesh: &TriMesh) -> Vec<f64> {
    let v = mesh.vertices();
    let mut b = vec![0.0; mesh.num_vertices()];
    for e in mesh.boundary_edges() {
        let [p, q] = e.nodes;
        let half = 0.5 * distance(v[p], v[q]);
        b[p] += half;
        b[q] += half;
    }
    b
}

/// `w_i = ∫φ_i`, so that `∫u_h = w·u`.
pub fn integral_weights(mesh: &TriMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let third = mesh.triangle_area(t) / 3.0;
        for &i in tri {
            w[i] += third;
        }
    }
    w
}

/// Load vector `∫ f φ_i` by the edge-midpoint rule, exact for quadratic
/// integrands on each triangle.
pub fn load(mesh: &TriMesh, f: &RadialProfile) -> Result<Vec<f64>> {
    let v = mesh.vertices();
    let local: Vec<Result<[f64; 3]>> = mesh
        .triangles()
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let sixth = mesh.triangle_area(t) / 6.0;
            let mut fm = [0.0; 3];
            // fm[i] is f at the midpoint of the edge opposite vertex i
            for i in 0..3 {
                let (a, b) = (v[tri[(i + 1) % 3]], v[tri[(i + 2) % 3]]);
                let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let val = f.at(m);
                if !(val.is_finite() && val >= 0.0) {
                    return Err(Error::domain(format!(
                        "source must be non-negative, got f = {val} at ({}, {})",
                        m[0], m[1]
                    )));
                }
                fm[i] = val;
            }
            Ok([
                sixth * (fm[1] + fm[2]),
                sixth * (fm[2] + fm[0]),
                sixth * (fm[0] + fm[1]),
            ])
        })
        .collect();
    let mut rhs = vec![0.0; mesh.num_vertices()];
    for (tri, l) in mesh.triangles().iter().zip(local) {
        let l = l?;
        for i in 0..3 {
            rhs[tri[i]] += l[i];
        }
    }
    if rhs.iter().sum::<f64>() <= 0.0 {
        return Err(Error::domain("source integrates to zero over the mesh"));
    }
    Ok(rhs)
}

/// `y = A x` for a CSR matrix.
pub(crate) fn matvec(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    for (row, vec) in a.outer_iterator().enumerate() {
        y[row] = vec.iter().map(|(j, v)| v * x[j]).sum();
    }
}

pub(crate) fn quadratic_form(a: &CsMat<f64>, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    matvec(a, x, &mut y);
    dot(x, &y)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn diagonal(a: &CsMat<f64>) -> Vec<f64> {
    (0..a.rows()).map(|i| *a.get(i, i).unwrap_or(&0.0)).collect()
}

/// Sum of products carried in twice the working precision.
struct Compensated {
    sum: f64,
    err: f64,
}

impl Compensated {
    fn new(start: f64) -> Self {
        Compensated { sum: start, err: 0.0 }
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let p_err = a.mul_add(b, -p);
        let s = self.sum + p;
        let z = s - self.sum;
        let s_err = (self.sum - (s - z)) + (p - z);
        self.sum = s;
        self.err += s_err + p_err;
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

/// Symmetric system `A x = rhs`, optionally bordered by one constraint row:
///
/// ```text
/// [ A  b ] [x]   [rhs]
/// [ bᵀ 0 ] [λ] = [ 0 ]
/// ```
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsMat<f64>,
    pub rhs: Vec<f64>,
    pub border: Option<Vec<f64>>,
}

impl LinearSystem {
    /// Size of the full (bordered) system.
    pub fn dim(&self) -> usize {
        self.rhs.len() + usize::from(self.border.is_some())
    }

    pub fn full_rhs(&self) -> Vec<f64> {
        let mut r = self.rhs.clone();
        if self.border.is_some() {
            r.push(0.0);
        }
        r
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.rhs.len();
        matvec(&self.matrix, &x[..n], &mut y[..n]);
        if let Some(b) = &self.border {
            for i in 0..n {
                y[i] += b[i] * x[n];
            }
            y[n] = dot(b, &x[..n]);
        }
    }

    /// `rhs − A x` over the full system, accumulated with error-free
    /// transformations so refinement is not limited by cancellation in the
    /// residual itself.
    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = self.rhs.len();
        let mut r: Vec<f64> = self
            .matrix
            .outer_iterator()
            .enumerate()
            .map(|(i, row)| {
                let mut acc = Compensated::new(rhs[i]);
                for (j, v) in row.iter() {
                    acc.add_product(-v, x[j]);
                }
                if let Some(b) = &self.border {
                    acc.add_product(-b[i], x[n]);
                }
                acc.value()
            })
            .collect();
        if let Some(b) = &self.border {
            let mut acc = Compensated::new(rhs[n]);
            for i in 0..n {
                acc.add_product(-b[i], x[i]);
            }
            r.push(acc.value());
        }
        r
    }

    /// Jacobi preconditioner; the border entry uses the Schur complement
    /// of the diagonal, `bᵀ D⁻¹ b`, so the preconditioner stays positive.
    pub fn jacobi(&self) -> Vec<f64> {
        let mut d: Vec<f64> = diagonal(&self.matrix).iter().map(|v| v.abs()).collect();
        if let Some(b) = &self.border {
            let s = b.iter().zip(&d).map(|(bi, di)| bi * bi / di).sum();
            d.push(s);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};
    use std::f64::consts::PI;

    fn square(level: usize) -> TriMesh {
        build_mesh(&DomainSpec::RegularPolygon { sides: 4, area: PI }, level).unwrap()
    }

    #[test]
    fn stiffness_is_symmetric_with_constant_kernel() {
        let mesh = square(2);
        let k = stiffness(&mesh);
        for (i, row) in k.outer_iterator().enumerate() {
            assert!(accurate_sum(row.data().iter().copied()).abs() < 1e-15);
            for (j, v) in row.iter() {
                assert_eq!(*k.get(j, i).unwrap(), *v);
            }
        }
    }

    #[test]
    fn stiffness_reproduces_linear_gradient_energy() {
        // ∫|∇(2x − y)|² = 5|Ω|
        let mesh = square(3);
        let u: Vec<f64> = mesh.vertices().iter().map(|p| 2.0 * p[0] - p[1]).collect();
        let k = stiffness(&mesh);
        assert!((quadratic_form(&k, &u) - 5.0 * PI).abs() < 1e-12);
        for t in 0..mesh.triangles().len() {
            let g = gradient(&mesh, t, &u);
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_operators_integrate_exactly() {
        let mesh = square(2);
        let b = boundary_functional(&mesh);
        let perimeter = mesh.measures().perimeter;
        assert!((accurate_sum(b.iter().copied()) - perimeter).abs() < 1e-13);
        assert!(b.iter().zip(mesh.boundary_nodes()).all(|(v, on)| on || *v == 0.0));
        let m = boundary_mass(&mesh);
        let ones = vec![1.0; mesh.num_vertices()];
        let mut mb = vec![0.0; ones.len()];
        matvec(&m, &ones, &mut mb);
        assert!(mb.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14));
        // the square has vertices (±d, 0), (0, ±d) with d = s/√2, so ∫_∂ x² = 4 s d²/3
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p[0]).collect();
        let s = PI.sqrt();
        assert!((quadratic_form(&m, &x) - 2.0 * s.powi(3) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn load_is_exact_for_quadratic_sources() {
        let mesh = square(3);
        let one = load(&mesh, &RadialProfile::unit()).unwrap();
        assert!((one.iter().sum::<f64>() - PI).abs() < 1e-13);
        assert_eq!(one, integral_weights(&mesh));
        // ∫ r² over the square of side s is s⁴/6
        let r2 = load(&mesh, &RadialProfile::power(2.0)).unwrap();
        assert!((r2.iter().sum::<f64>() - PI * PI / 6.0).abs() < 1e-13);
        assert!(load(&mesh, &RadialProfile::custom(|r| r - 0.5)).is_err());
    }

    #[test]
    fn compensated_sum_survives_cancellation() {
        let mut acc = Compensated::new(1e16);
        acc.add_product(1.0, 1.0);
        acc.add_product(-1.0, 1e16);
        assert_eq!(acc.value(), 1.0);
        let mut acc = Compensated::new(0.0);
        acc.add_product(0.1, 0.1);
        assert_eq!(acc.value(), 0.1 * 0.1);
    }

    #[test]
    fn bordered_apply_and_preconditioner() {
        let mesh = square(1);
        let sys = LinearSystem {
            matrix: stiffness(&mesh),
            rhs: load(&mesh, &RadialProfile::unit()).unwrap(),
            border: Some(boundary_functional(&mesh)),
        };
        assert_eq!(sys.dim(), mesh.num_vertices() + 1);
        let mut x = vec![1.0; sys.dim()];
        x[sys.dim() - 1] = 0.0;
        let mut y = vec![0.0; sys.dim()];
        sys.apply(&x, &mut y);
        assert!((y[sys.dim() - 1] - mesh.measures().perimeter).abs() < 1e-13);
        assert!(sys.jacobi().iter().all(|d| *d > 0.0));
    }
}
