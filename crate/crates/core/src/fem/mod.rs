//! P1 finite elements for the boundary-mean-zero, Robin and Dirichlet problems.

mod assembly;
mod direct;
pub mod dump;
mod krylov;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

pub use assembly::{boundary_functional, boundary_mass, integral_weights, load, stiffness, LinearSystem};
pub use dump::{read_solution, write_solution, SolutionDump};

use crate::closed_form::RadialProfile;
use crate::geometry::{distance, TriMesh};
use crate::{Error, Result};
use assembly::{accurate_sum, dot, gradient, quadratic_form};
use direct::DirectSolver;

/// Bordered systems with more unknowns than this are not retried with the
/// direct solver when the Krylov solve fails.
pub const DIRECT_FALLBACK_LIMIT: usize = 100_000;

const MAX_REFINEMENTS: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Krylov,
    Direct,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Krylov => "krylov",
            SolverKind::Direct => "direct",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "krylov" => Ok(SolverKind::Krylov),
            "direct" => Ok(SolverKind::Direct),
            other => Err(Error::validation(format!(
                "unknown solver '{other}', expected 'krylov' or 'direct'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub solver: SolverKind,
    /// Relative tolerance of the Krylov iteration. The true residual must
    /// reach `10 · tol`, with up to three refinement passes.
    pub tol: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: SolverKind::Krylov,
            tol: 1e-12,
            max_iterations: None,
        }
    }
}

impl SolveOptions {
    pub fn direct() -> Self {
        SolveOptions {
            solver: SolverKind::Direct,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub solver: SolverKind,
    /// Krylov iterations over all refinement passes (0 for direct solves).
    pub iterations: usize,
    pub refinements: usize,
    /// `‖rhs − A x‖ / ‖rhs‖` of the full system.
    pub residual: f64,
    /// Set when a failed Krylov solve was redone with the direct solver.
    pub fell_back: bool,
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn solve_system(sys: &LinearSystem, opts: &SolveOptions) -> Result<(Vec<f64>, SolveStats)> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::validation(format!(
            "solver tolerance must lie in (0, 1), got {}",
            opts.tol
        )));
    }
    match opts.solver {
        SolverKind::Direct => solve_direct(sys, opts.tol),
        SolverKind::Krylov => match solve_krylov(sys, opts) {
            Ok(out) => Ok(out),
            Err(e) if sys.dim() < DIRECT_FALLBACK_LIMIT => {
                let (x, mut stats) = solve_direct(sys, opts.tol).map_err(|_| e)?;
                stats.fell_back = true;
                Ok((x, stats))
            }
            Err(e) => Err(e),
        },
    }
}

fn solve_krylov(sys: &LinearSystem, opts: &SolveOptions) -> Result<(Vec<f64>, SolveStats)> {
    let rhs = sys.full_rhs();
    let rhs_norm = norm(&rhs);
    let target = 10.0 * opts.tol;
    let precond = sys.jacobi();
    let max_iter = opts.max_iterations.unwrap_or((20 * sys.dim()).max(1000));
    let (mut x, mut iterations) = krylov::minres(sys, &rhs, &precond, opts.tol, max_iter)?;
    let mut refinements = 0;
    loop {
        let r = sys.residual(&x, &rhs);
        let rel = if rhs_norm > 0.0 { norm(&r) / rhs_norm } else { norm(&r) };
        if rel <= target {
            return Ok((
                x,
                SolveStats {
                    solver: SolverKind::Krylov,
                    iterations,
                    refinements,
                    residual: rel,
                    fell_back: false,
                },
            ));
        }
        if refinements == MAX_REFINEMENTS {
            return Err(Error::Solver {
                iterations,
                residual: rel,
                reason: format!("true residual above {target:.1e} after {refinements} refinements"),
            });
        }
        let (dx, its) = krylov::minres(sys, &r, &precond, opts.tol, max_iter)?;
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        iterations += its;
        refinements += 1;
    }
}

fn solve_direct(sys: &LinearSystem, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let rhs = sys.full_rhs();
    let rhs_norm = norm(&rhs);
    let solver = DirectSolver::new(sys)?;
    let mut x = solver.solve(&rhs)?;
    let mut refinements = 0;
    loop {
        let r = sys.residual(&x, &rhs);
        let rel = if rhs_norm > 0.0 { norm(&r) / rhs_norm } else { norm(&r) };
        // one cheap pass of refinement is always worth it
        if (rel <= 10.0 * tol && refinements > 0) || refinements == MAX_REFINEMENTS {
            if rel > 10.0 * tol {
                return Err(Error::Solver {
                    iterations: 0,
                    residual: rel,
                    reason: "direct solve did not reach the residual target".into(),
                });
            }
            return Ok((
                x,
                SolveStats {
                    solver: SolverKind::Direct,
                    iterations: 0,
                    refinements,
                    residual: rel,
                    fell_back: false,
                },
            ));
        }
        let dx = solver.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        refinements += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// Robin/Neumann condition with the constraint `∫_∂ u = 0`.
    MeanZero,
    /// Unconstrained Robin problem, `β > 0`.
    Robin,
    /// Homogeneous Dirichlet problem.
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Energies {
    /// `½∫|∇u|² + (β/2)∫_∂u² − ∫fu` (the β term is absent for Dirichlet).
    pub t: f64,
    /// `−½∫fu`, equal to `t` at an exact discrete solution.
    pub t_alt: f64,
    /// `E = ∫u`.
    pub e: f64,
    pub dirichlet_energy: f64,
    /// `∫|∇u|² / (∫u)²`, for the mean-zero problem with `β = 0` and `f ≡ 1`.
    pub kappa1_rayleigh: Option<f64>,
}

/// Nodal solution on a borrowed mesh.
#[derive(Clone, Debug)]
pub struct Solution<'m> {
    mesh: &'m TriMesh,
    pub problem: Problem,
    pub u: Vec<f64>,
    /// Multiplier of the constraint, equal to `∫f / P(Ω_h)`.
    pub lambda: Option<f64>,
    /// Compatibility constant `c = −λ`.
    pub c: Option<f64>,
    pub beta: f64,
    pub source: RadialProfile,
    /// `∫_∂ u / P(Ω_h)`.
    pub boundary_mean: f64,
    /// `∫_{Ω_h} f` as integrated by the load vector.
    pub source_integral: f64,
    pub area: f64,
    pub perimeter: f64,
    pub energies: Energies,
    pub stats: SolveStats,
}

/// Alias naming the constrained (boundary-mean-zero) case.
pub type ConstrainedSolution<'m> = Solution<'m>;

impl<'m> Solution<'m> {
    pub fn mesh(&self) -> &'m TriMesh {
        self.mesh
    }

    /// Largest `|u_i|`.
    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct Assembled {
    stiffness: CsMat<f64>,
    mass: CsMat<f64>,
    load: Vec<f64>,
    border: Vec<f64>,
}

fn assemble(mesh: &TriMesh, f: &RadialProfile) -> Result<Assembled> {
    Ok(Assembled {
        stiffness: stiffness(mesh),
        mass: boundary_mass(mesh),
        load: load(mesh, f)?,
        border: boundary_functional(mesh),
    })
}

fn check_beta(beta: f64, strict: bool) -> Result<()> {
    let ok = beta.is_finite() && if strict { beta > 0.0 } else { beta >= 0.0 };
    if !ok {
        let bound = if strict { "positive" } else { "non-negative" };
        return Err(Error::domain(format!("beta must be {bound}, got {beta}")));
    }
    Ok(())
}

fn add_scaled(a: &CsMat<f64>, b: &CsMat<f64>, beta: f64) -> CsMat<f64> {
    if beta == 0.0 {
        return a.clone();
    }
    let scaled = b.map(|v| beta * v);
    a + &scaled
}

#[allow(clippy::too_many_arguments)]
fn finish<'m>(
    mesh: &'m TriMesh,
    problem: Problem,
    u: Vec<f64>,
    lambda: Option<f64>,
    beta: f64,
    source: &RadialProfile,
    asm: &Assembled,
    stats: SolveStats,
) -> Solution<'m> {
    let dirichlet_energy = quadratic_form(&asm.stiffness, &u);
    let boundary_term = if problem == Problem::Dirichlet || beta == 0.0 {
        0.0
    } else {
        0.5 * beta * quadratic_form(&asm.mass, &u)
    };
    let fu = dot(&asm.load, &u);
    let e = dot(&integral_weights(mesh), &u);
    let kappa1_rayleigh =
        (problem == Problem::MeanZero && beta == 0.0 && source.is_unit()).then(|| dirichlet_energy / (e * e));
    let perimeter = accurate_sum(asm.border.iter().copied());
    Solution {
        mesh,
        problem,
        lambda,
        c: lambda.map(|l| -l),
        beta,
        source: source.clone(),
        boundary_mean: dot(&asm.border, &u) / perimeter,
        source_integral: accurate_sum(asm.load.iter().copied()),
        area: mesh.measures().area,
        perimeter,
        energies: Energies {
            t: 0.5 * dirichlet_energy + boundary_term - fu,
            t_alt: -0.5 * fu,
            e,
            dirichlet_energy,
            kappa1_rayleigh,
        },
        stats,
        u,
    }
}

/// Minimizes `½∫|∇u|² + (β/2)∫_∂u² − ∫fu` subject to `∫_∂ u = 0` by solving
/// the bordered system `(K + βM)u + λb = F`, `bᵀu = 0`.
pub fn solve_neumann_mean_zero<'m>(
    mesh: &'m TriMesh,
    f: &RadialProfile,
    beta: f64,
    opts: &SolveOptions,
) -> Result<Solution<'m>> {
    check_beta(beta, false)?;
    let asm = assemble(mesh, f)?;
    let sys = LinearSystem {
        matrix: add_scaled(&asm.stiffness, &asm.mass, beta),
        rhs: asm.load.clone(),
        border: Some(asm.border.clone()),
    };
    let (mut x, stats) = solve_system(&sys, opts)?;
    let lambda = x.pop();
    Ok(finish(mesh, Problem::MeanZero, x, lambda, beta, f, &asm, stats))
}

/// Unconstrained Robin problem `(K + βM)û = F`; `energies.t` is `J_β`.
pub fn solve_robin<'m>(mesh: &'m TriMesh, f: &RadialProfile, beta: f64, opts: &SolveOptions) -> Result<Solution<'m>> {
    check_beta(beta, true)?;
    let asm = assemble(mesh, f)?;
    let sys = LinearSystem {
        matrix: add_scaled(&asm.stiffness, &asm.mass, beta),
        rhs: asm.load.clone(),
        border: None,
    };
    let (x, stats) = solve_system(&sys, opts)?;
    Ok(finish(mesh, Problem::Robin, x, None, beta, f, &asm, stats))
}

/// Homogeneous Dirichlet problem, solved on the interior nodes; `energies.t` is `T_∞`.
pub fn solve_dirichlet<'m>(mesh: &'m TriMesh, f: &RadialProfile, opts: &SolveOptions) -> Result<Solution<'m>> {
    let asm = assemble(mesh, f)?;
    let on_boundary = mesh.boundary_nodes();
    let mut index = vec![usize::MAX; on_boundary.len()];
    let mut interior = Vec::new();
    for (i, &b) in on_boundary.iter().enumerate() {
        if !b {
            index[i] = interior.len();
            interior.push(i);
        }
    }
    let m = interior.len();
    let mut u = vec![0.0; mesh.num_vertices()];
    let stats = if m == 0 {
        SolveStats {
            solver: opts.solver,
            iterations: 0,
            refinements: 0,
            residual: 0.0,
            fell_back: false,
        }
    } else {
        let mut tri = TriMat::with_capacity((m, m), asm.stiffness.nnz());
        for (i, row) in asm.stiffness.outer_iterator().enumerate() {
            if index[i] == usize::MAX {
                continue;
            }
            for (j, v) in row.iter() {
                if index[j] != usize::MAX {
                    tri.add_triplet(index[i], index[j], *v);
                }
            }
        }
        let sys = LinearSystem {
            matrix: tri.to_csr(),
            rhs: interior.iter().map(|&i| asm.load[i]).collect(),
            border: None,
        };
        let (x, stats) = solve_system(&sys, opts)?;
        for (k, &i) in interior.iter().enumerate() {
            u[i] = x[k];
        }
        stats
    };
    Ok(finish(mesh, Problem::Dirichlet, u, None, f64::INFINITY, f, &asm, stats))
}

pub fn energies(solution: &Solution<'_>) -> Energies {
    solution.energies
}

/// `max − min` of the nodal values on the boundary.
pub fn boundary_oscillation(solution: &Solution<'_>) -> f64 {
    let (lo, hi) = solution
        .mesh
        .boundary_nodes()
        .iter()
        .zip(&solution.u)
        .filter(|(b, _)| **b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stationarity {
    /// `max − min` of `S` over boundary edge midpoints.
    pub osc_s: f64,
    /// Length-weighted mean of `S`.
    pub mean_s: f64,
    /// `S` per boundary edge, in boundary-edge order.
    pub values: Vec<f64>,
}

/// Evaluates `S = ½|∇u|² + 2cβu − cHu + (β/2)Hu² − β²u² − fu` at every
/// boundary edge midpoint, with `∇u` from the adjacent triangle and `H` from
/// the mesh's boundary descriptor. `S` constant on `∂Ω` characterizes
/// stationary shapes.
pub fn stationarity_residual(solution: &Solution<'_>) -> Result<Stationarity> {
    let mesh = solution.mesh;
    let (Problem::MeanZero, Some(c)) = (solution.problem, solution.c) else {
        return Err(Error::precondition(
            "stationarity residual needs a mean-zero constrained solution",
        ));
    };
    let Some(curves) = mesh.curves() else {
        return Err(Error::precondition(
            "mesh carries no boundary descriptor, so the curvature of its loops is unknown",
        ));
    };
    let v = mesh.vertices();
    let mut owner: HashMap<[usize; 2], usize> = mesh
        .boundary_edges()
        .iter()
        .map(|e| {
            let [p, q] = e.nodes;
            ([p.min(q), p.max(q)], usize::MAX)
        })
        .collect();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for i in 0..3 {
            let (p, q) = (tri[i], tri[(i + 1) % 3]);
            if let Some(slot) = owner.get_mut(&[p.min(q), p.max(q)]) {
                *slot = t;
            }
        }
    }
    let beta = solution.beta;
    let u = &solution.u;
    let mut values = Vec::with_capacity(mesh.boundary_edges().len());
    let (mut weighted, mut length) = (0.0, 0.0);
    for e in mesh.boundary_edges() {
        let [p, q] = e.nodes;
        let t = owner[&[p.min(q), p.max(q)]];
        let g = gradient(mesh, t, u);
        let m = [0.5 * (v[p][0] + v[q][0]), 0.5 * (v[p][1] + v[q][1])];
        let um = 0.5 * (u[p] + u[q]);
        let h = curves[e.loop_id].curvature(m);
        let f = solution.source.at(m);
        let s = 0.5 * (g[0] * g[0] + g[1] * g[1]) + 2.0 * c * beta * um - c * h * um + 0.5 * beta * h * um * um
            - beta * beta * um * um
            - f * um;
        let len = distance(v[p], v[q]);
        weighted += s * len;
        length += len;
        values.push(s);
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    Ok(Stationarity {
        osc_s: hi - lo,
        mean_s: weighted / length,
        values,
    })
}
