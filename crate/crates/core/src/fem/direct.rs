//! Sparse LDLᵀ solves, including the bordered constrained system.

use sprs::{CsMat, FillInReduction};
use sprs_ldl::{Ldl, LdlNumeric};

use super::assembly::{diagonal, dot, LinearSystem};
use crate::{Error, Result};

pub(crate) struct Factor {
    ldl: LdlNumeric<f64, usize>,
}

impl Factor {
    pub fn new(a: &CsMat<f64>) -> Result<Self> {
        let ldl = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(a.view())
            .map_err(|e| Error::Solver {
                iterations: 0,
                residual: f64::NAN,
                reason: format!("LDL factorization failed: {e}"),
            })?;
        if ldl.d().iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Solver {
                iterations: 0,
                residual: f64::NAN,
                reason: "matrix is not positive definite".into(),
            });
        }
        Ok(Factor { ldl })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.ldl.solve(&rhs.to_vec())
    }
}

/// Direct solver for [`LinearSystem`].
///
/// A bordered system is solved through the SPD matrix `A + w wᵀ`, where `w`
/// is a scaled unit vector at one node: writing `u = y_f − λ y_b + μ y_w` with
/// `y_* = (A + wwᵀ)⁻¹ *` and `μ = wᵀu`, the border row and `μ = wᵀu` form a
/// 2×2 system for `(λ, μ)`. This keeps `A` positive semidefinite with a
/// constant kernel (β = 0) solvable by a Cholesky-type factorization.
pub(crate) struct DirectSolver {
    factor: Factor,
    border: Option<Border>,
}

struct Border {
    b: Vec<f64>,
    pin: usize,
    scale: f64,
    y_b: Vec<f64>,
    y_w: Vec<f64>,
}

impl DirectSolver {
    pub fn new(sys: &LinearSystem) -> Result<Self> {
        let Some(b) = &sys.border else {
            return Ok(DirectSolver {
                factor: Factor::new(&sys.matrix)?,
                border: None,
            });
        };
        let pin = 0;
        let scale = diagonal(&sys.matrix)[pin].abs().max(f64::MIN_POSITIVE);
        let mut pinned = sys.matrix.clone();
        match pinned.get_mut(pin, pin) {
            Some(v) => *v += scale,
            None => {
                return Err(Error::validation("matrix has no diagonal entry at the pinned node"));
            }
        }
        let factor = Factor::new(&pinned)?;
        let y_b = factor.solve(b);
        let mut w = vec![0.0; b.len()];
        w[pin] = scale.sqrt();
        let y_w = factor.solve(&w);
        Ok(DirectSolver {
            factor,
            border: Some(Border {
                b: b.clone(),
                pin,
                scale: scale.sqrt(),
                y_b,
                y_w,
            }),
        })
    }

    /// Solves the full system for the full right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let Some(bd) = &self.border else {
            return Ok(self.factor.solve(rhs));
        };
        let n = bd.b.len();
        let y_f = self.factor.solve(&rhs[..n]);
        let g = rhs[n];
        let wt = |y: &[f64]| bd.scale * y[bd.pin];
        // bᵀu = g and wᵀu = μ
        let (a11, a12, r1) = (-dot(&bd.b, &bd.y_b), dot(&bd.b, &bd.y_w), g - dot(&bd.b, &y_f));
        let (a21, a22, r2) = (-wt(&bd.y_b), wt(&bd.y_w) - 1.0, -wt(&y_f));
        let det = a11 * a22 - a12 * a21;
        if !(det.is_finite() && det != 0.0) {
            return Err(Error::Solver {
                iterations: 0,
                residual: f64::NAN,
                reason: "singular border block".into(),
            });
        }
        let lambda = (r1 * a22 - a12 * r2) / det;
        let mu = (a11 * r2 - a21 * r1) / det;
        let mut x: Vec<f64> = (0..n).map(|i| y_f[i] - lambda * bd.y_b[i] + mu * bd.y_w[i]).collect();
        x.push(lambda);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sprs::TriMat;

    #[test]
    fn bordered_singular_matrix() {
        let n = 30;
        let mut t = TriMat::new((n, n));
        for i in 0..n - 1 {
            for (a, b, v) in [(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)] {
                t.add_triplet(a, b, v);
            }
        }
        let border: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 } else { 0.0 }).collect();
        let rhs: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let sys = LinearSystem {
            matrix: t.to_csr(),
            rhs: rhs.clone(),
            border: Some(border),
        };
        let solver = DirectSolver::new(&sys).unwrap();
        let full = sys.full_rhs();
        let x = solver.solve(&full).unwrap();
        let r = sys.residual(&x, &full);
        assert!(dot(&r, &r).sqrt() < 1e-10);
        // constants are in the kernel, so λ · Σb = Σ rhs
        assert!((x[n] - rhs.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut t = TriMat::new((2, 2));
        t.add_triplet(0, 0, 1.0);
        t.add_triplet(1, 1, -1.0);
        assert!(Factor::new(&t.to_csr()).is_err());
    }
}
