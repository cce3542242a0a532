//! Preconditioned MINRES for symmetric (possibly indefinite) systems.

use super::assembly::{dot, LinearSystem};
use crate::{Error, Result};

/// Solves `A x = rhs` from `x = 0` with the diagonal SPD preconditioner `m`,
/// stopping once the preconditioned residual has dropped by `tol`. Returns the
/// iterate and the iteration count.
pub(crate) fn minres(
    sys: &LinearSystem,
    rhs: &[f64],
    m: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = rhs.len();
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(m).map(|(ri, mi)| ri / mi).collect() };
    let mut x = vec![0.0; n];
    let mut r1 = rhs.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(Error::Solver {
            iterations: 0,
            residual: f64::NAN,
            reason: "preconditioner is not positive definite".into(),
        });
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok((x, 0));
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        sys.apply(&v, &mut av);
        if itn >= 2 {
            let k = beta / oldb;
            av.iter_mut().zip(&r1).for_each(|(a, r)| *a -= k * r);
        }
        let alfa = dot(&v, &av);
        let k = alfa / beta;
        av.iter_mut().zip(&r2).for_each(|(a, r)| *a -= k * r);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&av);
        y = precond(&r2);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::Solver {
                iterations: itn,
                residual: phibar / beta1,
                reason: "preconditioner is not positive definite".into(),
            });
        }
        beta = bb.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 || beta == 0.0 {
            return Ok((x, itn));
        }
    }
    Err(Error::Solver {
        iterations: max_iter,
        residual: phibar / beta1,
        reason: "iteration limit reached".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sprs::TriMat;

    #[test]
    fn solves_small_indefinite_bordered_system() {
        // 1D Neumann Laplacian (singular) bordered by the all-ones constraint
        let n = 40;
        let mut t = TriMat::new((n, n));
        for i in 0..n - 1 {
            t.add_triplet(i, i, 1.0);
            t.add_triplet(i + 1, i + 1, 1.0);
            t.add_triplet(i, i + 1, -1.0);
            t.add_triplet(i + 1, i, -1.0);
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin() - 0.01).collect();
        let sys = LinearSystem {
            matrix: t.to_csr(),
            rhs: rhs.clone(),
            border: Some(vec![1.0; n]),
        };
        let full = sys.full_rhs();
        let (x, iterations) = minres(&sys, &full, &sys.jacobi(), 1e-13, 1000).unwrap();
        assert!(iterations <= 3 * n);
        let r = sys.residual(&x, &full);
        assert!(dot(&r, &r).sqrt() < 1e-10);
        // the multiplier is the mean of the right-hand side
        let mean = rhs.iter().sum::<f64>() / n as f64;
        assert!((x[n] - mean).abs() < 1e-11);
    }

    #[test]
    fn reports_iteration_limit() {
        let mut t = TriMat::new((3, 3));
        for (i, d) in [1.0, 10.0, 100.0].iter().enumerate() {
            t.add_triplet(i, i, *d);
        }
        t.add_triplet(0, 1, 0.5);
        t.add_triplet(1, 0, 0.5);
        let sys = LinearSystem {
            matrix: t.to_csr(),
            rhs: vec![1.0, 1.0, 1.0],
            border: None,
        };
        let m = vec![1.0; 3];
        match minres(&sys, &sys.full_rhs(), &m, 1e-14, 1) {
            Err(Error::Solver { iterations: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
