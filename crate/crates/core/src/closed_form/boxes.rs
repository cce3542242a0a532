use serde::Serialize;

use crate::geometry::elementary_symmetric;
use crate::{Error, Result};

/// Exact solution on the box `∏ (−a_i, a_i)`:
/// `u = −kappa · Σ x_i²/a_i + offset`, `kappa = σ_n / (2σ_{n−1})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxSolution {
    pub n: usize,
    pub half_widths: Vec<f64>,
    pub kappa: f64,
    /// Constant that makes the boundary mean of `u` vanish.
    pub offset: f64,
    /// `σ_0 … σ_n`.
    pub sigma: Vec<f64>,
    /// Neumann datum `c = −σ_n/σ_{n−1} = −|Ω|/P`.
    pub c: f64,
    /// `E = ∫_Ω u dx`.
    pub e: f64,
}

fn check(half_widths: &[f64]) -> Result<()> {
    if half_widths.len() < 2 {
        return Err(Error::domain("a box needs at least two half-widths"));
    }
    if half_widths.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::domain("box half-widths must be positive"));
    }
    if half_widths.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("box half-widths must be sorted ascending"));
    }
    Ok(())
}

pub fn box_solution(half_widths: &[f64]) -> Result<BoxSolution> {
    check(half_widths)?;
    let n = half_widths.len();
    let sigma = elementary_symmetric(half_widths);
    let kappa = sigma[n] / (2.0 * sigma[n - 1]);
    let volume = 2f64.powi(n as i32) * sigma[n];
    let perimeter = 2f64.powi(n as i32) * sigma[n - 1];
    // The face x_i = ±a_i has measure 2^{n−1} σ_n / a_i and, since x_j² averages
    // to a_j²/3 over (−a_j, a_j), u_0 averages −kappa (a_i + (σ_1 − a_i)/3) on it.
    let boundary_integral: f64 = half_widths
        .iter()
        .map(|&a| {
            let face = 2f64.powi(n as i32 - 1) * sigma[n] / a;
            let mean = -kappa * (a + (sigma[1] - a) / 3.0);
            2.0 * face * mean
        })
        .sum();
    let offset = -boundary_integral / perimeter;
    // ∫ x_i²/a_i = |Ω| a_i / 3
    let integral_u0 = -kappa * volume * sigma[1] / 3.0;
    Ok(BoxSolution {
        n,
        half_widths: half_widths.to_vec(),
        kappa,
        offset,
        c: -sigma[n] / sigma[n - 1],
        e: integral_u0 + offset * volume,
        sigma,
    })
}

impl BoxSolution {
    pub fn u(&self, x: &[f64]) -> f64 {
        -self.kappa * x.iter().zip(&self.half_widths).map(|(xi, a)| xi * xi / a).sum::<f64>() + self.offset
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.half_widths)
            .map(|(xi, a)| -2.0 * self.kappa * xi / a)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxOscillations {
    /// `osc_Ω̄ u = σ_1 σ_n / (2σ_{n−1})`.
    pub osc_closure: f64,
    /// `kappa (σ_1 − a_1)`: max at the center of a smallest-width face, min at a corner.
    pub osc_boundary: f64,
    /// `|Ω| = 2^n σ_n`.
    pub volume: f64,
    /// `osc_closure / |Ω|`; equals 1/8 for every planar box.
    pub closure_over_volume: f64,
    /// Planar boxes only: `osc_boundary ≥ |Ω|/16`.
    pub planar_bound_holds: Option<bool>,
}

pub fn box_oscillations(half_widths: &[f64]) -> Result<BoxOscillations> {
    let sol = box_solution(half_widths)?;
    let n = sol.n;
    let s = &sol.sigma;
    let osc_closure = s[1] * s[n] / (2.0 * s[n - 1]);
    let osc_boundary = sol.kappa * (s[1] - half_widths[0]);
    let volume = 2f64.powi(n as i32) * s[n];
    Ok(BoxOscillations {
        osc_closure,
        osc_boundary,
        volume,
        closure_over_volume: osc_closure / volume,
        planar_bound_holds: (n == 2).then(|| osc_boundary >= volume / 16.0),
    })
}
