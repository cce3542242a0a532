use super::ball::unit_ball_volume;
use super::RadialProfile;
use crate::{Error, Result};

/// Tolerance used at equality in the stability inequalities.
const STABILITY_TOL: f64 = 1e-12;

/// `∫_{∂B_R} ζ²` for the mode shape used by the oracle: `ζ = cos(lθ)` in the
/// plane (giving `πR`), and generally half the sphere's measure, which is the
/// mean square of `cos(lθ)` carried over to a degree-`l` harmonic.
pub fn mode_norm_squared(n: usize, radius: f64) -> f64 {
    0.5 * n as f64 * unit_ball_volume(n) * radius.powi(n as i32 - 1)
}

fn check_ball(n: usize, radius: f64, beta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {n}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::domain(format!("beta must be non-negative, got {beta}")));
    }
    Ok(())
}

/// Second shape derivative of `T_β` at `B_R` along the normal speed `ζ`, a
/// degree-`l` harmonic.
///
/// With `F = f(R) − ((n−1−βR)/n) f̄`, the first-order state perturbation is
/// the harmonic extension `v = A (r/R)^l ζ`, `A = F R/(l + βR)`, and the second
/// variation `−F ∫(vζ + u_r ζ²)` evaluates to
/// `‖ζ‖² F R (f̄/n − F/(l + βR))`.
pub fn mode_second_variation(n: usize, radius: f64, beta: f64, profile: &RadialProfile, mode: u32) -> Result<f64> {
    check_ball(n, radius, beta)?;
    if mode < 1 {
        return Err(Error::domain("mode degree must be at least 1"));
    }
    let nf = n as f64;
    let avg = profile.ball_average(n, radius)?;
    let f_r = profile.value(radius);
    let big_f = f_r - (nf - 1.0 - beta * radius) / nf * avg;
    let l = f64::from(mode);
    Ok(mode_norm_squared(n, radius) * big_f * radius * (avg / nf - big_f / (l + beta * radius)))
}

/// `((n−1−βR)/n) f̄ ≤ f(R) ≤ f̄`, with tolerance at equality.
pub fn stability_condition(n: usize, radius: f64, beta: f64, profile: &RadialProfile) -> Result<bool> {
    check_ball(n, radius, beta)?;
    let nf = n as f64;
    let avg = profile.ball_average(n, radius)?;
    let f_r = profile.value(radius);
    let tol = STABILITY_TOL * avg.abs().max(f_r.abs()).max(1.0);
    let lower = (nf - 1.0 - beta * radius) / nf * avg;
    Ok(lower <= f_r + tol && f_r <= avg + tol)
}

/// `κ₁ = −1/(2T)`, the optimal constant of `∫|∇u|² ≥ κ₁ (∫u)²` under the
/// boundary-mean-zero constraint.
pub fn kappa1_from_t(t: f64) -> Result<f64> {
    if !(t.is_finite() && t < 0.0) {
        return Err(Error::domain(format!("T must be negative, got {t}")));
    }
    Ok(-0.5 / t)
}
