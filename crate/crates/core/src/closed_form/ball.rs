use std::cell::RefCell;
use std::f64::consts::PI;

use super::RadialProfile;
use crate::quadrature;
use crate::{Error, Result};

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Radial minimizer on `B_R`. Because `u` is radial the boundary-mean-zero
/// condition forces `u(R) = 0`, so
/// `u(r) = ∫_r^R t^{1−n} ∫_0^t f(s) s^{n−1} ds dt`.
#[derive(Clone, Debug)]
pub struct BallTorsion {
    pub n: usize,
    pub radius: f64,
    pub profile: RadialProfile,
    /// Ball average `f̄_{B_R}`.
    pub average: f64,
    /// Compatibility constant `c = u_r(R) = −R f̄ / n`.
    pub c: f64,
    pub t: f64,
    /// `E = −2T = ∫ f u`.
    pub e: f64,
}

pub fn ball_torsion(n: usize, radius: f64, profile: &RadialProfile) -> Result<BallTorsion> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {n}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    let average = profile.ball_average(n, radius)?;
    let nf = n as f64;
    let area_sphere = nf * unit_ball_volume(n);
    // ∫ f u dx = |S^{n−1}| ∫_0^R m(r)² r^{1−n} dr with m(r) = ∫_0^r f s^{n−1} ds
    let integral = match profile {
        RadialProfile::Constant { value } => value * value * radius.powf(nf + 2.0) / (nf * nf * (nf + 2.0)),
        RadialProfile::Power { exponent: p, scale } => {
            scale * scale * radius.powf(nf + 2.0 * p + 2.0) / ((nf + p) * (nf + p) * (nf + 2.0 * p + 2.0))
        }
        RadialProfile::Custom(_) => {
            let err = RefCell::new(None);
            let v = quadrature::integrate(
                |r| {
                    if r == 0.0 {
                        return 0.0;
                    }
                    match profile.radial_mass(n, r) {
                        Ok(m) => m * m * r.powf(1.0 - nf),
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                },
                0.0,
                radius,
                1e-12,
            )?;
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            v
        }
    };
    let e = area_sphere * integral;
    Ok(BallTorsion {
        n,
        radius,
        profile: profile.clone(),
        average,
        c: -radius * average / nf,
        t: -0.5 * e,
        e,
    })
}

impl BallTorsion {
    /// `u(r)` for `0 ≤ r ≤ R`.
    pub fn u(&self, r: f64) -> Result<f64> {
        let nf = self.n as f64;
        let big_r = self.radius;
        match &self.profile {
            RadialProfile::Constant { value } => Ok(value * (big_r * big_r - r * r) / (2.0 * nf)),
            RadialProfile::Power { exponent: p, scale } => {
                Ok(scale * (big_r.powf(p + 2.0) - r.powf(p + 2.0)) / ((nf + p) * (p + 2.0)))
            }
            RadialProfile::Custom(_) => {
                let err = RefCell::new(None);
                let v = quadrature::integrate(
                    |t| match self.profile.radial_mass(self.n, t) {
                        Ok(m) if t > 0.0 => m * t.powf(1.0 - nf),
                        Ok(_) => 0.0,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    },
                    r,
                    big_r,
                    1e-12,
                )?;
                err.into_inner().map_or(Ok(v), Err)
            }
        }
    }

    /// `u_r(r) = −r^{1−n} ∫_0^r f s^{n−1} ds`.
    pub fn u_r(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(-self.profile.radial_mass(self.n, r)? * r.powf(1.0 - self.n as f64))
    }

    /// `u_rr(R) = −f(R) + ((n−1)/n) f̄`.
    pub fn u_rr_at_boundary(&self) -> f64 {
        let nf = self.n as f64;
        -self.profile.value(self.radius) + (nf - 1.0) / nf * self.average
    }
}
