use std::f64::consts::PI;

use serde::Serialize;

use super::ball::unit_ball_volume;
use crate::{Error, Result};

/// Radial solution of the constant-Neumann, boundary-mean-zero problem on
/// `{1 < |x| < b}` with `f ≡ 1`:
/// `u = a1 r² + a2 log r + a3` (n = 2) or `u = a1 r² + a2 r^{2−n} + a3` (n ≥ 3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusSolution {
    pub n: usize,
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

fn check(n: usize, b: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {n}")));
    }
    if !(b.is_finite() && b > 1.0) {
        return Err(Error::domain(format!("outer radius must exceed 1, got {b}")));
    }
    Ok(())
}

pub fn annulus_solution(n: usize, b: f64) -> Result<AnnulusSolution> {
    check(n, b)?;
    let nf = n as f64;
    let a1 = -1.0 / (2.0 * nf);
    // flux: u_r(b) = −u_r(1) = −|Ω|/P; boundary mean: u(1) + b^{n−1} u(b) = 0
    let (a2, a3) = if n == 2 {
        let a3 = ((b.powi(3) + 1.0) / 4.0 - 0.5 * b * b * b.ln()) / (b + 1.0);
        (0.5 * b, a3)
    } else {
        let bn1 = b.powi(n as i32 - 1);
        let a2 = -(b + 1.0) / (nf * (nf - 2.0) * (1.0 + 1.0 / bn1));
        let a3 = ((1.0 + b.powi(n as i32 + 1)) / (2.0 * nf) - a2 * (1.0 + b)) / (1.0 + bn1);
        (a2, a3)
    };
    Ok(AnnulusSolution { n, b, a1, a2, a3 })
}

impl AnnulusSolution {
    pub fn u(&self, r: f64) -> f64 {
        let radial = if self.n == 2 {
            r.ln()
        } else {
            r.powf(2.0 - self.n as f64)
        };
        self.a1 * r * r + self.a2 * radial + self.a3
    }

    pub fn u_r(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        let radial = if self.n == 2 {
            1.0 / r
        } else {
            (2.0 - nf) * r.powf(1.0 - nf)
        };
        2.0 * self.a1 * r + self.a2 * radial
    }

    /// `|Ω| / P(Ω)`.
    pub fn volume_to_perimeter(&self) -> f64 {
        let nf = self.n as f64;
        (self.b.powf(nf) - 1.0) / (nf * (self.b.powf(nf - 1.0) + 1.0))
    }

    /// `∫_Ω u dx`.
    pub fn energy(&self) -> f64 {
        let nf = self.n as f64;
        let b = self.b;
        let sphere = nf * unit_ball_volume(self.n);
        // ∫_1^b u r^{n−1} dr
        let radial = if self.n == 2 {
            let log_part = 0.5 * b * b * b.ln() - 0.25 * (b * b - 1.0);
            self.a1 * (b.powi(4) - 1.0) / 4.0 + self.a2 * log_part + self.a3 * (b * b - 1.0) / 2.0
        } else {
            self.a1 * (b.powf(nf + 2.0) - 1.0) / (nf + 2.0)
                + self.a2 * (b * b - 1.0) / 2.0
                + self.a3 * (b.powf(nf) - 1.0) / nf
        };
        sphere * radial
    }
}

/// `h(b) = 2b³ − b² − 2b² log b − 2b + 1`.
pub fn annulus_h(b: f64) -> f64 {
    2.0 * b.powi(3) - b * b - 2.0 * b * b * b.ln() - 2.0 * b + 1.0
}

/// Energy comparison between the planar annulus `{1 < |x| < b}` and the disk
/// of equal area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusDiskGap {
    pub b: f64,
    /// `∫u` on the disk of radius `√(b² − 1)`: `(π/8)(b² − 1)²`.
    pub integral_disk: f64,
    pub integral_annulus: f64,
    /// `(π/4) h(b) = ∫u_disk − ∫u_annulus`.
    pub gap: f64,
    /// `T(annulus) > T(disk)`, equivalent to `gap > 0`.
    pub annulus_energy_exceeds_disk: bool,
}

pub fn annulus_disk_gap(b: f64) -> Result<AnnulusDiskGap> {
    if !(b.is_finite() && b >= 1.0) {
        return Err(Error::domain(format!("outer radius must be at least 1, got {b}")));
    }
    let integral_disk = PI / 8.0 * (b * b - 1.0).powi(2);
    let gap = PI / 4.0 * annulus_h(b);
    Ok(AnnulusDiskGap {
        b,
        integral_disk,
        integral_annulus: integral_disk - gap,
        gap,
        annulus_energy_exceeds_disk: gap > 0.0,
    })
}

/// Ratio `u(b)/u(1)` required by stationarity minus the ratio `−1/b^{n−1}`
/// imposed by the boundary-mean-zero condition. Positive values certify the
/// annulus is not stationary.
pub fn annulus_stationarity_gap(n: usize, b: f64) -> Result<f64> {
    check(n, b)?;
    let nf = n as f64;
    let bn = b.powf(nf);
    let stationary = b * ((nf - 1.0) * bn + nf * b.powf(nf - 1.0) + 1.0) / (bn + nf * b + nf - 1.0);
    let mean_zero = -1.0 / b.powf(nf - 1.0);
    Ok(stationary - mean_zero)
}

/// The stationarity functional `S = ½|∇u|² − cHu − u` (β = 0, f ≡ 1) on the
/// outer and inner spheres, evaluated on the exact solution.
pub fn annulus_stationarity_values(n: usize, b: f64) -> Result<(f64, f64)> {
    let sol = annulus_solution(n, b)?;
    let nf = n as f64;
    let c = -sol.volume_to_perimeter();
    let s = |r: f64, h: f64| 0.5 * sol.u_r(r).powi(2) - c * h * sol.u(r) - sol.u(r);
    Ok((s(b, (nf - 1.0) / b), s(1.0, -(nf - 1.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_coefficients_at_b_two() {
        let s = annulus_solution(2, 2.0).unwrap();
        assert_eq!(s.a1, -0.25);
        assert_eq!(s.a2, 1.0);
        assert!((s.a3 - (2.25 - 2.0 * 2f64.ln()) / 3.0).abs() < 1e-15);
        assert!((s.a3 - 0.287902).abs() < 1e-6);
    }

    #[test]
    fn boundary_conditions_hold_in_every_dimension() {
        for n in 2..=5 {
            for b in [1.01, 1.5, 2.0, 7.0] {
                let s = annulus_solution(n, b).unwrap();
                assert_eq!(s.a1, -1.0 / (2.0 * n as f64));
                let nf = n as f64;
                // boundary mean zero, i.e. u(b)/u(1) = −1/b^{n−1}
                let mean = s.u(1.0) + b.powf(nf - 1.0) * s.u(b);
                assert!(mean.abs() < 1e-12 * s.u(1.0).abs().max(1.0), "n={n} b={b}");
                // constant outward flux c = −|Ω|/P on both spheres
                let c = -s.volume_to_perimeter();
                assert!((s.u_r(b) - c).abs() < 1e-12);
                assert!((-s.u_r(1.0) - c).abs() < 1e-12);
                // −Δu = 1 by finite differences of r^{n−1} u_r
                let r = 0.5 * (1.0 + b);
                let h = 1e-5;
                let flux = |r: f64| r.powf(nf - 1.0) * s.u_r(r);
                let lap = (flux(r + h) - flux(r - h)) / (2.0 * h) / r.powf(nf - 1.0);
                assert!((lap + 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn planar_energy_matches_published_integral() {
        for b in [1.2, 2.0, 3.5] {
            let s = annulus_solution(2, b).unwrap();
            let a3 = s.a3;
            let published = -PI * (b.powi(4) - 1.0) / 8.0
                + PI * b / 4.0 * (2.0 * b * b * b.ln() - b * b + 1.0)
                + (b - 1.0) * PI * ((b.powi(3) + 1.0) / 4.0 - 0.5 * b * b * b.ln());
            assert!((s.energy() - published).abs() < 1e-12 * published.abs().max(1.0));
            assert!((a3 * (b + 1.0) - ((b.powi(3) + 1.0) / 4.0 - 0.5 * b * b * b.ln())).abs() < 1e-12);
            let gap = annulus_disk_gap(b).unwrap();
            assert!((gap.integral_annulus - s.energy()).abs() < 1e-12 * gap.integral_disk);
        }
    }

    #[test]
    fn thin_annulus_has_vanishing_energy() {
        let e = annulus_solution(2, 1.0 + 1e-6).unwrap().energy();
        assert!(e.abs() < 1e-10);
    }

    #[test]
    fn gap_values() {
        let g = annulus_disk_gap(2.0).unwrap();
        assert!((g.integral_disk - 9.0 * PI / 8.0).abs() < 1e-15);
        assert!((annulus_h(2.0) - (9.0 - 8.0 * 2f64.ln())).abs() < 1e-14);
        assert!((g.gap - 2.713411).abs() < 1e-6);
        assert!(g.annulus_energy_exceeds_disk);
        assert_eq!(annulus_h(1.0), 0.0);
        assert_eq!(annulus_disk_gap(1.0).unwrap().gap, 0.0);
        let g = annulus_disk_gap(1.5).unwrap();
        assert!((annulus_h(1.5) - 0.675407).abs() < 1e-6);
        assert!((g.gap - 0.530463).abs() < 1e-6);
    }

    #[test]
    fn stationarity_gap_values_and_sign() {
        assert!((annulus_stationarity_gap(2, 2.0).unwrap() - 2.5).abs() < 1e-14);
        assert!((annulus_stationarity_gap(3, 2.0).unwrap() - 3.875).abs() < 1e-14);
        for n in [2, 3, 4] {
            for b in [1.01, 1.1, 1.5, 2.0, 5.0, 10.0] {
                assert!(annulus_stationarity_gap(n, b).unwrap() > 0.0);
            }
        }
        assert!(annulus_stationarity_gap(2, 1.0).is_err());
    }

    #[test]
    fn stationarity_functional_differs_between_circles() {
        let (outer, inner) = annulus_stationarity_values(2, 2.0).unwrap();
        // u_r² is the same on both circles, so only the −cHu − u terms differ
        assert!((outer - 0.139213).abs() < 1e-6);
        assert!((inner - 0.068147).abs() < 1e-6);
    }
}
