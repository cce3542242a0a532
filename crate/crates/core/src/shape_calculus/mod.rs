//! Finite-difference shape calculus on the disk and parameter sweeps.

mod sweeps;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sweeps::{annulus_compare, box_osc_sweep, polygon_sweep, serrin_gap_report, LevelPlan};

use crate::closed_form::{mode_second_variation, RadialProfile};
use crate::fem::{solve_neumann_mean_zero, SolveOptions};
use crate::geometry::{build_mesh, DomainSpec, TriMesh};
use crate::{Error, Result};

/// Disk refinement level used by finite-difference paths unless overridden.
pub const DEFAULT_FD_LEVEL: usize = 6;

fn source(exponent: f64) -> Result<RadialProfile> {
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(Error::domain(format!(
            "source exponent must be non-negative, got {exponent}"
        )));
    }
    Ok(RadialProfile::power(exponent))
}

/// `g = T · (π/|Ω_h|)^{2+s}` for `f = r^s`, `β = 0`, on a given mesh.
///
/// Since `T(λΩ) = λ^{4+2s} T(Ω)` for dilations about the origin, `g` is
/// dilation invariant, and equals `T` whenever the area is `π`. The mesh area
/// is used so the normalization matches the discrete domain exactly.
pub fn normalized_energy_on_mesh(mesh: &TriMesh, exponent: f64, opts: &SolveOptions) -> Result<f64> {
    let f = source(exponent)?;
    let sol = solve_neumann_mean_zero(mesh, &f, 0.0, opts)?;
    Ok(sol.energies.t * (PI / sol.area).powf(2.0 + exponent))
}

/// [`normalized_energy_on_mesh`] on `build_mesh(spec, level)`.
pub fn normalized_energy(spec: &DomainSpec, exponent: f64, level: usize, opts: &SolveOptions) -> Result<f64> {
    if let DomainSpec::Box { half_widths } = spec {
        if half_widths.len() != 2 {
            return Err(Error::domain("normalized energy is computed in two dimensions only"));
        }
    }
    let mesh = build_mesh(spec, level)?;
    normalized_energy_on_mesh(&mesh, exponent, opts)
}

/// Boundary perturbations `r(θ) = R + t cos(kθ)` of the disk, sampled at
/// `t ∈ {−t₀, −t₀/2, 0, t₀/2, t₀}` with the source `f = r^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPath {
    pub radius: f64,
    pub mode: u32,
    pub t0: f64,
    pub exponent: f64,
    pub level: usize,
}

impl PerturbationPath {
    /// Path with the default amplitude `t₀ = 0.02 R` and level.
    pub fn new(radius: f64, mode: u32, exponent: f64) -> Self {
        PerturbationPath {
            radius,
            mode,
            t0: 0.02 * radius,
            exponent,
            level: DEFAULT_FD_LEVEL,
        }
    }

    pub fn with_amplitude(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.level = level;
        self
    }

    pub fn amplitudes(&self) -> [f64; 5] {
        let t = self.t0;
        [-t, -0.5 * t, 0.0, 0.5 * t, t]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {}", self.radius)));
        }
        if self.mode < 1 {
            return Err(Error::domain("perturbation mode must be at least 1"));
        }
        if !(self.t0 > 0.0 && self.t0 < 0.5 * self.radius) {
            return Err(Error::validation(format!(
                "amplitude t0 = {} must lie in (0, R/2) with R = {}",
                self.t0, self.radius
            )));
        }
        source(self.exponent)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdEstimate {
    /// Richardson-extrapolated `g''(0)`.
    pub estimate: f64,
    /// Central second difference at `t₀`.
    pub coarse: f64,
    /// Central second difference at `t₀/2`.
    pub fine: f64,
    /// Mode oracle with `ζ = cos(kθ)`.
    pub oracle: f64,
    /// `|estimate − oracle| / |oracle|`, or the absolute gap when the oracle vanishes.
    pub relative_gap: f64,
    /// `(t, g(t))` along the path.
    pub samples: Vec<(f64, f64)>,
}

/// Richardson disagreement above this fraction is reported as non-convergence.
const FD_AGREEMENT: f64 = 0.2;
/// Floor on the magnitude used in the agreement test, so modes whose second
/// variation vanishes are judged absolutely.
const FD_FLOOR: f64 = 0.05;

/// Estimates `g''(0)` along a perturbation path by central differences with
/// one Richardson step and compares it with the mode oracle (`β = 0`).
pub fn fd_second_variation(path: &PerturbationPath, opts: &SolveOptions) -> Result<FdEstimate> {
    path.validate()?;
    let ts = path.amplitudes();
    let values: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let spec = DomainSpec::PerturbedDisk {
                radius: path.radius,
                mode: path.mode,
                amplitude: t,
            };
            let mesh = build_mesh(&spec, path.level)?;
            normalized_energy_on_mesh(&mesh, path.exponent, opts)
        })
        .collect::<Result<_>>()?;
    let g0 = values[2];
    let coarse = (values[4] - 2.0 * g0 + values[0]) / (ts[4] * ts[4]);
    let fine = (values[3] - 2.0 * g0 + values[1]) / (ts[3] * ts[3]);
    let estimate = (4.0 * fine - coarse) / 3.0;
    if (coarse - fine).abs() > FD_AGREEMENT * estimate.abs().max(FD_FLOOR) {
        return Err(Error::FiniteDifference { coarse, fine });
    }
    let oracle = mode_second_variation(2, path.radius, 0.0, &RadialProfile::power(path.exponent), path.mode)?;
    let relative_gap = if oracle == 0.0 {
        (estimate - oracle).abs()
    } else {
        (estimate - oracle).abs() / oracle.abs()
    };
    Ok(FdEstimate {
        estimate,
        coarse,
        fine,
        oracle,
        relative_gap,
        samples: ts.iter().copied().zip(values).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_dilation_invariant() {
        let opts = SolveOptions::default();
        for s in [0.0, 2.0] {
            let a = normalized_energy(&DomainSpec::Disk { radius: 1.0 }, s, 3, &opts).unwrap();
            let b = normalized_energy(&DomainSpec::Disk { radius: 2.0 }, s, 3, &opts).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs(), "s={s}: {a} vs {b}");
            let c = normalized_energy(&DomainSpec::RegularPolygon { sides: 4, area: PI }, s, 3, &opts).unwrap();
            let d = normalized_energy(
                &DomainSpec::RegularPolygon {
                    sides: 4,
                    area: 4.0 * PI,
                },
                s,
                3,
                &opts,
            )
            .unwrap();
            assert!((c - d).abs() <= 1e-9 * c.abs());
        }
        assert!(normalized_energy(&DomainSpec::Disk { radius: 1.0 }, -1.0, 2, &opts).is_err());
    }

    #[test]
    fn path_validation() {
        assert!(PerturbationPath::new(1.0, 0, 0.0).validate().is_err());
        assert!(PerturbationPath::new(1.0, 2, 0.0)
            .with_amplitude(0.6)
            .validate()
            .is_err());
        assert!(PerturbationPath::new(1.0, 2, -1.0).validate().is_err());
        let p = PerturbationPath::new(2.0, 3, 1.0);
        assert_eq!(p.amplitudes(), [-0.04, -0.02, 0.0, 0.02, 0.04]);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn coarse_mode_two_estimate_is_close_to_oracle() {
        let p = PerturbationPath::new(1.0, 2, 0.0).with_level(4);
        let est = fd_second_variation(&p, &SolveOptions::default()).unwrap();
        assert!((est.oracle - PI / 8.0).abs() < 1e-15);
        assert!(est.relative_gap < 0.1, "{est:?}");
        assert_eq!(est.samples.len(), 5);
    }
}
