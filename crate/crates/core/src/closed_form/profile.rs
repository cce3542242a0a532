use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ball::unit_ball_volume;
use crate::quadrature;
use crate::{Error, Result};

/// Radial source term `f(|x|)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    Constant {
        value: f64,
    },
    /// `scale · r^exponent`
    Power {
        exponent: f64,
        scale: f64,
    },
    /// Arbitrary radial function; ball averages fall back to quadrature.
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Constant { value } => write!(f, "Constant({value})"),
            RadialProfile::Power { exponent, scale } => write!(f, "Power({scale}·r^{exponent})"),
            RadialProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Default for RadialProfile {
    fn default() -> Self {
        RadialProfile::unit()
    }
}

impl RadialProfile {
    /// `f ≡ 1`.
    pub fn unit() -> Self {
        RadialProfile::Constant { value: 1.0 }
    }

    /// `f = r^s`, with `s = 0` meaning `f ≡ 1`.
    pub fn power(s: f64) -> Self {
        if s == 0.0 {
            RadialProfile::unit()
        } else {
            RadialProfile::Power {
                exponent: s,
                scale: 1.0,
            }
        }
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        RadialProfile::Custom(Arc::new(f))
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Constant { value } => *value,
            RadialProfile::Power { exponent, scale } => scale * r.powf(*exponent),
            RadialProfile::Custom(f) => f(r),
        }
    }

    pub fn at(&self, p: [f64; 2]) -> f64 {
        self.value(p[0].hypot(p[1]))
    }

    /// Degree of homogeneity, when the profile has one.
    pub fn homogeneity(&self) -> Option<f64> {
        match self {
            RadialProfile::Constant { .. } => Some(0.0),
            RadialProfile::Power { exponent, .. } => Some(*exponent),
            RadialProfile::Custom(_) => None,
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, RadialProfile::Constant { value } if *value == 1.0)
    }

    /// Checks the profile parameters; custom profiles are sampled on `[0, radius]`.
    pub fn validate(&self, radius: f64) -> Result<()> {
        match self {
            RadialProfile::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(Error::domain(format!("constant source must be positive, got {value}")));
                }
            }
            RadialProfile::Power { exponent, scale } => {
                if !(exponent.is_finite() && *exponent >= 0.0) {
                    return Err(Error::domain(format!(
                        "power source exponent must be non-negative, got {exponent}"
                    )));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::domain(format!(
                        "power source scale must be positive, got {scale}"
                    )));
                }
            }
            RadialProfile::Custom(f) => {
                const SAMPLES: usize = 256;
                for i in 0..=SAMPLES {
                    let r = radius * i as f64 / SAMPLES as f64;
                    let v = f(r);
                    // r = 0 may vanish (e.g. r²); elsewhere f must be strictly positive
                    if !v.is_finite() || v < 0.0 || (i > 0 && v == 0.0) {
                        return Err(Error::domain(format!("source is not positive at r = {r}: f = {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `∫_0^t f(s) s^{n−1} ds`.
    pub fn radial_mass(&self, n: usize, t: f64) -> Result<f64> {
        let nf = n as f64;
        match self {
            RadialProfile::Constant { value } => Ok(value * t.powf(nf) / nf),
            RadialProfile::Power { exponent, scale } => Ok(scale * t.powf(nf + exponent) / (nf + exponent)),
            RadialProfile::Custom(f) => quadrature::integrate(|s| f(s) * s.powi(n as i32 - 1), 0.0, t, 1e-12),
        }
    }

    /// Ball average `(1/|B_R|) ∫_{B_R} f dx` in dimension `n`.
    pub fn ball_average(&self, n: usize, radius: f64) -> Result<f64> {
        self.validate(radius)?;
        let nf = n as f64;
        let avg = match self {
            RadialProfile::Constant { value } => *value,
            RadialProfile::Power { exponent, scale } => scale * nf / (nf + exponent) * radius.powf(*exponent),
            RadialProfile::Custom(_) => {
                let omega = unit_ball_volume(n);
                nf * omega * self.radial_mass(n, radius)? / (omega * radius.powf(nf))
            }
        };
        if avg <= 0.0 {
            return Err(Error::domain("ball average of the source must be positive"));
        }
        Ok(avg)
    }
}
