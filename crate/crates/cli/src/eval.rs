//! `torsion-lab eval "<name> key=value ..."`: a single closed-form value.

use std::collections::BTreeMap;

use torsion_core::closed_form::{
    annulus_disk_gap, annulus_h, annulus_stationarity_gap, ball_torsion, box_oscillations, box_solution,
    mode_second_variation, regular_polygon_energy, stability_condition, RadialProfile,
};

use crate::config::ConfigError;

struct Args<'a> {
    name: &'a str,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    fn parse(expr: &'a str) -> Result<Self, ConfigError> {
        let mut tokens = expr.split_whitespace();
        let name = tokens.next().ok_or_else(|| ConfigError("empty expression".into()))?;
        let mut values = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("expected key=value, got '{tok}'")))?;
            if values.insert(k, v).is_some() {
                return Err(ConfigError(format!("parameter '{k}' given twice")));
            }
        }
        Ok(Args { name, values })
    }

    fn allow(&self, keys: &[&str]) -> Result<(), ConfigError> {
        match self.values.keys().find(|k| !keys.contains(k)) {
            Some(k) => Err(ConfigError(format!("'{}' takes no parameter '{k}'", self.name))),
            None => Ok(()),
        }
    }

    fn raw(&self, key: &str) -> Result<&'a str, ConfigError> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| ConfigError(format!("'{}' needs {key}=...", self.name)))
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let s = self.raw(key)?;
        let v = match s {
            "pi" => std::f64::consts::PI,
            _ => s
                .parse()
                .map_err(|_| ConfigError(format!("{key}: not a number: '{s}'")))?,
        };
        Ok(v)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        if self.values.contains_key(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        let s = self.raw(key)?;
        s.parse()
            .map_err(|_| ConfigError(format!("{key}: not a non-negative integer: '{s}'")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.raw(key)?
            .split(',')
            .map(|s| {
                s.parse()
                    .map_err(|_| ConfigError(format!("{key}: not a number: '{s}'")))
            })
            .collect()
    }
}

/// Formats with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

/// Returns the value and the formula it came from.
pub fn evaluate(expr: &str) -> Result<(f64, &'static str), ConfigError> {
    let a = Args::parse(expr)?;
    let core = |e: torsion_core::Error| ConfigError(e.to_string());
    Ok(match a.name {
        "E_PN" | "T_PN" => {
            a.allow(&["N", "area"])?;
            let p = regular_polygon_energy(a.usize("N")?, a.f64_or("area", std::f64::consts::PI)?).map_err(core)?;
            if a.name == "E_PN" {
                (
                    p.e,
                    "E = pi^2 (3 + tan^2(pi/N)) / (24 N tan(pi/N)) at area pi, scaled by (area/pi)^2",
                )
            } else {
                (p.t, "T = -E/2")
            }
        }
        "h" => {
            a.allow(&["b"])?;
            let b = a.f64("b")?;
            if !(b >= 1.0) {
                return Err(ConfigError(format!("b must be at least 1, got {b}")));
            }
            (annulus_h(b), "h(b) = 2b^3 - b^2 - 2b^2 ln b - 2b + 1")
        }
        "annulus_gap" => {
            a.allow(&["b"])?;
            (annulus_disk_gap(a.f64("b")?).map_err(core)?.gap, "gap = (pi/4) h(b)")
        }
        "annulus_stationarity_gap" => {
            a.allow(&["n", "b"])?;
            let v = annulus_stationarity_gap(a.usize("n")?, a.f64("b")?).map_err(core)?;
            (v, "required u(b)/u(1) minus -1/b^(n-1)")
        }
        "ball_T" | "ball_E" | "ball_c" => {
            a.allow(&["n", "R", "s"])?;
            let b =
                ball_torsion(a.usize("n")?, a.f64("R")?, &RadialProfile::power(a.f64_or("s", 0.0)?)).map_err(core)?;
            match a.name {
                "ball_T" => (
                    b.t,
                    "T = -(|S^(n-1)|/2) int_0^R m(r)^2 r^(1-n) dr, m(r) = int_0^r f s^(n-1) ds",
                ),
                "ball_E" => (b.e, "E = -2T"),
                _ => (b.c, "c = -R avg(f) / n"),
            }
        }
        "box_E" => {
            a.allow(&["a"])?;
            (
                box_solution(&a.list("a")?).map_err(core)?.e,
                "E = int u, u = -kappa sum x_i^2/a_i + offset",
            )
        }
        "box_osc" | "box_osc_closure" => {
            a.allow(&["a"])?;
            let o = box_oscillations(&a.list("a")?).map_err(core)?;
            if a.name == "box_osc" {
                (o.osc_boundary, "osc_boundary = kappa (sigma_1 - a_1)")
            } else {
                (o.osc_closure, "osc_closure = sigma_1 sigma_n / (2 sigma_(n-1))")
            }
        }
        "mode_d2" => {
            a.allow(&["n", "R", "beta", "l", "s"])?;
            let l = u32::try_from(a.usize("l")?).map_err(|_| ConfigError("l is too large".into()))?;
            let v = mode_second_variation(
                a.usize("n")?,
                a.f64("R")?,
                a.f64_or("beta", 0.0)?,
                &RadialProfile::power(a.f64_or("s", 0.0)?),
                l,
            )
            .map_err(core)?;
            (v, "mode-wise second variation with zeta a degree-l spherical harmonic")
        }
        "stability" => {
            a.allow(&["n", "R", "beta", "s"])?;
            let ok = stability_condition(
                a.usize("n")?,
                a.f64("R")?,
                a.f64_or("beta", 0.0)?,
                &RadialProfile::power(a.f64_or("s", 0.0)?),
            )
            .map_err(core)?;
            (if ok { 1.0 } else { 0.0 }, "1 if f(R) <= avg(f) over the ball, else 0")
        }
        other => return Err(ConfigError(format!("unknown closed form '{other}'"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_values() {
        let show = |e| format_sig12(evaluate(e).unwrap().0);
        assert_eq!(show("E_PN N=4"), "0.411233516712");
        assert_eq!(show("h b=2"), "3.45482255552");
        assert_eq!(show("ball_T n=2 R=1"), "-0.196349540849");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(evaluate("nope").is_err());
        assert!(evaluate("E_PN").is_err());
        assert!(evaluate("E_PN N=4 M=3").is_err());
        assert!(evaluate("E_PN N=2").is_err());
        assert!(evaluate("h b=x").is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_sig12(1.0), "1.00000000000");
        assert_eq!(format_sig12(1.5e-9), "1.50000000000e-9");
        assert_eq!(format_sig12(0.0), "0");
    }
}
