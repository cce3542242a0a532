use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{annulus_disk_gap, box_oscillations, regular_polygon_energy, RadialProfile};
use crate::fem::{solve_neumann_mean_zero, SolveOptions};
use crate::geometry::{build_mesh, DomainSpec, MAX_LEVEL};
use crate::report::{Cell, SweepReport};
use crate::{Error, Result};

/// Refinement levels for a convergence sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelPlan {
    /// The same levels for every domain.
    Fixed(Vec<usize>),
    /// Per domain, the coarsest level with `h_max ≤ h_max` and the `count − 1` levels below it.
    TargetH { h_max: f64, count: usize },
}

impl LevelPlan {
    fn levels(&self, spec: &DomainSpec) -> Result<Vec<usize>> {
        match self {
            LevelPlan::Fixed(levels) => {
                if levels.len() < 2 || levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::validation("need at least two strictly increasing levels"));
                }
                if levels[levels.len() - 1] > MAX_LEVEL {
                    return Err(Error::validation(format!("levels must not exceed {MAX_LEVEL}")));
                }
                Ok(levels.clone())
            }
            &LevelPlan::TargetH { h_max, count } => {
                if !(h_max > 0.0) || count < 2 {
                    return Err(Error::validation("target h_max must be positive and count at least 2"));
                }
                // uniform refinement of straight-sided meshes halves every edge
                let h0 = build_mesh(spec, 0)?.measures().h_max;
                let finest = (0..=MAX_LEVEL)
                    .find(|&l| h0 / f64::from(1u32 << l) <= h_max)
                    .ok_or_else(|| Error::validation(format!("h_max {h_max} needs more than {MAX_LEVEL} levels")))?;
                if finest + 1 < count {
                    return Err(Error::validation(format!(
                        "h_max {h_max} is reached at level {finest}, too coarse for {count} levels"
                    )));
                }
                Ok((finest + 1 - count..=finest).collect())
            }
        }
    }
}

fn strictly_increasing(values: &[f64]) -> Option<usize> {
    values.windows(2).position(|w| w[1] <= w[0]).map(|i| i + 1)
}

/// Regular `N`-gons of area `π`: closed-form energies against FEM (`β = 0`,
/// `f ≡ 1`) over a set of nested refinements.
///
/// Checks: `T_closed` strictly increasing in `N` and below `T(B) = −π/16`;
/// `T_fem` strictly increasing at the finest level; finest `rel_err ≤ rel_tol`;
/// every observed order `≥ min_order`.
pub fn polygon_sweep(
    sides: &[usize],
    plan: &LevelPlan,
    rel_tol: f64,
    min_order: f64,
    opts: &SolveOptions,
) -> Result<SweepReport> {
    if sides.is_empty() || sides.iter().any(|&n| !(3..=64).contains(&n)) {
        return Err(Error::validation("polygon side counts must lie in [3, 64]"));
    }
    if sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("polygon side counts must be strictly increasing"));
    }
    let mut jobs = Vec::new();
    for &n in sides {
        let spec = DomainSpec::RegularPolygon { sides: n, area: PI };
        let levels = plan.levels(&spec)?;
        let finest = *levels.last().expect("at least two levels");
        for level in levels {
            jobs.push((n, level, level == finest));
        }
    }
    let solved: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(n, level, _)| {
            let mesh = build_mesh(&DomainSpec::RegularPolygon { sides: n, area: PI }, level)?;
            let sol = solve_neumann_mean_zero(&mesh, &RadialProfile::unit(), 0.0, opts)?;
            Ok((sol.energies.t, mesh.measures().h_max))
        })
        .collect::<Result<_>>()?;

    let mut report = SweepReport::new(
        "polygon-sweep",
        &[
            "N", "level", "h_max", "E_closed", "T_closed", "T_fem", "rel_err", "order", "finest",
        ],
    );
    let mut prev: Option<(usize, f64, f64)> = None;
    for (&(n, level, finest), &(t_fem, h)) in jobs.iter().zip(&solved) {
        let closed = regular_polygon_energy(n, PI)?;
        let err = (t_fem - closed.t).abs() / closed.t.abs();
        let order = match prev {
            Some((pn, perr, ph)) if pn == n => Some((perr / err).ln() / (ph / h).ln()),
            _ => None,
        };
        prev = Some((n, err, h));
        report.push_row(vec![
            n.into(),
            level.into(),
            h.into(),
            closed.e.into(),
            closed.t.into(),
            t_fem.into(),
            err.into(),
            order.into(),
            finest.into(),
        ])?;
    }
    let col = |r: &SweepReport, name: &str, finest_only: bool| -> Vec<(usize, f64)> {
        let f = r.column_index("finest").expect("schema");
        let j = r.column_index(name).expect("schema");
        r.rows()
            .iter()
            .enumerate()
            .filter(|(_, row)| !finest_only || row[f] == Cell::Bool(true))
            .filter_map(|(i, row)| row[j].as_f64().map(|v| (i, v)))
            .collect()
    };
    let closed = col(&report, "T_closed", true);
    let fem = col(&report, "T_fem", true);
    let closed_vals: Vec<f64> = closed.iter().map(|p| p.1).collect();
    let fem_vals: Vec<f64> = fem.iter().map(|p| p.1).collect();
    let bad = strictly_increasing(&closed_vals);
    report.check(
        "closed_form_strictly_increasing",
        bad.is_none(),
        bad.map(|k| closed[k].0),
        "T_closed(P_N) strictly increasing in N",
    );
    let ball = -PI / 16.0;
    let below = closed.iter().find(|p| p.1 >= ball);
    report.check(
        "closed_form_below_ball",
        below.is_none(),
        below.map(|p| p.0),
        "T_closed(P_N) < T(B) = -pi/16",
    );
    let bad = strictly_increasing(&fem_vals);
    report.check(
        "fem_strictly_increasing_at_finest",
        bad.is_none(),
        bad.map(|k| fem[k].0),
        "T_fem strictly increasing in N at the finest level",
    );
    let err_fail = col(&report, "rel_err", true).into_iter().find(|p| !(p.1 <= rel_tol));
    report.check(
        "finest_rel_err",
        err_fail.is_none(),
        err_fail.map(|p| p.0),
        format!("relative error at the finest level <= {rel_tol:e}"),
    );
    let order_fail = col(&report, "order", false).into_iter().find(|p| !(p.1 >= min_order));
    report.check(
        "convergence_order",
        order_fail.is_none(),
        order_fail.map(|p| p.0),
        format!("observed order >= {min_order}"),
    );
    report.set_provenance("plan", plan)?;
    report.set_provenance("solver", opts)?;
    report.set_provenance("source", "f = 1, beta = 0, area = pi")?;
    Ok(report)
}

/// Energy gap between the disk of area `π(b²−1)` and the annulus `{1 < |x| < b}`,
/// `E_disk − E_annulus`, closed form `(π/4)h(b)` against FEM.
pub fn annulus_compare(
    b_list: &[f64],
    annulus_level: usize,
    disk_level: usize,
    rel_tol: f64,
    opts: &SolveOptions,
) -> Result<SweepReport> {
    if b_list.is_empty() || b_list.iter().any(|b| !(b.is_finite() && *b > 1.0)) {
        return Err(Error::domain("annulus outer radii must exceed 1"));
    }
    if b_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("annulus outer radii must be strictly increasing"));
    }
    let rows: Vec<(f64, f64, f64, f64, f64)> = b_list
        .par_iter()
        .map(|&b| {
            let one = RadialProfile::unit();
            let ann = build_mesh(&DomainSpec::Annulus { r_in: 1.0, r_out: b }, annulus_level)?;
            let disk = build_mesh(
                &DomainSpec::Disk {
                    radius: (b * b - 1.0).sqrt(),
                },
                disk_level,
            )?;
            let e_ann = solve_neumann_mean_zero(&ann, &one, 0.0, opts)?.energies.e;
            let e_disk = solve_neumann_mean_zero(&disk, &one, 0.0, opts)?.energies.e;
            Ok((
                e_disk,
                e_ann,
                e_disk - e_ann,
                ann.measures().h_max,
                disk.measures().h_max,
            ))
        })
        .collect::<Result<_>>()?;
    let mut report = SweepReport::new(
        "annulus-compare",
        &[
            "b",
            "gap_closed",
            "E_disk_fem",
            "E_annulus_fem",
            "gap_fem",
            "rel_err",
            "h_annulus",
            "h_disk",
        ],
    );
    let mut closed = Vec::new();
    for (&b, &(e_disk, e_ann, gap_fem, h_ann, h_disk)) in b_list.iter().zip(&rows) {
        let gap = annulus_disk_gap(b)?.gap;
        closed.push(gap);
        report.push_row(vec![
            b.into(),
            gap.into(),
            e_disk.into(),
            e_ann.into(),
            gap_fem.into(),
            ((gap_fem - gap).abs() / gap).into(),
            h_ann.into(),
            h_disk.into(),
        ])?;
    }
    report.check_rows("gap_positive", "(pi/4) h(b) > 0 for b > 1", |r| {
        r[1].as_f64().is_some_and(|g| g > 0.0)
    });
    let bad = strictly_increasing(&closed);
    report.check(
        "gap_increasing",
        bad.is_none(),
        bad,
        "closed-form gap strictly increasing in b",
    );
    report.check_rows("fem_agreement", &format!("relative gap error <= {rel_tol:e}"), |r| {
        r[5].as_f64().is_some_and(|e| e <= rel_tol)
    });
    report.set_provenance("annulus_level", annulus_level)?;
    report.set_provenance("disk_level", disk_level)?;
    report.set_provenance("solver", opts)?;
    Ok(report)
}

/// Least-squares slope of `log y` against `log x`.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}

fn box_widths(n: usize, eps: f64) -> Vec<f64> {
    let mut a = vec![1.0 / eps; n];
    a[0] = eps.powi(n as i32 - 1);
    a
}

fn check_eps(n: usize, eps_list: &[f64]) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {n}")));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::domain("eps values must lie in (0, 1]"));
    }
    if eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::validation("eps values must be strictly decreasing"));
    }
    Ok(())
}

/// Boxes `a₁ = ε^{n−1}`, `a_i = 1/ε`: oscillation of the minimizer against `ε`.
///
/// For `n ≥ 3` the fitted exponent of `osc_closure ~ ε^p` is checked against
/// `n − 2` within `exponent_tol`; for `n = 2` the bound `osc_∂ ≥ |Ω|/16` and
/// `osc_∂/|Ω| < 1/8` are checked on every row.
pub fn box_osc_sweep(n: usize, eps_list: &[f64], exponent_tol: f64) -> Result<SweepReport> {
    check_eps(n, eps_list)?;
    let mut report = SweepReport::new(
        "box-osc",
        &[
            "eps",
            "a_1",
            "a_rest",
            "osc_closure",
            "osc_boundary",
            "volume",
            "closure_over_volume",
            "boundary_over_volume",
            "local_exponent",
        ],
    );
    let mut points = Vec::new();
    for &eps in eps_list {
        let a = box_widths(n, eps);
        let o = box_oscillations(&a)?;
        let local = points
            .last()
            .map(|&(pe, po): &(f64, f64)| (po / o.osc_closure).ln() / (pe / eps).ln());
        points.push((eps, o.osc_closure));
        report.push_row(vec![
            eps.into(),
            a[0].into(),
            a[1].into(),
            o.osc_closure.into(),
            o.osc_boundary.into(),
            o.volume.into(),
            o.closure_over_volume.into(),
            (o.osc_boundary / o.volume).into(),
            local.into(),
        ])?;
    }
    let expected = n as f64 - 2.0;
    report.set_summary("expected_exponent", expected);
    if n >= 3 {
        if points.len() < 2 {
            return Err(Error::validation("fitting an exponent needs at least two eps values"));
        }
        let p = log_slope(&points);
        report.set_summary("fitted_exponent", p);
        report.check(
            "fitted_exponent",
            (p - expected).abs() <= exponent_tol,
            None,
            format!("fitted exponent {p:.6} within {exponent_tol} of n - 2 = {expected}"),
        );
    } else {
        report.check_rows("planar_lower_bound", "osc_boundary >= |Omega|/16", |r| {
            let (osc, vol) = (r[4].as_f64().unwrap_or(f64::NAN), r[5].as_f64().unwrap_or(f64::NAN));
            osc >= vol / 16.0 * (1.0 - 1e-14)
        });
        report.check_rows("planar_upper_limit", "osc_boundary/|Omega| < 1/8", |r| {
            r[7].as_f64().is_some_and(|q| q < 0.125)
        });
    }
    report.set_provenance("n", n)?;
    report.set_provenance("widths", "a_1 = eps^(n-1), a_i = 1/eps")?;
    Ok(report)
}

/// Boxes that are far from a ball yet have small boundary oscillation, `n ≥ 3`.
/// The distortion proxy is circumradius over inradius, `|a|/a₁`.
pub fn serrin_gap_report(n: usize, eps_list: &[f64]) -> Result<SweepReport> {
    if n == 2 {
        return Err(Error::domain(
            "n = 2 is the open case: no planar family with vanishing boundary oscillation is known",
        ));
    }
    check_eps(n, eps_list)?;
    let mut report = SweepReport::new(
        "serrin-gap",
        &[
            "eps",
            "osc_boundary",
            "osc_closure",
            "circumradius",
            "inradius",
            "distortion",
        ],
    );
    let mut osc = Vec::new();
    let mut distortion = Vec::new();
    for &eps in eps_list {
        let a = box_widths(n, eps);
        let o = box_oscillations(&a)?;
        let circum = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        osc.push(-o.osc_boundary);
        distortion.push(circum / a[0]);
        report.push_row(vec![
            eps.into(),
            o.osc_boundary.into(),
            o.osc_closure.into(),
            circum.into(),
            a[0].into(),
            (circum / a[0]).into(),
        ])?;
    }
    let bad = strictly_increasing(&osc);
    report.check(
        "osc_decreasing",
        bad.is_none(),
        bad,
        "osc_boundary strictly decreases as eps decreases",
    );
    let bad = strictly_increasing(&distortion);
    report.check(
        "distortion_increasing",
        bad.is_none(),
        bad,
        "circumradius/inradius strictly increases",
    );
    report.set_provenance("n", n)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_h_plan_picks_nested_levels() {
        let spec = DomainSpec::RegularPolygon { sides: 3, area: PI };
        let levels = LevelPlan::TargetH { h_max: 0.03, count: 3 }.levels(&spec).unwrap();
        assert_eq!(levels, vec![5, 6, 7]);
        let h = build_mesh(&spec, 7).unwrap().measures().h_max;
        assert!(h <= 0.03 && 2.0 * h > 0.03);
        assert!(LevelPlan::Fixed(vec![3]).levels(&spec).is_err());
        assert!(LevelPlan::Fixed(vec![3, 3]).levels(&spec).is_err());
    }

    #[test]
    fn small_polygon_sweep() {
        let r = polygon_sweep(
            &[3, 4, 5],
            &LevelPlan::Fixed(vec![3, 4]),
            1e-1,
            1.5,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rows().len(), 6);
        assert!(r.passed(), "{:?}", r.checks());
        assert!(polygon_sweep(
            &[2, 3],
            &LevelPlan::Fixed(vec![1, 2]),
            1.0,
            1.0,
            &SolveOptions::default()
        )
        .is_err());
    }

    #[test]
    fn box_sweeps() {
        let r = box_osc_sweep(3, &[0.2, 0.1, 0.05], 0.05).unwrap();
        assert!(r.passed());
        let p = r.summary_value("fitted_exponent").unwrap().as_f64().unwrap();
        assert!((p - 1.0).abs() < 0.05);
        let r = box_osc_sweep(4, &[0.1], 0.05);
        assert!(r.is_err());
        let aspects = [1.0f64, 2.0, 5.0, 20.0];
        let eps: Vec<f64> = aspects.iter().map(|a| 1.0 / a.sqrt()).collect();
        let r = box_osc_sweep(2, &eps, 0.05).unwrap();
        assert!(r.passed(), "{:?}", r.checks());
        assert!(box_osc_sweep(3, &[0.1, 0.2], 0.05).is_err());
    }

    #[test]
    fn serrin_report_refuses_the_plane() {
        assert!(matches!(serrin_gap_report(2, &[0.1]), Err(Error::Domain(_))));
        let r = serrin_gap_report(3, &[0.2, 0.1, 0.05, 0.025]).unwrap();
        assert!(r.passed());
        let row = &r.rows()[1];
        assert!((row[1].as_f64().unwrap() - 20.0 / 200.4).abs() < 1e-12);
        assert!(row[5].as_f64().unwrap() > 100.0);
    }

    #[test]
    fn log_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(1.7)))
            .collect();
        assert!((log_slope(&pts) - 1.7).abs() < 1e-12);
    }
}
