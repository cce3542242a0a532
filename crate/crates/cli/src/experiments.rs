use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use torsion_core::closed_form::{
    annulus_stationarity_gap, ball_torsion, mode_second_variation, regular_polygon_energy, stability_condition,
    RadialProfile,
};
use torsion_core::fem::{
    solve_dirichlet, solve_neumann_mean_zero, solve_robin, write_solution, Solution, SolveOptions,
};
use torsion_core::geometry::{build_mesh, mesh_io::write_mesh};
use torsion_core::report::{Cell, SweepReport};
use torsion_core::shape_calculus::{
    annulus_compare, box_osc_sweep, fd_second_variation, polygon_sweep, serrin_gap_report, PerturbationPath,
};
use torsion_core::{DomainSpec, Result};

use crate::config::*;

fn domain_label(d: &DomainSpec) -> String {
    match d {
        DomainSpec::RegularPolygon { sides, .. } => format!("regular_polygon_{sides}"),
        DomainSpec::Polygon { vertices } => format!("polygon_{}", vertices.len()),
        DomainSpec::Disk { .. } => "disk".into(),
        DomainSpec::Annulus { .. } => "annulus".into(),
        DomainSpec::Box { .. } => "box".into(),
        DomainSpec::PerturbedDisk { mode, .. } => format!("perturbed_disk_{mode}"),
    }
}

pub fn run(config: &Config, out: &Path, quiet: bool) -> Result<(SweepReport, Vec<PathBuf>)> {
    let opts = config.common.solve_options();
    let mut extra = Vec::new();
    let report = match &config.settings {
        Settings::ClosedForm(c) => closed_form(c)?,
        Settings::Solve(c) => solve(c, &opts, out, &mut extra)?,
        Settings::PolygonSweep(c) => polygon_sweep(&c.sides.sides(), &c.levels, c.rel_tol, c.min_order, &opts)?,
        Settings::Stability(c) => stability(c, &opts, quiet)?,
        Settings::AnnulusCompare(c) => annulus(c, &opts)?,
        Settings::BoxOsc(c) => box_osc_sweep(c.n, &c.eps, c.exponent_tol)?,
        Settings::RobinIdentity(c) => robin_identity(c, &opts)?,
        Settings::SerrinGap(c) => serrin_gap_report(c.n, &c.eps)?,
    };
    Ok((report, extra))
}

fn closed_form(c: &ClosedFormConfig) -> Result<SweepReport> {
    let sides = c.sides.sides();
    let ball = -c.area * c.area / (16.0 * PI);
    let mut report = SweepReport::new("closed-form", &["N", "E", "T", "T_ball", "T_minus_T_ball"]);
    let mut energies = Vec::with_capacity(sides.len());
    for &n in &sides {
        let p = regular_polygon_energy(n, c.area)?;
        energies.push(p.e);
        report.push_row(vec![n.into(), p.e.into(), p.t.into(), ball.into(), (p.t - ball).into()])?;
    }
    let bad = energies.windows(2).position(|w| w[1] >= w[0]).map(|i| i + 1);
    report.check(
        "strictly_decreasing",
        bad.is_none(),
        bad,
        "E(P_N) strictly decreasing in N",
    );
    report.check_rows("below_ball", "T(P_N) < T(ball of equal area)", |r| {
        r[4].as_f64().is_some_and(|d| d < 0.0)
    });
    report.set_summary("T_ball", ball);
    report.set_provenance("area", c.area)?;
    Ok(report)
}

fn solve(c: &SolveConfig, opts: &SolveOptions, out: &Path, extra: &mut Vec<PathBuf>) -> Result<SweepReport> {
    let mut report = SweepReport::new(
        "solve",
        &[
            "level",
            "nodes",
            "h_max",
            "area",
            "perimeter",
            "T",
            "T_alt",
            "E",
            "lambda",
            "lambda_rel_err",
            "boundary_mean_scaled",
            "residual",
            "iterations",
            "solver",
        ],
    );
    let finest = *c.levels.last().expect("validated");
    for &level in &c.levels {
        let mesh = build_mesh(&c.domain, level)?;
        let sol: Solution<'_> = match c.problem {
            ProblemKind::MeanZero => solve_neumann_mean_zero(&mesh, &c.source, c.beta, opts)?,
            ProblemKind::Robin => solve_robin(&mesh, &c.source, c.beta, opts)?,
            ProblemKind::Dirichlet => solve_dirichlet(&mesh, &c.source, opts)?,
        };
        let lambda_err = sol.lambda.map(|l| {
            let exact = sol.source_integral / sol.perimeter;
            (l - exact).abs() / exact
        });
        let mean_scaled = sol.boundary_mean.abs() / sol.max_abs().max(f64::MIN_POSITIVE);
        report.push_row(vec![
            level.into(),
            mesh.num_vertices().into(),
            mesh.measures().h_max.into(),
            sol.area.into(),
            sol.perimeter.into(),
            sol.energies.t.into(),
            sol.energies.t_alt.into(),
            sol.energies.e.into(),
            sol.lambda.into(),
            lambda_err.into(),
            (c.problem == ProblemKind::MeanZero).then_some(mean_scaled).into(),
            sol.stats.residual.into(),
            sol.stats.iterations.into(),
            sol.stats.solver.to_string().into(),
        ])?;
        if c.dump && level == finest {
            let mesh_path = out.join("mesh.txt");
            write_mesh(&mesh, BufWriter::new(File::create(&mesh_path)?))?;
            let sol_path = out.join("solution.txt");
            write_solution(&sol, "mesh.txt", BufWriter::new(File::create(&sol_path)?))?;
            extra.push(mesh_path);
            extra.push(sol_path);
        }
    }
    if c.problem == ProblemKind::MeanZero {
        let tol = c.lambda_tol;
        report.check_rows(
            "multiplier_exact",
            &format!("|lambda - int f / P_h| / lambda <= {tol:e}"),
            |r| r[9].as_f64().is_some_and(|e| e <= tol),
        );
        let tol = c.mean_tol;
        report.check_rows(
            "boundary_mean_zero",
            &format!("|mean_boundary u| / max|u| <= {tol:e}"),
            |r| r[10].as_f64().is_some_and(|e| e <= tol),
        );
    }
    if let Some(expected) = c.expect_t {
        let last = report.rows().len() - 1;
        let t = report.rows()[last][5].as_f64().unwrap_or(f64::NAN);
        let err = (t - expected).abs() / expected.abs();
        report.set_summary("expected_T", expected);
        report.set_summary("finest_rel_err", err);
        report.check(
            "expected_energy",
            err <= c.rel_tol,
            (err > c.rel_tol).then_some(last),
            format!("|T - {expected}| / |T| <= {:e} at the finest level", c.rel_tol),
        );
    }
    report.set_provenance("domain", &c.domain)?;
    report.set_provenance("problem", c.problem)?;
    report.set_provenance("beta", c.beta)?;
    report.set_provenance("source", &c.source)?;
    report.set_provenance("solver", opts)?;
    Ok(report)
}

fn stability(c: &StabilityConfig, opts: &SolveOptions, quiet: bool) -> Result<SweepReport> {
    let mut report = SweepReport::new(
        "stability",
        &[
            "k",
            "s",
            "level",
            "t0",
            "oracle",
            "estimate",
            "coarse",
            "fine",
            "relative_gap",
            "sign_matches",
        ],
    );
    let paths: Vec<PerturbationPath> = c
        .modes
        .iter()
        .map(|&k| {
            let p = PerturbationPath::new(c.radius, k, c.exponent).with_level(c.level);
            c.t0.map_or(p, |t0| p.with_amplitude(t0))
        })
        .collect();
    for p in &paths {
        p.validate()?;
    }
    let estimates: Vec<_> = paths
        .par_iter()
        .map(|p| fd_second_variation(p, opts))
        .collect::<Result<_>>()?;
    let (rel_tol, zero_tol) = (c.rel_tol, c.zero_tol);
    for (p, est) in paths.iter().zip(&estimates) {
        if !quiet {
            eprintln!("k = {}: estimate {:.6}, oracle {:.6}", p.mode, est.estimate, est.oracle);
        }
        let sign_matches = if est.oracle.abs() <= zero_tol {
            est.estimate.abs() <= zero_tol
        } else {
            est.estimate.signum() == est.oracle.signum()
        };
        report.push_row(vec![
            p.mode.into(),
            p.exponent.into(),
            p.level.into(),
            p.t0.into(),
            est.oracle.into(),
            est.estimate.into(),
            est.coarse.into(),
            est.fine.into(),
            est.relative_gap.into(),
            sign_matches.into(),
        ])?;
    }
    report.check_rows(
        "sign_matches_oracle",
        "sign of the estimate matches the mode oracle",
        |r| r[9] == Cell::Bool(true),
    );
    report.check_rows(
        "oracle_agreement",
        &format!("relative gap <= {rel_tol} (absolute <= {zero_tol} where the oracle vanishes)"),
        |r| {
            let (oracle, est) = (r[4].as_f64().unwrap_or(f64::NAN), r[5].as_f64().unwrap_or(f64::NAN));
            if oracle.abs() <= zero_tol {
                est.abs() <= zero_tol
            } else {
                (est - oracle).abs() <= rel_tol * oracle.abs()
            }
        },
    );
    let profile = RadialProfile::power(c.exponent);
    for &beta in &c.betas {
        let stable = stability_condition(2, c.radius, beta, &profile)?;
        report.set_summary(&format!("stability_condition_beta_{beta}"), stable);
        let min_mode = (1..=8)
            .map(|l| mode_second_variation(2, c.radius, beta, &profile, l))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        report.set_summary(&format!("min_oracle_modes_1_8_beta_{beta}"), min_mode);
    }
    report.set_summary("T_ball", ball_torsion(2, c.radius, &profile)?.t);
    report.set_provenance("radius", c.radius)?;
    report.set_provenance("solver", opts)?;
    Ok(report)
}

fn annulus(c: &AnnulusConfig, opts: &SolveOptions) -> Result<SweepReport> {
    let mut report = annulus_compare(&c.b, c.annulus_level, c.disk_level, c.rel_tol, opts)?;
    let mut first_bad = None;
    for (i, &b) in c.b.iter().enumerate() {
        for &n in &c.dims {
            let gap = annulus_stationarity_gap(n, b)?;
            report.set_summary(&format!("stationarity_gap_n{n}_b{b}"), gap);
            if !(gap > 0.0) && first_bad.is_none() {
                first_bad = Some(i);
            }
        }
    }
    report.check(
        "stationarity_gap_positive",
        first_bad.is_none(),
        first_bad,
        "annulus stationarity gap > 0 for every b and dimension",
    );
    Ok(report)
}

fn robin_identity(c: &RobinIdentityConfig, opts: &SolveOptions) -> Result<SweepReport> {
    let mut report = SweepReport::new(
        "robin-identity",
        &[
            "domain",
            "beta",
            "level",
            "area",
            "perimeter",
            "T_beta",
            "J_beta",
            "correction",
            "identity_residual",
            "trace_mean",
            "trace_expected",
        ],
    );
    let f = RadialProfile::unit();
    for domain in &c.domains {
        let mesh = build_mesh(domain, c.level)?;
        let rows: Vec<_> = c
            .betas
            .par_iter()
            .map(|&beta| {
                let t = solve_neumann_mean_zero(&mesh, &f, beta, opts)?;
                let j = solve_robin(&mesh, &f, beta, opts)?;
                let correction = t.source_integral * t.source_integral / (2.0 * beta * t.perimeter);
                Ok((
                    beta,
                    t.area,
                    t.perimeter,
                    t.energies.t,
                    j.energies.t,
                    correction,
                    j.boundary_mean,
                ))
            })
            .collect::<Result<_>>()?;
        for (beta, area, perimeter, t, j, correction, trace) in rows {
            let expected = match domain {
                DomainSpec::Disk { radius } => Some(radius / (2.0 * beta)),
                _ => None,
            };
            report.push_row(vec![
                domain_label(domain).into(),
                beta.into(),
                c.level.into(),
                area.into(),
                perimeter.into(),
                t.into(),
                j.into(),
                correction.into(),
                (t - j - correction).abs().into(),
                trace.into(),
                expected.into(),
            ])?;
        }
    }
    let tol = c.tol;
    report.check_rows(
        "identity",
        &format!("|T - J - |Omega_h|^2/(2 beta P_h)| <= {tol:e}"),
        |r| r[8].as_f64().is_some_and(|e| e <= tol),
    );
    let trace_tol = c.trace_tol;
    report.check_rows(
        "disk_trace",
        &format!("|mean trace - R/(2 beta)| <= {trace_tol} on disks"),
        |r| match (r[9].as_f64(), r[10].as_f64()) {
            (Some(m), Some(e)) => (m - e).abs() <= trace_tol,
            _ => true,
        },
    );
    report.set_provenance("source", "f = 1")?;
    report.set_provenance("solver", opts)?;
    Ok(report)
}
