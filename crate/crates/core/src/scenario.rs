//! The config-driven pipeline behind `run` and `verify`.

use std::path::{Path, PathBuf};

use crate::config::{AmplitudePolicy, ScenarioConfig};
use crate::darboux::ClosedFormPath;
use crate::error::{Error, Result};
use crate::export::{write_long, write_timeseries, LongRow};
use crate::matrix::{self, CVector};
use crate::models::{
    constraint_amplitude, diagonal_offset, effective_hamiltonian, factorize_field, maxwell_check,
    paper_gauge, polarization, printed_polarization, FieldConfig, FieldFactorization, ModelSolution,
};
use crate::trajectory::Trajectory;
use crate::verify::{
    max_nvne_residual, rk4_integrate, scaling_property_check, shift_property_check,
    solution_suite, TimeGrid, VerificationReport, FD_DELTA,
};

/// Everything computed for one scenario.
pub struct ScenarioRun {
    pub model: ModelSolution,
    pub field: Option<(FieldConfig, Option<FieldFactorization>)>,
    pub report: VerificationReport,
}

fn max_entry(m: &crate::matrix::CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Builds the model and runs every configured check.
pub fn evaluate(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let tol = &cfg.tolerances;
    let grid = cfg.grid;
    let f = model.nonlinearity().clone();
    let h = model.hamiltonian();
    let mut report = VerificationReport::new();

    for w in &model.seed().warnings {
        report.check_with_notes("seed_warning", f64::INFINITY, 0.0, w.clone())?;
    }

    let suite = solution_suite(&model, h.matrix(), &f, &grid, &tol.invariants, tol.residual)?;
    report.merge("solution", suite)?;

    let mut closed = 0.0f64;
    for t in grid.points() {
        let d = model.solution.rho1_closed_form(t)? - model.solution.rho1(t)?;
        closed = closed.max(max_entry(&d));
    }
    report.check("closed_form_vs_sandwich", tol.closed_form, closed)?;

    if let Some(p) = &model.profile {
        let (mut worst, mut envelope) = (0.0f64, 0.0f64);
        for t in grid.points() {
            let (zeta, xi) = model.engine_profile_entries(t)?;
            worst = worst.max((zeta - p.zeta(t)).abs()).max((xi - p.xi(t)).norm());
            let e = p.phase(t).tanh().powi(2) + crate::models::sech(p.phase(t)).powi(2);
            envelope = envelope.max((e - 1.0).abs());
        }
        report.check("profile_vs_engine", tol.profile, worst)?;
        report.check("profile_envelope", tol.profile, envelope)?;
        let ratio = p.amplitude_ratio();
        report.check_with_notes(
            "profile_amplitude_modulus",
            tol.profile,
            (ratio.norm() - 1.0).abs(),
            format!("Z / printed Z has phase {:.6} rad", ratio.arg()),
        )?;
    }

    if f.is_pure_quadratic() {
        let (e1, e2) = paper_gauge(&model.levels);
        let mut gauges = vec![(e1, e2)];
        gauges.extend(cfg.checks.gauges.iter().map(|g| (g[0], g[1])));
        let gauge_traj = |eps1: f64, eps2: f64| -> Result<f64> {
            let mut worst = 0.0f64;
            for t in grid.points() {
                let hm = effective_hamiltonian(&model, &h, &f, eps1, eps2, t)?;
                let r = model.sample(t)?;
                let dot = (model.sample(t + FD_DELTA)? - model.sample(t - FD_DELTA)?)
                    .unscale(2.0 * FD_DELTA);
                let lhs = dot * matrix::c(0.0, 1.0);
                worst = worst.max((lhs - matrix::commutator(hm.matrix(), &r)?).norm());
            }
            Ok(worst)
        };
        for (k, &(a, b)) in gauges.iter().enumerate() {
            report.check_with_notes(
                format!("effective_hamiltonian_gauge_{k}"),
                tol.residual,
                gauge_traj(a, b)?,
                format!("epsilon1 = {a}, epsilon2 = {b}"),
            )?;
        }
        let mut corner = 0.0f64;
        for t in grid.points() {
            let hm = effective_hamiltonian(&model, &h, &f, e1, e2, t)?;
            corner = corner.max(hm.matrix()[(0, 2)].norm());
        }
        report.check_with_notes(
            "effective_hamiltonian_corner",
            1e-12,
            corner,
            format!(
                "diag(h) - (2/3) h_i = {:.6} for the default gauge",
                diagonal_offset(e1, e2)
            ),
        )?;
    }

    let field = match &cfg.field {
        Some(section) => Some(field_checks(cfg, section, &model, &grid, &mut report)?),
        None => None,
    };

    if let Some(rk) = &cfg.checks.rk4 {
        let start = rk.t_start.unwrap_or_else(|| {
            model.solution.switching_midpoint().unwrap_or(0.0) - 0.5 * rk.duration
        });
        let rk_grid = TimeGrid::new(start, start + rk.duration, rk.samples)?;
        let rho0 = model.solution.rho1_density(start)?;
        let traj = rk4_integrate(&rho0, &model.solution.hamiltonian, &f, &rk_grid, rk.step)?;
        let dev = traj.max_deviation(&model.solution)?;
        report.check_with_notes(
            "rk4_vs_closed_form",
            tol.rk4,
            dev,
            format!("step {}, trace drift {:.3e}", rk.step, traj.trace_drift),
        )?;
    }

    if let Some(tau) = cfg.checks.scaling_tau {
        if let Some(k) = cfg.nonlinearity.monomial_power()? {
            let r = scaling_property_check(&model, h.matrix(), k, tau, &grid)?;
            report.merge("scaling", r)?;
        }
    }
    if let Some(s) = cfg.checks.shift {
        let r = shift_property_check(&model, s, &f, h.matrix(), &grid)?;
        report.merge("shift", r)?;
    }

    Ok(ScenarioRun {
        model,
        field,
        report,
    })
}

fn field_checks(
    cfg: &ScenarioConfig,
    section: &crate::config::FieldSection,
    model: &ModelSolution,
    grid: &TimeGrid,
    report: &mut VerificationReport,
) -> Result<(FieldConfig, Option<FieldFactorization>)> {
    let profile = model.profile.as_ref().ok_or_else(|| {
        Error::InvalidParameter(
            "field: needs a switching profile (alpha = 0, f(x) = x^2, gamma1 and gamma3 nonzero)"
                .into(),
        )
    })?;
    let (d1, d2) = paper_gauge(&model.levels);
    let mut fc = FieldConfig {
        ex0: 0.0,
        ey0: 0.0,
        omega: model.transition_frequencies()[0],
        v: section.v,
        c: section.c,
        epsilon1: section.epsilon1.unwrap_or(d1),
        epsilon2: section.epsilon2.unwrap_or(d2),
    };
    match section.amplitude {
        AmplitudePolicy::Solve => {
            let e0 = constraint_amplitude(&fc, profile, &model.levels)?;
            fc.ex0 = e0;
            fc.ey0 = e0;
        }
        AmplitudePolicy::Explicit => {
            fc.ex0 = section.ex0.unwrap_or_default();
            fc.ey0 = section.ey0.unwrap_or_default();
        }
    }
    let mx = maxwell_check(&fc, profile, &model.levels)?;
    report.check("maxwell_constraint", cfg.tolerances.maxwell_constraint, mx.constraint)?;
    report.check("maxwell_pde", cfg.tolerances.maxwell_pde, mx.pde)?;

    let fact = match factorize_field(model, &fc) {
        Ok(fact) => {
            let mut worst = 0.0f64;
            for t in grid.points() {
                let hm = effective_hamiltonian(model, &model.hamiltonian(), model.nonlinearity(), fc.epsilon1, fc.epsilon2, t)?;
                let mut off = hm.into_inner();
                off.set_diagonal(&CVector::zeros(3));
                worst = worst.max((off - fact.interaction(t)).norm());
            }
            let freqs: Vec<String> = fact.carriers.iter().map(|c| format!("{:.6}", c.omega)).collect();
            report.check_with_notes(
                "field_factorization",
                cfg.tolerances.factorization,
                worst,
                format!("carriers [{}]", freqs.join(", ")),
            )?;
            Some(fact)
        }
        Err(Error::Factorization(detail)) => {
            report.check_with_notes("field_factorization", cfg.tolerances.factorization, f64::INFINITY, detail)?;
            None
        }
        Err(e) => return Err(e),
    };
    Ok((fc, fact))
}

/// Files written by [`write_artifacts`].
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub solution_csv: PathBuf,
    pub series_csv: Option<PathBuf>,
    pub report_json: PathBuf,
    pub report_txt: PathBuf,
}

pub fn write_artifacts(cfg: &ScenarioConfig, run: &ScenarioRun, dir: &Path) -> Result<Artifacts> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let solution_csv = dir.join("solution.csv");
    write_timeseries(&run.model, &cfg.grid, &solution_csv)?;

    let series_csv = if cfg.output.series {
        let path = dir.join("series.csv");
        write_long(&series_rows(cfg, run)?, &path)?;
        Some(path)
    } else {
        None
    };

    let report_json = dir.join("report.json");
    let report_txt = dir.join("report.txt");
    let write = |path: &Path, text: String| {
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    write(&report_json, run.report.to_json())?;
    write(&report_txt, run.report.to_string())?;
    Ok(Artifacts {
        solution_csv,
        series_csv,
        report_json,
        report_txt,
    })
}

/// zeta, |xi|, E_x, P_x (trace with d_x), P_x from the closed form; first carrier only.
fn series_rows(cfg: &ScenarioConfig, run: &ScenarioRun) -> Result<Vec<LongRow>> {
    let mut rows = Vec::new();
    let Some(p) = &run.model.profile else {
        return Ok(rows);
    };
    for t in cfg.grid.points() {
        rows.push(LongRow { t, series: "zeta", value: p.zeta(t) });
        rows.push(LongRow { t, series: "abs_xi", value: p.xi(t).norm() });
        if let Some((fc, Some(fact))) = &run.field {
            let carrier = &fact.carriers[0];
            rows.push(LongRow { t, series: "E_x", value: fact.field(0, t)[0] });
            let (px, _) = polarization(&run.model, &carrier.dx, &carrier.dy, t)?;
            rows.push(LongRow { t, series: "P_x", value: px.re });
            let (printed, _) = printed_polarization(p, &run.model.levels, fc.omega, t);
            rows.push(LongRow { t, series: "P_x_closed_form", value: printed });
        }
    }
    Ok(rows)
}

/// NvNE residual of the closed-form path on the scenario grid, for diagnostics.
pub fn closed_form_residual(run: &ScenarioRun, grid: &TimeGrid) -> Result<f64> {
    let sol = &run.model.solution;
    max_nvne_residual(&ClosedFormPath(sol), sol.hamiltonian.matrix(), sol.nonlinearity(), grid, FD_DELTA)
}
