//! Numerical oracles: an RK4 integrator of i rho' = [H, f(rho)], central-difference
//! residuals, invariant sweeps, and the scaling and shifting properties.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, c, hermiticity_defect, CMatrix, DensityMatrix, HermitianMatrix};
use crate::nonlinearity::Nonlinearity;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        let grid = Self {
            t_start,
            t_end,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid of `n_points` centred on `centre` with the given half width.
    pub fn centred(centre: f64, half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(centre - half_width, centre + half_width, n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start >= self.t_end {
            return Err(Error::InvalidGrid(format!(
                "need t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.t_end
        } else {
            self.t_start + k as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|k| self.point(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub tolerance: f64,
    pub measured: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `measured <= tolerance`. NaN never passes.
    pub fn check(&mut self, name: impl Into<String>, tolerance: f64, measured: f64) -> Result<()> {
        self.check_with_notes(name, tolerance, measured, String::new())
    }

    pub fn check_with_notes(
        &mut self,
        name: impl Into<String>,
        tolerance: f64,
        measured: f64,
        notes: impl Into<String>,
    ) -> Result<()> {
        self.push(CheckRecord {
            name: name.into(),
            tolerance,
            measured,
            passed: measured <= tolerance,
            notes: notes.into(),
        })
    }

    pub fn push(&mut self, record: CheckRecord) -> Result<()> {
        if self.get(&record.name).is_some() {
            return Err(Error::DuplicateCheck(record.name));
        }
        self.checks.push(record);
        Ok(())
    }

    /// Appends every check of `other` under `prefix/`.
    pub fn merge(&mut self, prefix: &str, other: VerificationReport) -> Result<()> {
        for mut r in other.checks {
            r.name = format!("{prefix}/{}", r.name);
            self.push(r)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|r| r.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|r| !r.passed)
    }

    pub fn names_unique(&self) -> bool {
        let set: BTreeSet<&str> = self.checks.iter().map(|r| r.name.as_str()).collect();
        set.len() == self.checks.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.checks {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            write!(
                f,
                "{verdict}  {:<40} measured {:.3e}  tolerance {:.1e}",
                r.name, r.measured, r.tolerance
            )?;
            if !r.notes.is_empty() {
                write!(f, "  ({})", r.notes)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// -i [H, f(rho)].
pub fn nvne_rhs(h: &CMatrix, f: &Nonlinearity, rho: &CMatrix) -> CMatrix {
    let fr = f.apply_matrix(rho);
    (h * &fr - &fr * h) * c(0.0, -1.0)
}

/// RK4 output sampled on the grid.
#[derive(Debug, Clone)]
pub struct RkTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    /// max |Tr rho - Tr rho(0)| over the samples.
    pub trace_drift: f64,
}

/// Classic RK4 for i rho' = [H, f(rho)], re-Hermitized after each step. The trace is
/// left alone so that its drift measures the integrator.
pub fn rk4_integrate(
    rho_start: &DensityMatrix,
    h: &HermitianMatrix,
    f: &Nonlinearity,
    grid: &TimeGrid,
    step: f64,
) -> Result<RkTrajectory> {
    grid.validate()?;
    if h.dim() != rho_start.dim() {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: rho_start.dim(),
        });
    }
    let spacing = grid.spacing();
    if !(step > 0.0) || step > spacing * (1.0 + 1e-12) {
        return Err(Error::StepSize(format!(
            "step {step} must be positive and not exceed the grid spacing {spacing}"
        )));
    }
    let substeps = (spacing / step).round().max(1.0) as usize;
    let dt = spacing / substeps as f64;
    if (dt - step).abs() > 1e-9 * step {
        return Err(Error::StepSize(format!(
            "grid spacing {spacing} is not a whole multiple of step {step}"
        )));
    }
    let hm = h.matrix();
    let rate = nvne_rhs(hm, f, rho_start.matrix()).norm();
    if rate * step >= 0.1 {
        return Err(Error::StepSize(format!(
            "||[H, f(rho)]|| * step = {:e} must be below 0.1",
            rate * step
        )));
    }

    let mut rho = rho_start.matrix().clone();
    let tr0 = rho.trace();
    let mut times = Vec::with_capacity(grid.n_points);
    let mut states = Vec::with_capacity(grid.n_points);
    let mut trace_drift = 0.0f64;
    times.push(grid.t_start);
    states.push(rho.clone());
    for k in 1..grid.n_points {
        for _ in 0..substeps {
            let k1 = nvne_rhs(hm, f, &rho);
            let k2 = nvne_rhs(hm, f, &(&rho + &k1 * c(0.5 * dt, 0.0)));
            let k3 = nvne_rhs(hm, f, &(&rho + &k2 * c(0.5 * dt, 0.0)));
            let k4 = nvne_rhs(hm, f, &(&rho + &k3 * c(dt, 0.0)));
            rho += (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
            rho = matrix::hermitian_part(&rho);
        }
        if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        trace_drift = trace_drift.max((rho.trace() - tr0).norm());
        times.push(grid.point(k));
        states.push(rho.clone());
    }
    Ok(RkTrajectory {
        times,
        states,
        trace_drift,
    })
}

impl RkTrajectory {
    /// max_k ||states[k] - other(times[k])||_F.
    pub fn max_deviation(&self, other: &impl Trajectory) -> Result<f64> {
        let mut worst = 0.0f64;
        for (t, s) in self.times.iter().zip(&self.states) {
            worst = worst.max((s - other.sample(*t)?).norm());
        }
        Ok(worst)
    }
}

/// ||i (rho(t + d) - rho(t - d)) / (2 d) - [H, f(rho(t))]||_F.
pub fn nvne_residual_fd(
    rho: &impl Trajectory,
    h: &CMatrix,
    f: &Nonlinearity,
    t: f64,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let dot = (rho.sample(t + delta)? - rho.sample(t - delta)?).unscale(2.0 * delta);
    let fr = f.apply_matrix(&rho.sample(t)?);
    let comm = matrix::commutator(h, &fr)?;
    Ok((dot * c(0.0, 1.0) - comm).norm())
}

/// Largest residual over the grid, evaluated on scoped threads.
pub fn max_nvne_residual(
    rho: &impl Trajectory,
    h: &CMatrix,
    f: &Nonlinearity,
    grid: &TimeGrid,
    delta: f64,
) -> Result<f64> {
    let points: Vec<f64> = grid.points().collect();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .clamp(1, 8);
    let chunk = points.len().div_ceil(workers);
    let partial: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|ts| {
                s.spawn(move || {
                    ts.iter().try_fold(0.0f64, |m, &t| {
                        Ok(m.max(nvne_residual_fd(rho, h, f, t, delta)?))
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("residual worker panicked"))
            .collect()
    });
    partial
        .into_iter()
        .try_fold(0.0f64, |m, r| Ok(m.max(r?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantTolerances {
    pub trace: f64,
    pub hermiticity: f64,
    pub positivity: f64,
    pub spectrum: f64,
    pub purity: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self {
            trace: 1e-12,
            hermiticity: 1e-12,
            positivity: 1e-12,
            spectrum: 1e-10,
            purity: 1e-10,
        }
    }
}

/// Density-matrix invariants over a grid: trace, hermiticity, positivity, spectral
/// drift and Tr rho^2 drift relative to the first grid point.
pub fn invariant_suite(
    rho: &impl Trajectory,
    grid: &TimeGrid,
    tol: &InvariantTolerances,
) -> Result<VerificationReport> {
    grid.validate()?;
    let first = rho.sample(grid.t_start)?;
    let ev0 = matrix::eigenvalues(&matrix::hermitian_part(&first));
    let purity0 = (&first * &first).trace().re;
    let (mut trace, mut herm, mut neg, mut spec, mut purity) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in grid.points() {
        let m = rho.sample(t)?;
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        trace = trace.max((m.trace() - c(1.0, 0.0)).norm());
        herm = herm.max(hermiticity_defect(&m));
        let ev = matrix::eigenvalues(&matrix::hermitian_part(&m));
        neg = neg.max(-ev[0]);
        for (a, b) in ev.iter().zip(&ev0) {
            spec = spec.max((a - b).abs());
        }
        purity = purity.max(((&m * &m).trace().re - purity0).abs());
    }
    let mut report = VerificationReport::new();
    report.check("trace", tol.trace, trace)?;
    report.check("hermiticity", tol.hermiticity, herm)?;
    report.check("positivity", tol.positivity, neg.max(0.0))?;
    report.check("spectrum_drift", tol.spectrum, spec)?;
    report.check("purity_drift", tol.purity, purity)?;
    Ok(report)
}

/// Invariants plus the NvNE residual on one grid.
pub fn solution_suite(
    rho: &impl Trajectory,
    h: &CMatrix,
    f: &Nonlinearity,
    grid: &TimeGrid,
    tol: &InvariantTolerances,
    residual_tol: f64,
) -> Result<VerificationReport> {
    let mut report = invariant_suite(rho, grid, tol)?;
    let residual = max_nvne_residual(rho, h, f, grid, FD_DELTA)?;
    report.check("nvne_residual", residual_tol, residual)?;
    Ok(report)
}

/// Central-difference step used throughout.
pub const FD_DELTA: f64 = 1e-5;
pub const RESIDUAL_TOL: f64 = 1e-6;

/// scale * rho(speed * t) + shift * I.
pub struct Affine<T> {
    pub inner: T,
    pub scale: f64,
    pub speed: f64,
    pub shift: f64,
}

impl<T: Trajectory> Trajectory for Affine<T> {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        let m = self.inner.sample(self.speed * t)?.scale(self.scale);
        let n = m.nrows();
        Ok(m + CMatrix::identity(n, n).scale(self.shift))
    }
}

/// tau rho(tau^(k-1) t): solves the equation for f(x) = x^k whenever rho does.
pub fn predensity<T: Trajectory>(rho: T, k: u32, tau: f64) -> Affine<T> {
    Affine {
        inner: rho,
        scale: tau,
        speed: tau.powi(k as i32 - 1),
        shift: 0.0,
    }
}

/// sigma(t / tau^(k-1)) / tau for a predensity sigma with constant trace tau.
pub fn normalized<T: Trajectory>(sigma: T, k: u32, tau: f64) -> Affine<T> {
    Affine {
        inner: sigma,
        scale: 1.0 / tau,
        speed: tau.powi(1 - k as i32),
        shift: 0.0,
    }
}

/// Scales a solution of i rho' = [H, rho^k] to trace `tau`, checks the residual of
/// the predensity, then of its renormalised and retimed version.
pub fn scaling_property_check(
    rho: &impl Trajectory,
    h: &CMatrix,
    k: u32,
    tau: f64,
    grid: &TimeGrid,
) -> Result<VerificationReport> {
    if k == 0 || tau <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scaling needs k >= 1 and tau > 0, got k = {k}, tau = {tau}"
        )));
    }
    let f = Nonlinearity::power(k);
    let sigma = predensity(rho, k, tau);
    let trace = sigma.sample(grid.t_start)?.trace().re;
    let back = normalized(&sigma, k, trace);
    let mut report = VerificationReport::new();
    let r_sigma = max_nvne_residual(&sigma, h, &f, grid, FD_DELTA)?;
    report.check_with_notes(
        format!("scaling_predensity_k{k}"),
        RESIDUAL_TOL,
        r_sigma,
        format!("trace {trace}"),
    )?;
    let r_back = max_nvne_residual(&back, h, &f, grid, FD_DELTA)?;
    report.check(format!("scaling_normalized_k{k}"), RESIDUAL_TOL, r_back)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftOutcome {
    /// Residual of rho + sI under g(x) = f(x + s).
    pub plus: f64,
    /// Residual of rho + sI under g(x) = f(x - s).
    pub minus: f64,
}

impl ShiftOutcome {
    pub fn passing(&self, tol: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.plus <= tol {
            out.push("f(x+s)");
        }
        if self.minus <= tol {
            out.push("f(x-s)");
        }
        out
    }
}

pub fn shift_outcome(
    rho: &impl Trajectory,
    s: f64,
    f: &Nonlinearity,
    h: &CMatrix,
    grid: &TimeGrid,
) -> Result<ShiftOutcome> {
    let shifted = Affine {
        inner: rho,
        scale: 1.0,
        speed: 1.0,
        shift: s,
    };
    let plus = max_nvne_residual(&shifted, h, &f.shifted(s), grid, FD_DELTA)?;
    let minus = max_nvne_residual(&shifted, h, &f.shifted(-s), grid, FD_DELTA)?;
    Ok(ShiftOutcome { plus, minus })
}

/// rho(t) + sI tested against both g(x) = f(x + s) and g(x) = f(x - s). Passes when
/// at least one reading holds; the notes name which.
pub fn shift_property_check(
    rho: &impl Trajectory,
    s: f64,
    f: &Nonlinearity,
    h: &CMatrix,
    grid: &TimeGrid,
) -> Result<VerificationReport> {
    let out = shift_outcome(rho, s, f, h, grid)?;
    let passing = out.passing(RESIDUAL_TOL);
    let notes = format!(
        "f(x+s) residual {:.3e}, f(x-s) residual {:.3e}; passing: {}",
        out.plus,
        out.minus,
        if passing.is_empty() { "none".to_string() } else { passing.join(", ") }
    );
    let mut report = VerificationReport::new();
    report.check_with_notes("shift_property", RESIDUAL_TOL, out.plus.min(out.minus), notes)?;
    Ok(report)
}

/// How a mutation touches the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Only entry (i, j).
    Single,
    /// Entry (i, j) and its Hermitian partner, keeping the matrix Hermitian.
    Hermitian,
}

/// A trajectory with a constant perturbation of one entry.
pub struct Perturbed<T> {
    pub inner: T,
    pub row: usize,
    pub col: usize,
    pub delta: f64,
    pub mode: Mutation,
}

impl<T: Trajectory> Trajectory for Perturbed<T> {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        let mut m = self.inner.sample(t)?;
        m[(self.row, self.col)] += c(self.delta, 0.0);
        if self.mode == Mutation::Hermitian && self.row != self.col {
            m[(self.col, self.row)] += c(self.delta, 0.0);
        }
        Ok(m)
    }
}

/// Runs `suite` on every single-entry perturbation of the upper triangle (both modes)
/// and returns the number of mutants the suite failed to flag.
pub fn mutation_survivors<T, S>(rho: &T, n: usize, delta: f64, suite: S) -> Result<usize>
where
    T: Trajectory,
    S: Fn(&dyn Trajectory) -> Result<VerificationReport>,
{
    let mut survivors = 0;
    for mode in [Mutation::Single, Mutation::Hermitian] {
        for row in 0..n {
            for col in row..n {
                let mutant = Perturbed {
                    inner: rho,
                    row,
                    col,
                    delta,
                    mode,
                };
                if suite(&mutant)?.all_passed() {
                    survivors += 1;
                }
            }
        }
    }
    Ok(survivors)
}
