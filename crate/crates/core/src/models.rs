//! The harmonic-oscillator and hydrogen-like three-level models: switching
//! profiles, the effective Hamiltonian h = H_o + V, the extracted field and
//! dipoles, and the steady-state Maxwell check.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::darboux::DarbouxSolution;
use crate::error::{Error, Result};
use crate::matrix::{self, c, real, validate_density, CMatrix, DensityMatrix, HermitianMatrix, C64};
use crate::nonlinearity::Nonlinearity;
use crate::seed::{
    build_equispaced_seed, build_inhomogeneous_seed, hydrogen_levels, SeedSolution,
};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileModel {
    HarmonicOscillator,
    Hydrogen { n: u32 },
}

/// d(n) = 4 (2n + 1) (n + 1)^3.
pub fn hydrogen_d(n: u32) -> f64 {
    let n = n as f64;
    4.0 * (2.0 * n + 1.0) * (n + 1.0).powi(3)
}

/// e(n) = (2n + 1)(n + 2) + i n sqrt((2n + 3)(2n + 1)); |e(n)|^2 = d(n).
pub fn hydrogen_e(n: u32) -> C64 {
    let n = n as f64;
    c(
        (2.0 * n + 1.0) * (n + 2.0),
        n * ((2.0 * n + 3.0) * (2.0 * n + 1.0)).sqrt(),
    )
}

/// Norm of the block Lax vector that makes the offset ln(|D| / sqrt(2 d(n))).
pub fn hydrogen_lax_norm(n: u32) -> f64 {
    (2.0 * hydrogen_d(n)).sqrt()
}

/// zeta(t) = rho_mag tanh(theta t + vartheta), xi(t) = Z sech(theta t + vartheta).
///
/// zeta is the shift of <omega_1|rho_int|omega_1> from its centre value and xi is
/// <omega_1|rho_int|e_3>, both in the construction basis.
#[derive(Debug, Clone, Serialize)]
pub struct SolitonProfile {
    pub model: ProfileModel,
    pub theta: f64,
    pub vartheta: f64,
    pub z: C64,
    pub rho_mag: f64,
    pub d: C64,
    /// Mean of the two block eigenvalues.
    pub centre: f64,
}

impl SolitonProfile {
    /// Built from the seed geometry (eigenvectors and Lax data), for alpha = 0 and f(x) = x^2.
    pub fn from_seed(
        model: ProfileModel,
        seed: &SeedSolution,
        gamma1: C64,
        gamma3: C64,
    ) -> Result<Self> {
        if gamma1 == real(0.0) || gamma3 == real(0.0) {
            return Err(Error::ConstantSolution);
        }
        let beta = seed.mu.im;
        if beta == 0.0 {
            return Err(Error::TrivialDarboux);
        }
        if seed.mu.re != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "switching profile needs alpha = 0, got {}",
                seed.mu.re
            )));
        }
        let [l1, l2, _] = seed.lambdas;
        let rho_mag = 0.5 * (l1 - l2);
        let d = gamma3.conj() * gamma1 / gamma1.norm_sqr();
        let overlap = seed.omegas[0].dotc(&seed.block_vector);
        let z = -(d / d.norm()) * (overlap / overlap.norm()) * (rho_mag / SQRT_2);
        Ok(Self {
            model,
            theta: rho_mag * rho_mag / beta,
            vartheta: (d.norm() / seed.lax_norm).ln(),
            z,
            rho_mag,
            d,
            centre: 0.5 * (l1 + l2),
        })
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.theta * t + self.vartheta
    }

    pub fn zeta(&self, t: f64) -> f64 {
        self.rho_mag * self.phase(t).tanh()
    }

    pub fn xi(&self, t: f64) -> C64 {
        self.z * sech(self.phase(t))
    }

    /// t* = -vartheta / theta, where zeta = 0 and |xi| = |Z|.
    pub fn midpoint(&self) -> f64 {
        -self.vartheta / self.theta
    }

    /// Amplitude in the normal form printed alongside the profile:
    /// -D rho_mag / (sqrt(2)|D|) for HO and -D e(n) rho_mag / (sqrt(2 d(n))|D|) for HA.
    pub fn printed_amplitude(&self) -> C64 {
        let unit = self.d / self.d.norm();
        match self.model {
            ProfileModel::HarmonicOscillator => -unit * (self.rho_mag / SQRT_2),
            ProfileModel::Hydrogen { n } => {
                -unit * hydrogen_e(n) * (self.rho_mag / (2.0 * hydrogen_d(n)).sqrt())
            }
        }
    }

    /// Z divided by the printed amplitude: a unit phase when the two differ only by phase.
    pub fn amplitude_ratio(&self) -> C64 {
        self.z / self.printed_amplitude()
    }
}

pub fn sech(x: f64) -> f64 {
    // 1 / cosh overflows to 0 gracefully
    1.0 / x.cosh()
}

/// Equispaced-spectrum profile with alpha = 0.
pub fn ho_profile(b: f64, beta: f64, gamma1: C64, gamma3: C64) -> Result<SolitonProfile> {
    if beta == 0.0 {
        return Err(Error::TrivialDarboux);
    }
    let seed = build_equispaced_seed(b, 0.0, beta)?;
    SolitonProfile::from_seed(ProfileModel::HarmonicOscillator, &seed, gamma1, gamma3)
}

/// Hydrogen-like profile for levels n, n+1, n+2 with rho3 = 1/3, which forces alpha = 0.
pub fn ha_profile(n: u32, b: f64, beta: f64, gamma1: C64, gamma3: C64) -> Result<SolitonProfile> {
    if beta == 0.0 {
        return Err(Error::TrivialDarboux);
    }
    let seed = hydrogen_seed(n, b, beta)?;
    SolitonProfile::from_seed(ProfileModel::Hydrogen { n }, &seed, gamma1, gamma3)
}

fn hydrogen_seed(n: u32, b: f64, beta: f64) -> Result<SeedSolution> {
    let [h1, h2, h3] = hydrogen_levels(n, b)?;
    Ok(build_inhomogeneous_seed(h1, h2, h3, beta, 1.0 / 3.0)?.with_lax_norm(hydrogen_lax_norm(n)))
}

/// The 3x3 matrix in the ascending-level basis written in terms of the profile:
/// diagonal 1/3, (1,2) = sqrt(2) Re xi, (1,3) = zeta, (2,3) = -i sqrt(2) Im xi.
pub fn rho_spectral_basis(profile: &SolitonProfile, t: f64) -> Result<DensityMatrix> {
    let third = real(1.0 / 3.0);
    let zeta = real(profile.zeta(t));
    let xi = profile.xi(t);
    let a = real(SQRT_2 * xi.re);
    let b = c(0.0, -SQRT_2 * xi.im);
    let m = matrix::from_rows(&[
        &[third, a, zeta],
        &[a, third, b],
        &[zeta, b.conj(), third],
    ]);
    validate_density(&m)
}

/// Indices sorting `levels` ascending; `perm[k]` is the construction index of level k.
pub fn ascending_permutation(levels: &[f64; 3]) -> [usize; 3] {
    let mut perm = [0, 1, 2];
    perm.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    perm
}

/// Matrix in the permuted basis: out[(k, l)] = m[(perm[k], perm[l])].
pub fn permute(m: &CMatrix, perm: &[usize; 3]) -> CMatrix {
    CMatrix::from_fn(3, 3, |k, l| m[(perm[k], perm[l])])
}

/// A Darboux solution of one of the worked models, also expressed in the basis of
/// ascending physical levels.
#[derive(Debug, Clone)]
pub struct ModelSolution {
    pub solution: DarbouxSolution,
    /// Present for alpha = 0 and a pure quadratic nonlinearity.
    pub profile: Option<SolitonProfile>,
    pub permutation: [usize; 3],
    /// Physical levels in ascending order.
    pub levels: [f64; 3],
}

impl ModelSolution {
    pub fn new(
        seed: SeedSolution,
        f: Nonlinearity,
        gamma1: C64,
        gamma3: C64,
        model: Option<ProfileModel>,
    ) -> Result<Self> {
        let working = seed.hamiltonian.working();
        let permutation = ascending_permutation(&working);
        let levels = permutation.map(|k| working[k]);
        let profile = match model {
            Some(m) if f.is_pure_quadratic() && seed.mu.re == 0.0 && gamma1 != real(0.0) => {
                match SolitonProfile::from_seed(m, &seed, gamma1, gamma3) {
                    Ok(p) => Some(p),
                    Err(Error::ConstantSolution) => None,
                    Err(e) => return Err(e),
                }
            }
            _ => None,
        };
        Ok(Self {
            solution: DarbouxSolution::new(seed, f, gamma1, gamma3)?,
            profile,
            permutation,
            levels,
        })
    }

    pub fn harmonic_oscillator(b: f64, beta: f64, gamma1: C64, gamma3: C64, f: Nonlinearity) -> Result<Self> {
        let seed = build_equispaced_seed(b, 0.0, beta)?;
        Self::new(seed, f, gamma1, gamma3, Some(ProfileModel::HarmonicOscillator))
    }

    pub fn hydrogen(n: u32, b: f64, beta: f64, gamma1: C64, gamma3: C64, f: Nonlinearity) -> Result<Self> {
        let seed = hydrogen_seed(n, b, beta)?;
        Self::new(seed, f, gamma1, gamma3, Some(ProfileModel::Hydrogen { n }))
    }

    pub fn seed(&self) -> &SeedSolution {
        self.solution.seed()
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        self.solution.nonlinearity()
    }

    /// H in the ascending basis.
    pub fn hamiltonian(&self) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&self.levels)
    }

    pub fn renumber(&self, m: &CMatrix) -> CMatrix {
        permute(m, &self.permutation)
    }

    pub fn rho_int(&self, t: f64) -> Result<CMatrix> {
        Ok(self.renumber(&self.solution.rho_int(t)?))
    }

    pub fn rho1(&self, t: f64) -> Result<CMatrix> {
        Ok(self.renumber(&self.solution.rho1(t)?))
    }

    /// (zeta, xi) read off the engine's rho_int in the construction basis.
    pub fn engine_profile_entries(&self, t: f64) -> Result<(f64, C64)> {
        let seed = self.seed();
        let m = self.solution.rho_int(t)?;
        let w1 = &seed.omegas[0];
        let centre = 0.5 * (seed.lambdas[0] + seed.lambdas[1]);
        let zeta = w1.dotc(&(&m * w1)).re - centre;
        let xi = w1.dotc(&(&m * &seed.omegas[2]));
        Ok((zeta, xi))
    }

    /// Carrier frequencies of the (1,2) and (2,3) entries of rho[1] in the ascending basis.
    pub fn transition_frequencies(&self) -> [f64; 2] {
        let a = self.solution.alpha_lambda();
        let l = self.levels;
        [a * (l[1] - l[0]), a * (l[2] - l[1])]
    }
}

impl Trajectory for ModelSolution {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        self.rho1(t)
    }
}

/// epsilon_1 = -(h1 + h3)/2 and epsilon_2 = 3 (h1 + h3)/4 for ascending levels.
pub fn paper_gauge(levels: &[f64; 3]) -> (f64, f64) {
    let s = levels[0] + levels[2];
    (-0.5 * s, 0.75 * s)
}

/// h = (H + eps1) rho + rho (H + eps1) + eps2, with i rho' = [h, rho] for f(x) = x^2.
pub fn effective_hamiltonian(
    rho: &impl Trajectory,
    h: &HermitianMatrix,
    f: &Nonlinearity,
    eps1: f64,
    eps2: f64,
    t: f64,
) -> Result<HermitianMatrix> {
    if !f.is_pure_quadratic() {
        return Err(Error::UnsupportedNonlinearity(f.to_string()));
    }
    let r = rho.sample(t)?;
    let n = r.nrows();
    if h.dim() != n {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: n,
        });
    }
    let id = CMatrix::identity(n, n);
    let shifted = h.matrix() + id.scale(eps1);
    HermitianMatrix::from_nearly_hermitian(&shifted * &r + &r * &shifted + id.scale(eps2))
}

/// Constant offset of diag(h) from (2/3) h_i when rho has diagonal 1/3: 2 eps1 / 3 + eps2.
pub fn diagonal_offset(eps1: f64, eps2: f64) -> f64 {
    2.0 * eps1 / 3.0 + eps2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldConfig {
    pub ex0: f64,
    pub ey0: f64,
    pub omega: f64,
    pub v: f64,
    pub c: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v > 0.0 && self.v < self.c && self.c.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "need 0 < v < c, got v = {}, c = {}",
                self.v, self.c
            )));
        }
        Ok(())
    }

    /// (c/v)^2 - 1.
    pub fn kappa(&self) -> Result<f64> {
        self.validate()?;
        let k = (self.c / self.v).powi(2) - 1.0;
        if k < 1e-12 {
            return Err(Error::DegenerateVelocity(k));
        }
        Ok(k)
    }

    /// Field configuration for `sol` with the paper's gauge, the first carrier
    /// frequency, and both amplitudes solved from the Maxwell constraint.
    pub fn solved(sol: &ModelSolution, v: f64, c: f64) -> Result<Self> {
        let profile = sol.profile.as_ref().ok_or_else(|| {
            Error::InvalidParameter("field extraction needs a switching profile".into())
        })?;
        let (epsilon1, epsilon2) = paper_gauge(&sol.levels);
        let mut cfg = Self {
            ex0: 0.0,
            ey0: 0.0,
            omega: sol.transition_frequencies()[0],
            v,
            c,
            epsilon1,
            epsilon2,
        };
        let e0 = constraint_amplitude(&cfg, profile, &sol.levels)?;
        cfg.ex0 = e0;
        cfg.ey0 = e0;
        Ok(cfg)
    }
}

/// (h2 - h3) Re(Z)^2 + (h2 - h1) Im(Z)^2.
pub fn polarization_bracket(profile: &SolitonProfile, levels: &[f64; 3]) -> f64 {
    let [h1, h2, h3] = *levels;
    (h2 - h3) * profile.z.re.powi(2) + (h2 - h1) * profile.z.im.powi(2)
}

/// E_o(0) satisfying 16 pi [bracket] = ((c/v)^2 - 1) E_o(0).
pub fn constraint_amplitude(cfg: &FieldConfig, profile: &SolitonProfile, levels: &[f64; 3]) -> Result<f64> {
    Ok(16.0 * PI * polarization_bracket(profile, levels) / cfg.kappa()?)
}

/// One carrier of the extracted field with its constant dipole operators.
#[derive(Debug, Clone)]
pub struct Carrier {
    pub omega: f64,
    /// Ascending-basis transitions (k, k+1) driven by this carrier.
    pub transitions: Vec<usize>,
    pub dx: HermitianMatrix,
    pub dy: HermitianMatrix,
}

/// V(t) = -sum over carriers of d . E with
/// E = (Ex0 sech(theta t + vartheta) cos(omega t), Ey0 sech(theta t + vartheta) sin(omega t), 0).
#[derive(Debug, Clone)]
pub struct FieldFactorization {
    pub carriers: Vec<Carrier>,
    pub ex0: f64,
    pub ey0: f64,
    pub theta: f64,
    pub vartheta: f64,
}

impl FieldFactorization {
    pub fn field(&self, carrier: usize, t: f64) -> [f64; 3] {
        let env = sech(self.theta * t + self.vartheta);
        let w = self.carriers[carrier].omega * t;
        [self.ex0 * env * w.cos(), self.ey0 * env * w.sin(), 0.0]
    }

    /// -sum d . E.
    pub fn interaction(&self, t: f64) -> CMatrix {
        (0..self.carriers.len()).fold(CMatrix::zeros(3, 3), |acc, k| {
            let [ex, ey, _] = self.field(k, t);
            let c = &self.carriers[k];
            acc - c.dx.matrix().scale(ex) - c.dy.matrix().scale(ey)
        })
    }

    pub fn is_single_carrier(&self) -> bool {
        self.carriers.len() == 1
    }
}

/// Frequencies closer than this are treated as one carrier.
const CARRIER_TOL: f64 = 1e-12;

/// Writes the off-diagonal part of h as -d . E.
///
/// The (1,2) and (2,3) entries of h are A sech(theta t + vartheta) exp(i omega t) with
/// constant A; each is matched by constant dipoles d_x = -A/Ex0, d_y = -iA/Ey0.
/// Transitions are grouped by frequency, so unequal spacings give two carriers.
pub fn factorize_field(sol: &ModelSolution, cfg: &FieldConfig) -> Result<FieldFactorization> {
    cfg.validate()?;
    let profile = sol.profile.as_ref().ok_or_else(|| {
        Error::Factorization("no sech envelope: the solution has no switching profile".into())
    })?;
    if cfg.ex0 == 0.0 || cfg.ey0 == 0.0 {
        return Err(Error::Factorization("field amplitudes must be nonzero".into()));
    }
    let t_mid = profile.midpoint();
    let h = effective_hamiltonian(
        sol,
        &sol.hamiltonian(),
        sol.nonlinearity(),
        cfg.epsilon1,
        cfg.epsilon2,
        t_mid,
    )?;
    let corner = h.matrix()[(0, 2)].norm();
    if corner > 1e-12 * h.matrix().norm().max(1.0) {
        return Err(Error::Factorization(format!(
            "(1,3) entry of h is {corner:e}; epsilon1 must be -(h1 + h3)/2"
        )));
    }
    let freqs = sol.transition_frequencies();
    let mut carriers: Vec<Carrier> = Vec::new();
    for (k, &omega) in freqs.iter().enumerate() {
        // sech = 1 at the midpoint
        let amp = h.matrix()[(k, k + 1)] * c(0.0, -omega * t_mid).exp();
        let mut dx = CMatrix::zeros(3, 3);
        let mut dy = CMatrix::zeros(3, 3);
        dx[(k, k + 1)] = -amp / cfg.ex0;
        dx[(k + 1, k)] = dx[(k, k + 1)].conj();
        dy[(k, k + 1)] = c(0.0, -1.0) * amp / cfg.ey0;
        dy[(k + 1, k)] = dy[(k, k + 1)].conj();
        match carriers
            .iter_mut()
            .find(|c| (c.omega - omega).abs() <= CARRIER_TOL * omega.abs().max(1.0))
        {
            Some(existing) => {
                let dx = existing.dx.matrix() + dx;
                let dy = existing.dy.matrix() + dy;
                existing.dx = HermitianMatrix::new(dx)?;
                existing.dy = HermitianMatrix::new(dy)?;
                existing.transitions.push(k);
            }
            None => carriers.push(Carrier {
                omega,
                transitions: vec![k],
                dx: HermitianMatrix::new(dx)?,
                dy: HermitianMatrix::new(dy)?,
            }),
        }
    }
    Ok(FieldFactorization {
        carriers,
        ex0: cfg.ex0,
        ey0: cfg.ey0,
        theta: profile.theta,
        vartheta: profile.vartheta,
    })
}

/// Single-carrier field and dipoles at time t; fails when the spacings need two
/// carriers or `cfg.omega` does not match the level spacing.
pub fn field_and_dipoles(
    sol: &ModelSolution,
    cfg: &FieldConfig,
    t: f64,
) -> Result<([f64; 3], HermitianMatrix, HermitianMatrix)> {
    let fact = factorize_field(sol, cfg)?;
    if !fact.is_single_carrier() {
        let freqs: Vec<f64> = fact.carriers.iter().map(|c| c.omega).collect();
        return Err(Error::Factorization(format!(
            "unequal spacings need carriers {freqs:?}; a single omega cannot reproduce V"
        )));
    }
    let carrier = &fact.carriers[0];
    if (carrier.omega - cfg.omega).abs() > CARRIER_TOL * cfg.omega.abs().max(1.0) {
        return Err(Error::Factorization(format!(
            "omega = {} does not match alpha(lambda) times the level spacing, {}",
            cfg.omega, carrier.omega
        )));
    }
    Ok((fact.field(0, t), carrier.dx.clone(), carrier.dy.clone()))
}

/// (Tr(rho d_x), Tr(rho d_y)); the imaginary parts are returned as well so callers can
/// confirm they vanish.
pub fn polarization(
    rho: &impl Trajectory,
    dx: &HermitianMatrix,
    dy: &HermitianMatrix,
    t: f64,
) -> Result<(C64, C64)> {
    let r = rho.sample(t)?;
    Ok(((&r * dx.matrix()).trace(), (&r * dy.matrix()).trace()))
}

/// P = 4 sech(theta t + vartheta) (cos, sin)(omega t) [bracket].
pub fn printed_polarization(profile: &SolitonProfile, levels: &[f64; 3], omega: f64, t: f64) -> (f64, f64) {
    let amp = 4.0 * sech(profile.phase(t)) * polarization_bracket(profile, levels);
    (amp * (omega * t).cos(), amp * (omega * t).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxwellResiduals {
    pub constraint: f64,
    pub pde: f64,
}

/// Steady-state check d^2E/ds^2 = 4 pi / ((c/v)^2 - 1) d^2P/ds^2 in the retarded
/// coordinate, using second central differences with step 1e-3 / theta over
/// t* +- 10 / theta.
pub fn maxwell_check(cfg: &FieldConfig, profile: &SolitonProfile, levels: &[f64; 3]) -> Result<MaxwellResiduals> {
    let kappa = cfg.kappa()?;
    let lhs = 16.0 * PI * polarization_bracket(profile, levels);
    let constraint = (lhs - kappa * cfg.ex0)
        .abs()
        .max((lhs - kappa * cfg.ey0).abs());

    let step = 1e-3 / profile.theta.abs();
    let half_width = 10.0 / profile.theta.abs();
    let centre = profile.midpoint();
    let n = (2.0 * half_width / step).round() as usize;
    let env = |s: f64| sech(profile.phase(s));
    let field = |s: f64| {
        let w = cfg.omega * s;
        [cfg.ex0 * env(s) * w.cos(), cfg.ey0 * env(s) * w.sin()]
    };
    let pol = |s: f64| {
        let (px, py) = printed_polarization(profile, levels, cfg.omega, s);
        [px, py]
    };
    let second = |g: &dyn Fn(f64) -> [f64; 2], s: f64| {
        let (a, b, m) = (g(s - step), g(s + step), g(s));
        [0, 1].map(|k| (a[k] - 2.0 * m[k] + b[k]) / (step * step))
    };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..=n {
        let s = centre - half_width + i as f64 * step;
        let e2 = second(&field, s);
        let p2 = second(&pol, s);
        for k in 0..2 {
            worst = worst.max((e2[k] - 4.0 * PI / kappa * p2[k]).abs());
            scale = scale.max(e2[k].abs());
        }
    }
    let pde = if scale == 0.0 {
        if worst == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        worst / scale
    };
    Ok(MaxwellResiduals { constraint, pde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn one() -> C64 {
        real(1.0)
    }

    fn ho() -> ModelSolution {
        ModelSolution::harmonic_oscillator(1.0, 0.3, one(), one(), Nonlinearity::quadratic()).unwrap()
    }

    fn ha() -> ModelSolution {
        ModelSolution::hydrogen(1, 1.0, 0.1, one(), one(), Nonlinearity::quadratic()).unwrap()
    }

    fn fd(traj: &impl Trajectory, t: f64) -> CMatrix {
        let d = 1e-5;
        (traj.sample(t + d).unwrap() - traj.sample(t - d).unwrap()).unscale(2.0 * d)
    }

    #[test]
    fn hydrogen_constants() {
        assert_eq!(hydrogen_d(1), 96.0);
        assert_eq!(hydrogen_e(1), c(9.0, 15f64.sqrt()));
        for n in 1..8 {
            assert_abs_diff_eq!(hydrogen_e(n).norm_sqr(), hydrogen_d(n), epsilon = 1e-9);
        }
    }

    #[test]
    fn ho_profile_examples() {
        let p = ho_profile(1.0, 0.3, one(), one()).unwrap();
        assert_abs_diff_eq!(p.rho_mag, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(p.theta, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(p.vartheta, (1.0 / SQRT_2).ln(), epsilon = 1e-15);
        let t0 = p.vartheta / p.theta;
        assert!((p.zeta(t0 - 50.0 / p.theta) + 0.3).abs() < 1e-10);
        assert!((p.zeta(t0 + 50.0 / p.theta) - 0.3).abs() < 1e-10);
        let mid = p.midpoint();
        assert_abs_diff_eq!(p.zeta(mid), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.xi(mid).norm(), p.z.norm(), epsilon = 1e-15);
        assert!(matches!(ho_profile(1.0, 0.3, one(), real(0.0)), Err(Error::ConstantSolution)));
        assert!(matches!(ho_profile(1.0, 0.0, one(), one()), Err(Error::TrivialDarboux)));
    }

    #[test]
    fn ha_profile_examples() {
        let p = ha_profile(1, 1.0, 0.1, one(), one()).unwrap();
        assert_abs_diff_eq!(p.rho_mag.powi(2), 0.01 * 15.0 / 144.0, epsilon = 1e-16);
        assert_abs_diff_eq!(p.vartheta, (1.0 / 192f64.sqrt()).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(p.z.norm(), p.rho_mag / SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn amplitude_differs_from_printed_by_a_phase() {
        let ho = ho_profile(1.0, 0.3, c(0.4, 0.2), c(-1.0, 0.5)).unwrap();
        let r = ho.amplitude_ratio();
        assert_abs_diff_eq!(r.norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.arg(), -FRAC_PI_4, epsilon = 1e-14);
        let ha = ha_profile(1, 1.0, 0.1, c(0.4, 0.2), c(-1.0, 0.5)).unwrap();
        let r = ha.amplitude_ratio();
        assert_abs_diff_eq!(r.norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.arg(), -std::f64::consts::FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn profile_matches_engine() {
        for sol in [ho(), ha()] {
            let p = sol.profile.clone().unwrap();
            for k in 0..101 {
                let t = p.midpoint() + (k as f64 - 50.0) * 0.2 / p.theta;
                let (zeta, xi) = sol.engine_profile_entries(t).unwrap();
                assert!((zeta - p.zeta(t)).abs() < 1e-10);
                assert!((xi - p.xi(t)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spectral_basis_form() {
        let p = ho_profile(1.0, 0.3, one(), one()).unwrap();
        let mid = rho_spectral_basis(&p, p.midpoint()).unwrap();
        assert!(mid.matrix()[(0, 2)].norm() < 1e-15);
        let m = rho_spectral_basis(&p, 0.0).unwrap();
        assert_eq!(m.matrix()[(0, 2)], real(p.zeta(0.0)));
        assert_eq!(m.matrix()[(0, 1)], real(SQRT_2 * p.xi(0.0).re));
        assert_eq!(m.matrix()[(1, 2)], c(0.0, -SQRT_2 * p.xi(0.0).im));
        for t in [-20.0, 0.0, 3.0, 40.0] {
            let ev = matrix::eigenvalues(rho_spectral_basis(&p, t).unwrap().matrix());
            for (g, w) in ev.iter().zip([1.0 / 3.0 - 0.3, 1.0 / 3.0, 1.0 / 3.0 + 0.3]) {
                assert!((g - w).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn renumbering() {
        let sol = ho();
        assert_eq!(sol.permutation, [0, 2, 1]);
        assert_eq!(sol.levels, [1.0, 2.0, 3.0]);
        assert_eq!(ha().permutation, [0, 2, 1]);
        let m = sol.solution.rho_int(0.7).unwrap();
        let r = sol.rho_int(0.7).unwrap();
        assert_eq!(r[(0, 2)], m[(0, 1)]);
        assert_eq!(r[(0, 1)], m[(0, 2)]);
        assert_eq!(r[(1, 2)], m[(2, 1)]);
    }

    #[test]
    fn gauge_freedom() {
        for sol in [ho(), ha()] {
            let h = sol.hamiltonian();
            let (e1, e2) = paper_gauge(&sol.levels);
            let mid = sol.profile.as_ref().unwrap().midpoint();
            for (a, b) in [(e1, e2), (0.0, 0.0), (0.37, -1.2)] {
                for dt in [-5.0, 0.0, 4.0] {
                    let t = mid + dt;
                    let hm = effective_hamiltonian(&sol, &h, sol.nonlinearity(), a, b, t).unwrap();
                    let r = sol.rho1(t).unwrap();
                    let lhs = fd(&sol, t) * c(0.0, 1.0);
                    let rhs = matrix::commutator(hm.matrix(), &r).unwrap();
                    assert!((lhs - rhs).norm() < 1e-6);
                }
            }
            let hm = effective_hamiltonian(&sol, &h, sol.nonlinearity(), e1, e2, mid).unwrap();
            assert!(hm.matrix()[(0, 2)].norm() < 1e-12);
            // diagonal = (2/3) h_i + offset
            for i in 0..3 {
                let want = 2.0 / 3.0 * sol.levels[i] + diagonal_offset(e1, e2);
                assert_abs_diff_eq!(hm.matrix()[(i, i)].re, want, epsilon = 1e-12);
            }
        }
        let cubic = ModelSolution::harmonic_oscillator(1.0, 0.3, one(), one(), Nonlinearity::power(3)).unwrap();
        assert!(matches!(
            effective_hamiltonian(&cubic, &cubic.hamiltonian(), cubic.nonlinearity(), 0.0, 0.0, 0.0),
            Err(Error::UnsupportedNonlinearity(_))
        ));
    }

    #[test]
    fn ho_interaction_amplitudes() {
        let sol = ho();
        let p = sol.profile.clone().unwrap();
        let (e1, e2) = paper_gauge(&sol.levels);
        let t = p.midpoint() + 1.3;
        let hm = effective_hamiltonian(&sol, &sol.hamiltonian(), sol.nonlinearity(), e1, e2, t).unwrap();
        let [h1, h2, h3] = sol.levels;
        let env = sech(p.phase(t));
        let r = sol.rho_int(t).unwrap();
        // |(1,2)| and |(2,3)| are the level differences times the rho_int entries
        assert_abs_diff_eq!(hm.matrix()[(0, 1)].norm(), ((h2 - h3) * r[(0, 1)]).norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(hm.matrix()[(1, 2)].norm(), ((h2 - h1) * r[(1, 2)]).norm(), epsilon = 1e-12);
        let total = (r[(0, 1)].norm_sqr() + r[(1, 2)].norm_sqr()).sqrt();
        assert_abs_diff_eq!(total, SQRT_2 * p.z.norm() * env, epsilon = 1e-12);
    }

    #[test]
    fn ho_factorizes_with_one_carrier() {
        let sol = ho();
        let cfg = FieldConfig {
            ex0: 0.7,
            ey0: 0.7,
            ..FieldConfig::solved(&sol, 0.5, 1.0).unwrap()
        };
        let fact = factorize_field(&sol, &cfg).unwrap();
        assert!(fact.is_single_carrier());
        assert_abs_diff_eq!(fact.carriers[0].omega, 2.0 / 3.0, epsilon = 1e-15);
        let mid = sol.profile.as_ref().unwrap().midpoint();
        for k in 0..41 {
            let t = mid - 20.0 + k as f64;
            let h = effective_hamiltonian(&sol, &sol.hamiltonian(), sol.nonlinearity(), cfg.epsilon1, cfg.epsilon2, t)
                .unwrap();
            let mut off = h.matrix().clone();
            off.set_diagonal(&crate::matrix::CVector::zeros(3));
            assert!((off - fact.interaction(t)).norm() < 1e-10);
        }
        let (e, dx, dy) = field_and_dipoles(&sol, &cfg, mid).unwrap();
        assert_eq!(e[2], 0.0);
        for d in [&dx, &dy] {
            assert!((0..3).all(|i| d.matrix()[(i, i)] == real(0.0)));
        }
        let (far, _, _) = field_and_dipoles(&sol, &cfg, mid + 800.0).unwrap();
        assert!(far.iter().all(|x| x.abs() < 1e-100));
        let wrong = FieldConfig { omega: 0.5, ..cfg };
        assert!(matches!(field_and_dipoles(&sol, &wrong, 0.0), Err(Error::Factorization(_))));
    }

    #[test]
    fn ha_needs_two_carriers() {
        let sol = ha();
        let cfg = FieldConfig {
            ex0: 1.0,
            ey0: 1.0,
            ..FieldConfig::solved(&sol, 0.5, 1.0).unwrap()
        };
        let fact = factorize_field(&sol, &cfg).unwrap();
        assert_eq!(fact.carriers.len(), 2);
        let t = sol.profile.as_ref().unwrap().midpoint() + 30.0;
        let h = effective_hamiltonian(&sol, &sol.hamiltonian(), sol.nonlinearity(), cfg.epsilon1, cfg.epsilon2, t)
            .unwrap();
        let mut off = h.matrix().clone();
        off.set_diagonal(&crate::matrix::CVector::zeros(3));
        assert!((off - fact.interaction(t)).norm() < 1e-10);
        assert!(matches!(field_and_dipoles(&sol, &cfg, 0.0), Err(Error::Factorization(_))));
    }

    #[test]
    fn polarization_traces() {
        let sol = ho();
        let cfg = FieldConfig {
            ex0: 0.5,
            ey0: 0.5,
            ..FieldConfig::solved(&sol, 0.5, 1.0).unwrap()
        };
        let mid = sol.profile.as_ref().unwrap().midpoint();
        let (_, dx, dy) = field_and_dipoles(&sol, &cfg, mid).unwrap();
        for t in [mid - 3.0, mid, mid + 2.0] {
            let (px, py) = polarization(&sol, &dx, &dy, t).unwrap();
            assert!(px.im.abs() < 1e-12 && py.im.abs() < 1e-12);
        }
        let (px, py) = polarization(&sol, &dx, &dy, mid + 400.0).unwrap();
        assert!(px.norm() < 1e-12 && py.norm() < 1e-12);
        let p = sol.profile.as_ref().unwrap();
        let (x, y) = printed_polarization(p, &sol.levels, cfg.omega, 0.4);
        assert_abs_diff_eq!(x / y, 1.0 / (cfg.omega * 0.4).tan(), epsilon = 1e-12);
    }

    #[test]
    fn maxwell_constraint() {
        let sol = ModelSolution::harmonic_oscillator(
            1.0,
            0.3,
            one(),
            c(FRAC_PI_4.cos(), -FRAC_PI_4.sin()),
            Nonlinearity::quadratic(),
        )
        .unwrap();
        let p = sol.profile.clone().unwrap();
        assert!(polarization_bracket(&p, &sol.levels).abs() > 1e-3);
        let cfg = FieldConfig::solved(&sol, 0.5, 1.0).unwrap();
        let r = maxwell_check(&cfg, &p, &sol.levels).unwrap();
        assert!(r.constraint < 1e-14);
        assert!(r.pde < 1e-4);
        let doubled = FieldConfig { ex0: 2.0 * cfg.ex0, ey0: 2.0 * cfg.ey0, ..cfg.clone() };
        let r = maxwell_check(&doubled, &p, &sol.levels).unwrap();
        assert!(r.constraint > 1e-3 && r.pde > 0.1);
        let fast = FieldConfig { v: 1.0 - 1e-15, ..cfg.clone() };
        assert!(matches!(maxwell_check(&fast, &p, &sol.levels), Err(Error::DegenerateVelocity(_))));
        let bad = FieldConfig { v: 2.0, ..cfg };
        assert!(matches!(maxwell_check(&bad, &p, &sol.levels), Err(Error::InvalidParameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn profile_identities(
            beta in 0.05f64..0.32, g1r in 0.1f64..2.0, g1i in -1.0f64..1.0,
            g3r in -2.0f64..2.0, g3i in 0.1f64..2.0, s in -30.0f64..30.0, n in 1u32..4,
        ) {
            let g1 = c(g1r, g1i);
            let g3 = c(g3r, g3i);
            for p in [ho_profile(1.0, beta, g1, g3).unwrap(), ha_profile(n, 1.0, beta, g1, g3).unwrap()] {
                let t = p.midpoint() + s / p.theta;
                let env = p.zeta(t).powi(2) + p.xi(t).norm_sqr() * p.rho_mag.powi(2) / p.z.norm_sqr();
                prop_assert!((env - p.rho_mag.powi(2)).abs() < 1e-10);
                prop_assert!(p.xi(t).norm() <= p.z.norm() + 1e-15);
                prop_assert!(p.zeta(t).abs() <= p.rho_mag);
                prop_assert!(p.theta > 0.0);
            }
        }
    }
}
