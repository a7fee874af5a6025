//! Darboux transformation of a three-level seed.
//!
//! The Lax vector evolves in closed form in the interaction frame,
//! psi(t) = sum_i exp(-i beta(lambda_i) t / mu) P_i(0) psi(0), and its normalised
//! outer product P_int(t) drives the conjugation
//!
//! ```text
//! rho_int[1](t) = (1 + (mu - conj(mu))/conj(mu) P_int) rho(0) (1 + (conj(mu) - mu)/mu P_int)
//! ```
//!
//! The laboratory-frame solution is rho[1](t) = V rho_int[1](t) V^H with
//! V = exp(-i alpha(lambda) H t).
//!
//! Exponentials are rescaled by their largest real part before use so that the
//! switching tails (where one weight dominates by many orders of magnitude)
//! stay finite.

use crate::error::{Error, Result};
use crate::matrix::{
    self, c, outer, real, validate_density, CMatrix, CVector, DensityMatrix, HermitianMatrix, C64,
};
use crate::nonlinearity::Nonlinearity;
use crate::seed::{lax_eigenvector, omega_outer, SeedSolution};
use crate::trajectory::Trajectory;

/// Tolerance on the algebraic identities beta_1 = beta_2, b_33 = 0, Re b = 0.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LaxSolution {
    pub seed: SeedSolution,
    pub f: Nonlinearity,
    pub gamma1: C64,
    pub gamma3: C64,
    /// psi(0) = phi(0).
    pub phi0: CVector,
    pub alpha_lambda: f64,
    /// beta(lambda_i) = f'(lambda_i) - alpha(lambda) (lambda_i - z_mu).
    pub beta: [C64; 3],
    /// a_ij = <omega_i|psi(0)> conj(<omega_j|psi(0)>).
    pub a: [[C64; 3]; 3],
    /// Common exponent b = b_11 = b_22 = b_12 = b_21.
    pub b: C64,
}

/// beta(lambda_i) for the three eigenvalues of rho(0).
pub fn beta_of_lambda(f: &Nonlinearity, seed: &SeedSolution) -> Result<[C64; 3]> {
    let alpha = seed.alpha_lambda(f)?;
    let f_rel = f.relative_to(seed.lambdas[2]);
    Ok(seed
        .lambdas
        .map(|l| real(f_rel.eval(l)) - (real(l) - seed.z_mu) * alpha))
}

impl LaxSolution {
    pub fn new(seed: SeedSolution, f: Nonlinearity, gamma1: C64, gamma3: C64) -> Result<Self> {
        if seed.mu == real(0.0) {
            return Err(Error::InvalidParameter("mu = 0".into()));
        }
        let alpha_lambda = seed.alpha_lambda(&f)?;
        let beta = beta_of_lambda(&f, &seed)?;
        let phi0 = lax_eigenvector(&seed, gamma1, gamma3)?;
        let proj: Vec<C64> = seed.omegas.iter().map(|w| w.dotc(&phi0)).collect();
        let mut a = [[real(0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = proj[i] * proj[j].conj();
            }
        }
        let mu = seed.mu;
        let ratio = beta.map(|x| x / mu);
        let b = ratio[0] - ratio[0].conj();

        let scale = beta.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let split = (beta[0] - beta[1]).norm();
        let b33 = (ratio[2] - ratio[2].conj()).norm();
        let expected3 = -(mu * (alpha_lambda * seed.lax_levels[2]));
        let third = (beta[2] - expected3).norm();
        for residual in [split, b33, b.re.abs(), third] {
            if residual > IDENTITY_TOL * scale {
                return Err(Error::LaxInconsistency { residual });
            }
        }
        Ok(Self {
            seed,
            f,
            gamma1,
            gamma3,
            phi0,
            alpha_lambda,
            beta,
            a,
            b,
        })
    }

    /// kappa_i(t) = -i beta(lambda_i) t / mu.
    fn exponents(&self, t: f64) -> [C64; 3] {
        let mu = self.seed.mu;
        self.beta.map(|x| c(0.0, -t) * x / mu)
    }

    /// exp(kappa_i - m) with m the largest Re kappa_i over populated components.
    fn scaled_weights(&self, t: f64) -> [C64; 3] {
        let k = self.exponents(t);
        let m = (0..3)
            .filter(|&i| self.a[i][i].re > 0.0)
            .map(|i| k[i].re)
            .fold(f64::NEG_INFINITY, f64::max);
        let m = if m.is_finite() { m } else { 0.0 };
        k.map(|x| (x - m).exp())
    }

    /// psi(t), unnormalised; its norm grows or decays exponentially.
    pub fn evolve_psi(&self, t: f64) -> CVector {
        let k = self.exponents(t);
        self.psi_with(&k.map(|x| x.exp()))
    }

    fn psi_with(&self, w: &[C64; 3]) -> CVector {
        (0..3).fold(CVector::zeros(3), |acc, i| {
            let comp = self.seed.omegas[i].dotc(&self.phi0) * w[i];
            acc + &self.seed.omegas[i] * comp
        })
    }

    /// F(t) = exp(-i b t) (a_11 + a_22) + a_33, unscaled.
    pub fn normalization(&self, t: f64) -> C64 {
        (c(0.0, -t) * self.b).exp() * (self.a[0][0] + self.a[1][1]) + self.a[2][2]
    }

    /// A_ij = a_ij exp(-i b_ij t) and F, both divided by the same positive factor.
    fn scaled_terms(&self, t: f64) -> Result<([[C64; 3]; 3], C64)> {
        let w = self.scaled_weights(t);
        let mut big_a = [[real(0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                big_a[i][j] = self.a[i][j] * w[i] * w[j].conj();
            }
        }
        let f = big_a[0][0] + big_a[1][1] + big_a[2][2];
        let total = self.a[0][0].re + self.a[1][1].re + self.a[2][2].re;
        if f.norm() < 1e-14 * total {
            return Err(Error::SingularDenominator { t, value: f.norm() });
        }
        Ok((big_a, f))
    }

    /// P_int(t) = sum_ij a_ij exp(-i b_ij t) P_ij(0) / F(t).
    pub fn p_int(&self, t: f64) -> Result<CMatrix> {
        let (big_a, f) = self.scaled_terms(t)?;
        let mut p = CMatrix::zeros(3, 3);
        for (i, row) in big_a.iter().enumerate() {
            for (j, &aij) in row.iter().enumerate() {
                p += omega_outer(&self.seed, i, j) * (aij / f);
            }
        }
        Ok(p)
    }

    /// |psi(t)><psi(t)| / <psi(t)|psi(t)>, built directly from the evolved vector.
    pub fn p_int_outer(&self, t: f64) -> CMatrix {
        let psi = self.psi_with(&self.scaled_weights(t));
        outer(&psi, &psi).unscale(psi.norm_squared())
    }

    /// rho_int[1](t) through the conjugation with P_int(t).
    pub fn rho_int(&self, t: f64) -> Result<CMatrix> {
        Ok(sandwich(self.seed.rho0.matrix(), self.seed.mu, &self.p_int(t)?))
    }

    /// rho_int[1](t) = rho(0) + (mu - conj mu)/(F^2 |mu|^2) (sum c_i P_i + sum c_ij P_ij).
    pub fn rho_int_closed_form(&self, t: f64) -> Result<CMatrix> {
        let terms = self.closed_form_terms(t, CoefficientReading::Corrected)?;
        Ok(terms.assemble(&self.seed))
    }

    /// As [`Self::rho_int_closed_form`] but with the diagonal coefficients taken
    /// literally as printed, (lambda_1 - lambda_k) in place of (lambda_i - lambda_k).
    pub fn rho_int_printed_form(&self, t: f64) -> Result<CMatrix> {
        let terms = self.closed_form_terms(t, CoefficientReading::Literal)?;
        Ok(terms.assemble(&self.seed))
    }

    pub fn closed_form_terms(&self, t: f64, reading: CoefficientReading) -> Result<ClosedFormTerms> {
        let (big_a, f) = self.scaled_terms(t)?;
        let mu = self.seed.mu;
        let mu_bar = mu.conj();
        let l = self.seed.lambdas.map(real);
        let mut diagonal = [real(0.0); 3];
        let mut off = [[real(0.0); 3]; 3];
        for i in 0..3 {
            let (j, k) = others(i);
            let lead = match reading {
                CoefficientReading::Corrected => l[i],
                CoefficientReading::Literal => l[0],
            };
            diagonal[i] = (mu - mu_bar)
                * big_a[i][i]
                * ((l[i] - l[j]) * big_a[j][j] + (lead - l[k]) * big_a[k][k]);
        }
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let k = 3 - i - j;
                off[i][j] = big_a[i][j]
                    * ((l[j] - l[i]) * (mu * big_a[i][i] + mu_bar * big_a[j][j])
                        + ((mu_bar - mu) * l[k] + mu * l[j] - mu_bar * l[i]) * big_a[k][k]);
            }
        }
        let prefactor = (mu - mu_bar) / (f * f * mu.norm_sqr());
        Ok(ClosedFormTerms {
            normalization: f,
            prefactor,
            diagonal,
            off_diagonal: off,
        })
    }
}

/// How the printed diagonal coefficient c_i is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientReading {
    /// (lambda_i - lambda_j) a_jj + (lambda_i - lambda_k) a_kk.
    Corrected,
    /// (lambda_i - lambda_j) a_jj + (lambda_1 - lambda_k) a_kk.
    Literal,
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Coefficients of the explicit rho_int[1] expansion at one instant, scaled so
/// that the dominant exponential is 1. The scale cancels in `prefactor * c`.
#[derive(Debug, Clone)]
pub struct ClosedFormTerms {
    pub normalization: C64,
    pub prefactor: C64,
    pub diagonal: [C64; 3],
    pub off_diagonal: [[C64; 3]; 3],
}

impl ClosedFormTerms {
    fn assemble(&self, seed: &SeedSolution) -> CMatrix {
        let mut m = seed.rho0.matrix().clone();
        for i in 0..3 {
            m += omega_outer(seed, i, i) * (self.prefactor * self.diagonal[i]);
            for j in 0..3 {
                if i != j {
                    m += omega_outer(seed, i, j) * (self.prefactor * self.off_diagonal[i][j]);
                }
            }
        }
        m
    }
}

/// (1 + (mu - conj mu)/conj mu P) rho (1 + (conj mu - mu)/mu P).
pub fn sandwich(rho: &CMatrix, mu: C64, p: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let id = CMatrix::identity(n, n);
    let left = &id + p * ((mu - mu.conj()) / mu.conj());
    let right = &id + p * ((mu.conj() - mu) / mu);
    left * rho * right
}

/// The Darboux map for a density matrix and a rank-one Hermitian projector.
pub fn darboux_sandwich(rho: &DensityMatrix, mu: C64, p: &CMatrix) -> Result<DensityMatrix> {
    let idempotency = (p * p - p).norm();
    if idempotency > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "projector is not idempotent: ||P^2 - P|| = {idempotency:e}"
        )));
    }
    validate_density(&sandwich(rho.matrix(), mu, p))
}

/// General two-parameter form (1 + (mu3 - conj mu2)/conj mu2 P) rho (1 + (conj mu2 - mu3)/mu3 P).
pub fn darboux_general(rho: &CMatrix, mu2: C64, mu3: C64, p: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let id = CMatrix::identity(n, n);
    let left = &id + p * ((mu3 - mu2.conj()) / mu2.conj());
    let right = &id + p * ((mu2.conj() - mu3) / mu3);
    left * rho * right
}

/// V rho V^H with V = exp(-i alpha H t).
pub fn dress(rho_int: &CMatrix, h: &HermitianMatrix, alpha_lambda: f64, t: f64) -> CMatrix {
    let v = matrix::exp_hermitian(h, c(0.0, -alpha_lambda * t));
    &v * rho_int * v.adjoint()
}

/// A dressed Darboux solution rho[1](t) of i rho' = [H, f(rho)].
#[derive(Debug, Clone)]
pub struct DarbouxSolution {
    pub lax: LaxSolution,
    /// Physical H on the working subspace, construction order.
    pub hamiltonian: HermitianMatrix,
}

impl DarbouxSolution {
    pub fn new(seed: SeedSolution, f: Nonlinearity, gamma1: C64, gamma3: C64) -> Result<Self> {
        let hamiltonian = seed.hamiltonian_matrix();
        Ok(Self {
            lax: LaxSolution::new(seed, f, gamma1, gamma3)?,
            hamiltonian,
        })
    }

    pub fn seed(&self) -> &SeedSolution {
        &self.lax.seed
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.lax.f
    }

    pub fn alpha_lambda(&self) -> f64 {
        self.lax.alpha_lambda
    }

    pub fn rho_int(&self, t: f64) -> Result<CMatrix> {
        self.lax.rho_int(t)
    }

    /// rho[1](t), sandwich path.
    pub fn rho1(&self, t: f64) -> Result<CMatrix> {
        Ok(self.dress_at(&self.lax.rho_int(t)?, t))
    }

    /// rho[1](t), explicit-coefficient path.
    pub fn rho1_closed_form(&self, t: f64) -> Result<CMatrix> {
        Ok(self.dress_at(&self.lax.rho_int_closed_form(t)?, t))
    }

    pub fn rho1_density(&self, t: f64) -> Result<DensityMatrix> {
        validate_density(&self.rho1(t)?)
    }

    fn dress_at(&self, m: &CMatrix, t: f64) -> CMatrix {
        dress(m, &self.hamiltonian, self.lax.alpha_lambda, t)
    }

    /// Instant where the two Lax weights balance, if the solution switches.
    pub fn switching_midpoint(&self) -> Option<f64> {
        let block = (self.lax.a[0][0] + self.lax.a[1][1]).re;
        let third = self.lax.a[2][2].re;
        // block weight carries exp(-i b t) = exp(b.im t)
        let rate = self.lax.b.im;
        if block <= 0.0 || third <= 0.0 || rate == 0.0 {
            return None;
        }
        Some((third / block).ln() / rate)
    }

    /// Rate of the real exponential exp(-i b t).
    pub fn switching_rate(&self) -> f64 {
        self.lax.b.im.abs()
    }
}

impl Trajectory for DarbouxSolution {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        self.rho1(t)
    }
}

/// The explicit-coefficient path as its own trajectory.
pub struct ClosedFormPath<'a>(pub &'a DarbouxSolution);

impl Trajectory for ClosedFormPath<'_> {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        self.0.rho1_closed_form(t)
    }
}

/// rho_int[1](t) as a trajectory (interaction frame).
pub struct InteractionFrame<'a>(pub &'a DarbouxSolution);

impl Trajectory for InteractionFrame<'_> {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        self.0.rho_int(t)
    }
}
