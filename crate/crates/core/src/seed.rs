//! Seed solutions for the Darboux construction.
//!
//! A seed is a three-level density matrix rho(0) together with a complex
//! spectral parameter mu for which rho(0) - mu H has an eigenvalue z_mu with a
//! two-dimensional eigenspace. The first two levels carry a coherent 2x2 block
//! that rotates under exp(-i alpha(lambda) H t); the third level is stationary.

use crate::error::{Error, Result};
use crate::matrix::{
    self, c, eigenpairs, outer, real, validate_density, CMatrix, CVector, DensityMatrix,
    HermitianMatrix, SpectralData, C64,
};
use crate::nonlinearity::Nonlinearity;

/// Residual allowed in (rho(0) - mu H) v = z_mu v.
pub const LAX_RESIDUAL_TOL: f64 = 1e-10;

/// Eigenvalues of H plus the three levels the seed lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    levels: Vec<f64>,
    selected: [usize; 3],
}

impl HamiltonianSpec {
    pub fn new(levels: Vec<f64>, selected: [usize; 3]) -> Result<Self> {
        let n = levels.len();
        if selected.iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "selected levels {selected:?} out of range for {n} levels"
            )));
        }
        if selected[0] == selected[1] || selected[1] == selected[2] || selected[0] == selected[2] {
            return Err(Error::InvalidParameter(format!(
                "selected levels {selected:?} must be distinct"
            )));
        }
        if levels.iter().any(|h| !h.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { levels, selected })
    }

    /// Three levels in construction order.
    pub fn three(h1: f64, h2: f64, h3: f64) -> Result<Self> {
        Self::new(vec![h1, h2, h3], [0, 1, 2])
    }

    /// diag(B, 3B, 2B) + A.
    pub fn equispaced(b: f64, shift: f64) -> Self {
        Self {
            levels: vec![shift + b, shift + 3.0 * b, shift + 2.0 * b],
            selected: [0, 1, 2],
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn selected(&self) -> [usize; 3] {
        self.selected
    }

    /// (h1, h2, h3) of the working subspace.
    pub fn working(&self) -> [f64; 3] {
        self.selected.map(|i| self.levels[i])
    }

    pub fn matrix(&self) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&self.levels)
    }
}

/// Which parameterisation produced the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedKind {
    Equispaced { b: f64, alpha: f64, beta: f64 },
    Inhomogeneous { beta: f64, rho3: f64 },
}

#[derive(Debug, Clone)]
pub struct SeedSolution {
    pub kind: SeedKind,
    pub rho0: DensityMatrix,
    /// Spectral data of rho(0), ascending.
    pub spectral: SpectralData,
    pub mu: C64,
    pub z_mu: C64,
    pub hamiltonian: HamiltonianSpec,
    /// Levels entering rho(0) - mu H; the physical levels shifted by a constant.
    pub lax_levels: [f64; 3],
    /// lambda_1 and lambda_2 belong to the coherent block (lambda_1 the larger),
    /// lambda_3 to the stationary level.
    pub lambdas: [f64; 3],
    /// Eigenvectors of rho(0) matching `lambdas`.
    pub omegas: [CVector; 3],
    /// Unit vector spanning the block part of the z_mu eigenspace.
    pub block_vector: CVector,
    /// Norm given to the block vector when forming phi(0).
    pub lax_norm: f64,
    pub warnings: Vec<String>,
}

impl SeedSolution {
    pub fn dim(&self) -> usize {
        3
    }

    /// Physical Hamiltonian of the working subspace, in construction order.
    pub fn hamiltonian_matrix(&self) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&self.hamiltonian.working())
    }

    /// rho(0) - mu H with the shifted levels used to define z_mu.
    pub fn lax_matrix(&self) -> CMatrix {
        self.rho0.matrix() - matrix::diag_real(&self.lax_levels) * self.mu
    }

    /// alpha(lambda) for the coherent block.
    pub fn alpha_lambda(&self, f: &Nonlinearity) -> Result<f64> {
        alpha_lambda(f, self.lambdas[0], self.lambdas[1])
    }

    pub fn with_lax_norm(mut self, norm: f64) -> Self {
        self.lax_norm = norm;
        self
    }

    /// Eigen-residuals of the two basis vectors of the z_mu eigenspace.
    pub fn eigenspace_residuals(&self) -> [f64; 2] {
        let l = self.lax_matrix();
        [&self.block_vector, &self.omegas[2]]
            .map(|v| (&l * v - v * self.z_mu).norm())
    }

    /// rho(0) placed into the full level space; other levels are unpopulated.
    pub fn embedded_rho0(&self) -> CMatrix {
        embed(self.rho0.matrix(), &self.hamiltonian)
    }
}

/// Places a 3x3 operator on the selected levels of the full space.
pub fn embed(m: &CMatrix, spec: &HamiltonianSpec) -> CMatrix {
    let n = spec.levels().len();
    let sel = spec.selected();
    let mut out = CMatrix::zeros(n, n);
    for (a, &i) in sel.iter().enumerate() {
        for (b, &j) in sel.iter().enumerate() {
            out[(i, j)] = m[(a, b)];
        }
    }
    out
}

/// (f(l1) - f(l2)) / (l1 - l2).
pub fn alpha_lambda(f: &Nonlinearity, l1: f64, l2: f64) -> Result<f64> {
    if (l1 - l2).abs() < matrix::DEGENERACY_GAP {
        return Err(Error::DegeneratePair(l1));
    }
    Ok((f.eval(l1) - f.eval(l2)) / (l1 - l2))
}

/// Closed-form solution of the two-level problem:
/// rho(t) = exp(-i alpha H1 t) rho(0) exp(i alpha H1 t).
pub fn two_level_evolution(
    rho0: &DensityMatrix,
    h1: &HermitianMatrix,
    f: &Nonlinearity,
    t: f64,
) -> Result<DensityMatrix> {
    if rho0.dim() != 2 || h1.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: h1.dim(),
        });
    }
    let ev = matrix::eigenvalues(rho0.matrix());
    let alpha = alpha_lambda(f, ev[1], ev[0])?;
    let u = matrix::exp_hermitian(h1, c(0.0, -alpha * t));
    validate_density(&(&u * rho0.matrix() * u.adjoint()))
}

/// Levels n, n+2, n+1 of a hydrogen-like spectrum -B/k^2, in construction order.
pub fn hydrogen_levels(n: u32, b: f64) -> Result<[f64; 3]> {
    if n == 0 || b <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "hydrogen levels need n >= 1 and B > 0, got n = {n}, B = {b}"
        )));
    }
    let level = |k: u32| -b / (k as f64).powi(2);
    Ok([level(n), level(n + 2), level(n + 1)])
}

/// Seed for an equally spaced spectrum H = diag(B, 3B, 2B) + A.
pub fn build_equispaced_seed(b: f64, alpha: f64, beta: f64) -> Result<SeedSolution> {
    build_equispaced_seed_shifted(b, alpha, beta, 0.0)
}

pub fn build_equispaced_seed_shifted(
    b: f64,
    alpha: f64,
    beta: f64,
    shift: f64,
) -> Result<SeedSolution> {
    if beta == 0.0 {
        return Err(Error::TrivialDarboux);
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("B must be nonzero, got {b}")));
    }
    let third = 1.0 / 3.0;
    let off = (beta * b).abs();
    let rho = matrix::from_real_rows(&[
        &[third - alpha * b, off, 0.0],
        &[off, third + alpha * b, 0.0],
        &[0.0, 0.0, third],
    ]);
    let rho0 = validate_density(&rho)?;
    let mu = c(alpha, beta);
    let mu_b2 = mu.norm_sqr() * b * b;
    if mu_b2 >= third {
        return Err(Error::Constraint {
            name: "|mu|^2 B^2 < 1/3",
            detail: format!("|mu|^2 B^2 = {mu_b2}"),
        });
    }
    let z_mu = real(third) - mu * (2.0 * b);
    assemble(
        SeedKind::Equispaced { b, alpha, beta },
        rho0,
        mu,
        z_mu,
        HamiltonianSpec::equispaced(b, shift),
        [b, 3.0 * b, 2.0 * b],
        Vec::new(),
    )
}

/// Seed for three arbitrary levels with h3 strictly between h1 and h2.
///
/// alpha is fixed by unit trace, alpha = (1 - 3 rho3) / (h1 + h2 - 2 h3); the
/// Lax pair is posed with H shifted by -(h1 + h2)/2.
pub fn build_inhomogeneous_seed(
    h1: f64,
    h2: f64,
    h3: f64,
    beta: f64,
    rho3: f64,
) -> Result<SeedSolution> {
    if beta == 0.0 {
        return Err(Error::TrivialDarboux);
    }
    let spread = h1 + h2 - 2.0 * h3;
    let excess = 1.0 - 3.0 * rho3;
    let alpha = if spread.abs() < 1e-14 {
        if excess.abs() > 1e-14 {
            return Err(Error::Constraint {
                name: "h1 + h2 - 2 h3 != 0",
                detail: format!("unit trace needs rho3 = 1/3 when h3 is the midpoint, got {rho3}"),
            });
        }
        0.0
    } else {
        excess / spread
    };
    let off2 = beta * beta * (h3 * (h1 + h2 - h3) - h1 * h2);
    let between = (h1 < h3 && h3 < h2) || (h2 < h3 && h3 < h1);
    if !between || off2 <= 0.0 {
        return Err(Error::Constraint {
            name: "h3 strictly between h1 and h2",
            detail: format!("|rho|^2 = beta^2 [h3 (h1 + h2 - h3) - h1 h2] = {off2:e}"),
        });
    }
    let rho1 = alpha * (h1 - h3) + rho3;
    let rho2 = alpha * (h2 - h3) + rho3;
    for (name, value) in [("rho1 > 0", rho1), ("rho2 > 0", rho2), ("rho3 > 0", rho3)] {
        if value <= 0.0 {
            return Err(Error::Positivity {
                condition: name,
                detail: format!("value {value}"),
            });
        }
    }
    if rho1 * rho2 <= off2 {
        return Err(Error::Positivity {
            condition: "rho1 rho2 > |rho|^2",
            detail: format!("rho1 rho2 = {}, |rho|^2 = {off2}", rho1 * rho2),
        });
    }
    let mut warnings = Vec::new();
    let lhs = beta * beta * (h1 - h2).powi(2);
    if lhs <= 4.0 * off2 {
        warnings.push(format!(
            "beta^2 (h1 - h2)^2 = {lhs:e} does not exceed 4 |rho|^2 = {:e}",
            4.0 * off2
        ));
    }
    let off = off2.sqrt();
    let rho = matrix::from_real_rows(&[&[rho1, off, 0.0], &[off, rho2, 0.0], &[0.0, 0.0, rho3]]);
    let rho0 = validate_density(&rho)?;
    let centre = 0.5 * (h1 + h2);
    let mu = c(alpha, beta);
    let z_mu = c(rho3 + 0.5 * excess, -beta * (h3 - centre));
    assemble(
        SeedKind::Inhomogeneous { beta, rho3 },
        rho0,
        mu,
        z_mu,
        HamiltonianSpec::three(h1, h2, h3)?,
        [h1 - centre, h2 - centre, h3 - centre],
        warnings,
    )
}

fn assemble(
    kind: SeedKind,
    rho0: DensityMatrix,
    mu: C64,
    z_mu: C64,
    hamiltonian: HamiltonianSpec,
    lax_levels: [f64; 3],
    warnings: Vec<String>,
) -> Result<SeedSolution> {
    let rho = rho0.matrix();
    let lambda3 = rho[(2, 2)].re;

    // third level: lambda3 = z_mu + mu h3 must be real and equal rho3
    let compat = z_mu + mu * lax_levels[2];
    let mismatch = compat.im.abs().max((compat.re - lambda3).abs());
    if mismatch > LAX_RESIDUAL_TOL {
        return Err(Error::LaxInconsistency { residual: mismatch });
    }

    // kernel of the 2x2 block of rho(0) - mu H - z_mu
    let p = rho[(0, 0)] - mu * lax_levels[0] - z_mu;
    let q = rho[(0, 1)];
    let r = rho[(1, 0)];
    let s = rho[(1, 1)] - mu * lax_levels[1] - z_mu;
    let (x, y) = if p.norm() + q.norm() >= r.norm() + s.norm() {
        (q, -p)
    } else {
        (s, -r)
    };
    let mut block_vector = CVector::from_vec(vec![x, y, real(0.0)]);
    let norm = block_vector.norm();
    if norm == 0.0 {
        return Err(Error::LaxInconsistency { residual: f64::NAN });
    }
    block_vector.unscale_mut(norm);
    matrix::fix_phase(&mut block_vector);

    let block = HermitianMatrix::new(rho.view((0, 0), (2, 2)).into_owned())?;
    let pairs = eigenpairs(&block);
    let lift = |v: &CVector| CVector::from_vec(vec![v[0], v[1], real(0.0)]);
    let omegas = [
        lift(&pairs[1].1),
        lift(&pairs[0].1),
        CVector::from_vec(vec![real(0.0), real(0.0), real(1.0)]),
    ];
    let lambdas = [pairs[1].0, pairs[0].0, lambda3];

    let seed = SeedSolution {
        kind,
        spectral: matrix::eig_hermitian(rho0.hermitian()),
        rho0,
        mu,
        z_mu,
        hamiltonian,
        lax_levels,
        lambdas,
        omegas,
        block_vector,
        lax_norm: std::f64::consts::SQRT_2,
        warnings,
    };
    let worst = seed.eigenspace_residuals().into_iter().fold(0.0, f64::max);
    if worst > LAX_RESIDUAL_TOL {
        return Err(Error::LaxInconsistency { residual: worst });
    }
    Ok(seed)
}

/// phi(0) = gamma1 phi1(0) + gamma3 omega3(0), with |phi1(0)| = `seed.lax_norm`.
pub fn lax_eigenvector(seed: &SeedSolution, gamma1: C64, gamma3: C64) -> Result<CVector> {
    if gamma1 == real(0.0) && gamma3 == real(0.0) {
        return Err(Error::InvalidParameter(
            "gamma1 and gamma3 cannot both vanish".into(),
        ));
    }
    let phi = &seed.block_vector * (gamma1 * seed.lax_norm) + &seed.omegas[2] * gamma3;
    let residual = (seed.lax_matrix() * &phi - &phi * seed.z_mu).norm();
    if residual > LAX_RESIDUAL_TOL * phi.norm().max(1.0) {
        return Err(Error::LaxInconsistency { residual });
    }
    Ok(phi)
}

/// Rank-one projectors P_ij(0) = |omega_i><omega_j|.
pub fn omega_outer(seed: &SeedSolution, i: usize, j: usize) -> CMatrix {
    outer(&seed.omegas[i], &seed.omegas[j])
}
