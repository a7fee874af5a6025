//! Small dense complex linear algebra.
//!
//! Everything here targets matrices of dimension 2 to 8. Hermitian
//! eigendecomposition is delegated to `nalgebra`; this module adds the
//! spectral-projector view (degenerate eigenvalues merged), spectral functions,
//! commutators and density-matrix validation on top of it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DensityViolation, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative Hermiticity tolerance: ||M - M^H||_F <= tol * max(1, ||M||_F).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed |Tr rho - 1|.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as non-negative.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Eigenvalues closer than this share one spectral projector.
pub const DEGENERACY_GAP: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Builds a matrix from row-major complex entries.
pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, rows[0].len(), |i, j| real(rows[i][j]))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// ||M - M^H||_F.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A self-adjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL * m.norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self(m))
    }

    /// Symmetrises `m` first; for results that are Hermitian up to rounding.
    pub fn from_nearly_hermitian(m: CMatrix) -> Result<Self> {
        Self::new(hermitian_part(&m))
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        Self(diag_real(values))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// Hermitian, unit-trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0.into_inner()
    }
}

/// Eigenvalues (ascending) with their orthogonal spectral projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<CMatrix>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    /// Sum of lambda_i P_i.
    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    /// Sum of f(lambda_i) P_i.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMatrix::zeros(n, n), |acc, (&l, p)| acc + p.scale(f(l)))
    }
}

/// Rotates `v` so that its first non-negligible component is real positive.
pub fn fix_phase(v: &mut CVector) {
    let scale = v.camax().max(f64::MIN_POSITIVE);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * scale).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Orthonormal eigenpairs, ascending eigenvalues, phase-fixed eigenvectors.
pub fn eigenpairs(m: &HermitianMatrix) -> Vec<(f64, CVector)> {
    let eig = m.matrix().clone().symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            (l, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectral decomposition; eigenvalues within [`DEGENERACY_GAP`] are merged.
pub fn eig_hermitian(m: &HermitianMatrix) -> SpectralData {
    let n = m.dim();
    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut projectors: Vec<CMatrix> = Vec::new();
    let mut members = 0usize;
    for (l, v) in eigenpairs(m) {
        let p = outer(&v, &v);
        match eigenvalues.last_mut() {
            Some(last) if (l - *last).abs() < DEGENERACY_GAP => {
                // running mean keeps the merged eigenvalue centred
                members += 1;
                *last += (l - *last) / members as f64;
                let acc = projectors.last_mut().expect("paired with eigenvalue");
                *acc += p;
            }
            _ => {
                members = 1;
                eigenvalues.push(l);
                projectors.push(p);
            }
        }
    }
    debug_assert!(projectors.iter().all(|p| p.nrows() == n));
    SpectralData {
        eigenvalues,
        projectors,
    }
}

/// f applied through the spectral theorem.
pub fn apply_spectral_function(f: impl Fn(f64) -> f64, s: &SpectralData) -> HermitianMatrix {
    HermitianMatrix(hermitian_part(&s.map(f)))
}

/// exp(scale * M) for Hermitian M via its spectral projectors.
pub fn exp_hermitian(m: &HermitianMatrix, scale: C64) -> CMatrix {
    let s = eig_hermitian(m);
    let n = m.dim();
    s.eigenvalues
        .iter()
        .zip(&s.projectors)
        .fold(CMatrix::zeros(n, n), |acc, (&l, p)| {
            acc + p * (scale * l).exp()
        })
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

/// Checks every density-matrix invariant and reports all that fail.
pub fn validate_density(m: &CMatrix) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            left: m.nrows(),
            right: m.ncols(),
        });
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let mut violations = Vec::new();
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * m.norm().max(1.0) {
        violations.push(DensityViolation::Hermiticity { defect });
    }
    let deviation = (trace(m) - real(1.0)).norm();
    if deviation > TRACE_TOL {
        violations.push(DensityViolation::Trace { deviation });
    }
    let min_eigenvalue = eigenvalues(m)[0];
    if min_eigenvalue < -POSITIVITY_TOL {
        violations.push(DensityViolation::Positivity { min_eigenvalue });
    }
    if violations.is_empty() {
        Ok(DensityMatrix(HermitianMatrix(hermitian_part(m))))
    } else {
        Err(Error::InvalidDensity(violations))
    }
}
