use serde::{Deserialize, Serialize};

use crate::matrix::{CMatrix, SpectralData};

/// Real polynomial nonlinearity f, with an optional constant shift c so that
/// f_c(x) = f(x) + c.
///
/// Coefficients are stored in ascending powers: `[a0, a1, a2]` is a0 + a1 x + a2 x^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    coefficients: Vec<f64>,
    #[serde(default)]
    offset: f64,
}

impl Nonlinearity {
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        let mut coefficients = coefficients;
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(0.0);
        }
        Self {
            coefficients,
            offset: 0.0,
        }
    }

    /// f(x) = x^k.
    pub fn power(k: u32) -> Self {
        let mut coefficients = vec![0.0; k as usize + 1];
        coefficients[k as usize] = 1.0;
        Self::polynomial(coefficients)
    }

    pub fn linear() -> Self {
        Self::power(1)
    }

    pub fn quadratic() -> Self {
        Self::power(2)
    }

    pub fn with_offset(mut self, c: f64) -> Self {
        self.offset = c;
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// f_c(x) = f(x) + c.
    pub fn eval_c(&self, x: f64) -> f64 {
        self.eval(x) + self.offset
    }

    /// f'(x) = f(x) - f(lambda3): the nonlinearity seen by the three-level Lax pair.
    pub fn relative_to(&self, lambda3: f64) -> Self {
        let mut coefficients = self.coefficients.clone();
        coefficients[0] -= self.eval(lambda3);
        Self {
            coefficients,
            offset: 0.0,
        }
    }

    /// g(x) = f(x + s), expanded back into monomial coefficients.
    pub fn shifted(&self, s: f64) -> Self {
        let n = self.coefficients.len();
        let mut out = vec![0.0; n];
        for (k, &a) in self.coefficients.iter().enumerate() {
            // (x + s)^k = sum_j C(k, j) s^(k-j) x^j
            let mut binom = 1.0;
            for j in 0..=k {
                out[j] += a * binom * s.powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        Self {
            coefficients: out,
            offset: self.offset,
        }
    }

    /// True for f(x) = x^2 (+ constant); the only case where [H, f(rho)] = [H rho + rho H, rho].
    pub fn is_pure_quadratic(&self) -> bool {
        self.coefficients.len() == 3 && self.coefficients[1] == 0.0 && self.coefficients[2] == 1.0
    }

    /// Matrix polynomial by Horner's rule; valid for any square matrix.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let id = CMatrix::identity(n, n);
        self.coefficients
            .iter()
            .rev()
            .fold(CMatrix::zeros(n, n), |acc, &a| acc * m + id.scale(a))
    }

    /// f through the spectral theorem.
    pub fn apply_spectral(&self, s: &SpectralData) -> CMatrix {
        s.map(|x| self.eval(x))
    }
}

impl std::fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(k, a)| match k {
                0 => format!("{a}"),
                1 => format!("{a}*x"),
                _ => format!("{a}*x^{k}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}
