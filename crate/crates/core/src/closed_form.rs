//! Closed-form reordering for a single mode.
//!
//! For `R = [[a, c], [c, b]]` the transfer matrix is
//!
//! ```text
//! [[cosh t + c sinhc t, -a sinhc t],
//!  [b sinhc t,          cosh t - c sinhc t]],   t = sqrt(c^2 - ab),  sinhc t = sinh t / t
//! ```
//!
//! and the ordered-form parameters follow by scalar division. Only even
//! functions of `t` appear, so the sign of the square root is immaterial.
//!
//! Sign convention: the library writes the position factor as
//! `exp(-W x^2 / 2)`. An exponent printed as `exp(+k x^2)` therefore maps
//! to `W = -2k`.

use num_complex::Complex64;

use crate::error::{EqoError, Result};
use crate::matrix::{logm, ComplexMatrix};
use crate::reorder::{Factorization, QuadraticGenerator};

/// Below this |t| the sinh t / t quotient switches to its Taylor series.
pub const SINHC_SERIES_CUTOFF: f64 = 1e-4;

/// Magnitude below which T22 counts as zero.
pub const ZERO_T22: f64 = 1e-13;

/// One-mode coefficients: `a` multiplies x^2/2, `b` multiplies d^2/2 and
/// `c` the symmetrized x d pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients1D {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    theta: Complex64,
}

impl Coefficients1D {
    pub fn new(a: Complex64, b: Complex64, c: Complex64) -> Self {
        let theta = (c * c - a * b).sqrt();
        Self { a, b, c, theta }
    }

    /// Principal square root of `c^2 - ab`.
    pub fn theta(&self) -> Complex64 {
        self.theta
    }

    pub fn generator(&self) -> QuadraticGenerator {
        QuadraticGenerator::one_mode(self.a, self.b, self.c)
    }

    fn blocks(&self, theta: Complex64) -> [Complex64; 4] {
        let ch = theta.cosh();
        let sc = sinhc(theta);
        [
            ch + self.c * sc,
            -self.a * sc,
            self.b * sc,
            ch - self.c * sc,
        ]
    }
}

/// `sinh t / t`, continuous through `t = 0`.
pub fn sinhc(theta: Complex64) -> Complex64 {
    if theta.norm() < SINHC_SERIES_CUTOFF {
        let t2 = theta * theta;
        1.0 + t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sinh() / theta
    }
}

fn to_matrix(blocks: [Complex64; 4]) -> ComplexMatrix {
    ComplexMatrix::new(2, 2, blocks.to_vec()).expect("2x2 from four finite entries")
}

pub fn transfer_1d(coeffs: &Coefficients1D) -> ComplexMatrix {
    to_matrix(coeffs.blocks(coeffs.theta))
}

pub fn decompose_1d(coeffs: &Coefficients1D) -> Result<Factorization> {
    let [_, t12, t21, t22] = coeffs.blocks(coeffs.theta);
    if t22.norm() < ZERO_T22 {
        return Err(EqoError::ZeroT22 {
            magnitude: t22.norm(),
        });
    }
    let w = ComplexMatrix::scalar(t12 / t22);
    let z = ComplexMatrix::scalar(t21 / t22);
    let y = -&logm(&ComplexMatrix::scalar(t22))?;
    Factorization::from_parts(w, y, z)
}

/// Evaluates the transfer matrix with `+t` and `-t` and reports whether
/// the two agree to 1e-13 (relative to the matrix scale).
pub fn theta_branch_invariance_check(coeffs: &Coefficients1D) -> bool {
    let plus = to_matrix(coeffs.blocks(coeffs.theta));
    let minus = to_matrix(coeffs.blocks(-coeffs.theta));
    (&plus - &minus).max_abs() <= 1e-13 * plus.max_abs().max(1.0)
}
