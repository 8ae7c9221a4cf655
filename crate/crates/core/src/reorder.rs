//! Reordering of an n-mode exponential quadratic operator
//!
//! ```text
//! exp[ 1/2 (x, d) R (x, d)^T ]  =  e^{tr Y / 2} e^{-x W x^T / 2} e^{x Y d^T} e^{d Z d^T / 2}
//! ```
//!
//! with `R = [[D1, F], [F^T, D2]]` and `d` the vector of derivatives. The
//! procedure is fixed: assemble `R`, form the transfer matrix
//! `T = exp(R Sigma^-1)`, and read `W`, `Y`, `Z` off the block
//! upper-diagonal-lower decomposition of `T`:
//!
//! ```text
//! W = T12 T22^-1,   Z = T22^-1 T21,   Y = -log(T22^T)
//! ```
//!
//! `Y` is always the principal matrix logarithm and the scalar prefactor is
//! computed as `exp(tr Y / 2)` from that same `Y`, never as `det(T22)^-1/2`,
//! so the two can't disagree on a branch.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{EqoError, Result};
use crate::matrix::{expm, inverse_with_floor, logm, ComplexMatrix};

/// Validated symmetric generator `R = [[D1, F], [F^T, D2]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGenerator {
    n: usize,
    d1: ComplexMatrix,
    f: ComplexMatrix,
    d2: ComplexMatrix,
}

impl QuadraticGenerator {
    /// Validates shapes and the symmetry of `D1` and `D2`.
    pub fn new(d1: ComplexMatrix, f: ComplexMatrix, d2: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(d1, f, d2, &Tolerances::default())
    }

    pub fn with_tolerances(
        d1: ComplexMatrix,
        f: ComplexMatrix,
        d2: ComplexMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = d1.rows();
        for m in [&d1, &f, &d2] {
            if m.shape() != (n, n) {
                return Err(EqoError::DimensionMismatch {
                    op: "assemble_generator",
                    left: (n, n),
                    right: m.shape(),
                });
            }
        }
        if n == 0 {
            return Err(EqoError::InvalidParameter("generator needs at least one mode".into()));
        }
        for (name, m) in [("D1", &d1), ("D2", &d2)] {
            let deviation = m.asymmetry();
            if deviation > tol.symmetry * m.max_abs().max(1.0) {
                return Err(EqoError::Asymmetry { name, deviation });
            }
        }
        Ok(Self { n, d1, f, d2 })
    }

    pub fn zero(n: usize) -> Self {
        let z = ComplexMatrix::zeros(n, n);
        Self {
            n,
            d1: z.clone(),
            f: z.clone(),
            d2: z,
        }
    }

    /// 1D generator with `R = [[a, c], [c, b]]`.
    pub fn one_mode(a: Complex64, b: Complex64, c: Complex64) -> Self {
        Self {
            n: 1,
            d1: ComplexMatrix::scalar(a),
            f: ComplexMatrix::scalar(c),
            d2: ComplexMatrix::scalar(b),
        }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn d1(&self) -> &ComplexMatrix {
        &self.d1
    }

    pub fn f(&self) -> &ComplexMatrix {
        &self.f
    }

    pub fn d2(&self) -> &ComplexMatrix {
        &self.d2
    }

    /// The full symmetric `2n x 2n` matrix `R`.
    pub fn r(&self) -> ComplexMatrix {
        ComplexMatrix::from_blocks(&self.d1, &self.f, &self.f.transpose(), &self.d2)
            .expect("blocks validated on construction")
    }

    /// `R Sigma^-1 = [[F, -D1], [D2, -F^T]]`.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        ComplexMatrix::from_blocks(&self.f, &-&self.d1, &self.d2, &-&self.f.transpose())
            .expect("blocks validated on construction")
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            d1: self.d1.scale(s),
            f: self.f.scale(s),
            d2: self.d2.scale(s),
        }
    }
}

/// Checked constructor under the procedure's naming.
pub fn assemble_generator(
    d1: ComplexMatrix,
    f: ComplexMatrix,
    d2: ComplexMatrix,
) -> Result<QuadraticGenerator> {
    QuadraticGenerator::new(d1, f, d2)
}

/// `Sigma = [[0, I], [-I, 0]]` of size `2n`.
pub fn sigma(n: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(n);
    let z = ComplexMatrix::zeros(n, n);
    ComplexMatrix::from_blocks(&z, &id, &-&id, &z).expect("square blocks")
}

/// `T = exp(R Sigma^-1)` in block form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub t11: ComplexMatrix,
    pub t12: ComplexMatrix,
    pub t21: ComplexMatrix,
    pub t22: ComplexMatrix,
}

impl TransferMatrix {
    pub fn from_blocks(
        t11: ComplexMatrix,
        t12: ComplexMatrix,
        t21: ComplexMatrix,
        t22: ComplexMatrix,
    ) -> Result<Self> {
        let n = t11.rows();
        for m in [&t11, &t12, &t21, &t22] {
            if m.shape() != (n, n) {
                return Err(EqoError::DimensionMismatch {
                    op: "transfer_matrix",
                    left: (n, n),
                    right: m.shape(),
                });
            }
        }
        Ok(Self { t11, t12, t21, t22 })
    }

    /// Splits a `2n x 2n` matrix into its four blocks.
    pub fn from_full(t: &ComplexMatrix) -> Result<Self> {
        if !t.is_square() || !t.rows().is_multiple_of(2) {
            return Err(EqoError::NotSquare {
                op: "transfer_matrix",
                rows: t.rows(),
                cols: t.cols(),
            });
        }
        let n = t.rows() / 2;
        Ok(Self {
            t11: t.block(0, 0, n, n),
            t12: t.block(0, n, n, n),
            t21: t.block(n, 0, n, n),
            t22: t.block(n, n, n, n),
        })
    }

    pub fn modes(&self) -> usize {
        self.t11.rows()
    }

    pub fn full(&self) -> ComplexMatrix {
        ComplexMatrix::from_blocks(&self.t11, &self.t12, &self.t21, &self.t22)
            .expect("blocks validated on construction")
    }

    fn scale(&self) -> f64 {
        self.full().max_abs().max(1.0)
    }

    fn t22_inverse(&self, tol: &Tolerances) -> Result<ComplexMatrix> {
        inverse_with_floor(&self.t22, tol.t22_pivot * self.scale())
    }
}

pub fn transfer_matrix(g: &QuadraticGenerator) -> Result<TransferMatrix> {
    TransferMatrix::from_full(&expm(&g.hamiltonian())?)
}

/// `max|T^T Sigma T - Sigma| / max(1, |T|)^2`.
pub fn symplectic_residual(t: &TransferMatrix) -> f64 {
    let full = t.full();
    let s = sigma(t.modes());
    let lhs = &(&full.transpose() * &s) * &full;
    (&lhs - &s).max_abs() / t.scale().powi(2)
}

/// Largest relative residual among `T11 = T22^-T + T12 T22^-1 T21` and the
/// three block identities implied by the symplectic constraint:
/// `T22^T T11 - T12^T T21 = I`, `T21^T T11 = T11^T T21`, `T22^T T12 = T12^T T22`.
pub fn block_relation_residual(t: &TransferMatrix) -> Result<f64> {
    block_relation_residual_with(t, &Tolerances::default())
}

pub fn block_relation_residual_with(t: &TransferMatrix, tol: &Tolerances) -> Result<f64> {
    let inv22 = t.t22_inverse(tol)?;
    let inv22_t = inv22.transpose();
    let chain = &(&t.t12 * &inv22) * &t.t21;
    let r1 = (&t.t11 - &(&inv22_t + &chain)).max_abs()
        / [t.t11.max_abs(), inv22_t.max_abs(), chain.max_abs(), 1.0]
            .into_iter()
            .fold(0.0, f64::max);

    let sq = t.scale().powi(2);
    let id = ComplexMatrix::identity(t.modes());
    let r2 = (&(&(&t.t22.transpose() * &t.t11) - &(&t.t12.transpose() * &t.t21)) - &id).max_abs() / sq;
    let r3 = (&(&t.t21.transpose() * &t.t11) - &(&t.t11.transpose() * &t.t21)).max_abs() / sq;
    let r4 = (&(&t.t22.transpose() * &t.t12) - &(&t.t12.transpose() * &t.t22)).max_abs() / sq;
    Ok([r1, r2, r3, r4].into_iter().fold(0.0, f64::max))
}

/// Parameters of the ordered form.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub w: ComplexMatrix,
    pub y: ComplexMatrix,
    pub z: ComplexMatrix,
    pub prefactor: Complex64,
    /// max |M - M^T| over W and Z before symmetrization.
    pub asymmetry: f64,
}

impl Factorization {
    /// Builds a factorization from its three blocks; the prefactor is
    /// derived as `exp(tr Y / 2)`.
    pub fn from_parts(w: ComplexMatrix, y: ComplexMatrix, z: ComplexMatrix) -> Result<Self> {
        let n = y.rows();
        for m in [&w, &y, &z] {
            if m.shape() != (n, n) {
                return Err(EqoError::DimensionMismatch {
                    op: "factorization",
                    left: (n, n),
                    right: m.shape(),
                });
            }
        }
        let asymmetry = w.asymmetry().max(z.asymmetry());
        let prefactor = (0.5 * y.trace()).exp();
        Ok(Self {
            w,
            y,
            z,
            prefactor,
            asymmetry,
        })
    }

    pub fn identity(n: usize) -> Self {
        let z = ComplexMatrix::zeros(n, n);
        Self {
            w: z.clone(),
            y: z.clone(),
            z,
            prefactor: Complex64::new(1.0, 0.0),
            asymmetry: 0.0,
        }
    }

    pub fn modes(&self) -> usize {
        self.y.rows()
    }

    /// `ln(prefactor)` on the branch tied to `Y`.
    pub fn log_prefactor(&self) -> Complex64 {
        0.5 * self.y.trace()
    }
}

pub fn gauss_decompose(t: &TransferMatrix) -> Result<Factorization> {
    gauss_decompose_with(t, &Tolerances::default())
}

pub fn gauss_decompose_with(t: &TransferMatrix, tol: &Tolerances) -> Result<Factorization> {
    let inv22 = t.t22_inverse(tol)?;
    let w = &t.t12 * &inv22;
    let z = &inv22 * &t.t21;
    let asymmetry = w.asymmetry().max(z.asymmetry());
    let y = -&logm(&t.t22.transpose())?;
    let prefactor = (0.5 * y.trace()).exp();
    Ok(Factorization {
        w: w.symmetrized(),
        y,
        z: z.symmetrized(),
        prefactor,
        asymmetry,
    })
}

/// `[[I, W], [0, I]] [[e^Y, 0], [0, e^-Y^T]] [[I, 0], [Z, I]]`.
pub fn reconstruct(f: &Factorization) -> Result<TransferMatrix> {
    let ey = expm(&f.y)?;
    let e_neg_yt = expm(&-&f.y.transpose())?;
    let t12 = &f.w * &e_neg_yt;
    let t21 = &e_neg_yt * &f.z;
    let t11 = &ey + &(&t12 * &f.z);
    TransferMatrix::from_blocks(t11, t12, t21, e_neg_yt)
}

/// `max|reconstruct(f) - T| / max(1, |T|)`.
pub fn reconstruct_residual(f: &Factorization, t: &TransferMatrix) -> Result<f64> {
    let back = reconstruct(f)?;
    Ok((&back.full() - &t.full()).max_abs() / t.scale())
}

/// Runs the whole procedure for a generator.
pub fn decompose(g: &QuadraticGenerator) -> Result<Factorization> {
    gauss_decompose(&transfer_matrix(g)?)
}
