//! Dense complex matrices and the handful of matrix functions the
//! reordering pipeline needs.
//!
//! Everything here is small and dense: the intended regime is a few modes,
//! so matrices are at most a few dozen rows. Storage is row-major.
//!
//! Branch convention: `logm` and `sqrtm` always return the principal
//! branch. An eigenvalue on the closed negative real axis (including zero)
//! is rejected with [`EqoError::BranchCut`] rather than resolved silently.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{EqoError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative pivot threshold used by [`ComplexMatrix::inverse`].
pub const DEFAULT_PIVOT_TOL: f64 = 1e-13;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong counts and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(EqoError::EntryCount {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(EqoError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must share a length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(EqoError::DimensionMismatch {
                op: "from_rows",
                left: (1, c),
                right: (1, bad.len()),
            });
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    /// Real-valued convenience constructor, mostly for tests and fixtures.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let c = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self {
            rows: rows.len(),
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// 1x1 matrix holding `z`.
    pub fn scalar(z: Complex64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |M - M^T|; zero for exactly symmetric input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        worst
    }

    /// (M + M^T) / 2.
    pub fn symmetrized(&self) -> Self {
        let t = self.transpose();
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + t[(i, j)]))
    }

    /// Copy of the `nr x nc` block with top-left corner at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Assembles `[[a, b], [c, d]]`.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        if a.rows != b.rows || c.rows != d.rows {
            return Err(EqoError::DimensionMismatch {
                op: "from_blocks",
                left: a.shape(),
                right: b.shape(),
            });
        }
        if a.cols != c.cols || b.cols != d.cols {
            return Err(EqoError::DimensionMismatch {
                op: "from_blocks",
                left: a.shape(),
                right: c.shape(),
            });
        }
        let (r, cc) = (a.rows + c.rows, a.cols + b.cols);
        Ok(Self::from_fn(r, cc, |i, j| match (i < a.rows, j < a.cols) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - a.cols)],
            (false, true) => c[(i - a.rows, j)],
            (false, false) => d[(i - a.rows, j - a.cols)],
        }))
    }

    /// Checked matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        mat_mul(self, other)
    }

    pub fn inverse(&self) -> Result<Self> {
        mat_inv(self)
    }

    pub fn det(&self) -> Result<Complex64> {
        mat_det(self)
    }

    fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(EqoError::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(
            self.shape(),
            other.shape(),
            "{op}: shape mismatch {:?} vs {:?}",
            self.shape(),
            other.shape()
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator impls panic on shape mismatch; use `mat_mul` for a checked product.

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        match mat_mul(self, rhs) {
            Ok(m) => m,
            Err(e) => panic!("{e}"),
        }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, "add", |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, s: Complex64) -> ComplexMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, s: f64) -> ComplexMatrix {
        self.map(|z| z * s)
    }
}

/// Standard matrix product. Errors name both shapes on mismatch.
pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(EqoError::DimensionMismatch {
            op: "mat_mul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            let brow = b.row(k);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        a.require_square("lu")?;
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[x * n + k].norm().total_cmp(&lu[y * n + k].norm()))
                .unwrap_or(k);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            if pivot == ZERO {
                continue;
            }
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in k + 1..n {
                    let ukj = lu[k * n + j];
                    lu[i * n + j] -= factor * ukj;
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    /// Smallest pivot modulus (diagonal of U).
    pub fn min_pivot(&self) -> f64 {
        (0..self.n)
            .map(|k| self.lu[k * self.n + k].norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn det(&self) -> Complex64 {
        (0..self.n).fold(Complex64::new(self.sign, 0.0), |acc, k| acc * self.lu[k * self.n + k])
    }

    /// Solves `A X = B`. Assumes nonzero pivots; callers check `min_pivot` first.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        assert_eq!(b.rows, n, "lu solve: rhs has wrong row count");
        let m = b.cols;
        let mut x = ComplexMatrix::from_fn(n, m, |i, j| b[(self.perm[i], j)]);
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                for j in 0..m {
                    let xkj = x[(k, j)];
                    x[(i, j)] -= l * xkj;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                for j in 0..m {
                    let xkj = x[(k, j)];
                    x[(i, j)] -= u * xkj;
                }
            }
            let d = self.lu[i * n + i];
            for j in 0..m {
                x[(i, j)] /= d;
            }
        }
        x
    }
}

/// Inverse, failing when a pivot drops below `floor` in absolute terms.
pub fn inverse_with_floor(a: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let lu = Lu::new(a)?;
    let pivot = lu.min_pivot();
    if !(pivot > floor) {
        return Err(EqoError::SingularMatrix {
            pivot,
            threshold: floor,
        });
    }
    Ok(lu.solve(&ComplexMatrix::identity(a.rows)))
}

/// Inverse with the default relative pivot threshold `1e-13 * max|a_ij|`.
pub fn mat_inv(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    inverse_with_floor(a, DEFAULT_PIVOT_TOL * a.max_abs())
}

/// Determinant by pivoted elimination; closed form for 1x1 and 2x2.
/// Returns zero for singular input.
pub fn mat_det(a: &ComplexMatrix) -> Result<Complex64> {
    a.require_square("det")?;
    Ok(match a.rows {
        0 => ONE,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        _ => Lu::new(a)?.det(),
    })
}

// Padé(13,13) numerator coefficients; the denominator uses the same ones
// with alternating signs.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring around a Padé(13,13) kernel.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.require_square("expm")?;
    let n = a.rows;
    if n == 0 {
        return Ok(a.clone());
    }
    if n == 1 {
        return Ok(ComplexMatrix::scalar(a[(0, 0)].exp()));
    }
    let norm = a.norm_one();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let x = a * 2f64.powi(-squarings);

    let id = ComplexMatrix::identity(n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let b = &PADE13;
    let lin = |m: &[(&ComplexMatrix, f64)]| {
        m.iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, (mat, c)| &acc + &(*mat * *c))
    };
    let u_inner = lin(&[(&x6, b[13]), (&x4, b[11]), (&x2, b[9])]);
    let u_tail = lin(&[(&x6, b[7]), (&x4, b[5]), (&x2, b[3]), (&id, b[1])]);
    let u = &x * &(&(&x6 * &u_inner) + &u_tail);
    let v_inner = lin(&[(&x6, b[12]), (&x4, b[10]), (&x2, b[8])]);
    let v_tail = lin(&[(&x6, b[6]), (&x4, b[4]), (&x2, b[2]), (&id, b[0])]);
    let v = &(&x6 * &v_inner) + &v_tail;

    let lu = Lu::new(&(&v - &u))?;
    let mut r = lu.solve(&(&v + &u));
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Complex Schur form `A = Q U Q^H` with `U` upper triangular.
fn schur(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows;
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[(i, j)]);
    let (q, t) = nalgebra::linalg::Schur::new(m).unpack();
    let q = ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)]);
    let u = ComplexMatrix::from_fn(n, n, |i, j| if i > j { ZERO } else { t[(i, j)] });
    (q, u)
}

/// Eigenvalues, read off the diagonal of the complex Schur form.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    a.require_square("eigenvalues")?;
    if a.rows <= 1 {
        return Ok(a.data.clone());
    }
    let (_, u) = schur(a);
    Ok((0..a.rows).map(|k| u[(k, k)]).collect())
}

fn check_branch(u: &ComplexMatrix, scale: f64) -> Result<()> {
    let tol = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    for k in 0..u.rows {
        let lambda = u[(k, k)];
        if lambda.re <= tol && lambda.im.abs() <= tol {
            return Err(EqoError::BranchCut { eigenvalue: lambda });
        }
    }
    Ok(())
}

/// Principal square root of an upper-triangular matrix with no eigenvalue
/// on the closed negative real axis.
fn sqrt_upper(u: &ComplexMatrix) -> ComplexMatrix {
    let n = u.rows;
    let mut r = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = u[(j, j)].sqrt();
        for i in (0..j).rev() {
            let s: Complex64 = (i + 1..j).map(|k| r[(i, k)] * r[(k, j)]).sum();
            r[(i, j)] = (u[(i, j)] - s) / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Principal matrix square root via the Schur method.
pub fn sqrtm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.require_square("sqrtm")?;
    if a.rows == 0 {
        return Ok(a.clone());
    }
    if a.rows == 1 {
        check_branch(a, a.max_abs())?;
        return Ok(ComplexMatrix::scalar(a[(0, 0)].sqrt()));
    }
    let (q, u) = schur(a);
    check_branch(&u, a.max_abs())?;
    let r = sqrt_upper(&u);
    Ok(&(&q * &r) * &q.adjoint())
}

/// Principal matrix logarithm by inverse scaling and squaring on the Schur
/// factor, finished with the series `log U = 2 atanh((U - I)(U + I)^-1)`.
pub fn logm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.require_square("logm")?;
    let n = a.rows;
    if n == 0 {
        return Ok(a.clone());
    }
    if n == 1 {
        check_branch(a, a.max_abs())?;
        return Ok(ComplexMatrix::scalar(a[(0, 0)].ln()));
    }
    let (q, mut u) = schur(a);
    check_branch(&u, a.max_abs())?;
    let id = ComplexMatrix::identity(n);
    let mut halvings = 0;
    while (&u - &id).norm_one() > 0.25 && halvings < 64 {
        u = sqrt_upper(&u);
        halvings += 1;
    }
    // U - I and U + I commute, so the left solve equals (U - I)(U + I)^-1.
    let s = Lu::new(&(&u + &id))?.solve(&(&u - &id));
    let s2 = &s * &s;
    let mut term = s.clone();
    let mut sum = s.clone();
    for k in 1..80 {
        term = &term * &s2;
        let piece = &term * (1.0 / (2 * k + 1) as f64);
        sum = &sum + &piece;
        if piece.max_abs() <= f64::EPSILON * 1e-3 * sum.max_abs().max(1e-300) {
            break;
        }
    }
    let log_u = &sum * 2f64.powi(halvings + 1);
    Ok(&(&q * &log_u) * &q.adjoint())
}

/// Analytic functions evaluated through exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFunction {
    Cos,
    Sin,
    Tan,
    Cosh,
    Sinh,
}

pub fn analytic_matrix_fn(a: &ComplexMatrix, f: MatrixFunction) -> Result<ComplexMatrix> {
    a.require_square("analytic_matrix_fn")?;
    let i = Complex64::i();
    let half = Complex64::new(0.5, 0.0);
    let pair = |s: Complex64| -> Result<(ComplexMatrix, ComplexMatrix)> {
        Ok((expm(&a.scale(s))?, expm(&a.scale(-s))?))
    };
    match f {
        MatrixFunction::Cos => {
            let (p, m) = pair(i)?;
            Ok((&p + &m).scale(half))
        }
        MatrixFunction::Sin => {
            let (p, m) = pair(i)?;
            Ok((&p - &m).scale(-half * i))
        }
        MatrixFunction::Cosh => {
            let (p, m) = pair(ONE)?;
            Ok((&p + &m).scale(half))
        }
        MatrixFunction::Sinh => {
            let (p, m) = pair(ONE)?;
            Ok((&p - &m).scale(half))
        }
        MatrixFunction::Tan => {
            let (p, m) = pair(i)?;
            let cos = (&p + &m).scale(half);
            let sin = (&p - &m).scale(-half * i);
            // Scale by the (cos, sin) pair: cos alone is its own scale in 1x1.
            let floor = DEFAULT_PIVOT_TOL * cos.max_abs().max(sin.max_abs());
            let cos_inv = inverse_with_floor(&cos, floor).map_err(|e| match e {
                EqoError::SingularMatrix { pivot, .. } => EqoError::Singularity {
                    function: "tan",
                    pivot,
                },
                other => other,
            })?;
            Ok(&sin * &cos_inv)
        }
    }
}
