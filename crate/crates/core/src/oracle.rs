//! Gaussian wavefunctions as a verification substrate.
//!
//! A state is `psi(x) = exp(-x A x^T / 2 + b x^T + c)` with `x` a row vector.
//! Quadratic exponentials map this family to itself, so an ordered form can
//! be checked two ways:
//!
//! * factor by factor, using the closed-form action of each piece
//!   (multiplication, substitution `x -> x e^Y`, Gaussian convolution);
//! * by integrating `d psi / d tau = A_hat psi` for `tau` in `[0, 1]`, which
//!   on the Gaussian family is a matrix Riccati equation for `A`, linear
//!   for `b` and a quadrature for `c`.
//!
//! Matching the three coefficients of `A_hat psi / psi` gives
//!
//! ```text
//! A' = -D1 + F A + A F^T - A D2 A
//! b' = b F^T - b D2 A
//! c' = b D2 b^T / 2 - tr(D2 A) / 2 + tr(F) / 2
//! ```
//!
//! The heat factor `exp(d Z d^T / 2)` is the `D1 = F = 0` case of the same
//! flow, which integrates in closed form to
//!
//! ```text
//! A -> (I + A Z)^-1 A,   b -> b (I + Z A)^-1,
//! c -> c + b (I + Z A)^-1 Z b^T / 2 - ln det(I + Z A) / 2
//! ```
//!
//! Both the closed form and the flow are checked against direct quadrature
//! of the one-mode heat kernel in the tests below.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{EqoError, Result};
use crate::matrix::{eigenvalues, expm, inverse_with_floor, ComplexMatrix, DEFAULT_PIVOT_TOL};
use crate::reorder::{Factorization, QuadraticGenerator};

/// |A| beyond which the Riccati flow is declared to have blown up.
pub const FLOW_BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    a: ComplexMatrix,
    b: Vec<Complex64>,
    c: Complex64,
}

impl GaussianState {
    /// Validated, normalizable state: `A` symmetric with positive-definite
    /// real part.
    pub fn new(a: ComplexMatrix, b: Vec<Complex64>, c: Complex64) -> Result<Self> {
        let s = Self::from_parts(a, b, c)?;
        let deviation = s.a.asymmetry();
        if deviation > 1e-13 * s.a.max_abs().max(1.0) {
            return Err(EqoError::Asymmetry { name: "A", deviation });
        }
        let re = s.a.map(|z| Complex64::new(z.re, 0.0)).symmetrized();
        if let Some(bad) = eigenvalues(&re)?.into_iter().find(|l| l.re <= 0.0) {
            return Err(EqoError::InvalidParameter(format!(
                "Re(A) is not positive definite (eigenvalue {:.3e})",
                bad.re
            )));
        }
        Ok(s)
    }

    /// Shape-checked state with no normalizability requirement; intermediate
    /// states of an operator chain need not be normalizable.
    pub fn from_parts(a: ComplexMatrix, b: Vec<Complex64>, c: Complex64) -> Result<Self> {
        let n = a.rows();
        if a.shape() != (n, n) || b.len() != n {
            return Err(EqoError::DimensionMismatch {
                op: "gaussian_state",
                left: a.shape(),
                right: (1, b.len()),
            });
        }
        if !(c.re.is_finite() && c.im.is_finite()) || b.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(EqoError::InvalidParameter("non-finite Gaussian parameter".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Unit-normalized ground state: `A = I`, `b = 0`, `c = -(n/4) ln pi`.
    pub fn vacuum(n: usize) -> Self {
        Self {
            a: ComplexMatrix::identity(n),
            b: vec![Complex64::new(0.0, 0.0); n],
            c: Complex64::new(-(n as f64) / 4.0 * PI.ln(), 0.0),
        }
    }

    pub fn modes(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// `psi(x)` at a (possibly complex) point.
    pub fn evaluate(&self, x: &[Complex64]) -> Complex64 {
        assert_eq!(x.len(), self.modes(), "point has wrong dimension");
        let ax = row_times(x, &self.a);
        let quad: Complex64 = ax.iter().zip(x).map(|(p, q)| p * q).sum();
        let lin: Complex64 = self.b.iter().zip(x).map(|(p, q)| p * q).sum();
        (-0.5 * quad + lin + self.c).exp()
    }

    /// `integral |psi|^2 dx`; requires `Re(A)` positive definite.
    pub fn norm_squared(&self) -> Result<f64> {
        let n = self.modes();
        let p = self.a.map(|z| Complex64::new(z.re, 0.0)).symmetrized();
        let q: Vec<Complex64> = self.b.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
        let p_inv = p.inverse()?;
        let quad: Complex64 = row_times(&q, &p_inv).iter().zip(&q).map(|(u, v)| u * v).sum();
        let det = p.det()?.re;
        if det <= 0.0 {
            return Err(EqoError::InvalidParameter("state is not normalizable".into()));
        }
        Ok(PI.powf(n as f64 / 2.0) / det.sqrt() * (quad.re + 2.0 * self.c.re).exp())
    }

    /// Largest coefficient difference; `c` is compared modulo `2 pi i`.
    pub fn distance(&self, other: &Self) -> f64 {
        let da = (&self.a - &other.a).max_abs();
        let db = self
            .b
            .iter()
            .zip(&other.b)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        let mut dc = self.c - other.c;
        dc.im -= 2.0 * PI * (dc.im / (2.0 * PI)).round();
        da.max(db).max(dc.norm())
    }

    fn symmetrize(mut self) -> Self {
        self.a = self.a.symmetrized();
        self
    }
}

fn row_times(v: &[Complex64], m: &ComplexMatrix) -> Vec<Complex64> {
    (0..m.cols()).map(|j| v.iter().enumerate().map(|(i, x)| x * m[(i, j)]).sum()).collect()
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(p, q)| p * q).sum()
}

/// `exp(-x W x^T / 2)`: `A -> A + W`.
pub fn apply_quadratic_phase(w: &ComplexMatrix, s: &GaussianState) -> GaussianState {
    GaussianState {
        a: &s.a + w,
        b: s.b.clone(),
        c: s.c,
    }
    .symmetrize()
}

/// `exp(x Y d^T) h(x) = h(x e^Y)`: `A -> e^Y A e^{Y^T}`, `b -> b e^{Y^T}`.
pub fn apply_dilation(y: &ComplexMatrix, s: &GaussianState) -> Result<GaussianState> {
    let ey = expm(y)?;
    let eyt = ey.transpose();
    Ok(GaussianState {
        a: &(&ey * &s.a) * &eyt,
        b: row_times(&s.b, &eyt),
        c: s.c,
    }
    .symmetrize())
}

/// `exp(d Z d^T / 2)`: Gaussian convolution in closed form.
///
/// `ln det(I + Z A)` is taken as the sum of `ln(1 + mu)` over the eigenvalues
/// `mu` of `Z A`, which is the value continued along `Z -> s Z`, `s` in `[0, 1]`.
pub fn apply_heat(z: &ComplexMatrix, s: &GaussianState) -> Result<GaussianState> {
    let n = s.modes();
    let id = ComplexMatrix::identity(n);
    let za = z * &s.a;
    let m = &id + &za;
    let m_inv = inverse_with_floor(&m, DEFAULT_PIVOT_TOL * m.max_abs().max(1.0))?;
    let a = &m_inv.transpose() * &s.a;
    let b = row_times(&s.b, &m_inv);
    let mz = &m_inv * z;
    let shift = 0.5 * dot(&row_times(&s.b, &mz), &s.b);
    let log_det: Complex64 = eigenvalues(&za)?.into_iter().map(|mu| (1.0 + mu).ln()).sum();
    Ok(GaussianState {
        a,
        b,
        c: s.c + shift - 0.5 * log_det,
    }
    .symmetrize())
}

/// `exp(s d^T) h(x) = h(x + s)`.
pub fn apply_shift(shift: &[Complex64], s: &GaussianState) -> GaussianState {
    let sa = row_times(shift, &s.a);
    GaussianState {
        a: s.a.clone(),
        b: s.b.iter().zip(&sa).map(|(b, q)| b - q).collect(),
        c: s.c + dot(&s.b, shift) - 0.5 * dot(&sa, shift),
    }
}

/// Applies the ordered form right to left: heat, dilation, phase, then the
/// scalar prefactor (added to `c` as `tr Y / 2`).
pub fn apply_factorization(f: &Factorization, s: &GaussianState) -> Result<GaussianState> {
    let heated = apply_heat(&f.z, s)?;
    let dilated = apply_dilation(&f.y, &heated)?;
    let mut out = apply_quadratic_phase(&f.w, &dilated);
    out.c += f.log_prefactor();
    Ok(out)
}

/// Time derivative of `(A, b, c)` under the generator.
#[derive(Debug, Clone)]
pub struct FlowRate {
    pub a: ComplexMatrix,
    pub b: Vec<Complex64>,
    pub c: Complex64,
}

pub fn flow_rate(g: &QuadraticGenerator, s: &GaussianState) -> FlowRate {
    let (d1, f, d2) = (g.d1(), g.f(), g.d2());
    let fa = f * &s.a;
    let ad2 = &s.a * d2;
    let a = &(&(&fa + &fa.transpose()) - d1) - &(&ad2 * &s.a);
    let d2a = d2 * &s.a;
    let bft = row_times(&s.b, &f.transpose());
    let bd2a = row_times(&s.b, &d2a);
    let b = bft.iter().zip(&bd2a).map(|(p, q)| p - q).collect();
    let c = 0.5 * dot(&row_times(&s.b, d2), &s.b) - 0.5 * d2a.trace() + 0.5 * f.trace();
    FlowRate { a, b, c }
}

fn step(s: &GaussianState, k: &FlowRate, h: f64) -> GaussianState {
    GaussianState {
        a: &s.a + &(&k.a * h),
        b: s.b.iter().zip(&k.b).map(|(p, q)| p + q * h).collect(),
        c: s.c + k.c * h,
    }
}

/// Integrates the state under the un-factored generator from `tau = 0` to
/// `tau = 1` with `steps` classical fourth-order Runge-Kutta steps.
pub fn evolve_generator(g: &QuadraticGenerator, s: &GaussianState, steps: usize) -> Result<GaussianState> {
    if steps == 0 {
        return Err(EqoError::InvalidParameter("steps must be positive".into()));
    }
    if g.modes() != s.modes() {
        return Err(EqoError::DimensionMismatch {
            op: "evolve_generator",
            left: (g.modes(), g.modes()),
            right: s.a.shape(),
        });
    }
    let h = 1.0 / steps as f64;
    let mut cur = s.clone();
    for i in 0..steps {
        let k1 = flow_rate(g, &cur);
        let k2 = flow_rate(g, &step(&cur, &k1, h / 2.0));
        let k3 = flow_rate(g, &step(&cur, &k2, h / 2.0));
        let k4 = flow_rate(g, &step(&cur, &k3, h));
        let a = &cur.a + &(&(&(&k1.a + &(&k2.a * 2.0)) + &(&(&k3.a * 2.0) + &k4.a)) * (h / 6.0));
        let b = (0..cur.b.len())
            .map(|j| cur.b[j] + (k1.b[j] + 2.0 * k2.b[j] + 2.0 * k3.b[j] + k4.b[j]) * (h / 6.0))
            .collect();
        let c = cur.c + (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c) * (h / 6.0);
        cur = GaussianState { a, b, c }.symmetrize();
        let norm = cur.a.max_abs();
        if !(norm <= FLOW_BLOWUP) || !cur.c.re.is_finite() || !cur.c.im.is_finite() {
            return Err(EqoError::FlowSingular {
                tau: (i + 1) as f64 * h,
                norm,
            });
        }
    }
    Ok(cur)
}

/// Uniform grid for the one-mode quadrature oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

/// Evaluates `exp(c0 d^2) h` at each `x` by trapezoidal quadrature of
///
/// ```text
/// (4 pi c0)^-1/2  integral exp(-(y - x)^2 / (4 c0)) h(y) dy
/// ```
///
/// over `grid`, with the principal square root. Used only as a test oracle.
pub fn quadrature_heat_1d(c0: Complex64, grid: Grid, s: &GaussianState, xs: &[f64]) -> Result<Vec<Complex64>> {
    if s.modes() != 1 {
        return Err(EqoError::InvalidParameter("quadrature oracle is one-mode only".into()));
    }
    if grid.points < 2 || !(grid.hi > grid.lo) {
        return Err(EqoError::InvalidParameter("grid needs at least two points".into()));
    }
    let kernel_rate = 1.0 / (4.0 * c0);
    if kernel_rate.re <= 0.0 {
        return Err(EqoError::DivergentIntegrand(format!(
            "Re(1/(4 c0)) = {:.3e} is not positive",
            kernel_rate.re
        )));
    }
    let norm = (4.0 * PI * c0).sqrt().inv();
    let h = grid.spacing();
    xs.iter()
        .map(|&x| {
            let f = |y: f64| {
                let d = Complex64::new(y - x, 0.0);
                (-(d * d) * kernel_rate).exp() * s.evaluate(&[Complex64::new(y, 0.0)])
            };
            let (first, last) = (f(grid.lo), f(grid.hi));
            let mut peak = first.norm().max(last.norm());
            let mut sum = 0.5 * (first + last);
            for k in 1..grid.points - 1 {
                let v = f(grid.lo + k as f64 * h);
                peak = peak.max(v.norm());
                sum += v;
            }
            if first.norm().max(last.norm()) > 1e-12 * peak {
                return Err(EqoError::DivergentIntegrand(format!(
                    "integrand at the grid edge is {:.3e} of its peak at x = {x}",
                    first.norm().max(last.norm()) / peak
                )));
            }
            Ok(norm * sum * h)
        })
        .collect()
}
