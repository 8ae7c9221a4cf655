//! Numerical checks that the ordered form carries no stray scalar factor.
//!
//! Along `T(t) = exp(t R Sigma^-1)` the matrix element
//! `v(t) = <x=0| exp(t A_hat) |d=0>` obeys
//!
//! ```text
//! v'(t) = -v(t) tr[(D2 T12(t) - F^T T22(t)) T22(t)^-1] / 2,    v(0) = 1,
//! ```
//!
//! whose solution is `exp(-ln det T22(t) / 2)`. At `t = 1` this must equal
//! the ordered form's prefactor `exp(tr Y / 2)`. The ODE is integrated
//! numerically here and compared against both the closed form (with
//! `ln det` continued along the path) and the pipeline prefactor.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{EqoError, Result};
use crate::matrix::{expm, inverse_with_floor, ComplexMatrix};
use crate::reorder::{decompose, QuadraticGenerator, TransferMatrix};

/// Default step count for the v(t) integration.
pub const DEFAULT_STEPS: usize = 4000;

/// Tolerance for `|v(1) - prefactor|`.
pub const PREFACTOR_TOL: f64 = 1e-7;

/// |det T22(t)| below which the path counts as singular.
const PATH_DET_FLOOR: f64 = 1e-10;

/// `max_t |(T(t+h) - T(t-h)) / 2h - (R Sigma^-1) T(t)|` over the interior of a
/// uniform grid on `[0, 1]` with `steps` intervals. Second order in `h`.
pub fn t_matrix_ode_residual(g: &QuadraticGenerator, steps: usize) -> Result<f64> {
    if steps < 2 {
        return Err(EqoError::InvalidParameter("need at least two grid intervals".into()));
    }
    let gen = g.hamiltonian();
    let h = 1.0 / steps as f64;
    let ts: Vec<ComplexMatrix> = (0..=steps)
        .map(|k| expm(&(&gen * (k as f64 * h))))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for k in 1..steps {
        let diff = &(&ts[k + 1] - &ts[k - 1]) * (0.5 / h);
        worst = worst.max((&diff - &(&gen * &ts[k])).max_abs());
    }
    Ok(worst)
}

/// Samples of the v(t) integration.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrace {
    pub times: Vec<f64>,
    pub v_values: Vec<Complex64>,
    /// `ln det T22(t)`, continued along the grid without 2 pi jumps.
    pub t22_logdet: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VOdeCheck {
    pub v_final: Complex64,
    /// `exp(-ln det T22(1) / 2)` with the path-continued logarithm.
    pub closed_form: Complex64,
    pub residual: f64,
    /// Whether the path-continued `ln det T22(1)` lands on the principal
    /// `tr ln T22(1)` used by the decomposition. `None` when the principal
    /// logarithm does not exist.
    pub principal_branch_agrees: Option<bool>,
    pub trace: OdeTrace,
}

struct PathPoint {
    rate: Complex64,
    logdet: Complex64,
}

fn path_point(g: &QuadraticGenerator, t: f64, gen: &ComplexMatrix) -> Result<PathPoint> {
    let tm = TransferMatrix::from_full(&expm(&(gen * t))?)?;
    let det = tm.t22.det()?;
    if det.norm() < PATH_DET_FLOOR {
        return Err(EqoError::PathSingular {
            time: t,
            magnitude: det.norm(),
        });
    }
    let inv22 = inverse_with_floor(&tm.t22, 0.0)?;
    let dt22 = &(g.d2() * &tm.t12) - &(&g.f().transpose() * &tm.t22);
    Ok(PathPoint {
        rate: -0.5 * (&dt22 * &inv22).trace(),
        logdet: det.ln(),
    })
}

fn unwrap_to(prev: Complex64, mut next: Complex64) -> Complex64 {
    next.im -= 2.0 * PI * ((next.im - prev.im) / (2.0 * PI)).round();
    next
}

/// Integrates v(t) on `[0, 1]` with `steps` fourth-order Runge-Kutta steps.
pub fn v_ode_check(g: &QuadraticGenerator, steps: usize) -> Result<VOdeCheck> {
    if steps == 0 {
        return Err(EqoError::InvalidParameter("steps must be positive".into()));
    }
    let gen = g.hamiltonian();
    let h = 1.0 / steps as f64;
    // Half-step grid: RK4 evaluates at t, t + h/2, t + h.
    let points: Vec<PathPoint> = (0..=2 * steps)
        .map(|k| path_point(g, k as f64 * h / 2.0, &gen))
        .collect::<Result<_>>()?;

    let mut times = Vec::with_capacity(steps + 1);
    let mut v_values = Vec::with_capacity(steps + 1);
    let mut logdet = Vec::with_capacity(steps + 1);
    let mut v = Complex64::new(1.0, 0.0);
    let mut ld = points[0].logdet;
    times.push(0.0);
    v_values.push(v);
    logdet.push(ld);
    for i in 0..steps {
        let (r0, rm, r1) = (points[2 * i].rate, points[2 * i + 1].rate, points[2 * i + 2].rate);
        let k1 = r0 * v;
        let k2 = rm * (v + 0.5 * h * k1);
        let k3 = rm * (v + 0.5 * h * k2);
        let k4 = r1 * (v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ld = unwrap_to(unwrap_to(ld, points[2 * i + 1].logdet), points[2 * i + 2].logdet);
        times.push((i + 1) as f64 * h);
        v_values.push(v);
        logdet.push(ld);
    }
    let closed_form = (-0.5 * ld).exp();
    let t22 = TransferMatrix::from_full(&expm(&gen)?)?.t22;
    let principal_branch_agrees = crate::matrix::logm(&t22.transpose())
        .ok()
        .map(|l| (l.trace() - ld).norm() < 1e-8 * ld.norm().max(1.0));
    Ok(VOdeCheck {
        v_final: v,
        closed_form,
        residual: (v - closed_form).norm(),
        principal_branch_agrees,
        trace: OdeTrace {
            times,
            v_values,
            t22_logdet: logdet,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorReport {
    pub v_final: Complex64,
    pub prefactor: Complex64,
    pub residual: f64,
    pub consistent: bool,
}

/// Compares the integrated `v(1)` with the pipeline prefactor.
pub fn prefactor_report(g: &QuadraticGenerator, steps: usize) -> Result<PrefactorReport> {
    let f = decompose(g)?;
    let check = v_ode_check(g, steps)?;
    let residual = (check.v_final - f.prefactor).norm();
    Ok(PrefactorReport {
        v_final: check.v_final,
        prefactor: f.prefactor,
        residual,
        consistent: residual < PREFACTOR_TOL,
    })
}

/// True iff `|v(1) - prefactor| < 1e-7` at the default step count.
pub fn prefactor_consistency(g: &QuadraticGenerator) -> Result<bool> {
    Ok(prefactor_report(g, DEFAULT_STEPS)?.consistent)
}
