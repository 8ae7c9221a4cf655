/// Name of the environment variable that overrides the residual tolerance.
pub const TOL_ENV: &str = "EQO_DEFAULT_TOL";

/// Numerical thresholds shared by the pipeline and its checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance on symplectic and block-relation residuals.
    pub residual: f64,
    /// Absolute tolerance on D1/D2 symmetry, scaled by max(1, |D|).
    pub symmetry: f64,
    /// T22 counts as singular once its smallest LU pivot falls below
    /// `t22_pivot * max(1, |T|)`.
    pub t22_pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            symmetry: 1e-13,
            t22_pivot: 1e-7,
        }
    }
}

impl Tolerances {
    /// Defaults, with `residual` taken from `EQO_DEFAULT_TOL` when it parses
    /// as a positive float.
    pub fn from_env() -> Self {
        let mut tol = Self::default();
        if let Some(v) = std::env::var(TOL_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| *v > 0.0 && v.is_finite())
        {
            tol.residual = v;
        }
        tol
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = residual;
        self
    }

    /// Reconstruction is one product deeper than the residual checks.
    pub fn reconstruct(&self) -> f64 {
        10.0 * self.residual
    }
}
