//! Named operators with known closed-form reorderings.
//!
//! Each constructor returns the generator; the `expected_*` functions build
//! the printed closed-form answers independently of the general pipeline,
//! so the two can be compared.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::closed_form::sinhc;
use crate::error::{EqoError, Result};
use crate::matrix::{analytic_matrix_fn, expm, logm, ComplexMatrix, MatrixFunction};
use crate::reorder::{Factorization, QuadraticGenerator, TransferMatrix};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A catalog entry: its name, the parameters it was built from, and the
/// resulting generator.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedOperator {
    pub name: &'static str,
    pub params: BTreeMap<&'static str, f64>,
    pub generator: QuadraticGenerator,
}

/// Catalog names and their parameter keys, in CLI order.
pub const ENTRIES: [(&str, &[&str]); 4] = [
    ("harmonic_time_displacement", &["t"]),
    ("squeeze_1d", &["z1", "z2"]),
    ("two_mode_squeeze", &["re_g", "im_g"]),
    ("coupled_oscillator", &["t", "lambda"]),
];

/// `exp[-it (x^2 - d^2) / 2]`: `a = -it`, `b = it`, `c = 0`.
pub fn harmonic_time_displacement(t: f64) -> NamedOperator {
    NamedOperator {
        name: "harmonic_time_displacement",
        params: BTreeMap::from([("t", t)]),
        generator: QuadraticGenerator::one_mode(c(0.0, -t), c(0.0, t), c(0.0, 0.0)),
    }
}

/// `exp[-z1 (x d + 1/2) + i z2 (x^2 + d^2) / 2]`: `a = b = i z2`, `c = -z1`.
pub fn squeeze_1d(z1: f64, z2: f64) -> NamedOperator {
    NamedOperator {
        name: "squeeze_1d",
        params: BTreeMap::from([("z1", z1), ("z2", z2)]),
        generator: QuadraticGenerator::one_mode(c(0.0, z2), c(0.0, z2), c(-z1, 0.0)),
    }
}

/// `[[0, 1], [1, 0]]`.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// Change of basis `(a^+, a) = (x, d) N` with `N = [[I, I], [-I, I]] / sqrt 2`.
pub fn ladder_basis(n: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let id = &ComplexMatrix::identity(n) * s;
    ComplexMatrix::from_blocks(&id, &id, &-&id, &id).expect("square blocks")
}

/// `exp[g a1 a2 - g* a1^+ a2^+]`, with `R = N diag(-g* sigma, g sigma) N^-1`.
pub fn two_mode_squeeze(g: Complex64) -> Result<NamedOperator> {
    let sx = pauli_x();
    let zero = ComplexMatrix::zeros(2, 2);
    let k = ComplexMatrix::from_blocks(&sx.scale(-g.conj()), &zero, &zero, &sx.scale(g))?;
    let n = ladder_basis(2);
    let r = &(&n * &k) * &n.inverse()?;
    let generator = QuadraticGenerator::new(r.block(0, 0, 2, 2), r.block(0, 2, 2, 2), r.block(2, 2, 2, 2))?;
    Ok(NamedOperator {
        name: "two_mode_squeeze",
        params: BTreeMap::from([("re_g", g.re), ("im_g", g.im)]),
        generator,
    })
}

/// `M = [[1, lambda], [lambda, 1]]`.
pub fn coupling_matrix(lambda: f64) -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[1.0, lambda], &[lambda, 1.0]])
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(EqoError::InvalidParameter(format!(
            "coupling lambda = {lambda} outside [-1, 1]"
        )))
    }
}

/// Time displacement of two oscillators coupled through `lambda x1 x2`:
/// `R = [[-itM, 0], [0, itI]]`.
pub fn coupled_oscillator(t: f64, lambda: f64) -> Result<NamedOperator> {
    check_lambda(lambda)?;
    let generator = QuadraticGenerator::new(
        coupling_matrix(lambda).scale(c(0.0, -t)),
        ComplexMatrix::zeros(2, 2),
        ComplexMatrix::identity(2).scale(c(0.0, t)),
    )?;
    Ok(NamedOperator {
        name: "coupled_oscillator",
        params: BTreeMap::from([("t", t), ("lambda", lambda)]),
        generator,
    })
}

/// `sqrt(M) = [[cos w, sin w], [sin w, cos w]]` with `w = asin(lambda) / 2`.
pub fn sqrt_m_closed_form(lambda: f64) -> Result<ComplexMatrix> {
    check_lambda(lambda)?;
    let w = 0.5 * lambda.asin();
    Ok(ComplexMatrix::from_real(&[&[w.cos(), w.sin()], &[w.sin(), w.cos()]]))
}

/// Looks up a catalog entry by name. Missing parameters default to zero;
/// unknown keys are rejected.
pub fn by_name(name: &str, params: &BTreeMap<String, f64>) -> Result<NamedOperator> {
    let keys = ENTRIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
        .ok_or_else(|| EqoError::InvalidParameter(format!("unknown catalog operator '{name}'")))?;
    if let Some(bad) = params.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(EqoError::InvalidParameter(format!(
            "'{name}' takes parameters {keys:?}, got '{bad}'"
        )));
    }
    let p = |k: &str| params.get(k).copied().unwrap_or(0.0);
    match name {
        "harmonic_time_displacement" => Ok(harmonic_time_displacement(p("t"))),
        "squeeze_1d" => Ok(squeeze_1d(p("z1"), p("z2"))),
        "two_mode_squeeze" => two_mode_squeeze(c(p("re_g"), p("im_g"))),
        "coupled_oscillator" => coupled_oscillator(p("t"), p("lambda")),
        _ => unreachable!("name validated against ENTRIES"),
    }
}

/// Printed one-mode time-displacement answer:
/// `W = Z = i tan t`, `Y = -ln cos t`, prefactor `(cos t)^-1/2`.
pub fn expected_time_displacement(t: f64) -> Factorization {
    let tan = ComplexMatrix::scalar(c(0.0, t.tan()));
    let y = ComplexMatrix::scalar(c(-t.cos().ln(), 0.0));
    let mut f = Factorization::from_parts(tan.clone(), y, tan).expect("1x1 parts");
    f.prefactor = c(t.cos().powf(-0.5), 0.0);
    f
}

/// Printed one-mode squeeze answer at `r = sqrt(z1^2 + z2^2)`. The printed
/// exponent `+(i z2 / 2r) sinh r / D x^2` maps to `W = -(i z2 / r) sinh r / D`
/// with `D = cosh r + (z1 / r) sinh r`.
pub fn expected_squeeze_1d(z1: f64, z2: f64) -> Factorization {
    let r = (z1 * z1 + z2 * z2).sqrt();
    let sc = sinhc(c(r, 0.0)).re;
    let denom = r.cosh() + z1 * sc;
    let k = c(0.0, z2) * sc / denom;
    let mut f = Factorization::from_parts(
        ComplexMatrix::scalar(-k),
        ComplexMatrix::scalar(c(-denom.ln(), 0.0)),
        ComplexMatrix::scalar(k),
    )
    .expect("1x1 parts");
    f.prefactor = c(denom.powf(-0.5), 0.0);
    f
}

/// `s+-` of the two-mode squeeze: `(g +- g*) / (2|g|) sinh|g|`.
pub fn two_mode_s(g: Complex64) -> (Complex64, Complex64) {
    let sc = sinhc(c(g.norm(), 0.0));
    (0.5 * (g + g.conj()) * sc, 0.5 * (g - g.conj()) * sc)
}

/// Printed two-mode transfer matrix in terms of `cosh|g|` and `s+-`.
pub fn expected_two_mode_transfer(g: Complex64) -> TransferMatrix {
    let (sp, sm) = two_mode_s(g);
    let ch = c(g.norm().cosh(), 0.0);
    let id = ComplexMatrix::identity(2);
    let sx = pauli_x();
    TransferMatrix::from_blocks(
        &id.scale(ch) + &sx.scale(sp),
        sx.scale(-sm),
        sx.scale(sm),
        &id.scale(ch) - &sx.scale(sp),
    )
    .expect("2x2 blocks")
}

/// Printed two-mode squeeze answer:
/// `W = -s- / (cosh^2 - s+^2) [[s+, cosh], [cosh, s+]]`, `Z = -W`,
/// `Y = -ln [[cosh, -s+], [-s+, cosh]]`.
pub fn expected_two_mode_squeeze(g: Complex64) -> Result<Factorization> {
    let (sp, sm) = two_mode_s(g);
    let ch = c(g.norm().cosh(), 0.0);
    let pattern = ComplexMatrix::new(2, 2, vec![sp, ch, ch, sp])?;
    let k = sm / (ch * ch - sp * sp);
    let t22 = ComplexMatrix::new(2, 2, vec![ch, -sp, -sp, ch])?;
    Factorization::from_parts(pattern.scale(-k), -&logm(&t22)?, pattern.scale(k))
}

/// `N exp([[0, g* sigma], [g sigma, 0]]) N^-1`, the conjugated evaluation
/// route for the two-mode transfer matrix.
pub fn two_mode_transfer_by_conjugation(g: Complex64) -> Result<ComplexMatrix> {
    let sx = pauli_x();
    let zero = ComplexMatrix::zeros(2, 2);
    let inner = ComplexMatrix::from_blocks(&zero, &sx.scale(g.conj()), &sx.scale(g), &zero)?;
    let n = ladder_basis(2);
    Ok(&(&n * &expm(&inner)?) * &n.inverse()?)
}

/// Printed coupled-oscillator transfer matrix, built from the closed-form
/// `sqrt(M)`:
/// `[[cos(t sqrtM), i sqrtM sin(t sqrtM)], [i sin(t sqrtM) sqrtM^-1, cos(t sqrtM)]]`.
pub fn expected_coupled_transfer(t: f64, lambda: f64) -> Result<TransferMatrix> {
    let root = sqrt_m_closed_form(lambda)?;
    let arg = root.scale(c(t, 0.0));
    let cos = analytic_matrix_fn(&arg, MatrixFunction::Cos)?;
    let sin = analytic_matrix_fn(&arg, MatrixFunction::Sin)?;
    let i = c(0.0, 1.0);
    TransferMatrix::from_blocks(
        cos.clone(),
        (&root * &sin).scale(i),
        (&sin * &root.inverse()?).scale(i),
        cos,
    )
}

/// Printed coupled-oscillator answer:
/// `W = i sqrtM tan(t sqrtM)`, `Z = i tan(t sqrtM) / sqrtM`, `Y = -ln cos(t sqrtM)`.
pub fn expected_coupled_oscillator(t: f64, lambda: f64) -> Result<Factorization> {
    let root = sqrt_m_closed_form(lambda)?;
    let arg = root.scale(c(t, 0.0));
    let tan = analytic_matrix_fn(&arg, MatrixFunction::Tan)?;
    let cos = analytic_matrix_fn(&arg, MatrixFunction::Cos)?;
    let i = c(0.0, 1.0);
    Factorization::from_parts(
        (&root * &tan).scale(i),
        -&logm(&cos)?,
        (&tan * &root.inverse()?).scale(i),
    )
}
