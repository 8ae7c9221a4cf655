//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p eqo --test acceptance`

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use eqo::appendix::{prefactor_consistency, t_matrix_ode_residual};
use eqo::catalog::{self, NamedOperator};
use eqo::closed_form::{decompose_1d, Coefficients1D};
use eqo::matrix::expm;
use eqo::oracle::{apply_factorization, apply_heat, evolve_generator, quadrature_heat_1d, GaussianState, Grid};
use eqo::reorder::{
    block_relation_residual, decompose, gauss_decompose, reconstruct_residual, symplectic_residual, transfer_matrix,
};
use eqo::{ComplexMatrix, EqoError, Factorization, QuadraticGenerator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

const SEED: u64 = 0x05ee_de90;
const T22_GUARD: f64 = 0.02;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err_str(e: EqoError) -> String {
    e.to_string()
}

/// Largest entrywise gap between two factorizations, prefactor included.
fn factor_gap(a: &Factorization, b: &Factorization) -> f64 {
    [(&a.w - &b.w).max_abs(), (&a.y - &b.y).max_abs(), (&a.z - &b.z).max_abs(), (a.prefactor - b.prefactor).norm()]
        .into_iter()
        .fold(0.0, f64::max)
}

fn disk(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = disk(rng);
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}

fn random_generator(rng: &mut ChaCha8Rng, n: usize, max_norm: Option<f64>) -> QuadraticGenerator {
    let f = ComplexMatrix::from_fn(n, n, |_, _| disk(rng));
    let g = QuadraticGenerator::new(symmetric(rng, n), f, symmetric(rng, n)).expect("symmetric by construction");
    match max_norm {
        Some(limit) if g.r().norm_fro() > limit => g.scaled(c(limit / g.r().norm_fro(), 0.0)),
        _ => g,
    }
}

fn t22_guarded(g: &QuadraticGenerator) -> bool {
    transfer_matrix(g)
        .and_then(|t| t.t22.det())
        .map(|d| d.norm() >= T22_GUARD)
        .unwrap_or(false)
}

/// Draws until the T22 guard passes; returns the generator and the number of rejections.
fn guarded(rng: &mut ChaCha8Rng, n: usize, max_norm: Option<f64>) -> (QuadraticGenerator, usize) {
    let mut rejected = 0;
    loop {
        let g = random_generator(rng, n, max_norm);
        if t22_guarded(&g) {
            return (g, rejected);
        }
        rejected += 1;
    }
}

fn catalog_operators() -> Vec<NamedOperator> {
    vec![
        catalog::harmonic_time_displacement(FRAC_PI_4),
        catalog::squeeze_1d(0.3, 0.4),
        catalog::two_mode_squeeze(c(0.3, 0.4)).unwrap(),
        catalog::coupled_oscillator(0.4, 0.6).unwrap(),
    ]
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for t in [0.1, FRAC_PI_4, 1.0] {
        let got = decompose(&catalog::harmonic_time_displacement(t).generator).map_err(err_str)?;
        let gap = factor_gap(&got, &catalog::expected_time_displacement(t));
        ensure(gap < 1e-11, || format!("t = {t}: gap {gap:.3e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("max gap {worst:.2e} over t in {{0.1, pi/4, 1}}"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for (z1, z2) in [(0.3, 0.4), (-0.5, 0.2)] {
        let got = decompose(&catalog::squeeze_1d(z1, z2).generator).map_err(err_str)?;
        let gap = factor_gap(&got, &catalog::expected_squeeze_1d(z1, z2));
        ensure(gap < 1e-11, || format!("(z1, z2) = ({z1}, {z2}): gap {gap:.3e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("max gap {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for g in [c(0.8, 0.0), c(0.0, 0.5), c(0.3, 0.4)] {
        let got = decompose(&catalog::two_mode_squeeze(g).map_err(err_str)?.generator).map_err(err_str)?;
        let want = catalog::expected_two_mode_squeeze(g).map_err(err_str)?;
        let t22 = catalog::expected_two_mode_transfer(g).t22;
        let y_gap = (&expm(&-&got.y).map_err(err_str)? - &t22.transpose()).max_abs();
        let gap = (&got.w - &want.w).max_abs().max((&got.z - &want.z).max_abs()).max(y_gap);
        ensure(gap < 1e-10, || format!("g = {g}: gap {gap:.3e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("max gap {worst:.2e} (Y via expm(-Y) = T22^T)"))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for (t, lambda) in [(0.4, 0.6), (0.2, -0.9)] {
        let got = decompose(&catalog::coupled_oscillator(t, lambda).map_err(err_str)?.generator).map_err(err_str)?;
        let want = catalog::expected_coupled_oscillator(t, lambda).map_err(err_str)?;
        let gap = (&got.w - &want.w)
            .max_abs()
            .max((&got.y - &want.y).max_abs())
            .max((&got.z - &want.z).max_abs());
        ensure(gap < 1e-10, || format!("(t, lambda) = ({t}, {lambda}): gap {gap:.3e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("max gap {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut rejected, mut sym, mut block, mut recon) = (0, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..500 {
        let n = 1 + k % 3;
        let (g, r) = guarded(&mut rng, n, None);
        rejected += r;
        let t = transfer_matrix(&g).map_err(err_str)?;
        let f = gauss_decompose(&t).map_err(err_str)?;
        let (s, b, x) = (
            symplectic_residual(&t),
            block_relation_residual(&t).map_err(err_str)?,
            reconstruct_residual(&f, &t).map_err(err_str)?,
        );
        ensure(s < 1e-10 && b < 1e-10 && x < 1e-9, || {
            format!("case {k} (n = {n}): symplectic {s:.2e}, block {b:.2e}, reconstruct {x:.2e}")
        })?;
        sym = sym.max(s);
        block = block.max(b);
        recon = recon.max(x);
    }
    Ok(format!(
        "500 cases, {rejected} resampled; max symplectic {sym:.2e}, block {block:.2e}, reconstruct {recon:.2e}"
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let (mut rejected, mut worst, mut done) = (0, 0.0f64, 0);
    while done < 1000 {
        let coeffs = Coefficients1D::new(disk(&mut rng), disk(&mut rng), disk(&mut rng));
        let g = coeffs.generator();
        if !t22_guarded(&g) {
            rejected += 1;
            continue;
        }
        let closed = decompose_1d(&coeffs).map_err(err_str)?;
        let general = decompose(&g).map_err(err_str)?;
        let gap = factor_gap(&closed, &general);
        ensure(gap < 1e-10, || format!("(a, b, c) = {coeffs:?}: gap {gap:.3e}"))?;
        worst = worst.max(gap);
        done += 1;
    }
    Ok(format!("1000 cases, {rejected} resampled; max gap {worst:.2e}"))
}

fn probe_state(n: usize) -> GaussianState {
    let b = (0..n).map(|k| c(0.3 - 0.1 * k as f64, 0.2 * k as f64 - 0.1)).collect();
    GaussianState::new(ComplexMatrix::identity(n), b, c(0.0, 0.0)).expect("valid probe")
}

fn flow_gap(g: &QuadraticGenerator, target: &GaussianState, steps: usize) -> Result<f64, EqoError> {
    Ok(evolve_generator(g, &probe_state(g.modes()), steps)?.distance(target))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut cases: Vec<(String, QuadraticGenerator)> =
        catalog_operators().into_iter().map(|op| (op.name.to_string(), op.generator)).collect();
    let mut rejected = 0;
    while cases.len() < 4 + 100 {
        let n = 1 + rng.gen_range(0..3);
        let (g, r) = guarded(&mut rng, n, Some(1.5));
        rejected += r;
        cases.push((format!("random #{}", cases.len() - 4), g));
    }
    let (mut worst, mut flow_skips, mut min_order) = (0.0f64, 0, f64::INFINITY);
    for (i, (name, g)) in cases.iter().enumerate() {
        let f = decompose(g).map_err(err_str)?;
        let target = match apply_factorization(&f, &probe_state(g.modes())) {
            Ok(s) => s,
            Err(e) if e.is_domain_error() && i >= 4 => {
                flow_skips += 1;
                continue;
            }
            Err(e) => return Err(format!("{name}: {e}")),
        };
        let gap = match flow_gap(g, &target, 4000) {
            Ok(x) => x,
            Err(e) if e.is_domain_error() && i >= 4 => {
                flow_skips += 1;
                continue;
            }
            Err(e) => return Err(format!("{name}: {e}")),
        };
        ensure(gap < 1e-6, || format!("{name}: factored vs flow {gap:.3e}"))?;
        worst = worst.max(gap);
        // Step halving on coarse grids, where the truncation error dominates.
        if i < 14 {
            let e1 = flow_gap(g, &target, 10).map_err(err_str)?;
            let e2 = flow_gap(g, &target, 20).map_err(err_str)?;
            if e2 > 1e-12 {
                let order = (e1 / e2).log2();
                ensure(order > 3.5, || format!("{name}: observed order {order:.2} ({e1:.2e} -> {e2:.2e})"))?;
                min_order = min_order.min(order);
            }
        }
    }
    ensure(flow_skips == 0, || format!("{flow_skips} guarded cases had a singular Gaussian path"))?;
    Ok(format!(
        "4 catalog + 100 random ({rejected} resampled); max gap {worst:.2e} at 4000 steps; min observed order {min_order:.2}"
    ))
}

fn one_mode(a: Complex64, b: Complex64, c0: Complex64) -> GaussianState {
    GaussianState::new(ComplexMatrix::scalar(a), vec![b], c0).expect("normalizable")
}

fn criterion_8() -> Outcome {
    let suite = [
        (c(0.1, 0.0), one_mode(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))),
        (c(0.15, 0.0), one_mode(c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0))),
        (c(0.2, 0.1), one_mode(c(0.8, 0.3), c(0.2, -0.4), c(0.1, 0.2))),
        (c(0.05, -0.08), one_mode(c(2.0, -0.5), c(-0.3, 0.6), c(0.0, -0.3))),
        (c(0.3, 0.3), one_mode(c(0.6, 0.0), c(0.1, 0.1), c(-0.2, 0.0))),
    ];
    let xs = [-1.0, 0.0, 0.7];
    let grid = Grid { lo: -20.0, hi: 20.0, points: 4001 };
    let mut worst = 0.0f64;
    let mut min_gain = f64::INFINITY;
    for (c0, s) in &suite {
        let closed = apply_heat(&ComplexMatrix::scalar(2.0 * c0), s).map_err(err_str)?;
        let quad = quadrature_heat_1d(*c0, grid, s, &xs).map_err(err_str)?;
        for (x, q) in xs.iter().zip(&quad) {
            let gap = (closed.evaluate(&[c(*x, 0.0)]) - q).norm();
            ensure(gap < 1e-8, || format!("c0 = {c0}, x = {x}: gap {gap:.3e}"))?;
            worst = worst.max(gap);
        }
        let want = closed.evaluate(&[c(0.7, 0.0)]);
        let err = |points| -> Result<f64, String> {
            let g = Grid { lo: -12.0, hi: 12.0, points };
            Ok((quadrature_heat_1d(*c0, g, s, &[0.7]).map_err(err_str)?[0] - want).norm())
        };
        let (coarse, fine) = (err(41)?, err(81)?);
        if coarse > 1e-13 {
            let gain = coarse / fine.max(f64::MIN_POSITIVE);
            ensure(gain >= 4.0, || format!("c0 = {c0}: refinement {coarse:.2e} -> {fine:.2e}"))?;
            min_gain = min_gain.min(gain);
        }
    }
    ensure(min_gain.is_finite(), || "no case resolved the refinement".into())?;
    Ok(format!("5 cases, max gap {worst:.2e}; min refinement gain {min_gain:.1}x"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    for op in catalog_operators() {
        ensure(prefactor_consistency(&op.generator).map_err(err_str)?, || format!("{}: inconsistent", op.name))?;
    }
    let mut rejected = 0;
    for k in 0..20 {
        let (g, r) = guarded(&mut rng, 2, Some(1.0));
        rejected += r;
        ensure(prefactor_consistency(&g).map_err(err_str)?, || format!("random #{k}: inconsistent"))?;
    }
    let g = catalog::coupled_oscillator(0.4, 0.6).map_err(err_str)?.generator;
    let coarse = t_matrix_ode_residual(&g, 400).map_err(err_str)?;
    let fine = t_matrix_ode_residual(&g, 800).map_err(err_str)?;
    let ratio = coarse / fine;
    ensure((3.5..4.5).contains(&ratio), || format!("T-ODE residual ratio {ratio:.2}"))?;
    Ok(format!("4 catalog + 20 random ({rejected} resampled) consistent; T-ODE halving ratio {ratio:.2}"))
}

fn criterion_10() -> Outcome {
    let g = catalog::harmonic_time_displacement(FRAC_PI_2).generator;
    match decompose(&g) {
        Err(EqoError::SingularMatrix { pivot, .. }) => {
            let one_d = decompose_1d(&Coefficients1D::new(c(0.0, -FRAC_PI_2), c(0.0, FRAC_PI_2), c(0.0, 0.0)));
            ensure(matches!(one_d, Err(EqoError::ZeroT22 { .. })), || format!("1D path gave {one_d:?}"))?;
            let out = Command::new(env!("CARGO_BIN_EXE_eqo"))
                .args(["decompose", "--catalog", "harmonic_time_displacement", "--param"])
                .arg(format!("t={FRAC_PI_2}"))
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.code() == Some(2), || format!("CLI exit {:?}", out.status.code()))?;
            Ok(format!("SingularMatrix (pivot {pivot:.1e}); 1D path ZeroT22; CLI exit 2"))
        }
        other => Err(format!("expected SingularMatrix, got {other:?}")),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "time displacement closed form", criterion_1, Duration::from_secs(1)),
        (2, "one-mode squeeze closed form", criterion_2, Duration::from_secs(1)),
        (3, "two-mode squeeze closed form", criterion_3, Duration::from_secs(1)),
        (4, "coupled oscillators closed form", criterion_4, Duration::from_secs(1)),
        (5, "symplectic property suite", criterion_5, Duration::from_secs(30)),
        (6, "1D closed form vs pipeline", criterion_6, Duration::from_secs(30)),
        (7, "Gaussian oracle equivalence", criterion_7, Duration::from_secs(120)),
        (8, "heat kernel vs quadrature", criterion_8, Duration::from_secs(30)),
        (9, "prefactor ODE consistency", criterion_9, Duration::from_secs(120)),
        (10, "degenerate T22 is rejected", criterion_10, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; over budget {budget:?}")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {id:>2}. {name}: {detail} ({:.2}s)", elapsed.as_secs_f64());
        failed += outcome.is_err() as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
