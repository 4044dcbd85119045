//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use dichotomy_core::bounds::BoundFamily;
use dichotomy_core::certificate::{
    compute_alpha, compute_beta, compute_s_n, CertificateError, LipschitzBudget,
};
use dichotomy_core::cocycle::{Cocycle, StateVector};
use dichotomy_core::manifold::{metric_d, ManifoldSequence};
use dichotomy_core::perturbation::{
    estimate_lipschitz_pairs, radial_extension, PerturbationFamily,
};
use dichotomy_core::scenario::commands::{
    cmd_certify, cmd_solve, cmd_verify, load_manifold, MANIFOLD_FILE,
};
use dichotomy_core::scenario::presets::preset;
use dichotomy_core::scenario::{Resolved, Scenario};
use dichotomy_core::sequence::Sequence;
use dichotomy_core::solver::{apply_graph_transform, solve_fixed_point};
use dichotomy_core::verification::{
    contraction_probe, decay_check, decay_samples, invariance_sweep, local_grid_samples,
    local_invariance_check,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn resolved(name: &str, dir: &std::path::Path, tweak: impl FnOnce(&mut Scenario)) -> Resolved {
    let mut s = preset(name).unwrap();
    s.output = Some(dir.to_path_buf());
    tweak(&mut s);
    s.resolve().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Closed-form norm of the stable block on the planar ratio example.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = Sequence::exponential(1.0, -1.0);
    let b = Sequence::exponential(1.0, -0.5);
    let c = Sequence::OnePlusReciprocal { scale: 1.0 };
    let cocycle = Cocycle::ratio_diagonal(&a, &b, &c, &c, 41).unwrap();
    let sign = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut worst_literal: f64 = 0.0;
    let mut worst_telescoped: f64 = 0.0;
    for n in 1..=40 {
        for m in n..=40 {
            let measured = cocycle.transition(m, n).unwrap().stable[(0, 0)].abs();
            let ratio = a.value(n) / a.value(m);
            let literal =
                ratio * (c.value(n).powf(1.0 - sign(n)) / c.value(m).powf(1.0 + sign(m))).sqrt();
            let telescoped =
                ratio * (c.value(n).powf(1.0 - sign(n)) / c.value(m).powf(1.0 - sign(m))).sqrt();
            worst_literal = worst_literal.max(rel(measured, literal));
            worst_telescoped = worst_telescoped.max(rel(measured, telescoped));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "    note: against c_m^(1-(-1)^m) in the denominator the worst relative error is {worst_telescoped:e}"
    );
    outcome(
        worst_literal <= 1e-12 && elapsed < 1.0,
        format!("max relative error {worst_literal:e} (tol 1e-12), {elapsed:.3}s"),
    )
}

/// Brute-force α for `a(m,n) = e^{-(m-n)}` and `Lip_k = 0.1·2^{-k}`.
fn alpha_oracle(m_max: usize) -> f64 {
    let a = |m: usize, n: usize| (-((m - n) as f64)).exp();
    let lip = |k: usize| 0.1 * 0.5f64.powi(k as i32);
    let mut best: f64 = 0.0;
    for n in 1..m_max {
        for m in n + 1..=m_max {
            let s: f64 = (n..m).map(|k| a(m, k + 1) * a(k, n) * lip(k)).sum();
            best = best.max(s / a(m, n));
        }
    }
    best
}

/// Brute-force β for `a = 1`, `b(m,n) = 2^{-(m-n)}`, `Lip_k = 0.1·e^{-k}`.
fn beta_oracle(m_max: usize) -> f64 {
    (1..=m_max)
        .map(|n| {
            (n..=m_max)
                .map(|k| 0.5f64.powi((k + 1 - n) as i32) * 0.1 * (-(k as f64)).exp())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn criterion_2() -> Outcome {
    let m = 200;
    let family = BoundFamily::exponential(1.0, -1.0, 0.0, 0.0);
    let budget = LipschitzBudget::from_fn(m, |k| 0.1 * 0.5f64.powi(k as i32));
    let alpha = compute_alpha(&family, &budget, m).unwrap().alpha;
    let alpha_ref = alpha_oracle(m);
    println!(
        "    note: alpha = {alpha:.10} vs 0.1/e = {:.10}; summand ratio a(m,k+1)a(k,n)/a(m,n) is e, not 1/e",
        0.1 / std::f64::consts::E
    );

    let beta_family = BoundFamily::mixed(
        BoundFamily::exponential(1.0, 0.0, 0.0, 0.0),
        BoundFamily::exponential(1.0, 0.0, std::f64::consts::LN_2, 0.0),
    );
    let beta_budget = LipschitzBudget::from_fn(m, |k| 0.1 * (-(k as f64)).exp());
    let beta = compute_beta(&beta_family, &beta_budget, m).unwrap().beta;
    let beta_ref = beta_oracle(m);
    let beta_closed = 0.1 / (2.0 * std::f64::consts::E - 1.0);

    // telescoped form for RatioForm across random draws
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio_form: f64 = 0.0;
    for _ in 0..10 {
        let horizon = 30;
        let av: Vec<f64> = (0..=horizon + 1)
            .map(|_| rng.random_range(0.2..5.0))
            .collect();
        let bv: Vec<f64> = (0..=horizon + 1)
            .map(|_| rng.random_range(0.2..5.0))
            .collect();
        let cv: Vec<f64> = (0..=horizon + 1)
            .map(|_| rng.random_range(1.0..3.0))
            .collect();
        let lip: Vec<f64> = (0..horizon).map(|_| rng.random_range(0.0..0.01)).collect();
        let seq = |v: &Vec<f64>| Sequence::Table {
            start: 1,
            values: v.clone(),
        };
        let family = BoundFamily::RatioForm {
            a: seq(&av),
            b: seq(&bv),
            c: seq(&cv),
            d: seq(&cv),
        };
        let budget = LipschitzBudget::new(lip.clone());
        let generic = compute_alpha(&family, &budget, horizon).unwrap().alpha;
        // sup over n of Σ_{k=n}^{M-1} (a_{k+1}/a_k) c_{k+1} Lip_k, reached at n = 1
        let closed: f64 = (1..horizon)
            .map(|k| av[k] / av[k - 1] * cv[k] * lip[k - 1])
            .sum();
        worst_ratio_form = worst_ratio_form.max(rel(generic, closed));
    }
    let ok = (alpha - alpha_ref).abs() <= 1e-9
        && (beta - beta_ref).abs() <= 1e-9
        && (beta - beta_closed).abs() <= 1e-9
        && worst_ratio_form <= 1e-10;
    outcome(
        ok,
        format!(
            "|alpha - oracle| = {:e}, |beta - oracle| = {:e}, |beta - 0.1/(2e-1)| = {:e}, ratio-form rel err {:e}",
            (alpha - alpha_ref).abs(),
            (beta - beta_ref).abs(),
            (beta - beta_closed).abs(),
            worst_ratio_form
        ),
    )
}

fn criterion_3() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("zero", dir.path(), |_| {});
    let cert = cmd_certify(&r).unwrap().report.certificate.unwrap();
    let outcome_solve =
        solve_fixed_point(&r.cocycle, &r.solver_perturbation, &r.solver_config, &cert).unwrap();
    let phi = outcome_solve.manifold;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let starts: Vec<usize> = (1..=r.scenario.horizon).collect();
    let inv = invariance_sweep(
        &r.cocycle,
        &r.solver_perturbation,
        &phi,
        &starts,
        20,
        5,
        1e-15,
        &mut rng,
    )
    .unwrap();
    let max_phi = phi
        .graphs
        .iter()
        .flat_map(|g| g.data.values.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        outcome_solve.log.iterations == 1 && max_phi == 0.0 && inv.max_value == 0.0,
        format!(
            "iterations {}, sup|phi| {max_phi:e}, max residual {:e} over {} samples",
            outcome_solve.log.iterations, inv.max_value, inv.samples
        ),
    )
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("exponential", dir.path(), |_| {});
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    let (phi, residual, fixed) = pool.install(|| {
        let cert = cmd_certify(&r).unwrap().report.certificate.unwrap();
        let out = solve_fixed_point(&r.cocycle, &r.solver_perturbation, &r.solver_config, &cert)
            .unwrap()
            .require_converged()
            .unwrap();
        let image =
            apply_graph_transform(&r.cocycle, &r.solver_perturbation, &out.manifold).unwrap();
        let fixed = metric_d(&image.manifold, &out.manifold).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let starts: Vec<usize> = (1..=r.scenario.horizon).collect();
        let inv = invariance_sweep(
            &r.cocycle,
            &r.solver_perturbation,
            &out.manifold,
            &starts,
            10,
            0,
            1e-6,
            &mut rng,
        )
        .unwrap();
        (out.manifold, inv, fixed)
    });
    let elapsed = start.elapsed().as_secs_f64();
    let _ = phi;
    outcome(
        fixed < 2e-8 && residual.passed && elapsed < 60.0,
        format!(
            "d(Phi phi, phi) = {fixed:e} (< 2e-8), max invariance residual {:e} (< 1e-6), {elapsed:.2}s on one thread",
            residual.max_value
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["exponential", "nonhyperbolic"] {
        let dir = tempfile::tempdir().unwrap();
        let r = resolved(name, dir.path(), |_| {});
        let solved = cmd_solve(&r).unwrap();
        let cert = solved.report.certificate.unwrap();
        let phi = load_manifold(&dir.path().join(MANIFOLD_FILE)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = decay_samples(&phi, 200, 10, &mut rng);
        let report = decay_check(
            &r.cocycle,
            &r.solver_perturbation,
            &phi,
            &r.scenario.bounds,
            &samples,
            cert.alpha,
            0.05,
            r.mode,
        )
        .unwrap();
        ok &= report.passed && samples.len() >= 200;
        details.push(format!(
            "{name}: max ratio {:.4} over {} pairs",
            report.max_value,
            samples.len()
        ));
    }
    outcome(ok, details.join("; "))
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("exponential", dir.path(), |_| {});
    let cert = cmd_certify(&r).unwrap().report.certificate.unwrap();
    let grids =
        dichotomy_core::solver::solver_grids(&r.cocycle, &r.solver_perturbation, &r.solver_config)
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = contraction_probe(
        &r.cocycle,
        &r.solver_perturbation,
        &r.scenario.bounds,
        &grids,
        cert.alpha,
        cert.beta,
        20,
        0.05,
        &mut rng,
    )
    .unwrap();
    outcome(
        c.passed && c.trials == 20,
        format!(
            "Phi ratio {:.4e} <= {:.4e} + 0.05; trajectory ratio {:.4e} <= {:.4e} + 0.05",
            c.max_transform_ratio, c.transform_bound, c.max_trajectory_ratio, c.trajectory_bound
        ),
    )
}

fn criterion_7() -> Outcome {
    let base = PerturbationFamily::power(1, 1, 0.1, 1.0);
    let radii = Sequence::constant(1.0);
    let extended = radial_extension(&base, &radii);
    let bound = 2.0 * base.ball_lip(1, 1.0) * 1.01;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let point = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        let r = rng.random_range(lo..hi);
        let s = r / (x.abs() + y.abs()).max(1e-12);
        StateVector::new(
            DVector::from_element(1, x * s),
            DVector::from_element(1, y * s),
        )
    };
    let mut pairs = Vec::with_capacity(10_000);
    for i in 0..10_000 {
        let (u, v) = match i % 4 {
            0 => (point(0.0, 1.0, &mut rng), point(0.0, 1.0, &mut rng)),
            1 => (point(0.0, 1.0, &mut rng), point(1.0, 3.0, &mut rng)),
            2 => (point(1.0, 3.0, &mut rng), point(1.0, 3.0, &mut rng)),
            // short pairs straddling the sphere
            _ => {
                let u = point(0.95, 1.0, &mut rng);
                let v = StateVector::new(&u.stable * 1.08, &u.unstable * 1.08);
                (u, v)
            }
        };
        pairs.push((u, v));
    }
    let measured = estimate_lipschitz_pairs(&extended, 1, &pairs).unwrap();
    outcome(
        measured <= bound,
        format!(
            "measured {measured:.6} <= 2 * {:.4} * 1.01 = {bound:.6} over {} pairs",
            base.ball_lip(1, 1.0),
            pairs.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("power_local", dir.path(), |_| {});
    let solved = cmd_solve(&r).unwrap();
    let cert = solved.report.certificate.clone().unwrap();
    let shrink = cert.shrink_factors.clone();
    let finite = shrink
        .as_ref()
        .is_some_and(|s| s.values.iter().all(|v| v.is_finite()));
    let gate = cert.local_gate;
    let radii = r.scenario.radii.clone().unwrap();
    let phi = load_manifold(&dir.path().join(MANIFOLD_FILE)).unwrap();
    let local = shrink.as_ref().map(|s| {
        let starts: Vec<usize> = (1..=r.scenario.horizon).collect();
        let samples = local_grid_samples(&phi, &radii, s, &starts);
        (
            samples.len(),
            local_invariance_check(
                &r.cocycle,
                &r.perturbation,
                &phi,
                &radii,
                s,
                &samples,
                10,
                1e-6,
            ),
        )
    });
    let (local_ok, local_detail) = match &local {
        Some((n, Ok(rep))) => (
            rep.passed && *n > 0,
            format!("local residual {:e} on {n} samples", rep.max_value),
        ),
        Some((_, Err(e))) => (false, e.to_string()),
        None => (false, "no shrink factors".into()),
    };
    let verify = cmd_verify(&r, None).unwrap();
    // a + β > 0: radii decaying faster than the stable rate
    let flipped = compute_s_n(
        &r.scenario.bounds,
        &Sequence::exponential(0.1, -1.5),
        cert.alpha,
        r.scenario.horizon,
    );
    let diverges = matches!(flipped, Err(CertificateError::DivergentSup { .. }));
    outcome(
        finite && gate.passed && local_ok && verify.status().code() == 0 && diverges,
        format!(
            "s_n finite: {finite}, local gate {:.4} < 1, {local_detail}, verify exit {}, flipped radii -> {}",
            gate.value,
            verify.status().code(),
            match flipped {
                Err(e) => e.to_string(),
                Ok(_) => "finite s_n".into(),
            }
        ),
    )
}

/// Smallest λ with `2λα + max{2λβ, √(λβ)} = 1`.
fn predicted_scale(alpha: f64, beta: f64) -> f64 {
    let s = (-(beta.sqrt()) + (beta + 8.0 * alpha).sqrt()) / (4.0 * alpha);
    let lambda_sqrt = s * s;
    if lambda_sqrt * beta <= 0.25 {
        lambda_sqrt
    } else {
        1.0 / (2.0 * alpha + 2.0 * beta)
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = resolved("exponential", dir.path(), |_| {});
    let base = cmd_certify(&r).unwrap().report.certificate.unwrap();
    let lambda = predicted_scale(base.alpha, base.beta);
    let budget = r.budget.clone();
    let mut run = |factor: f64| {
        r.budget = budget.scaled(factor);
        cmd_certify(&r).unwrap()
    };
    let below = run(lambda * (1.0 - 1e-9));
    let above = run(lambda * (1.0 + 1e-9));
    outcome(
        below.status().code() == 0 && above.status().code() == 2,
        format!(
            "lambda* = {lambda:.12}; gate {:.12} at (1-1e-9) -> exit {}, {:.12} at (1+1e-9) -> exit {}",
            below.report.certificate.as_ref().unwrap().global_gate.value,
            below.status().code(),
            above.report.certificate.as_ref().unwrap().global_gate.value,
            above.status().code()
        ),
    )
}

fn solve_on(ppa: usize) -> (Resolved, ManifoldSequence, f64) {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("exponential", dir.path(), |s| {
        s.solver.points_per_axis = ppa
    });
    let cert = cmd_certify(&r).unwrap().report.certificate.unwrap();
    let phi = solve_fixed_point(&r.cocycle, &r.solver_perturbation, &r.solver_config, &cert)
        .unwrap()
        .manifold;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let starts: Vec<usize> = (1..=r.scenario.horizon).collect();
    let inv = invariance_sweep(
        &r.cocycle,
        &r.solver_perturbation,
        &phi,
        &starts,
        10,
        0,
        1e-6,
        &mut rng,
    )
    .unwrap();
    (r, phi, inv.max_value)
}

fn criterion_10() -> Outcome {
    let (_, coarse, res_coarse) = solve_on(33);
    let (_, fine, res_fine) = solve_on(65);
    let mut diff: f64 = 0.0;
    for (gc, gf) in coarse.graphs.iter().zip(&fine.graphs) {
        assert_eq!(gc.grid().radius(), gf.grid().radius());
        for i in 0..gc.grid().len() {
            let j = 2 * i;
            assert_eq!(gc.grid().point(i), gf.grid().point(j));
            diff = diff.max((gc.data.at(i)[0] - gf.data.at(j)[0]).abs());
        }
    }
    let growth = res_fine / res_coarse;
    outcome(
        growth <= 2.0 && diff <= 1e-5,
        format!(
            "residual {res_coarse:e} -> {res_fine:e} (x{growth:.3}, <= 2), sup difference on shared nodes {diff:e} (<= 1e-5)"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact norm formula", criterion_1),
        ("certificate oracles", criterion_2),
        ("zero-perturbation exactness", criterion_3),
        ("fixed-point residual", criterion_4),
        ("decay bound", criterion_5),
        ("contraction bounds", criterion_6),
        ("radial extension", criterion_7),
        ("local theorem chain", criterion_8),
        ("gate sharpness", criterion_9),
        ("grid refinement", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
