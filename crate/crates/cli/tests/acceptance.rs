//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use inls_cli::sweep::{run_sweep, SweepConfig};
use inls_core::diagnostics::virial_consistency;
use inls_core::dynamics::{evolve, EvolutionTrace, EvolveConfig, Termination};
use inls_core::exponents::{
    check_admissible, parse_rational, theta_range, working_exponents, ExponentError, InlsParams,
};
use inls_core::ground_state::{gn_constant, shooting_oracle, solve_petviashvili, GroundStateProfile};
use inls_core::invariants::{classify, report, rescale, VerdictTag};
use inls_core::radial::{ComplexRadialField, RadialGrid};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn params(b: &str) -> InlsParams {
    b.parse().unwrap()
}

fn profile(b: &str) -> GroundStateProfile {
    let p = params(b);
    let grid = Arc::new(RadialGrid::for_params(24.0, 32767, &p).unwrap());
    solve_petviashvili(&p, grid, 1e-10, 1000).unwrap()
}

fn gaussian(grid: &Arc<RadialGrid>, a: f64) -> ComplexRadialField {
    ComplexRadialField::from_real_fn(grid.clone(), move |r| a * (-r * r).exp())
}

fn exponents() -> Outcome {
    let mut checked = 0;
    for k in 1..=49 {
        let b = BigRational::new(BigInt::from(k), BigInt::from(100));
        let p = InlsParams::new(b.clone()).map_err(|e| e.to_string())?;
        let range = theta_range(&b).map_err(|e| e.to_string())?;
        for theta in range.samples(20) {
            let w = working_exponents(&p, &theta).map_err(|e| e.to_string())?;
            for pair in w.pairs() {
                if !check_admissible(&pair, &p) {
                    return Err(format!("b = {k}/100, theta = {theta}: {pair:?}"));
                }
                checked += 1;
            }
        }
    }
    let empty = matches!(theta_range(&parse_rational("1/2").unwrap()), Err(ExponentError::EmptyRange(_)));
    check(empty, format!("{checked} memberships exact; theta_range(1/2) empty = {empty}"))
}

fn identities(profiles: &[(&str, GroundStateProfile)]) -> Outcome {
    let (mut worst_id, mut worst_gn) = (0.0f64, 0.0f64);
    for (_, q) in profiles {
        worst_id = worst_id.max(q.pohozaev_residuals().max());
        worst_gn = worst_gn.max(gn_constant(q).relative_gap());
    }
    check(
        worst_id < 1e-6 && worst_gn < 1e-5,
        format!("max identity residual {worst_id:.2e}, max C_GN gap {worst_gn:.2e}"),
    )
}

fn oracle_equivalence(profiles: &[(&str, GroundStateProfile)]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (b, q) in profiles.iter().filter(|(b, _)| *b == "0" || *b == "1/4") {
        let s = shooting_oracle(&q.params, &q.grid, 1e-15).map_err(|e| e.to_string())?;
        let peak = q.q[0];
        let d = q
            .q
            .iter()
            .zip(&s.q)
            .take_while(|(&p, _)| p > 1e-8 * peak)
            .map(|(p, o)| (p - o).abs() / peak)
            .fold(0.0, f64::max);
        ok &= d < 1e-4;
        parts.push(format!("b = {b}: {d:.2e}"));
    }
    check(ok, parts.join(", "))
}

/// 1–3 chirped complex Gaussian bumps.
fn random_field(rng: &mut ChaCha8Rng, grid: &Arc<RadialGrid>) -> ComplexRadialField {
    let bumps: Vec<(Complex64, f64, f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let c = Complex64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
            (c, rng.gen_range(0.0..3.0), rng.gen_range(0.5..1.5), rng.gen_range(-1.0..1.0))
        })
        .collect();
    ComplexRadialField::from_fn(grid.clone(), move |r| {
        bumps
            .iter()
            .map(|&(c, x0, w, chirp)| {
                let s = (r - x0) / w;
                c * (-s * s).exp() * Complex64::from_polar(1.0, chirp * r * r)
            })
            .sum()
    })
}

fn gn_sharpness(q: &GroundStateProfile) -> Outcome {
    let b = q.params.b_f64();
    let grid = Arc::new(RadialGrid::for_params(24.0, 4095, &q.params).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let f = random_field(&mut rng, &grid);
        let bound = q.c_gn * f.grad_sq().powf(0.5 * (3.0 + b)) * f.mass().powf(0.5 * (1.0 - b));
        worst = worst.min((bound - f.potential()) / bound);
    }
    check(worst >= -1e-8, format!("100 fields, min relative slack {worst:.3e}"))
}

struct Standard {
    fine: EvolutionTrace,
    half: EvolutionTrace,
}

fn standard_runs(p: &InlsParams, threshold_grad: f64) -> Standard {
    let grid = Arc::new(RadialGrid::for_params(256.0, 4095, p).unwrap());
    let u0 = gaussian(&grid, 0.1);
    let cfg = |stride| EvolveConfig {
        snap_stride: stride,
        threshold_grad: Some(threshold_grad),
        ..Default::default()
    };
    Standard {
        fine: evolve(&u0, 20.0, 1e-3, p, &cfg(10)).unwrap(),
        half: evolve(&u0, 20.0, 5e-4, p, &cfg(20)).unwrap(),
    }
}

fn conservation(runs: &Standard) -> Outcome {
    let (a, b) = (&runs.fine, &runs.half);
    let reached = a.termination == Termination::ReachedT && b.termination == Termination::ReachedT;
    let mass = a.max_mass_drift();
    let energy = a.max_energy_drift();
    let ratio = energy / b.max_energy_drift();
    check(
        reached && mass < 1e-10 && energy < 1e-6 && (3.5..=4.5).contains(&ratio),
        format!("mass drift {mass:.2e}, energy drift {energy:.2e}, halving ratio {ratio:.3}"),
    )
}

fn trapping(runs: &[(&str, &EvolutionTrace)], threshold_grad: f64) -> Outcome {
    let mut worst = 0.0f64;
    for (_, tr) in runs {
        for m in &tr.monitors {
            worst = worst.max(m.grad_product / threshold_grad);
        }
    }
    let names: Vec<&str> = runs.iter().map(|(n, _)| *n).collect();
    check(
        worst < 1.0,
        format!("{} runs ({}), max grad ratio {worst:.4}", runs.len(), names.join(", ")),
    )
}

fn virial(run: &EvolutionTrace, q: &GroundStateProfile) -> Outcome {
    let vc = virial_consistency(run, 20.0).map_err(|e| e.to_string())?;
    let b = q.params.b_f64();
    let at_q = (8.0 * q.grad_q_sq - 2.0 * (3.0 + b) * q.pot_q) / (8.0 * q.grad_q_sq);
    check(
        vc.max_residual < 1e-3 && at_q.abs() < 1e-5,
        format!("max residual {:.2e} over {} samples, closure at Q {:.2e}", vc.max_residual, vc.times.len(), at_q),
    )
}

const SWEEP_AMPLITUDES: [f64; 11] = [0.1, 0.5, 1.0, 1.5, 2.0, 2.4, 3.0, 3.5, 3.6, 3.7, 4.0];

fn dichotomy(points: &[inls_cli::sweep::SweepPoint]) -> Outcome {
    let tags: Vec<VerdictTag> = points
        .iter()
        .map(|p| p.verdict.clone())
        .collect::<Result<_, _>>()?;
    let is_gs: Vec<bool> = tags.iter().map(|t| *t == VerdictTag::GlobalScattering).collect();
    let transitions = is_gs.windows(2).filter(|w| w[0] != w[1]).count();
    let mut problems = Vec::new();
    if transitions != 1 || !is_gs[0] {
        problems.push(format!("{transitions} GS transitions"));
    }
    let (mut gs, mut bc) = (0, 0);
    for (p, tag) in points.iter().zip(&tags) {
        let d = &p.details;
        match tag {
            VerdictTag::GlobalScattering => {
                gs += 1;
                let ok = p.termination == Ok(Termination::ReachedT)
                    && !d.strichartz_last_decade.is_empty()
                    && d.strichartz_last_decade.iter().all(|&x| x < 0.05)
                    && d.h1_decreasing == Some(true)
                    && d.h1_final_ratio.is_some_and(|x| x < 0.1);
                if !ok {
                    problems.push(format!("A = {}: {:?} {d:?}", p.amplitude, p.termination));
                }
            }
            VerdictTag::BlowupCandidate => {
                bc += 1;
                if p.termination != Ok(Termination::BlowupDetected) || !d.terminal_growth {
                    problems.push(format!("A = {}: {:?} {d:?}", p.amplitude, p.termination));
                }
            }
            _ => {}
        }
    }
    let row: Vec<String> = points
        .iter()
        .zip(&tags)
        .map(|(p, t)| format!("{}:{t:?}", p.amplitude))
        .collect();
    let worst_h1 = points
        .iter()
        .filter_map(|p| p.details.h1_final_ratio.filter(|_| p.verdict == Ok(VerdictTag::GlobalScattering)))
        .fold(0.0, f64::max);
    check(
        problems.is_empty() && gs > 0 && bc > 0,
        format!(
            "[{}], {gs} GS, {bc} BC, worst final H1 ratio {worst_h1:.3}{}",
            row.join(" "),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn scaling(q: &GroundStateProfile) -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut verdicts = true;
    for a in [0.1, 1.0, 2.0, 3.0] {
        let u = gaussian(&q.grid, a);
        let base = report(&u, &q.params);
        let tag = classify(&u, q).map_err(|e| e.to_string())?.tag;
        for delta in [0.5, 2.0] {
            let v = rescale(&u, delta).map_err(|e| e.to_string())?;
            let r = report(&v, &q.params);
            worst.0 = worst.0.max((r.me_product - base.me_product).abs() / base.me_product.abs());
            worst.1 = worst.1.max((r.grad_product - base.grad_product).abs() / base.grad_product);
            verdicts &= classify(&v, q).map_err(|e| e.to_string())?.tag == tag;
        }
    }
    check(
        worst.0 < 1e-6 && worst.1 < 1e-6 && verdicts,
        format!("me_product {:.2e}, grad_product {:.2e}, verdicts preserved = {verdicts}", worst.0, worst.1),
    )
}

fn main() {
    let mut failed = 0;
    let mut report_line = |n: usize, name: &str, secs: f64, outcome: std::thread::Result<Outcome>| {
        let (status, detail) = match outcome {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {n} {name:<24} ... {status} ({detail}; {secs:.1} s)");
    };
    let timed = |f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f));
        (start.elapsed().as_secs_f64(), r)
    };

    let (t, r) = timed(&mut exponents);
    report_line(1, "exponent exactness", t, r);

    let start = Instant::now();
    let profiles: Vec<(&str, GroundStateProfile)> =
        ["0", "1/10", "1/4", "2/5", "49/100"].iter().map(|&b| (b, profile(b))).collect();
    let r = catch_unwind(AssertUnwindSafe(|| identities(&profiles)));
    report_line(2, "ground-state identities", start.elapsed().as_secs_f64(), r);

    let (t, r) = timed(&mut || oracle_equivalence(&profiles));
    report_line(3, "oracle equivalence", t, r);

    let quarter = &profiles[2].1;
    let (t, r) = timed(&mut || gn_sharpness(quarter));
    report_line(4, "GN sharpness", t, r);

    let start = Instant::now();
    let runs = standard_runs(&quarter.params, quarter.threshold_grad);
    let r = catch_unwind(AssertUnwindSafe(|| conservation(&runs)));
    report_line(5, "conservation", start.elapsed().as_secs_f64(), r);

    let start = Instant::now();
    let config = SweepConfig {
        bs: vec!["1/4".into()],
        amplitudes: SWEEP_AMPLITUDES.to_vec(),
        ..Default::default()
    };
    let points = run_sweep(&config);
    let sweep_secs = start.elapsed().as_secs_f64();

    let (t, r) = timed(&mut || {
        let mut sub: Vec<(String, &EvolutionTrace)> =
            vec![("standard".into(), &runs.fine), ("standard dt/2".into(), &runs.half)];
        if let Ok(points) = &points {
            for p in points.iter().filter(|p| p.verdict == Ok(VerdictTag::GlobalScattering)) {
                if let Some(tr) = &p.trace {
                    sub.push((format!("A = {}", p.amplitude), tr));
                }
            }
        }
        let named: Vec<(&str, &EvolutionTrace)> = sub.iter().map(|(n, t)| (n.as_str(), *t)).collect();
        trapping(&named, quarter.threshold_grad)
    });
    report_line(6, "trapping", t, r);

    let (t, r) = timed(&mut || virial(&runs.fine, quarter));
    report_line(7, "virial identity", t, r);

    let (t, r) = timed(&mut || match &points {
        Ok(points) => dichotomy(points),
        Err(e) => Err(e.to_string()),
    });
    report_line(8, "dichotomy sweep", sweep_secs + t, r);

    let (t, r) = timed(&mut || scaling(quarter));
    report_line(9, "scaling invariance", t, r);

    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
