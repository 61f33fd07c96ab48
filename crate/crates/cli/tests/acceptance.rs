//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Runs without the libtest harness so the summary lines are always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use opcake_core::divergences::{frenkel_gamma, frenkel_t, umegaki};
use opcake_core::layercake::{layer_cake_positive, layer_cake_two_sided, shift_identity_residual};
use opcake_core::verify::{gen_instance, run_check, trial_seed, CheckName, InstanceKind, InstanceSpec, SuiteConfig};
use opcake_core::{HermitianMatrix, PositiveDefinite, QuadratureConfig, VerificationReport};

const SEED: u64 = 42;
const RUNTIME_LIMIT: Duration = Duration::from_secs(120);

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn summarize(reports: &[VerificationReport]) -> Outcome {
    let passed = reports.iter().all(|r| r.passed());
    let detail = reports
        .iter()
        .map(|r| format!("{} {}/{} failed, max {:.2e} (tol {:.0e})", r.check_name, r.failures, r.trials, r.max_residual, r.tolerance))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed, detail }
}

fn suite(dims: std::ops::RangeInclusive<usize>, trials: usize) -> SuiteConfig {
    SuiteConfig {
        dims: dims.collect(),
        trials,
        seed: SEED,
        ..SuiteConfig::default()
    }
}

fn draw(label: &str, i: u64, dim: usize, kind: InstanceKind) -> HermitianMatrix {
    let seed = trial_seed(SEED, label, i, dim);
    gen_instance(&InstanceSpec::new(dim, kind, 1.0, seed)).expect("valid spec")
}

fn frob(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).norm()
}

fn equivalence_iii() -> Outcome {
    // Timed on one worker to stand in for a single desktop core.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let started = Instant::now();
    let report = pool.install(|| run_check(CheckName::EquivalenceIII, &suite(1..=8, 200)));
    let elapsed = started.elapsed();
    let mut out = match report {
        Ok(r) => summarize(&[r]),
        Err(e) => Outcome { passed: false, detail: e.to_string() },
    };
    out.passed &= elapsed < RUNTIME_LIMIT;
    out.detail += &format!(", {:.1} s on one thread (limit {} s)", elapsed.as_secs_f64(), RUNTIME_LIMIT.as_secs());
    out
}

fn equivalence_i() -> Outcome {
    match run_check(CheckName::EquivalenceI, &suite(2..=6, 100)) {
        Ok(r) => summarize(&[r]),
        Err(e) => Outcome { passed: false, detail: e.to_string() },
    }
}

fn equivalence_ii_and_shift() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst_consistency: f64 = 0.0;
    let mut worst_shift: f64 = 0.0;
    let mut failures = 0;
    let instances = 100;
    for i in 0..instances {
        let dim = 1 + (i as usize % 6);
        let rank = 1 + (i as usize / 6) % dim;
        let a = draw("acceptance_positive", i, dim, InstanceKind::PsdRankDeficient(rank));
        let h = draw("acceptance_direction", i, dim, InstanceKind::Hermitian);
        let b = PositiveDefinite::new(draw("acceptance_base", i, dim, InstanceKind::Pd)).expect("pd");
        let ok = (|| -> opcake_core::Result<bool> {
            let one = layer_cake_positive(&b, &a, &cfg)?;
            let two = layer_cake_two_sided(&b, &a, &cfg)?;
            let bound = 2.0 * (one.error_estimate + two.error_estimate);
            let gap = frob(&one.value, &two.value);
            worst_consistency = worst_consistency.max(gap / bound.max(f64::MIN_POSITIVE));
            let shift = shift_identity_residual(&b, &h, &cfg)?;
            let allowed = 1e-6f64.max(2.0 * shift.error_estimate);
            worst_shift = worst_shift.max(shift.residual / allowed);
            Ok(gap <= bound && shift.residual <= allowed)
        })();
        if !matches!(ok, Ok(true)) {
            failures += 1;
        }
    }
    let ii = run_check(CheckName::EquivalenceII, &suite(1..=6, 100));
    let mut out = match ii {
        Ok(r) => summarize(&[r]),
        Err(e) => Outcome { passed: false, detail: e.to_string() },
    };
    out.passed &= failures == 0;
    out.detail += &format!(
        "; positive vs two-sided and shift reduction: {failures}/{instances} failed, worst ratios {worst_consistency:.2} and {worst_shift:.2} of allowed"
    );
    out
}

fn t_form_vs_gamma_form() -> Outcome {
    let cfg = QuadratureConfig::default();
    let instances = 50;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let dim = 1 + (i as usize % 6);
        let rank = 1 + (i as usize / 6) % dim;
        let a = draw("acceptance_t_form_a", i, dim, InstanceKind::PsdRankDeficient(rank));
        let b = PositiveDefinite::new(draw("acceptance_t_form_b", i, dim, InstanceKind::Pd)).expect("pd");
        let ok = (|| -> opcake_core::Result<bool> {
            let g = frenkel_gamma(&a, &b, &cfg)?;
            let t = frenkel_t(&a, &b, &cfg)?;
            let estimates: f64 = [&g, &t].iter().filter_map(|r| r.quadrature.as_ref()).map(|q| q.error_estimate).sum();
            let bound = 2.0 * estimates;
            let gap = (g.value - t.value).abs();
            worst = worst.max(gap / bound.max(f64::MIN_POSITIVE));
            Ok(gap <= bound)
        })();
        if !matches!(ok, Ok(true)) {
            failures += 1;
        }
    }
    Outcome {
        passed: failures == 0,
        detail: format!("{failures}/{instances} failed, worst gap {worst:.2} of 2x summed estimates"),
    }
}

fn lemma_suite() -> Outcome {
    let base = suite(1..=6, 100);
    let mut reports = Vec::new();
    for check in [
        CheckName::Lipschitz,
        CheckName::LemmaDifferentiability,
        CheckName::HockeyStickPartials,
        CheckName::DerivativeIdentity,
        CheckName::SelfAdjointness,
        CheckName::DominatedQuotientBound,
        CheckName::MixedPartials,
    ] {
        let cfg = if check == CheckName::Lipschitz {
            SuiteConfig { trials: 1000, ..base.clone() }
        } else {
            base.clone()
        };
        match run_check(check, &cfg) {
            Ok(r) => reports.push(r),
            Err(e) => return Outcome { passed: false, detail: format!("{check}: {e}") },
        }
    }
    summarize(&reports)
}

fn closed_form_anchors() -> Outcome {
    let cfg = QuadratureConfig::default();
    let expected = 2.0 * 2f64.ln() - 1.0;
    let a = HermitianMatrix::from_diagonal(&[2.0]);
    let b = PositiveDefinite::new(HermitianMatrix::from_diagonal(&[1.0])).expect("pd");
    let values = [
        umegaki(&a, &b).ok(),
        frenkel_gamma(&a, &b, &cfg).ok().map(|r| r.value),
        frenkel_t(&a, &b, &cfg).ok().map(|r| r.value),
    ];
    let worst = values.iter().map(|v| v.map_or(f64::INFINITY, |v| (v - expected).abs())).fold(0.0, f64::max);

    let a2 = HermitianMatrix::from_diagonal(&[2.0, 2.0]);
    let b2 = PositiveDefinite::new(HermitianMatrix::from_diagonal(&[1.0, 2.0])).expect("pd");
    let cake = layer_cake_positive(&b2, &a2, &cfg)
        .map(|r| frob(&r.value, &HermitianMatrix::from_diagonal(&[2.0, 1.0])))
        .unwrap_or(f64::INFINITY);
    Outcome {
        passed: worst <= 1e-8 && cake <= 1e-8,
        detail: format!("scalar relative entropy max error {worst:.1e}, diagonal layer cake error {cake:.1e} (tol 1e-8)"),
    }
}

fn convergence_probe() -> Outcome {
    match run_check(CheckName::ConvergenceOrder, &suite(1..=6, 1)) {
        Ok(r) => {
            let mut out = summarize(&[r]);
            out.detail += ", residual is |ratio - 4|";
            out
        }
        Err(e) => Outcome { passed: false, detail: e.to_string() },
    }
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_opcake"))
            .args(["verify", "--suite", "all", "--seed", &SEED.to_string()])
            .env_remove("OPCAKE_THREADS")
            .output()
    };
    let strip = |bytes: &[u8]| -> Vec<u8> {
        String::from_utf8_lossy(bytes)
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"wall_time_ms\""))
            .flat_map(|l| l.bytes().chain(std::iter::once(b'\n')))
            .collect()
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let same = strip(&a.stdout) == strip(&b.stdout);
            let ok = a.status.code() == Some(0) && b.status.code() == Some(0) && !a.stdout.is_empty();
            Outcome {
                passed: same && ok,
                detail: format!(
                    "two runs {} ({} bytes), exit codes {:?}/{:?}",
                    if same { "identical" } else { "differ" },
                    a.stdout.len(),
                    a.status.code(),
                    b.status.code()
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => Outcome { passed: false, detail: e.to_string() },
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("equivalence (iii): Frenkel integral vs closed form", equivalence_iii),
        ("equivalence (i): two-sided layer cake vs Daleckii-Krein", equivalence_i),
        ("equivalence (ii) and shift reduction", equivalence_ii_and_shift),
        ("Frenkel t-form vs gamma-form", t_form_vs_gamma_form),
        ("lemma suite", lemma_suite),
        ("closed-form anchors", closed_form_anchors),
        ("convergence probe", convergence_probe),
        ("determinism of verify reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let out = run();
        println!(
            "[{}] criterion {}: {name}: {} [{:.1} s]",
            if out.passed { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            started.elapsed().as_secs_f64()
        );
        if !out.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
