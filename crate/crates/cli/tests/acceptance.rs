//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every simulated trial runs with the
//! per-step invariant checks enabled.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use scatter_cli::{lemma_report, run, ExperimentSpec, InitSpec};
use scatter_core::analysis::{
    estimate, exact_max_load, run_batch, scaling_fit, GrowthModel, TrialBatch,
};
use scatter_core::protocols::f_from_g;
use scatter_core::protocols::{
    ClementGlobal, DestinationFunction, Dp2, FFunction, FFunctionError, InverseAckermann, LogLog,
    LogStar, SaF, DEFAULT_SCRIPT_N,
};
use scatter_core::scheduler::{DetectionMode, InitialConfig, SchedulerPolicy, SimOptions};

type Q = BigRational;

/// Upper bound on `mean_bits / (n·log2 n)` for `sa:loglog` from a gathered
/// start under FSYNC. Measured once at 4.3 for n = 64, falling to 2.2 at
/// n = 4096 (100 trials per size), and frozen here as a regression bound.
const FROZEN_BIT_RATIO_BOUND: f64 = 5.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn batch(
    protocol: &dyn DestinationFunction<Q>,
    mode: DetectionMode,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<TrialBatch, String> {
    let mut opts = SimOptions::<Q>::new(mode, SchedulerPolicy::Fsync);
    opts.check_invariants = true;
    run_batch(
        protocol,
        n,
        &InitialConfig::Gathered,
        &opts,
        trials,
        seed,
        None,
    )
    .map_err(|e| e.to_string())
}

fn nlogn(n: usize) -> f64 {
    n as f64 * (n as f64).log2()
}

fn lower_bound_floor() -> Result<Outcome, String> {
    let sa = SaF::new(Arc::new(LogLog), DEFAULT_SCRIPT_N);
    let protocols: [(&dyn DestinationFunction<Q>, DetectionMode); 3] = [
        (&Dp2, DetectionMode::None),
        (&ClementGlobal, DetectionMode::StrongGlobal),
        (&sa, DetectionMode::None),
    ];
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut worst_share = 1.0f64;
    for (protocol, mode) in protocols {
        for n in [4usize, 8, 16, 32] {
            let b = batch(protocol, mode, n, 200, 0xA1 + n as u64)?;
            if b.records.iter().any(|r| r.timed_out) {
                return Ok(Outcome {
                    pass: false,
                    detail: format!("{} n={n} timed out", protocol.id()),
                });
            }
            let floor = nlogn(n);
            let mean =
                b.records.iter().map(|r| r.total_bits as f64).sum::<f64>() / b.records.len() as f64;
            let share = b
                .records
                .iter()
                .filter(|r| r.total_bits as f64 >= floor)
                .count() as f64
                / b.records.len() as f64;
            pass &= mean >= floor && share >= 0.99;
            worst = worst.min(mean / floor);
            worst_share = worst_share.min(share);
        }
    }
    Ok(Outcome {
        pass,
        detail: format!(
            "min mean_bits/(n log2 n) = {worst:.3}, min per-trial share = {worst_share:.3}"
        ),
    })
}

fn constant_rounds_strong() -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [8usize, 32, 128] {
        let b = batch(
            &ClementGlobal,
            DetectionMode::StrongGlobal,
            n,
            500,
            0xB2 + n as u64,
        )?;
        let e = estimate(&b).map_err(|e| e.to_string())?;
        let one = b
            .records
            .iter()
            .filter(|r| !r.timed_out && r.rounds_used == 1)
            .count() as f64
            / b.records.len() as f64;
        pass &= e.timed_out == 0 && e.mean_rounds <= 2.5 && one >= 0.45;
        parts.push(format!(
            "n={n}: mean {:.3}, P(1 round) {one:.3}",
            e.mean_rounds
        ));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn sa_loglog_batches() -> Result<Vec<TrialBatch>, String> {
    let sa = SaF::new(Arc::new(LogLog), DEFAULT_SCRIPT_N);
    [64usize, 256, 1024, 4096]
        .into_iter()
        .map(|n| batch(&sa, DetectionMode::None, n, 100, 0xC3 + n as u64))
        .collect()
}

fn sa_round_bound(batches: &[TrialBatch]) -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for b in batches {
        let e = estimate(b).map_err(|e| e.to_string())?;
        let bound = 2 * LogLog.eval(b.n as u64) + 1;
        pass &= e.timed_out == 0 && e.mean_rounds <= bound as f64;
        parts.push(format!("n={}: {:.2} <= {bound}", b.n, e.mean_rounds));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn sa_bit_optimality(batches: &[TrialBatch]) -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut series = Vec::new();
    for b in batches {
        let e = estimate(b).map_err(|e| e.to_string())?;
        let ratio = e.mean_bits / nlogn(b.n);
        pass &= e.timed_out == 0 && (1.0..=FROZEN_BIT_RATIO_BOUND).contains(&ratio);
        parts.push(format!("n={}: {ratio:.3}", b.n));
        series.push((b.n as u64, e.mean_bits));
    }
    let fit = scaling_fit(&series).map_err(|e| e.to_string())?;
    pass &= fit.best == GrowthModel::NLogN;
    Ok(Outcome {
        pass,
        detail: format!(
            "ratios {} within [1, {FROZEN_BIT_RATIO_BOUND}], best fit {}",
            parts.join(", "),
            fit.best.label()
        ),
    })
}

fn exact_oracle() -> Result<Outcome, String> {
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let report = lemma_report(8, 16).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_scatter"))
        .args(["lemma-report", "--max-n", "8", "--max-k", "16"])
        .output()
        .map_err(|e| e.to_string())?;
    let again = Command::new(env!("CARGO_BIN_EXE_scatter"))
        .args(["lemma-report", "--max-n", "8", "--max-k", "16"])
        .output()
        .map_err(|e| e.to_string())?;
    let values = exact_max_load(2, 2).map_err(|e| e.to_string())?.prob_eq(1) == q(1, 2)
        && exact_max_load(3, 3).map_err(|e| e.to_string())?.prob_eq(1) == q(2, 9)
        && exact_max_load(2, 8).map_err(|e| e.to_string())?.prob_gt(1) == q(1, 8);
    let pass = report.all_pass
        && status.status.code() == Some(0)
        && status.stdout == again.stdout
        && values;
    Ok(Outcome {
        pass,
        detail: format!(
            "all checks pass: {}, exit {:?}, deterministic output: {}, exact values match: {values}",
            report.all_pass,
            status.status.code(),
            status.stdout == again.stdout
        ),
    })
}

fn csv_determinism() -> Result<Outcome, String> {
    let spec = ExperimentSpec {
        protocol: "sa:loglog".into(),
        n: vec![2, 16, 64],
        mode: DetectionMode::WeakLocal,
        policy: SchedulerPolicy::SsyncRandom { p_activate: 0.5 },
        trials: 20,
        master_seed: 7,
        script_n: DEFAULT_SCRIPT_N,
        max_rounds: None,
        init: InitSpec::Grid(4),
        out: None,
    };
    let render = || -> Result<Vec<u8>, String> {
        let mut buf = Vec::new();
        run(&spec, &mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b) = (render()?, render()?);
    let dir = std::env::temp_dir();
    let path = |tag: &str| {
        dir.join(format!(
            "scatter-acceptance-{}-{tag}.csv",
            std::process::id()
        ))
    };
    let mut files = Vec::new();
    for tag in ["a", "b"] {
        let out = path(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_scatter"))
            .args([
                "run",
                "--protocol",
                "dp2",
                "--n",
                "2,8",
                "--trials",
                "25",
                "--seed",
                "7",
            ])
            .args(["--policy", "ssync-rr:3", "--out"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Ok(Outcome {
                pass: false,
                detail: format!("cli exited with {status}"),
            });
        }
        files.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        let _ = std::fs::remove_file(&out);
        let mut summary = out.into_os_string();
        summary.push(".summary.json");
        let _ = std::fs::remove_file(summary);
    }
    let pass = a == b && files[0] == files[1] && a.len() > 100;
    Ok(Outcome {
        pass,
        detail: format!(
            "library CSV identical: {}, binary CSV identical: {} ({} bytes); other invariants are checked on every step of every trial",
            a == b,
            files[0] == files[1],
            files[0].len()
        ),
    })
}

/// Checks the defining identities of a largest-preimage inverse on
/// `0..=limit`: `v = f⁻¹(f(x))` satisfies `v ≥ x`, `f(v) = f(x)` and
/// `f(v + 1) = f(x) + 1` wherever `v` fits in a machine word.
fn round_trip(f: &dyn FFunction, limit: u64, max_y: Option<u64>) -> Result<(), String> {
    let mut cache: Vec<Option<Result<BigUint, FFunctionError>>> = Vec::new();
    let mut prev = 0;
    for x in 0..=limit {
        let y = f.eval(x);
        if y < prev {
            return Err(format!("{} decreases at {x}", f.name()));
        }
        prev = y;
        if cache.len() <= y as usize {
            cache.resize(y as usize + 1, None);
        }
        let inv = cache[y as usize]
            .get_or_insert_with(|| f.inverse(y))
            .clone();
        match inv {
            Ok(v) => {
                if v < BigUint::from(x) {
                    return Err(format!("{}: inverse({y}) = {v} < {x}", f.name()));
                }
                if let Some(v) = v.to_u64() {
                    if f.eval(v) != y || f.eval(v + 1) != y + 1 {
                        return Err(format!("{}: identities fail at y = {y}", f.name()));
                    }
                }
            }
            Err(FFunctionError::Unrepresentable { .. }) if max_y.is_some_and(|m| y > m) => {}
            Err(e) => return Err(format!("{}: inverse({y}) failed: {e}", f.name())),
        }
    }
    Ok(())
}

fn ffunction_correctness() -> Result<Outcome, String> {
    let limit = 1_000_000;
    round_trip(&LogLog, limit, None)?;
    round_trip(&LogStar, limit, None)?;
    round_trip(&InverseAckermann, limit, Some(3))?;
    let identity = f_from_g(|x| x).map_err(|e| e.to_string())?;
    round_trip(&identity, limit, None)?;
    let log_star: Vec<u64> = [1u64, 2, 4, 16, 65536]
        .iter()
        .map(|&x| LogStar.eval(x))
        .collect();
    let pass = log_star == [0, 1, 2, 3, 4];
    Ok(Outcome {
        pass,
        detail: format!("round trips hold up to {limit}; log* values {log_star:?}"),
    })
}

fn dp2_round_growth() -> Result<Outcome, String> {
    let mut means = Vec::new();
    for n in [4usize, 16, 64, 256] {
        let b = batch(&Dp2, DetectionMode::None, n, 200, 0xD4 + n as u64)?;
        let e = estimate(&b).map_err(|e| e.to_string())?;
        if e.timed_out > 0 {
            return Ok(Outcome {
                pass: false,
                detail: format!("n={n}: {} timeouts", e.timed_out),
            });
        }
        means.push((n as u64, e.mean_rounds));
    }
    let fit = scaling_fit(&means).map_err(|e| e.to_string())?;
    let monotone = means.windows(2).all(|w| w[0].1 <= w[1].1);
    let pass = monotone && fit.best != GrowthModel::Constant;
    let shown: Vec<String> = means
        .iter()
        .map(|(n, m)| format!("n={n}: {m:.2}"))
        .collect();
    Ok(Outcome {
        pass,
        detail: format!(
            "mean rounds {}; best fit {} (report only)",
            shown.join(", "),
            fit.best.label()
        ),
    })
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Result<Outcome, String>, started: Instant| {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(o) => {
                let verdict = if o.pass { "PASS" } else { "FAIL" };
                if !o.pass {
                    failed += 1;
                }
                println!(
                    "criterion {id} [{name}]: {verdict} ({secs:.1}s) {}",
                    o.detail
                );
            }
            Err(e) => {
                failed += 1;
                println!("criterion {id} [{name}]: FAIL ({secs:.1}s) error: {e}");
            }
        }
    };

    let t = Instant::now();
    report(1, "lower-bound floor", lower_bound_floor(), t);
    let t = Instant::now();
    report(
        2,
        "constant rounds with strong detection",
        constant_rounds_strong(),
        t,
    );
    let t = Instant::now();
    let sa = sa_loglog_batches();
    match &sa {
        Ok(batches) => {
            report(3, "sa:loglog round bound", sa_round_bound(batches), t);
            let t = Instant::now();
            report(4, "sa:loglog bit optimality", sa_bit_optimality(batches), t);
        }
        Err(e) => {
            report(3, "sa:loglog round bound", Err(e.clone()), t);
            report(
                4,
                "sa:loglog bit optimality",
                Err(e.clone()),
                Instant::now(),
            );
        }
    }
    let t = Instant::now();
    report(5, "exact oracle vs bounds", exact_oracle(), t);
    let t = Instant::now();
    report(6, "invariants and CSV determinism", csv_determinism(), t);
    let t = Instant::now();
    report(7, "f-function correctness", ffunction_correctness(), t);
    let t = Instant::now();
    report(8, "dp2 round growth", dp2_round_growth(), t);

    if failed == 0 {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) FAIL");
        ExitCode::FAILURE
    }
}
