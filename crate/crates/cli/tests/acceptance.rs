//! Acceptance suite: one PASS/FAIL line per criterion, run serially so the
//! timing-sensitive benchmarks do not compete with each other.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use monlab_core::derived::{
    efficiency, management_impact, productivity, scalability_curve, scalability_degree,
};
use monlab_core::dist::{fit_mle, predict_timeliness, DelayModel, DistributionSpec};
use monlab_core::metrics::{quality_summary, speed_summary, Status};
use monlab_core::rng::UniformStream;
use monlab_core::sim::{simulate, Aggregation, SimPlan, ValueProcess};
use monlab_harness::experiments::{impact_experiment, impact_results, scalability_sweep};
use monlab_harness::store::write_run;
use monlab_harness::{run_bench, BenchPlan, WorkloadConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use statrs::distribution::{ContinuousCDF, LogNormal, Normal, Weibull};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// 1. Equation identities and scale invariance.
fn identities() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let pos = 1e-6f64..1e6;
    let strategy = (pos.clone(), pos.clone(), pos.clone(), 0.0f64..=1.0, 1e-3f64..1e3, pos);
    let result = runner.run(&strategy, |(r, c, g2, q, scale, f)| {
        let g = efficiency(r, c, q).unwrap();
        prop_assert_eq!(efficiency(r, c, 0.0).unwrap(), 0.0);
        prop_assert_eq!(productivity(f, 0.0).unwrap(), 1.0);
        if g > 0.0 {
            prop_assert_eq!(scalability_degree(g, g).unwrap(), 1.0);
            let psi = scalability_degree(g, g2).unwrap();
            let scaled = scalability_degree(g * scale, g2 * scale).unwrap();
            prop_assert!(rel(scaled, psi) <= 1e-12, "psi {psi} vs {scaled}");
        }
        let e0 = productivity(f, g2).unwrap();
        let e = productivity(f, g2 + g).unwrap();
        prop_assert_eq!(management_impact(e0, e0).unwrap(), 0.0);
        let mim = management_impact(e0, e).unwrap();
        let scaled = management_impact(e0 * scale, e * scale).unwrap();
        prop_assert!((scaled - mim).abs() <= 1e-12, "mim {mim} vs {scaled}");
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, "1000 random cases"),
        Err(e) => outcome(false, e.to_string()),
    }
}

// 2. Distribution engine: Weibull CDF at the scale, round trips, MLE recovery.
fn distribution_engine() -> Outcome {
    let mut worst_cdf: f64 = 0.0;
    for (k, lambda) in [(0.3, 0.01), (0.7, 1.0), (1.0, 3.5), (2.5, 120.0), (8.0, 0.2)] {
        let w = DistributionSpec::weibull(k, lambda).unwrap();
        worst_cdf = worst_cdf.max((w.cdf(lambda) - (1.0 - (-1.0f64).exp())).abs());
    }

    let specs = [
        DistributionSpec::normal(0.05, 0.01).unwrap(),
        DistributionSpec::lognormal(-3.0, 0.8).unwrap(),
        DistributionSpec::weibull(0.7, 0.02).unwrap(),
        DistributionSpec::weibull(3.0, 1.0).unwrap(),
    ];
    let mut worst_trip: f64 = 0.0;
    for s in &specs {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = s.quantile(p).unwrap();
            worst_trip = worst_trip.max((s.cdf(x) - p).abs());
        }
    }

    let truth = [
        DistributionSpec::normal(0.05, 0.01).unwrap(),
        DistributionSpec::lognormal(-3.0, 0.6).unwrap(),
        DistributionSpec::weibull(0.7, 0.02).unwrap(),
    ];
    let mut recovered = [0usize; 3];
    for trial in 0..20u64 {
        for (i, spec) in truth.iter().enumerate() {
            let data = spec.sample(10_000, 1000 + trial);
            let Ok(fit) = fit_mle(&data, spec.family()) else { continue };
            let (a, b) = spec.params();
            let (fa, fb) = fit.spec.params();
            if rel(fa, a) <= 0.05 && rel(fb, b) <= 0.05 {
                recovered[i] += 1;
            }
        }
    }
    let pass = worst_cdf <= 1e-9 && worst_trip <= 1e-9 && recovered.iter().all(|&n| n >= 18);
    outcome(
        pass,
        format!(
            "cdf(scale) err {worst_cdf:.1e}, round-trip err {worst_trip:.1e}, \
             MLE recovered normal {}/20 lognormal {}/20 weibull {}/20",
            recovered[0], recovered[1], recovered[2]
        ),
    )
}

// 3. Timeliness prediction against empirical fractions drawn through an
// independent quantile implementation.
fn timeliness_prediction() -> Outcome {
    let mut u = UniformStream::new(20_240_601);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let a = u.next_open01();
        let b = u.next_open01();
        let (spec, inv): (DistributionSpec<f64>, Box<dyn Fn(f64) -> f64>) = match i % 3 {
            0 => {
                let (mu, sigma) = (0.01 + 0.1 * a, 0.002 + 0.02 * b);
                let d = Normal::new(mu, sigma).unwrap();
                (DistributionSpec::normal(mu, sigma).unwrap(), Box::new(move |p| d.inverse_cdf(p)))
            }
            1 => {
                let (mu, sigma) = (-6.0 + 4.0 * a, 0.2 + 1.2 * b);
                let d = LogNormal::new(mu, sigma).unwrap();
                (DistributionSpec::lognormal(mu, sigma).unwrap(), Box::new(move |p| d.inverse_cdf(p)))
            }
            _ => {
                let (k, lambda) = (0.4 + 3.0 * a, 0.001 + 0.1 * b);
                let d = Weibull::new(k, lambda).unwrap();
                (DistributionSpec::weibull(k, lambda).unwrap(), Box::new(move |p| d.inverse_cdf(p)))
            }
        };
        // tolerance somewhere in the bulk of the distribution
        let tau = inv(0.1 + 0.8 * u.next_open01());
        let n = 100_000;
        let timely = (0..n).filter(|_| inv(u.next_open01()) < tau).count();
        let empirical = timely as f64 / n as f64;
        let predicted = predict_timeliness(&spec, tau).unwrap();
        worst = worst.max((predicted - empirical).abs());
    }

    let tau = 0.35;
    let k = 0.7;
    let scale = tau / std::f64::consts::LN_2.powf(1.0 / k);
    let median = predict_timeliness(&DistributionSpec::weibull(k, scale).unwrap(), tau).unwrap();
    let pass = worst <= 0.01 && (median - 0.5).abs() <= 1e-9;
    outcome(
        pass,
        format!("max |predicted - empirical| {worst:.4} over 10 specs; median=tau gives {median}"),
    )
}

fn distortion_plan(agents: usize, seed: u64, manager_service: f64) -> SimPlan<f64> {
    SimPlan {
        agent_count: agents,
        poll_interval: 1.0,
        duration: 120.0,
        delay: DelayModel::Distribution(DistributionSpec::weibull(0.7, 1.0).unwrap()),
        value_process: ValueProcess::RateCounter { rate: 1.0 },
        aggregation: Aggregation::Sum,
        seed,
        manager_service,
    }
}

fn distortion_wins(manager_service: f64) -> usize {
    (0..20u64)
        .filter(|&seed| {
            let small = simulate(&distortion_plan(70, seed, manager_service)).unwrap();
            let large = simulate(&distortion_plan(700, seed, manager_service)).unwrap();
            large.summary.mean_abs_rel_error > small.summary.mean_abs_rel_error
        })
        .count()
}

// 4. Distortion grows from 70 to 700 agents. The manager drains responses
// through one collector that handles 350 per poll interval.
fn distortion() -> Outcome {
    let wins = distortion_wins(1.0 / 350.0);
    outcome(wins >= 18, format!("700 > 70 agents in {wins}/20 seeds (manager service = interval/350)"))
}

fn distortion_info() -> String {
    let wins = distortion_wins(0.0);
    format!("without manager service time, 700 > 70 agents in {wins}/20 seeds")
}

// 5. Harness smoke: 50 agents, 10 rounds/s, 60 s.
fn smoke(run_dir: &Path) -> Outcome {
    let mut plan = BenchPlan::new(50, 10.0, 60.0);
    plan.round_timeout = 0.1;
    plan.delay_tolerance = 1.0;
    plan.seed = 5;
    let rec = match run_bench(&plan) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let _ = write_run(run_dir, &rec);
    let series = &rec.monitoring_series;
    let ok = series.samples.iter().filter(|s| s.status == Status::Ok).count();
    let ok_frac = ok as f64 / series.samples.len().max(1) as f64;
    let timeliness = quality_summary(series, 1.0).map(|q| q.timeliness).unwrap_or(0.0);
    // round rate seen from one agent's send times
    let t: Vec<f64> = series
        .samples
        .iter()
        .filter(|s| s.agent_id == "agent-0000")
        .map(|s| s.timestamp)
        .collect();
    let observed_rate = match (t.first(), t.last()) {
        (Some(a), Some(b)) if b > a => (t.len() - 1) as f64 / (b - a),
        _ => 0.0,
    };
    let p95 = speed_summary(series).ok().and_then(|s| s.delay_p95).unwrap_or(f64::NAN);
    let pass = rec.aborted.is_none()
        && ok_frac >= 0.99
        && timeliness >= 0.99
        && rel(rec.achieved_round_rate, 10.0) <= 0.05
        && rel(observed_rate, 10.0) <= 0.05;
    outcome(
        pass,
        format!(
            "{} samples, ok {:.4}, timeliness {timeliness:.4}, round rate {:.3} (observed {observed_rate:.3}), p95 delay {:.2} ms",
            series.samples.len(),
            ok_frac,
            rec.achieved_round_rate,
            p95 * 1e3
        ),
    )
}

fn sweep_plan(attributes: u32, duration: f64) -> BenchPlan {
    let mut plan = BenchPlan::new(10, 10.0, duration);
    plan.service_delay = Some(DelayModel::Constant(0.005));
    plan.round_timeout = 0.1;
    plan.attributes_per_poll = attributes;
    plan.attribute_count = attributes;
    plan.seed = 6;
    plan
}

fn psi_sweep(plan: &BenchPlan) -> Result<Vec<(f64, f64)>, String> {
    let runs = scalability_sweep(plan, &[10, 25, 50, 100]).map_err(|e| e.to_string())?;
    if let Some((r, _)) = runs.iter().find(|(r, _)| r.is_aborted()) {
        return Err(format!("run {} aborted", r.run_id));
    }
    let points: Vec<_> = runs.iter().map(|(_, p)| *p).collect();
    let curve = scalability_curve(&points, 10.0).map_err(|e| e.to_string())?;
    Ok(curve.iter().map(|s| (s.k2, s.psi)).collect())
}

fn fmt_psi(v: &[(f64, f64)]) -> String {
    v.iter().map(|(k, p)| format!("{k}:{p:.3}")).collect::<Vec<_>>().join(" ")
}

// 6. Constant-delay scalability: Ψ stays near 1 across the agent sweep.
fn constant_delay_scalability() -> Outcome {
    match psi_sweep(&sweep_plan(200, 60.0)) {
        Ok(v) => outcome(
            v.iter().all(|(_, p)| (0.9..=1.1).contains(p)),
            format!("psi by agents (200 attributes per poll) {}", fmt_psi(&v)),
        ),
        Err(e) => outcome(false, e),
    }
}

fn scalability_info() -> String {
    match psi_sweep(&sweep_plan(1, 10.0)) {
        Ok(v) => format!("with 1 attribute per poll, psi by agents {}", fmt_psi(&v)),
        Err(e) => format!("1-attribute sweep failed: {e}"),
    }
}

// 7. Impact directionality with a colocated workload.
fn impact() -> Outcome {
    let mut plan = BenchPlan::new(20, 1.0, 8.0);
    plan.round_timeout = 0.03;
    plan.workload = Some(WorkloadConfig {
        task_rate: 50.0,
        task_size: 2.0,
        task_deadline: 0.02,
        colocated: true,
    });
    // baseline, identical control, low, high
    let rates = [0.5, 0.5, 1.0, 25.0];
    let mut ordered = 0;
    let mut controls = Vec::new();
    let mut pairs = Vec::new();
    for rep in 0..10u64 {
        plan.seed = 700 + rep;
        let mims = impact_experiment(&plan, &rates)
            .and_then(|pts| {
                if pts.iter().any(|p| p.productivity.is_none()) {
                    return Ok(None);
                }
                impact_results(&pts).map(Some)
            });
        match mims {
            Ok(Some(m)) => {
                controls.push(m[1].mim.abs());
                if m[3].mim >= m[2].mim {
                    ordered += 1;
                }
                pairs.push(format!("{:.3}/{:.3}", m[2].mim, m[3].mim));
            }
            Ok(None) => pairs.push("aborted".into()),
            Err(e) => pairs.push(format!("error: {e}")),
        }
    }
    controls.sort_by(f64::total_cmp);
    let median = if controls.is_empty() {
        f64::INFINITY
    } else {
        let n = controls.len();
        if n % 2 == 1 {
            controls[n / 2]
        } else {
            0.5 * (controls[n / 2 - 1] + controls[n / 2])
        }
    };
    outcome(
        ordered >= 9 && median < 0.05,
        format!(
            "MIM(25/s) >= MIM(1/s) in {ordered}/10 pairs, control median |MIM| {median:.4}; low/high: {}",
            pairs.join(" ")
        ),
    )
}

fn monlab(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_monlab"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<(), String> {
    for n in names {
        let x = std::fs::read(a.join(n)).map_err(|e| format!("{n}: {e}"))?;
        let y = std::fs::read(b.join(n)).map_err(|e| format!("{n}: {e}"))?;
        if x != y {
            return Err(format!("{n} differs"));
        }
    }
    Ok(())
}

// 8. simulate and report re-runs are byte-identical.
fn determinism(work: &Path, run_dir: &Path) -> Outcome {
    let check = || -> Result<(), String> {
        let sim = |out: &Path| {
            monlab(&[
                "simulate", "--agents", "200", "--interval", "1", "--duration", "60", "--delay",
                "weibull:0.7,1", "--process", "rate:1", "--agg", "sum", "--seed", "8",
                "--out", out.to_str().unwrap(),
            ])
        };
        let (s1, s2) = (work.join("sim1"), work.join("sim2"));
        sim(&s1)?;
        sim(&s2)?;
        same_files(&s1, &s2, &["trace.csv", "summary.json"])?;

        let mut inputs = vec![s1.to_str().unwrap().to_string()];
        if run_dir.join("run.json").is_file() {
            inputs.push(run_dir.to_str().unwrap().to_string());
        }
        let report = |out: &Path| {
            let mut args: Vec<&str> = vec!["report"];
            args.extend(inputs.iter().map(String::as_str));
            args.extend(["--out", out.to_str().unwrap()]);
            monlab(&args)
        };
        let (r1, r2) = (work.join("rep1"), work.join("rep2"));
        report(&r1)?;
        report(&r2)?;
        same_files(
            &r1,
            &r2,
            &["scalability.dat", "impact.dat", "timeliness.dat", "distortion.dat", "summary.md"],
        )
    };
    match check() {
        Ok(()) => outcome(true, "simulate and report outputs identical across re-runs"),
        Err(e) => outcome(false, e),
    }
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let run_dir = work.path().join("smoke-run");
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {n} [{name}]: {} ({:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    };
    report(1, "equation identities", &mut identities);
    report(2, "distribution engine", &mut distribution_engine);
    report(3, "timeliness prediction", &mut timeliness_prediction);
    report(4, "distortion reproduction", &mut distortion);
    println!("  info: {}", distortion_info());
    report(5, "harness smoke", &mut || smoke(&run_dir));
    report(6, "constant-delay scalability", &mut constant_delay_scalability);
    println!("  info: {}", scalability_info());
    report(7, "impact directionality", &mut impact);
    report(8, "determinism", &mut || determinism(work.path(), &run_dir));
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
