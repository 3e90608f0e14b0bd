//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runs the full default study twice (once per
//! thread count), so expect a few minutes on one core.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use exploration_design::scheduler::DEFAULT_X_MAX;
use exploration_design::{
    full_incremental_info, immediate_condition, init_experiment, moment_expansion_check,
    optimize_schedule, quadratic_example, regret_approx, regret_upper_bound, Excitation,
    InformationFunction, ScheduleKind, SystemModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const BIN: &str = env!("CARGO_BIN_EXE_xdesign");

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

fn xdesign(args: &[&str], out: &Path) -> (i32, String, Duration) {
    let started = Instant::now();
    let o = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let text =
        String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap_or(-1), text, started.elapsed())
}

/// `table1.csv` keyed by `(theta0, strategy, design)` → mean regret.
fn read_table(dir: &Path) -> BTreeMap<(String, String, String), f64> {
    let text = std::fs::read_to_string(dir.join("table1.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name| header.iter().position(|h| *h == name).unwrap();
    let (t, s, d, m) = (
        col("theta0"),
        col("strategy"),
        col("design"),
        col("mean_regret"),
    );
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                (f[t].to_string(), f[s].to_string(), f[d].to_string()),
                f[m].parse().unwrap(),
            )
        })
        .collect()
}

/// `fig2_data.csv` keyed by `(strategy, design)` → trajectory.
fn read_trajectories(dir: &Path) -> BTreeMap<(String, String), Vec<f64>> {
    let text = std::fs::read_to_string(dir.join("fig2_data.csv")).unwrap();
    let mut out: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for l in text.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        out.entry((f[1].to_string(), f[2].to_string()))
            .or_default()
            .push(f[4].parse().unwrap());
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

struct Study {
    dir: PathBuf,
    exit: i32,
    elapsed: Duration,
}

fn table_checks(study: &Study) -> [Outcome; 4] {
    if study.exit != 0 {
        let o = || outcome(false, format!("reproduce exited with {}", study.exit));
        return [o(), o(), o(), o()];
    }
    let table = read_table(&study.dir);
    let get =
        |theta: &str, s: &str, d: &str| table[&(theta.to_string(), s.to_string(), d.to_string())];

    // 1: regret levels at theta0 = 0.4.
    let mut ok = true;
    let mut parts = vec![];
    for (strategy, target, tol) in [
        ("lazy", 10.676, 0.10),
        ("immediate_binary", 7.07, 0.10),
        ("immediate_gaussian", 9.37, 0.10),
    ] {
        for d in ["a", "b"] {
            let v = get("0.4", strategy, d);
            ok &= rel(v, target) <= tol;
            parts.push(format!("{strategy}/{d}={v:.3} (target {target})"));
        }
    }
    for d in ["a", "b"] {
        let (dec, imm) = (
            get("0.4", "decaying_gaussian", d),
            get("0.4", "immediate_gaussian", d),
        );
        ok &= rel(dec, imm) <= 0.02;
        parts.push(format!("decaying/{d}={dec:.3} vs immediate {imm:.3}"));
    }
    parts.push(format!("runtime {:.0?}", study.elapsed));
    let c1 = outcome(
        ok && study.elapsed < Duration::from_secs(300),
        parts.join(", "),
    );

    // 2: ordering under design (b) for every system.
    let thetas: Vec<String> = {
        let mut v: Vec<String> = table.keys().map(|k| k.0.clone()).collect();
        v.dedup();
        v
    };
    let mut bad = vec![];
    for th in &thetas {
        let lazy = get(th, "lazy", "b");
        let g = get(th, "immediate_gaussian", "b");
        let b = get(th, "immediate_binary", "b");
        let dec = get(th, "decaying_gaussian", "b");
        let lazy_wins = lazy < g.min(b).min(dec);
        if !(b < g && g <= lazy) || lazy_wins {
            bad.push(format!(
                "theta0={th}: binary {b:.4}, gaussian {g:.4}, lazy {lazy:.4}, decaying {dec:.4}"
            ));
        }
    }
    let c2 = outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} systems", thetas.len())
        } else {
            bad.join("; ")
        },
    );

    // 3: design (a) close to design (b) at theta0 = 0.4.
    let mut ok = true;
    let mut parts = vec![];
    for s in [
        "immediate_gaussian",
        "immediate_binary",
        "decaying_gaussian",
    ] {
        let (a, b) = (get("0.4", s, "a"), get("0.4", s, "b"));
        ok &= rel(a, b) <= 0.03;
        parts.push(format!(
            "{s}: a={a:.3} b={b:.3} ({:.1}%)",
            100.0 * rel(a, b)
        ));
    }
    let c3 = outcome(ok, parts.join(", "));

    // 4: tuned immediate binary drops below lazy by t = 35.
    let traj = read_trajectories(&study.dir);
    let mut ok = true;
    let mut parts = vec![];
    for d in ["a", "b"] {
        let lazy = &traj[&("lazy".to_string(), d.to_string())];
        let bin = &traj[&("immediate_binary".to_string(), d.to_string())];
        let cross = (0..lazy.len()).find(|&t| bin[t] < lazy[t]).map(|t| t + 1);
        ok &= matches!(cross, Some(t) if t <= 35);
        parts.push(format!(
            "design {d}: crossing at t={}",
            cross.map_or("never".into(), |t| t.to_string())
        ));
    }
    let c4 = outcome(ok, parts.join(", "));
    [c1, c2, c3, c4]
}

fn random_instance(rng: &mut ChaCha8Rng) -> (InformationFunction, f64, usize) {
    let coeffs = if rng.random_bool(0.5) {
        let u0: f64 = rng.random_range(-3.0..3.0);
        vec![
            u0.powi(4),
            6.0 * u0 * u0,
            if rng.random_bool(0.5) { 3.0 } else { 1.0 },
        ]
    } else {
        vec![
            rng.random_range(0.01..10.0),
            rng.random_range(0.0..10.0),
            rng.random_range(0.01..3.0),
            rng.random_range(0.0..0.5),
        ]
    };
    let i0 = (rng.random_range(0.05f64.ln()..10f64.ln())).exp();
    (
        InformationFunction::polynomial(&coeffs).unwrap(),
        i0,
        rng.random_range(2..=60),
    )
}

fn criterion_5(dir: &Path) -> Outcome {
    let (code, text, elapsed) = xdesign(&["verify"], dir);
    let summary = text
        .lines()
        .find(|l| l.contains("instances passed"))
        .unwrap_or("")
        .to_string();
    outcome(
        code == 0 && elapsed < Duration::from_secs(60),
        format!("{summary} in {elapsed:.1?}"),
    )
}

fn criteria_6_7() -> [Outcome; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut held, mut counter, mut kkt_bad) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (f, i0, horizon) = random_instance(&mut rng);
        let (_, holds) = immediate_condition(&f, i0, horizon).unwrap();
        let sol = optimize_schedule(&f, i0, horizon, DEFAULT_X_MAX).unwrap();
        if holds {
            held += 1;
            counter += (sol.kind != ScheduleKind::Immediate) as usize;
        }
        kkt_bad += (!sol.kkt_satisfied()) as usize;
        worst = worst.max((sol.kkt_residuals[0] * sol.x1).abs());
    }
    // The ten study systems as designed with the true parameter.
    for theta0 in [-2.0, -0.7, -0.5, -0.4, -0.3, 0.2, 0.4, 0.7, 1.0, 3.0] {
        for e in [Excitation::Gaussian, Excitation::Binary] {
            let f = InformationFunction::moment(e, -(theta0 + 1.0));
            let sol = optimize_schedule(&f, 1.0, 50, DEFAULT_X_MAX).unwrap();
            kkt_bad += (!sol.kkt_satisfied()) as usize;
        }
    }
    [
        outcome(
            counter == 0,
            format!("condition held on {held} of 1000 instances, {counter} counterexamples"),
        ),
        outcome(
            kkt_bad == 0,
            format!("{kkt_bad} of 1020 solutions violate KKT, max |λ₁x₁| = {worst:.1e}"),
        ),
    ]
}

fn criterion_8() -> Outcome {
    let model = quadratic_example(0.4, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let mut est_values = Vec::with_capacity(n);
    let mut info = 0.0;
    for _ in 0..n {
        let mut est = init_experiment(&model, 1.0, rng.sample(StandardNormal)).unwrap();
        for _ in 1..20 {
            est = est.update(1.0, model.measure(1.0, rng.sample(StandardNormal)));
        }
        info = est.info;
        est_values.push(est.theta_hat);
    }
    let mean = est_values.iter().sum::<f64>() / n as f64;
    let var = est_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let bias = mean - 0.4;
    let ratio = var * info;
    outcome(
        (ratio - 1.0).abs() <= 0.05 && bias.abs() <= 3.0 * se,
        format!(
            "Var·I₂₀ = {ratio:.4}, bias = {bias:.2e} ({:.2} s.e.)",
            bias / se
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let u0 = rng.random_range(-3.0..1.0);
        let x = rng.random_range(0.0..3.0);
        let a = rng.random_range(0.0..1.0);
        let e = if k % 2 == 0 {
            Excitation::Gaussian
        } else {
            Excitation::Binary
        };
        let (analytic, mc) = moment_expansion_check(e, u0, x, a, 1_000_000, 900 + k).unwrap();
        assert_eq!(analytic, full_incremental_info(e, u0, x, a).unwrap());
        worst = worst.max(rel(mc, analytic));
    }
    outcome(
        worst <= 0.01,
        format!("max relative gap {:.3}% over 20 triples", 100.0 * worst),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut violations = 0;
    for _ in 0..100 {
        let u0: f64 = rng.random_range(-3.0..3.0);
        let e = if rng.random_bool(0.5) {
            Excitation::Gaussian
        } else {
            Excitation::Binary
        };
        let f = InformationFunction::moment(e, u0);
        let i0 = rng.random_range(0.05..10.0);
        let horizon = rng.random_range(2..60);
        let x: Vec<f64> = (0..horizon - 1)
            .map(|_| rng.random_range(0.0..5.0))
            .collect();
        let approx = regret_approx(&f, i0, &x, horizon).unwrap();
        let ub = regret_upper_bound(&f, i0, &x, horizon).unwrap();
        violations += (approx >= ub) as usize;
    }
    outcome(
        violations == 0,
        format!("{violations} of 100 instances with R̃ >= R_ub"),
    )
}

fn criterion_11(first: &Study, second: &Study) -> Outcome {
    let mut differing = vec![];
    for name in ["table1.csv", "fig2_data.csv", "summary.json"] {
        let a = std::fs::read(first.dir.join(name)).unwrap_or_default();
        let b = std::fs::read(second.dir.join(name)).unwrap_or_default();
        if a.is_empty() || a != b {
            differing.push(name);
        }
    }
    let digests = |d: &Path| -> serde_json::Value {
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap();
        serde_json::json!([m["config_hash"], m["outputs"]])
    };
    let same_manifest = digests(&first.dir) == digests(&second.dir);
    outcome(
        differing.is_empty() && same_manifest,
        if differing.is_empty() {
            "--jobs 1 and --jobs 3 outputs and manifest digests identical".to_string()
        } else {
            format!("differing: {differing:?}")
        },
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let dir = tmp.path().join(name);
        let (exit, text, elapsed) = xdesign(&["reproduce", "--jobs", jobs], &dir);
        if exit != 0 {
            eprintln!("{text}");
        }
        Study { dir, exit, elapsed }
    };
    let first = run("jobs1", "1");
    let second = run("jobs3", "3");
    let [c1, c2, c3, c4] = table_checks(&first);
    let [c6, c7] = criteria_6_7();
    let results = [
        ("regret table at theta0 = 0.4", c1),
        ("strategy ordering under design (b)", c2),
        ("design (a) vs (b) proximity", c3),
        ("binary trajectory crosses lazy", c4),
        (
            "exhaustive lazy-or-immediate structure",
            criterion_5(&tmp.path().join("verify")),
        ),
        ("sufficient condition soundness", c6),
        ("KKT certificate", c7),
        ("open-loop estimator efficiency", criterion_8()),
        ("moment expansion oracle", criterion_9()),
        ("approximate regret below the bound", criterion_10()),
        (
            "determinism across thread counts",
            criterion_11(&first, &second),
        ),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {}: {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += (!o.pass) as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
