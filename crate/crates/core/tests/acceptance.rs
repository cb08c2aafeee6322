//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use falcon::env::make_planted_instance;
use falcon::sim::replicate;
use falcon::verify::{check_equi, implicit_quantities, product_measure, Kernel};
use falcon::{run, ActionDistribution, EpochSchedule, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PLANTED: &str = r#"
horizon = 20000
seed = 0
[algorithm]
kind = "falcon"
delta = 0.05
[environment]
kind = "planted"
contexts = 20
actions = 5
class_size = 50
gap = 0.2
[schedule]
kind = "geometric"
"#;

const LINEAR: &str = r#"
horizon = 10000
seed = 0
[algorithm]
kind = "falcon_plus"
delta = 0.05
[algorithm.xi]
kind = "linear"
dim = 5
c = 0.08
[environment]
kind = "linear"
dim = 5
actions = 4
[schedule]
kind = "geometric"
"#;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn seeds() -> Vec<u64> {
    (0..20).collect()
}

/// Written out here rather than shared with the library.
fn bound(k: f64, t: f64, f: f64, delta: f64, tau_1: f64) -> f64 {
    608.5 * (k * t * (f * t / delta).ln()).sqrt() + (8.0 * t * (2.0 / delta).ln()).sqrt() + tau_1
}

fn criterion_1() -> Verdict {
    let config = RunConfig::from_toml_str(PLANTED).unwrap();
    let (_, runs) = replicate(&config, &seeds()).unwrap();
    let b = bound(5.0, 20000.0, 50.0, 0.05, 2.0);
    let worst = runs
        .iter()
        .map(|r| r.final_regret())
        .fold(f64::MIN, f64::max);
    let violations = runs.iter().filter(|r| r.final_regret() > b).count();
    verdict(
        violations == 0 && runs.len() == 20,
        format!("{violations}/20 seeds above bound {b:.0}; worst regret {worst}"),
    )
}

fn criterion_2() -> Verdict {
    let config = RunConfig::from_toml_str(PLANTED).unwrap();
    let mut uniform = config.clone();
    uniform.algorithm = falcon::Algorithm::Uniform;
    let (ours, runs) = replicate(&config, &seeds()).unwrap();
    let (base, _) = replicate(&uniform, &seeds()).unwrap();
    let ratio = ours.mean / base.mean;
    let half = 10_000;
    let improving = runs
        .iter()
        .filter(|r| r.mean_regret(half + 1, 20_000) < r.mean_regret(1, half))
        .count();
    verdict(
        ratio <= 0.2 && improving >= 16,
        format!(
            "falcon mean {:.1} / uniform mean {:.1} = {ratio:.3} (need <= 0.2); second half lower in {improving}/20 seeds (need >= 16)",
            ours.mean, base.mean
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut config = RunConfig::from_toml_str(
        &PLANTED
            .replace("contexts = 20", "contexts = 4")
            .replace("class_size = 50", "class_size = 8"),
    )
    .unwrap();
    config.horizon = Some(100_000);
    config.output.log_every = Some(1000);
    let geo = run(&config).unwrap();

    let mut short = config.clone();
    short.horizon = Some(100);
    short.output.log_every = None;
    short.schedule = falcon::config::ScheduleSpec::KnownHorizon;
    let known = run(&short).unwrap();
    let taus = EpochSchedule::known_horizon(100)
        .unwrap()
        .boundaries_through(100)
        .unwrap();

    let passed = geo.totals.oracle_calls == 16
        && geo.totals.epochs == 17
        && known.totals.oracle_calls == 8
        && known.totals.epochs == 9
        && taus == [10, 32, 57, 75, 87, 94, 97, 99, 100];
    verdict(
        passed,
        format!(
            "geometric T=1e5: {} calls / {} epochs; known-horizon T=100: {} calls / {} epochs, boundaries {taus:?}",
            geo.totals.oracle_calls, geo.totals.epochs, known.totals.oracle_calls, known.totals.epochs
        ),
    )
}

fn random_table(rng: &mut ChaCha8Rng, nx: usize, k: usize) -> falcon::TablePredictor {
    let rows: Vec<Vec<f64>> = (0..nx)
        .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
        .collect();
    falcon::TablePredictor::from_rows(&rows).unwrap()
}

fn log_uniform_gamma(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(0.0..3.0))
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let nx = rng.random_range(1..=3);
        let k = rng.random_range(2..=4);
        let f_hat = random_table(&mut rng, nx, k);
        let gamma = log_uniform_gamma(&mut rng);
        let kernel = Kernel::inverse_gap(&f_hat, gamma);
        let q = product_measure(&kernel).unwrap();

        // enumerate policies as nested digits and rebuild marginals by hand
        let count = k.pow(nx as u32);
        let mut marginals = vec![vec![0.0; k]; nx];
        for i in 0..count {
            let policy: Vec<usize> = (0..nx).map(|x| (i / k.pow(x as u32)) % k).collect();
            let weight: f64 = policy
                .iter()
                .enumerate()
                .map(|(x, &a)| kernel.prob(x, a))
                .product();
            worst = worst.max((weight - q.probs()[i]).abs());
            for (x, &a) in policy.iter().enumerate() {
                marginals[x][a] += q.probs()[i];
            }
        }
        for x in 0..nx {
            for a in 0..k {
                worst = worst.max((marginals[x][a] - kernel.prob(x, a)).abs());
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("100 instances, max |marginal - p(a|x)| = {worst:.3e}"),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut failed = Vec::new();
    for i in 0..100 {
        let nx = rng.random_range(1..=3);
        let k = rng.random_range(2..=4);
        let size = rng.random_range(4..=10);
        let gap = rng.random_range(0.05..=0.5);
        let horizon = rng.random_range(64..=2048);
        let text = format!(
            "horizon = {horizon}\nseed = {i}\n[algorithm]\nkind = \"falcon\"\ndelta = 0.05\n\
             [environment]\nkind = \"planted\"\ncontexts = {nx}\nactions = {k}\nclass_size = {size}\ngap = {gap}\n\
             [schedule]\nkind = \"geometric\"\n[verify]\nmc_samples = 0\n"
        );
        let config = RunConfig::from_toml_str(&text).unwrap();
        let report = falcon::verify::verify_config(&config).unwrap();
        for line in &report.lines {
            if line.name == "exploitation" || line.name == "exploration" {
                checked += 1;
                if !line.passed {
                    failed.push(line.to_string());
                }
            }
        }
    }
    verdict(
        failed.is_empty() && checked > 0,
        format!(
            "{checked} epoch constraints checked, {} failed{}",
            failed.len(),
            failed.first().map_or(String::new(), |l| format!(": {l}"))
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_z: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..20 {
        let nx = rng.random_range(1..=3);
        let k = rng.random_range(2..=4);
        let env = make_planted_instance(nx, k, 6, rng.random_range(0.05..=0.5), &mut rng).unwrap();
        let f_hat = env.class().member(rng.random_range(0..6)).clone();
        let gamma = log_uniform_gamma(&mut rng);
        let kernel = Kernel::inverse_gap(&f_hat, gamma);
        let q = product_measure(&kernel).unwrap();
        let quantities =
            implicit_quantities(&q, &f_hat, env.f_star(), env.context_probs()).unwrap();
        let report = check_equi(&q, &env, &kernel, &quantities, 1_000_000, &mut rng);
        if report.mc_se > 0.0 {
            worst_z = worst_z.max((report.exact - report.mc_mean).abs() / report.mc_se);
        }
        failures += (!report.passed()) as usize;
    }
    verdict(
        failures == 0,
        format!("20 instances x 1e6 draws, {failures} outside 4 SE, worst |z| = {worst_z:.2}"),
    )
}

fn criterion_7() -> Verdict {
    let mut config = RunConfig::from_toml_str(LINEAR).unwrap();
    let (short, _) = replicate(&config, &seeds()).unwrap();
    config.horizon = Some(20_000);
    let (long, _) = replicate(&config, &seeds()).unwrap();
    let ratio = long.mean / short.mean;
    verdict(
        ratio <= 1.6,
        format!(
            "mean regret T=1e4 {:.1}, T=2e4 {:.1}, ratio {ratio:.3} (need <= 1.6)",
            short.mean, long.mean
        ),
    )
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let configs = [
        RunConfig::from_toml_str(PLANTED).unwrap(),
        RunConfig::from_toml_str(LINEAR).unwrap(),
        RunConfig::from_toml_str(
            &PLANTED.replace("kind = \"geometric\"", "kind = \"known_horizon\""),
        )
        .unwrap(),
    ];
    for (i, config) in configs.iter().enumerate() {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{i}-{rep}.csv"));
            run(config)
                .unwrap()
                .write_csv(std::fs::File::create(&path).unwrap())
                .unwrap();
            bytes.push(std::fs::read(&path).unwrap());
        }
        identical += (bytes[0] == bytes[1]) as usize;
    }
    verdict(
        identical == configs.len(),
        format!(
            "{identical}/{} configs byte-identical on rerun",
            configs.len()
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let n = 1_000_000;
    for _ in 0..n {
        let k = rng.random_range(2..=10);
        let nx = rng.random_range(1..=4);
        let f_hat = random_table(&mut rng, nx, k);
        let x = rng.random_range(0..nx);
        let gamma = 10f64.powf(rng.random_range(0.0..4.0));
        let d = ActionDistribution::inverse_gap(f_hat.row(x), gamma);
        let probs = d.probs();
        let sum: f64 = probs.iter().sum();
        let floor = 1.0 / (k as f64 + gamma);
        let bad = (sum - 1.0).abs() > 1e-12
            || probs.iter().any(|&p| p < floor)
            || probs[d.greedy()] < 1.0 / k as f64 - 1e-12;
        violations += bad as usize;
    }
    verdict(
        violations == 0,
        format!("{n} random triples, {violations} violations"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("regret bound", criterion_1),
        ("learning signal", criterion_2),
        ("oracle-call count", criterion_3),
        ("dual interpretation", criterion_4),
        ("implicit optimization feasibility", criterion_5),
        ("regret equivalence", criterion_6),
        ("falcon+ scaling", criterion_7),
        ("determinism", criterion_8),
        ("action distribution fuzz", criterion_9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let v = check();
        failed += (!v.passed) as usize;
        println!(
            "{} {label}: {} [{:.1}s]",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
