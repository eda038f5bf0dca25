//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::time::{Duration, Instant};

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rsklpr::theory::{
    asymptotic_bias, check_invariance_at, empirical_target_experiment, population_mu_prime, ConditionalFamily,
    TargetExperiment, NORMALIZATION_TOLERANCE, SCALING_TOLERANCE,
};
use rsklpr::{
    conditional_density, kde_density, knn, resolve_bandwidth, wls_polyfit, BandwidthSpec, DataSet, EstimatorConfig,
    WeightVector,
};
use rsklpr_bench::suites::{canonical_json, run_contaminated, summarize};
use rsklpr_bench::{generate_synthetic, run_suite, BenchConfig, Curve, NoiseFamily, NoiseSpec, Suite, SyntheticSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for rate in [0.5, 1.0, 2.0, 5.0] {
        let b = asymptotic_bias(&ConditionalFamily::exponential(rate), 0.5).expect("quadrature");
        worst = worst.max((b + 0.5 / rate).abs());
    }
    for (mean, sd) in [(0.0, 1.0), (3.0, 1.0), (-2.5, 0.3), (10.0, 4.0)] {
        let v = population_mu_prime(&ConditionalFamily::gaussian(mean, sd), 0.5).expect("quadrature");
        worst = worst.max((v - mean).abs());
    }
    outcome(worst <= 1e-6, format!("max abs error {worst:.2e} (tol 1e-6)"))
}

fn criterion_2() -> Outcome {
    let fam = ConditionalFamily::exponential(1.0);
    let run = |cfg: EstimatorConfig| {
        empirical_target_experiment(&TargetExperiment::new(fam, 20_000, cfg, 2024).with_replicates(5))
            .expect("experiment")
    };
    let rs = run(EstimatorConfig::rsklpr(500));
    let lp = run(EstimatorConfig::lpr(500));
    let pass = (rs.mean - 0.5).abs() <= 0.1 && (lp.mean - 1.0).abs() <= 0.1;
    outcome(
        pass,
        format!(
            "rsklpr mean {:.4} ± {:.4} (want 0.5 ± 0.1), lpr mean {:.4} ± {:.4} (want 1.0 ± 0.1)",
            rs.mean, rs.std_error, lp.mean, lp.std_error
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_s, mut worst_n, mut failures) = (0.0f64, 0.0f64, 0);
    for trial in 0..100u64 {
        let noise = NoiseSpec::new(NoiseFamily::GaussianHetero { base: 0.1, slope: 0.3 }, true);
        let data = generate_synthetic(&SyntheticSpec::new(Curve::SineHetero, 200, noise, 1000 + trial))
            .expect("data")
            .data;
        let x = rng.random::<f64>();
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let n = rng.random_range(10..=100);
        let d = check_invariance_at(&EstimatorConfig::rsklpr(n), &data, &[x], c).expect("fit");
        worst_s = worst_s.max(d.scaling);
        worst_n = worst_n.max(d.normalization);
        failures += usize::from(d.scaling > SCALING_TOLERANCE || d.normalization > NORMALIZATION_TOLERANCE);
    }
    outcome(
        failures == 0,
        format!("100 trials, worst scaling {worst_s:.2e} (tol 1e-10), worst normalization {worst_n:.2e} (tol 1e-12)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut failures) = (0.0f64, 0);
    for trial in 0..1000 {
        let degree = trial % 2;
        let dim = 1 + (trial / 2) % 2;
        let t = rng.random_range(3..=10);
        let xs: Vec<f64> = (0..t * dim).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ws: Vec<f64> = (0..t).map(|_| rng.random_range(0.1..1.0)).collect();
        let x0: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let data = DataSet::new(
            Array2::from_shape_vec((t, dim), xs.clone()).unwrap(),
            Array1::from(ys.clone()),
        )
        .unwrap();
        let x = Array1::from(x0.clone());
        let nbr = knn(&data, x.view(), t).unwrap();
        let w: Vec<f64> = nbr.indices.iter().map(|&i| ws[i]).collect();
        let fit = wls_polyfit(
            x.view(),
            &nbr,
            &data,
            &WeightVector::from_parts(w, vec![1.0; t]),
            degree,
        );
        let rows: Vec<Vec<f64>> = xs.chunks(dim).map(<[f64]>::to_vec).collect();
        let expected = oracle::normal_equations(&rows, &ys, &ws, &x0, degree);
        match (fit, expected) {
            (Ok(f), Some(e)) if f.coefficients.len() == e.len() => {
                let err = f
                    .coefficients
                    .iter()
                    .zip(&e)
                    .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                    .fold(0.0, f64::max);
                worst = worst.max(err);
                failures += usize::from(err > 1e-8);
            }
            _ => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("1000 instances, {failures} mismatches, worst relative error {worst:.2e} (tol 1e-8)"),
    )
}

fn rmse_by_seed(cells: &[rsklpr_bench::Cell], method: &str) -> Vec<f64> {
    cells.iter().filter(|c| c.method == method).map(|c| c.rmse).collect()
}

fn criterion_5() -> Outcome {
    let cfg = BenchConfig::default();
    let seeds: Vec<u64> = (0..10).collect();
    let noise = NoiseFamily::GaussianHetero { base: 0.1, slope: 0.3 };
    let cells = run_contaminated(&cfg, noise, 200, cfg.neighbors_for(200), 0.1, 5.0, &seeds).expect("suite");
    let rs = rmse_by_seed(&cells, "rsklpr");
    let lp = rmse_by_seed(&cells, "lpr");
    let wins = rs.iter().zip(&lp).filter(|(a, b)| a < b).count();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    outcome(
        wins >= 9,
        format!(
            "rsklpr < lpr in {wins}/10 seeds (need 9); mean rmse {:.4} vs {:.4}",
            mean(&rs),
            mean(&lp)
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = BenchConfig::default();
    let seeds: Vec<u64> = (0..10).collect();
    let out = run_suite(Suite::Asymmetric, &cfg, &seeds, None).expect("suite");
    let mut sizes = cfg.asymmetric.sizes.clone();
    sizes.sort_unstable();
    let smallest = &sizes[..2];
    let rows = summarize(&out.report.cells);
    let mut wins = 0;
    let mut parts = Vec::new();
    for fam in &cfg.asymmetric.families {
        let pooled = |method: &str| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.family == fam.name() && smallest.contains(&r.n))
                .map(|r| r.mean_rmse)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (rs, rl) = (pooled("rsklpr"), pooled("robust_lowess"));
        wins += usize::from(rs <= rl);
        parts.push(format!("{} {rs:.4}/{rl:.4}", fam.name()));
    }
    outcome(
        wins >= 3,
        format!(
            "rsklpr <= robust_lowess in {wins}/4 families at n in {smallest:?} (need 3): {}",
            parts.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = BenchConfig::default();
    let seeds: Vec<u64> = (0..10).collect();
    let out = run_suite(Suite::NeighborSweep, &cfg, &seeds, None).expect("suite");
    let mut pass = true;
    let mut parts = Vec::new();
    for fam in &cfg.neighbor_sweep.noises {
        let mut wins = 0;
        for &s in &seeds {
            let spread = |method: &str| {
                let v: Vec<f64> = out
                    .report
                    .cells
                    .iter()
                    .filter(|c| c.method == method && c.family == fam.name() && c.seed == s)
                    .map(|c| c.rmse)
                    .collect();
                oracle::sd(&v)
            };
            wins += usize::from(spread("rsklpr") < spread("lpr"));
        }
        pass &= wins >= 7;
        parts.push(format!("{} {wins}/10", fam.name()));
    }
    outcome(
        pass,
        format!(
            "std of rmse over N={:?} smaller for rsklpr (need 7/10): {}",
            cfg.neighbor_sweep.neighbors,
            parts.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut normal = |n: usize, d: usize| Array2::from_shape_fn((n, d), |_| -> f64 { StandardNormal.sample(&mut rng) });
    let s1 = normal(80, 1);
    let h1 = resolve_bandwidth(&BandwidthSpec::scott(), s1.view()).unwrap();
    let i1 = oracle::trapezoid(
        |x| kde_density(array![x].view(), s1.view(), h1.view()).unwrap(),
        -10.0,
        10.0,
        4000,
    );
    let s2 = normal(40, 2);
    let h2 = resolve_bandwidth(&BandwidthSpec::scott(), s2.view()).unwrap();
    let i2 = oracle::trapezoid_2d(
        |x, y| kde_density(array![x, y].view(), s2.view(), h2.view()).unwrap(),
        -9.0,
        9.0,
        300,
    );
    let xs = normal(50, 1);
    let ys = xs.column(0).mapv(|x| 1.0 - x) + normal(50, 1).column(0);
    let joint = rsklpr::kernels::stack_joint(xs.view(), ys.view());
    let h = resolve_bandwidth(&BandwidthSpec::scott(), joint.view()).unwrap();
    let hx = array![h[0]];
    let mut worst_c: f64 = 0.0;
    for x in [-1.5, 0.0, 0.7, 2.0] {
        let total = oracle::trapezoid(
            |y| conditional_density(y, array![x].view(), xs.view(), ys.view(), hx.view(), h[1]).unwrap(),
            -12.0,
            12.0,
            4000,
        );
        worst_c = worst_c.max((total - 1.0).abs());
    }
    let pass = (i1 - 1.0).abs() <= 0.01 && (i2 - 1.0).abs() <= 0.01 && worst_c <= 0.01;
    outcome(
        pass,
        format!("d=1 integral {i1:.5}, d=2 integral {i2:.5}, conditional worst |1 - integral| {worst_c:.2e} (tol 1%)"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = BenchConfig::default();
    let seeds = [0, 1, 2];
    let runs: Vec<String> = [Some(1), Some(3), None, Some(1)]
        .into_iter()
        .map(|w| canonical_json(&run_suite(Suite::Asymmetric, &cfg, &seeds, w).expect("suite").report))
        .collect();
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        identical,
        format!(
            "4 runs (workers 1, 3, all cores, 1): {} bytes each, identical = {identical}",
            runs[0].len()
        ),
    )
}

fn main() {
    type Check = (u32, fn() -> Outcome, Duration);
    let checks: [Check; 9] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(120)),
        (3, criterion_3, Duration::from_secs(10)),
        (4, criterion_4, Duration::from_secs(10)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(300)),
        (7, criterion_7, Duration::from_secs(180)),
        (8, criterion_8, Duration::from_secs(5)),
        (9, criterion_9, Duration::from_secs(300)),
    ];
    let mut failed = Vec::new();
    for (id, check, budget) in checks {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        println!(
            "criterion {id}: {} | {} | {:.2}s (budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
