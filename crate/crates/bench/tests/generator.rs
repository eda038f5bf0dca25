use rsklpr_bench::{generate_synthetic, Curve, NoiseFamily, NoiseSpec, SyntheticSpec};

#[test]
fn centered_exponential_residuals_average_to_zero() {
    let n = 2000;
    for seed in 0..5 {
        let spec = SyntheticSpec::new(
            Curve::SineHetero,
            n,
            NoiseSpec::new(NoiseFamily::Exponential { rate: 1.0 }, true),
            seed,
        );
        let s = generate_synthetic(&spec).unwrap();
        let mean: f64 = (0..n)
            .map(|i| s.data.response(i) - Curve::SineHetero.eval(&[s.data.row(i)[0]]))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "seed {seed}: {mean}");
    }
}

#[test]
fn predictors_are_uniform_on_the_unit_cube() {
    let spec = SyntheticSpec::new(
        Curve::Surface2d,
        4000,
        NoiseSpec::new(NoiseFamily::GaussianHomo { sigma: 0.1 }, true),
        1,
    );
    let s = generate_synthetic(&spec).unwrap();
    let x = s.data.predictors();
    assert!(x.iter().all(|&v| (0.0..1.0).contains(&v)));
    for col in x.columns() {
        let m = col.mean().unwrap();
        assert!((m - 0.5).abs() < 3.0 * (1.0f64 / 12.0 / 4000.0).sqrt());
    }
}

#[test]
fn noise_moments_match_samples() {
    let families = [
        NoiseFamily::LogNormal { mu: 0.0, sigma: 0.5 },
        NoiseFamily::Gamma { shape: 2.0, scale: 0.5 },
        NoiseFamily::Weibull { shape: 1.5, scale: 1.0 },
        NoiseFamily::GaussianHetero { base: 0.1, slope: 0.3 },
    ];
    let n = 20_000;
    for f in families {
        let spec = SyntheticSpec::new(Curve::Line, n, NoiseSpec::new(f, false), 3);
        let s = generate_synthetic(&spec).unwrap();
        let resid: Vec<f64> = (0..n).map(|i| s.data.response(i) - 2.0 * s.data.row(i)[0]).collect();
        let expected: f64 = (0..n).map(|i| f.mean(&[s.data.row(i)[0]])).sum::<f64>() / n as f64;
        let sd: f64 = ((0..n).map(|i| f.sd(&[s.data.row(i)[0]]).powi(2)).sum::<f64>() / n as f64).sqrt();
        let mean = resid.iter().sum::<f64>() / n as f64;
        assert!(
            (mean - expected).abs() < 4.0 * sd / (n as f64).sqrt(),
            "{}: {mean} vs {expected}",
            f.name()
        );
        // Reported truth includes the noise mean when not centered.
        let i = 17;
        assert!((s.truth[i] - 2.0 * s.data.row(i)[0] - f.mean(&[s.data.row(i)[0]])).abs() < 1e-12);
    }
}

#[test]
fn rmse_is_permutation_invariant() {
    let p = [0.3, -1.2, 4.0, 2.2, 0.0];
    let t = [0.1, -1.0, 3.0, 2.0, 0.5];
    let perm = [3, 0, 4, 1, 2];
    let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
    let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
    let a = rsklpr_bench::rmse(&p, &t).unwrap();
    let b = rsklpr_bench::rmse(&pp, &tp).unwrap();
    assert!((a - b).abs() < 1e-15);
}
