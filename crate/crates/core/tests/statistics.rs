mod common;

use latreal::basic1d::{alpha0_exclusion_factor, BlockFactorProcess1D};
use latreal::lattice::BoxRegion;
use latreal::montecarlo::{consistency_test, estimate};
use latreal::product::realize;
use latreal::rng::derive_seed;

/// Mean and standard error of batch means.
fn batch_stat(values: &[f64], batches: usize) -> (f64, f64) {
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn sampled_path_matches_enumeration() {
    let proc =
        BlockFactorProcess1D::new(3, 0.4, vec![0.1, 0.9, 0.3, 0.0, 0.7, 0.2, 0.5, 1.0]).unwrap();
    let n = 1 << 20;
    let path = proc.sample_path(n + 4, 99).unwrap();
    let x: Vec<f64> = path.iter().map(|&b| b as f64).collect();

    let (m, se) = batch_stat(&x[..n], 1024);
    let want = common::density(&proc);
    assert!(
        (m - want).abs() < 4.0 * se,
        "density {m} vs {want}, se {se}"
    );

    for k in 1..=4 {
        let prod: Vec<f64> = (0..n).map(|i| x[i] * x[i + k]).collect();
        let (m, se) = batch_stat(&prod, 1024);
        let want = common::lag(&proc, k);
        assert!(
            (m - want).abs() < 4.0 * se,
            "lag {k}: {m} vs {want}, se {se}"
        );
    }
}

#[test]
fn site_occupation_is_translation_invariant() {
    let f = alpha0_exclusion_factor(0.5).unwrap();
    let proc = realize(&f, 2).unwrap();
    let region = BoxRegion::cube(16, 2).unwrap();
    let replicas = 200;
    let mut counts = vec![0u32; 256];
    for r in 0..replicas {
        let field = proc.sample_box(&region, derive_seed(5, &[r])).unwrap();
        for (c, &v) in counts.iter_mut().zip(field.values()) {
            *c += v as u32;
        }
    }
    let rho = proc.density();
    let se = (rho * (1.0 - rho) / replicas as f64).sqrt();
    for (site, &c) in counts.iter().enumerate() {
        let z = (c as f64 / replicas as f64 - rho) / se;
        assert!(z.abs() < 5.0, "site {site}: z = {z}");
    }
}

#[test]
fn estimator_is_unbiased_on_small_box() {
    let f = alpha0_exclusion_factor(0.5).unwrap();
    let proc = realize(&f, 2).unwrap();
    let region = BoxRegion::cube(16, 2).unwrap();
    let est = estimate(&proc, &region, 3, 1000, 11).unwrap();
    let rep = consistency_test(&est, &est.target, 4.0).unwrap();
    assert!(rep.pass, "{:?}", rep.offenders);
}

#[test]
fn three_dimensional_product_is_consistent() {
    let f = alpha0_exclusion_factor(0.3).unwrap();
    let proc = realize(&f, 3).unwrap();
    let region = BoxRegion::cube(12, 3).unwrap();
    let est = estimate(&proc, &region, 2, 300, 3).unwrap();
    let rep = consistency_test(&est, &est.target, 4.0).unwrap();
    assert!(rep.pass, "{:?}", rep.offenders);
}
