//! How τ picks the number of clusters, and the bisection search for the
//! useful τ range of a feature set.

use boxmon::clustering::partition_coverage;
use boxmon::synthetic::BlobSpec;
use boxmon::{
    kmeans_by_tau, kmeans_fixed_k, search_tau_max, search_tau_min, ClusteringConfig, KCache, TuneConfig, Vector,
};

fn main() -> boxmon::Result<()> {
    // Three well separated classes predicted as class 0 form three blobs.
    let bench = BlobSpec {
        classes: 3,
        train_per_class: 60,
        dim: 2,
        center_range: 20.0,
        misclassification_rate: 0.0,
        unknown_per_class: 0,
        ..Default::default()
    }
    .generate();
    let points: Vec<Vector> = bench.train.iter().map(|r| r.features.clone()).collect();

    let cfg = ClusteringConfig::default();
    println!("k   inertia");
    for k in 1..=6 {
        println!("{k}   {:.3}", kmeans_fixed_k(&points, k, &cfg)?.inertia);
    }

    let mut cache = KCache::new();
    println!("\ntau    k  coverage");
    for tau in [1.0, 0.9, 0.7, 0.5, 0.3, 0.1, 0.05, 0.01] {
        let p = kmeans_by_tau(&points, &cfg.with_tau(tau), Some(&mut cache))?;
        println!("{tau:<6} {:<2} {}", p.k(), partition_coverage(&points, &p, None)?);
    }

    let tune = TuneConfig::default();
    let max = search_tau_max(&points, &tune, &cfg, &mut cache)?;
    let min = search_tau_min(&points, &tune, &cfg, &mut cache)?;
    println!(
        "\ntau_max = {} after {} steps, tau_min = {} after {} steps",
        max.tau,
        max.trace.len(),
        min.tau,
        min.trace.len()
    );
    Ok(())
}
