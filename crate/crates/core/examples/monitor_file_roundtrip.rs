//! Saves a monitor set as JSON and a feature set as CSV, then reads both back.

use boxmon::features::{write_feature_csv, FeatureFile};
use boxmon::synthetic::BlobSpec;
use boxmon::{build_class_monitor, deserialize_monitor, serialize_monitor, ClusteringConfig, MonitorSet};

fn main() -> boxmon::Result<()> {
    let bench = BlobSpec {
        classes: 3,
        train_per_class: 40,
        test_per_class: 10,
        dim: 3,
        unknown_per_class: 4,
        ..Default::default()
    }
    .generate();

    let cfg = ClusteringConfig::default();
    let mut set = MonitorSet::new(0);
    set.seed = Some(cfg.seed);
    for class in 0..3 {
        set.insert(build_class_monitor(&bench.train, class, 0, 0.3, 0.3, &cfg)?);
    }

    let bytes = serialize_monitor(&set)?;
    let back = deserialize_monitor(&bytes)?;
    assert_eq!(back, set);
    println!("monitor file: {} bytes, {} classes, identical after reload", bytes.len(), back.classes.len());
    println!("{}", String::from_utf8_lossy(&bytes).lines().take(12).collect::<Vec<_>>().join("\n"));

    let mut csv = Vec::new();
    write_feature_csv(&mut csv, &bench.test)?;
    let parsed = FeatureFile::parse(csv.as_slice(), None)?;
    assert_eq!(parsed.records, bench.test);
    println!(
        "feature file: {} rows of dimension {:?}, classes {:?}",
        parsed.records.len(),
        parsed.dim,
        parsed.classes_present()
    );
    Ok(())
}
