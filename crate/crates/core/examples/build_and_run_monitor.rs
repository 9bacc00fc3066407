//! Builds the monitor of class 1 from eight labelled features and queries it.

use boxmon::{build_class_monitor, ClusteringConfig, FeatureRecord, MonitorSet, Vector};

fn main() -> boxmon::Result<()> {
    // (true label, predicted label, features)
    let rows: [(i64, usize, [f64; 2]); 8] = [
        (1, 1, [0.078, 0.062]),
        (1, 1, [0.222, 0.162]),
        (1, 1, [0.69, 0.61]),
        (1, 1, [0.79, 0.71]),
        (2, 1, [0.289, 0.281]),
        (2, 1, [0.389, 0.381]),
        (2, 2, [0.566, 0.614]),
        (2, 2, [0.666, 0.714]),
    ];
    let records = rows
        .iter()
        .map(|&(t, p, f)| Ok(FeatureRecord::new(Vector::new(f.to_vec())?, t, p)))
        .collect::<boxmon::Result<Vec<_>>>()?;

    // Good features of class 1 split into two clusters, bad ones stay in one.
    let monitor = build_class_monitor(&records, 1, 2, 0.7, 1.0, &ClusteringConfig::default())?;
    for b in &monitor.correct_boxes {
        println!("good box {b}");
    }
    for b in &monitor.incorrect_boxes {
        println!("bad box  {b}");
    }
    println!("two-valued: {}", monitor.is_two_valued());

    let mut set = MonitorSet::new(2);
    set.insert(monitor);
    for f in [[0.14, 0.13], [0.58, 0.56], [0.3, 0.3]] {
        let input = FeatureRecord::new(Vector::new(f.to_vec())?, 1, 1);
        println!("{f:?} -> {}", set.run(&input)?);
    }
    Ok(())
}
