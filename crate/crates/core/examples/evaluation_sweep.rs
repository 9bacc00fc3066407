//! Monitor quality across τ on a synthetic blob benchmark with unknown-class
//! test inputs. Writes one sweep CSV per class into the directory given as
//! the first argument (default: print class 0 to stdout).

use std::path::PathBuf;

use boxmon::commands::DEFAULT_TAUS;
use boxmon::evaluation::write_sweep_csv;
use boxmon::synthetic::BlobSpec;
use boxmon::{sweep, ClusteringConfig, SweepConfig};

fn main() -> boxmon::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let spec = BlobSpec::default();
    let bench = spec.generate();
    println!(
        "{} classes, {} training and {} test features of dimension {}",
        spec.classes,
        bench.train.len(),
        bench.test.len(),
        spec.dim
    );

    for class in 0..spec.classes {
        let sc = SweepConfig {
            class_id: class,
            layer_id: 0,
            taus: DEFAULT_TAUS.to_vec(),
            clustering: ClusteringConfig::default(),
            resolution: None,
        };
        let rows = sweep(&bench.train, &bench.test, &sc)?;
        let best = rows
            .iter()
            .filter(|r| r.metrics.defined)
            .max_by(|a, b| a.metrics.f1.total_cmp(&b.metrics.f1));
        if let Some(b) = best {
            println!(
                "class {class}: best F1 {:.3} at tau {} (tp {} fp {} fn {})",
                b.metrics.f1, b.tau, b.counts.tp, b.counts.fp, b.counts.fn_
            );
        }
        match &out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let file = std::fs::File::create(dir.join(format!("sweep_class{class}.csv")))?;
                write_sweep_csv(file, &rows)?;
            }
            None if class == 0 => write_sweep_csv(std::io::stdout().lock(), &rows)?,
            None => {}
        }
    }
    Ok(())
}
