//! Batch commands behind the `boxmon` binary.
//!
//! Each command reads feature files, does its work through the library and
//! writes its output atomically (temporary file in the target directory,
//! then rename). Human-readable summaries go to the supplied log writer.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::clustering::{partition_coverage, search_tau_max, search_tau_min, ClusteringConfig, KCache, TauSearch, TuneConfig};
use crate::coverage::CoverageEstimate;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, format_sig9, metrics, sweep, write_sweep_csv, SweepConfig, SweepRow};
use crate::features::FeatureFile;
use crate::monitor::{build_from_sets, cluster_if_any, MonitorSet, ReferenceSets, Verdict};

/// τ values tried when none are given.
pub const DEFAULT_TAUS: [f64; 12] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01];

pub const DEFAULT_SEED: u64 = 42;

/// Parses a comma-separated τ list; every value must lie in `[0, 1]`.
pub fn parse_tau_list(s: &str) -> Result<Vec<f64>> {
    let taus = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v: f64 = t.parse().map_err(|_| Error::InvalidConfig(format!("bad τ {t:?}")))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::InvalidConfig(format!("τ = {v} outside [0, 1]")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if taus.is_empty() {
        return Err(Error::EmptyTauList);
    }
    Ok(taus)
}

/// Sorts descending and drops duplicates unless `keep_order` is set.
pub fn order_taus(mut taus: Vec<f64>, keep_order: bool) -> Vec<f64> {
    if !keep_order {
        taus.sort_by(|a, b| b.total_cmp(a));
        taus.dedup();
    }
    taus
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn header_comment(seed: Option<u64>, resolution: Option<usize>) -> String {
    let seed = seed.map_or_else(|| "unknown".to_string(), |s| s.to_string());
    let res = resolution.map_or_else(|| "auto".to_string(), |r| r.to_string());
    format!("# seed={seed} resolution={res}\n")
}

fn clustering(seed: u64) -> ClusteringConfig {
    ClusteringConfig {
        seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone)]
pub struct BuildArgs {
    pub train: PathBuf,
    /// Classes to monitor; all predicted classes when `None`.
    pub classes: Option<Vec<usize>>,
    pub layer: usize,
    pub tau_correct: f64,
    pub tau_incorrect: f64,
    pub resolution: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cmd_build(args: &BuildArgs, log: &mut dyn Write) -> Result<MonitorSet> {
    let train = FeatureFile::open(&args.train, None)?;
    let classes = args.classes.clone().unwrap_or_else(|| train.classes_present());
    let cfg = clustering(args.seed);
    let mut set = MonitorSet::new(args.layer);
    set.resolution = args.resolution;
    set.seed = Some(args.seed);
    for class in classes {
        let sets = ReferenceSets::collect(&train.records, class)?;
        let m = build_from_sets(&sets, class, args.layer, args.tau_correct, args.tau_incorrect, &cfg, None)?;
        writeln!(
            log,
            "class {class}: {} good features in {} boxes, {} bad features in {} boxes",
            sets.correct.len(),
            m.correct_boxes.len(),
            sets.incorrect.len(),
            m.incorrect_boxes.len()
        )?;
        set.insert(m);
    }
    write_atomic(&args.out, &crate::monitor::serialize_monitor(&set)?)?;
    Ok(set)
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub monitor: PathBuf,
    pub test: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub accept: u64,
    pub reject: u64,
    pub uncertainty: u64,
    pub unknown_class: u64,
}

/// Writes `row,predicted,verdict` per record; records predicted into a class
/// without a monitor get verdict `unknown_class` and a warning.
pub fn cmd_run(args: &RunArgs, log: &mut dyn Write) -> Result<RunSummary> {
    let monitors = crate::monitor::deserialize_monitor(&fs::read(&args.monitor)?)?;
    let test = FeatureFile::open(&args.test, None)?;
    let mut out = header_comment(monitors.seed, monitors.resolution);
    out.push_str("row,predicted,verdict\n");
    let mut summary = RunSummary::default();
    for (i, r) in test.records.iter().enumerate() {
        let row = i + 1;
        let verdict = match monitors.run(r) {
            Ok(v) => {
                match v {
                    Verdict::Accept => summary.accept += 1,
                    Verdict::Reject => summary.reject += 1,
                    Verdict::Uncertainty => summary.uncertainty += 1,
                }
                v.as_str()
            }
            Err(Error::UnknownClass(c)) => {
                writeln!(log, "warning: row {row}: no monitor for predicted class {c}")?;
                summary.unknown_class += 1;
                "unknown_class"
            }
            Err(e) => return Err(e),
        };
        out.push_str(&format!("{row},{},{verdict}\n", r.predicted_label));
    }
    write_atomic(&args.out, out.as_bytes())?;
    writeln!(
        log,
        "accept={} reject={} uncertainty={} unknown_class={}",
        summary.accept, summary.reject, summary.uncertainty, summary.unknown_class
    )?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct CoverageArgs {
    pub train: PathBuf,
    pub class: usize,
    pub taus: Vec<f64>,
    pub resolution: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub tau: f64,
    pub set: &'static str,
    pub estimate: CoverageEstimate,
}

/// Coverage bounds of the good and bad features of a class for each τ.
/// Rows `tau,set,cov_lo,cov_hi,rel_diff`; an empty feature set has no rows.
pub fn cmd_coverage(args: &CoverageArgs, log: &mut dyn Write) -> Result<Vec<CoverageRow>> {
    let train = FeatureFile::open(&args.train, None)?;
    let rows = coverage_rows(&train, args.class, &args.taus, args.resolution, args.seed)?;
    let mut out = header_comment(Some(args.seed), args.resolution);
    out.push_str("tau,set,cov_lo,cov_hi,rel_diff\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sig9(r.tau),
            r.set,
            format_sig9(r.estimate.lower),
            format_sig9(r.estimate.upper),
            format_sig9(r.estimate.relative_difference())
        ));
    }
    write_atomic(&args.out, out.as_bytes())?;
    writeln!(log, "{} coverage rows for class {}", rows.len(), args.class)?;
    Ok(rows)
}

pub fn coverage_rows(
    train: &FeatureFile,
    class: usize,
    taus: &[f64],
    resolution: Option<usize>,
    seed: u64,
) -> Result<Vec<CoverageRow>> {
    if taus.is_empty() {
        return Err(Error::EmptyTauList);
    }
    let sets = ReferenceSets::collect(&train.records, class)?;
    let base = clustering(seed);
    let mut caches = [KCache::new(), KCache::new()];
    let mut rows = Vec::new();
    for &tau in taus {
        let cfg = base.with_tau(tau);
        for (i, (name, pts)) in [("good", &sets.correct), ("bad", &sets.incorrect)].into_iter().enumerate() {
            if let Some(p) = cluster_if_any(pts, &cfg, Some(&mut caches[i]))? {
                rows.push(CoverageRow {
                    tau,
                    set: name,
                    estimate: partition_coverage(pts, &p, resolution)?,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    Good,
    Bad,
}

#[derive(Debug, Clone)]
pub struct TuneArgs {
    pub train: PathBuf,
    pub class: usize,
    pub set: FeatureSet,
    pub eps_cov: f64,
    pub eps_ival: f64,
    pub resolution: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub class: usize,
    pub set: &'static str,
    pub seed: u64,
    pub resolution: Option<usize>,
    pub eps_cov: f64,
    pub eps_ival: f64,
    pub tau_min: TauSearch,
    pub tau_max: TauSearch,
}

pub fn cmd_tune(args: &TuneArgs, log: &mut dyn Write) -> Result<TuneReport> {
    let train = FeatureFile::open(&args.train, None)?;
    let sets = ReferenceSets::collect(&train.records, args.class)?;
    let (name, pts) = match args.set {
        FeatureSet::Good => ("good", &sets.correct),
        FeatureSet::Bad => ("bad", &sets.incorrect),
    };
    if pts.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let tune = TuneConfig {
        eps_cov: args.eps_cov,
        eps_ival: args.eps_ival,
        resolution: args.resolution,
    };
    let cfg = clustering(args.seed);
    let mut cache = KCache::new();
    let tau_max = search_tau_max(pts, &tune, &cfg, &mut cache)?;
    let tau_min = search_tau_min(pts, &tune, &cfg, &mut cache)?;
    for (label, s) in [("tau_max", &tau_max), ("tau_min", &tau_min)] {
        for step in &s.trace {
            writeln!(
                log,
                "{label}: tau_mean={} mean_cov={}",
                format_sig9(step.tau_mean),
                format_sig9(step.mean_coverage)
            )?;
        }
    }
    writeln!(log, "tau_min={} tau_max={}", tau_min.tau, tau_max.tau)?;
    let report = TuneReport {
        class: args.class,
        set: name,
        seed: args.seed,
        resolution: args.resolution,
        eps_cov: args.eps_cov,
        eps_ival: args.eps_ival,
        tau_min,
        tau_max,
    };
    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&report).map_err(|e| Error::Invariant(e.to_string()))?;
        json.push('\n');
        write_atomic(out, json.as_bytes())?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum EvalSource {
    /// Build one monitor per τ from training features.
    Build { train: PathBuf, taus: Vec<f64> },
    /// Evaluate an existing monitor file as a single row.
    Monitor(PathBuf),
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub source: EvalSource,
    pub test: PathBuf,
    pub class: usize,
    pub layer: usize,
    pub resolution: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs, log: &mut dyn Write) -> Result<Vec<SweepRow>> {
    let test = FeatureFile::open(&args.test, None)?;
    let (rows, seed, resolution) = match &args.source {
        EvalSource::Build { train, taus } => {
            let train = FeatureFile::open(train, None)?;
            let sc = SweepConfig {
                class_id: args.class,
                layer_id: args.layer,
                taus: taus.clone(),
                clustering: clustering(args.seed),
                resolution: args.resolution,
            };
            (sweep(&train.records, &test.records, &sc)?, Some(args.seed), args.resolution)
        }
        EvalSource::Monitor(path) => {
            let set = crate::monitor::deserialize_monitor(&fs::read(path)?)?;
            let counts = evaluate(&set, &test.records, args.class)?;
            let row = SweepRow {
                tau: set.get(args.class)?.tau_correct,
                coverage_good: None,
                coverage_bad: None,
                counts,
                metrics: metrics(&counts),
            };
            (vec![row], set.seed, set.resolution)
        }
    };
    let mut buf = header_comment(seed, resolution).into_bytes();
    write_sweep_csv(&mut buf, &rows)?;
    write_atomic(&args.out, &buf)?;
    for r in &rows {
        writeln!(
            log,
            "tau={} tp={} fp={} fn={} precision={} recall={} f1={}",
            format_sig9(r.tau),
            r.counts.tp,
            r.counts.fp,
            r.counts.fn_,
            format_sig9(r.metrics.precision),
            format_sig9(r.metrics.recall),
            format_sig9(r.metrics.f1)
        )?;
    }
    Ok(rows)
}
