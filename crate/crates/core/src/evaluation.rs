//! Six-outcome confusion matrix, precision/recall/F1 and τ sweeps.
//!
//! A record's nature is relative to the monitored class `y`: it is negative
//! when truly labelled `y` (the monitor should accept it) and positive
//! otherwise, unknown-class inputs included.

use std::io::Write;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{partition_coverage, ClusteringConfig, KCache};
use crate::coverage::CoverageEstimate;
use crate::error::{Error, Result};
use crate::monitor::{build_from_sets, cluster_if_any, FeatureRecord, MonitorSet, ReferenceSets, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nature {
    Negative,
    Positive,
}

impl Nature {
    pub fn of(record: &FeatureRecord, class_id: usize) -> Self {
        if record.true_label == class_id as i64 {
            Nature::Negative
        } else {
            Nature::Positive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    TrueNegative,
    FalsePositive,
    MissedNegative,
    FalseNegative,
    TruePositive,
    MissedPositive,
}

pub fn classify_outcome(nature: Nature, verdict: Verdict) -> Outcome {
    use Outcome::*;
    match (nature, verdict) {
        (Nature::Negative, Verdict::Accept) => TrueNegative,
        (Nature::Negative, Verdict::Reject) => FalsePositive,
        (Nature::Negative, Verdict::Uncertainty) => MissedNegative,
        (Nature::Positive, Verdict::Accept) => FalseNegative,
        (Nature::Positive, Verdict::Reject) => TruePositive,
        (Nature::Positive, Verdict::Uncertainty) => MissedPositive,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub tn: u64,
    pub fp: u64,
    pub mn: u64,
    pub fn_: u64,
    pub tp: u64,
    pub mp: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TrueNegative => self.tn += 1,
            Outcome::FalsePositive => self.fp += 1,
            Outcome::MissedNegative => self.mn += 1,
            Outcome::FalseNegative => self.fn_ += 1,
            Outcome::TruePositive => self.tp += 1,
            Outcome::MissedPositive => self.mp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.mn + self.fn_ + self.tp + self.mp
    }

    pub fn uncertain(&self) -> u64 {
        self.mn + self.mp
    }
}

impl Add for OutcomeCounts {
    type Output = OutcomeCounts;

    fn add(self, o: OutcomeCounts) -> OutcomeCounts {
        OutcomeCounts {
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            mn: self.mn + o.mn,
            fn_: self.fn_ + o.fn_,
            tp: self.tp + o.tp,
            mp: self.mp + o.mp,
        }
    }
}

impl AddAssign for OutcomeCounts {
    fn add_assign(&mut self, o: OutcomeCounts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when a denominator was zero and the affected value was set to 0.
    pub defined: bool,
}

/// Precision `tp / (tp + fp)`, recall `tp / (tp + fn + mp)` and their
/// harmonic mean.
pub fn metrics(c: &OutcomeCounts) -> Metrics {
    let pd = c.tp + c.fp;
    let rd = c.tp + c.fn_ + c.mp;
    let precision = if pd > 0 { c.tp as f64 / pd as f64 } else { 0.0 };
    let recall = if rd > 0 { c.tp as f64 / rd as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f1,
        defined: pd > 0 && rd > 0,
    }
}

/// Tallies the class-`class_id` monitor over the records predicted as that
/// class; records predicted elsewhere are skipped.
pub fn evaluate(monitors: &MonitorSet, records: &[FeatureRecord], class_id: usize) -> Result<OutcomeCounts> {
    let monitor = monitors.get(class_id)?;
    records
        .par_iter()
        .filter(|r| r.predicted_label == class_id)
        .map(|r| {
            let mut c = OutcomeCounts::default();
            c.record(classify_outcome(Nature::of(r, class_id), monitor.verdict(&r.features)?));
            Ok(c)
        })
        .try_reduce(OutcomeCounts::default, |a, b| Ok(a + b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    /// `None` when the class has no correctly classified training features.
    pub coverage_good: Option<CoverageEstimate>,
    /// `None` when nothing was misclassified into the class.
    pub coverage_bad: Option<CoverageEstimate>,
    pub counts: OutcomeCounts,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub class_id: usize,
    pub layer_id: usize,
    pub taus: Vec<f64>,
    pub clustering: ClusteringConfig,
    pub resolution: Option<usize>,
}

/// Builds, measures and evaluates one monitor per τ (same τ for the good and
/// bad sets). Rows follow `taus` order; descending order reuses the most
/// clustering work.
pub fn sweep(train: &[FeatureRecord], test: &[FeatureRecord], sc: &SweepConfig) -> Result<Vec<SweepRow>> {
    if sc.taus.is_empty() {
        return Err(Error::EmptyTauList);
    }
    let sets = ReferenceSets::collect(train, sc.class_id)?;
    let mut cache_good = KCache::new();
    let mut cache_bad = KCache::new();
    let mut rows = Vec::with_capacity(sc.taus.len());
    for &tau in &sc.taus {
        let cfg = sc.clustering.with_tau(tau);
        let coverage = |pts: &[_], cache: &mut KCache| -> Result<Option<CoverageEstimate>> {
            cluster_if_any(pts, &cfg, Some(cache))?
                .map(|p| partition_coverage(pts, &p, sc.resolution))
                .transpose()
        };
        let coverage_good = coverage(&sets.correct, &mut cache_good)?;
        let coverage_bad = coverage(&sets.incorrect, &mut cache_bad)?;
        let monitor = build_from_sets(
            &sets,
            sc.class_id,
            sc.layer_id,
            tau,
            tau,
            &sc.clustering,
            Some((&mut cache_good, &mut cache_bad)),
        )?;
        let mut set = MonitorSet::new(sc.layer_id);
        set.insert(monitor);
        let counts = evaluate(&set, test, sc.class_id)?;
        rows.push(SweepRow {
            tau,
            coverage_good,
            coverage_bad,
            counts,
            metrics: metrics(&counts),
        });
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str =
    "tau,cov_lo_good,cov_hi_good,cov_lo_bad,cov_hi_bad,tn,fp,mn,fn,tp,mp,precision,recall,f1,metrics_defined";

/// Writes sweep rows as CSV; absent coverage estimates are empty fields.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    let cov = |c: &Option<CoverageEstimate>| match c {
        Some(c) => (format_sig9(c.lower), format_sig9(c.upper)),
        None => (String::new(), String::new()),
    };
    for r in rows {
        let (gl, gh) = cov(&r.coverage_good);
        let (bl, bh) = cov(&r.coverage_bad);
        let c = &r.counts;
        writeln!(
            out,
            "{},{gl},{gh},{bl},{bh},{},{},{},{},{},{},{},{},{},{}",
            format_sig9(r.tau),
            c.tn,
            c.fp,
            c.mn,
            c.fn_,
            c.tp,
            c.mp,
            format_sig9(r.metrics.precision),
            format_sig9(r.metrics.recall),
            format_sig9(r.metrics.f1),
            r.metrics.defined,
        )?;
    }
    Ok(())
}

/// `%.9g`: nine significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e9)`.
pub fn format_sig9(x: f64) -> String {
    const P: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
