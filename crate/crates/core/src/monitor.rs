//! Per-class runtime monitors built from correct and incorrect reference
//! behaviours.
//!
//! For class `y` at a monitored layer, the features of training inputs
//! predicted as `y` are split into the correctly classified ones (good) and
//! the misclassified ones (bad). Each set is clustered with its own τ and
//! every cluster becomes one box. At runtime a feature inside a good box
//! only is accepted, inside both kinds is uncertain, and anything else is
//! rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans_by_tau, ClusteringConfig, KCache, Partition};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Hyperbox, Interval, Vector};

/// Reserved true label for inputs from outside the known classes.
pub const UNKNOWN_LABEL: i64 = -1;

/// Features observed at the monitored layer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub features: Vector,
    /// Ground truth class, or [`UNKNOWN_LABEL`].
    pub true_label: i64,
    /// Class chosen by the network (argmax of the output layer).
    pub predicted_label: usize,
}

impl FeatureRecord {
    pub fn new(features: Vector, true_label: i64, predicted_label: usize) -> Self {
        FeatureRecord {
            features,
            true_label,
            predicted_label,
        }
    }

    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
    Uncertainty,
}

impl Verdict {
    /// Truth table over (inside a good box, inside a bad box).
    pub fn from_membership(in_correct: bool, in_incorrect: bool) -> Self {
        match (in_correct, in_incorrect) {
            (true, true) => Verdict::Uncertainty,
            (true, false) => Verdict::Accept,
            (false, _) => Verdict::Reject,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::Uncertainty => "uncertainty",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "accept" => Ok(Verdict::Accept),
            "reject" => Ok(Verdict::Reject),
            "uncertainty" => Ok(Verdict::Uncertainty),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

/// Good and bad feature sets of one class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceSets {
    pub correct: Vec<Vector>,
    pub incorrect: Vec<Vector>,
}

impl ReferenceSets {
    /// Features of records predicted as `class_id`, split by whether the
    /// prediction was right.
    pub fn collect(records: &[FeatureRecord], class_id: usize) -> Result<Self> {
        if let Some(first) = records.first() {
            for r in records {
                check_dim(first.features.dim(), r.features.dim())?;
            }
        }
        let mut sets = ReferenceSets::default();
        for r in records.iter().filter(|r| r.predicted_label == class_id) {
            if r.true_label == class_id as i64 {
                sets.correct.push(r.features.clone());
            } else {
                sets.incorrect.push(r.features.clone());
            }
        }
        Ok(sets)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMonitor {
    pub class_id: usize,
    pub layer_id: usize,
    pub correct_boxes: Vec<Hyperbox>,
    pub incorrect_boxes: Vec<Hyperbox>,
    pub tau_correct: f64,
    pub tau_incorrect: f64,
}

impl ClassMonitor {
    pub fn from_partitions(
        class_id: usize,
        layer_id: usize,
        sets: &ReferenceSets,
        correct: Option<&Partition>,
        incorrect: Option<&Partition>,
        tau_correct: f64,
        tau_incorrect: f64,
    ) -> Result<Self> {
        let boxes = |pts: &[Vector], p: Option<&Partition>| -> Result<Vec<Hyperbox>> {
            match p {
                Some(p) if !pts.is_empty() => p.boxes(pts),
                _ => Ok(Vec::new()),
            }
        };
        Ok(ClassMonitor {
            class_id,
            layer_id,
            correct_boxes: boxes(&sets.correct, correct)?,
            incorrect_boxes: boxes(&sets.incorrect, incorrect)?,
            tau_correct,
            tau_incorrect,
        })
    }

    /// Feature dimension, if the monitor holds any box.
    pub fn dim(&self) -> Option<usize> {
        self.correct_boxes
            .first()
            .or_else(|| self.incorrect_boxes.first())
            .map(Hyperbox::dim)
    }

    pub fn verdict(&self, feature: &[f64]) -> Result<Verdict> {
        if let Some(d) = self.dim() {
            check_dim(d, feature.len())?;
        }
        let in_c = self.correct_boxes.iter().any(|b| b.contains_unchecked(feature));
        let in_inc = self.incorrect_boxes.iter().any(|b| b.contains_unchecked(feature));
        Ok(Verdict::from_membership(in_c, in_inc))
    }

    /// True when no good box meets any bad box, so no feature can be
    /// uncertain.
    pub fn is_two_valued(&self) -> bool {
        self.correct_boxes.iter().all(|c| {
            self.incorrect_boxes
                .iter()
                .all(|i| matches!(c.intersect(i), Ok(None)))
        })
    }
}

/// Clusters the good and bad features of `class_id` with their own τ and
/// boxes each cluster.
pub fn build_class_monitor(
    records: &[FeatureRecord],
    class_id: usize,
    layer_id: usize,
    tau_correct: f64,
    tau_incorrect: f64,
    cfg: &ClusteringConfig,
) -> Result<ClassMonitor> {
    let sets = ReferenceSets::collect(records, class_id)?;
    build_from_sets(&sets, class_id, layer_id, tau_correct, tau_incorrect, cfg, None)
}

/// Variant of [`build_class_monitor`] over pre-split sets, optionally reusing
/// k caches `(correct, incorrect)` across τ values.
pub fn build_from_sets(
    sets: &ReferenceSets,
    class_id: usize,
    layer_id: usize,
    tau_correct: f64,
    tau_incorrect: f64,
    cfg: &ClusteringConfig,
    caches: Option<(&mut KCache, &mut KCache)>,
) -> Result<ClassMonitor> {
    let (cache_c, cache_i) = match caches {
        Some((c, i)) => (Some(c), Some(i)),
        None => (None, None),
    };
    let pc = cluster_if_any(&sets.correct, &cfg.with_tau(tau_correct), cache_c)?;
    let pi = cluster_if_any(&sets.incorrect, &cfg.with_tau(tau_incorrect), cache_i)?;
    ClassMonitor::from_partitions(
        class_id,
        layer_id,
        sets,
        pc.as_ref(),
        pi.as_ref(),
        tau_correct,
        tau_incorrect,
    )
}

pub(crate) fn cluster_if_any(points: &[Vector], cfg: &ClusteringConfig, cache: Option<&mut KCache>) -> Result<Option<Partition>> {
    if points.is_empty() {
        return Ok(None);
    }
    kmeans_by_tau(points, cfg, cache).map(Some)
}

/// Monitors of every class at one layer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorSet {
    pub layer: usize,
    /// Grid resolution override used while tuning, if any.
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub classes: BTreeMap<usize, ClassMonitor>,
}

impl MonitorSet {
    pub fn new(layer: usize) -> Self {
        MonitorSet {
            layer,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, monitor: ClassMonitor) {
        self.classes.insert(monitor.class_id, monitor);
    }

    pub fn get(&self, class_id: usize) -> Result<&ClassMonitor> {
        self.classes.get(&class_id).ok_or(Error::UnknownClass(class_id))
    }

    /// Dispatches on the predicted class, as the network output decides
    /// which monitor is consulted.
    pub fn run(&self, record: &FeatureRecord) -> Result<Verdict> {
        self.get(record.predicted_label)?.verdict(&record.features)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MonitorFile {
            version: FORMAT_VERSION,
            layer: self.layer,
            resolution: self.resolution,
            seed: self.seed,
            classes: self
                .classes
                .values()
                .map(|m| ClassEntry {
                    class: m.class_id,
                    tau_correct: m.tau_correct,
                    tau_incorrect: m.tau_incorrect,
                    correct_boxes: m.correct_boxes.iter().map(Hyperbox::to_bounds).collect(),
                    incorrect_boxes: m.incorrect_boxes.iter().map(Hyperbox::to_bounds).collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::Invariant(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MonitorFile = serde_json::from_str(text).map_err(|e| Error::MalformedMonitorFile {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        file.into_set()
    }
}

pub fn run_monitor(monitors: &MonitorSet, record: &FeatureRecord) -> Result<Verdict> {
    monitors.run(record)
}

pub fn serialize_monitor(monitors: &MonitorSet) -> Result<Vec<u8>> {
    monitors.to_json().map(String::into_bytes)
}

pub fn deserialize_monitor(bytes: &[u8]) -> Result<MonitorSet> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedMonitorFile {
        location: format!("byte {}", e.valid_up_to()),
        message: "not UTF-8".into(),
    })?;
    MonitorSet::from_json(text)
}

const FORMAT_VERSION: u32 = 1;

type BoxBounds = Vec<[f64; 2]>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonitorFile {
    version: u32,
    layer: usize,
    resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    classes: Vec<ClassEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    class: usize,
    tau_correct: f64,
    tau_incorrect: f64,
    correct_boxes: Vec<BoxBounds>,
    incorrect_boxes: Vec<BoxBounds>,
}

impl MonitorFile {
    fn into_set(self) -> Result<MonitorSet> {
        let malformed = |location: String, message: String| Error::MalformedMonitorFile { location, message };
        if self.version != FORMAT_VERSION {
            return Err(malformed("version".into(), format!("unsupported version {}", self.version)));
        }
        if self.resolution == Some(0) {
            return Err(malformed("resolution".into(), "must be positive".into()));
        }
        let mut set = MonitorSet {
            layer: self.layer,
            resolution: self.resolution,
            seed: self.seed,
            classes: BTreeMap::new(),
        };
        let mut dim: Option<usize> = None;
        for (ci, entry) in self.classes.into_iter().enumerate() {
            for (name, tau) in [("tau_correct", entry.tau_correct), ("tau_incorrect", entry.tau_incorrect)] {
                if !(0.0..=1.0).contains(&tau) {
                    return Err(malformed(format!("classes[{ci}].{name}"), format!("τ = {tau} outside [0, 1]")));
                }
            }
            let mut convert = |field: &str, raw: Vec<BoxBounds>| -> Result<Vec<Hyperbox>> {
                raw.into_iter()
                    .enumerate()
                    .map(|(bi, bounds)| {
                        let at = |d: Option<usize>| match d {
                            Some(d) => format!("classes[{ci}].{field}[{bi}][{d}]"),
                            None => format!("classes[{ci}].{field}[{bi}]"),
                        };
                        let expected = *dim.get_or_insert(bounds.len());
                        if bounds.len() != expected || expected == 0 {
                            return Err(malformed(at(None), format!("box has {} dimensions, expected {expected}", bounds.len())));
                        }
                        let ivs = bounds
                            .iter()
                            .enumerate()
                            .map(|(d, &[lo, hi])| Interval::new(lo, hi).map_err(|e| malformed(at(Some(d)), e.to_string())))
                            .collect::<Result<Vec<_>>>()?;
                        Hyperbox::new(ivs)
                    })
                    .collect()
            };
            let correct_boxes = convert("correct_boxes", entry.correct_boxes)?;
            let incorrect_boxes = convert("incorrect_boxes", entry.incorrect_boxes)?;
            let monitor = ClassMonitor {
                class_id: entry.class,
                layer_id: self.layer,
                correct_boxes,
                incorrect_boxes,
                tau_correct: entry.tau_correct,
                tau_incorrect: entry.tau_incorrect,
            };
            if set.classes.insert(entry.class, monitor).is_some() {
                return Err(malformed(format!("classes[{ci}].class"), format!("duplicate class {}", entry.class)));
            }
        }
        Ok(set)
    }
}
