//! k-means with an inertia-improvement stopping rule.
//!
//! The number of clusters is chosen by scanning `k = 1, 2, ...` and stopping
//! at the first `k` where `1 - inertia(k+1) / inertia(k) < τ`. Larger τ
//! stops earlier. The bisection searches locate the ends of the τ range over
//! which the mean clustering coverage actually moves.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coverage::{coverage_of_boxes, CoverageEstimate, ResolutionGrid};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Hyperbox, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    /// Improvement threshold τ in `[0, 1]`.
    pub tau: f64,
    pub seed: u64,
    /// Independent k-means++ runs per `k`; the lowest inertia wins.
    pub restarts: usize,
    pub max_iter: usize,
    /// Lloyd stops once the summed squared center shift falls below
    /// `center_tol` times the per-point variance of the data.
    pub center_tol: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            tau: 0.5,
            seed: 42,
            restarts: 10,
            max_iter: 300,
            center_tol: 1e-4,
        }
    }
}

impl ClusteringConfig {
    pub fn with_tau(&self, tau: f64) -> Self {
        ClusteringConfig {
            tau,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!("τ = {} outside [0, 1]", self.tau)));
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig("restarts and max_iter must be positive".into()));
        }
        if !(self.center_tol > 0.0) {
            return Err(Error::InvalidConfig("center_tol must be positive".into()));
        }
        Ok(())
    }
}

/// A k-means partition, blocks given as indices into the clustered points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
    pub centers: Vec<Vector>,
    pub inertia: f64,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// The whole set as one block.
    pub fn single(points: &[Vector]) -> Result<Self> {
        let all: Vec<usize> = (0..points.len()).collect();
        let center = mean_of(points, &all)?;
        let inertia = block_inertia(points, &all, &center);
        Ok(Partition {
            blocks: vec![all],
            centers: vec![center],
            inertia,
        })
    }

    pub fn block_points(&self, points: &[Vector]) -> Vec<Vec<Vector>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| points[i].clone()).collect())
            .collect()
    }

    /// One tight box per block.
    pub fn boxes(&self, points: &[Vector]) -> Result<Vec<Hyperbox>> {
        self.blocks
            .iter()
            .map(|b| Hyperbox::of_indices(points, b))
            .collect()
    }

    /// Inertia recomputed from blocks and centers.
    pub fn recompute_inertia(&self, points: &[Vector]) -> f64 {
        self.blocks
            .iter()
            .zip(&self.centers)
            .map(|(b, c)| block_inertia(points, b, c))
            .sum()
    }
}

/// Memo of τ → selected k and k → partition for one point set and config.
///
/// A cache must only be used with the data and configuration that filled
/// it; mixing them is reported as [`Error::CacheMismatch`].
#[derive(Debug, Clone, Default)]
pub struct KCache {
    fingerprint: Option<u64>,
    // τ ≥ 0, so the bit patterns sort like the values
    by_tau: BTreeMap<u64, usize>,
    partitions: BTreeMap<usize, Partition>,
}

impl KCache {
    pub fn new() -> Self {
        KCache::default()
    }

    pub fn cached_k(&self, tau: f64) -> Option<usize> {
        self.by_tau.get(&tau.to_bits()).copied()
    }

    /// `(τ, k)` pairs in ascending τ order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.by_tau.iter().map(|(&t, &k)| (f64::from_bits(t), k))
    }

    /// Starting k for a scan at `tau`: the k of the smallest cached τ′ ≥ τ.
    /// Every k below it failed the stricter threshold τ′ and so also fails τ.
    pub fn warm_start(&self, tau: f64) -> usize {
        self.by_tau
            .range(tau.to_bits()..)
            .next()
            .map(|(_, &k)| k)
            .unwrap_or(1)
    }

    fn bind(&mut self, fingerprint: u64) -> Result<()> {
        match self.fingerprint {
            None => {
                self.fingerprint = Some(fingerprint);
                Ok(())
            }
            Some(f) if f == fingerprint => Ok(()),
            Some(_) => Err(Error::CacheMismatch),
        }
    }
}

fn fingerprint(points: &[Vector], cfg: &ClusteringConfig) -> u64 {
    let mut h = DefaultHasher::new();
    points.len().hash(&mut h);
    for p in points {
        for x in p.iter() {
            x.to_bits().hash(&mut h);
        }
    }
    cfg.seed.hash(&mut h);
    cfg.restarts.hash(&mut h);
    cfg.max_iter.hash(&mut h);
    cfg.center_tol.to_bits().hash(&mut h);
    h.finish()
}

fn check_points(points: &[Vector]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyPointSet)?;
    for p in points {
        check_dim(first.dim(), p.dim())?;
    }
    Ok(first.dim())
}

/// Number of distinct points (treating -0.0 and 0.0 as equal).
pub fn distinct_count(points: &[Vector]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|&x| (x + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(points: &[Vector], idx: &[usize]) -> Result<Vector> {
    let dim = points[idx[0]].dim();
    let mut acc = vec![0.0; dim];
    for &i in idx {
        for (a, x) in acc.iter_mut().zip(points[i].iter()) {
            *a += x;
        }
    }
    let n = idx.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Vector::new(acc)
}

fn block_inertia(points: &[Vector], idx: &[usize], center: &[f64]) -> f64 {
    idx.iter().map(|&i| sq_dist(&points[i], center)).sum()
}

/// Index of the nearest center; lowest index wins ties.
#[inline]
fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp(points: &[Vector], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    chosen = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen.expect("positive total weight")
        } else {
            // only reachable when k exceeds the distinct points
            rng.gen_range(0..n)
        };
        centers.push(points[pick].to_vec());
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vector], k: usize, cfg: &ClusteringConfig, rng: &mut ChaCha8Rng, shift_tol: f64) -> Partition {
    let n = points.len();
    let dim = points[0].dim();
    let mut centers = kmeans_pp(points, k, rng);
    let mut assign = vec![usize::MAX; n];

    for _ in 0..cfg.max_iter {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (j, _) = nearest(p, &centers);
            if assign[i] != j {
                assign[i] = j;
                changed = true;
            }
        }
        repair_empty(points, &mut assign, &centers, k);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assign) {
            counts[j] += 1;
            for (s, x) in sums[j].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        let mut shift = 0.0;
        for j in 0..k {
            let c: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            shift += sq_dist(&c, &centers[j]);
            centers[j] = c;
        }
        if !changed || shift <= shift_tol {
            break;
        }
    }

    // Final assignment against the final centers, then exact means.
    for (i, p) in points.iter().enumerate() {
        assign[i] = nearest(p, &centers).0;
    }
    repair_empty(points, &mut assign, &centers, k);
    let mut blocks = vec![Vec::new(); k];
    for (i, &j) in assign.iter().enumerate() {
        blocks[j].push(i);
    }
    let centers: Vec<Vector> = blocks
        .iter()
        .map(|b| mean_of(points, b).expect("finite mean of finite points"))
        .collect();
    let inertia = blocks
        .iter()
        .zip(&centers)
        .map(|(b, c)| block_inertia(points, b, c))
        .sum();
    Partition {
        blocks,
        centers,
        inertia,
    }
}

/// Gives every empty cluster the point farthest from its own center, taken
/// from a cluster that has more than one member.
fn repair_empty(points: &[Vector], assign: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &j in assign.iter() {
            counts[j] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assign[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[assign[i]]);
            if best.map_or(true, |(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => assign[i] = empty,
            None => return,
        }
    }
}

fn total_variance(points: &[Vector]) -> f64 {
    let all: Vec<usize> = (0..points.len()).collect();
    match mean_of(points, &all) {
        Ok(m) => block_inertia(points, &all, &m) / points.len() as f64,
        Err(_) => 0.0,
    }
}

/// Best of `cfg.restarts` k-means++ seeded Lloyd runs with exactly `k` blocks.
///
/// Restart `r` for a given `k` draws from the ChaCha stream
/// `(k << 32) | r` of `cfg.seed`, so results do not depend on scheduling.
pub fn kmeans_fixed_k(points: &[Vector], k: usize, cfg: &ClusteringConfig) -> Result<Partition> {
    check_points(points)?;
    cfg.validate()?;
    let distinct = distinct_count(points);
    if k == 0 || k > distinct {
        return Err(Error::KTooLarge { k, distinct });
    }
    if k == 1 {
        return Partition::single(points);
    }
    Ok(kmeans_unchecked(points, k, cfg))
}

fn kmeans_unchecked(points: &[Vector], k: usize, cfg: &ClusteringConfig) -> Partition {
    let shift_tol = cfg.center_tol * total_variance(points);
    let runs: Vec<Partition> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((k as u64) << 32) | r as u64);
            lloyd(points, k, cfg, &mut rng, shift_tol)
        })
        .collect();
    // first minimum wins, so ties go to the lowest restart index
    runs.into_iter()
        .reduce(|best, p| if p.inertia < best.inertia { p } else { best })
        .expect("at least one restart")
}

/// Relative inertia improvement from `k` to `k + 1` clusters; 0 when there
/// is nothing left to improve.
pub fn improvement(inertia_k: f64, inertia_next: f64) -> f64 {
    if inertia_k <= 0.0 {
        0.0
    } else {
        1.0 - inertia_next / inertia_k
    }
}

/// Runs the τ-controlled k scan.
///
/// τ = 1 always selects a single cluster. Otherwise the scan stops at the
/// first `k` whose step to `k + 1` improves inertia by less than τ, when
/// `inertia(k)` is zero, or when `k` reaches the number of distinct points.
pub fn kmeans_by_tau(points: &[Vector], cfg: &ClusteringConfig, cache: Option<&mut KCache>) -> Result<Partition> {
    check_points(points)?;
    cfg.validate()?;
    let mut local = KCache::new();
    let cache = cache.unwrap_or(&mut local);
    cache.bind(fingerprint(points, cfg))?;
    let tau = cfg.tau;
    let distinct = distinct_count(points);

    let mut k = if tau >= 1.0 { 1 } else { cache.warm_start(tau).min(distinct) };
    loop {
        let inertia_k = partition_for(points, k, cfg, cache).inertia;
        if tau >= 1.0 || inertia_k <= 0.0 || k >= distinct {
            break;
        }
        let inertia_next = partition_for(points, k + 1, cfg, cache).inertia;
        if improvement(inertia_k, inertia_next) < tau {
            break;
        }
        k += 1;
    }
    cache.by_tau.insert(tau.to_bits(), k);
    Ok(cache.partitions[&k].clone())
}

fn partition_for<'c>(points: &[Vector], k: usize, cfg: &ClusteringConfig, cache: &'c mut KCache) -> &'c Partition {
    cache.partitions.entry(k).or_insert_with(|| {
        if k == 1 {
            Partition::single(points).expect("non-empty points")
        } else {
            kmeans_unchecked(points, k, cfg)
        }
    })
}

/// Coverage bounds of a partition's local boxes inside the points' global
/// grid.
pub fn partition_coverage(points: &[Vector], partition: &Partition, resolution: Option<usize>) -> Result<CoverageEstimate> {
    let grid = ResolutionGrid::for_points(points, resolution)?;
    coverage_of_boxes(&grid, &partition.boxes(points)?)
}

/// Mean of the coverage bounds for the partition selected at `tau`.
pub fn mean_coverage_at_tau(
    points: &[Vector],
    tau: f64,
    cfg: &ClusteringConfig,
    resolution: Option<usize>,
    cache: &mut KCache,
) -> Result<f64> {
    let partition = kmeans_by_tau(points, &cfg.with_tau(tau), Some(cache))?;
    Ok(partition_coverage(points, &partition, resolution)?.mean())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    /// Coverage difference treated as "close to the baseline".
    pub eps_cov: f64,
    /// Bisection stops once the τ interval is at most this long.
    pub eps_ival: f64,
    pub resolution: Option<usize>,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            eps_cov: 0.01,
            eps_ival: 0.01,
            resolution: None,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_cov > 0.0) {
            return Err(Error::InvalidConfig("eps_cov must be positive".into()));
        }
        if !(self.eps_ival > 0.0 && self.eps_ival < 1.0) {
            return Err(Error::InvalidConfig("eps_ival must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Bisection steps needed to shrink `[0, 1]` to `eps_ival`.
    pub fn expected_steps(&self) -> usize {
        (1.0 / self.eps_ival).log2().ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionStep {
    pub tau_mean: f64,
    pub mean_coverage: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSearch {
    pub tau: f64,
    /// Mean coverage at the baseline τ (1 for the upper search, 0 for the lower).
    pub baseline: f64,
    pub trace: Vec<BisectionStep>,
}

#[derive(Clone, Copy)]
enum SearchEnd {
    Max,
    Min,
}

fn bisect(
    points: &[Vector],
    tune: &TuneConfig,
    cfg: &ClusteringConfig,
    cache: &mut KCache,
    end: SearchEnd,
) -> Result<TauSearch> {
    check_points(points)?;
    tune.validate()?;
    let baseline_tau = match end {
        SearchEnd::Max => 1.0,
        SearchEnd::Min => 0.0,
    };
    let baseline = mean_coverage_at_tau(points, baseline_tau, cfg, tune.resolution, cache)?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut trace = Vec::new();
    while hi - lo > tune.eps_ival {
        let mid = (lo + hi) / 2.0;
        let cov = mean_coverage_at_tau(points, mid, cfg, tune.resolution, cache)?;
        let far = match end {
            SearchEnd::Max => baseline - cov > tune.eps_cov,
            SearchEnd::Min => cov - baseline > tune.eps_cov,
        };
        match (end, far) {
            (SearchEnd::Max, true) | (SearchEnd::Min, false) => lo = mid,
            (SearchEnd::Max, false) | (SearchEnd::Min, true) => hi = mid,
        }
        trace.push(BisectionStep {
            tau_mean: mid,
            mean_coverage: cov,
            lo,
            hi,
        });
    }
    let tau = match end {
        SearchEnd::Max => hi,
        SearchEnd::Min => lo,
    };
    Ok(TauSearch { tau, baseline, trace })
}

/// Largest τ region whose coverage stays within `eps_cov` of the single
/// cluster coverage; returns the upper end of the final bisection interval.
pub fn search_tau_max(points: &[Vector], tune: &TuneConfig, cfg: &ClusteringConfig, cache: &mut KCache) -> Result<TauSearch> {
    bisect(points, tune, cfg, cache, SearchEnd::Max)
}

/// Mirror of [`search_tau_max`] against the τ = 0 baseline; returns the lower
/// end of the final bisection interval.
pub fn search_tau_min(points: &[Vector], tune: &TuneConfig, cfg: &ClusteringConfig, cache: &mut KCache) -> Result<TauSearch> {
    bisect(points, tune, cfg, cache, SearchEnd::Min)
}
