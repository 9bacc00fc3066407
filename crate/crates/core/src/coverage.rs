//! Boxes with a resolution.
//!
//! The global box of a point set is restricted to its non-degenerate
//! dimensions (the covered space) and each of those is cut into
//! `resolution` equal cells. A local box covers the cells it touches; the
//! ratio of covered cells to all cells measures how much of the global box a
//! clustering actually occupies.
//!
//! Cell `j` (1-based) along a kept dimension `[a, b]` with width
//! `w = (b - a) / r` is the interval `(a + (j-1)w, a + jw]`, except cell 1
//! which also contains `a`. A coordinate `x` therefore falls in cell
//! `max(1, ceil(r (x - a) / (b - a)))`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Hyperbox, Interval, Vector};

/// Relative distance to an integer under which a scaled coordinate is
/// snapped onto the cell boundary.
const SNAP_EPS: f64 = 1e-12;

/// Enumeration guard for [`exact_coverage_oracle`].
pub const MAX_ORACLE_CELLS: u64 = 10_000_000;

/// The global box restricted to its dimensions of non-zero length.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveredSpace {
    base: Hyperbox,
    kept_dims: Vec<usize>,
}

impl CoveredSpace {
    pub fn of(global: &Hyperbox) -> Self {
        let kept_dims = global
            .intervals()
            .iter()
            .enumerate()
            .filter(|(_, iv)| !iv.is_degenerate())
            .map(|(i, _)| i)
            .collect();
        CoveredSpace {
            base: global.clone(),
            kept_dims,
        }
    }

    pub fn base(&self) -> &Hyperbox {
        &self.base
    }

    /// Original dimension indices with non-zero length, ascending.
    pub fn kept_dims(&self) -> &[usize] {
        &self.kept_dims
    }

    pub fn effective_dim(&self) -> usize {
        self.kept_dims.len()
    }

    /// The kept intervals, or `None` when every dimension is degenerate.
    pub fn as_box(&self) -> Option<Hyperbox> {
        if self.kept_dims.is_empty() {
            return None;
        }
        let ivs = self.kept_dims.iter().map(|&d| *self.base.interval(d)).collect();
        Hyperbox::new(ivs).ok()
    }
}

/// Inclusive 1-based cell index range per kept dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellRange {
    ranges: Vec<(usize, usize)>,
}

impl CellRange {
    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    pub fn count(&self) -> Option<u128> {
        self.ranges
            .iter()
            .try_fold(1u128, |acc, &(lo, hi)| acc.checked_mul((hi - lo + 1) as u128))
    }

    /// Fraction of the `resolution^d` grid spanned by this range.
    pub fn fraction(&self, resolution: usize) -> f64 {
        const EXACT: f64 = 9_007_199_254_740_992.0; // 2^53
        let r = resolution as f64;
        let total = r.powi(self.ranges.len() as i32);
        if total <= EXACT {
            // both counts are exact integers, so one rounding at the division
            let count: f64 = self.ranges.iter().map(|&(lo, hi)| (hi - lo + 1) as f64).product();
            return count / total;
        }
        self.ranges
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as f64 / r)
            .product()
    }

    /// Cells shared by both ranges, or `None` if they share none.
    pub fn intersect(&self, other: &CellRange) -> Option<CellRange> {
        let ranges = self
            .ranges
            .iter()
            .zip(&other.ranges)
            .map(|(&(a0, a1), &(b0, b1))| {
                let lo = a0.max(b0);
                let hi = a1.min(b1);
                (lo <= hi).then_some((lo, hi))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(CellRange { ranges })
    }
}

/// The covered space of a global box cut into `resolution` cells per kept
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionGrid {
    space: CoveredSpace,
    resolution: usize,
}

impl ResolutionGrid {
    pub fn new(global: &Hyperbox, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::ZeroResolution);
        }
        Ok(ResolutionGrid {
            space: CoveredSpace::of(global),
            resolution,
        })
    }

    /// Grid over the tight box of `points`; the resolution defaults to the
    /// number of points.
    pub fn for_points(points: &[Vector], resolution: Option<usize>) -> Result<Self> {
        let global = Hyperbox::of(points)?;
        ResolutionGrid::new(&global, resolution.unwrap_or(points.len()))
    }

    pub fn space(&self) -> &CoveredSpace {
        &self.space
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `resolution^effective_dim` as a float; exact up to 2^53.
    pub fn total_cells(&self) -> f64 {
        (self.resolution as f64).powi(self.space.effective_dim() as i32)
    }

    fn kept_interval(&self, pos: usize) -> &Interval {
        self.space.base.interval(self.space.kept_dims[pos])
    }

    /// 1-based cell index of coordinate `x` along the `pos`-th kept dimension.
    pub fn cell_index(&self, pos: usize, x: f64) -> usize {
        let global = self.kept_interval(pos);
        let r = self.resolution as f64;
        let mut t = r * (x - global.lo()) / global.len();
        let nearest = t.round();
        if (t - nearest).abs() <= SNAP_EPS * nearest.abs().max(1.0) {
            t = nearest;
        }
        (t.ceil().max(1.0) as usize).min(self.resolution)
    }

    /// Cells touched by `sub`, which must lie inside the global box.
    pub fn cell_range(&self, sub: &Hyperbox) -> Result<CellRange> {
        let base = &self.space.base;
        crate::geometry::check_dim(base.dim(), sub.dim())?;
        for (d, (inner, outer)) in sub.intervals().iter().zip(base.intervals()).enumerate() {
            if !inner.is_within(outer) {
                return Err(Error::NotASubBox { dim: d });
            }
        }
        let ranges = self
            .space
            .kept_dims
            .iter()
            .enumerate()
            .map(|(pos, &d)| {
                let iv = sub.interval(d);
                let lo = self.cell_index(pos, iv.lo());
                if iv.is_degenerate() {
                    (lo, lo)
                } else {
                    (lo, self.cell_index(pos, iv.hi()).max(lo))
                }
            })
            .collect();
        Ok(CellRange { ranges })
    }

    /// Number of grid cells intersected by `sub`.
    pub fn covered_cell_count(&self, sub: &Hyperbox) -> Result<u128> {
        self.cell_range(sub)?.count().ok_or(Error::CellCountOverflow)
    }

    /// Covered cells of `sub` over all cells; 1 for an empty covered space.
    pub fn subbox_coverage(&self, sub: &Hyperbox) -> Result<f64> {
        Ok(self.cell_range(sub)?.fraction(self.resolution))
    }
}

/// Lower and upper bound on the clustering coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub lower: f64,
    pub upper: f64,
}

impl CoverageEstimate {
    pub fn exact(value: f64) -> Self {
        CoverageEstimate {
            lower: value,
            upper: value,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }

    /// `(upper - lower) / upper`; zero when the bounds coincide.
    pub fn relative_difference(&self) -> f64 {
        if self.upper > 0.0 {
            (self.upper - self.lower) / self.upper
        } else {
            0.0
        }
    }
}

impl fmt::Display for CoverageEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

/// Coverage bounds for local boxes inside `grid`.
///
/// The upper bound sums the coverage of each box. The lower bound subtracts
/// the cells shared by each pair of boxes; two boxes share a cell when their
/// cell ranges overlap, which includes disjoint boxes that touch the same
/// cell from different sides.
pub fn coverage_of_boxes(grid: &ResolutionGrid, boxes: &[Hyperbox]) -> Result<CoverageEstimate> {
    if boxes.is_empty() {
        return Err(Error::InvalidPartition("no local boxes".into()));
    }
    if grid.space.effective_dim() == 0 {
        return Ok(CoverageEstimate::exact(1.0));
    }
    let ranges = boxes
        .iter()
        .map(|b| grid.cell_range(b))
        .collect::<Result<Vec<_>>>()?;
    let shared: Vec<CellRange> = ranges
        .iter()
        .enumerate()
        .flat_map(|(i, a)| ranges[i + 1..].iter().filter_map(move |b| a.intersect(b)))
        .collect();
    let (lower, upper) = match (exact_cell_sum(&ranges), exact_cell_sum(&shared)) {
        // integer sums, one division each: lower <= exact <= upper holds without rounding slack
        (Some(sum), Some(overlap)) => {
            let total = grid.total_cells();
            (sum.saturating_sub(overlap) as f64 / total, sum as f64 / total)
        }
        _ => {
            let res = grid.resolution;
            let upper: f64 = ranges.iter().map(|r| r.fraction(res)).sum();
            let overlap: f64 = shared.iter().map(|r| r.fraction(res)).sum();
            ((upper - overlap).max(0.0), upper)
        }
    };
    let upper = upper.min(1.0);
    Ok(CoverageEstimate {
        lower: lower.min(upper),
        upper,
    })
}

/// Total cell count of `ranges` when it is exactly representable as `f64`.
fn exact_cell_sum(ranges: &[CellRange]) -> Option<u128> {
    const EXACT: u128 = 1 << 53;
    let mut sum: u128 = 0;
    for r in ranges {
        sum = sum.checked_add(r.count()?)?;
        if sum > EXACT {
            return None;
        }
    }
    Some(sum)
}

/// Coverage bounds for a partition of `points`, one local box per block.
pub fn clustering_coverage(
    points: &[Vector],
    partition: &[Vec<Vector>],
    resolution: Option<usize>,
) -> Result<CoverageEstimate> {
    validate_partition(points, partition)?;
    let grid = ResolutionGrid::for_points(points, resolution)?;
    let boxes = partition
        .iter()
        .map(Hyperbox::of)
        .collect::<Result<Vec<_>>>()?;
    coverage_of_boxes(&grid, &boxes)
}

/// Exact fraction of cells touched by at least one of `boxes`, by
/// enumerating the whole grid.
pub fn exact_coverage_of_boxes(grid: &ResolutionGrid, boxes: &[Hyperbox]) -> Result<f64> {
    let d = grid.space.effective_dim();
    if d == 0 {
        return Ok(1.0);
    }
    let total = grid.total_cells();
    if total > MAX_ORACLE_CELLS as f64 {
        return Err(Error::TooManyCells {
            cells: total,
            limit: MAX_ORACLE_CELLS,
        });
    }
    let res = grid.resolution;
    // hits[b][pos][j]: does box b reach cell j+1 along kept dimension pos
    let mut hits = Vec::with_capacity(boxes.len());
    for b in boxes {
        if !b.is_subbox_of(&grid.space.base)? {
            return Err(Error::NotASubBox { dim: 0 });
        }
        let per_dim: Vec<Vec<bool>> = grid
            .space
            .kept_dims
            .iter()
            .map(|&dim| {
                let g = grid.space.base.interval(dim);
                let iv = b.interval(dim);
                (1..=res).map(|j| cell_touches(g, res, j, iv)).collect()
            })
            .collect();
        hits.push(per_dim);
    }

    let mut idx = vec![0usize; d];
    let mut covered: u64 = 0;
    loop {
        if hits
            .iter()
            .any(|per_dim| per_dim.iter().zip(&idx).all(|(h, &j)| h[j]))
        {
            covered += 1;
        }
        let mut pos = 0;
        loop {
            if pos == d {
                return Ok(covered as f64 / total);
            }
            idx[pos] += 1;
            if idx[pos] < res {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact clustering coverage of a partition by full cell enumeration.
pub fn exact_coverage_oracle(
    points: &[Vector],
    partition: &[Vec<Vector>],
    resolution: Option<usize>,
) -> Result<f64> {
    validate_partition(points, partition)?;
    let grid = ResolutionGrid::for_points(points, resolution)?;
    let boxes = partition
        .iter()
        .map(Hyperbox::of)
        .collect::<Result<Vec<_>>>()?;
    exact_coverage_of_boxes(&grid, &boxes)
}

/// Does `iv` meet cell `j` of `global` cut into `res` parts? Compares
/// `res * (x - a)` against `j * (b - a)` directly instead of indexing.
fn cell_touches(global: &Interval, res: usize, j: usize, iv: &Interval) -> bool {
    let a = global.lo();
    let span = global.len();
    let r = res as f64;
    let tol = SNAP_EPS * r * span;
    let right = j as f64 * span;
    let left = (j - 1) as f64 * span;
    let reaches_left_end = r * (iv.lo() - a) <= right + tol;
    let passes_left_edge = j == 1 || r * (iv.hi() - a) > left + tol;
    reaches_left_end && passes_left_edge
}

fn point_key(v: &Vector) -> Vec<u64> {
    // -0.0 and 0.0 are the same point
    v.iter().map(|&x| (x + 0.0).to_bits()).collect()
}

/// Blocks must be non-empty and together equal `points` as a multiset.
pub fn validate_partition(points: &[Vector], partition: &[Vec<Vector>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if partition.is_empty() {
        return Err(Error::InvalidPartition("no blocks".into()));
    }
    if let Some(i) = partition.iter().position(Vec::is_empty) {
        return Err(Error::InvalidPartition(format!("block {i} is empty")));
    }
    let mut all: Vec<Vec<u64>> = points.iter().map(point_key).collect();
    let mut union: Vec<Vec<u64>> = partition.iter().flatten().map(point_key).collect();
    all.sort_unstable();
    union.sort_unstable();
    if all != union {
        return Err(Error::InvalidPartition(
            "union of blocks differs from the point set".into(),
        ));
    }
    Ok(())
}
