//! Tight box abstraction over finite sets of feature vectors.
//!
//! Boxes are closed on every dimension: a point lying exactly on a face is
//! inside. Degenerate intervals (`lo == hi`) are ordinary intervals and are
//! never inflated.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty feature vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Rejects empty input and any NaN or infinite coordinate.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Vector(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        Vector::new(coords).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

/// Closed interval `[lo, hi]` with finite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Result<Self> {
        Interval::new(x, x)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    #[inline]
    pub fn is_within(&self, outer: &Interval) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Axis-aligned closed box, one interval per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperbox {
    intervals: Vec<Interval>,
}

impl Hyperbox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(Hyperbox { intervals })
    }

    /// Builds a box from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let intervals = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Hyperbox::new(intervals)
    }

    /// The tight box abstraction: per-dimension min and max over `points`.
    pub fn of<'a, I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Vector>,
    {
        let mut iter = points.into_iter();
        let first = iter.next().ok_or(Error::EmptyPointSet)?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in iter {
            check_dim(lo.len(), p.dim())?;
            for (i, &x) in p.iter().enumerate() {
                if x < lo[i] {
                    lo[i] = x;
                }
                if x > hi[i] {
                    hi[i] = x;
                }
            }
        }
        Ok(Hyperbox {
            intervals: lo
                .into_iter()
                .zip(hi)
                .map(|(lo, hi)| Interval { lo, hi })
                .collect(),
        })
    }

    /// Tight box of the points of `points` selected by `indices`.
    pub fn of_indices(points: &[Vector], indices: &[usize]) -> Result<Self> {
        Hyperbox::of(indices.iter().map(|&i| &points[i]))
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, dim: usize) -> &Interval {
        &self.intervals[dim]
    }

    pub fn contains(&self, v: &[f64]) -> Result<bool> {
        check_dim(self.dim(), v.len())?;
        Ok(self.contains_unchecked(v))
    }

    /// Membership without the dimension check; callers guarantee equal length.
    #[inline]
    pub fn contains_unchecked(&self, v: &[f64]) -> bool {
        self.intervals.iter().zip(v).all(|(iv, &x)| iv.contains(x))
    }

    /// `Ok(None)` when the boxes are disjoint on some dimension. Touching
    /// faces yield a degenerate box.
    pub fn intersect(&self, other: &Hyperbox) -> Result<Option<Hyperbox>> {
        check_dim(self.dim(), other.dim())?;
        let intervals = self
            .intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>();
        Ok(intervals.map(|intervals| Hyperbox { intervals }))
    }

    /// True when `self` lies inside `outer` on every dimension.
    pub fn is_subbox_of(&self, outer: &Hyperbox) -> Result<bool> {
        check_dim(outer.dim(), self.dim())?;
        Ok(self
            .intervals
            .iter()
            .zip(&outer.intervals)
            .all(|(inner, outer)| inner.is_within(outer)))
    }

    pub fn to_bounds(&self) -> Vec<[f64; 2]> {
        self.intervals.iter().map(|iv| [iv.lo, iv.hi]).collect()
    }
}

impl fmt::Display for Hyperbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{iv}")?;
        }
        f.write_str("]")
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Converts rows of raw coordinates into validated vectors.
pub fn vectors(rows: &[&[f64]]) -> Result<Vec<Vector>> {
    rows.iter().map(|r| Vector::new(r.to_vec())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(bounds: &[(f64, f64)]) -> Hyperbox {
        Hyperbox::from_bounds(bounds).unwrap()
    }

    #[test]
    fn box_of_example_set() {
        let pts = vectors(&[&[0.1, 0.5], &[0.1, 1.0], &[0.2, 0.8], &[0.6, 0.2], &[1.0, 0.3]]).unwrap();
        assert_eq!(Hyperbox::of(&pts).unwrap(), bx(&[(0.1, 1.0), (0.2, 1.0)]));
    }

    #[test]
    fn box_of_single_point_is_degenerate() {
        let pts = vectors(&[&[3.0, 7.0]]).unwrap();
        let b = Hyperbox::of(&pts).unwrap();
        assert_eq!(b, bx(&[(3.0, 3.0), (7.0, 7.0)]));
        assert!(b.intervals().iter().all(Interval::is_degenerate));
    }

    #[test]
    fn box_of_with_flat_dimension() {
        let pts = vectors(&[&[1.5, 2.0, 1.0], &[1.8, 2.3, 1.0]]).unwrap();
        assert_eq!(
            Hyperbox::of(&pts).unwrap(),
            bx(&[(1.5, 1.8), (2.0, 2.3), (1.0, 1.0)])
        );
    }

    #[test]
    fn box_of_errors() {
        let empty: Vec<Vector> = vec![];
        assert!(matches!(Hyperbox::of(&empty), Err(Error::EmptyPointSet)));
        let mixed = vectors(&[&[1.0, 2.0], &[1.0]]).unwrap();
        assert!(matches!(
            Hyperbox::of(&mixed),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn rejects_nan() {
        assert!(matches!(
            Vector::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn membership() {
        let b = bx(&[(0.078, 0.222), (0.062, 0.162)]);
        assert!(b.contains(&[0.14, 0.13]).unwrap());
        let b = bx(&[(0.1, 1.0), (0.2, 1.0)]);
        assert!(b.contains(&[0.1, 0.2]).unwrap());
        let b = bx(&[(0.69, 0.79), (0.61, 0.71)]);
        assert!(!b.contains(&[0.58, 0.56]).unwrap());
        assert!(b.contains(&[0.5]).is_err());
    }

    #[test]
    fn intersection_cases() {
        let a = bx(&[(0.0, 2.0), (0.0, 2.0)]);
        let b = bx(&[(1.0, 3.0), (1.0, 3.0)]);
        assert_eq!(a.intersect(&b).unwrap(), Some(bx(&[(1.0, 2.0), (1.0, 2.0)])));

        let a = bx(&[(0.0, 1.0), (0.0, 1.0)]);
        let b = bx(&[(2.0, 3.0), (0.0, 1.0)]);
        assert_eq!(a.intersect(&b).unwrap(), None);

        let b = bx(&[(1.0, 2.0), (0.0, 1.0)]);
        assert_eq!(a.intersect(&b).unwrap(), Some(bx(&[(1.0, 1.0), (0.0, 1.0)])));
    }

    #[test]
    fn subbox_cases() {
        let inner = bx(&[(0.1, 0.2), (0.5, 1.0)]);
        let outer = bx(&[(0.1, 1.0), (0.2, 1.0)]);
        assert!(inner.is_subbox_of(&outer).unwrap());
        assert!(outer.is_subbox_of(&outer).unwrap());
        let wide = bx(&[(0.0, 3.0), (0.0, 1.0)]);
        let narrow = bx(&[(0.0, 2.0), (0.0, 1.0)]);
        assert!(!wide.is_subbox_of(&narrow).unwrap());
    }

    fn point_set(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), 1..12)
    }

    proptest! {
        #[test]
        fn box_contains_and_is_tight(pts in (1usize..5).prop_flat_map(point_set)) {
            let pts: Vec<Vector> = pts.into_iter().map(|p| Vector::new(p).unwrap()).collect();
            let b = Hyperbox::of(&pts).unwrap();
            for p in &pts {
                prop_assert!(b.contains(p).unwrap());
            }
            for (i, iv) in b.intervals().iter().enumerate() {
                prop_assert!(pts.iter().any(|p| p[i] == iv.lo()));
                prop_assert!(pts.iter().any(|p| p[i] == iv.hi()));
            }
        }

        #[test]
        fn subset_box_is_subbox(pts in (1usize..4).prop_flat_map(point_set), cut in 1usize..12) {
            let pts: Vec<Vector> = pts.into_iter().map(|p| Vector::new(p).unwrap()).collect();
            let cut = cut.min(pts.len());
            let sub = Hyperbox::of(&pts[..cut]).unwrap();
            let all = Hyperbox::of(&pts).unwrap();
            prop_assert!(sub.is_subbox_of(&all).unwrap());
        }

        #[test]
        fn intersection_matches_membership(
            a in prop::collection::vec((-5.0f64..5.0, 0.0f64..4.0), 2),
            b in prop::collection::vec((-5.0f64..5.0, 0.0f64..4.0), 2),
            probes in prop::collection::vec(prop::collection::vec(-6.0f64..9.0, 2), 32),
        ) {
            let a = Hyperbox::from_bounds(&a.iter().map(|&(l, w)| (l, l + w)).collect::<Vec<_>>()).unwrap();
            let b = Hyperbox::from_bounds(&b.iter().map(|&(l, w)| (l, l + w)).collect::<Vec<_>>()).unwrap();
            let ab = a.intersect(&b).unwrap();
            prop_assert_eq!(&ab, &b.intersect(&a).unwrap());
            prop_assert_eq!(a.intersect(&a).unwrap(), Some(a.clone()));
            for v in &probes {
                let both = a.contains(v).unwrap() && b.contains(v).unwrap();
                let inside = ab.as_ref().map(|x| x.contains(v).unwrap()).unwrap_or(false);
                prop_assert_eq!(both, inside);
            }
        }
    }
}
