//! Exact planar geometry: positions, configurations, safe destination regions
//! and the lazy destination lattice.
//!
//! Destinations are never chosen from an explicit Voronoi diagram. Instead each
//! occupied point `P` gets an axis-aligned square of half-width `d_inf / 3`,
//! where `d_inf` is the L∞ distance from `P` to the nearest other occupied
//! point. Every point of that square is within `(d_inf / 3)·√2 < d_inf / 2` of
//! `P` in Euclidean distance, hence strictly inside the Voronoi cell of `P`.
//! All of this stays in exact rational arithmetic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("a configuration needs at least one robot")]
    EmptyConfiguration,
    #[error("only one point is occupied, the safe region is undefined")]
    SoloConfiguration,
    #[error("point is not occupied in the configuration")]
    NotOccupied,
    #[error("destination count must be at least 1")]
    ZeroDestinations,
    #[error("destination index {index} out of range for k = {k}")]
    IndexOutOfRange { index: BigUint, k: BigUint },
    #[error("coordinate not representable in the scalar type")]
    Unrepresentable,
}

/// A point of the plane with exact coordinates. Ordered lexicographically by
/// `(x, y)`, which is the canonical order used for every listing of points.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Ord for Point<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.x
            .fast_cmp(&other.x)
            .then_with(|| self.y.fast_cmp(&other.y))
    }
}

impl<T: Scalar> PartialOrd for Point<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn origin() -> Self {
        Point::new(T::zero(), T::zero())
    }

    pub fn from_integers(x: i64, y: i64) -> Self {
        let one = BigInt::one();
        Point::new(
            T::from_ratio(&BigInt::from(x), &one).expect("integers are representable"),
            T::from_ratio(&BigInt::from(y), &one).expect("integers are representable"),
        )
    }

    /// L∞ (Chebyshev) distance.
    pub fn chebyshev(&self, other: &Self) -> T {
        let dx = (self.x.clone() - other.x.clone()).abs();
        let dy = (self.y.clone() - other.y.clone()).abs();
        if dx.fast_cmp(&dy) == Ordering::Less {
            dy
        } else {
            dx
        }
    }

    pub fn squared_distance(&self, other: &Self) -> T {
        let dx = self.x.clone() - other.x.clone();
        let dy = self.y.clone() - other.y.clone();
        dx.clone() * dx + dy.clone() * dy
    }
}

impl<T: fmt::Display> fmt::Display for Point<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The multiset of robot positions. Entry `i` is the position of robot `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration<T> {
    positions: Vec<Point<T>>,
    counts: BTreeMap<Point<T>, usize>,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(positions: Vec<Point<T>>) -> Result<Self, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::EmptyConfiguration);
        }
        let mut counts = BTreeMap::new();
        for p in &positions {
            *counts.entry(p.clone()).or_insert(0) += 1;
        }
        Ok(Configuration { positions, counts })
    }

    /// `n` robots stacked on a single point.
    pub fn gathered(n: usize, at: Point<T>) -> Result<Self, GeometryError> {
        Configuration::new(vec![at; n])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point<T>] {
        &self.positions
    }

    pub fn position(&self, robot: usize) -> &Point<T> {
        &self.positions[robot]
    }

    /// Occupied points with their multiplicities, in canonical order.
    pub fn counts(&self) -> &BTreeMap<Point<T>, usize> {
        &self.counts
    }

    pub fn multiplicity(&self, p: &Point<T>) -> usize {
        self.counts.get(p).copied().unwrap_or(0)
    }

    /// U(C): the distinct occupied points in canonical order.
    pub fn u_projection(&self) -> Vec<Point<T>> {
        self.counts.keys().cloned().collect()
    }

    pub fn distinct_count(&self) -> usize {
        self.counts.len()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.counts.values().copied().max().unwrap_or(0)
    }

    /// No two robots share a location.
    pub fn is_scattered(&self) -> bool {
        self.counts.len() == self.positions.len()
    }
}

/// Closed axis-aligned square around an occupied point, strictly inside its
/// Voronoi cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SafeRegion<T> {
    pub center: Point<T>,
    pub half_width: T,
}

impl<T: Scalar> SafeRegion<T> {
    /// Region used when the configuration occupies a single point.
    pub fn solo(center: Point<T>) -> Self {
        SafeRegion {
            center,
            half_width: T::one(),
        }
    }

    fn from_chebyshev(center: Point<T>, d_inf: T) -> Self {
        let three = T::one() + T::one() + T::one();
        SafeRegion {
            center,
            half_width: d_inf / three,
        }
    }

    pub fn contains(&self, q: &Point<T>) -> bool {
        self.center.chebyshev(q) <= self.half_width
    }
}

/// Safe region of `p` computed by a linear scan over U(C).
pub fn safe_region<T: Scalar>(
    config: &Configuration<T>,
    p: &Point<T>,
) -> Result<SafeRegion<T>, GeometryError> {
    if config.multiplicity(p) == 0 {
        return Err(GeometryError::NotOccupied);
    }
    let nearest = config
        .counts()
        .keys()
        .filter(|q| *q != p)
        .map(|q| p.chebyshev(q))
        .min()
        .ok_or(GeometryError::SoloConfiguration)?;
    Ok(SafeRegion::from_chebyshev(p.clone(), nearest))
}

/// Like [`safe_region`], falling back to the unit half-width when only one
/// point is occupied.
pub fn safe_region_or_default<T: Scalar>(
    config: &Configuration<T>,
    p: &Point<T>,
) -> Result<SafeRegion<T>, GeometryError> {
    match safe_region(config, p) {
        Err(GeometryError::SoloConfiguration) => Ok(SafeRegion::solo(p.clone())),
        other => other,
    }
}

/// Relative slack on float distance estimates. Conversions and one
/// subtraction cost a few ulps of the operands, so this leaves ample margin.
const FLOAT_SLACK: f64 = 1e-12;

/// Exact L∞ distance from `points[i]` to its nearest neighbour, scanning the
/// x-sorted `points` outwards until the x gap alone exceeds the best so far.
fn nearest_exact<T: Scalar>(points: &[Point<T>], i: usize) -> T {
    let p = &points[i];
    let mut best: Option<T> = None;
    let mut scan = |q: &Point<T>, dx: T| -> bool {
        if best
            .as_ref()
            .is_some_and(|b| dx.fast_cmp(b) != Ordering::Less)
        {
            return false;
        }
        let d = p.chebyshev(q);
        if best
            .as_ref()
            .is_none_or(|b| d.fast_cmp(b) == Ordering::Less)
        {
            best = Some(d);
        }
        true
    };
    for q in &points[i + 1..] {
        if !scan(q, q.x.clone() - p.x.clone()) {
            break;
        }
    }
    for q in points[..i].iter().rev() {
        if !scan(q, p.x.clone() - q.x.clone()) {
            break;
        }
    }
    best.expect("at least two distinct points")
}

/// Same result as [`nearest_exact`]. A float pass finds every neighbour whose
/// distance is within rounding error of the float minimum; only those are
/// measured exactly. Returns `None` when some coordinate has no finite float
/// image, in which case the caller falls back to the exact scan.
fn nearest_filtered<T: Scalar>(points: &[Point<T>], approx: &[(f64, f64)], i: usize) -> Option<T> {
    let (px, py) = approx[i];
    let tol =
        |j: usize| FLOAT_SLACK * (px.abs() + py.abs() + approx[j].0.abs() + approx[j].1.abs());
    let mut bound = f64::INFINITY;
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    let mut visit = |j: usize, dx: f64| -> Option<bool> {
        let (qx, qy) = approx[j];
        if !(qx.is_finite() && qy.is_finite()) {
            return None;
        }
        let t = tol(j);
        if dx - t > bound {
            return Some(false);
        }
        let d = dx.max((qy - py).abs());
        candidates.push((j, d, t));
        bound = bound.min(d + t);
        Some(true)
    };
    if !(px.is_finite() && py.is_finite()) {
        return None;
    }
    for (j, &(qx, _)) in approx.iter().enumerate().skip(i + 1) {
        if !visit(j, qx - px)? {
            break;
        }
    }
    for j in (0..i).rev() {
        if !visit(j, px - approx[j].0)? {
            break;
        }
    }
    let mut best: Option<T> = None;
    for (j, d, t) in candidates {
        if d - t > bound {
            continue;
        }
        let exact = points[i].chebyshev(&points[j]);
        if best
            .as_ref()
            .is_none_or(|b| exact.fast_cmp(b) == Ordering::Less)
        {
            best = Some(exact);
        }
    }
    best
}

/// Safe regions of every occupied point at once.
pub fn safe_regions<T: Scalar>(config: &Configuration<T>) -> BTreeMap<Point<T>, SafeRegion<T>> {
    let points = config.u_projection();
    if points.len() == 1 {
        let p = points[0].clone();
        return BTreeMap::from([(p.clone(), SafeRegion::solo(p))]);
    }
    let approx: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.x.to_f64(), p.y.to_f64()))
        .collect();
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d =
                nearest_filtered(&points, &approx, i).unwrap_or_else(|| nearest_exact(&points, i));
            (p.clone(), SafeRegion::from_chebyshev(p.clone(), d))
        })
        .collect()
}

/// True iff `q` is strictly closer (Euclidean) to `site` than to every other
/// occupied point.
pub fn voronoi_membership<T: Scalar>(
    config: &Configuration<T>,
    site: &Point<T>,
    q: &Point<T>,
) -> bool {
    let own = q.squared_distance(site);
    config
        .counts()
        .keys()
        .filter(|other| *other != site)
        .all(|other| own < q.squared_distance(other))
}

/// Row-major `m × m` lattice with `m = ceil(sqrt(k))`, of which the first `k`
/// cells are used. Built once per `k` and queried lazily by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridLayout {
    k: BigUint,
    side: BigUint,
}

impl GridLayout {
    pub fn new(k: &BigUint) -> Result<Self, GeometryError> {
        if k.is_zero() {
            return Err(GeometryError::ZeroDestinations);
        }
        let mut side = k.sqrt();
        if &(&side * &side) < k {
            side += 1u32;
        }
        Ok(GridLayout { k: k.clone(), side })
    }

    pub fn k(&self) -> &BigUint {
        &self.k
    }

    pub fn side(&self) -> &BigUint {
        &self.side
    }

    /// Cell `index` mapped into `region`. Cell `(i, j)` sits at offset
    /// `h·(2(i+1) − (m+1)) / (m+1)` on each axis, strictly inside the square.
    pub fn point<T: Scalar>(
        &self,
        region: &SafeRegion<T>,
        index: &BigUint,
    ) -> Result<Point<T>, GeometryError> {
        if index >= &self.k {
            return Err(GeometryError::IndexOutOfRange {
                index: index.clone(),
                k: self.k.clone(),
            });
        }
        let col = index % &self.side;
        let row = index / &self.side;
        let denom = BigInt::from(&self.side + 1u32);
        let coord = |base: &T, cell: BigUint| -> Result<T, GeometryError> {
            let numer = BigInt::from(cell + 1u32) * 2 - &denom;
            base.offset_by(&region.half_width, &numer, &denom)
                .ok_or(GeometryError::Unrepresentable)
        };
        Ok(Point::new(
            coord(&region.center.x, col)?,
            coord(&region.center.y, row)?,
        ))
    }
}

/// Destination number `index` out of `k` inside `region`.
pub fn destination_at<T: Scalar>(
    region: &SafeRegion<T>,
    k: &BigUint,
    index: &BigUint,
) -> Result<Point<T>, GeometryError> {
    GridLayout::new(k)?.point(region, index)
}
