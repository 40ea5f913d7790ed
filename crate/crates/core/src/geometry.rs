//! Planar primitives and the single-vertex move region of the sampler.
//!
//! Every region here is open: points exactly on a circle or a cut line are
//! never members. Three-point orientation uses exact-sign predicates on the
//! `f64` inputs, so membership answers are consistent between calls.

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts allowed when rejection-sampling a move region.
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        (self - other).norm_sq()
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    fn coord(self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.x,
            y: self.y,
        }
    }

    /// Lexicographic comparison on (x, y).
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    On,
}

impl Side {
    pub fn from_sign(v: f64) -> Side {
        if v > 0.0 {
            Side::Left
        } else if v < 0.0 {
            Side::Right
        } else {
            Side::On
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::On => Side::On,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Side::Left => 1,
            Side::Right => -1,
            Side::On => 0,
        }
    }
}

/// Side of `query` relative to the line through `anchor` along `direction`.
pub fn side_of_line(anchor: Point, direction: Point, query: Point) -> Result<Side> {
    if direction.x == 0.0 && direction.y == 0.0 {
        return Err(Error::InvalidInput("zero line direction".into()));
    }
    Ok(Side::from_sign(direction.cross(query - anchor)))
}

/// Exact orientation of `c` relative to the directed line `a -> b`.
pub fn orient(a: Point, b: Point, c: Point) -> Side {
    Side::from_sign(robust::orient2d(a.coord(), b.coord(), c.coord()))
}

/// Signed doubled area of (a, b, c); only the sign is exact.
pub fn orient_value(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(a.coord(), b.coord(), c.coord())
}

/// True when `d` lies strictly inside the circle through the counterclockwise
/// triangle (a, b, c).
pub fn in_circle(a: Point, b: Point, c: Point, d: Point) -> bool {
    robust::incircle(a.coord(), b.coord(), c.coord(), d.coord()) > 0.0
}

/// True when the closed segments `p1 p2` and `q1 q2` cross at a single point
/// interior to both.
pub fn segments_cross_properly(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let a = orient(p1, p2, q1).sign();
    let b = orient(p1, p2, q2).sign();
    let c = orient(q1, q2, p1).sign();
    let d = orient(q1, q2, p2).sign();
    a * b < 0 && c * d < 0
}

/// Euclidean distance from `p` to the closed segment `a b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// The puncture set Z with its cached reach and convex hull.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PunctureSet {
    punctures: Vec<Point>,
    reach: f64,
    hull: Vec<usize>,
    collinear: bool,
}

impl PunctureSet {
    pub fn new(punctures: Vec<Point>) -> Result<Self> {
        if punctures.is_empty() {
            return Err(Error::InvalidInput("puncture set is empty".into()));
        }
        if let Some(i) = punctures.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "puncture {i} has a non-finite coordinate"
            )));
        }
        let mut min_dist = f64::INFINITY;
        for i in 0..punctures.len() {
            for j in i + 1..punctures.len() {
                let d = punctures[i].dist(punctures[j]);
                if d == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "punctures {i} and {j} coincide"
                    )));
                }
                min_dist = min_dist.min(d);
            }
        }
        let collinear = punctures.len() <= 2
            || punctures[2..]
                .iter()
                .all(|&p| orient(punctures[0], punctures[1], p) == Side::On);
        let hull = if collinear {
            collinear_extremes(&punctures)
        } else {
            convex_hull(&punctures)
        };
        Ok(PunctureSet {
            punctures,
            reach: 0.5 * min_dist,
            hull,
            collinear,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.punctures
    }

    pub fn len(&self) -> usize {
        self.punctures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.punctures.is_empty()
    }

    pub fn get(&self, i: usize) -> Point {
        self.punctures[i]
    }

    /// Half the minimum pairwise distance; infinite for a single puncture.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Strict convex hull, counterclockwise. For collinear sets this holds
    /// the two extreme punctures (one for a singleton).
    pub fn hull(&self) -> &[usize] {
        &self.hull
    }

    pub fn is_collinear(&self) -> bool {
        self.collinear
    }

    pub fn index_of(&self, p: Point) -> Option<usize> {
        self.punctures.iter().position(|&z| z == p)
    }
}

/// Free-function form of [`PunctureSet::reach`].
pub fn reach(z: &PunctureSet) -> f64 {
    z.reach()
}

fn collinear_extremes(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    if idx.len() == 1 {
        idx
    } else {
        vec![idx[0], idx[idx.len() - 1]]
    }
}

/// Andrew's monotone chain, dropping collinear boundary points.
fn convex_hull(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && orient(
                points[lower[lower.len() - 2]],
                points[lower[lower.len() - 1]],
                points[i],
            ) != Side::Left
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && orient(
                points[upper[upper.len() - 2]],
                points[upper[upper.len() - 1]],
                points[i],
            ) != Side::Left
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Intersection of two open disks of equal radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LensRegion {
    pub center1: Point,
    pub center2: Point,
    pub radius: f64,
}

impl LensRegion {
    pub fn new(center1: Point, center2: Point, radius: f64) -> Self {
        LensRegion {
            center1,
            center2,
            radius,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.center1.dist(self.center2) >= 2.0 * self.radius
    }

    pub fn contains(&self, p: Point) -> bool {
        let r2 = self.radius * self.radius;
        p.dist_sq(self.center1) < r2 && p.dist_sq(self.center2) < r2
    }

    /// Oriented bounding rectangle spanned by the circle intersection points:
    /// returns (origin, axis, normal, x-range, half-height) with the lens
    /// contained in `origin + x*axis + y*normal`, `x` in range, `|y| < h`.
    fn frame(&self) -> (Point, Point, Point, (f64, f64), f64) {
        let d = self.center1.dist(self.center2);
        let r = self.radius;
        if d == 0.0 {
            return (
                self.center1,
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
                (-r, r),
                r,
            );
        }
        let axis = (self.center2 - self.center1) * (1.0 / d);
        let h = (r * r - 0.25 * d * d).max(0.0).sqrt();
        (self.center1, axis, axis.perp(), (d - r, r), h)
    }
}

/// Open half plane left or right of the directed line `anchor -> through`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub anchor: Point,
    pub through: Point,
    pub side: Side,
}

impl HalfPlane {
    pub fn contains(&self, p: Point) -> bool {
        orient(self.anchor, self.through, p) == self.side
    }

    pub fn closure_contains(&self, p: Point) -> bool {
        let s = orient(self.anchor, self.through, p);
        s == self.side || s == Side::On
    }

    /// Unit direction of the supporting line.
    pub fn direction(&self) -> Point {
        (self.through - self.anchor).normalized()
    }
}

/// The wedge `H = H1 ∩ H2` cut from the lens when a puncture lies inside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub first: HalfPlane,
    pub second: HalfPlane,
    /// `true`: region is `D ∩ H`; `false`: region is `D \ cl(H)`.
    pub keep_inside: bool,
}

impl Wedge {
    pub fn contains(&self, p: Point) -> bool {
        if self.keep_inside {
            self.first.contains(p) && self.second.contains(p)
        } else {
            !(self.first.closure_contains(p) && self.second.closure_contains(p))
        }
    }
}

/// Region the moved vertex is resampled from.
///
/// `wedge` is set when a puncture lies inside the lens. `chords` holds the
/// same-side constraints for punctures outside the lens but within the move
/// radius of a neighbor whose shadow ray (the ray from the puncture pointing
/// away from that neighbor) cuts the lens. Crossing such a chord drags the
/// edge to the neighbor over the puncture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRegion {
    pub lens: LensRegion,
    pub wedge: Option<Wedge>,
    pub chords: Vec<HalfPlane>,
}

impl MoveRegion {
    pub fn full(lens: LensRegion) -> Self {
        MoveRegion {
            lens,
            wedge: None,
            chords: Vec::new(),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.lens.contains(p)
            && self.wedge.is_none_or(|w| w.contains(p))
            && self.chords.iter().all(|h| h.contains(p))
    }

    pub fn is_uncut(&self) -> bool {
        self.wedge.is_none() && self.chords.is_empty()
    }
}

/// Build the move region for the vertex `v_cur` between `v_prev` and `v_next`.
pub fn move_region(
    v_prev: Point,
    v_cur: Point,
    v_next: Point,
    eps: f64,
    z: &PunctureSet,
) -> Result<MoveRegion> {
    if !(eps > 0.0) || eps >= z.reach() {
        return Err(Error::InvalidInput(format!(
            "move radius {eps} must be positive and below reach {}",
            z.reach()
        )));
    }
    let lens = LensRegion::new(v_prev, v_next, eps);
    if !lens.contains(v_cur) {
        return Err(Error::InvalidInput(
            "current vertex is not inside the lens of its neighbors".into(),
        ));
    }

    let r2 = eps * eps;
    let mut inside = z.points().iter().copied().filter(|&p| lens.contains(p));
    let first_inside = inside.next();
    if inside.next().is_some() {
        return Err(Error::Invariant(
            "two punctures inside one lens; move radius is not below reach".into(),
        ));
    }
    // the lens lies in a disk of radius eps, so its diameter is below 2 eps
    debug_assert!(v_prev.dist(v_next) < 2.0 * eps);

    if v_prev == v_next {
        // A spike v_prev -> v -> v_prev is contractible relative to its
        // endpoints for every admissible v, so the whole disk is one class.
        return Ok(MoveRegion::full(lens));
    }

    if let Some(zj) = first_inside {
        let next_side = orient(v_prev, zj, v_next);
        let prev_side = orient(v_next, zj, v_prev);
        if next_side == Side::On || prev_side == Side::On {
            return Err(Error::DegenerateGeometry(
                "neighbors collinear with the puncture inside the lens".into(),
            ));
        }
        let first = HalfPlane {
            anchor: v_prev,
            through: zj,
            side: next_side.opposite(),
        };
        let second = HalfPlane {
            anchor: v_next,
            through: zj,
            side: prev_side.opposite(),
        };
        if orient(v_prev, zj, v_cur) == Side::On || orient(v_next, zj, v_cur) == Side::On {
            return Err(Error::DegenerateGeometry(
                "moved vertex lies on a wedge line".into(),
            ));
        }
        let keep_inside = first.contains(v_cur) && second.contains(v_cur);
        return Ok(MoveRegion {
            lens,
            wedge: Some(Wedge {
                first,
                second,
                keep_inside,
            }),
            chords: Vec::new(),
        });
    }

    let mut chords = Vec::new();
    for &zk in z.points() {
        for (near, far) in [(v_prev, v_next), (v_next, v_prev)] {
            if zk.dist_sq(near) >= r2 || !shadow_ray_meets_lens(near, far, zk, eps) {
                continue;
            }
            let side = orient(near, zk, v_cur);
            if side == Side::On {
                return Err(Error::DegenerateGeometry(
                    "moved vertex lies on a shadow chord".into(),
                ));
            }
            chords.push(HalfPlane {
                anchor: near,
                through: zk,
                side,
            });
        }
    }
    Ok(MoveRegion {
        lens,
        wedge: None,
        chords,
    })
}

/// Whether the ray from `z` pointing away from `near` enters the lens of
/// `near` and `far`. Borderline cases resolve towards "yes": an extra
/// same-side constraint only shrinks the region.
fn shadow_ray_meets_lens(near: Point, far: Point, z: Point, eps: f64) -> bool {
    let offset = z - near;
    let d_near = offset.norm();
    let u = offset * (1.0 / d_near);
    let t_max = eps - d_near;
    let w = z - far;
    let b = u.dot(w);
    let disc = b * b - (w.norm_sq() - eps * eps);
    if disc <= 0.0 {
        return false;
    }
    let root = disc.sqrt();
    let (t1, t2) = (-b - root, -b + root);
    t1.max(0.0) < t2.min(t_max) + 1e-12 * eps
}

/// Draw a point uniformly from `region` by rejection from the lens frame.
pub fn sample_region<R: Rng + ?Sized>(region: &MoveRegion, rng: &mut R) -> Result<Point> {
    if region.lens.is_empty() || !(region.lens.radius > 0.0) {
        return Err(Error::InvalidInput("move region is empty".into()));
    }
    let (origin, axis, normal, (x0, x1), h) = region.lens.frame();
    for _ in 0..REJECTION_BUDGET {
        let x = x0 + (x1 - x0) * rng.random::<f64>();
        let y = h * (2.0 * rng.random::<f64>() - 1.0);
        let p = origin + axis * x + normal * y;
        if region.contains(p) {
            return Ok(p);
        }
    }
    Err(Error::SamplingFailure {
        attempts: REJECTION_BUDGET,
    })
}
