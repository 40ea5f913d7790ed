//! Combinatorial free-homotopy invariant for loops in the punctured plane.
//!
//! The plane is cut by a crossing structure: the edges of a triangulation of
//! the punctures plus one ray per hull vertex along the outer-angle bisector
//! (or, for collinear punctures, the pieces of the common line plus two
//! perpendicular rays per puncture). Every face is convex, so a loop is
//! determined up to homotopy by the sequence of primitives it crosses. The
//! word of a loop lists those crossings with a sign; free reduction gives the
//! based homotopy class and cyclic reduction the free class.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    in_circle, orient, orient_value, segments_cross_properly, Point, PunctureSet, Side,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PrimitiveKind {
    /// Segment between two punctures, oriented from the lexicographically
    /// smaller endpoint to the larger one.
    Segment { start: usize, end: usize },
    /// Ray leaving a puncture, oriented outward.
    Ray { origin: usize, direction: Point },
}

/// One oriented element of the crossing structure. Its supporting line is
/// the directed line `anchor -> through`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub anchor: Point,
    pub through: Point,
}

enum LinePosition {
    Interior,
    Endpoint,
    Outside,
}

impl Primitive {
    fn segment(z: &PunctureSet, i: usize, j: usize) -> Self {
        let (a, b) = (z.get(i), z.get(j));
        let (start, end) = if a.lex_cmp(&b) == Ordering::Greater {
            (j, i)
        } else {
            (i, j)
        };
        Primitive {
            kind: PrimitiveKind::Segment { start, end },
            anchor: z.get(start),
            through: z.get(end),
        }
    }

    fn ray(z: &PunctureSet, origin: usize, direction: Point) -> Self {
        let direction = direction.normalized();
        let o = z.get(origin);
        Primitive {
            kind: PrimitiveKind::Ray { origin, direction },
            anchor: o,
            through: o + direction,
        }
    }

    fn side(&self, p: Point) -> Side {
        orient(self.anchor, self.through, p)
    }

    /// Position along the supporting line of a point known to lie on it.
    fn locate(&self, p: Point) -> LinePosition {
        match self.kind {
            PrimitiveKind::Segment { .. } => {
                let (a, b) = (self.anchor, self.through);
                if p == a || p == b {
                    LinePosition::Endpoint
                } else if (p - a).dot(b - a) > 0.0 && (p - b).dot(a - b) > 0.0 {
                    LinePosition::Interior
                } else {
                    LinePosition::Outside
                }
            }
            PrimitiveKind::Ray { direction, .. } => {
                if p == self.anchor {
                    LinePosition::Endpoint
                } else if (p - self.anchor).dot(direction) > 0.0 {
                    LinePosition::Interior
                } else {
                    LinePosition::Outside
                }
            }
        }
    }

    /// For an edge lying on the supporting line: does it meet the primitive?
    fn overlaps_collinear(&self, p: Point, q: Point) -> bool {
        match self.kind {
            PrimitiveKind::Segment { .. } => {
                let ab = self.through - self.anchor;
                let len_sq = ab.norm_sq();
                let tp = (p - self.anchor).dot(ab) / len_sq;
                let tq = (q - self.anchor).dot(ab) / len_sq;
                tp.max(tq) >= 0.0 && tp.min(tq) <= 1.0
            }
            PrimitiveKind::Ray { direction, .. } => {
                (p - self.anchor)
                    .dot(direction)
                    .max((q - self.anchor).dot(direction))
                    >= 0.0
            }
        }
    }

    /// For an edge `p -> q` whose endpoints are strictly on opposite sides of
    /// the supporting line: does it cross the primitive itself?
    fn edge_hits(&self, p: Point, q: Point) -> std::result::Result<bool, &'static str> {
        match self.kind {
            PrimitiveKind::Segment { .. } => {
                let sa = orient(p, q, self.anchor);
                let sb = orient(p, q, self.through);
                if sa == Side::On || sb == Side::On {
                    return Err("edge passes through a puncture");
                }
                Ok(sa != sb)
            }
            PrimitiveKind::Ray { direction, .. } => {
                let so = orient(p, q, self.anchor);
                if so == Side::On {
                    return Err("edge passes through a puncture");
                }
                let c = (q - p).cross(direction);
                Ok(c != 0.0 && Side::from_sign(c) != so)
            }
        }
    }
}

/// The crossing structure over a puncture set. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingStructure {
    primitives: Vec<Primitive>,
    source: PunctureSet,
}

impl CrossingStructure {
    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn source(&self) -> &PunctureSet {
        &self.source
    }

    pub fn segment_count(&self) -> usize {
        self.primitives
            .iter()
            .filter(|p| matches!(p.kind, PrimitiveKind::Segment { .. }))
            .count()
    }
}

pub fn build_crossing_structure(z: &PunctureSet) -> Result<CrossingStructure> {
    if z.is_empty() {
        return Err(Error::InvalidInput("puncture set is empty".into()));
    }
    let primitives = if z.is_collinear() {
        collinear_structure(z)
    } else {
        let mut prims: Vec<Primitive> = delaunay_edges(z.points())
            .into_iter()
            .map(|(i, j)| Primitive::segment(z, i, j))
            .collect();
        let hull = z.hull();
        let h = hull.len();
        for k in 0..h {
            let (prev, cur, next) = (
                z.get(hull[(k + h - 1) % h]),
                z.get(hull[k]),
                z.get(hull[(k + 1) % h]),
            );
            let inward = (prev - cur).normalized() + (next - cur).normalized();
            prims.push(Primitive::ray(z, hull[k], -inward));
        }
        prims
    };
    Ok(CrossingStructure {
        primitives,
        source: z.clone(),
    })
}

fn collinear_structure(z: &PunctureSet) -> Vec<Primitive> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z.get(a).lex_cmp(&z.get(b)));
    let dir = if order.len() == 1 {
        Point::new(1.0, 0.0)
    } else {
        (z.get(order[order.len() - 1]) - z.get(order[0])).normalized()
    };
    let mut prims: Vec<Primitive> = order
        .windows(2)
        .map(|w| Primitive::segment(z, w[0], w[1]))
        .collect();
    prims.push(Primitive::ray(z, order[0], -dir));
    prims.push(Primitive::ray(z, order[order.len() - 1], dir));
    for &i in &order {
        prims.push(Primitive::ray(z, i, dir.perp()));
        prims.push(Primitive::ray(z, i, -dir.perp()));
    }
    prims
}

/// Delaunay triangulation edges of a non-collinear point set, by brute force.
///
/// Every edge of a triangle with no point strictly inside its circumcircle is
/// a candidate. Cocircular groups produce crossing diagonals; candidates are
/// taken in lexicographic (i, j) order and kept unless they cross an edge
/// already kept, which resolves each tie towards the smallest index pair.
pub fn delaunay_edges(points: &[Point]) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut candidates = std::collections::BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, mut b, mut c) = (points[i], points[j], points[k]);
                match orient(a, b, c) {
                    Side::On => continue,
                    Side::Right => std::mem::swap(&mut b, &mut c),
                    Side::Left => {}
                }
                let empty = (0..n)
                    .filter(|&m| m != i && m != j && m != k)
                    .all(|m| !in_circle(a, b, c, points[m]));
                if empty {
                    candidates.insert((i, j));
                    candidates.insert((i, k));
                    candidates.insert((j, k));
                }
            }
        }
    }
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (i, j) in candidates {
        let crosses = kept
            .iter()
            .any(|&(a, b)| segments_cross_properly(points[i], points[j], points[a], points[b]));
        if !crosses {
            kept.push((i, j));
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Positive,
}

/// A letter of the free group: primitive id with an exponent of ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub id: usize,
    pub sign: Sign,
}

impl Symbol {
    pub fn new(id: usize, sign: Sign) -> Self {
        Symbol { id, sign }
    }

    pub fn positive(id: usize) -> Self {
        Symbol::new(id, Sign::Positive)
    }

    pub fn negative(id: usize) -> Self {
        Symbol::new(id, Sign::Negative)
    }

    pub fn inverse(self) -> Self {
        let sign = match self.sign {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        };
        Symbol { id: self.id, sign }
    }

    pub fn is_inverse_of(self, other: Symbol) -> bool {
        self.id == other.id && self.sign != other.sign
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Positive => write!(f, "e{}", self.id),
            Sign::Negative => write!(f, "e{}^-1", self.id),
        }
    }
}

fn write_symbols(f: &mut fmt::Formatter<'_>, symbols: &[Symbol]) -> fmt::Result {
    if symbols.is_empty() {
        return write!(f, "ε");
    }
    for (i, s) in symbols.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|s| s.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn rotated(&self, k: usize) -> Word {
        let mut v = self.0.clone();
        if !v.is_empty() {
            let k = k % v.len();
            v.rotate_left(k);
        }
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.0)
    }
}

/// A cyclically reduced word stored as its lexicographically least rotation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CyclicWord(Vec<Symbol>);

impl CyclicWord {
    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> CyclicWord {
        cyclic_reduce(&Word(self.0.clone()).inverse())
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.0)
    }
}

/// Free reduction: cancel adjacent inverse pairs until none remain.
pub fn reduce(w: &Word) -> Word {
    let mut out: Vec<Symbol> = Vec::with_capacity(w.len());
    for &s in &w.0 {
        match out.last() {
            Some(&last) if last.is_inverse_of(s) => {
                out.pop();
            }
            _ => out.push(s),
        }
    }
    Word(out)
}

pub fn cyclic_reduce(w: &Word) -> CyclicWord {
    let reduced = reduce(w).0;
    let mut lo = 0;
    let mut hi = reduced.len();
    while hi - lo >= 2 && reduced[lo].is_inverse_of(reduced[hi - 1]) {
        lo += 1;
        hi -= 1;
    }
    CyclicWord(least_rotation(&reduced[lo..hi]))
}

fn least_rotation(s: &[Symbol]) -> Vec<Symbol> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = 0;
    for start in 1..n {
        let cmp = (0..n)
            .map(|k| s[(start + k) % n].cmp(&s[(best + k) % n]))
            .find(|c| *c != Ordering::Equal)
            .unwrap_or(Ordering::Equal);
        if cmp == Ordering::Less {
            best = start;
        }
    }
    let mut v = s.to_vec();
    v.rotate_left(best);
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingKind {
    Positive,
    Negative,
    Null,
}

/// One connected component of the loop's intersection with the structure.
/// Parameters are in loop time, vertex `i` of an `m`-vertex loop at `i/m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub edge_id: usize,
    pub kind: CrossingKind,
    pub t_left: f64,
    pub t_right: f64,
}

fn classify(before: Side, after: Side) -> CrossingKind {
    match (before, after) {
        (Side::Left, Side::Right) => CrossingKind::Positive,
        (Side::Right, Side::Left) => CrossingKind::Negative,
        _ => CrossingKind::Null,
    }
}

/// Crossings of the closed polygon `vertices` with `structure`, ordered by
/// their right parameter.
pub fn crossing_records(
    vertices: &[Point],
    structure: &CrossingStructure,
) -> Result<Vec<CrossingRecord>> {
    let m = vertices.len();
    if m < 2 {
        return Err(Error::InvalidInput(
            "a loop needs at least two vertices".into(),
        ));
    }
    let degenerate = |vertex: usize, reason: &str| Error::DegenerateCrossing {
        vertex,
        reason: reason.to_string(),
    };
    let mut records = Vec::new();
    let mut sides = vec![Side::On; m];
    for (id, prim) in structure.primitives.iter().enumerate() {
        for (s, &v) in sides.iter_mut().zip(vertices) {
            *s = prim.side(v);
        }
        for i in 0..m {
            let j = (i + 1) % m;
            if sides[i] == Side::On {
                match prim.locate(vertices[i]) {
                    LinePosition::Endpoint => {
                        return Err(degenerate(i, "vertex lies on a puncture"))
                    }
                    LinePosition::Interior => {
                        let before = sides[(i + m - 1) % m];
                        let after = sides[j];
                        if before == Side::On || after == Side::On {
                            return Err(degenerate(i, "edge runs along a crossing primitive"));
                        }
                        let t = i as f64 / m as f64;
                        records.push(CrossingRecord {
                            edge_id: id,
                            kind: classify(before, after),
                            t_left: t,
                            t_right: t,
                        });
                    }
                    LinePosition::Outside => {}
                }
            }
            let (p, q) = (vertices[i], vertices[j]);
            match (sides[i], sides[j]) {
                (Side::On, Side::On) => {
                    if prim.overlaps_collinear(p, q) {
                        return Err(degenerate(i, "edge runs along a crossing primitive"));
                    }
                }
                (a, b) if a.sign() * b.sign() < 0 => {
                    let hits = prim.edge_hits(p, q).map_err(|r| degenerate(i, r))?;
                    if hits {
                        let op = orient_value(prim.anchor, prim.through, p);
                        let oq = orient_value(prim.anchor, prim.through, q);
                        let lambda = (op / (op - oq)).clamp(0.0, 1.0);
                        let t = (i as f64 + lambda) / m as f64;
                        records.push(CrossingRecord {
                            edge_id: id,
                            kind: classify(a, b),
                            t_left: t,
                            t_right: t,
                        });
                    }
                }
                _ => {}
            }
        }
    }
    records.sort_by(|a, b| {
        a.t_right
            .total_cmp(&b.t_right)
            .then(a.edge_id.cmp(&b.edge_id))
    });
    Ok(records)
}

/// The word of a closed polygon: signed symbols of its non-null crossings.
pub fn word_of(vertices: &[Point], structure: &CrossingStructure) -> Result<Word> {
    let records = crossing_records(vertices, structure)?;
    Ok(Word(
        records
            .iter()
            .filter_map(|r| match r.kind {
                CrossingKind::Positive => Some(Symbol::positive(r.edge_id)),
                CrossingKind::Negative => Some(Symbol::negative(r.edge_id)),
                CrossingKind::Null => None,
            })
            .collect(),
    ))
}

/// Free-homotopy invariant: cyclic reduction of the word.
pub fn cyclic_word_of(vertices: &[Point], structure: &CrossingStructure) -> Result<CyclicWord> {
    Ok(cyclic_reduce(&word_of(vertices, structure)?))
}

pub fn freely_homotopic(a: &[Point], b: &[Point], structure: &CrossingStructure) -> Result<bool> {
    Ok(cyclic_word_of(a, structure)? == cyclic_word_of(b, structure)?)
}

/// Based homotopy for loops starting in the same face: equal reduced words.
pub fn homotopic(a: &[Point], b: &[Point], structure: &CrossingStructure) -> Result<bool> {
    Ok(reduce(&word_of(a, structure)?) == reduce(&word_of(b, structure)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle(center: Point, r: f64, m: usize, turns: f64) -> Vec<Point> {
        (0..m)
            .map(|i| {
                let t = turns * std::f64::consts::TAU * (i as f64 + 0.37) / m as f64;
                center + Point::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }

    fn single() -> CrossingStructure {
        build_crossing_structure(&PunctureSet::new(vec![Point::ORIGIN]).unwrap()).unwrap()
    }

    fn pair() -> CrossingStructure {
        build_crossing_structure(
            &PunctureSet::new(vec![Point::ORIGIN, Point::new(2.0, 0.0)]).unwrap(),
        )
        .unwrap()
    }

    fn square() -> CrossingStructure {
        let z = PunctureSet::new(vec![
            Point::new(1.35, 1.35),
            Point::new(-1.35, 1.35),
            Point::new(-1.35, -1.35),
            Point::new(1.35, -1.35),
        ])
        .unwrap();
        build_crossing_structure(&z).unwrap()
    }

    #[test]
    fn primitive_counts() {
        let s = single();
        assert_eq!(s.len(), 4);
        assert_eq!(s.segment_count(), 0);
        let p = pair();
        assert_eq!(p.len(), 7);
        assert_eq!(p.segment_count(), 1);
        let q = square();
        assert_eq!(q.len(), 9);
        assert_eq!(q.segment_count(), 5);
    }

    #[test]
    fn cocircular_tie_takes_smallest_pair() {
        // indices 0..4 ccw around the square; diagonals (0,2) and (1,3)
        let q = square();
        let segs: Vec<(usize, usize)> = q
            .primitives()
            .iter()
            .filter_map(|p| match p.kind {
                PrimitiveKind::Segment { start, end } => Some((start.min(end), start.max(end))),
                _ => None,
            })
            .collect();
        assert!(segs.contains(&(0, 2)));
        assert!(!segs.contains(&(1, 3)));
    }

    #[test]
    fn rays_point_away_from_hull() {
        let q = square();
        for p in q.primitives() {
            if let PrimitiveKind::Ray { direction, .. } = p.kind {
                assert!(p.anchor.dot(direction) > 0.0);
                assert!((direction.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_around_single_puncture() {
        let sq = vec![
            Point::new(1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
            Point::new(-1.0, -1.0),
        ];
        let recs = crossing_records(&sq, &single()).unwrap();
        assert_eq!(recs.len(), 4);
        // counterclockwise turn crosses every outward ray from right to left
        assert!(recs.iter().all(|r| r.kind == CrossingKind::Negative));
        let mut ids: Vec<usize> = recs.iter().map(|r| r.edge_id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn loop_inside_one_face_has_no_records() {
        let tri = vec![
            Point::new(3.0, -0.5),
            Point::new(4.0, -0.5),
            Point::new(3.5, 0.5),
        ];
        assert!(crossing_records(&tri, &square()).unwrap().is_empty());
        assert!(word_of(&tri, &square()).unwrap().is_empty());
    }

    #[test]
    fn finger_touch_is_null() {
        // touches the +y ray of the single puncture at (0, 1) and retreats
        let s = single();
        let finger = vec![
            Point::new(-1.0, 2.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, 0.5),
        ];
        let recs = crossing_records(&finger, &s).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].kind, CrossingKind::Null);
    }

    #[test]
    fn circle_words_double_with_turns() {
        let s = single();
        let once = word_of(&circle(Point::ORIGIN, 1.0, 64, 1.0), &s).unwrap();
        let twice = word_of(&circle(Point::ORIGIN, 1.0, 128, 2.0), &s).unwrap();
        assert_eq!(once.len(), 4);
        assert_eq!(twice.len(), 8);
        assert_eq!(cyclic_reduce(&twice).len(), 8);
    }

    #[test]
    fn figure_eight_differs_from_single_turns() {
        let p = pair();
        let eight: Vec<Point> = (0..96)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + 0.5) / 96.0;
                Point::new(1.0 + 1.8 * t.cos(), 1.2 * (2.0 * t).sin())
            })
            .collect();
        let w8 = cyclic_word_of(&eight, &p).unwrap();
        let left = cyclic_word_of(&circle(Point::ORIGIN, 0.5, 48, 1.0), &p).unwrap();
        let right = cyclic_word_of(&circle(Point::new(2.0, 0.0), 0.5, 48, 1.0), &p).unwrap();
        assert!(!w8.is_empty());
        assert_ne!(w8, left);
        assert_ne!(w8, right);
        assert_ne!(w8, left.inverse());
        assert_ne!(w8, right.inverse());
    }

    #[test]
    fn freely_homotopic_examples() {
        let s = single();
        let c = circle(Point::ORIGIN, 1.0, 40, 1.0);
        let mut shifted = c.clone();
        shifted.rotate_left(13);
        assert!(freely_homotopic(&c, &shifted, &s).unwrap());
        let twice = circle(Point::ORIGIN, 1.0, 80, 2.0);
        assert!(!freely_homotopic(&c, &twice, &s).unwrap());
        let mut rev = c.clone();
        rev.reverse();
        assert!(!freely_homotopic(&c, &rev, &s).unwrap());
        assert_eq!(
            cyclic_word_of(&rev, &s).unwrap(),
            cyclic_word_of(&c, &s).unwrap().inverse()
        );
        // moved off-center but still around the puncture
        let moved = circle(Point::new(0.3, -0.2), 1.5, 40, 1.0);
        assert!(freely_homotopic(&c, &moved, &s).unwrap());
    }

    #[test]
    fn degenerate_inputs_error() {
        let s = single();
        let through = vec![Point::ORIGIN, Point::new(1.0, 1.0), Point::new(-1.0, 1.0)];
        assert!(matches!(
            word_of(&through, &s),
            Err(Error::DegenerateCrossing { vertex: 0, .. })
        ));
        let along = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.5, 1.0),
        ];
        assert!(matches!(
            word_of(&along, &s),
            Err(Error::DegenerateCrossing { .. })
        ));
        let edge_through = vec![
            Point::new(-1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 2.0),
        ];
        assert!(matches!(
            word_of(&edge_through, &s),
            Err(Error::DegenerateCrossing { .. })
        ));
    }

    #[test]
    fn reduce_examples() {
        let (a, b) = (Symbol::positive(0), Symbol::positive(1));
        assert_eq!(reduce(&Word(vec![a, b, b.inverse(), a])), Word(vec![a, a]));
        assert!(reduce(&Word(vec![a, a.inverse()])).is_empty());
        assert_eq!(
            cyclic_reduce(&Word(vec![a, b, a.inverse()])).symbols(),
            &[b]
        );
        assert!(cyclic_reduce(&Word(vec![a, b, b.inverse(), a.inverse()])).is_empty());
    }

    #[test]
    fn display_tokens() {
        let w = Word(vec![Symbol::positive(3), Symbol::negative(0)]);
        assert_eq!(w.to_string(), "e3 e0^-1");
        assert_eq!(Word::default().to_string(), "ε");
    }

    fn symbol() -> impl Strategy<Value = Symbol> {
        (0usize..4, any::<bool>()).prop_map(|(id, pos)| {
            Symbol::new(id, if pos { Sign::Positive } else { Sign::Negative })
        })
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(w in prop::collection::vec(symbol(), 0..50)) {
            let r = reduce(&Word(w));
            prop_assert_eq!(reduce(&r), r.clone());
            prop_assert!(r.symbols().windows(2).all(|p| !p[0].is_inverse_of(p[1])));
        }

        #[test]
        fn cyclic_reduce_ignores_rotation(w in prop::collection::vec(symbol(), 0..40), k in 0usize..40) {
            let w = Word(w);
            let c = cyclic_reduce(&w);
            prop_assert_eq!(cyclic_reduce(&w.rotated(k)), c.clone());
            let s = c.symbols();
            if s.len() >= 2 {
                prop_assert!(!s[0].is_inverse_of(s[s.len() - 1]));
            }
            prop_assert_eq!(cyclic_reduce(&w.inverse()), c.inverse());
        }
    }
}
