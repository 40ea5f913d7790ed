//! Shortest representative of a free homotopy class.
//!
//! The shortest loop in the closure of a class is a polygon whose vertices
//! are punctures. It is found by pulling a string taut: a free vertex is
//! replaced by the convex chain of punctures inside the triangle it spans
//! with its neighbors, and a puncture the string no longer wraps is
//! released the same way.
//!
//! A vertex pinned to a puncture carries the signed angle `alpha` the string
//! sweeps around the puncture, measured from the direction of the previous
//! vertex to the direction of the next. Its sign records which side of the
//! puncture the string passes, which is exactly the information lost when a
//! loop is pushed onto a puncture. The string wraps the puncture, so the pin
//! is taut, when `|alpha| >= π`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orient, Point, PunctureSet, Side};
use crate::homotopy::{cyclic_word_of, CrossingStructure, CyclicWord};
use crate::loops::{discretize, length, GnParams};
use crate::mcmc::ChainTrace;

/// Pass budget for one shortening run.
pub const MAX_PASSES: usize = 1000;

/// Densities of the starts compared by [`shortest_loop`].
pub const DEFAULT_STARTS: [usize; 2] = [120, 480];

/// Slack on `|alpha| >= π`; pins this close to straight stay pinned so the
/// side they pass on is not lost.
const TAUT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortestLoop {
    /// Polygon vertices, each a puncture.
    pub polygon: Vec<Point>,
    /// Puncture index of each polygon vertex.
    pub punctures: Vec<usize>,
    /// Signed wrap angle at each polygon vertex.
    pub angles: Vec<f64>,
    pub length: f64,
    pub class_word: CyclicWord,
    pub passes: usize,
}

#[derive(Clone, Copy, Debug)]
struct Pin {
    index: usize,
    alpha: f64,
    prev_dir: Point,
    next_dir: Point,
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Free(Point),
    Pinned(Pin),
}

/// Signed angle from `u` to `v` in `(-π, π]`.
fn turn(u: Point, v: Point) -> f64 {
    u.cross(v).atan2(u.dot(v))
}

/// Sweep from `prev_dir` to `next_dir` for a string with the puncture on
/// `side` of its direction of travel.
fn sweep_for_side(prev_dir: Point, next_dir: Point, side: Side) -> f64 {
    let theta = turn(prev_dir, next_dir);
    match side {
        Side::Left if theta < 0.0 => theta + TAU,
        Side::Right if theta > 0.0 => theta - TAU,
        _ => theta,
    }
}

struct Shortener<'a> {
    z: &'a PunctureSet,
    nodes: Vec<Node>,
}

impl<'a> Shortener<'a> {
    fn pos(&self, i: usize) -> Point {
        match self.nodes[i] {
            Node::Free(p) => p,
            Node::Pinned(pin) => self.z.get(pin.index),
        }
    }

    fn pin_index(&self, i: usize) -> Option<usize> {
        match self.nodes[i] {
            Node::Pinned(pin) => Some(pin.index),
            Node::Free(_) => None,
        }
    }

    /// Punctures on the string after pulling `a -> apex -> b` taut, in order.
    /// `None` when the triangle is flat and the apex simply retracts.
    fn chain(
        &self,
        a: Point,
        apex: Point,
        b: Point,
        exclude: &[usize],
    ) -> Result<Option<Vec<usize>>> {
        let s = orient(a, b, apex);
        if s == Side::On {
            return Ok(None);
        }
        let between =
            |p: Point, q: Point, x: Point| (x - p).dot(q - p) > 0.0 && (x - q).dot(p - q) > 0.0;
        let mut candidates = Vec::new();
        for (k, &zk) in self.z.points().iter().enumerate() {
            if exclude.contains(&k) || zk == a || zk == b || zk == apex {
                continue;
            }
            let o1 = orient(a, b, zk);
            let o2 = orient(b, apex, zk);
            let o3 = orient(apex, a, zk);
            let strictly_inside = o1 == s && o2 == s && o3 == s;
            if strictly_inside || (o1 == Side::On && o2 == s && o3 == s && between(a, b, zk)) {
                candidates.push(k);
            } else if (o2 == Side::On && o1 == s && o3 == s && between(b, apex, zk))
                || (o3 == Side::On && o1 == s && o2 == s && between(apex, a, zk))
            {
                return Err(Error::Invariant(format!(
                    "shortening string passes through puncture {k}"
                )));
            }
        }
        // gift wrapping of the hull side facing the apex
        let mut out = Vec::new();
        let mut cur = a;
        loop {
            let mut best: Option<usize> = None;
            let mut best_pt = b;
            for &k in &candidates {
                let c = self.z.get(k);
                let o = orient(cur, best_pt, c);
                if o == s
                    || (o == Side::On
                        && cur.dist_sq(c) < cur.dist_sq(best_pt)
                        && (c - cur).dot(best_pt - cur) > 0.0)
                {
                    best = Some(k);
                    best_pt = c;
                }
            }
            match best {
                None => break,
                Some(k) => {
                    out.push(k);
                    candidates.retain(|&c| c != k);
                    cur = best_pt;
                }
            }
            if out.len() > self.z.len() {
                return Err(Error::Invariant("hull chain did not terminate".into()));
            }
        }
        Ok(Some(out))
    }

    /// Bring the sweep angle of pin `j` up to date with its current neighbors.
    fn refresh(&mut self, j: usize) {
        let l = self.nodes.len();
        if l < 2 {
            return;
        }
        let p = self.pos((j + l - 1) % l);
        let q = self.pos((j + 1) % l);
        if let Node::Pinned(pin) = &mut self.nodes[j] {
            let zc = self.z.get(pin.index);
            let (np, nq) = (p - zc, q - zc);
            if np.norm_sq() == 0.0 || nq.norm_sq() == 0.0 {
                return;
            }
            pin.alpha += turn(pin.next_dir, nq) - turn(pin.prev_dir, np);
            pin.prev_dir = np;
            pin.next_dir = nq;
        }
    }

    /// Replace node 1 by `chain`, with node 0 and the node after the chain as
    /// its neighbors, then restore pin bookkeeping. The list is rotated so
    /// that the processed node sits at index 1.
    fn splice(&mut self, chain: &[usize], s: Side) {
        let a = self.pos(0);
        let b = self.pos(2 % self.nodes.len());
        let mut pins = Vec::with_capacity(chain.len());
        let pts: Vec<Point> = std::iter::once(a)
            .chain(chain.iter().map(|&k| self.z.get(k)))
            .chain(std::iter::once(b))
            .collect();
        for (j, &k) in chain.iter().enumerate() {
            let zc = pts[j + 1];
            let prev_dir = pts[j] - zc;
            let next_dir = pts[j + 2] - zc;
            pins.push(Node::Pinned(Pin {
                index: k,
                alpha: sweep_for_side(prev_dir, next_dir, s.opposite()),
                prev_dir,
                next_dir,
            }));
        }
        self.nodes.splice(1..2, pins);
        let l = self.nodes.len();
        let right = (1 + chain.len()) % l;
        if chain.is_empty() && l >= 2 {
            if let (Node::Pinned(left), Node::Pinned(r)) = (self.nodes[0], self.nodes[right]) {
                if left.index == r.index {
                    let merged = Pin {
                        index: left.index,
                        alpha: left.alpha + r.alpha,
                        prev_dir: left.prev_dir,
                        next_dir: r.next_dir,
                    };
                    self.nodes[0] = Node::Pinned(merged);
                    self.nodes.remove(right);
                    if self.nodes.len() >= 2 {
                        self.refresh(0);
                    }
                    return;
                }
            }
        }
        self.refresh(0);
        if right != 0 {
            self.refresh(right);
        }
    }

    /// Process node 1. Returns whether anything changed and how many nodes
    /// now stand where node 1 was.
    fn process(&mut self) -> Result<(bool, usize)> {
        let l = self.nodes.len();
        if l == 1 {
            return Ok((false, 1));
        }
        let a = self.pos(0);
        let b = self.pos(2 % l);
        let mut exclude: Vec<usize> = [self.pin_index(0), self.pin_index(2 % l)]
            .into_iter()
            .flatten()
            .collect();
        let (apex, taut) = match self.nodes[1] {
            Node::Free(v) => (v, false),
            Node::Pinned(pin) => {
                exclude.push(pin.index);
                (self.z.get(pin.index), pin.alpha.abs() >= PI - TAUT_SLACK)
            }
        };
        if taut {
            return Ok((false, 1));
        }
        if l == 2 || a == b {
            self.splice(&[], Side::On);
            return Ok((true, 0));
        }
        let s = orient(a, b, apex);
        match self.chain(a, apex, b, &exclude)? {
            None => {
                self.splice(&[], Side::On);
                Ok((true, 0))
            }
            Some(ch) => {
                let k = ch.len();
                self.splice(&ch, s);
                Ok((true, k))
            }
        }
    }

    fn run(&mut self) -> Result<usize> {
        let mut unchanged = 0usize;
        let mut steps = 0usize;
        let mut passes = 0usize;
        let mut pass_len = self.nodes.len();
        // node 1 is always the next node to process
        self.nodes.rotate_right(1);
        while unchanged < self.nodes.len() {
            if self.nodes.is_empty() {
                return Err(Error::TrivialClass);
            }
            let (changed, width) = self.process()?;
            if changed {
                unchanged = 0;
            } else {
                unchanged += 1;
            }
            let l = self.nodes.len();
            if l <= 1 {
                break;
            }
            self.nodes.rotate_left(width.max(1) % l.max(1));
            if changed && width == 0 {
                // node 1 is already the successor; undo the rotation
                self.nodes.rotate_right(1);
            }
            steps += 1;
            if steps >= pass_len {
                passes += 1;
                steps = 0;
                pass_len = self.nodes.len();
                if passes >= MAX_PASSES {
                    return Err(self.not_certified("pass budget exhausted".into()));
                }
            }
        }
        Ok(passes + 1)
    }

    fn not_certified(&self, reason: String) -> Error {
        let best: Vec<Point> = (0..self.nodes.len()).map(|i| self.pos(i)).collect();
        let length = length(&best);
        Error::NotCertified {
            reason,
            best,
            length,
        }
    }

    /// Loop offset from every pin by `delta` on the side the string passes,
    /// with arcs around the wrapped punctures.
    fn proxy(&self, delta: f64) -> Vec<Point> {
        let mut out = Vec::new();
        if let [Node::Pinned(pin)] = self.nodes[..] {
            // a lone pin is a loop around its puncture, `alpha` in total
            let zc = self.z.get(pin.index);
            let pieces = ((pin.alpha.abs() / (PI / 16.0)).ceil() as usize).max(3);
            for j in 0..pieces {
                let t = pin.alpha * j as f64 / pieces as f64;
                out.push(zc + Point::new(t.cos(), t.sin()) * delta);
            }
            return out;
        }
        for node in &self.nodes {
            match *node {
                Node::Free(p) => out.push(p),
                Node::Pinned(pin) => {
                    let zc = self.z.get(pin.index);
                    let (start, sweep) = if pin.alpha < 0.0 {
                        (pin.prev_dir.angle() - PI / 2.0, pin.alpha + PI)
                    } else {
                        (pin.prev_dir.angle() + PI / 2.0, pin.alpha - PI)
                    };
                    let pieces = ((sweep.abs() / (PI / 16.0)).ceil() as usize).max(1);
                    for j in 0..=pieces {
                        let t = start + sweep * j as f64 / pieces as f64;
                        out.push(zc + Point::new(t.cos(), t.sin()) * delta);
                    }
                }
            }
        }
        out
    }
}

/// Shorten one discretization of `reference` to its taut limit.
pub fn shorten_from(
    reference: &[Point],
    density: usize,
    z: &PunctureSet,
    structure: &CrossingStructure,
) -> Result<ShortestLoop> {
    let target = cyclic_word_of(reference, structure)?;
    if target.is_empty() {
        return Err(Error::TrivialClass);
    }
    let start = discretize(reference, density.max(3) - 1)?;
    let mut sh = Shortener {
        z,
        nodes: start.vertices().iter().map(|&p| Node::Free(p)).collect(),
    };
    let passes = sh.run()?;
    if sh.nodes.iter().any(|n| matches!(n, Node::Free(_))) {
        return Err(sh.not_certified("free vertex left after convergence".into()));
    }

    let scale = if z.reach().is_finite() {
        z.reach()
    } else {
        let r = reference.iter().map(|p| p.norm()).fold(0.0, f64::max);
        r.max(1.0)
    };
    let proxy = sh.proxy(1e-6 * scale);
    match cyclic_word_of(&proxy, structure) {
        Ok(w) if w == target => {}
        Ok(w) => {
            return Err(sh.not_certified(format!("proxy word {w} differs from target {target}")));
        }
        Err(e) => return Err(sh.not_certified(format!("proxy word undefined: {e}"))),
    }

    let l = sh.nodes.len();
    let mut polygon = Vec::new();
    let mut punctures = Vec::new();
    let mut angles = Vec::new();
    for i in 0..l {
        let Node::Pinned(pin) = sh.nodes[i] else {
            unreachable!()
        };
        let zc = z.get(pin.index);
        if l >= 3 {
            let (p, q) = (sh.pos((i + l - 1) % l), sh.pos((i + 1) % l));
            if orient(p, zc, q) == Side::On && (p - zc).dot(q - zc) < 0.0 {
                continue;
            }
        }
        polygon.push(zc);
        punctures.push(pin.index);
        angles.push(pin.alpha);
    }
    let length = if polygon.len() <= 1 {
        0.0
    } else {
        length(&polygon)
    };
    Ok(ShortestLoop {
        polygon,
        punctures,
        angles,
        length,
        class_word: target,
        passes,
    })
}

/// Whether two polygons agree up to cyclic rotation.
pub fn same_cycle(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..b.len()).any(|s| (0..a.len()).all(|i| a[i] == b[(i + s) % b.len()]))
}

/// Shortest loop of the class of `params`, agreed on by several starts.
pub fn shortest_loop(params: &GnParams) -> Result<ShortestLoop> {
    shortest_loop_with(
        params.class.reference(),
        &params.punctures,
        &params.structure,
        &DEFAULT_STARTS,
    )
}

pub fn shortest_loop_with(
    reference: &[Point],
    z: &PunctureSet,
    structure: &CrossingStructure,
    densities: &[usize],
) -> Result<ShortestLoop> {
    let mut first: Option<ShortestLoop> = None;
    for &d in densities {
        let sl = shorten_from(reference, d, z, structure)?;
        match &first {
            None => first = Some(sl),
            Some(f) => {
                if (f.length - sl.length).abs() > 1e-9 || !same_cycle(&f.punctures, &sl.punctures) {
                    return Err(Error::NotCertified {
                        reason: format!(
                            "starts disagree: length {} vs {} at density {d}",
                            f.length, sl.length
                        ),
                        best: if sl.length < f.length {
                            sl.polygon
                        } else {
                            f.polygon.clone()
                        },
                        length: sl.length.min(f.length),
                    });
                }
            }
        }
    }
    first.ok_or_else(|| Error::InvalidInput("no starting densities given".into()))
}

/// Excess of saved lengths over the class minimum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FloorReport {
    pub count: usize,
    pub l_star: f64,
    pub min_excess: Option<f64>,
    pub median_excess: Option<f64>,
    pub max_excess: Option<f64>,
}

/// Every saved loop must be at least as long as the shortest loop.
pub fn certify_floor(trace: &ChainTrace, sl: &ShortestLoop) -> Result<FloorReport> {
    let mut excess = Vec::with_capacity(trace.len());
    for r in &trace.records {
        let e = r.length - sl.length;
        if e < -1e-9 {
            return Err(Error::Integrity(format!(
                "saved loop at step {} has length {} below the class minimum {}",
                r.step, r.length, sl.length
            )));
        }
        excess.push(e);
    }
    excess.sort_by(f64::total_cmp);
    Ok(FloorReport {
        count: excess.len(),
        l_star: sl.length,
        min_excess: excess.first().copied(),
        median_excess: median_sorted(&excess),
        max_excess: excess.last().copied(),
    })
}

pub(crate) fn median_sorted(v: &[f64]) -> Option<f64> {
    let n = v.len();
    if n == 0 {
        None
    } else if n % 2 == 1 {
        Some(v[n / 2])
    } else {
        Some(0.5 * (v[n / 2 - 1] + v[n / 2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homotopy::build_crossing_structure;
    use crate::mcmc::SaveRecord;

    fn circle(c: Point, r: f64, m: usize) -> Vec<Point> {
        (0..m)
            .map(|i| {
                let t = TAU * i as f64 / m as f64;
                c + Point::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }

    fn setup(z: Vec<Point>) -> (PunctureSet, CrossingStructure) {
        let z = PunctureSet::new(z).unwrap();
        let t = build_crossing_structure(&z).unwrap();
        (z, t)
    }

    #[test]
    fn sweep_sides() {
        let (p, q) = (Point::new(-1.0, 1.0), Point::new(1.0, 1.0));
        assert!((sweep_for_side(p, q, Side::Left) - 1.5 * PI).abs() < 1e-12);
        assert!((sweep_for_side(p, q, Side::Right) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn single_puncture_collapses() {
        let (z, t) = setup(vec![Point::ORIGIN]);
        let sl = shorten_from(&circle(Point::ORIGIN, 1.0, 64), 100, &z, &t).unwrap();
        assert_eq!(sl.length, 0.0);
        assert_eq!(sl.polygon, vec![Point::ORIGIN]);
        assert!((sl.angles[0].abs() - TAU).abs() < 1e-9);
    }

    #[test]
    fn single_puncture_any_density() {
        let (z, t) = setup(vec![Point::ORIGIN]);
        let reference = circle(Point::ORIGIN, 1.0, 400);
        for d in [120, 400, 480, 1000] {
            let sl = shorten_from(&reference, d, &z, &t).unwrap();
            assert_eq!(sl.polygon, vec![Point::ORIGIN], "density {d}");
        }
        let sl = shortest_loop_with(&reference, &z, &t, &DEFAULT_STARTS).unwrap();
        assert_eq!(sl.length, 0.0);
    }

    #[test]
    fn double_winding_collapses_with_twice_the_angle() {
        let (z, t) = setup(vec![Point::ORIGIN]);
        let twice: Vec<Point> = (0..200)
            .map(|i| {
                let a = 2.0 * TAU * i as f64 / 200.0;
                Point::new(
                    (1.0 + 0.1 * (i as f64 / 200.0)) * a.cos(),
                    (1.0 + 0.1 * (i as f64 / 200.0)) * a.sin(),
                )
            })
            .collect();
        let sl = shorten_from(&twice, 300, &z, &t).unwrap();
        assert_eq!(sl.polygon, vec![Point::ORIGIN]);
        assert!(
            (sl.angles[0].abs() - 2.0 * TAU).abs() < 1e-9,
            "{:?}",
            sl.angles
        );
        assert_eq!(sl.class_word.len(), 8);
    }

    #[test]
    fn two_punctures_give_doubled_segment() {
        let (z, t) = setup(vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0)]);
        let sl = shorten_from(&circle(Point::ORIGIN, 2.0, 64), 100, &z, &t).unwrap();
        assert!((sl.length - 4.0).abs() < 1e-12);
        assert_eq!(sl.polygon.len(), 2);
    }

    #[test]
    fn triangle_ignores_outside_puncture() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(2.0, 3.0),
            Point::new(10.0, 10.0),
        ];
        let (z, t) = setup(pts);
        let sl = shorten_from(&circle(Point::new(2.0, 1.0), 3.0, 64), 200, &z, &t).unwrap();
        let expected = 4.0 + 2.0 * 13f64.sqrt();
        assert!((sl.length - expected).abs() < 1e-12, "{}", sl.length);
        assert_eq!(sl.polygon.len(), 3);
    }

    #[test]
    fn inner_puncture_is_not_touched() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(2.0, 3.0),
            Point::new(2.0, 1.0),
        ];
        let (z, t) = setup(pts);
        let sl = shorten_from(&circle(Point::new(2.0, 1.0), 3.0, 64), 300, &z, &t).unwrap();
        assert_eq!(sl.polygon.len(), 3);
        assert!(!sl.punctures.contains(&3));
    }

    #[test]
    fn floor_report() {
        let sl = ShortestLoop {
            polygon: vec![],
            punctures: vec![],
            angles: vec![],
            length: 10.0,
            class_word: CyclicWord::default(),
            passes: 1,
        };
        let rec = |len: f64| SaveRecord {
            step: 1,
            length: len,
            rate: 0.0,
            vertices: vec![],
        };
        let empty = certify_floor(&ChainTrace::default(), &sl).unwrap();
        assert_eq!(empty.count, 0);
        assert!(empty.min_excess.is_none());
        let ok = certify_floor(
            &ChainTrace::from_records(vec![rec(12.0), rec(11.0), rec(15.0)]),
            &sl,
        )
        .unwrap();
        assert_eq!(ok.min_excess, Some(1.0));
        assert_eq!(ok.median_excess, Some(2.0));
        let bad = certify_floor(&ChainTrace::from_records(vec![rec(12.0), rec(9.0)]), &sl);
        assert!(matches!(bad, Err(Error::Integrity(_))));
    }
}
