//! Piecewise-linear loops with equal traversal time per edge, the state
//! space `G_n`, and the cyclic Fréchet distance between free loops.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PunctureSet};
use crate::homotopy::{cyclic_word_of, CrossingStructure, CyclicWord};

/// A closed polygon `v_0, …, v_n`; the closing edge `v_n -> v_0` is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PLLoop {
    vertices: Vec<Point>,
}

impl PLLoop {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "a loop needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("vertex {i} is not finite")));
        }
        Ok(PLLoop { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [Point] {
        &mut self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    /// Number of vertices, `n + 1`.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// The index `n`: one less than the vertex count.
    pub fn n(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let m = self.vertices.len();
        self.vertices[i].dist(self.vertices[(i + 1) % m])
    }

    pub fn length(&self) -> f64 {
        length(&self.vertices)
    }

    pub fn translated(&self, by: Point) -> PLLoop {
        PLLoop {
            vertices: self.vertices.iter().map(|&p| p + by).collect(),
        }
    }

    pub fn reversed(&self) -> PLLoop {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        PLLoop { vertices }
    }

    pub fn rotated(&self, k: usize) -> PLLoop {
        let mut vertices = self.vertices.clone();
        let k = k % vertices.len();
        vertices.rotate_left(k);
        PLLoop { vertices }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let vertices: Vec<Point> = serde_json::from_str(&text)?;
        PLLoop::new(vertices)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.vertices).expect("points serialize")
    }
}

impl AsRef<[Point]> for PLLoop {
    fn as_ref(&self) -> &[Point] {
        &self.vertices
    }
}

/// Length of a closed polygon, closing edge included.
pub fn length(vertices: &[Point]) -> f64 {
    let m = vertices.len();
    (0..m)
        .map(|i| vertices[i].dist(vertices[(i + 1) % m]))
        .sum()
}

/// Sample the constant-speed parametrisation of a closed polygon at
/// `t_i = i / (n + 1)`, starting at its first vertex.
pub fn discretize(vertices: &[Point], n: usize) -> Result<PLLoop> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "n must be at least 2, got {n}"
        )));
    }
    let total = length(vertices);
    if !(total > 0.0) || vertices.len() < 2 {
        return Err(Error::InvalidInput(
            "cannot discretize a zero-length loop".into(),
        ));
    }
    let m = vertices.len();
    let count = n + 1;
    let mut out = Vec::with_capacity(count);
    let mut edge = 0;
    let mut edge_start = 0.0;
    let mut edge_len = vertices[0].dist(vertices[1 % m]);
    for i in 0..count {
        let target = total * i as f64 / count as f64;
        while edge + 1 < m && edge_start + edge_len < target {
            edge_start += edge_len;
            edge += 1;
            edge_len = vertices[edge].dist(vertices[(edge + 1) % m]);
        }
        let local = if edge_len > 0.0 {
            ((target - edge_start) / edge_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(vertices[edge].lerp(vertices[(edge + 1) % m], local));
    }
    PLLoop::new(out)
}

/// A free homotopy class given by a representative loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    reference: Vec<Point>,
    target: CyclicWord,
}

impl ClassSpec {
    /// Fails with [`Error::TrivialClass`] for contractible references.
    pub fn new(reference: Vec<Point>, structure: &CrossingStructure) -> Result<Self> {
        if reference.len() < 3 {
            return Err(Error::InvalidInput(
                "reference loop needs at least 3 vertices".into(),
            ));
        }
        let target = cyclic_word_of(&reference, structure)?;
        if target.is_empty() {
            return Err(Error::TrivialClass);
        }
        Ok(ClassSpec { reference, target })
    }

    pub fn reference(&self) -> &[Point] {
        &self.reference
    }

    pub fn target(&self) -> &CyclicWord {
        &self.target
    }
}

/// Parameters of the state space `G_n`.
#[derive(Clone, Debug)]
pub struct GnParams {
    pub n: usize,
    pub radius: f64,
    pub punctures: PunctureSet,
    pub structure: CrossingStructure,
    pub class: ClassSpec,
}

impl GnParams {
    pub fn new(
        n: usize,
        radius: f64,
        punctures: PunctureSet,
        reference: Vec<Point>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "n must be at least 2, got {n}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "R must be positive, got {radius}"
            )));
        }
        let bound = radius / (n + 1) as f64;
        if bound >= punctures.reach() {
            return Err(Error::InvalidInput(format!(
                "R/(n+1) = {bound} must be below reach(Z) = {}; increase n or decrease R",
                punctures.reach()
            )));
        }
        let structure = crate::homotopy::build_crossing_structure(&punctures)?;
        let class = ClassSpec::new(reference, &structure)?;
        let ref_len = length(class.reference());
        if ref_len >= radius {
            return Err(Error::InvalidInput(format!(
                "reference loop length {ref_len} must be below R = {radius}"
            )));
        }
        Ok(GnParams {
            n,
            radius,
            punctures,
            structure,
            class,
        })
    }

    /// Strict upper bound on every edge length, `R / (n + 1)`.
    pub fn edge_bound(&self) -> f64 {
        self.radius / (self.n + 1) as f64
    }

    /// `discretize(reference, n)`, the default initial state.
    pub fn initial_state(&self) -> Result<PLLoop> {
        discretize(self.class.reference(), self.n)
    }
}

/// Per-criterion outcome of [`validate_state`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub vertex_count_ok: bool,
    /// Edges (index of the starting vertex) with length `>= R/(n+1)`.
    pub long_edges: Vec<usize>,
    /// Vertices that coincide with a puncture.
    pub puncture_hits: Vec<usize>,
    pub class_match: bool,
    /// Set when the word could not be extracted.
    pub diagnostic: Option<String>,
}

impl StateReport {
    pub fn is_valid(&self) -> bool {
        self.vertex_count_ok
            && self.long_edges.is_empty()
            && self.puncture_hits.is_empty()
            && self.class_match
    }
}

pub fn validate_state(lp: &PLLoop, params: &GnParams) -> StateReport {
    let bound = params.edge_bound();
    let mut report = StateReport {
        vertex_count_ok: lp.len() == params.n + 1,
        ..Default::default()
    };
    for i in 0..lp.len() {
        if !(lp.edge_length(i) < bound) {
            report.long_edges.push(i);
        }
        if params.punctures.points().contains(&lp.vertices()[i]) {
            report.puncture_hits.push(i);
        }
    }
    match cyclic_word_of(lp.vertices(), &params.structure) {
        Ok(w) => report.class_match = &w == params.class.target(),
        Err(e) => report.diagnostic = Some(e.to_string()),
    }
    report
}

/// Insert midpoints into the longest edges until the polygon has `count`
/// vertices. The image and length are unchanged.
pub fn densify(vertices: &[Point], count: usize) -> Vec<Point> {
    let mut v = vertices.to_vec();
    while v.len() < count {
        let m = v.len();
        let mut best = 0;
        let mut best_len = -1.0;
        for i in 0..m {
            let l = v[i].dist(v[(i + 1) % m]);
            if l > best_len {
                best_len = l;
                best = i;
            }
        }
        let mid = v[best].midpoint(v[(best + 1) % m]);
        v.insert(best + 1, mid);
    }
    v
}

/// Cyclic discrete Fréchet distance between two closed polygons.
///
/// Minimum over cyclic shifts of the second loop and monotone couplings of
/// both vertex sequences (each closed by repeating its first vertex) of the
/// largest coupled distance. Loops with different vertex counts are first
/// densified to a common count.
pub fn loop_distance(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let count = a.len().max(b.len());
    let a = densify(a, count);
    let b = densify(b, count);
    let m = count;
    let mut best = f64::INFINITY;
    let mut row = vec![0.0f64; m + 1];
    let mut prev = vec![0.0f64; m + 1];
    for shift in 0..m {
        let bj = |j: usize| b[(shift + j) % m];
        // dp over (m+1) x (m+1): index m repeats the start vertex
        for i in 0..=m {
            let ai = a[i % m];
            for j in 0..=m {
                let d = ai.dist(bj(j));
                let reach = if i == 0 && j == 0 {
                    d
                } else if i == 0 {
                    row[j - 1].max(d)
                } else if j == 0 {
                    prev[0].max(d)
                } else {
                    prev[j].min(prev[j - 1]).min(row[j - 1]).max(d)
                };
                row[j] = reach;
            }
            // early exit: every coupling passes through this row
            let row_min = row.iter().copied().fold(f64::INFINITY, f64::min);
            std::mem::swap(&mut row, &mut prev);
            if row_min >= best {
                break;
            }
            if i == m {
                best = best.min(prev[m]);
            }
        }
    }
    best
}

/// Vertexwise sup distance with aligned indices (equal vertex counts).
pub fn aligned_distance(a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.dist(*q)).fold(0.0, f64::max)
}
