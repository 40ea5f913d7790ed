//! Post-processing of saved loops: cyclically aligned mean loop, pooled
//! vertex density, and concentration around the shortest loop.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::loops::{loop_distance, PLLoop};
use crate::mcmc::ChainTrace;
use crate::oracle::{median_sorted, ShortestLoop};

pub const DISTANCE_NOTE: &str =
    "distances are cyclic discrete Frechet distances between vertex sequences, a computable surrogate for the free-loop metric";
pub const ALIGNMENT_NOTE: &str =
    "the mean loop aligns samples by cyclic vertex shift only; the average need not lie in the sampled homotopy class";

/// Cyclic shift `s` of `lp` minimizing `Σ |lp[i+s] - anchor[i]|²`.
pub fn best_shift(anchor: &[Point], lp: &[Point]) -> usize {
    let m = anchor.len();
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for s in 0..m {
        let cost: f64 = (0..m).map(|i| lp[(i + s) % m].dist_sq(anchor[i])).sum();
        if cost < best_cost {
            best_cost = cost;
            best = s;
        }
    }
    best
}

/// Coordinatewise mean of the samples after aligning each to the first by
/// cyclic shift.
pub fn mean_free_loop(samples: &[PLLoop]) -> Result<PLLoop> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("mean loop needs at least one sample".into()))?;
    let m = first.len();
    if let Some(bad) = samples.iter().position(|s| s.len() != m) {
        return Err(Error::InvalidInput(format!(
            "sample {bad} has {} vertices, expected {m}",
            samples[bad].len()
        )));
    }
    let anchor = first.vertices();
    let mut sum = vec![Point::ORIGIN; m];
    for s in samples {
        let shift = best_shift(anchor, s.vertices());
        for (i, acc) in sum.iter_mut().enumerate() {
            *acc = *acc + s.vertices()[(i + shift) % m];
        }
    }
    let scale = 1.0 / samples.len() as f64;
    PLLoop::new(sum.into_iter().map(|p| p * scale).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || !(self.xmax > self.xmin)
            || !(self.ymax > self.ymin)
            || self.nx == 0
            || self.ny == 0
        {
            return Err(Error::InvalidInput(format!(
                "degenerate density grid {self:?}"
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.ymax - self.ymin) / self.ny as f64
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.xmin + (i as f64 + 0.5) * self.dx(),
            self.ymin + (j as f64 + 0.5) * self.dy(),
        )
    }
}

/// Density on a regular grid; `values[j * nx + i]` belongs to cell `(i, j)`
/// with `i` along x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub bandwidth: (f64, f64),
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Midpoint-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.dx() * self.spec.dy()
    }

    /// Centers of the cells whose value lies in the top `fraction` of cells.
    pub fn top_cells(&self, fraction: f64) -> Vec<Point> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        let keep = ((self.values.len() as f64 * fraction).ceil() as usize).min(idx.len());
        idx[..keep]
            .iter()
            .map(|&k| self.spec.cell_center(k % self.spec.nx, k / self.spec.nx))
            .collect()
    }

    /// Header line with the grid spec, then one line of `nx` values per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let s = &self.spec;
        writeln!(
            out,
            "xmin={},xmax={},ymin={},ymax={},nx={},ny={}",
            s.xmin, s.xmax, s.ymin, s.ymax, s.nx, s.ny
        )?;
        for j in 0..s.ny {
            let row: Vec<String> = (0..s.nx).map(|i| self.get(i, j).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn std_dev(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Scott's rule per axis, `σ N^(-1/6)`.
pub fn scott_bandwidth(points: &[Point]) -> (f64, f64) {
    let f = (points.len() as f64).powf(-1.0 / 6.0);
    (
        std_dev(points.iter().map(|p| p.x)) * f,
        std_dev(points.iter().map(|p| p.y)) * f,
    )
}

/// Gaussian kernel density of all vertices pooled. Without a grid, the
/// bounding box padded by three bandwidths is covered with 100 × 100 cells.
pub fn kde(
    samples: &[PLLoop],
    grid: Option<GridSpec>,
    bandwidth: Option<f64>,
) -> Result<DensityGrid> {
    let points: Vec<Point> = samples
        .iter()
        .flat_map(|s| s.vertices().iter().copied())
        .collect();
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "density estimate needs at least one point".into(),
        ));
    }
    if let Some(h) = bandwidth {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
    }
    let (mut hx, mut hy) = match bandwidth {
        Some(h) => (h, h),
        None => scott_bandwidth(&points),
    };
    let spec = match grid {
        Some(g) => g,
        None => {
            let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in &points {
                xmin = xmin.min(p.x);
                xmax = xmax.max(p.x);
                ymin = ymin.min(p.y);
                ymax = ymax.max(p.y);
            }
            let px = if hx > 0.0 { 3.0 * hx } else { 1.0 };
            let py = if hy > 0.0 { 3.0 * hy } else { 1.0 };
            GridSpec {
                xmin: xmin - px,
                xmax: xmax + px,
                ymin: ymin - py,
                ymax: ymax + py,
                nx: 100,
                ny: 100,
            }
        }
    };
    spec.validate()?;
    if !(hx > 0.0) {
        hx = spec.dx();
    }
    if !(hy > 0.0) {
        hy = spec.dy();
    }
    let xs: Vec<f64> = (0..spec.nx)
        .map(|i| spec.xmin + (i as f64 + 0.5) * spec.dx())
        .collect();
    let ys: Vec<f64> = (0..spec.ny)
        .map(|j| spec.ymin + (j as f64 + 0.5) * spec.dy())
        .collect();
    let mut values = vec![0.0; spec.nx * spec.ny];
    let mut kx = vec![0.0; spec.nx];
    let mut ky = vec![0.0; spec.ny];
    for p in &points {
        for (k, &x) in kx.iter_mut().zip(&xs) {
            let u = (x - p.x) / hx;
            *k = (-0.5 * u * u).exp();
        }
        for (k, &y) in ky.iter_mut().zip(&ys) {
            let u = (y - p.y) / hy;
            *k = (-0.5 * u * u).exp();
        }
        for (j, &wy) in ky.iter().enumerate() {
            if wy == 0.0 {
                continue;
            }
            let row = &mut values[j * spec.nx..(j + 1) * spec.nx];
            for (v, &wx) in row.iter_mut().zip(&kx) {
                *v += wx * wy;
            }
        }
    }
    let mass: f64 = values.iter().sum::<f64>() * spec.dx() * spec.dy();
    if !(mass > 0.0) {
        return Err(Error::InvalidInput(
            "no density mass falls on the grid".into(),
        ));
    }
    for v in &mut values {
        *v /= mass;
    }
    Ok(DensityGrid {
        spec,
        bandwidth: (hx, hy),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Stats {
            min: *v.first()?,
            median: median_sorted(&v)?,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: *v.last()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConcentrationReport {
    pub count: usize,
    pub l_star: f64,
    pub deltas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub distances: Vec<f64>,
    pub length_stats: Option<Stats>,
    pub excess_over_l_star: Option<Stats>,
    pub notes: Vec<String>,
}

pub fn concentration_report(
    trace: &ChainTrace,
    sl: &ShortestLoop,
    deltas: &[f64],
) -> Result<ConcentrationReport> {
    if deltas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput(
            "deltas must be sorted ascending".into(),
        ));
    }
    let distances: Vec<f64> = trace
        .records
        .iter()
        .map(|r| loop_distance(&r.vertices, &sl.polygon))
        .collect();
    let count = distances.len();
    let fractions = deltas
        .iter()
        .map(|&d| {
            if count == 0 {
                0.0
            } else {
                distances.iter().filter(|&&x| x <= d).count() as f64 / count as f64
            }
        })
        .collect();
    let lengths = trace.lengths();
    let excess: Vec<f64> = lengths.iter().map(|l| l - sl.length).collect();
    if let Some(i) = excess.iter().position(|&e| e < -1e-9) {
        return Err(Error::Integrity(format!(
            "saved loop {i} has length {} below the class minimum {}",
            lengths[i], sl.length
        )));
    }
    Ok(ConcentrationReport {
        count,
        l_star: sl.length,
        deltas: deltas.to_vec(),
        fractions,
        distances,
        length_stats: Stats::of(&lengths),
        excess_over_l_star: Stats::of(&excess),
        notes: vec![DISTANCE_NOTE.into(), ALIGNMENT_NOTE.into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homotopy::CyclicWord;
    use crate::mcmc::SaveRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(v: &[(f64, f64)]) -> PLLoop {
        PLLoop::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn mean_of_shifted_copies() {
        let a = lp(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let mean = mean_free_loop(&[a.clone(), a.rotated(1), a.rotated(3)]).unwrap();
        assert_eq!(mean, a);
    }

    #[test]
    fn mean_of_translated_pair() {
        let a = lp(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let b = a.translated(Point::new(0.4, 0.0));
        let mean = mean_free_loop(&[a.clone(), b]).unwrap();
        assert_eq!(mean, a.translated(Point::new(0.2, 0.0)));
    }

    #[test]
    fn mean_rejects_mixed_sizes() {
        let a = lp(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let b = lp(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert!(mean_free_loop(&[a, b]).is_err());
        assert!(mean_free_loop(&[]).is_err());
    }

    #[test]
    fn kde_single_location() {
        let p = lp(&[(0.5, 0.5), (0.5, 0.5), (0.5, 0.5)]);
        let g = kde(&[p], None, None).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-9);
        let top = g.top_cells(0.0001);
        assert!(top[0].dist(Point::new(0.5, 0.5)) < 0.02);
    }

    #[test]
    fn kde_uniform_points_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..100_000)
            .map(|_| Point::new(rng.random(), rng.random()))
            .collect();
        let loops: Vec<PLLoop> = pts
            .chunks(4)
            .map(|c| PLLoop::new(c.to_vec()).unwrap())
            .collect();
        let spec = GridSpec {
            xmin: 0.2,
            xmax: 0.8,
            ymin: 0.2,
            ymax: 0.8,
            nx: 20,
            ny: 20,
        };
        let g = kde(&loops, Some(spec), None).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-9);
        let max = g.values.iter().copied().fold(0.0, f64::max);
        let min = g.values.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "{max} {min}");
    }

    #[test]
    fn kde_rejects_bad_grid() {
        let p = lp(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let spec = GridSpec {
            xmin: 1.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
            nx: 10,
            ny: 10,
        };
        assert!(kde(&[p.clone()], Some(spec), None).is_err());
        assert!(kde(&[p], None, Some(-1.0)).is_err());
    }

    #[test]
    fn csv_shape() {
        let p = lp(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let spec = GridSpec {
            xmin: -1.0,
            xmax: 2.0,
            ymin: -1.0,
            ymax: 2.0,
            nx: 5,
            ny: 3,
        };
        let g = kde(&[p], Some(spec), Some(0.5)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("xmin=-1"));
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn concentration_of_exact_copies() {
        let square: Vec<Point> = [(1.35, 1.35), (-1.35, 1.35), (-1.35, -1.35), (1.35, -1.35)]
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect();
        let sl = ShortestLoop {
            polygon: square.clone(),
            punctures: vec![0, 1, 2, 3],
            angles: vec![],
            length: 10.8,
            class_word: CyclicWord::default(),
            passes: 1,
        };
        let d = crate::loops::discretize(&square, 59).unwrap();
        let rec = SaveRecord {
            step: 1,
            length: d.length(),
            rate: 0.0,
            vertices: d.vertices().to_vec(),
        };
        let trace = ChainTrace::from_records(vec![rec.clone(), rec]);
        let r = concentration_report(&trace, &sl, &[10.8 / 60.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.fractions, vec![1.0, 1.0, 1.0]);
        assert!(r.excess_over_l_star.unwrap().min.abs() < 1e-9);
        assert!(concentration_report(&trace, &sl, &[1.0, 0.5]).is_err());
    }
}
