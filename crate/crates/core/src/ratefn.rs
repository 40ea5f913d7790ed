//! Log-moment generating function of the uniform disk measure and its
//! Legendre transform.
//!
//! For the uniform measure on the disk of radius `R` both functions are
//! radial. With `x = sR`, `E exp(<X, η>) = 2 I₁(x) / x` where `|η| = s` and
//! `I₁` is the modified Bessel function of the first kind. The transform is
//! finite exactly on the open disk and is evaluated by a bracketed
//! golden-section search on the concave dual objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Below this argument `I₁` is summed from its power series; above it the
/// large-argument expansion is used.
const SERIES_LIMIT: f64 = 30.0;

/// `ln(2 I₁(x) / x)` for `x >= 0`.
pub fn log_bessel_i1_ratio(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x <= SERIES_LIMIT {
        // 2 I₁(x)/x = Σ (x/2)^{2k} / (k! (k+1)!)
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + 1.0));
            tail += term;
            if term < 1e-17 * (1.0 + tail) {
                break;
            }
        }
        tail.ln_1p()
    } else {
        std::f64::consts::LN_2 + log_bessel_i1_large(x) - x.ln()
    }
}

/// `ln I₁(x)` from the Hankel expansion, summed until the terms stop
/// shrinking.
fn log_bessel_i1_large(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term: f64 = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let odd = 2.0 * k - 1.0;
        let next = -term * (4.0 - odd * odd) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        term = next;
        sum += term;
    }
    x - 0.5 * (std::f64::consts::TAU * x).ln() + sum.ln()
}

/// A value of the Legendre transform. `saturated` marks values where the
/// dual maximiser ran into the search cap, which happens only as `r -> R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    pub value: f64,
    pub saturated: bool,
}

impl RateValue {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialRate {
    radius: f64,
    tolerance: f64,
    s_max: f64,
}

impl RadialRate {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    pub fn new(radius: f64) -> Result<Self> {
        Self::with_tolerance(radius, Self::DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(radius: f64, tolerance: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "solver tolerance must be positive".into(),
            ));
        }
        Ok(RadialRate {
            radius,
            tolerance,
            s_max: 1e4 / radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Radial log-MGF `Λ̃(s)`.
    pub fn lmgf(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidInput(format!("lmgf needs s >= 0, got {s}")));
        }
        Ok(log_bessel_i1_ratio(s * self.radius))
    }

    fn dual(&self, r: f64, s: f64) -> f64 {
        r * s - log_bessel_i1_ratio(s * self.radius)
    }

    /// Radial Legendre transform `Λ̃*(r) = sup_{s>=0} (r s - Λ̃(s))`.
    pub fn rate_star(&self, r: f64) -> RateValue {
        if r <= 0.0 {
            return RateValue {
                value: 0.0,
                saturated: false,
            };
        }
        if r >= self.radius {
            return RateValue {
                value: f64::INFINITY,
                saturated: false,
            };
        }
        let f = |s: f64| self.dual(r, s);
        // For small r the maximiser is near 4r/R², so start the bracket there.
        let mut lo = 0.0;
        let mut hi = (4.0 * r / (self.radius * self.radius))
            .max(1e-12)
            .min(self.s_max);
        let mut f_hi = f(hi);
        let mut saturated = false;
        loop {
            let next = 2.0 * hi;
            if next >= self.s_max {
                let (s, v) = golden_max(&f, lo, self.s_max, self.tolerance);
                saturated = s >= 0.999 * self.s_max;
                return RateValue {
                    value: v.max(0.0),
                    saturated,
                };
            }
            let f_next = f(next);
            if f_next <= f_hi {
                let (_, v) = golden_max(&f, lo, next, self.tolerance);
                return RateValue {
                    value: v.max(f_hi).max(0.0),
                    saturated,
                };
            }
            lo = hi;
            hi = next;
            f_hi = f_next;
        }
    }

    /// Rate functional of a closed polygon traversed with equal time per edge.
    pub fn loop_rate(&self, vertices: &[Point]) -> f64 {
        let m = vertices.len();
        if m == 0 {
            return 0.0;
        }
        let dt = 1.0 / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            let speed = vertices[i].dist(vertices[(i + 1) % m]) * m as f64;
            let v = self.rate_star(speed).value;
            if v.is_infinite() {
                return f64::INFINITY;
            }
            total += dt * v;
        }
        total
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let s = 0.5 * (a + b);
    let fs = f(s);
    [(s, fs), (c, fc), (d, fd), (a, f(a)), (b, f(b))]
        .into_iter()
        .fold(
            (s, fs),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lmgf_at_zero() {
        let rr = RadialRate::new(20.0).unwrap();
        assert_eq!(rr.lmgf(0.0).unwrap(), 0.0);
        assert!(rr.lmgf(-1.0).is_err());
    }

    #[test]
    fn series_and_expansion_agree_at_switch() {
        // both branches evaluated just around the switch point
        for x in [25.0, 30.0, 35.0] {
            let q = 0.25 * x * x;
            let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0.0);
            for _ in 0..200 {
                k += 1.0;
                term *= q / (k * (k + 1.0));
                sum += term;
            }
            let series = sum.ln();
            let expansion = std::f64::consts::LN_2 + log_bessel_i1_large(x) - x.ln();
            assert!((series - expansion).abs() < 1e-12 * series.abs(), "x={x}");
        }
    }

    #[test]
    fn rate_star_domain() {
        let rr = RadialRate::new(20.0).unwrap();
        assert_eq!(rr.rate_star(0.0).value, 0.0);
        assert!(rr.rate_star(20.0).is_infinite());
        assert!(rr.rate_star(30.0).is_infinite());
        let mid = rr.rate_star(10.0);
        assert!(mid.value.is_finite() && mid.value > 0.0 && !mid.saturated);
    }

    #[test]
    fn rate_star_saturates_near_radius() {
        let rr = RadialRate::new(1.0).unwrap();
        let v = rr.rate_star(1.0 - 1e-9);
        assert!(v.saturated);
        assert!(v.value.is_finite());
    }

    #[test]
    fn constant_loop_has_zero_rate() {
        let rr = RadialRate::new(20.0).unwrap();
        let p = Point::new(1.0, 2.0);
        assert_eq!(rr.loop_rate(&[p, p, p, p]), 0.0);
    }

    #[test]
    fn regular_polygon_attains_jensen_equality() {
        let rr = RadialRate::new(20.0).unwrap();
        let m = 12;
        let poly: Vec<Point> = (0..m)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                Point::new(2.0 * t.cos(), 2.0 * t.sin())
            })
            .collect();
        let len: f64 = (0..m).map(|i| poly[i].dist(poly[(i + 1) % m])).sum();
        let lhs = rr.loop_rate(&poly);
        let rhs = rr.rate_star(len).value;
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn too_fast_loop_is_infinite() {
        let rr = RadialRate::new(1.0).unwrap();
        let tri = [Point::ORIGIN, Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(rr.loop_rate(&tri).is_infinite());
    }

    #[test]
    fn monotone_and_convex_on_grid() {
        let rr = RadialRate::new(20.0).unwrap();
        let vals: Vec<f64> = (0..=199)
            .map(|i| rr.rate_star(i as f64 * 0.1).value)
            .collect();
        for w in vals.windows(3) {
            assert!(w[1] >= w[0] - 1e-12);
            assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-8);
        }
    }
}
