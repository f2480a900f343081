//! Initial membrane shapes and their exact signed distances.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed convex initial interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        /// Semi-axes along the rotated x and y directions.
        radii: [f64; 2],
        rotation: f64,
    },
}

impl Shape {
    /// Ellipse with reduced area `xi` and perimeter `perimeter`, major axis
    /// at angle `rotation`.
    pub fn ellipse_with_reduced_area(xi: f64, perimeter: f64, center: [f64; 2], rotation: f64) -> Result<Shape> {
        let [a, b] = axes_for_reduced_area(xi, perimeter)?;
        Ok(Shape::Ellipse {
            center,
            radii: [a, b],
            rotation,
        })
    }

    pub fn center(&self) -> [f64; 2] {
        match *self {
            Shape::Circle { center, .. } | Shape::Ellipse { center, .. } => center,
        }
    }

    /// Half-extents of the axis-aligned bounding box.
    pub fn half_extents(&self) -> [f64; 2] {
        match *self {
            Shape::Circle { radius, .. } => [radius, radius],
            Shape::Ellipse { radii: [a, b], rotation, .. } => {
                let (s, c) = rotation.sin_cos();
                [(a * c).hypot(b * s), (a * s).hypot(b * c)]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Circle { radius, .. } => radius > 0.0 && radius.is_finite(),
            Shape::Ellipse { radii: [a, b], .. } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGeometry(format!("non-positive radius in {self:?}")))
        }
    }

    /// Signed distance: negative inside.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        match *self {
            Shape::Circle { center, radius } => (x[0] - center[0]).hypot(x[1] - center[1]) - radius,
            Shape::Ellipse { center, radii, rotation } => {
                let (s, c) = rotation.sin_cos();
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let lx = c * dx + s * dy;
                let ly = -s * dx + c * dy;
                ellipse_signed_distance(radii[0], radii[1], lx, ly)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Circle { radius, .. } => PI * radius * radius,
            Shape::Ellipse { radii: [a, b], .. } => PI * a * b,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Shape::Circle { radius, .. } => 2.0 * PI * radius,
            Shape::Ellipse { radii: [a, b], .. } => ellipse_perimeter(a, b),
        }
    }
}

/// Arc length of an ellipse by the trapezoid rule on the periodic integrand,
/// which converges geometrically.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let n = 4096;
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let t = i as f64 * h;
            (a * t.sin()).hypot(b * t.cos())
        })
        .sum::<f64>()
        * h
}

pub fn ellipse_reduced_area(a: f64, b: f64) -> f64 {
    let p = ellipse_perimeter(a, b);
    4.0 * PI * PI * a * b / (p * p)
}

/// Semi-axes `[a, b]` (a ≥ b) of the ellipse with reduced area `xi` and the
/// given perimeter, by bisection on the aspect ratio.
pub fn axes_for_reduced_area(xi: f64, perimeter: f64) -> Result<[f64; 2]> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::param("xi", format!("reduced area must lie in (0, 1], got {xi}")));
    }
    if !(perimeter > 0.0) {
        return Err(Error::param("perimeter", format!("must be positive, got {perimeter}")));
    }
    let ratio = if xi >= 1.0 - 1e-15 {
        1.0
    } else {
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        while ellipse_reduced_area(hi, 1.0) > xi {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::param("xi", "reduced area too small"));
            }
        }
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if ellipse_reduced_area(mid, 1.0) > xi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let b = perimeter / ellipse_perimeter(ratio, 1.0);
    Ok([ratio * b, b])
}

/// Signed distance from `(x, y)` to the axis-aligned ellipse with semi-axes
/// `a`, `b`, via Newton projection on the normal-line parameter.
pub fn ellipse_signed_distance(a: f64, b: f64, x: f64, y: f64) -> f64 {
    // reduce to a >= b in the first quadrant
    let (a, b, y0, y1) = if a >= b { (a, b, x.abs(), y.abs()) } else { (b, a, y.abs(), x.abs()) };
    let inside = (y0 / a).powi(2) + (y1 / b).powi(2) < 1.0;
    let d = if y1 > 0.0 {
        if y0 > 0.0 {
            // F(t) = (a y0/(t+a²))² + (b y1/(t+b²))² - 1, decreasing on t > -b²
            let f = |t: f64| {
                let p = a * y0 / (t + a * a);
                let q = b * y1 / (t + b * b);
                (p * p + q * q - 1.0, -2.0 * (p * p / (t + a * a) + q * q / (t + b * b)))
            };
            let mut lo = -b * b + b * y1;
            let mut hi = -b * b + (a * a * y0 * y0 + b * b * y1 * y1).sqrt();
            // F is convex, so Newton from the left bound (F >= 0) is monotone;
            // the bracket only guards rounding.
            let mut t = lo;
            for _ in 0..200 {
                let (ft, dt) = f(t);
                if ft == 0.0 {
                    break;
                }
                if ft > 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                let mut next = t - ft / dt;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - t).abs() <= 1e-14 * (1.0 + t.abs()) || hi - lo <= 1e-15 * (1.0 + t.abs()) {
                    t = next;
                    break;
                }
                t = next;
            }
            let x0 = a * a * y0 / (t + a * a);
            let x1 = b * b * y1 / (t + b * b);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - b).abs()
        }
    } else {
        let numer = a * y0;
        let denom = a * a - b * b;
        if numer < denom {
            let x0 = a * numer / denom;
            let x1 = b * (1.0 - (x0 / a).powi(2)).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - a).abs()
        }
    };
    if inside {
        -d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_distance() {
        let c = Shape::Circle {
            center: [0.7, 0.7],
            radius: 0.15,
        };
        assert!((c.signed_distance([0.7, 0.7]) + 0.15).abs() < 1e-15);
        assert!(c.signed_distance([0.85, 0.7]).abs() < 1e-15);
    }

    #[test]
    fn ellipse_axis_distances() {
        assert!((ellipse_signed_distance(0.3, 0.1, 0.4, 0.0) - 0.1).abs() < 1e-14);
        assert!((ellipse_signed_distance(0.3, 0.1, 0.0, 0.0) + 0.1).abs() < 1e-14);
        assert!((ellipse_signed_distance(0.3, 0.1, 0.0, -0.5) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn ellipse_distance_matches_brute_force() {
        let (a, b) = (0.3, 0.1);
        let pts: Vec<[f64; 2]> = (0..200_000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 200_000.0;
                [a * t.cos(), b * t.sin()]
            })
            .collect();
        for &(x, y) in &[(0.31, 0.05), (0.1, 0.02), (-0.2, -0.3), (0.05, 0.099), (0.5, 0.5), (0.25, -0.01)] {
            let brute = pts.iter().map(|p| (p[0] - x).hypot(p[1] - y)).fold(f64::MAX, f64::min);
            let d = ellipse_signed_distance(a, b, x, y);
            // the sampled reference overestimates by up to ~1e-7
            assert!(d.abs() <= brute + 1e-12 && brute - d.abs() < 1e-7, "({x},{y}): {d} vs {brute}");
        }
    }

    #[test]
    fn perimeter_oracle() {
        assert!((ellipse_perimeter(0.3, 0.1) - 1.33649).abs() < 1e-5);
        assert!((ellipse_perimeter(0.2, 0.1) - 0.968845).abs() < 1e-6);
        assert!((ellipse_perimeter(1.0, 1.0) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn target_reduced_area_round_trip() {
        for xi in [0.68, 0.8, 0.95] {
            let [a, b] = axes_for_reduced_area(xi, PI).unwrap();
            assert!((ellipse_reduced_area(a, b) - xi).abs() < 1e-9);
            assert!((ellipse_perimeter(a, b) - PI).abs() < 1e-12);
        }
        let [a, b] = axes_for_reduced_area(0.68, PI).unwrap();
        assert!((a - 0.7009).abs() < 1e-3 && (b - 0.2425).abs() < 1e-3);
    }

    #[test]
    fn rotated_bounding_box() {
        let s = Shape::Ellipse {
            center: [0.0, 0.0],
            radii: [0.3, 0.1],
            rotation: PI / 2.0,
        };
        let e = s.half_extents();
        assert!((e[0] - 0.1).abs() < 1e-14 && (e[1] - 0.3).abs() < 1e-14);
    }
}
