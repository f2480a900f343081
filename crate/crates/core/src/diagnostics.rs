//! Geometric and dynamic observables, regime classification and the
//! Keller–Skalak reduced model.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::for_each_cell;
use crate::fem::LagrangeField;
use crate::levelset::geometry::unit;
use crate::levelset::kernels::heaviside;
use crate::levelset::shapes::axes_for_reduced_area;
use crate::levelset::{band_sum, surface_integral, surface_integral_field, GeometryFields, LevelSetState};

pub use crate::levelset::enclosed_area;

/// One row of the diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    pub area: f64,
    pub perimeter: f64,
    pub xi2d: f64,
    /// Inclination in (−π/2, π/2]; NaN when the shape is too isotropic.
    pub theta: f64,
    pub bending_energy: f64,
    pub fp_iters: usize,
    pub surf_div: f64,
}

pub fn perimeter(ls: &LevelSetState) -> f64 {
    surface_integral(ls, |_| 1.0)
}

/// `4π |Ω| / |Γ|²`.
pub fn reduced_area(ls: &LevelSetState) -> Result<f64> {
    let p = perimeter(ls);
    if !(p > 1e-14) {
        return Err(Error::DegenerateGeometry("interface has zero perimeter".into()));
    }
    Ok(4.0 * PI * enclosed_area(ls) / (p * p))
}

/// `(1/2Ca) ∫_Γ H² ds`.
pub fn bending_energy(ls: &LevelSetState, geo: &GeometryFields, ca: f64) -> f64 {
    surface_integral_field(ls, &geo.h, |h| h * h) / (2.0 * ca)
}

/// Angle of the major principal axis of the interior's second-moment tensor
/// (weight `1 − H_ε(φ)`) with the x axis.
pub fn inclination_angle(ls: &LevelSetState) -> Result<f64> {
    let space = ls.space();
    let mesh = space.mesh();
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let nq = rule.len();
    // [m, mx, my, mxx, mxy, myy]
    let mut s = [0.0; 6];
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let mut v = vec![0.0; nq];
            ls.phi.eval_cell_values(c, &tab, 0, &mut v);
            let geo = mesh.geometry(c);
            let mut m = [0.0; 6];
            for q in 0..nq {
                let w = rule.weights[q] * geo.det.abs() * (1.0 - heaviside(v[q], ls.eps));
                if w == 0.0 {
                    continue;
                }
                let [x, y] = geo.map(rule.points[q]);
                m[0] += w;
                m[1] += w * x;
                m[2] += w * y;
                m[3] += w * x * x;
                m[4] += w * x * y;
                m[5] += w * y * y;
            }
            m
        },
        |_, m| s.iter_mut().zip(m).for_each(|(a, b)| *a += b),
    );
    if !(s[0] > 0.0) {
        return Err(Error::DegenerateGeometry("empty interior".into()));
    }
    let (cx, cy) = (s[1] / s[0], s[2] / s[0]);
    let ixx = s[3] / s[0] - cx * cx;
    let ixy = s[4] / s[0] - cx * cy;
    let iyy = s[5] / s[0] - cy * cy;
    let mean = 0.5 * (ixx + iyy);
    let dev = (0.25 * (ixx - iyy).powi(2) + ixy * ixy).sqrt();
    let ratio = (mean + dev) / (mean - dev).max(f64::MIN_POSITIVE);
    if ratio < 1.05 {
        return Err(Error::UndefinedAngle { ratio });
    }
    Ok(wrap_half_turn(0.5 * (2.0 * ixy).atan2(ixx - iyy)))
}

/// Maps an axis angle to (−π/2, π/2].
pub fn wrap_half_turn(a: f64) -> f64 {
    let mut a = a.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

/// `s(u) = ∫ (div_s u)² |∇φ| δ_ε(φ) dx` with `n = ∇φ/|∇φ|`.
pub fn surface_divergence(u: &LagrangeField, ls: &LevelSetState) -> f64 {
    let rule = ls.space().default_rule();
    let vs = u.space();
    let tab = vs.tabulate(&rule);
    let n = vs.n_dofs();
    band_sum(ls, &rule, |p| {
        let geo = vs.mesh().geometry(p.cell);
        let dofs = vs.cell_dofs(p.cell);
        let mut g = [[0.0; 2]; 2];
        for (i, &d) in dofs.iter().enumerate() {
            let gi = geo.grad(tab.grads_at(p.q)[i]);
            for comp in 0..2 {
                let a = u.coeffs()[comp * n + d];
                g[comp][0] += a * gi[0];
                g[comp][1] += a * gi[1];
            }
        }
        let nh = unit(p.grad_phi);
        let nn: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| nh[i] * g[i][j] * nh[j]).sum();
        let ds = g[0][0] + g[1][1] - nn;
        ds * ds
    })
}

/// Keller–Skalak prediction for an ellipse in simple shear of unit rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KsPrediction {
    /// Tank-treading at a fixed inclination.
    TankTreading { theta: f64 },
    /// Tumbling with the time for a half turn (π rotation).
    Tumbling { period: f64 },
}

/// Coefficients of `dθ/dt = A + B cos 2θ` for shear rate 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsModel {
    pub a: f64,
    pub b: f64,
    /// Ellipse semi-axes matching the reduced area at perimeter π.
    pub axes: [f64; 2],
}

impl KsModel {
    pub fn new(xi: f64, beta: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::param("xi", format!("must lie in (0, 1), got {xi}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        let [a, b] = axes_for_reduced_area(xi, PI)?;
        let r = a / b;
        // ∫₀^∞ ((a²+t)(b²+t))^{-3/2} dt = 2 / (ab(a+b)²)
        let f2 = 2.0 * (a * a + b * b) / ((a + b) * (a + b));
        let f0 = 2.0 / (r + 1.0 / r);
        let f1 = 0.5 * (r - 1.0 / r);
        let bt = f0 * (f1 + 1.0 / (f1 * (1.0 + f2 * (beta - 1.0))));
        Ok(KsModel {
            a: -0.5,
            b: 0.5 * bt,
            axes: [a, b],
        })
    }

    pub fn rate(&self, theta: f64) -> f64 {
        self.a + self.b * (2.0 * theta).cos()
    }

    pub fn predict(&self) -> KsPrediction {
        if (self.a / self.b).abs() <= 1.0 {
            // stable root: the rate decreases through zero
            KsPrediction::TankTreading {
                theta: 0.5 * (-self.a / self.b).acos(),
            }
        } else {
            // time for θ to sweep π, by Gauss–Legendre on dt = dθ/|rate|
            let (x, w) = crate::fem::quadrature::gauss_legendre(64);
            let panels = 16;
            let mut period = 0.0;
            for k in 0..panels {
                let lo = -FRAC_PI_2 + PI * k as f64 / panels as f64;
                let len = PI / panels as f64;
                for (xi, wi) in x.iter().zip(&w) {
                    period += wi * len / self.rate(lo + xi * len).abs();
                }
            }
            KsPrediction::Tumbling { period }
        }
    }
}

pub fn keller_skalak(xi: f64, beta: f64) -> Result<KsPrediction> {
    Ok(KsModel::new(xi, beta)?.predict())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    TankTreading,
    Tumbling,
    Undetermined,
}

/// Unwraps axis angles defined modulo π.
pub fn unwrap_angles(theta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    let mut offset = 0.0;
    for (i, &t) in theta.iter().enumerate() {
        if i > 0 {
            let prev = theta[i - 1];
            let d = t - prev;
            if d > FRAC_PI_2 {
                offset -= PI;
            } else if d < -FRAC_PI_2 {
                offset += PI;
            }
        }
        out.push(t + offset);
    }
    out
}

/// TT if the last quarter of the series varies by less than 0.02 rad, TB if
/// the unwrapped angle falls monotonically through at least π.
pub fn detect_regime(series: &[(f64, f64)]) -> Regime {
    let series: Vec<(f64, f64)> = series.iter().copied().filter(|s| s.1.is_finite()).collect();
    if series.len() < 4 || series[series.len() - 1].0 - series[0].0 < 1.0 {
        return Regime::Undetermined;
    }
    let theta: Vec<f64> = series.iter().map(|s| s.1).collect();
    let un = unwrap_angles(&theta);
    let falling = un.windows(2).all(|w| w[1] <= w[0] + 1e-3);
    if falling && un[0] - un[un.len() - 1] >= PI {
        return Regime::Tumbling;
    }
    let t_end = series[series.len() - 1].0;
    let t_q = t_end - 0.25 * (t_end - series[0].0);
    let tail: Vec<f64> = series.iter().zip(&un).filter(|(s, _)| s.0 >= t_q).map(|(_, u)| *u).collect();
    let range = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if tail.len() >= 2 && range < 0.02 {
        Regime::TankTreading
    } else {
        Regime::Undetermined
    }
}
