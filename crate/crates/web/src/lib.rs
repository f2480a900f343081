//! Browser bindings for three small demos: Keller-Skalak inclination curves,
//! power-law viscosity curves, and a coarse level-set vortex.
//!
//! Every export takes and returns plain numbers so the same functions can be
//! exercised natively. Invalid input yields an empty array.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use vesiflow::diagnostics::{keller_skalak, KsPrediction};
use vesiflow::fem::LagrangeSpace;
use vesiflow::io::config::VortexSpec;
use vesiflow::io::scenario::vortex_transport;
use vesiflow::levelset::redistance::zero_contour;
use vesiflow::levelset::{init_signed_distance, Shape};
use vesiflow::mesh::{build_structured_mesh, uniform_tags, BoundaryTag, Rect};
use vesiflow::rheology::{effective_viscosity, PhysParams};

/// Keller-Skalak `θ*/π` at `n` reduced areas evenly spaced in `[xi_min, xi_max]`.
///
/// Returns `[xi_0, v_0, xi_1, v_1, ...]`; `v` is NaN where the model tumbles.
#[wasm_bindgen]
pub fn ks_curve(beta: f64, xi_min: f64, xi_max: f64, n: usize) -> Vec<f64> {
    if n < 2 || !(0.0 < xi_min && xi_min < xi_max && xi_max < 1.0) || !(beta > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let xi = xi_min + (xi_max - xi_min) * i as f64 / (n - 1) as f64;
        let v = match keller_skalak(xi, beta) {
            Ok(KsPrediction::TankTreading { theta }) => theta / std::f64::consts::PI,
            _ => f64::NAN,
        };
        out.extend([xi, v]);
    }
    out
}

/// `[regime, value]`: regime 0 with `θ*/π` for tank-treading, 1 with the
/// half-turn time for tumbling.
#[wasm_bindgen]
pub fn ks_point(xi: f64, beta: f64) -> Vec<f64> {
    match keller_skalak(xi, beta) {
        Ok(KsPrediction::TankTreading { theta }) => vec![0.0, theta / std::f64::consts::PI],
        Ok(KsPrediction::Tumbling { period }) => vec![1.0, period],
        Err(_) => Vec::new(),
    }
}

/// Outer-fluid viscosity under simple shear of rate `γ̇`, for `n` rates
/// log-spaced over `[1e-3, 1e3]`. Returns `[rate_0, eta_0, ...]`.
#[wasm_bindgen]
pub fn viscosity_curve(upsilon: f64, n: usize) -> Vec<f64> {
    let params = PhysParams {
        upsilon,
        ..PhysParams::default()
    };
    if n < 2 || params.validate().is_err() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let rate = 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64);
        // simple shear: D = [[0, γ̇/2], [γ̇/2, 0]]
        let d = [[0.0, 0.5 * rate], [0.5 * rate, 0.0]];
        out.extend([rate, effective_viscosity(1.0, &d, &params)]);
    }
    out
}

/// Zero contour after transporting the standard vortex circle to time
/// `t ∈ [0, 1]` on an `n×n` grid with degree-`k` level sets.
///
/// Returns segments flattened as `[x0, y0, x1, y1, ...]`.
#[wasm_bindgen]
pub fn vortex_contour(n: usize, k: usize, t: f64) -> Vec<f64> {
    if !(4..=64).contains(&n) || !(1..=3).contains(&k) || !(0.0..=1.0).contains(&t) {
        return Vec::new();
    }
    let run = || -> vesiflow::Result<Vec<f64>> {
        let mesh = Arc::new(build_structured_mesh(n, n, Rect::new(0.0, 0.0, 1.0, 1.0), uniform_tags(BoundaryTag::Free))?);
        let h = mesh.h();
        let space = LagrangeSpace::new(mesh, k)?;
        let circle = Shape::Circle {
            center: [0.7, 0.7],
            radius: 0.15,
        };
        let ls = init_signed_distance(&circle, space, 0.05)?;
        let steps = (t / h).ceil() as usize;
        let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
        let v = VortexSpec { psi: 3.0, period: 1.0 };
        let end = vortex_transport(&ls, v, dt, steps, 0.5, |_, _| Ok(true))?;
        Ok(zero_contour(&end.phi).into_iter().flat_map(|[a, b]| [a[0], a[1], b[0], b[1]]).collect())
    };
    run().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_curve_is_decreasing_toward_smaller_areas() {
        let c = ks_curve(1.0, 0.6, 0.95, 8);
        assert_eq!(c.len(), 16);
        let v: Vec<f64> = c.chunks(2).map(|p| p[1]).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]), "{v:?}");
        assert!(ks_curve(1.0, 0.9, 0.5, 8).is_empty());
    }

    #[test]
    fn ks_point_regimes() {
        let tt = ks_point(0.68, 1.0);
        assert_eq!(tt[0], 0.0);
        assert!((tt[1] - 0.10604).abs() < 1e-3, "{tt:?}");
        assert_eq!(ks_point(0.68, 10.0)[0], 1.0);
        assert!(ks_point(1.5, 1.0).is_empty());
    }

    #[test]
    fn viscosity_curve_thins() {
        let c = viscosity_curve(0.7755, 5);
        let eta: Vec<f64> = c.chunks(2).map(|p| p[1]).collect();
        assert!(eta.windows(2).all(|w| w[1] < w[0]));
        let newt = viscosity_curve(1.0, 3);
        assert!(newt.chunks(2).all(|p| p[1] == 1.0));
        assert!(viscosity_curve(-1.0, 3).is_empty());
    }

    #[test]
    fn vortex_contour_starts_as_the_circle() {
        let segs = vortex_contour(16, 1, 0.0);
        assert!(!segs.is_empty());
        for p in segs.chunks(2) {
            let r = (p[0] - 0.7).hypot(p[1] - 0.7);
            assert!((r - 0.15).abs() < 0.01, "{r}");
        }
        let later = vortex_contour(16, 1, 0.25);
        assert!(!later.is_empty() && later != segs);
        assert!(vortex_contour(2, 1, 0.5).is_empty());
    }
}
