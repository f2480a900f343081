//! Level-set representation of the membrane.
//!
//! φ is negative inside the membrane, so `∇φ/|∇φ|` is the outward normal.

pub mod geometry;
pub mod kernels;
pub mod redistance;
pub mod shapes;
pub mod transport;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::assembly::{cell_points, for_each_cell};
use crate::fem::{LagrangeField, LagrangeSpace, QuadRule};

pub use geometry::{geometry_fields, GeometryFields};
pub use kernels::{dirac_reg, heaviside_reg};
pub use redistance::redistance;
pub use shapes::Shape;
pub use transport::{transport_step, transport_step_supg, Velocity};

/// Level-set function with its kernel half-width and inflow data.
#[derive(Debug, Clone)]
pub struct LevelSetState {
    pub phi: LagrangeField,
    pub eps: f64,
    pub t: f64,
    /// Nodal values imposed on inflow boundary dofs.
    pub boundary_values: Arc<Vec<f64>>,
}

impl LevelSetState {
    /// Wraps `phi`; its current values become the inflow data.
    pub fn new(phi: LagrangeField, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::param("eps", format!("must be positive, got {eps}")));
        }
        if phi.rank() != 1 {
            return Err(Error::Dimension("level set must be scalar".into()));
        }
        let boundary_values = Arc::new(phi.coeffs().to_vec());
        Ok(LevelSetState {
            phi,
            eps,
            t: 0.0,
            boundary_values,
        })
    }

    pub fn space(&self) -> &Arc<LagrangeSpace> {
        self.phi.space()
    }

    pub fn with_phi(&self, phi: LagrangeField) -> LevelSetState {
        LevelSetState {
            phi,
            eps: self.eps,
            t: self.t,
            boundary_values: self.boundary_values.clone(),
        }
    }
}

/// Signed-distance initialization of `shape` on `space`.
///
/// The shape must keep a clearance of `2ε` from the mesh boundary.
pub fn init_signed_distance(shape: &Shape, space: Arc<LagrangeSpace>, eps: f64) -> Result<LevelSetState> {
    shape.validate()?;
    let bb = space.mesh().bounding_box();
    let c = shape.center();
    let e = shape.half_extents();
    let clearance = [
        c[0] - e[0] - bb.x0,
        bb.x1 - c[0] - e[0],
        c[1] - e[1] - bb.y0,
        bb.y1 - c[1] - e[1],
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    if clearance < 2.0 * eps {
        return Err(Error::InvalidGeometry(format!(
            "interface clearance {clearance:.4} from the domain boundary is below 2*eps = {:.4}",
            2.0 * eps
        )));
    }
    let phi = LagrangeField::interpolate(space, |x, y| shape.signed_distance([x, y]));
    LevelSetState::new(phi, eps)
}

/// Per-point data handed to band integrands.
pub struct BandPoint<'a> {
    pub cell: usize,
    pub q: usize,
    pub x: [f64; 2],
    pub phi: f64,
    pub grad_phi: [f64; 2],
    /// `w_q |det J| |∇φ| δ_ε(φ)`.
    pub weight: f64,
    pub rule: &'a QuadRule,
}

/// `Σ_cells Σ_q weight · f(point)` over points where `δ_ε(φ) > 0`.
pub fn band_sum(state: &LevelSetState, rule: &QuadRule, f: impl Fn(&BandPoint) -> f64 + Sync) -> f64 {
    let space = state.space();
    let mesh = space.mesh();
    let tab = space.tabulate(rule);
    let nq = rule.len();
    let mut total = 0.0;
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let mut v = vec![0.0; nq];
            let mut g = vec![[0.0; 2]; nq];
            state.phi.eval_cell(c, &tab, 0, &mut v, &mut g);
            if v.iter().all(|p| p.abs() >= state.eps) {
                return 0.0;
            }
            let (x, w) = cell_points(mesh, c, rule);
            let mut s = 0.0;
            for q in 0..nq {
                let d = kernels::dirac(v[q], state.eps);
                if d == 0.0 {
                    continue;
                }
                let weight = w[q] * d * g[q][0].hypot(g[q][1]);
                let p = BandPoint {
                    cell: c,
                    q,
                    x: x[q],
                    phi: v[q],
                    grad_phi: g[q],
                    weight,
                    rule,
                };
                s += weight * f(&p);
            }
            s
        },
        |_, v| total += v,
    );
    total
}

/// `∫_Γ ζ ds ≈ ∫_Λ |∇φ| δ_ε(φ) ζ dx` for a pointwise integrand.
pub fn surface_integral(state: &LevelSetState, zeta: impl Fn([f64; 2]) -> f64 + Sync) -> f64 {
    let rule = state.space().default_rule();
    band_sum(state, &rule, |p| zeta(p.x))
}

/// Surface integral of a scalar finite-element field (any space on the same mesh).
pub fn surface_integral_field(state: &LevelSetState, zeta: &LagrangeField, transform: impl Fn(f64) -> f64 + Sync) -> f64 {
    let rule = state.space().default_rule();
    let tab = zeta.space().tabulate(&rule);
    band_sum(state, &rule, |p| {
        let dofs = zeta.space().cell_dofs(p.cell);
        let v: f64 = tab
            .values_at(p.q)
            .iter()
            .zip(dofs)
            .map(|(b, &d)| b * zeta.coeffs()[d])
            .sum();
        transform(v)
    })
}

/// `|Ω| ≈ ∫_Λ (1 − H_ε(φ)) dx`.
pub fn enclosed_area(state: &LevelSetState) -> f64 {
    let space = state.space();
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let nq = rule.len();
    let mesh = space.mesh();
    let mut total = 0.0;
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let mut v = vec![0.0; nq];
            state.phi.eval_cell_values(c, &tab, 0, &mut v);
            let det = mesh.geometry(c).det.abs();
            v.iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * det * (1.0 - kernels::heaviside(*p, state.eps)))
                .sum::<f64>()
        },
        |_, v| total += v,
    );
    total
}
