//! Turning a [`SimConfig`] into an initial state and running it.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::coupling::{record, run_simulation, CouplingConfig, SimState, StepReport};
use crate::diagnostics::{bending_energy, enclosed_area, inclination_angle, perimeter, surface_divergence, DiagRecord};
use crate::error::Result;
use crate::fem::{l2_error, l2_norm, LagrangeField, LagrangeSpace};
use crate::flow::{FlowBC, FlowSpaces, FlowState, Picard};
use crate::levelset::{geometry_fields, init_signed_distance, transport_step_supg, LevelSetState, Shape, Velocity};
use crate::mesh::{build_structured_mesh, BoundaryTag, Side, TriMesh};

use super::config::{DtRule, ScenarioKind, ShapeSpec, SimConfig, VortexSpec};

/// Reversible vortex: `u = (−2 sin²(ψπx) sin(ψπy) cos(ψπy), 2 sin²(ψπy) sin(ψπx) cos(ψπx)) · cos(πt/T)`.
pub fn vortex_velocity(t: f64, x: f64, y: f64, psi: f64, period: f64) -> [f64; 2] {
    let (sx, cx) = (psi * PI * x).sin_cos();
    let (sy, cy) = (psi * PI * y).sin_cos();
    let g = (PI * t / period).cos();
    [-2.0 * sx * sx * sy * cy * g, 2.0 * sy * sy * sx * cx * g]
}

pub fn build_mesh(cfg: &SimConfig) -> Result<Arc<TriMesh>> {
    if let Some(path) = &cfg.mesh.file {
        return Ok(Arc::new(TriMesh::read(path)?));
    }
    let m = &cfg.mesh;
    let mesh = match cfg.scenario {
        ScenarioKind::Vortex => build_structured_mesh(m.nx, m.ny, m.rect, |_, _| BoundaryTag::Free)?,
        ScenarioKind::Shear => build_structured_mesh(m.nx, m.ny, m.rect, |side, _| match side {
            Side::Top | Side::Bottom => BoundaryTag::Dirichlet,
            Side::Left | Side::Right => BoundaryTag::Neumann,
        })?,
    };
    Ok(Arc::new(mesh))
}

pub fn initial_shape(spec: &ShapeSpec) -> Result<Shape> {
    Ok(match *spec {
        ShapeSpec::Circle { center, radius } => Shape::Circle { center, radius },
        ShapeSpec::Ellipse { center, radii, rotation } => Shape::Ellipse { center, radii, rotation },
        ShapeSpec::Reduced { center, xi, perimeter, rotation } => Shape::ellipse_with_reduced_area(xi, perimeter, center, rotation)?,
    })
}

/// Step size and count. `Δt = h^k` runs are split into equal steps that end
/// exactly at `T`; fixed steps run `⌊T/Δt⌋` times.
pub fn time_grid(cfg: &SimConfig, mesh: &TriMesh) -> (f64, usize) {
    match cfg.dt {
        DtRule::Fixed(dt) => (dt, (cfg.t_final / dt * (1.0 + 1e-12)).floor() as usize),
        DtRule::MeshPower => {
            let target = mesh.h().powi(cfg.k_phi as i32);
            let n = (cfg.t_final / target * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            if cfg.t_final == 0.0 {
                (target, 0)
            } else {
                (cfg.t_final / n as f64, n)
            }
        }
    }
}

pub fn coupling_config(cfg: &SimConfig, dt: f64, steps: usize) -> CouplingConfig {
    let c = &cfg.coupling;
    CouplingConfig {
        dt,
        t_final: dt * steps as f64,
        fp_tol: c.fp_tol,
        fp_max_iter: c.fp_max_iter,
        redistance_every: c.redistance_every,
        accept_unconverged: c.accept_unconverged,
        aitken: c.aitken,
        picard: Picard {
            tol: c.picard_tol,
            max_iter: c.picard_max_iter,
        },
        picard_mode: c.picard_mode,
        supg_c: c.supg_c,
    }
}

/// Resolved, ready-to-run problem.
pub struct Problem {
    pub config: SimConfig,
    pub mesh: Arc<TriMesh>,
    pub shape: Shape,
    pub dt: f64,
    pub steps: usize,
    pub initial: SimState,
    /// `None` for the kinematic vortex.
    pub bc: Option<FlowBC>,
}

impl Problem {
    pub fn new(cfg: &SimConfig) -> Result<Problem> {
        cfg.validate()?;
        let mesh = build_mesh(cfg)?;
        let shape = initial_shape(&cfg.shape)?;
        let ls = init_signed_distance(&shape, LagrangeSpace::new(mesh.clone(), cfg.k_phi)?, cfg.params.eps)?;
        let spaces = FlowSpaces::new(mesh.clone())?;
        let mut flow = FlowState::zeros(spaces.clone());
        let bc = match cfg.scenario {
            ScenarioKind::Vortex => {
                let v = cfg.vortex;
                flow.u = LagrangeField::interpolate_vector(spaces.velocity.clone(), |x, y| vortex_velocity(0.0, x, y, v.psi, v.period));
                None
            }
            ScenarioKind::Shear => {
                let s = cfg.shear;
                flow.u = LagrangeField::interpolate_vector(spaces.velocity.clone(), |_, y| [s.rate * (y - s.y_center), 0.0]);
                let bc = FlowBC::shear(s.rate, s.y_center);
                bc.validate(&mesh)?;
                Some(bc)
            }
        };
        let (dt, steps) = time_grid(cfg, &mesh);
        Ok(Problem {
            config: cfg.clone(),
            mesh,
            shape,
            dt,
            steps,
            initial: SimState::new(ls, flow)?,
            bc,
        })
    }

    pub fn initial_record(&self) -> Result<DiagRecord> {
        record(&self.initial, None, &self.config.params, 0)
    }

    /// Runs to the final time. `observe` sees each new state and its record
    /// and may stop early by returning `false`.
    pub fn run(
        &self,
        mut observe: impl FnMut(&SimState, &DiagRecord, Option<&StepReport>) -> Result<bool>,
    ) -> Result<(Vec<DiagRecord>, SimState)> {
        match &self.bc {
            Some(bc) => {
                let cc = coupling_config(&self.config, self.dt, self.steps);
                run_simulation(self.initial.clone(), &self.config.params, bc, &cc, |s, r, rep| observe(s, r, Some(rep)))
            }
            None => {
                let v = self.config.vortex;
                let params = self.config.params;
                let vel_space = self.initial.flow.spaces.velocity.clone();
                let mut state = self.initial.clone();
                let mut series = Vec::with_capacity(self.steps);
                vortex_transport(&self.initial.ls, v, self.dt, self.steps, self.config.coupling.supg_c, |step, ls| {
                    state.ls = ls.clone();
                    state.step = step;
                    state.t = ls.t;
                    state.flow.t = ls.t;
                    state.flow.u = LagrangeField::interpolate_vector(vel_space.clone(), |x, y| vortex_velocity(ls.t, x, y, v.psi, v.period));
                    let geo = geometry_fields(ls)?;
                    let area = enclosed_area(ls);
                    let p = perimeter(ls);
                    let r = DiagRecord {
                        t: ls.t,
                        area,
                        perimeter: p,
                        xi2d: if p > 0.0 { 4.0 * PI * area / (p * p) } else { f64::NAN },
                        theta: inclination_angle(ls).unwrap_or(f64::NAN),
                        bending_energy: bending_energy(ls, &geo, params.ca),
                        fp_iters: 0,
                        surf_div: surface_divergence(&state.flow.u, ls),
                    };
                    series.push(r);
                    observe(&state, &r, None)
                })?;
                Ok((series, state))
            }
        }
    }
}

/// Kinematic transport through the vortex with the velocity frozen at each
/// step's midpoint time. `each` runs after every step; returning `false`
/// stops early.
pub fn vortex_transport(
    initial: &LevelSetState,
    v: VortexSpec,
    dt: f64,
    steps: usize,
    supg_c: f64,
    mut each: impl FnMut(usize, &LevelSetState) -> Result<bool>,
) -> Result<LevelSetState> {
    let mut ls = initial.clone();
    for step in 1..=steps {
        let tm = ls.t + 0.5 * dt;
        let u = move |p: [f64; 2]| vortex_velocity(tm, p[0], p[1], v.psi, v.period);
        let mut next = transport_step_supg(&ls, Velocity::Analytic(&u), dt, supg_c)?;
        // Accumulated sums drift; pin the clock to the grid.
        next.t = initial.t + step as f64 * dt;
        ls = next;
        if !each(step, &ls)? {
            break;
        }
    }
    Ok(ls)
}

/// L² errors of `phi` against the interpolated and the exact initial level set.
pub fn vortex_errors(phi: &LagrangeField, phi0: &LagrangeField, shape: &Shape) -> (f64, f64) {
    (l2_norm(&phi.axpy(-1.0, phi0)), l2_error(phi, |p| shape.signed_distance(p)))
}
