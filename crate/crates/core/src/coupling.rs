//! Strongly coupled time stepping: fixed-point iteration between level-set
//! transport and the flow solve within each step.

use crate::diagnostics::{
    bending_energy, enclosed_area, inclination_angle, perimeter, surface_divergence, DiagRecord,
};
use crate::error::{Error, Result};
use crate::fem::{h1_seminorm, l2_norm, LagrangeField};
use crate::flow::{picard_solve, FlowBC, FlowState, Picard};
use crate::levelset::{geometry_fields, redistance, transport_step_supg, GeometryFields, LevelSetState, Velocity};
use crate::rheology::PhysParams;

/// Interface and flow at step `n`.
#[derive(Debug, Clone)]
pub struct SimState {
    pub ls: LevelSetState,
    pub flow: FlowState,
    pub step: usize,
    pub t: f64,
}

impl SimState {
    pub fn new(ls: LevelSetState, flow: FlowState) -> Result<Self> {
        if ls.space().mesh().vertices() != flow.spaces.mesh().vertices() {
            return Err(Error::Dimension("level set and flow live on different meshes".into()));
        }
        Ok(SimState {
            t: flow.t,
            ls,
            flow,
            step: 0,
        })
    }
}

/// How the rheology linearization is nested in the coupling loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PicardMode {
    /// Picard iterated to its tolerance inside every fixed-point iteration.
    #[default]
    Full,
    /// One Picard update per fixed-point iteration; the outer loop converges both.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub dt: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Redistance every this many steps; 0 disables.
    pub redistance_every: usize,
    /// Keep the last iterate when the fixed point stalls instead of failing.
    pub accept_unconverged: bool,
    /// Aitken relaxation of the velocity iterates.
    pub aitken: bool,
    pub picard: Picard,
    pub picard_mode: PicardMode,
    pub supg_c: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            dt: 0.01,
            t_final: 1.0,
            fp_tol: 1e-6,
            fp_max_iter: 50,
            redistance_every: 1,
            accept_unconverged: false,
            aitken: false,
            picard: Picard::default(),
            picard_mode: PicardMode::Full,
            supg_c: crate::levelset::transport::SUPG_C,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol < 1.0) {
            return Err(Error::param("fp_tol", format!("must lie in (0, 1), got {}", self.fp_tol)));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::param("fp_max_iter", "must be at least 1"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("t_final", format!("must be non-negative, got {}", self.t_final)));
        }
        Ok(())
    }

    /// Whole steps that fit in `t_final`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

/// `|u_new − u_old|_{H¹}/|u_old|_{H¹} + ‖φ_new − φ_old‖_{L²}/‖φ_old‖_{L²}`;
/// a vanishing denominator switches that addend to the absolute norm.
pub fn fixed_point_error(
    u_new: &LagrangeField,
    u_old: &LagrangeField,
    phi_new: &LagrangeField,
    phi_old: &LagrangeField,
) -> f64 {
    let rel = |diff: f64, base: f64| if base < 1e-14 { diff } else { diff / base };
    rel(h1_seminorm(&u_new.axpy(-1.0, u_old)), h1_seminorm(u_old))
        + rel(l2_norm(&phi_new.axpy(-1.0, phi_old)), l2_norm(phi_old))
}

/// Outcome of one coupled step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub iterations: usize,
    /// Fixed-point error after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Geometry of the accepted interface, before redistancing.
    pub geometry: GeometryFields,
}

/// One time step: alternate transport and flow until the fixed-point error
/// drops below `cfg.fp_tol`.
pub fn coupled_step(state: &SimState, params: &PhysParams, bc: &FlowBC, cfg: &CouplingConfig) -> Result<(SimState, StepReport)> {
    cfg.validate()?;
    let dt = cfg.dt;
    let picard = match cfg.picard_mode {
        PicardMode::Full => cfg.picard,
        PicardMode::Single => Picard {
            tol: f64::INFINITY,
            max_iter: 1,
        },
    };
    let mut flow_k = state.flow.clone();
    let mut ls_k = state.ls.clone();
    let mut trace = Vec::new();
    let mut aitken = Aitken::new();
    loop {
        let ls_next = transport_step_supg(&state.ls, Velocity::Field(&flow_k.u), dt, cfg.supg_c)?;
        let geo = geometry_fields(&ls_next)?;
        let mut flow_next = picard_solve(&state.flow, &flow_k, &ls_next, &geo, params, bc, dt, picard)?.state;
        if cfg.aitken {
            aitken.relax(&flow_k.u, &mut flow_next.u);
        }
        let e = fixed_point_error(&flow_next.u, &flow_k.u, &ls_next.phi, &ls_k.phi);
        trace.push(e);
        flow_k = flow_next;
        ls_k = ls_next;
        let converged = e < cfg.fp_tol;
        if converged || trace.len() >= cfg.fp_max_iter {
            if !converged && !cfg.accept_unconverged {
                return Err(Error::FixedPointNotConverged { trace });
            }
            let step = state.step + 1;
            let mut ls = ls_k;
            ls.t = state.t + dt;
            if cfg.redistance_every > 0 && step % cfg.redistance_every == 0 {
                ls = redistance(&ls)?;
            }
            let next = SimState {
                t: state.t + dt,
                ls,
                flow: flow_k,
                step,
            };
            let report = StepReport {
                iterations: trace.len(),
                trace,
                converged,
                geometry: geo,
            };
            return Ok((next, report));
        }
    }
}

/// Aitken's Δ² relaxation on the velocity coefficient vector.
struct Aitken {
    omega: f64,
    prev_residual: Option<Vec<f64>>,
}

impl Aitken {
    const OMEGA_0: f64 = 0.5;

    fn new() -> Self {
        Aitken {
            omega: Self::OMEGA_0,
            prev_residual: None,
        }
    }

    fn relax(&mut self, current: &LagrangeField, candidate: &mut LagrangeField) {
        let r: Vec<f64> = candidate.coeffs().iter().zip(current.coeffs()).map(|(a, b)| a - b).collect();
        if let Some(prev) = &self.prev_residual {
            let (mut num, mut den) = (0.0, 0.0);
            for (a, b) in prev.iter().zip(&r) {
                let d = b - a;
                num += a * d;
                den += d * d;
            }
            if den > 0.0 {
                self.omega = (-self.omega * num / den).clamp(0.05, 1.5);
            }
        }
        for ((c, cur), ri) in candidate.coeffs_mut().iter_mut().zip(current.coeffs()).zip(&r) {
            *c = cur + self.omega * ri;
        }
        self.prev_residual = Some(r);
    }
}

/// Diagnostics of a state; `geo` is recomputed when absent.
pub fn record(state: &SimState, geo: Option<&GeometryFields>, params: &PhysParams, fp_iters: usize) -> Result<DiagRecord> {
    let owned;
    let geo = match geo {
        Some(g) => g,
        None => {
            owned = geometry_fields(&state.ls)?;
            &owned
        }
    };
    let area = enclosed_area(&state.ls);
    let p = perimeter(&state.ls);
    Ok(DiagRecord {
        t: state.t,
        area,
        perimeter: p,
        xi2d: if p > 0.0 { 4.0 * std::f64::consts::PI * area / (p * p) } else { f64::NAN },
        theta: inclination_angle(&state.ls).unwrap_or(f64::NAN),
        bending_energy: bending_energy(&state.ls, geo, params.ca),
        fp_iters,
        surf_div: surface_divergence(&state.flow.u, &state.ls),
    })
}

/// Runs `cfg.n_steps()` coupled steps. `observe` sees every accepted state
/// with its record and report; it may stop the run early by returning `false`.
pub fn run_simulation(
    initial: SimState,
    params: &PhysParams,
    bc: &FlowBC,
    cfg: &CouplingConfig,
    mut observe: impl FnMut(&SimState, &DiagRecord, &StepReport) -> Result<bool>,
) -> Result<(Vec<DiagRecord>, SimState)> {
    cfg.validate()?;
    params.validate()?;
    let mut state = initial;
    let mut series = Vec::new();
    for _ in 0..cfg.n_steps() {
        let step = state.step + 1;
        let (next, report) = coupled_step(&state, params, bc, cfg).map_err(|e| Error::AtStep {
            step,
            source: Box::new(e),
        })?;
        state = next;
        let geo = if cfg.redistance_every > 0 && state.step % cfg.redistance_every == 0 {
            None
        } else {
            Some(&report.geometry)
        };
        let rec = record(&state, geo, params, report.iterations).map_err(|e| Error::AtStep {
            step,
            source: Box::new(e),
        })?;
        series.push(rec);
        if !observe(&state, &rec, &report)? {
            break;
        }
    }
    Ok((series, state))
}
