//! Taylor-Hood (P2/P1) momentum and continuity solve with a penalized
//! inextensibility constraint, bending force and Picard-lagged rheology.
//!
//! Unknowns are ordered `[u_x, u_y, p]`, followed by one pressure-mean
//! multiplier when no traction-free boundary exists.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fem::assembly::for_each_cell;
use crate::fem::{h1_seminorm, LagrangeField, LagrangeSpace, QuadRule, Tabulation};
use crate::levelset::geometry::unit;
use crate::levelset::kernels::dirac;
use crate::levelset::{geometry_fields, GeometryFields, LevelSetState};
use crate::mesh::{BoundaryTag, TriMesh};
use crate::rheology::{effective_viscosity, strain_rate, PhysParams};
use crate::sparse::{CsrMatrix, DirectSolver, Pattern, PatternBuilder, SparseSystem};

/// Velocity and pressure spaces on one mesh, with cached block patterns.
#[derive(Debug)]
pub struct FlowSpaces {
    pub velocity: Arc<LagrangeSpace>,
    pub pressure: Arc<LagrangeSpace>,
    patterns: [OnceLock<Arc<Pattern>>; 2],
    velocity_pattern: OnceLock<Arc<Pattern>>,
}

impl FlowSpaces {
    pub fn new(mesh: Arc<TriMesh>) -> Result<Arc<Self>> {
        Ok(Arc::new(FlowSpaces {
            velocity: LagrangeSpace::new(mesh.clone(), 2)?,
            pressure: LagrangeSpace::new(mesh, 1)?,
            patterns: [OnceLock::new(), OnceLock::new()],
            velocity_pattern: OnceLock::new(),
        }))
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        self.velocity.mesh()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.velocity.n_dofs()
    }

    /// System size, including the gauge multiplier if present.
    pub fn n_unknowns(&self, gauge: bool) -> usize {
        self.n_velocity() + self.pressure.n_dofs() + gauge as usize
    }

    fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let nv = self.velocity.n_dofs();
        let vd = self.velocity.cell_dofs(cell);
        vd.iter()
            .copied()
            .chain(vd.iter().map(|d| d + nv))
            .chain(self.pressure.cell_dofs(cell).iter().map(|d| d + 2 * nv))
            .collect()
    }

    fn pattern(&self, gauge: bool) -> Arc<Pattern> {
        self.patterns[gauge as usize]
            .get_or_init(|| {
                let n = self.n_unknowns(gauge);
                let mut b = PatternBuilder::new(n, n);
                for c in 0..self.mesh().n_cells() {
                    b.add_element(&self.cell_dofs(c));
                }
                if gauge {
                    let g = n - 1;
                    for p in self.n_velocity()..g {
                        b.add_entry(g, p);
                        b.add_entry(p, g);
                    }
                }
                b.build()
            })
            .clone()
    }

    fn velocity_block_pattern(&self) -> Arc<Pattern> {
        self.velocity_pattern
            .get_or_init(|| {
                let nv = self.velocity.n_dofs();
                let mut b = PatternBuilder::new(2 * nv, 2 * nv);
                for c in 0..self.mesh().n_cells() {
                    let vd = self.velocity.cell_dofs(c);
                    let dofs: Vec<usize> = vd.iter().copied().chain(vd.iter().map(|d| d + nv)).collect();
                    b.add_element(&dofs);
                }
                b.build()
            })
            .clone()
    }
}

/// Velocity (P2 vector) and pressure (P1) at time `t`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub spaces: Arc<FlowSpaces>,
    pub u: LagrangeField,
    pub p: LagrangeField,
    pub t: f64,
}

impl FlowState {
    pub fn zeros(spaces: Arc<FlowSpaces>) -> Self {
        FlowState {
            u: LagrangeField::zeros(spaces.velocity.clone(), 2),
            p: LagrangeField::zeros(spaces.pressure.clone(), 1),
            spaces,
            t: 0.0,
        }
    }

    /// Splits a solution vector `[u_x, u_y, p, (gauge)]`.
    fn from_solution(spaces: &Arc<FlowSpaces>, x: &[f64], t: f64) -> Result<Self> {
        let nv = spaces.n_velocity();
        let np = spaces.pressure.n_dofs();
        Ok(FlowState {
            u: LagrangeField::from_coeffs(spaces.velocity.clone(), 2, x[..nv].to_vec())?,
            p: LagrangeField::from_coeffs(spaces.pressure.clone(), 1, x[nv..nv + np].to_vec())?,
            spaces: spaces.clone(),
            t,
        })
    }
}

pub type BoundaryVelocity = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Boundary conditions by edge tag.
#[derive(Clone, Default)]
pub struct FlowBC {
    pub dirichlet: Vec<(BoundaryTag, BoundaryVelocity)>,
    /// Traction-free tags.
    pub neumann: Vec<BoundaryTag>,
}

impl std::fmt::Debug for FlowBC {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowBC")
            .field("dirichlet", &self.dirichlet.iter().map(|d| d.0).collect::<Vec<_>>())
            .field("neumann", &self.neumann)
            .finish()
    }
}

impl FlowBC {
    /// `u_b` on every edge tagged [`BoundaryTag::Dirichlet`].
    pub fn dirichlet(u_b: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        FlowBC {
            dirichlet: vec![(BoundaryTag::Dirichlet, Arc::new(u_b))],
            neumann: Vec::new(),
        }
    }

    /// Resting walls.
    pub fn quiescent() -> Self {
        Self::dirichlet(|_| [0.0, 0.0])
    }

    /// `u_b = (rate (y − y_c), 0)` on Dirichlet edges, traction-free Neumann edges.
    pub fn shear(rate: f64, y_center: f64) -> Self {
        FlowBC {
            dirichlet: vec![(BoundaryTag::Dirichlet, Arc::new(move |x: [f64; 2]| [rate * (x[1] - y_center), 0.0]))],
            neumann: vec![BoundaryTag::Neumann],
        }
    }

    /// Checks that every boundary edge of `mesh` has exactly one condition.
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        for e in mesh.boundary_edges() {
            let n = self.dirichlet.iter().filter(|d| d.0 == e.tag).count()
                + self.neumann.iter().filter(|t| **t == e.tag).count();
            if n != 1 {
                return Err(Error::InvalidGeometry(format!(
                    "boundary tag {:?} is covered by {n} conditions (need exactly one)",
                    e.tag
                )));
            }
        }
        Ok(())
    }

    fn has_traction_boundary(&self, mesh: &TriMesh) -> bool {
        mesh.boundary_edges().iter().any(|e| self.neumann.contains(&e.tag))
    }
}

/// Picard settings: relative H¹-seminorm change tolerance and iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Picard {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Picard {
    fn default() -> Self {
        Picard { tol: 1e-8, max_iter: 25 }
    }
}

/// Per-cell data shared by the assembly routines.
struct Context<'a> {
    spaces: &'a FlowSpaces,
    ls: &'a LevelSetState,
    geo: Option<&'a GeometryFields>,
    rule: Arc<QuadRule>,
    tv: Tabulation,
    tp: Tabulation,
    tl: Tabulation,
    pen_rule: Arc<QuadRule>,
    pen_tv: Tabulation,
    pen_tl: Tabulation,
}

impl<'a> Context<'a> {
    fn new(spaces: &'a FlowSpaces, ls: &'a LevelSetState, geo: Option<&'a GeometryFields>, penalty_order: usize) -> Result<Self> {
        if !Arc::ptr_eq(ls.space().mesh(), spaces.mesh()) && ls.space().mesh().vertices() != spaces.mesh().vertices() {
            return Err(Error::Dimension("level set and flow live on different meshes".into()));
        }
        let order = (2 * ls.space().degree() + 2).max(6);
        let rule = QuadRule::triangle(order);
        let pen_rule = QuadRule::triangle(penalty_order);
        Ok(Context {
            pen_tv: spaces.velocity.tabulate(&pen_rule),
            pen_tl: ls.space().tabulate(&pen_rule),
            pen_rule,
            tv: spaces.velocity.tabulate(&rule),
            tp: spaces.pressure.tabulate(&rule),
            tl: ls.space().tabulate(&rule),
            rule,
            spaces,
            ls,
            geo,
        })
    }
}

/// Velocity values `[q][comp]` and gradients `[q][comp][dir]`.
fn velocity_at(u: &LagrangeField, cell: usize, tab: &Tabulation) -> (Vec<[f64; 2]>, Vec<[[f64; 2]; 2]>) {
    let nq = tab.n_points;
    let mut v = vec![[0.0; 2]; nq];
    let mut g = vec![[[0.0; 2]; 2]; nq];
    let mut vals = vec![0.0; nq];
    let mut grads = vec![[0.0; 2]; nq];
    for comp in 0..2 {
        u.eval_cell(cell, tab, comp, &mut vals, &mut grads);
        for q in 0..nq {
            v[q][comp] = vals[q];
            g[q][comp] = grads[q];
        }
    }
    (v, g)
}

/// Local 2n_v × 2n_v viscous block `∫ 2η D(u):D(v)` for the velocity
/// basis with gradients `grads` (physical), scaled by `w`.
#[inline]
fn add_viscous(local: &mut [f64], stride: usize, grads: &[[f64; 2]], eta_w: f64) {
    let nl = grads.len();
    for c in 0..2 {
        for i in 0..nl {
            let gi = grads[i];
            let row = (c * nl + i) * stride;
            for d in 0..2 {
                for j in 0..nl {
                    let gj = grads[j];
                    // 2 D(N_i e_c):D(N_j e_d) = δ_cd ∇N_i·∇N_j + ∂_d N_i ∂_c N_j
                    let mut v = gi[d] * gj[c];
                    if c == d {
                        v += gi[0] * gj[0] + gi[1] * gj[1];
                    }
                    local[row + d * nl + j] += eta_w * v;
                }
            }
        }
    }
}

/// The assembled flow system for one Picard iterate.
///
/// `u_lag` supplies the viscosity and the advecting velocity at the new
/// level; `u_old` is the previous time level. Inertia and convection are
/// averaged between time levels; viscous, penalty, pressure and bending
/// terms act at the new level.
pub fn assemble_flow_system(
    u_lag: &FlowState,
    u_old: &FlowState,
    ls: &LevelSetState,
    geo: &GeometryFields,
    params: &PhysParams,
    bc: &FlowBC,
    dt: f64,
) -> Result<SparseSystem> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    params.validate()?;
    let spaces = &u_lag.spaces;
    if !Arc::ptr_eq(spaces, &u_old.spaces) {
        return Err(Error::Dimension("flow iterates use different spaces".into()));
    }
    if !geo.h.space().mesh().vertices().eq(ls.space().mesh().vertices()) || geo.h.space().n_dofs() != ls.space().n_dofs() {
        return Err(Error::Dimension("geometry fields do not match the level set".into()));
    }
    bc.validate(spaces.mesh())?;
    let gauge = !bc.has_traction_boundary(spaces.mesh());
    let ctx = Context::new(spaces, ls, Some(geo), params.penalty_quadrature)?;
    let n = spaces.n_unknowns(gauge);
    let nvd = spaces.velocity.n_dofs();
    let mut matrix = CsrMatrix::zeros(spaces.pattern(gauge));
    let mut rhs = vec![0.0; n];
    let mut gauge_col = vec![0.0; spaces.pressure.n_dofs()];

    let mesh = spaces.mesh();
    for_each_cell(
        mesh.n_cells(),
        |c| cell_system(&ctx, c, &u_lag.u, &u_old.u, params, dt),
        |c, (local, b, pmean)| {
            let dofs = spaces.cell_dofs(c);
            matrix.add_block(&dofs, &dofs, &local);
            for (i, &d) in dofs.iter().enumerate() {
                rhs[d] += b[i];
            }
            for (a, &d) in spaces.pressure.cell_dofs(c).iter().enumerate() {
                gauge_col[d] += pmean[a];
            }
        },
    );
    if gauge {
        let g = n - 1;
        for (d, v) in gauge_col.iter().enumerate() {
            matrix.add(g, 2 * nvd + d, *v);
            matrix.add(2 * nvd + d, g, *v);
        }
    }

    let mut system = SparseSystem::new(matrix, rhs)?;
    for (tag, u_b) in &bc.dirichlet {
        for d in spaces.velocity.dofs_with_tag(*tag) {
            let v = u_b(spaces.velocity.nodes()[d]);
            system.constrain(d, v[0]);
            system.constrain(d + nvd, v[1]);
        }
    }
    Ok(system)
}

/// Local matrix, right-hand side and `∫ q` for one cell.
fn cell_system(
    ctx: &Context,
    c: usize,
    u_lag: &LagrangeField,
    u_old: &LagrangeField,
    params: &PhysParams,
    dt: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let spaces = ctx.spaces;
    let geo_fields = ctx.geo.expect("full system needs geometry");
    let mesh = spaces.mesh();
    let geo = mesh.geometry(c);
    let det = geo.det.abs();
    let nl = spaces.velocity.n_local();
    let np = spaces.pressure.n_local();
    let nt = 2 * nl + np;
    let nq = ctx.rule.len();
    let eps = ctx.ls.eps;

    let mut phi = vec![0.0; nq];
    let mut gphi = vec![[0.0; 2]; nq];
    ctx.ls.phi.eval_cell(c, &ctx.tl, 0, &mut phi, &mut gphi);
    let (ul, gul) = velocity_at(u_lag, c, &ctx.tv);
    let (uo, guo) = velocity_at(u_old, c, &ctx.tv);

    // membrane data only where the kernel is active
    let in_band = phi.iter().any(|p| p.abs() < eps);
    let mut nvec = vec![[0.0; 2]; nq];
    let mut gn = vec![[[0.0; 2]; 2]; nq];
    let mut hv = vec![0.0; nq];
    let mut ghs = vec![[0.0; 2]; nq];
    if in_band {
        let (a, b) = velocity_at(&geo_fields.n, c, &ctx.tl);
        nvec = a;
        gn = b;
        geo_fields.h.eval_cell_values(c, &ctx.tl, 0, &mut hv);
        let mut tmp = vec![0.0; nq];
        for comp in 0..2 {
            geo_fields.grad_h_s.eval_cell_values(c, &ctx.tl, comp, &mut tmp);
            for q in 0..nq {
                ghs[q][comp] = tmp[q];
            }
        }
    }

    let mut local = vec![0.0; nt * nt];
    let mut b = vec![0.0; nt];
    let mut pmean = vec![0.0; np];
    let mut grads = vec![[0.0; 2]; nl];
    let bend = 1.0 / (2.0 * params.ca);
    let re = params.re;
    for q in 0..nq {
        let w = ctx.rule.weights[q] * det;
        let nv = ctx.tv.values_at(q);
        for (g, r) in grads.iter_mut().zip(ctx.tv.grads_at(q)) {
            *g = geo.grad(*r);
        }
        let pv = ctx.tp.values_at(q);
        for a in 0..np {
            pmean[a] += w * pv[a];
        }

        // inertia and convection
        let ulq = ul[q];
        let adv: Vec<f64> = grads.iter().map(|g| ulq[0] * g[0] + ulq[1] * g[1]).collect();
        for i in 0..nl {
            for j in 0..nl {
                let v = w * re * nv[i] * (nv[j] / dt + 0.5 * adv[j]);
                local[i * nt + j] += v;
                local[(nl + i) * nt + nl + j] += v;
            }
        }
        let uoq = uo[q];
        for comp in 0..2 {
            let conv = uoq[0] * guo[q][comp][0] + uoq[1] * guo[q][comp][1];
            let f = w * re * (uoq[comp] / dt - 0.5 * conv);
            for i in 0..nl {
                b[comp * nl + i] += f * nv[i];
            }
        }

        // viscous
        let eta = effective_viscosity(phi[q], &strain_rate(&gul[q]), params);
        add_viscous(&mut local, nt, &grads, w * eta);

        // pressure and continuity
        for a in 0..np {
            for comp in 0..2 {
                for i in 0..nl {
                    let v = -w * pv[a] * grads[i][comp];
                    local[(comp * nl + i) * nt + 2 * nl + a] += v;
                    local[(2 * nl + a) * nt + comp * nl + i] += v;
                }
            }
        }

        // membrane terms
        let d = if in_band { dirac(phi[q], eps) } else { 0.0 };
        if d == 0.0 {
            continue;
        }
        let s = w * d * gphi[q][0].hypot(gphi[q][1]);
        let nh = unit(nvec[q]);
        let h = hv[q];
        let gh = ghs[q];
        let nf = nvec[q];
        for comp in 0..2 {
            for i in 0..nl {
                // ∇(n·v) for v = N_i e_c, then its tangential part
                let g = [
                    nv[i] * gn[q][comp][0] + nf[comp] * grads[i][0],
                    nv[i] * gn[q][comp][1] + nf[comp] * grads[i][1],
                ];
                let gnn = nh[0] * g[0] + nh[1] * g[1];
                let gs = [g[0] - gnn * nh[0], g[1] - gnn * nh[1]];
                let term = 2.0 * (gh[0] * gs[0] + gh[1] * gs[1]) - h * h * h * nf[comp] * nv[i];
                b[comp * nl + i] -= bend * s * term;
            }
        }
    }
    if in_band {
        add_penalty(ctx, c, &mut local, nt, params.eps_lambda);
    }
    (local, b, pmean)
}

/// Inextensibility penalty `(1/ε_λ) ∫ δ_ε|∇φ| div_s u div_s v` on the
/// velocity block of one cell.
fn add_penalty(ctx: &Context, c: usize, local: &mut [f64], nt: usize, eps_lambda: f64) {
    let geo_fields = ctx.geo.expect("penalty needs geometry");
    let geo = ctx.spaces.mesh().geometry(c);
    let det = geo.det.abs();
    let nl = ctx.spaces.velocity.n_local();
    let nq = ctx.pen_rule.len();
    let mut phi = vec![0.0; nq];
    let mut gphi = vec![[0.0; 2]; nq];
    ctx.ls.phi.eval_cell(c, &ctx.pen_tl, 0, &mut phi, &mut gphi);
    let (nvec, _) = velocity_at(&geo_fields.n, c, &ctx.pen_tl);
    let mut divs = vec![0.0; 2 * nl];
    for q in 0..nq {
        let d = dirac(phi[q], ctx.ls.eps);
        if d == 0.0 {
            continue;
        }
        let pen = ctx.pen_rule.weights[q] * det * d * gphi[q][0].hypot(gphi[q][1]) / eps_lambda;
        let nh = unit(nvec[q]);
        // div_s(N e_c) = ∂_c N − n̂_c (n̂·∇N)
        for (i, r) in ctx.pen_tv.grads_at(q).iter().enumerate() {
            let g = geo.grad(*r);
            let nd = nh[0] * g[0] + nh[1] * g[1];
            for comp in 0..2 {
                divs[comp * nl + i] = g[comp] - nh[comp] * nd;
            }
        }
        for r in 0..2 * nl {
            for k in 0..2 * nl {
                local[r * nt + k] += pen * divs[r] * divs[k];
            }
        }
    }
}

/// Viscous block `∫ 2η D(u):D(v)` alone, with η lagged at `u_lag`.
pub fn viscous_matrix(u_lag: &FlowState, ls: &LevelSetState, params: &PhysParams) -> Result<CsrMatrix> {
    let spaces = &u_lag.spaces;
    let ctx = Context::new(spaces, ls, None, params.penalty_quadrature)?;
    let mesh = spaces.mesh();
    let nl = spaces.velocity.n_local();
    let nvd = spaces.velocity.n_dofs();
    let nq = ctx.rule.len();
    let mut m = CsrMatrix::zeros(spaces.velocity_block_pattern());
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let geo = mesh.geometry(c);
            let mut phi = vec![0.0; nq];
            ls.phi.eval_cell_values(c, &ctx.tl, 0, &mut phi);
            let (_, gul) = velocity_at(&u_lag.u, c, &ctx.tv);
            let mut local = vec![0.0; 4 * nl * nl];
            for q in 0..nq {
                let grads: Vec<[f64; 2]> = ctx.tv.grads_at(q).iter().map(|g| geo.grad(*g)).collect();
                let eta = effective_viscosity(phi[q], &strain_rate(&gul[q]), params);
                add_viscous(&mut local, 2 * nl, &grads, ctx.rule.weights[q] * geo.det.abs() * eta);
            }
            local
        },
        |c, local| {
            let vd = spaces.velocity.cell_dofs(c);
            let dofs: Vec<usize> = vd.iter().copied().chain(vd.iter().map(|d| d + nvd)).collect();
            m.add_block(&dofs, &dofs, &local);
        },
    );
    Ok(m)
}

/// Constant-viscosity block `μ ∫ (∇u:∇v + ∇u:∇vᵀ)` from the plain gradient form.
pub fn stokes_viscous_matrix(spaces: &FlowSpaces, mu: f64) -> CsrMatrix {
    let v = &spaces.velocity;
    let mesh = spaces.mesh();
    let rule = v.default_rule();
    let tab = v.tabulate(&rule);
    let nl = v.n_local();
    let nvd = v.n_dofs();
    let mut m = CsrMatrix::zeros(spaces.velocity_block_pattern());
    for c in 0..mesh.n_cells() {
        let geo = mesh.geometry(c);
        let vd = v.cell_dofs(c);
        for q in 0..rule.len() {
            let w = mu * rule.weights[q] * geo.det.abs();
            let g: Vec<[f64; 2]> = tab.grads_at(q).iter().map(|r| geo.grad(*r)).collect();
            for i in 0..nl {
                for j in 0..nl {
                    let lap = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    for a in 0..2 {
                        for bb in 0..2 {
                            let mut val = g[i][bb] * g[j][a];
                            if a == bb {
                                val += lap;
                            }
                            m.add(vd[i] + a * nvd, vd[j] + bb * nvd, w * val);
                        }
                    }
                }
            }
        }
    }
    m
}

/// Result of a Picard solve: the new state and the per-iteration relative changes.
#[derive(Debug, Clone)]
pub struct FlowSolve {
    pub state: FlowState,
    pub history: Vec<f64>,
}

/// Picard iteration starting from `guess`, with `state_old` the previous
/// time level. The iteration stops once the H¹-seminorm change of `u`,
/// relative to `max(|u|_{H¹}, 1)`, falls to `picard.tol`.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve(
    state_old: &FlowState,
    guess: &FlowState,
    ls: &LevelSetState,
    geo: &GeometryFields,
    params: &PhysParams,
    bc: &FlowBC,
    dt: f64,
    picard: Picard,
) -> Result<FlowSolve> {
    if picard.max_iter == 0 {
        return Err(Error::param("picard.max_iter", "must be at least 1"));
    }
    let t = state_old.t + dt;
    let mut lag = guess.clone();
    let mut history = Vec::new();
    for _ in 0..picard.max_iter {
        let mut system = assemble_flow_system(&lag, state_old, ls, geo, params, bc, dt)?;
        let x = DirectSolver::new().solve(&mut system)?;
        let next = FlowState::from_solution(&state_old.spaces, &x, t)?;
        let diff = h1_seminorm(&next.u.axpy(-1.0, &lag.u));
        let norm = h1_seminorm(&next.u);
        // velocities are scaled to O(1); nearly resting fields use the absolute change
        let change = diff / norm.max(1.0);
        history.push(change);
        lag = next;
        if change <= picard.tol || stagnated(&history, picard.tol) {
            return Ok(FlowSolve { state: lag, history });
        }
    }
    Err(Error::PicardNotConverged { history })
}

/// The change has stopped shrinking within a hundred times the tolerance:
/// further iterates only reshuffle linear-solver roundoff, which the stiff
/// penalty term lifts to ~1e-8.
fn stagnated(history: &[f64], tol: f64) -> bool {
    match history {
        [.., a, b] => *b <= 100.0 * tol && *b > 0.5 * a,
        _ => false,
    }
}

/// One time step of the flow for a given interface.
pub fn flow_step(
    state_old: &FlowState,
    ls: &LevelSetState,
    params: &PhysParams,
    bc: &FlowBC,
    dt: f64,
    picard: Picard,
) -> Result<FlowState> {
    let geo = geometry_fields(ls)?;
    picard_solve(state_old, state_old, ls, &geo, params, bc, dt, picard).map(|s| s.state)
}

/// `‖∫ q div u‖` over all pressure test functions.
pub fn continuity_residual(state: &FlowState) -> f64 {
    let spaces = &state.spaces;
    let mesh = spaces.mesh();
    let rule = spaces.velocity.default_rule();
    let tv = spaces.velocity.tabulate(&rule);
    let tp = spaces.pressure.tabulate(&rule);
    let mut r = vec![0.0; spaces.pressure.n_dofs()];
    for c in 0..mesh.n_cells() {
        let (_, g) = velocity_at(&state.u, c, &tv);
        let det = mesh.geometry(c).det.abs();
        for q in 0..rule.len() {
            let div = g[q][0][0] + g[q][1][1];
            for (a, &d) in spaces.pressure.cell_dofs(c).iter().enumerate() {
                r[d] += rule.weights[q] * det * tp.values_at(q)[a] * div;
            }
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `∫ T:D(u) dx` with `T = 2η D(u)`.
pub fn dissipation(state: &FlowState, ls: &LevelSetState, params: &PhysParams) -> Result<f64> {
    let spaces = &state.spaces;
    let ctx = Context::new(spaces, ls, None, params.penalty_quadrature)?;
    let mesh = spaces.mesh();
    let nq = ctx.rule.len();
    let mut total = 0.0;
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let mut phi = vec![0.0; nq];
            ls.phi.eval_cell_values(c, &ctx.tl, 0, &mut phi);
            let (_, g) = velocity_at(&state.u, c, &ctx.tv);
            let det = mesh.geometry(c).det.abs();
            (0..nq)
                .map(|q| {
                    let d = strain_rate(&g[q]);
                    let eta = effective_viscosity(phi[q], &d, params);
                    let dd: f64 = d.iter().flatten().map(|v| v * v).sum();
                    ctx.rule.weights[q] * det * 2.0 * eta * dd
                })
                .sum::<f64>()
        },
        |_, v| total += v,
    );
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::l2_error_vector;
    use crate::mesh::{build_structured_mesh, uniform_tags, Rect};

    fn spaces(n: usize) -> Arc<FlowSpaces> {
        let m = build_structured_mesh(n, n, Rect::UNIT, uniform_tags(BoundaryTag::Dirichlet)).unwrap();
        FlowSpaces::new(Arc::new(m)).unwrap()
    }

    /// A level set with no interface in the domain.
    fn no_membrane(s: &FlowSpaces, eps: f64) -> LevelSetState {
        let ls_space = LagrangeSpace::new(s.mesh().clone(), 2).unwrap();
        LevelSetState::new(LagrangeField::interpolate(ls_space, |_, _| 1.0), eps).unwrap()
    }

    fn params(upsilon: f64) -> PhysParams {
        PhysParams {
            re: 1.0,
            ca: 1.0,
            upsilon,
            eps: 0.1,
            ..PhysParams::default()
        }
    }

    #[test]
    fn couette_is_exact_for_any_power_index() {
        for ups in [1.0, 0.7755] {
            let s = spaces(4);
            let ls = no_membrane(&s, 0.1);
            let bc = FlowBC::dirichlet(|x| [x[1] - 0.5, 0.0]);
            let mut old = FlowState::zeros(s.clone());
            old.u = LagrangeField::interpolate_vector(s.velocity.clone(), |_, y| [y - 0.5, 0.0]);
            let rest = FlowState::zeros(s.clone());
            let geo = geometry_fields(&ls).unwrap();
            // the steady profile is reached from a resting Picard guess
            let sol = picard_solve(&old, &rest, &ls, &geo, &params(ups), &bc, 0.1, Picard::default()).unwrap();
            let err = l2_error_vector(&sol.state.u, |x| [x[1] - 0.5, 0.0]);
            assert!(err < 1e-8, "ups={ups}: {err}");
            assert!(sol.history.len() <= 5, "{:?}", sol.history);
        }
    }

    #[test]
    fn rest_state_is_unique() {
        let s = spaces(3);
        let ls = no_membrane(&s, 0.1);
        let st = flow_step(&FlowState::zeros(s.clone()), &ls, &params(1.0), &FlowBC::quiescent(), 0.1, Picard::default()).unwrap();
        assert!(st.u.coeffs().iter().chain(st.p.coeffs()).all(|v| v.abs() < 1e-12));
        assert!((st.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn newtonian_viscous_block_matches_stokes() {
        let m = build_structured_mesh(1, 1, Rect::UNIT, uniform_tags(BoundaryTag::Dirichlet)).unwrap();
        let s = FlowSpaces::new(Arc::new(m)).unwrap();
        let ls = no_membrane(&s, 0.1);
        let mut st = FlowState::zeros(s.clone());
        // an arbitrary lag field must not matter when υ = 1
        st.u = LagrangeField::interpolate_vector(s.velocity.clone(), |x, y| [x * y, x - y * y]);
        let p = PhysParams {
            beta: 1.0,
            ..params(1.0)
        };
        let a = viscous_matrix(&st, &ls, &p).unwrap();
        let b = stokes_viscous_matrix(&s, 1.0);
        let worst = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn bc_coverage_checked() {
        let s = spaces(2);
        let bc = FlowBC {
            dirichlet: vec![],
            neumann: vec![],
        };
        assert!(bc.validate(s.mesh()).is_err());
        let twice = FlowBC {
            dirichlet: FlowBC::quiescent().dirichlet,
            neumann: vec![BoundaryTag::Dirichlet],
        };
        assert!(twice.validate(s.mesh()).is_err());
        assert!(FlowBC::quiescent().validate(s.mesh()).is_ok());
    }

    #[test]
    fn pressure_has_zero_mean_without_traction_boundary() {
        let s = spaces(4);
        // a body-force-free but inertial transient: start from a non-solenoidal field
        let ls = no_membrane(&s, 0.1);
        let mut old = FlowState::zeros(s.clone());
        old.u = LagrangeField::interpolate_vector(s.velocity.clone(), |x, y| {
            let b = x * (1.0 - x) * y * (1.0 - y);
            [b, 2.0 * b]
        });
        let st = flow_step(&old, &ls, &params(1.0), &FlowBC::quiescent(), 0.05, Picard::default()).unwrap();
        let mean = crate::fem::integrate_cells(s.mesh(), &s.pressure.default_rule(), |c, _, w| {
            let mut v = vec![0.0; w.len()];
            st.p.eval_cell_values(c, &s.pressure.tabulate(&s.pressure.default_rule()), 0, &mut v);
            v.iter().zip(w).map(|(a, b)| a * b).sum()
        });
        assert!(mean.abs() < 1e-10, "{mean}");
        assert!(st.p.coeffs().iter().any(|v| v.abs() > 1e-6));
        assert!(continuity_residual(&st) < 1e-9, "{}", continuity_residual(&st));
        assert!(dissipation(&st, &ls, &params(1.0)).unwrap() >= 0.0);
    }
}
