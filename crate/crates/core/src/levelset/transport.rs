//! SUPG-stabilized Crank–Nicolson transport of the level set.

use crate::error::{Error, Result};
use crate::fem::assembly::for_each_cell;
use crate::fem::{LagrangeField, QuadRule, Tabulation};
use crate::levelset::LevelSetState;
use crate::sparse::{CsrMatrix, DirectSolver, SparseSystem};

/// SUPG scale factor in `τ_K = C h_K / max(‖u‖_∞,K, tol/h_K)`.
pub const SUPG_C: f64 = 0.5;
pub const SUPG_TOL: f64 = 1e-10;

/// Advecting velocity: a finite-element field or an analytic function.
#[derive(Clone, Copy)]
pub enum Velocity<'a> {
    Field(&'a LagrangeField),
    Analytic(&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)),
}

impl std::fmt::Debug for Velocity<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Velocity::Field(u) => write!(f, "Velocity::Field(degree {})", u.degree()),
            Velocity::Analytic(_) => f.write_str("Velocity::Analytic"),
        }
    }
}

/// Evaluates a [`Velocity`] at the quadrature points of cells.
pub(crate) struct VelocitySampler<'a> {
    velocity: Velocity<'a>,
    tab: Option<Tabulation>,
    points: Vec<[f64; 2]>,
}

impl<'a> VelocitySampler<'a> {
    pub(crate) fn new(velocity: Velocity<'a>, rule: &QuadRule) -> Result<Self> {
        let tab = match velocity {
            Velocity::Field(u) => {
                if u.rank() != 2 {
                    return Err(Error::Dimension("velocity must be a vector field".into()));
                }
                Some(u.space().tabulate(rule))
            }
            Velocity::Analytic(_) => None,
        };
        Ok(VelocitySampler {
            velocity,
            tab,
            points: rule.points.clone(),
        })
    }

    pub(crate) fn sample(&self, cell: usize, geo: &crate::mesh::CellGeometry, out: &mut [[f64; 2]]) {
        match self.velocity {
            Velocity::Field(u) => {
                let tab = self.tab.as_ref().expect("tabulated");
                let n = u.space().n_dofs();
                let dofs = u.space().cell_dofs(cell);
                let c = u.coeffs();
                for (q, o) in out.iter_mut().enumerate() {
                    let bv = tab.values_at(q);
                    let (mut a, mut b) = (0.0, 0.0);
                    for (i, &d) in dofs.iter().enumerate() {
                        a += bv[i] * c[d];
                        b += bv[i] * c[n + d];
                    }
                    *o = [a, b];
                }
            }
            Velocity::Analytic(f) => {
                for (o, p) in out.iter_mut().zip(&self.points) {
                    *o = f(geo.map(*p));
                }
            }
        }
    }

    pub(crate) fn at(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        match self.velocity {
            Velocity::Field(u) => u.eval(x).map(|v| [v[0], v[1]]),
            Velocity::Analytic(f) => Some(f(x)),
        }
    }
}

/// Dofs on boundary edges where the velocity points into the domain.
pub(crate) fn inflow_dofs(state: &LevelSetState, sampler: &VelocitySampler) -> Vec<usize> {
    let space = state.space();
    let mut dofs: Vec<usize> = space
        .boundary_dofs()
        .iter()
        .filter(|b| {
            let x = space.nodes()[b.dof];
            sampler
                .at(x)
                .map(|u| u[0] * b.normal[0] + u[1] * b.normal[1] < -SUPG_TOL)
                .unwrap_or(false)
        })
        .map(|b| b.dof)
        .collect();
    dofs.sort_unstable();
    dofs.dedup();
    dofs
}

/// One Crank–Nicolson step of `∂_t φ + u·∇φ = 0` with SUPG test functions
/// `ψ + τ_K u·∇ψ`; inflow dofs take the state's boundary values.
pub fn transport_step(state: &LevelSetState, u: Velocity, dt: f64) -> Result<LevelSetState> {
    transport_step_supg(state, u, dt, SUPG_C)
}

/// [`transport_step`] with an explicit SUPG constant; `0` gives plain Galerkin.
pub fn transport_step_supg(state: &LevelSetState, u: Velocity, dt: f64, supg_c: f64) -> Result<LevelSetState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if !(supg_c >= 0.0 && supg_c.is_finite()) {
        return Err(Error::param("supg_c", format!("must be non-negative, got {supg_c}")));
    }
    let space = state.space();
    let mesh = space.mesh();
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let sampler = VelocitySampler::new(u, &rule)?;
    let nl = space.n_local();
    let nq = rule.len();
    let half = 0.5 * dt;

    let mut matrix = CsrMatrix::zeros(space.pattern());
    let mut rhs = vec![0.0; space.n_dofs()];
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let geo = mesh.geometry(c);
            let det = geo.det.abs();
            let mut vel = vec![[0.0; 2]; nq];
            sampler.sample(c, geo, &mut vel);
            let umax = vel.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
            let hk = mesh.diameter(c);
            let tau = supg_c * hk / umax.max(SUPG_TOL / hk);
            let mut pv = vec![0.0; nq];
            let mut pg = vec![[0.0; 2]; nq];
            state.phi.eval_cell(c, &tab, 0, &mut pv, &mut pg);

            let mut a = vec![0.0; nl * nl];
            let mut b = vec![0.0; nl];
            let mut adv = vec![0.0; nl];
            for q in 0..nq {
                let w = rule.weights[q] * det;
                let v = tab.values_at(q);
                let g = tab.grads_at(q);
                let uq = vel[q];
                for i in 0..nl {
                    let gi = geo.grad(g[i]);
                    adv[i] = uq[0] * gi[0] + uq[1] * gi[1];
                }
                let old = pv[q] - half * (uq[0] * pg[q][0] + uq[1] * pg[q][1]);
                for i in 0..nl {
                    let test = w * (v[i] + tau * adv[i]);
                    b[i] += test * old;
                    for j in 0..nl {
                        a[i * nl + j] += test * (v[j] + half * adv[j]);
                    }
                }
            }
            (a, b)
        },
        |c, (a, b)| {
            let dofs = space.cell_dofs(c);
            matrix.add_block(dofs, dofs, &a);
            for (i, &d) in dofs.iter().enumerate() {
                rhs[d] += b[i];
            }
        },
    );

    let mut system = SparseSystem::new(matrix, rhs)?;
    for d in inflow_dofs(state, &sampler) {
        system.constrain(d, state.boundary_values[d]);
    }
    let x = DirectSolver::new().solve(&mut system)?;
    let mut next = state.with_phi(LagrangeField::from_coeffs(space.clone(), 1, x)?);
    next.t = state.t + dt;
    Ok(next)
}
