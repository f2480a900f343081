//! Error and norm functionals on Lagrange fields.

use crate::fem::assembly::integrate_cells;
use crate::fem::field::LagrangeField;

fn integrate_field(
    f: &LagrangeField,
    g: impl Fn([f64; 2], &[f64], &[[f64; 2]]) -> f64 + Sync,
) -> f64 {
    let space = f.space();
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let nq = rule.len();
    let rank = f.rank();
    integrate_cells(space.mesh(), &rule, |c, x, w| {
        let mut vals = vec![0.0; rank * nq];
        let mut grads = vec![[0.0; 2]; rank * nq];
        for comp in 0..rank {
            f.eval_cell(c, &tab, comp, &mut vals[comp * nq..(comp + 1) * nq], &mut grads[comp * nq..(comp + 1) * nq]);
        }
        let mut v = vec![0.0; rank];
        let mut gr = vec![[0.0; 2]; rank];
        let mut s = 0.0;
        for q in 0..nq {
            for comp in 0..rank {
                v[comp] = vals[comp * nq + q];
                gr[comp] = grads[comp * nq + q];
            }
            s += w[q] * g(x[q], &v, &gr);
        }
        s
    })
}

/// `‖f − exact‖_{L²}` for a scalar field.
pub fn l2_error(f: &LagrangeField, exact: impl Fn([f64; 2]) -> f64 + Sync) -> f64 {
    integrate_field(f, |x, v, _| (v[0] - exact(x)).powi(2)).sqrt()
}

/// `‖u − exact‖_{L²}` for a vector field.
pub fn l2_error_vector(u: &LagrangeField, exact: impl Fn([f64; 2]) -> [f64; 2] + Sync) -> f64 {
    integrate_field(u, |x, v, _| {
        let e = exact(x);
        (v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2)
    })
    .sqrt()
}

pub fn l2_norm(f: &LagrangeField) -> f64 {
    integrate_field(f, |_, v, _| v.iter().map(|a| a * a).sum()).sqrt()
}

/// `|f|_{H¹} = ‖∇f‖_{L²}` summed over components.
pub fn h1_seminorm(f: &LagrangeField) -> f64 {
    integrate_field(f, |_, _, g| g.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum()).sqrt()
}

/// Largest component magnitude over nodes and quadrature points.
pub fn linf_norm(f: &LagrangeField) -> f64 {
    let nodal = f.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let space = f.space();
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let mut vals = vec![0.0; rule.len()];
    let mut m = nodal;
    for c in 0..space.mesh().n_cells() {
        for comp in 0..f.rank() {
            f.eval_cell_values(c, &tab, comp, &mut vals);
            m = vals.iter().fold(m, |m, v| m.max(v.abs()));
        }
    }
    m
}
