//! Normal, curvature and surface curvature gradient by successive L²
//! projection, so no more than one derivative of a discrete field is taken
//! at a time.

use crate::error::{Error, Result};
use crate::fem::assembly::project;
use crate::fem::LagrangeField;
use crate::levelset::LevelSetState;

const GRAD_TOL: f64 = 1e-8;

/// Projected geometric fields, all on the level-set space.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    /// Unit normal extension.
    pub n: LagrangeField,
    /// Mean curvature `div_s n`.
    pub h: LagrangeField,
    /// `(I − n⊗n) ∇H`.
    pub grad_h_s: LagrangeField,
}

#[inline]
pub(crate) fn unit(v: [f64; 2]) -> [f64; 2] {
    let m = v[0].hypot(v[1]);
    if m > GRAD_TOL {
        [v[0] / m, v[1] / m]
    } else {
        [0.0, 0.0]
    }
}

pub fn geometry_fields(state: &LevelSetState) -> Result<GeometryFields> {
    let space = state.space();
    let mesh = space.mesh();
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let nq = rule.len();
    let band = 2.0 * state.eps;

    // degenerate gradients inside the band make the normal meaningless
    for c in 0..mesh.n_cells() {
        let mut v = vec![0.0; nq];
        let mut g = vec![[0.0; 2]; nq];
        state.phi.eval_cell(c, &tab, 0, &mut v, &mut g);
        if (0..nq).any(|q| v[q].abs() <= band && g[q][0].hypot(g[q][1]) <= GRAD_TOL) {
            return Err(Error::SingularGeometry { cell: c });
        }
    }

    let n = project(space, 2, &rule, |c, out| {
        let mut v = vec![0.0; nq];
        let mut g = vec![[0.0; 2]; nq];
        state.phi.eval_cell(c, &tab, 0, &mut v, &mut g);
        for q in 0..nq {
            let u = unit(g[q]);
            out[q] = u[0];
            out[nq + q] = u[1];
        }
    })?;

    let h = project(space, 1, &rule, |c, out| {
        let mut v = [vec![0.0; nq], vec![0.0; nq]];
        let mut g = [vec![[0.0; 2]; nq], vec![[0.0; 2]; nq]];
        for comp in 0..2 {
            n.eval_cell(c, &tab, comp, &mut v[comp], &mut g[comp]);
        }
        for q in 0..nq {
            let nh = unit([v[0][q], v[1][q]]);
            // tr((I − n̂⊗n̂)∇n) with (∇n)_{ij} = ∂_j n_i
            let div = g[0][q][0] + g[1][q][1];
            let mut nn = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    nn += nh[i] * g[i][q][j] * nh[j];
                }
            }
            out[q] = div - nn;
        }
    })?;

    let grad_h_s = project(space, 2, &rule, |c, out| {
        let mut nv = [vec![0.0; nq], vec![0.0; nq]];
        for comp in 0..2 {
            n.eval_cell_values(c, &tab, comp, &mut nv[comp]);
        }
        let mut hv = vec![0.0; nq];
        let mut hg = vec![[0.0; 2]; nq];
        h.eval_cell(c, &tab, 0, &mut hv, &mut hg);
        for q in 0..nq {
            let nh = unit([nv[0][q], nv[1][q]]);
            let gn = nh[0] * hg[q][0] + nh[1] * hg[q][1];
            out[q] = hg[q][0] - gn * nh[0];
            out[nq + q] = hg[q][1] - gn * nh[1];
        }
    })?;

    Ok(GeometryFields { n, h, grad_h_s })
}
