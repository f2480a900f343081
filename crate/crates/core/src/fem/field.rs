use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::space::{LagrangeSpace, Tabulation};

/// Scalar or 2-vector finite-element function.
///
/// Vector coefficients are stored component-blocked: `coeffs[c * n + dof]`.
#[derive(Debug, Clone)]
pub struct LagrangeField {
    space: Arc<LagrangeSpace>,
    rank: usize,
    coeffs: Vec<f64>,
}

impl LagrangeField {
    pub fn zeros(space: Arc<LagrangeSpace>, rank: usize) -> Self {
        assert!(rank == 1 || rank == 2, "rank must be 1 or 2");
        let n = space.n_dofs() * rank;
        LagrangeField {
            space,
            rank,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(space: Arc<LagrangeSpace>, rank: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() * rank {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} dofs x rank {rank}",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(LagrangeField {
            space,
            rank,
            coeffs,
        })
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate(space: Arc<LagrangeSpace>, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = space.nodes().iter().map(|p| f(p[0], p[1])).collect();
        LagrangeField {
            space,
            rank: 1,
            coeffs,
        }
    }

    /// Nodal interpolant of a vector function.
    pub fn interpolate_vector(space: Arc<LagrangeSpace>, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let n = space.n_dofs();
        let mut coeffs = vec![0.0; 2 * n];
        for (i, p) in space.nodes().iter().enumerate() {
            let v = f(p[0], p[1]);
            coeffs[i] = v[0];
            coeffs[n + i] = v[1];
        }
        LagrangeField {
            space,
            rank: 2,
            coeffs,
        }
    }

    pub fn space(&self) -> &Arc<LagrangeSpace> {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.space.n_dofs();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.space.n_dofs();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub fn same_space(&self, other: &LagrangeField) -> bool {
        Arc::ptr_eq(&self.space, &other.space) && self.rank == other.rank
    }

    /// `self + a * other`, both on the same space.
    pub fn axpy(&self, a: f64, other: &LagrangeField) -> LagrangeField {
        assert!(self.same_space(other));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + a * y)
            .collect();
        LagrangeField {
            space: self.space.clone(),
            rank: self.rank,
            coeffs,
        }
    }

    pub fn scaled(&self, a: f64) -> LagrangeField {
        LagrangeField {
            space: self.space.clone(),
            rank: self.rank,
            coeffs: self.coeffs.iter().map(|x| a * x).collect(),
        }
    }

    /// Component values and physical gradients at tabulated points of `cell`.
    ///
    /// `tab` must be built from this field's element.
    pub fn eval_cell(
        &self,
        cell: usize,
        tab: &Tabulation,
        comp: usize,
        values: &mut [f64],
        grads: &mut [[f64; 2]],
    ) {
        let n = self.space.n_dofs();
        let dofs = self.space.cell_dofs(cell);
        let geo = self.space.mesh().geometry(cell);
        let c = &self.coeffs[comp * n..(comp + 1) * n];
        for q in 0..tab.n_points {
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            let bv = tab.values_at(q);
            let bg = tab.grads_at(q);
            for (i, &d) in dofs.iter().enumerate() {
                let a = c[d];
                v += a * bv[i];
                gx += a * bg[i][0];
                gy += a * bg[i][1];
            }
            values[q] = v;
            grads[q] = geo.grad([gx, gy]);
        }
    }

    /// Values only, at tabulated points of `cell`.
    pub fn eval_cell_values(&self, cell: usize, tab: &Tabulation, comp: usize, values: &mut [f64]) {
        let n = self.space.n_dofs();
        let dofs = self.space.cell_dofs(cell);
        let c = &self.coeffs[comp * n..(comp + 1) * n];
        for q in 0..tab.n_points {
            let bv = tab.values_at(q);
            values[q] = dofs.iter().enumerate().map(|(i, &d)| c[d] * bv[i]).sum();
        }
    }

    /// Point evaluation: one value per component, `None` outside the mesh.
    pub fn eval(&self, x: [f64; 2]) -> Option<Vec<f64>> {
        let (cell, xi) = self.space.mesh().locate(x)?;
        Some(self.eval_in_cell(cell, xi).0)
    }

    /// Point gradient: one gradient per component.
    pub fn gradient(&self, x: [f64; 2]) -> Option<Vec<[f64; 2]>> {
        let (cell, xi) = self.space.mesh().locate(x)?;
        Some(self.eval_in_cell(cell, xi).1)
    }

    /// Values and gradients at reference point `xi` of `cell`.
    pub fn eval_in_cell(&self, cell: usize, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let el = self.space.element();
        let nl = el.n_local();
        let mut bv = vec![0.0; nl];
        let mut bg = vec![[0.0; 2]; nl];
        el.eval(xi, &mut bv, &mut bg);
        let geo = self.space.mesh().geometry(cell);
        let dofs = self.space.cell_dofs(cell);
        let n = self.space.n_dofs();
        let mut vals = Vec::with_capacity(self.rank);
        let mut grads = Vec::with_capacity(self.rank);
        for comp in 0..self.rank {
            let c = &self.coeffs[comp * n..(comp + 1) * n];
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for (i, &d) in dofs.iter().enumerate() {
                v += c[d] * bv[i];
                gx += c[d] * bg[i][0];
                gy += c[d] * bg[i][1];
            }
            vals.push(v);
            grads.push(geo.grad([gx, gy]));
        }
        (vals, grads)
    }
}
