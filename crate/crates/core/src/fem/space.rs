use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::fem::lagrange::RefElement;
use crate::fem::quadrature::QuadRule;
use crate::mesh::{BoundaryTag, TriMesh, LOCAL_EDGES};
use crate::sparse::Pattern;

/// A boundary degree of freedom seen from one adjacent boundary edge.
/// Corner nodes appear once per adjacent edge.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryDof {
    pub dof: usize,
    pub tag: BoundaryTag,
    /// Outward unit normal of the edge.
    pub normal: [f64; 2],
}

/// Scalar degree-`k` Lagrange space with a global dof map.
///
/// Numbering: vertices first, then `k-1` nodes per edge running from the
/// lower to the higher global vertex index, then cell-interior nodes.
#[derive(Debug)]
pub struct LagrangeSpace {
    mesh: Arc<TriMesh>,
    element: Arc<RefElement>,
    cell_dofs: Vec<usize>,
    nodes: Vec<[f64; 2]>,
    boundary: Vec<BoundaryDof>,
    pub(crate) mass: OnceLock<crate::fem::assembly::MassSolver>,
    pattern: OnceLock<Arc<Pattern>>,
}

impl LagrangeSpace {
    pub fn new(mesh: Arc<TriMesh>, degree: usize) -> Result<Arc<Self>> {
        let element = RefElement::get(degree)?;
        let k = degree;
        let nloc = element.n_local();
        let nv = mesh.vertices().len();
        let ne = mesh.edges().len();
        let n_int = element.n_interior();
        let n_dofs = nv + ne * (k - 1) + mesh.n_cells() * n_int;

        let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * nloc);
        let mut nodes = vec![[f64::NAN; 2]; n_dofs];
        for (c, cell) in mesh.cells().iter().enumerate() {
            let start = cell_dofs.len();
            cell_dofs.extend_from_slice(cell);
            let edges = mesh.cell_edges(c);
            for (e, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let base = nv + edges[e] * (k - 1);
                let forward = cell[*a] < cell[*b];
                for m in 0..k - 1 {
                    let m = if forward { m } else { k - 2 - m };
                    cell_dofs.push(base + m);
                }
            }
            let base = nv + ne * (k - 1) + c * n_int;
            cell_dofs.extend(base..base + n_int);
            let geo = mesh.geometry(c);
            for (i, xi) in element.nodes().iter().enumerate() {
                nodes[cell_dofs[start + i]] = geo.map(*xi);
            }
        }

        // boundary dofs with outward normals
        let mut boundary = Vec::new();
        for (c, cell) in mesh.cells().iter().enumerate() {
            let edges = mesh.cell_edges(c);
            for (e, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let Some(tag) = mesh.edge_tag(edges[e]) else {
                    continue;
                };
                let p = mesh.vertices()[cell[*a]];
                let q = mesh.vertices()[cell[*b]];
                let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                // counter-clockwise cells: outward normal is the edge rotated clockwise
                let normal = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
                let local = std::iter::once(*a)
                    .chain(std::iter::once(*b))
                    .chain((0..k - 1).map(|m| 3 + e * (k - 1) + m));
                for l in local {
                    boundary.push(BoundaryDof {
                        dof: cell_dofs[c * nloc + l],
                        tag,
                        normal,
                    });
                }
            }
        }

        Ok(Arc::new(LagrangeSpace {
            mesh,
            element,
            cell_dofs,
            nodes,
            boundary,
            mass: OnceLock::new(),
            pattern: OnceLock::new(),
        }))
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn element(&self) -> &RefElement {
        &self.element
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn n_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_local(&self) -> usize {
        self.element.n_local()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let n = self.n_local();
        &self.cell_dofs[cell * n..(cell + 1) * n]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn boundary_dofs(&self) -> &[BoundaryDof] {
        &self.boundary
    }

    /// Distinct dofs on edges carrying `tag`.
    pub fn dofs_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut d: Vec<usize> = self
            .boundary
            .iter()
            .filter(|b| b.tag == tag)
            .map(|b| b.dof)
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Cell-coupling sparsity of scalar forms on this space.
    pub fn pattern(&self) -> Arc<Pattern> {
        self.pattern
            .get_or_init(|| crate::fem::assembly::scalar_pattern(self))
            .clone()
    }

    pub fn tabulate(&self, rule: &QuadRule) -> Tabulation {
        Tabulation::new(&self.element, rule)
    }

    /// Default rule for forms built from degree-k fields: order `2k+2`.
    pub fn default_rule(&self) -> Arc<QuadRule> {
        QuadRule::triangle(2 * self.degree() + 2)
    }
}

/// Basis values and reference gradients at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_local: usize,
    pub n_points: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(element: &RefElement, rule: &QuadRule) -> Self {
        Self::at_points(element, &rule.points)
    }

    pub fn at_points(element: &RefElement, points: &[[f64; 2]]) -> Self {
        let n = element.n_local();
        let mut values = vec![0.0; n * points.len()];
        let mut grads = vec![[0.0; 2]; n * points.len()];
        for (q, p) in points.iter().enumerate() {
            element.eval(*p, &mut values[q * n..(q + 1) * n], &mut grads[q * n..(q + 1) * n]);
        }
        Tabulation {
            n_local: n,
            n_points: points.len(),
            values,
            grads,
        }
    }

    #[inline]
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_local..(q + 1) * self.n_local]
    }

    #[inline]
    pub fn grads_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_local..(q + 1) * self.n_local]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, uniform_tags, Rect};

    fn mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(build_structured_mesh(n, n, Rect::UNIT, uniform_tags(BoundaryTag::Dirichlet)).unwrap())
    }

    #[test]
    fn dof_counts_on_two_cells() {
        let m = mesh(1);
        assert_eq!(LagrangeSpace::new(m.clone(), 1).unwrap().n_dofs(), 4);
        assert_eq!(LagrangeSpace::new(m.clone(), 2).unwrap().n_dofs(), 9);
        assert_eq!(LagrangeSpace::new(m.clone(), 3).unwrap().n_dofs(), 16);
        assert_eq!(LagrangeSpace::new(m, 4).unwrap().n_dofs(), 25);
    }

    #[test]
    fn structured_counts_match_lattice() {
        for k in 1..=4 {
            let s = LagrangeSpace::new(mesh(5), k).unwrap();
            assert_eq!(s.n_dofs(), (5 * k + 1) * (5 * k + 1));
        }
    }

    #[test]
    fn shared_nodes_have_one_index() {
        for k in 1..=4 {
            let s = LagrangeSpace::new(mesh(4), k).unwrap();
            // every global node coordinate must be unique
            let mut pts: Vec<(i64, i64)> = s
                .nodes()
                .iter()
                .map(|p| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64))
                .collect();
            let n = pts.len();
            pts.sort_unstable();
            pts.dedup();
            assert_eq!(pts.len(), n, "k={k}");
            // and every cell-local node maps to the same coordinate as its global dof
            for c in 0..s.mesh().n_cells() {
                let geo = s.mesh().geometry(c);
                for (i, &d) in s.cell_dofs(c).iter().enumerate() {
                    let x = geo.map(s.element().nodes()[i]);
                    assert!((x[0] - s.nodes()[d][0]).abs() < 1e-14);
                    assert!((x[1] - s.nodes()[d][1]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn numbering_is_deterministic() {
        let a = LagrangeSpace::new(mesh(3), 3).unwrap();
        let b = LagrangeSpace::new(mesh(3), 3).unwrap();
        assert_eq!(a.cell_dofs, b.cell_dofs);
    }

    #[test]
    fn boundary_normals_point_outward() {
        let s = LagrangeSpace::new(mesh(3), 2).unwrap();
        for b in s.boundary_dofs() {
            let p = s.nodes()[b.dof];
            let inward = [p[0] - 0.5, p[1] - 0.5];
            assert!(b.normal[0] * inward[0] + b.normal[1] * inward[1] > 0.0);
        }
        assert_eq!(s.dofs_with_tag(BoundaryTag::Dirichlet).len(), 4 * 6);
    }
}
