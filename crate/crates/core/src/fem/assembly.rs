//! Cell loops, quadrature integration and L² projection.
//!
//! Element work is computed in fixed-size chunks (optionally on a rayon pool)
//! and scattered strictly in cell order, so the result is bit-identical for
//! any thread count.

use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::fem::field::LagrangeField;
use crate::fem::quadrature::QuadRule;
use crate::fem::space::LagrangeSpace;
use crate::mesh::TriMesh;
use crate::sparse::{CholeskySolver, CsrMatrix, PatternBuilder, Pattern};

const CHUNK: usize = 512;

/// Number of assembly threads, read once from `VESIFLOW_THREADS` (default 1).
pub fn assembly_threads() -> usize {
    static N: OnceLock<usize> = OnceLock::new();
    *N.get_or_init(|| {
        std::env::var("VESIFLOW_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(1)
    })
}

#[cfg(feature = "parallel")]
fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = assembly_threads();
        if n <= 1 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
    .as_ref()
}

/// Computes `compute(cell)` for every cell and feeds the results to
/// `scatter` in ascending cell order.
pub fn for_each_cell<T, C, S>(n_cells: usize, compute: C, mut scatter: S)
where
    T: Send,
    C: Fn(usize) -> T + Sync,
    S: FnMut(usize, T),
{
    #[cfg(feature = "parallel")]
    if let Some(pool) = pool() {
        use rayon::prelude::*;
        let mut start = 0;
        while start < n_cells {
            let end = (start + CHUNK * pool.current_num_threads()).min(n_cells);
            let block: Vec<T> = pool.install(|| (start..end).into_par_iter().map(&compute).collect());
            for (i, v) in block.into_iter().enumerate() {
                scatter(start + i, v);
            }
            start = end;
        }
        return;
    }
    for c in 0..n_cells {
        scatter(c, compute(c));
    }
}

/// Sums per-cell contributions in cell order.
pub fn sum_cells(n_cells: usize, compute: impl Fn(usize) -> f64 + Sync) -> f64 {
    let mut total = 0.0;
    for_each_cell(n_cells, compute, |_, v| total += v);
    total
}

/// Physical quadrature points and weights (`w_q |det J|`) of one cell.
pub fn cell_points(mesh: &TriMesh, cell: usize, rule: &QuadRule) -> (Vec<[f64; 2]>, Vec<f64>) {
    let geo = mesh.geometry(cell);
    let det = geo.det.abs();
    let x = rule.points.iter().map(|p| geo.map(*p)).collect();
    let w = rule.weights.iter().map(|w| w * det).collect();
    (x, w)
}

/// `∫_Λ f dx` with a rule exact to `quad_order`.
pub fn integrate(mesh: &TriMesh, quad_order: usize, f: impl Fn([f64; 2]) -> f64 + Sync) -> f64 {
    let rule = QuadRule::triangle(quad_order);
    sum_cells(mesh.n_cells(), |c| {
        let (x, w) = cell_points(mesh, c, &rule);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
    })
}

/// Cell-wise integration: `f(cell, points, weights)` returns the contribution
/// of `cell`. Use this when the integrand needs finite-element fields.
pub fn integrate_cells(
    mesh: &TriMesh,
    rule: &QuadRule,
    f: impl Fn(usize, &[[f64; 2]], &[f64]) -> f64 + Sync,
) -> f64 {
    sum_cells(mesh.n_cells(), |c| {
        let (x, w) = cell_points(mesh, c, rule);
        f(c, &x, &w)
    })
}

/// Cell-to-cell sparsity of a scalar space.
pub fn scalar_pattern(space: &LagrangeSpace) -> Arc<Pattern> {
    let n = space.n_dofs();
    let mut b = PatternBuilder::new(n, n);
    for c in 0..space.mesh().n_cells() {
        b.add_element(space.cell_dofs(c));
    }
    b.build()
}

/// Scalar mass matrix `∫ φ_i φ_j`.
pub fn mass_matrix(space: &LagrangeSpace) -> CsrMatrix {
    let rule = space.default_rule();
    let tab = space.tabulate(&rule);
    let nl = space.n_local();
    let mesh = space.mesh();
    let mut m = CsrMatrix::zeros(space.pattern());
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let det = mesh.geometry(c).det.abs();
            let mut local = vec![0.0; nl * nl];
            for (q, w) in rule.weights.iter().enumerate() {
                let v = tab.values_at(q);
                let wq = w * det;
                for i in 0..nl {
                    for j in 0..nl {
                        local[i * nl + j] += wq * v[i] * v[j];
                    }
                }
            }
            local
        },
        |c, local| {
            let dofs = space.cell_dofs(c);
            m.add_block(dofs, dofs, &local);
        },
    );
    m
}

/// Factored scalar mass matrix, cached on its space.
#[derive(Debug)]
pub struct MassSolver {
    pub matrix: CsrMatrix,
    factor: CholeskySolver,
}

impl MassSolver {
    pub fn of(space: &LagrangeSpace) -> &MassSolver {
        space.mass.get_or_init(|| {
            let matrix = mass_matrix(space);
            let factor = CholeskySolver::new(&matrix).expect("mass matrix is positive definite");
            MassSolver { matrix, factor }
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        self.factor.solve_in_place(rhs);
    }
}

/// L² projection of a cell-wise sampled function onto `space`.
///
/// `sample(cell, tab_points, out)` fills `out[c * nq + q]` for each of the
/// `rank` components at the points of `rule`.
pub fn project(
    space: &Arc<LagrangeSpace>,
    rank: usize,
    rule: &QuadRule,
    sample: impl Fn(usize, &mut [f64]) + Sync,
) -> Result<LagrangeField> {
    let tab = space.tabulate(rule);
    let n = space.n_dofs();
    let nl = space.n_local();
    let nq = rule.len();
    let mesh = space.mesh();
    let mut rhs = vec![0.0; n * rank];
    for_each_cell(
        mesh.n_cells(),
        |c| {
            let det = mesh.geometry(c).det.abs();
            let mut vals = vec![0.0; rank * nq];
            sample(c, &mut vals);
            let mut local = vec![0.0; rank * nl];
            for q in 0..nq {
                let wq = rule.weights[q] * det;
                let v = tab.values_at(q);
                for comp in 0..rank {
                    let f = wq * vals[comp * nq + q];
                    if f != 0.0 {
                        for i in 0..nl {
                            local[comp * nl + i] += f * v[i];
                        }
                    }
                }
            }
            local
        },
        |c, local| {
            let dofs = space.cell_dofs(c);
            for comp in 0..rank {
                for (i, &d) in dofs.iter().enumerate() {
                    rhs[comp * n + d] += local[comp * nl + i];
                }
            }
        },
    );
    let mass = MassSolver::of(space);
    for comp in 0..rank {
        mass.solve_in_place(&mut rhs[comp * n..(comp + 1) * n]);
    }
    LagrangeField::from_coeffs(space.clone(), rank, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, uniform_tags, BoundaryTag, Rect};

    fn mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(build_structured_mesh(n, n, Rect::UNIT, uniform_tags(BoundaryTag::Free)).unwrap())
    }

    #[test]
    fn integrates_constants_and_monomials() {
        let m = mesh(4);
        assert!((integrate(&m, 2, |_| 1.0) - 1.0).abs() < 1e-14);
        assert!((integrate(&m, 2, |x| x[0] * x[1]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn integrates_quadratic_interpolant() {
        let s = LagrangeSpace::new(mesh(3), 2).unwrap();
        let f = LagrangeField::interpolate(s.clone(), |x, _| x * x);
        let rule = s.default_rule();
        let tab = s.tabulate(&rule);
        let val = integrate_cells(s.mesh(), &rule, |c, _, w| {
            let mut v = vec![0.0; rule.len()];
            f.eval_cell_values(c, &tab, 0, &mut v);
            v.iter().zip(w).map(|(a, b)| a * b).sum()
        });
        assert!((val - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mass_matrix_sums_to_area() {
        let s = LagrangeSpace::new(mesh(3), 3).unwrap();
        let m = mass_matrix(&s);
        let total: f64 = m.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_reproduces_space_members() {
        let s = LagrangeSpace::new(mesh(4), 2).unwrap();
        let rule = s.default_rule();
        let pts: Vec<[f64; 2]> = rule.points.clone();
        let m = s.mesh().clone();
        let p = project(&s, 2, &rule, |c, out| {
            let geo = m.geometry(c);
            let nq = pts.len();
            for (q, xi) in pts.iter().enumerate() {
                let x = geo.map(*xi);
                out[q] = x[0] * x[1] - x[1] * x[1];
                out[nq + q] = 2.0 * x[0] + 1.0;
            }
        })
        .unwrap();
        let e = LagrangeField::interpolate_vector(s, |x, y| [x * y - y * y, 2.0 * x + 1.0]);
        for (a, b) in p.coeffs().iter().zip(e.coeffs()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn cell_loop_visits_in_order() {
        let mut seen = Vec::new();
        for_each_cell(2000, |c| c * 2, |c, v| {
            assert_eq!(v, 2 * c);
            seen.push(c);
        });
        assert!(seen.windows(2).all(|w| w[1] == w[0] + 1));
    }
}
