//! Lagrange elements of degree 1..=4 on the reference triangle.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Nodal basis on the reference triangle.
///
/// Local node order: the three vertices, then `k-1` nodes per edge along
/// `(0,1), (1,2), (2,0)`, then interior nodes in lexicographic order.
#[derive(Debug)]
pub struct RefElement {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: Vec<f64>,
}

impl RefElement {
    pub fn get(degree: usize) -> Result<Arc<RefElement>> {
        static CACHE: [OnceLock<Arc<RefElement>>; 4] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        if !(1..=4).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        Ok(CACHE[degree - 1]
            .get_or_init(|| Arc::new(RefElement::build(degree)))
            .clone())
    }

    fn build(k: usize) -> RefElement {
        let kf = k as f64;
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for m in 1..k {
            nodes.push([m as f64 / kf, 0.0]);
        }
        for m in 1..k {
            nodes.push([1.0 - m as f64 / kf, m as f64 / kf]);
        }
        for m in 1..k {
            nodes.push([0.0, 1.0 - m as f64 / kf]);
        }
        for j in 1..k {
            for i in 1..k {
                if i + j < k {
                    nodes.push([i as f64 / kf, j as f64 / kf]);
                }
            }
        }
        let mut exponents = Vec::new();
        for total in 0..=k as i32 {
            for a in (0..=total).rev() {
                exponents.push((a, total - a));
            }
        }
        let n = nodes.len();
        debug_assert_eq!(n, exponents.len());
        // V[r][c] = monomial c at node r; basis coefficients = V^{-1} columns.
        let mut v = vec![0.0; n * n];
        for (r, p) in nodes.iter().enumerate() {
            for (c, &(a, b)) in exponents.iter().enumerate() {
                v[r * n + c] = p[0].powi(a) * p[1].powi(b);
            }
        }
        let inv = invert_dense(&v, n);
        // basis i = sum_c inv[c][i] * monomial c
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for c in 0..n {
                coeffs[i * n + c] = inv[c * n + i];
            }
        }
        RefElement {
            degree: k,
            nodes,
            exponents,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_local(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn n_interior(&self) -> usize {
        let k = self.degree;
        if k < 3 {
            0
        } else {
            (k - 1) * (k - 2) / 2
        }
    }

    /// Basis values and reference gradients at `xi`.
    pub fn eval(&self, xi: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let n = self.n_local();
        let mut mono = [0.0; 15];
        let mut dmx = [0.0; 15];
        let mut dmy = [0.0; 15];
        for (c, &(a, b)) in self.exponents.iter().enumerate() {
            let xa = xi[0].powi(a);
            let yb = xi[1].powi(b);
            mono[c] = xa * yb;
            dmx[c] = if a > 0 { a as f64 * xi[0].powi(a - 1) * yb } else { 0.0 };
            dmy[c] = if b > 0 { b as f64 * xa * xi[1].powi(b - 1) } else { 0.0 };
        }
        for i in 0..n {
            let row = &self.coeffs[i * n..(i + 1) * n];
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for c in 0..n {
                v += row[c] * mono[c];
                gx += row[c] * dmx[c];
                gy += row[c] * dmy[c];
            }
            values[i] = v;
            grads[i] = [gx, gy];
        }
    }
}

/// Gauss–Jordan inverse with partial pivoting (small dense matrices only).
fn invert_dense(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .unwrap();
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let d = m[col * n + col];
        for c in 0..n {
            m[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r * n + c] -= f * m[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    inv
}
