//! Gauss rules on the reference triangle.
//!
//! Triangle rules are conical products of Gauss–Legendre rules through the
//! collapsed map `(u, v) -> (u, v(1-u))`, so any exactness order is available.

use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            // p1 = P_n(z), p2 = P_{n-1}(z)
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 1.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Quadrature rule on the reference triangle; weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub order: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Rule exact for polynomials of total degree `order`.
    pub fn triangle(order: usize) -> Arc<QuadRule> {
        static CACHE: OnceLock<Mutex<Vec<Option<Arc<QuadRule>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if guard.len() <= order {
            guard.resize(order + 1, None);
        }
        guard[order]
            .get_or_insert_with(|| Arc::new(Self::build(order)))
            .clone()
    }

    fn build(order: usize) -> QuadRule {
        // degree `order` in (x, y) becomes `order + 1` in u (Jacobian 1-u).
        let nu = (order + 2).div_ceil(2).max(1);
        let nv = (order + 1).div_ceil(2).max(1);
        let (xu, wu) = gauss_legendre(nu);
        let (xv, wv) = gauss_legendre(nv);
        let mut points = Vec::with_capacity(nu * nv);
        let mut weights = Vec::with_capacity(nu * nv);
        for (u, wu) in xu.iter().zip(&wu) {
            for (v, wv) in xv.iter().zip(&wv) {
                points.push([*u, v * (1.0 - u)]);
                weights.push(wu * wv * (1.0 - u));
            }
        }
        QuadRule {
            order,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rule_exact_to_declared_order() {
        // ∫_T x^a y^b = a! b! / (a+b+2)!
        for order in 0..=12 {
            let rule = QuadRule::triangle(order);
            for a in 0..=order {
                for b in 0..=(order - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a as u32) * factorial(b as u32)
                        / factorial((a + b + 2) as u32);
                    assert!((q - exact).abs() < 1e-14, "order={order} a={a} b={b}");
                }
            }
        }
    }
}
