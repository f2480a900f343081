//! Geometric redistancing.
//!
//! The zero contour is extracted by linear interpolation on a uniform
//! sub-triangulation of every cut cell, and each node then receives its exact
//! distance to the resulting segment list, keeping its original sign.

use crate::error::{Error, Result};
use crate::fem::{LagrangeField, Tabulation};
use crate::levelset::LevelSetState;

/// Sub-triangulation level per polynomial degree.
const REFINE_PER_DEGREE: usize = 4;

type Segment = [[f64; 2]; 2];

/// Zero contour of the level set as straight segments.
pub fn zero_contour(phi: &LagrangeField) -> Vec<Segment> {
    let space = phi.space();
    let mesh = space.mesh();
    let m = REFINE_PER_DEGREE * space.degree();
    // lattice points (i, j), i + j <= m, in reference coordinates
    let mut lattice = Vec::new();
    let mut index = vec![vec![usize::MAX; m + 1]; m + 1];
    for j in 0..=m {
        for i in 0..=m - j {
            index[i][j] = lattice.len();
            lattice.push([i as f64 / m as f64, j as f64 / m as f64]);
        }
    }
    let mut tris = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m - j {
            tris.push([index[i][j], index[i + 1][j], index[i][j + 1]]);
            if i + j + 1 < m {
                tris.push([index[i + 1][j], index[i + 1][j + 1], index[i][j + 1]]);
            }
        }
    }
    let tab = Tabulation::at_points(space.element(), &lattice);
    let mut values = vec![0.0; lattice.len()];
    let mut segments = Vec::new();
    for c in 0..mesh.n_cells() {
        let dofs = space.cell_dofs(c);
        let coeffs = phi.coeffs();
        // skip cells whose nodal values are far from zero relative to the cell size
        let nodal_min = dofs.iter().map(|&d| coeffs[d]).fold(f64::INFINITY, f64::min);
        let nodal_max = dofs.iter().map(|&d| coeffs[d]).fold(f64::NEG_INFINITY, f64::max);
        let hk = mesh.diameter(c);
        if nodal_min > hk || nodal_max < -hk {
            continue;
        }
        for (p, v) in values.iter_mut().enumerate() {
            *v = tab.values_at(p).iter().zip(dofs).map(|(b, &d)| b * coeffs[d]).sum();
        }
        if values.iter().all(|&v| v > 0.0) || values.iter().all(|&v| v <= 0.0) {
            continue;
        }
        let geo = mesh.geometry(c);
        for t in &tris {
            let inside: Vec<bool> = t.iter().map(|&p| values[p] <= 0.0).collect();
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            let mut pts = Vec::with_capacity(2);
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                if inside[a] != inside[b] {
                    let (va, vb) = (values[t[a]], values[t[b]]);
                    let s = va / (va - vb);
                    let pa = lattice[t[a]];
                    let pb = lattice[t[b]];
                    pts.push(geo.map([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]));
                }
            }
            if pts.len() == 2 {
                segments.push([pts[0], pts[1]]);
            }
        }
    }
    segments
}

fn point_segment_distance(p: [f64; 2], s: &Segment) -> f64 {
    let d = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - s[0][0]) * d[0] + (p[1] - s[0][1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - s[0][0] - t * d[0]).hypot(p[1] - s[0][1] - t * d[1])
}

/// Uniform bucket grid over the segments' bounding box.
struct SegmentIndex<'a> {
    segments: &'a [Segment],
    size: f64,
    /// Non-empty buckets: (lower corner, segment ids).
    buckets: Vec<([f64; 2], Vec<usize>)>,
}

impl<'a> SegmentIndex<'a> {
    fn new(segments: &'a [Segment]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s in segments {
            for p in s {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        let g = ((segments.len() as f64).sqrt().ceil() as usize).clamp(1, 64);
        let size = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / g as f64).max(1e-12);
        let nx = ((hi[0] - lo[0]) / size).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / size).floor() as usize + 1;
        let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
        let cell = |x: f64, lo: f64, n: usize| (((x - lo) / size).floor().max(0.0) as usize).min(n - 1);
        for (i, s) in segments.iter().enumerate() {
            let (x0, x1) = (s[0][0].min(s[1][0]), s[0][0].max(s[1][0]));
            let (y0, y1) = (s[0][1].min(s[1][1]), s[0][1].max(s[1][1]));
            for by in cell(y0, lo[1], ny)..=cell(y1, lo[1], ny) {
                for bx in cell(x0, lo[0], nx)..=cell(x1, lo[0], nx) {
                    grid[by * nx + bx].push(i);
                }
            }
        }
        let buckets = grid
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .map(|(b, v)| ([lo[0] + (b % nx) as f64 * size, lo[1] + (b / nx) as f64 * size], v))
            .collect();
        SegmentIndex {
            segments,
            size,
            buckets,
        }
    }

    fn lower_bound(&self, p: [f64; 2], corner: [f64; 2]) -> f64 {
        let dx = (corner[0] - p[0]).max(p[0] - corner[0] - self.size).max(0.0);
        let dy = (corner[1] - p[1]).max(p[1] - corner[1] - self.size).max(0.0);
        dx.hypot(dy)
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        let bounds: Vec<f64> = self.buckets.iter().map(|(c, _)| self.lower_bound(p, *c)).collect();
        let first = (0..bounds.len())
            .min_by(|&a, &b| bounds[a].total_cmp(&bounds[b]))
            .expect("at least one bucket");
        let mut best = f64::INFINITY;
        for &s in &self.buckets[first].1 {
            best = best.min(point_segment_distance(p, &self.segments[s]));
        }
        for (b, (_, ids)) in self.buckets.iter().enumerate() {
            if bounds[b] >= best || b == first {
                continue;
            }
            for &s in ids {
                best = best.min(point_segment_distance(p, &self.segments[s]));
            }
        }
        best
    }
}

/// Restores the signed-distance property while keeping the zero contour.
pub fn redistance(state: &LevelSetState) -> Result<LevelSetState> {
    let segments = zero_contour(&state.phi);
    if segments.is_empty() {
        return Err(Error::Topology("level set has no zero contour".into()));
    }
    let index = SegmentIndex::new(&segments);
    let space = state.space();
    let coeffs: Vec<f64> = space
        .nodes()
        .iter()
        .zip(state.phi.coeffs())
        .map(|(x, &old)| {
            if old == 0.0 {
                0.0
            } else {
                index.distance(*x).copysign(old)
            }
        })
        .collect();
    Ok(state.with_phi(LagrangeField::from_coeffs(space.clone(), 1, coeffs)?))
}

/// Hausdorff distance between the zero contours of two level sets, measured
/// on contour vertices.
pub fn contour_distance(a: &LagrangeField, b: &LagrangeField) -> f64 {
    let sa = zero_contour(a);
    let sb = zero_contour(b);
    if sa.is_empty() || sb.is_empty() {
        return f64::INFINITY;
    }
    let ia = SegmentIndex::new(&sa);
    let ib = SegmentIndex::new(&sb);
    let one_way = |from: &[Segment], to: &SegmentIndex| {
        from.iter()
            .flat_map(|s| s.iter())
            .map(|p| to.distance(*p))
            .fold(0.0, f64::max)
    };
    one_way(&sa, &ib).max(one_way(&sb, &ia))
}
