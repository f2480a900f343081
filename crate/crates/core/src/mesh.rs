//! Conforming triangulations of rectangular domains.
//!
//! Cells are stored counter-clockwise. Every boundary edge carries exactly one
//! [`BoundaryTag`]; interior edges carry none. Each cell stores its affine map
//! from the reference triangle `(0,0), (1,0), (0,1)`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Prescribed velocity.
    Dirichlet,
    /// Traction-free.
    Neumann,
    /// Fixed inflow portion of the boundary.
    Inflow,
    /// No condition attached.
    Free,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Dirichlet => 0,
            BoundaryTag::Neumann => 1,
            BoundaryTag::Inflow => 2,
            BoundaryTag::Free => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => BoundaryTag::Dirichlet,
            1 => BoundaryTag::Neumann,
            2 => BoundaryTag::Inflow,
            3 => BoundaryTag::Free,
            _ => return None,
        })
    }
}

/// Side of an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Affine map `x = origin + J ξ` of one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    pub jac: [[f64; 2]; 2],
    /// `J^{-1}`; reference gradients map to physical ones through `J^{-T}`.
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl CellGeometry {
    #[inline]
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    #[inline]
    pub fn inverse_map(&self, x: [f64; 2]) -> [f64; 2] {
        let dx = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * dx[0] + self.inv[0][1] * dx[1],
            self.inv[1][0] * dx[0] + self.inv[1][1] * dx[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }
}

/// Local edges as pairs of local vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

#[derive(Debug)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    diameters: Vec<f64>,
    geometry: Vec<CellGeometry>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    edge_tags: HashMap<usize, BoundaryTag>,
    locator: OnceLock<CellLocator>,
}

impl TriMesh {
    /// Validates and builds a mesh from raw arrays.
    ///
    /// Cells with clockwise orientation are rejected, as are meshes with
    /// hanging nodes, untagged boundary edges or tags on interior edges.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidGeometry("mesh has no cells".into()));
        }
        let nv = vertices.len();
        let mut geometry = Vec::with_capacity(cells.len());
        let mut diameters = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidGeometry(format!(
                    "cell {c} references a missing vertex"
                )));
            }
            let [a, b, d] = cell.map(|v| vertices[v]);
            let jac = [[b[0] - a[0], d[0] - a[0]], [b[1] - a[1], d[1] - a[1]]];
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if !(det > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "cell {c} has non-positive signed area {}",
                    0.5 * det
                )));
            }
            let inv = [
                [jac[1][1] / det, -jac[0][1] / det],
                [-jac[1][0] / det, jac[0][0] / det],
            ];
            geometry.push(CellGeometry {
                origin: a,
                jac,
                inv,
                det,
            });
            let dist = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
            diameters.push(dist(a, b).max(dist(b, d)).max(dist(d, a)));
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_count: Vec<u8> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for cell in &cells {
            let mut ce = [0; 3];
            for (e, [i, j]) in LOCAL_EDGES.iter().enumerate() {
                let (p, q) = (cell[*i], cell[*j]);
                let key = [p.min(q), p.max(q)];
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[id] += 1;
                if edge_count[id] > 2 {
                    return Err(Error::InvalidGeometry(format!(
                        "edge {key:?} shared by more than two cells"
                    )));
                }
                ce[e] = id;
            }
            cell_edges.push(ce);
        }

        let mut edge_tags = HashMap::new();
        for be in &boundary {
            let [p, q] = be.vertices;
            let key = [p.min(q), p.max(q)];
            let Some(&id) = edge_index.get(&key) else {
                return Err(Error::InvalidGeometry(format!(
                    "boundary edge {key:?} is not a mesh edge"
                )));
            };
            if edge_count[id] != 1 {
                return Err(Error::InvalidGeometry(format!(
                    "tagged edge {key:?} is interior"
                )));
            }
            if edge_tags.insert(id, be.tag).is_some() {
                return Err(Error::InvalidGeometry(format!(
                    "boundary edge {key:?} tagged twice"
                )));
            }
        }
        let untagged = edge_count
            .iter()
            .enumerate()
            .filter(|(id, &n)| n == 1 && !edge_tags.contains_key(id))
            .count();
        if untagged > 0 {
            return Err(Error::InvalidGeometry(format!(
                "{untagged} boundary edges carry no tag (hanging node or missing tag)"
            )));
        }

        Ok(TriMesh {
            vertices,
            cells,
            boundary,
            diameters,
            geometry,
            edges,
            cell_edges,
            edge_tags,
            locator: OnceLock::new(),
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    /// Diameter (longest edge) of a cell.
    pub fn diameter(&self, cell: usize) -> f64 {
        self.diameters[cell]
    }

    /// `h = max h_K`.
    pub fn h(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    /// Shortest edge length; the grid spacing of a structured mesh.
    pub fn min_edge(&self) -> f64 {
        self.edges
            .iter()
            .map(|[a, b]| {
                let (p, q) = (self.vertices[*a], self.vertices[*b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    /// Tag of a global edge, `None` for interior edges.
    pub fn edge_tag(&self, edge: usize) -> Option<BoundaryTag> {
        self.edge_tags.get(&edge).copied()
    }

    pub fn bounding_box(&self) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            r.x0 = r.x0.min(v[0]);
            r.y0 = r.y0.min(v[1]);
            r.x1 = r.x1.max(v[0]);
            r.y1 = r.y1.max(v[1]);
        }
        r
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(CellGeometry::area).sum()
    }

    /// Cell containing `x` and the reference coordinates of `x` in it.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        self.locator
            .get_or_init(|| CellLocator::new(self))
            .locate(self, x)
    }

    /// Parses the plain-text mesh format: a header `NV NC NE`, then `NV`
    /// vertex lines `x y`, `NC` cell lines `i j k` (0-based) and `NE`
    /// boundary lines `i j tag` with tag codes 0..=3.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let syntax = |line: usize, message: String| Error::Syntax { line, message };
        let (ln, header) = lines
            .next()
            .ok_or_else(|| syntax(1, "empty mesh file".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| syntax(ln, format!("bad header: {e}")))?;
        let [nv, nc, ne] = counts[..] else {
            return Err(syntax(ln, "header must be `NV NC NE`".into()));
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| syntax(usize::MAX, "missing vertex line".into()))?;
            let xy: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| syntax(ln, format!("bad vertex: {e}")))?;
            let [x, y] = xy[..] else {
                return Err(syntax(ln, "vertex line must be `x y`".into()));
            };
            vertices.push([x, y]);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| syntax(usize::MAX, "missing cell line".into()))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| syntax(ln, format!("bad cell: {e}")))?;
            let [a, b, c] = ids[..] else {
                return Err(syntax(ln, "cell line must be `i j k`".into()));
            };
            cells.push([a, b, c]);
        }
        let mut boundary = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| syntax(usize::MAX, "missing boundary line".into()))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| syntax(ln, format!("bad boundary edge: {e}")))?;
            let [a, b, t] = ids[..] else {
                return Err(syntax(ln, "boundary line must be `i j tag`".into()));
            };
            let tag = u8::try_from(t)
                .ok()
                .and_then(BoundaryTag::from_code)
                .ok_or_else(|| syntax(ln, format!("unknown boundary tag {t}")))?;
            boundary.push(BoundaryEdge {
                vertices: [a, b],
                tag,
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(syntax(ln, "trailing content after mesh data".into()));
        }
        TriMesh::new(vertices, cells, boundary)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TriMesh::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.vertices.len(),
            self.cells.len(),
            self.boundary.len()
        );
        for v in &self.vertices {
            out.push_str(&format!("{:?} {:?}\n", v[0], v[1]));
        }
        for c in &self.cells {
            out.push_str(&format!("{} {} {}\n", c[0], c[1], c[2]));
        }
        for e in &self.boundary {
            out.push_str(&format!(
                "{} {} {}\n",
                e.vertices[0],
                e.vertices[1],
                e.tag.code()
            ));
        }
        out
    }
}

/// Uniform bucket grid over cell bounding boxes.
#[derive(Debug)]
struct CellLocator {
    bbox: Rect,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl CellLocator {
    fn new(mesh: &TriMesh) -> Self {
        let bbox = mesh.bounding_box();
        let n = ((mesh.n_cells() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let aspect = (bbox.width() / bbox.height()).max(1e-3);
        let nx = ((n as f64 * aspect.sqrt()).ceil() as usize).max(1);
        let ny = ((n as f64 / aspect.sqrt()).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (c, cell) in mesh.cells.iter().enumerate() {
            let pts = cell.map(|v| mesh.vertices[v]);
            let lo = [
                pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            ];
            let hi = [
                pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
                pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            ];
            let (i0, j0) = Self::bucket_of(&bbox, nx, ny, lo);
            let (i1, j1) = Self::bucket_of(&bbox, nx, ny, hi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(c);
                }
            }
        }
        CellLocator {
            bbox,
            nx,
            ny,
            buckets,
        }
    }

    fn bucket_of(bbox: &Rect, nx: usize, ny: usize, p: [f64; 2]) -> (usize, usize) {
        let fx = ((p[0] - bbox.x0) / bbox.width() * nx as f64).floor();
        let fy = ((p[1] - bbox.y0) / bbox.height() * ny as f64).floor();
        (
            (fx.max(0.0) as usize).min(nx - 1),
            (fy.max(0.0) as usize).min(ny - 1),
        )
    }

    fn locate(&self, mesh: &TriMesh, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let tol = 1e-12;
        let r = &self.bbox;
        if x[0] < r.x0 - tol || x[0] > r.x1 + tol || x[1] < r.y0 - tol || x[1] > r.y1 + tol {
            return None;
        }
        let (i, j) = Self::bucket_of(r, self.nx, self.ny, x);
        let mut best: Option<(usize, [f64; 2], f64)> = None;
        for &c in &self.buckets[j * self.nx + i] {
            let xi = mesh.geometry[c].inverse_map(x);
            let lam = xi[0].min(xi[1]).min(1.0 - xi[0] - xi[1]);
            if lam >= -tol {
                return Some((c, xi));
            }
            if best.map_or(true, |b| lam > b.2) {
                best = Some((c, xi, lam));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|b| (b.0, b.1))
    }
}

/// Diagonal-split triangulation of `rect` with `2·nx·ny` cells.
///
/// Each grid square is split along its `(i,j)–(i+1,j+1)` diagonal. Boundary
/// edges are tagged by `tagger(side, midpoint)`.
pub fn build_structured_mesh(
    nx: usize,
    ny: usize,
    rect: Rect,
    tagger: impl Fn(Side, [f64; 2]) -> BoundaryTag,
) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidGeometry(format!(
            "grid counts must be positive (got {nx}x{ny})"
        )));
    }
    if !(rect.width() > 0.0 && rect.height() > 0.0) || !rect.width().is_finite() || !rect.height().is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "degenerate rectangle {rect:?}"
        )));
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny {
            rect.y1
        } else {
            rect.y0 + rect.height() * j as f64 / ny as f64
        };
        for i in 0..=nx {
            let x = if i == nx {
                rect.x1
            } else {
                rect.x0 + rect.width() * i as f64 / nx as f64
            };
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    let mut push = |side: Side, p: usize, q: usize, vertices: &[[f64; 2]]| {
        let mid = [
            0.5 * (vertices[p][0] + vertices[q][0]),
            0.5 * (vertices[p][1] + vertices[q][1]),
        ];
        boundary.push(BoundaryEdge {
            vertices: [p, q],
            tag: tagger(side, mid),
        });
    };
    for i in 0..nx {
        push(Side::Bottom, vid(i, 0), vid(i + 1, 0), &vertices);
        push(Side::Top, vid(i + 1, ny), vid(i, ny), &vertices);
    }
    for j in 0..ny {
        push(Side::Right, vid(nx, j), vid(nx, j + 1), &vertices);
        push(Side::Left, vid(0, j + 1), vid(0, j), &vertices);
    }
    TriMesh::new(vertices, cells, boundary)
}

/// Tags every boundary edge with the same tag.
pub fn uniform_tags(tag: BoundaryTag) -> impl Fn(Side, [f64; 2]) -> BoundaryTag {
    move |_, _| tag
}
