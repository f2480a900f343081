//! Run directory writers: diagnostics CSV, VTK checkpoints and the manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coupling::SimState;
use crate::diagnostics::DiagRecord;
use crate::error::{Error, Result};
use crate::fem::LagrangeField;
use crate::mesh::TriMesh;

use super::config::SimConfig;

pub const CSV_HEADER: &str = "t,area,perimeter,xi2d,theta,bending_energy,fp_iters,surf_div";
pub const CSV_NAME: &str = "diagnostics.csv";
pub const MANIFEST_NAME: &str = "manifest.json";

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Appends one row per record, flushing after each.
pub struct CsvWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        inner.write_record(CSV_HEADER.split(',')).map_err(|e| csv_err(path, e))?;
        inner.flush().map_err(|e| Error::io(path, e))?;
        Ok(CsvWriter {
            path: path.to_owned(),
            inner,
        })
    }

    pub fn write(&mut self, r: &DiagRecord) -> Result<()> {
        self.inner.serialize(r).map_err(|e| csv_err(&self.path, e))?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rd.deserialize().map(|r| r.map_err(|e| csv_err(path, e))).collect()
}

/// Values of every component of `f` at the mesh vertices.
pub fn sample_at_vertices(f: &LagrangeField) -> Vec<Vec<f64>> {
    let mesh = f.space().mesh();
    let mut out = vec![vec![0.0; f.rank()]; mesh.vertices().len()];
    const CORNERS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    for (c, cell) in mesh.cells().iter().enumerate() {
        for (i, &v) in cell.iter().enumerate() {
            out[v] = f.eval_in_cell(c, CORNERS[i]).0;
        }
    }
    out
}

/// Legacy ASCII VTK of the state on the linear sub-mesh.
pub fn write_vtk(path: &Path, mesh: &TriMesh, state: &SimState) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let verts = mesh.vertices();
    let cells = mesh.cells();
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "vesiflow t={:e} step={}", state.t, state.step)?;
        writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", verts.len())?;
        for v in verts {
            writeln!(w, "{:e} {:e} 0", v[0], v[1])?;
        }
        writeln!(w, "CELLS {} {}", cells.len(), 4 * cells.len())?;
        for c in cells {
            writeln!(w, "3 {} {} {}", c[0], c[1], c[2])?;
        }
        writeln!(w, "CELL_TYPES {}", cells.len())?;
        for _ in cells {
            writeln!(w, "5")?;
        }
        writeln!(w, "POINT_DATA {}", verts.len())?;
        for (name, field) in [("phi", &state.ls.phi), ("pressure", &state.flow.p)] {
            writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for v in sample_at_vertices(field) {
                writeln!(w, "{:e}", v[0])?;
            }
        }
        writeln!(w, "VECTORS velocity double")?;
        for v in sample_at_vertices(&state.flow.u) {
            writeln!(w, "{:e} {:e} 0", v[0], v[1])?;
        }
        w.flush()
    };
    body().map_err(io)
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub program: &'static str,
    pub version: &'static str,
    pub config: &'a SimConfig,
    /// The same configuration as parseable text.
    pub config_text: String,
    pub dt: f64,
    pub steps: usize,
    pub mesh_cells: usize,
    pub mesh_h: f64,
    pub assembly_threads: usize,
}

impl<'a> Manifest<'a> {
    pub fn new(config: &'a SimConfig, mesh: &TriMesh, dt: f64, steps: usize) -> Self {
        Manifest {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            config_text: config.to_text(),
            dt,
            steps,
            mesh_cells: mesh.n_cells(),
            mesh_h: mesh.h(),
            assembly_threads: crate::fem::assembly::assembly_threads(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::io(path, e.into()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Writers for one run directory.
pub struct RunWriter {
    dir: PathBuf,
    csv: Option<CsvWriter>,
    vtk_stride: usize,
    pub vtk_written: Vec<PathBuf>,
}

impl RunWriter {
    pub fn create(dir: &Path, cfg: &SimConfig, mesh: &TriMesh, dt: f64, steps: usize) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Manifest::new(cfg, mesh, dt, steps).write(&dir.join(MANIFEST_NAME))?;
        let csv = if cfg.output.csv {
            Some(CsvWriter::create(&dir.join(CSV_NAME))?)
        } else {
            None
        };
        Ok(RunWriter {
            dir: dir.to_owned(),
            csv,
            vtk_stride: if cfg.output.vtk { cfg.output.stride } else { 0 },
            vtk_written: Vec::new(),
        })
    }

    pub fn record(&mut self, r: &DiagRecord) -> Result<()> {
        match &mut self.csv {
            Some(w) => w.write(r),
            None => Ok(()),
        }
    }

    /// Writes a checkpoint if `state.step` falls on the stride.
    pub fn checkpoint(&mut self, mesh: &TriMesh, state: &SimState) -> Result<()> {
        if self.vtk_stride == 0 || state.step % self.vtk_stride != 0 {
            return Ok(());
        }
        let path = self.dir.join(format!("fields_{:06}.vtk", state.step));
        write_vtk(&path, mesh, state)?;
        self.vtk_written.push(path);
        Ok(())
    }
}
