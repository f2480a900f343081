//! Configuration, scenarios, output files and the grid-convergence harness.

pub mod config;
pub mod output;
pub mod scenario;

use std::path::Path;

use serde::Serialize;

use crate::coupling::SimState;
use crate::diagnostics::DiagRecord;
use crate::error::{Error, Result};

pub use config::{parse_config, read_config, SimConfig};
pub use output::{read_csv, RunWriter, CSV_HEADER};
pub use scenario::{vortex_velocity, Problem};

/// Result of [`run`].
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagRecord>,
    pub last: SimState,
    /// Steps accepted without fixed-point convergence.
    pub unconverged_steps: Vec<usize>,
}

/// Runs `cfg`, writing into `dir` (or the configured directory).
///
/// `progress` sees every record as it is produced.
pub fn run(cfg: &SimConfig, dir: Option<&Path>, mut progress: impl FnMut(&DiagRecord)) -> Result<RunOutcome> {
    let problem = Problem::new(cfg)?;
    let dir = dir.unwrap_or(&cfg.output.dir);
    let mut writer = RunWriter::create(dir, cfg, &problem.mesh, problem.dt, problem.steps)?;
    writer.checkpoint(&problem.mesh, &problem.initial)?;
    let mut unconverged = Vec::new();
    let (records, last) = problem.run(|state, r, report| {
        writer.record(r)?;
        writer.checkpoint(&problem.mesh, state)?;
        if report.is_some_and(|rep| !rep.converged) {
            unconverged.push(state.step);
        }
        progress(r);
        Ok(true)
    })?;
    Ok(RunOutcome {
        records,
        last,
        unconverged_steps: unconverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k_phi: usize,
    pub n: usize,
    /// Largest cell diameter.
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// L² error against the interpolated initial level set.
    pub error: f64,
    /// L² error against the exact initial signed distance.
    pub error_exact: f64,
    /// `log(e_coarse/e)/log(h_coarse/h)` against the previous level.
    pub order: Option<f64>,
}

/// One vortex period per `(level, degree)`, levels given as cells per side.
pub fn convergence_study(base: &SimConfig, levels: &[usize], degrees: &[usize]) -> Result<Vec<ConvergenceRow>> {
    convergence_study_with(base, levels, degrees, |_| {})
}

pub fn convergence_study_with(
    base: &SimConfig,
    levels: &[usize],
    degrees: &[usize],
    mut each: impl FnMut(&ConvergenceRow),
) -> Result<Vec<ConvergenceRow>> {
    if levels.len() < 3 {
        return Err(Error::Precondition(format!(
            "a convergence study needs at least 3 mesh levels, got {}",
            levels.len()
        )));
    }
    if degrees.is_empty() {
        return Err(Error::Precondition("no level-set degrees given".into()));
    }
    if base.scenario != config::ScenarioKind::Vortex {
        return Err(Error::Precondition("convergence studies use the vortex scenario".into()));
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let mut rows = Vec::new();
    for &k in degrees {
        let mut prev: Option<ConvergenceRow> = None;
        for &n in &levels {
            let mut cfg = base.clone();
            cfg.k_phi = k;
            cfg.mesh.nx = n;
            cfg.mesh.ny = n;
            cfg.mesh.file = None;
            cfg.dt = config::DtRule::MeshPower;
            cfg.t_final = cfg.vortex.period;
            let p = Problem::new(&cfg)?;
            let phi0 = &p.initial.ls.phi;
            let end = scenario::vortex_transport(&p.initial.ls, cfg.vortex, p.dt, p.steps, cfg.coupling.supg_c, |_, _| Ok(true))?;
            let (error, error_exact) = scenario::vortex_errors(&end.phi, phi0, &p.shape);
            let h = p.mesh.h();
            let order = prev.map(|c| (c.error / error).ln() / (c.h / h).ln());
            let row = ConvergenceRow {
                k_phi: k,
                n,
                h,
                dt: p.dt,
                steps: p.steps,
                error,
                error_exact,
                order,
            };
            each(&row);
            rows.push(row);
            prev = Some(row);
        }
    }
    Ok(rows)
}
