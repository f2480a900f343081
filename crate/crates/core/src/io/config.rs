//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! preset = fig4
//! mesh.nx = 96
//! params.Ca = 100
//! ```
//!
//! A `preset` line expands to a complete configuration before any other key is
//! applied, wherever it appears. Unknown keys and out-of-range values are
//! collected and reported together.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupling::PicardMode;
use crate::error::{Error, Result};
use crate::mesh::Rect;
use crate::rheology::{PhysParams, StrainNorm, DEFAULT_EPS_LAMBDA, DEFAULT_GAMMA_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Vortex,
    Shear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    pub rect: Rect,
    /// Triangulation in the native text format; overrides the structured grid.
    pub file: Option<PathBuf>,
}

impl MeshSpec {
    /// Structured grid spacing (the smaller of the two directions).
    pub fn spacing(&self) -> f64 {
        (self.rect.width() / self.nx as f64).min(self.rect.height() / self.ny as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ShapeSpec {
    Circle { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], radii: [f64; 2], rotation: f64 },
    /// Ellipse sized by reduced area and perimeter.
    Reduced { center: [f64; 2], xi: f64, perimeter: f64, rotation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtRule {
    Fixed(f64),
    /// `Δt = h^k_φ` with `h` the largest cell diameter.
    MeshPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub psi: f64,
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearSpec {
    pub rate: f64,
    pub y_center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub redistance_every: usize,
    pub accept_unconverged: bool,
    pub aitken: bool,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub picard_mode: PicardMode,
    pub supg_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// VTK checkpoint every `stride` steps; 0 disables field output.
    pub stride: usize,
    pub csv: bool,
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: ScenarioKind,
    pub mesh: MeshSpec,
    pub k_phi: usize,
    pub params: PhysParams,
    pub shape: ShapeSpec,
    pub vortex: VortexSpec,
    pub shear: ShearSpec,
    pub dt: DtRule,
    pub t_final: f64,
    pub coupling: CouplingSpec,
    pub output: OutputSpec,
}

pub const PRESETS: [&str; 4] = ["vortex", "fig4", "fig5", "walburn"];

/// Grid cells per unit length for the shear presets.
const SHEAR_N: usize = 48;

impl SimConfig {
    pub fn preset(name: &str) -> Option<SimConfig> {
        match name {
            "vortex" => Some(vortex_preset()),
            "fig4" => Some(shear_preset(0.68, 1.0, 2.0)),
            "fig5" => Some(shear_preset(0.68, 10.0, 5.0)),
            "walburn" => {
                let mut c = shear_preset(0.68, 1.0, 2.0);
                c.params.upsilon = 0.7755;
                Some(c)
            }
            _ => None,
        }
    }

    /// All semantic violations.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .params
            .violations()
            .into_iter()
            .map(|(k, r)| format!("params.{k}: {r}"))
            .collect();
        let mut bad = |key: &str, msg: String| out.push(format!("{key}: {msg}"));
        let m = &self.mesh;
        if m.file.is_none() {
            if m.nx == 0 || m.ny == 0 {
                bad("mesh.nx/ny", format!("must be positive, got {}x{}", m.nx, m.ny));
            }
            if !(m.rect.width() > 0.0 && m.rect.height() > 0.0) {
                bad("mesh.rect", "must have positive width and height".into());
            }
        } else if let Some(p) = &m.file {
            if !p.exists() {
                bad("mesh.file", format!("{} does not exist", p.display()));
            }
        }
        if !(1..=4).contains(&self.k_phi) {
            bad("degrees.phi", format!("must be in 1..=4, got {}", self.k_phi));
        }
        match self.shape {
            ShapeSpec::Circle { radius, .. } if !(radius > 0.0) => bad("shape.radius", format!("must be positive, got {radius}")),
            ShapeSpec::Ellipse { radii: [a, b], .. } if !(a > 0.0 && b > 0.0) => {
                bad("shape.radii", format!("must be positive, got {a},{b}"))
            }
            ShapeSpec::Reduced { xi, perimeter, .. } => {
                if !(xi > 0.0 && xi < 1.0) {
                    bad("shape.xi", format!("must lie in (0,1), got {xi}"));
                }
                if !(perimeter > 0.0) {
                    bad("shape.perimeter", format!("must be positive, got {perimeter}"));
                }
            }
            _ => {}
        }
        if let DtRule::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bad("time.dt", format!("must be positive, got {dt}"));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            bad("time.t_final", format!("must be non-negative, got {}", self.t_final));
        }
        if !(self.vortex.psi > 0.0 && self.vortex.period > 0.0) {
            bad("vortex.psi/period", "must be positive".into());
        }
        if !self.shear.rate.is_finite() || !self.shear.y_center.is_finite() {
            bad("shear.rate/y_center", "must be finite".into());
        }
        let c = &self.coupling;
        if !(c.fp_tol > 0.0 && c.fp_tol < 1.0) {
            bad("coupling.fp_tol", format!("must lie in (0,1), got {}", c.fp_tol));
        }
        if c.fp_max_iter == 0 {
            bad("coupling.fp_max_iter", "must be at least 1".into());
        }
        if !(c.picard_tol > 0.0) {
            bad("picard.tol", format!("must be positive, got {}", c.picard_tol));
        }
        if c.picard_max_iter == 0 {
            bad("picard.max_iter", "must be at least 1".into());
        }
        if !(c.supg_c >= 0.0 && c.supg_c.is_finite()) {
            bad("levelset.supg_c", format!("must be non-negative, got {}", c.supg_c));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Every field as explicit `key = value` lines; `parse` reads it back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = |x: f64| format!("{x:?}");
        let pair = |a: [f64; 2]| format!("{:?}, {:?}", a[0], a[1]);
        let mut w = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        w("scenario", enum_name(&self.scenario));
        let m = &self.mesh;
        w("mesh.nx", m.nx.to_string());
        w("mesh.ny", m.ny.to_string());
        w("mesh.rect", format!("{:?}, {:?}, {:?}, {:?}", m.rect.x0, m.rect.y0, m.rect.x1, m.rect.y1));
        if let Some(p) = &m.file {
            w("mesh.file", p.display().to_string());
        }
        w("degrees.phi", self.k_phi.to_string());
        w("degrees.velocity", "2".into());
        w("degrees.pressure", "1".into());
        let p = &self.params;
        w("params.Re", f(p.re));
        w("params.Ca", f(p.ca));
        w("params.beta", f(p.beta));
        w("params.upsilon", f(p.upsilon));
        w("params.eps", f(p.eps));
        w("params.eps_lambda", f(p.eps_lambda));
        w("params.gamma_min", f(p.gamma_min));
        w("params.strain_norm", enum_name(&p.strain_norm));
        w("params.penalty_quadrature", p.penalty_quadrature.to_string());
        match self.shape {
            ShapeSpec::Circle { center, radius } => {
                w("shape.type", "circle".into());
                w("shape.center", pair(center));
                w("shape.radius", f(radius));
            }
            ShapeSpec::Ellipse { center, radii, rotation } => {
                w("shape.type", "ellipse".into());
                w("shape.center", pair(center));
                w("shape.radii", pair(radii));
                w("shape.rotation", f(rotation));
            }
            ShapeSpec::Reduced { center, xi, perimeter, rotation } => {
                w("shape.type", "reduced".into());
                w("shape.center", pair(center));
                w("shape.xi", f(xi));
                w("shape.perimeter", f(perimeter));
                w("shape.rotation", f(rotation));
            }
        }
        w("vortex.psi", f(self.vortex.psi));
        w("vortex.period", f(self.vortex.period));
        w("shear.rate", f(self.shear.rate));
        w("shear.y_center", f(self.shear.y_center));
        w(
            "time.dt",
            match self.dt {
                DtRule::Fixed(dt) => f(dt),
                DtRule::MeshPower => "h^k".into(),
            },
        );
        w("time.t_final", f(self.t_final));
        let c = &self.coupling;
        w("coupling.fp_tol", f(c.fp_tol));
        w("coupling.fp_max_iter", c.fp_max_iter.to_string());
        w("coupling.redistance_every", c.redistance_every.to_string());
        w("coupling.accept_unconverged", c.accept_unconverged.to_string());
        w("coupling.aitken", c.aitken.to_string());
        w("picard.tol", f(c.picard_tol));
        w("picard.max_iter", c.picard_max_iter.to_string());
        w("picard.mode", enum_name(&c.picard_mode));
        w("levelset.supg_c", f(c.supg_c));
        let o = &self.output;
        w("output.dir", o.dir.display().to_string());
        w("output.stride", o.stride.to_string());
        let mut formats = Vec::new();
        if o.csv {
            formats.push("csv");
        }
        if o.vtk {
            formats.push("vtk");
        }
        w("output.formats", formats.join(", "));
        s
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn defaults() -> SimConfig {
    SimConfig {
        scenario: ScenarioKind::Vortex,
        mesh: MeshSpec {
            nx: 32,
            ny: 32,
            rect: Rect::new(0.0, 0.0, 1.0, 1.0),
            file: None,
        },
        k_phi: 2,
        params: PhysParams {
            eps_lambda: DEFAULT_EPS_LAMBDA,
            gamma_min: DEFAULT_GAMMA_MIN,
            ..PhysParams::default()
        },
        shape: ShapeSpec::Circle {
            center: [0.7, 0.7],
            radius: 0.15,
        },
        vortex: VortexSpec { psi: 3.0, period: 1.0 },
        shear: ShearSpec { rate: 1.0, y_center: 1.0 },
        dt: DtRule::MeshPower,
        t_final: 1.0,
        coupling: CouplingSpec {
            fp_tol: 1e-6,
            fp_max_iter: 50,
            redistance_every: 1,
            accept_unconverged: false,
            aitken: false,
            picard_tol: 1e-8,
            picard_max_iter: 25,
            picard_mode: PicardMode::Full,
            supg_c: crate::levelset::transport::SUPG_C,
        },
        output: OutputSpec {
            dir: PathBuf::from("out"),
            stride: 10,
            csv: true,
            vtk: true,
        },
    }
}

fn vortex_preset() -> SimConfig {
    let mut c = defaults();
    // Pure transport: the kernel width only matters for diagnostics.
    c.params.eps = 0.05;
    c
}

fn shear_preset(xi: f64, beta: f64, t_final: f64) -> SimConfig {
    let n = SHEAR_N;
    let h = 1.0 / n as f64;
    let mut c = defaults();
    c.scenario = ScenarioKind::Shear;
    c.mesh = MeshSpec {
        nx: 4 * n,
        ny: 2 * n,
        rect: Rect::new(0.0, 0.0, 4.0, 2.0),
        file: None,
    };
    c.params = PhysParams {
        re: 9e-3,
        ca: 4e4,
        beta,
        upsilon: 1.0,
        eps: 1.5 * h,
        ..c.params
    };
    // Unit effective diameter: perimeter π.
    c.shape = ShapeSpec::Reduced {
        center: [2.0, 1.0],
        xi,
        perimeter: std::f64::consts::PI,
        rotation: std::f64::consts::PI / 8.0,
    };
    c.dt = DtRule::Fixed(h);
    c.t_final = t_final;
    c.coupling.picard_mode = PicardMode::Single;
    c.coupling.fp_max_iter = SHEAR_FP_MAX_ITER;
    c.coupling.accept_unconverged = true;
    c.output.stride = 24;
    c
}

/// Fixed-point cap used by the shear presets (see the README on cost).
pub const SHEAR_FP_MAX_ITER: usize = 2;

/// Parses configuration text; relative `mesh.file` paths resolve against `base`.
pub fn parse_config_in(text: &str, base: Option<&Path>) -> Result<SimConfig> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut preset = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        if k == "preset" {
            if preset.is_some() {
                return Err(Error::Syntax {
                    line: i + 1,
                    message: "preset given twice".into(),
                });
            }
            preset = Some((i + 1, v.to_owned()));
        } else {
            entries.push((i + 1, k.to_owned(), v.to_owned()));
        }
    }

    let mut errors = Vec::new();
    let mut cfg = match &preset {
        None => defaults(),
        Some((line, name)) => match SimConfig::preset(name) {
            Some(c) => c,
            None => {
                errors.push(format!("line {line}: unknown preset `{name}` (known: {})", PRESETS.join(", ")));
                defaults()
            }
        },
    };

    let keys: BTreeMap<&str, (usize, &str)> = entries.iter().map(|(l, k, v)| (k.as_str(), (*l, v.as_str()))).collect();
    if keys.len() != entries.len() {
        let mut seen = std::collections::HashSet::new();
        for (l, k, _) in &entries {
            if !seen.insert(k) {
                errors.push(format!("line {l}: duplicate key `{k}`"));
            }
        }
    }

    // Shape keys are combined after the loop.
    let mut shape_type = None;
    let mut shape_vals: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut eps_given = false;

    for (&key, &(line, val)) in &keys {
        let mut err = |msg: String| errors.push(format!("line {line}: {key}: {msg}"));
        macro_rules! set {
            ($target:expr, $parse:expr) => {
                match $parse(val) {
                    Ok(v) => $target = v,
                    Err(m) => err(m),
                }
            };
        }
        match key {
            "scenario" => set!(cfg.scenario, |v: &str| match v {
                "vortex" => Ok(ScenarioKind::Vortex),
                "shear" => Ok(ScenarioKind::Shear),
                _ => Err(format!("expected vortex or shear, got `{v}`")),
            }),
            "mesh.nx" => set!(cfg.mesh.nx, uint),
            "mesh.ny" => set!(cfg.mesh.ny, uint),
            "mesh.rect" => set!(cfg.mesh.rect, |v| floats::<4>(v).map(|r| Rect::new(r[0], r[1], r[2], r[3]))),
            "mesh.file" => {
                let p = PathBuf::from(val);
                cfg.mesh.file = Some(match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                });
            }
            "degrees.phi" => set!(cfg.k_phi, uint),
            "degrees.velocity" => {
                if val != "2" {
                    err("only Taylor-Hood (velocity degree 2) is supported".into());
                }
            }
            "degrees.pressure" => {
                if val != "1" {
                    err("only Taylor-Hood (pressure degree 1) is supported".into());
                }
            }
            "params.Re" => set!(cfg.params.re, float),
            "params.Ca" => set!(cfg.params.ca, float),
            "params.beta" => set!(cfg.params.beta, float),
            "params.upsilon" => set!(cfg.params.upsilon, float),
            "params.eps" => {
                eps_given = true;
                set!(cfg.params.eps, float)
            }
            "params.eps_lambda" => set!(cfg.params.eps_lambda, float),
            "params.gamma_min" => set!(cfg.params.gamma_min, float),
            "params.strain_norm" => set!(cfg.params.strain_norm, |v: &str| match v {
                "frobenius" => Ok(StrainNorm::Frobenius),
                "invariant" => Ok(StrainNorm::Invariant),
                _ => Err(format!("expected frobenius or invariant, got `{v}`")),
            }),
            "params.penalty_quadrature" => set!(cfg.params.penalty_quadrature, uint),
            "shape.type" => shape_type = Some((line, val)),
            "shape.center" | "shape.radius" | "shape.radii" | "shape.rotation" | "shape.xi" | "shape.perimeter" => {
                shape_vals.insert(key, (line, val));
            }
            "vortex.psi" => set!(cfg.vortex.psi, float),
            "vortex.period" => set!(cfg.vortex.period, float),
            "shear.rate" => set!(cfg.shear.rate, float),
            "shear.y_center" => set!(cfg.shear.y_center, float),
            "time.dt" => set!(cfg.dt, |v: &str| match v {
                "h^k" => Ok(DtRule::MeshPower),
                _ => float(v).map(DtRule::Fixed),
            }),
            "time.t_final" => set!(cfg.t_final, float),
            "coupling.fp_tol" => set!(cfg.coupling.fp_tol, float),
            "coupling.fp_max_iter" => set!(cfg.coupling.fp_max_iter, uint),
            "coupling.redistance_every" => set!(cfg.coupling.redistance_every, uint),
            "coupling.accept_unconverged" => set!(cfg.coupling.accept_unconverged, boolean),
            "coupling.aitken" => set!(cfg.coupling.aitken, boolean),
            "picard.tol" => set!(cfg.coupling.picard_tol, float),
            "picard.max_iter" => set!(cfg.coupling.picard_max_iter, uint),
            "picard.mode" => set!(cfg.coupling.picard_mode, |v: &str| match v {
                "full" => Ok(PicardMode::Full),
                "single" => Ok(PicardMode::Single),
                _ => Err(format!("expected full or single, got `{v}`")),
            }),
            "levelset.supg_c" => set!(cfg.coupling.supg_c, float),
            "output.dir" => cfg.output.dir = PathBuf::from(val),
            "output.stride" => set!(cfg.output.stride, uint),
            "output.formats" => {
                cfg.output.csv = false;
                cfg.output.vtk = false;
                for f in val.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    match f {
                        "csv" => cfg.output.csv = true,
                        "vtk" => cfg.output.vtk = true,
                        _ => err(format!("unknown format `{f}` (csv, vtk)")),
                    }
                }
            }
            _ => err("unknown key".into()),
        }
    }

    if let Err(mut e) = apply_shape(&mut cfg.shape, shape_type, &shape_vals) {
        errors.append(&mut e);
    }

    // A structured shear mesh keeps the kernel tied to the grid unless the
    // width is given explicitly.
    if !eps_given && cfg.scenario == ScenarioKind::Shear && cfg.mesh.file.is_none() && cfg.mesh.nx > 0 && cfg.mesh.ny > 0 {
        cfg.params.eps = 1.5 * cfg.mesh.spacing();
    }

    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(errors))
    }
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    parse_config_in(text, None)
}

pub fn read_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_in(&text, path.parent())
}

fn apply_shape(
    shape: &mut ShapeSpec,
    ty: Option<(usize, &str)>,
    vals: &BTreeMap<&str, (usize, &str)>,
) -> std::result::Result<(), Vec<String>> {
    if ty.is_none() && vals.is_empty() {
        return Ok(());
    }
    let (mut center, mut rotation) = match *shape {
        ShapeSpec::Circle { center, .. } => (center, 0.0),
        ShapeSpec::Ellipse { center, rotation, .. } | ShapeSpec::Reduced { center, rotation, .. } => (center, rotation),
    };
    let mut errors = Vec::new();
    let get = |key: &str| vals.get(key).map(|&(_, v)| v);
    let fail = |key: &str, m: String| {
        let line = vals.get(key).map(|v| v.0).unwrap_or(0);
        format!("line {line}: {key}: {m}")
    };
    if let Some(v) = get("shape.center") {
        match floats::<2>(v) {
            Ok(c) => center = c,
            Err(m) => errors.push(fail("shape.center", m)),
        }
    }
    if let Some(v) = get("shape.rotation") {
        match float(v) {
            Ok(r) => rotation = r,
            Err(m) => errors.push(fail("shape.rotation", m)),
        }
    }
    let kind = match ty {
        Some((_, t)) => t,
        None => match shape {
            ShapeSpec::Circle { .. } => "circle",
            ShapeSpec::Ellipse { .. } => "ellipse",
            ShapeSpec::Reduced { .. } => "reduced",
        },
    };
    let num = |key: &str, current: f64, errors: &mut Vec<String>| match vals.get(key) {
        None => current,
        Some(&(_, v)) => float(v).unwrap_or_else(|m| {
            errors.push(fail(key, m));
            current
        }),
    };
    let new = match kind {
        "circle" => {
            let r0 = if let ShapeSpec::Circle { radius, .. } = *shape { radius } else { f64::NAN };
            let radius = num("shape.radius", r0, &mut errors);
            if radius.is_nan() {
                errors.push("shape.radius: required for a circle".into());
            }
            ShapeSpec::Circle { center, radius }
        }
        "ellipse" => {
            let r0 = if let ShapeSpec::Ellipse { radii, .. } = *shape { Some(radii) } else { None };
            let radii = match vals.get("shape.radii") {
                Some(&(_, v)) => floats::<2>(v).map_err(|m| errors.push(fail("shape.radii", m))).ok().or(r0),
                None => r0,
            };
            match radii {
                Some(radii) => ShapeSpec::Ellipse { center, radii, rotation },
                None => {
                    errors.push("shape.radii: required for an ellipse".into());
                    *shape
                }
            }
        }
        "reduced" => {
            let (x0, p0) = if let ShapeSpec::Reduced { xi, perimeter, .. } = *shape { (xi, perimeter) } else { (f64::NAN, f64::NAN) };
            let xi = num("shape.xi", x0, &mut errors);
            let perimeter = num("shape.perimeter", p0, &mut errors);
            if xi.is_nan() || perimeter.is_nan() {
                errors.push("shape.xi and shape.perimeter: required for a reduced-area ellipse".into());
            }
            ShapeSpec::Reduced { center, xi, perimeter, rotation }
        }
        other => {
            let line = ty.map(|t| t.0).unwrap_or(0);
            errors.push(format!("line {line}: shape.type: expected circle, ellipse or reduced, got `{other}`"));
            *shape
        }
    };
    let allowed: &[&str] = match kind {
        "circle" => &["shape.center", "shape.radius"],
        "ellipse" => &["shape.center", "shape.radii", "shape.rotation"],
        _ => &["shape.center", "shape.xi", "shape.perimeter", "shape.rotation"],
    };
    for (k, (line, _)) in vals {
        if !allowed.contains(k) {
            errors.push(format!("line {line}: {k}: not used by shape type {kind}"));
        }
    }
    *shape = new;
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn float(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got `{v}`"))
}

fn uint(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn floats<const N: usize>(v: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{v}`"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = float(p)?;
    }
    Ok(out)
}
