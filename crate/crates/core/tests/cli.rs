use std::path::Path;
use std::process::{Command, Output};

fn vesiflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesiflow")).args(args).output().expect("spawn vesiflow")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn version_flag() {
    let out = vesiflow(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.cfg",
        "preset = vortex\nmesh.nx = 8\nmesh.ny = 8\ndegrees.phi = 1\ntime.dt = 0.05\ntime.t_final = 0.2\noutput.stride = 2\n",
    );
    let out_dir = dir.path().join("out");
    let out = vesiflow(&["run", "--config", &cfg, "--output", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,area,perimeter,xi2d,theta,bending_energy,fp_iters,surf_div");
    assert_eq!(csv.lines().count(), 5);
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("fields_000004.vtk").exists());
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "params.Ca = -1\nparams.Re = 0\n");
    let out = vesiflow(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params.Ca") && err.contains("params.Re"), "{err}");

    let missing = vesiflow(&["run", "--config", "/nonexistent/config.cfg"]);
    assert_eq!(missing.status.code(), Some(1));

    let syntax = write(dir.path(), "syn.cfg", "scenario vortex\n");
    assert_eq!(vesiflow(&["run", "--config", &syntax]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_2() {
    // the circle violates the boundary clearance once the kernel is wide
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "wide.cfg", "mesh.nx = 8\nmesh.ny = 8\nparams.eps = 0.2\n");
    let out = vesiflow(&["run", "--config", &cfg, "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fixed_point_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fp.cfg",
        "preset = fig4\nmesh.nx = 64\nmesh.ny = 32\ntime.t_final = 0.0625\ncoupling.fp_max_iter = 1\ncoupling.fp_tol = 1e-12\ncoupling.accept_unconverged = false\n",
    );
    let out = vesiflow(&["run", "--config", &cfg, "--output", dir.path().join("o").to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn converge_needs_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", "preset = vortex\n");
    let out = vesiflow(&["converge", "--config", &cfg, "--levels", "8,16", "--degrees", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn converge_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", "preset = vortex\ntime.t_final = 1\n");
    let out = vesiflow(&["converge", "--config", &cfg, "--levels", "8,12,16", "--degrees", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k_phi,n,h,dt,steps,error,error_exact,order");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].split(',').nth(7).is_some_and(|o| o.parse::<f64>().is_ok()));
}

#[test]
fn ks_oracle() {
    let out = vesiflow(&["oracle", "ks", "--xi", "0.68", "--beta", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("tank-treading") && text.contains("theta/pi = 0.106"), "{text}");
    let tb = vesiflow(&["oracle", "ks", "--xi", "0.68", "--beta", "10"]);
    assert!(String::from_utf8_lossy(&tb.stdout).contains("tumbling"));
    assert_eq!(vesiflow(&["oracle", "ks", "--xi", "1.2", "--beta", "1"]).status.code(), Some(1));
}
