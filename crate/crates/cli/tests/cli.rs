use std::path::Path;
use std::process::Command;

use dec_green::mesh::read_mesh;
use dec_green_cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("dec-green").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn usage_errors_exit_1() {
    let (code, _, err) = invoke(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(invoke(&[]).0, 1);
    assert_eq!(invoke(&["sobolev", "--refinements", "x"]).0, 1);
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("green-decay"));
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out").display().to_string();
    let (code, _, err) = invoke(&["sobolev", "--config", "/nonexistent/cfg.toml", "--out-dir", &out_dir]);
    assert_eq!(code, 1);
    assert!(err.contains("missing input"), "{err}");

    let cfg = write_config(tmp.path(), "[mesh]\nshape = \"sphere\"\n");
    let (code, _, err) = invoke(&["sobolev", "--config", &cfg, "--out-dir", &out_dir]);
    assert_eq!(code, 1);
    assert!(err.contains("config error"), "{err}");

    let cfg = write_config(tmp.path(), "[run]\nrefinements = 1\n[mesh]\nfile = \"/nonexistent/m.mesh\"\n");
    let (code, _, err) = invoke(&["mesh-gen", "--config", &cfg, "--out-dir", &out_dir]);
    assert_eq!(code, 1);
    assert!(err.contains("mesh file"), "{err}");

    let cfg = write_config(tmp.path(), "[mesh]\nshape = \"annulus\"\n");
    assert_eq!(invoke(&["representation", "--config", &cfg, "--out-dir", &out_dir]).0, 1);
    assert!(!tmp.path().join("out").join("representation.csv").exists());
}

#[test]
fn harmonic_generator_is_reported_as_obstruction() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nrefinements = 1\n[mesh]\nshape = \"annulus\"\nresolution = 8\n[solve_d]\ninput = \"harmonic_generator\"\n",
    );
    let out_dir = tmp.path().join("out");
    let (code, _, err) = invoke(&["solve-d", "--config", &cfg, "--out-dir", &out_dir.display().to_string()]);
    assert_eq!(code, 2);
    assert!(err.contains("ObstructionNonExact"), "{err}");
    let csv = std::fs::read_to_string(out_dir.join("solve-d.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("Thm1.6,annulus,8,"), "{csv}");
    assert!(csv.contains("ObstructionNonExact"));
    let manifest = std::fs::read_to_string(out_dir.join("solve-d.manifest.toml")).unwrap();
    assert!(manifest.contains("passed = false"), "{manifest}");
}

#[test]
fn green_decay_on_box() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nrefinements = 1\n[mesh]\nshape = \"box3d\"\nresolution = 12\n");
    let out_dir = tmp.path().join("out");
    let (code, out, err) = invoke(&["green-decay", "--config", &cfg, "--out-dir", &out_dir.display().to_string()]);
    assert_eq!(code, 0, "{out}{err}");
    let csv = std::fs::read_to_string(out_dir.join("green-decay.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "fitted_slope").unwrap();
    let kernel_row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(kernel_row[0], "Thm1.1.i");
    let slope: f64 = kernel_row[col].parse().unwrap();
    assert!((-1.3..=-0.75).contains(&slope), "{slope}");
    let tags: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(tags, ["Thm1.1.i", "Thm1.1.ii", "Thm1.1.iv"]);
    let svg = std::fs::read_to_string(out_dir.join("green-decay_p0.svg")).unwrap();
    assert_eq!(svg.matches("<line").count(), 1);
}

#[test]
fn mesh_gen_writes_readable_meshes_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nrefinements = 2\n[mesh]\nshape = \"annulus\"\nresolution = 6\n");
    let out_dir = tmp.path().join("out");
    let (code, out, err) = invoke(&["mesh-gen", "--config", &cfg, "--out-dir", &out_dir.display().to_string()]);
    assert_eq!(code, 0, "{out}{err}");
    for res in [6, 12] {
        let text = std::fs::read_to_string(out_dir.join(format!("annulus_r{res}.mesh"))).unwrap();
        let m = read_mesh(&text).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
    }
    let csv = std::fs::read_to_string(out_dir.join("mesh-gen.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let manifest = std::fs::read_to_string(out_dir.join("mesh-gen.manifest.toml")).unwrap();
    for key in ["experiment = \"mesh-gen\"", "config_hash = ", "seed = 0", "[versions]", "annulus_r12.mesh"] {
        assert!(manifest.contains(key), "{key} missing in {manifest}");
    }

    // a generated mesh can be fed back in
    let cfg = write_config(
        tmp.path(),
        &format!("[run]\nrefinements = 1\n[mesh]\nfile = \"{}\"\n", out_dir.join("annulus_r6.mesh").display()),
    );
    let back = tmp.path().join("back");
    let (code, _, err) = invoke(&["mesh-gen", "--config", &cfg, "--out-dir", &back.display().to_string()]);
    assert_eq!(code, 0, "{err}");
    assert!(back.join("annulus_r6.mesh").exists());
}

#[test]
fn seed_flag_changes_the_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nrefinements = 1\n[mesh]\nresolution = 4\n");
    let hash = |seed: &str, dir: &str| {
        let d = tmp.path().join(dir);
        let (code, _, err) = invoke(&["mesh-gen", "--config", &cfg, "--seed", seed, "--out-dir", &d.display().to_string()]);
        assert_eq!(code, 0, "{err}");
        let m = std::fs::read_to_string(d.join("mesh-gen.manifest.toml")).unwrap();
        m.lines().find(|l| l.starts_with("config_hash")).unwrap().to_string()
    };
    assert_eq!(hash("1", "a"), hash("1", "b"));
    assert_ne!(hash("1", "c"), hash("2", "d"));
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nrefinements = 1\nout_dir = \"ignored\"\n[mesh]\nresolution = 4\n");
    let env_dir = tmp.path().join("from_env");
    let status = Command::new(env!("CARGO_BIN_EXE_dec-green"))
        .args(["mesh-gen", "--config", &cfg])
        .current_dir(tmp.path())
        .env("DEC_GREEN_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(env_dir.join("mesh-gen.csv").exists());
    assert!(!tmp.path().join("ignored").exists());

    // the flag wins over the environment
    let flag_dir = tmp.path().join("from_flag");
    let status = Command::new(env!("CARGO_BIN_EXE_dec-green"))
        .args(["mesh-gen", "--config", &cfg, "--out-dir"])
        .arg(&flag_dir)
        .env("DEC_GREEN_OUT_DIR", tmp.path().join("unused"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(flag_dir.join("mesh-gen.csv").exists());
    assert!(!tmp.path().join("unused").exists());
}

#[test]
fn dbar_reports_every_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nrefinements = 2\n[dbar]\ncells = 12\nsamples = 4\nadjoint_pairs = 10\n",
    );
    let out_dir = tmp.path().join("out");
    let (code, out, err) = invoke(&["dbar", "--config", &cfg, "--out-dir", &out_dir.display().to_string()]);
    assert_eq!(code, 0, "{out}{err}");
    let csv = std::fs::read_to_string(out_dir.join("dbar.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "tag,h,sample,f_norm_sq,n_f,u_norm_sq,delta_hat");
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    let summary = std::fs::read_to_string(out_dir.join("dbar-summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap().ends_with("monotone"));
    assert!(summary.contains("Thm1.8"));
}
