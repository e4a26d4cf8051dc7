use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coreshell::config::RunConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coreshell"));
    c.env_remove("CORESHELL_OUTPUT_ROOT").env("RUST_LOG", "warn");
    c
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A coarse, capped run that finishes in about a second.
fn tiny_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("tiny.toml");
    let text = format!(
        "[particle]\ncrack = \"surface\"\n\n[mesh]\ncoarsening = 4.0\nbulk = 0.8e-6\n\n\
         [scheme]\nmax_steps = 3\n\n[output]\nname = \"tiny\"\ndir = \"{}\"\nsnapshot_every = 2\n{extra}",
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bundled_configs_resolve() {
    let mut n = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "materials.toml" {
            continue;
        }
        let cfg = RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn derive_reproduces_tabulated_parameters() {
    let out = bin().args(["derive", "--json"]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let core = &v["core (NMC811)"];
    let shell = &v["shell (NMC532)"];
    let close = |got: &serde_json::Value, want: f64| ((got.as_f64().unwrap() - want) / want).abs() < 0.02;
    assert!(close(&core["g_c"], 0.299), "{core}");
    assert!(close(&shell["g_c"], 0.408), "{shell}");
    assert!(close(&core["ell"], 0.23e-6), "{core}");
    assert!(close(&shell["ell"], 0.27e-6), "{shell}");

    let file = configs_dir().join("materials.toml");
    let out = bin().args(["derive", file.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("nmc811") && text.contains("0.2989") && text.contains("0.4080"), "{text}");
}

#[test]
fn unknown_keys_are_listed_and_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "\n[protocol]\nc_rat = 2.0\n\n[mesh_extra]\nfoo = 1\n");
    let out = bin().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("protocol.c_rat") && err.contains("mesh_extra"), "{err}");
    assert!(!tmp.path().join("out").join("metrics.csv").exists());
}

#[test]
fn conflicting_and_invalid_parameters_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "\n[core]\npreset = \"nmc811\"\ng_c = 0.3\nk_c = 0.271\n");
    let out = bin().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    let cfg = tiny_config(tmp.path(), "\n[protocol]\nx_cv = 1.5\n");
    let out = bin().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    let out = bin().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn run_writes_its_artefacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tiny_config(tmp.path(), "");
    let out = bin().args(["run", cfg_path.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    for f in ["metrics.csv", "pattern.json", "effective_config.toml", "manifest.json", "sol.svg", "crack_volume.svg", "run.log"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let csv = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 4, "header plus initial state and three steps");
    assert!(lines[0].contains("sol") && lines[0].contains("stage"));
    let snaps: Vec<_> = fs::read_dir(dir.join("snapshots")).unwrap().collect();
    assert!(snaps.len() >= 2);
    let vtk = fs::read_to_string(dir.join("snapshots/step_000000.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    for field in ["SCALARS c ", "SCALARS phi ", "SCALARS zeta ", "SCALARS sigma_h ", "VECTORS u "] {
        assert!(vtk.contains(field), "{field}");
    }
    let record: serde_json::Value = serde_json::from_str(fs::read_to_string(dir.join("pattern.json")).unwrap().trim()).unwrap();
    assert_eq!(record["name"], "tiny");
    // the last stdout line is the same record
    let last = stdout(&out).lines().last().unwrap().to_string();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&last).unwrap(), record);

    // the effective config is complete and rebuilds the same run
    let original = RunConfig::from_file(&cfg_path).unwrap();
    let effective = RunConfig::from_file(&dir.join("effective_config.toml")).unwrap();
    assert_eq!(effective, original.effective().unwrap());
    assert_eq!(effective.effective().unwrap(), effective);
    let mut a = original.build().unwrap();
    let mut b = effective.build().unwrap();
    assert_eq!(a.mesh.n_elements(), b.mesh.n_elements());
    let ra = a.run(&mut coreshell::driver::Quiet).unwrap();
    let rb = b.run(&mut coreshell::driver::Quiet).unwrap();
    assert_eq!(ra.series.rows, rb.series.rows);
}

#[test]
fn sweep_members_are_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "");
    let out = bin()
        .args(["sweep", cfg.to_str().unwrap(), "--vary", "bonding=0.5,1", "--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let root = tmp.path().join("out");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("sweep.json")).unwrap()).unwrap();
    let members = summary.as_array().unwrap();
    assert_eq!(members.len(), 2);
    let dirs: Vec<PathBuf> = members.iter().map(|m| PathBuf::from(m["dir"].as_str().unwrap())).collect();
    assert_ne!(dirs[0], dirs[1]);
    let cfgs: Vec<RunConfig> = dirs
        .iter()
        .map(|d| RunConfig::from_file(&d.join("effective_config.toml")).unwrap())
        .collect();
    assert_eq!(cfgs[0].interface.bonding_ratio, Some(0.5));
    assert_eq!(cfgs[1].interface.bonding_ratio, Some(1.0));
    for d in &dirs {
        let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
        let diff: Vec<String> = serde_json::from_value(manifest["differs_from_base"].clone()).unwrap();
        assert!(diff.iter().all(|p| p.starts_with("interface.") || p.starts_with("output.")), "{diff:?}");
        assert!(diff.iter().any(|p| p.starts_with("interface.")), "{diff:?}");
    }
}

#[test]
fn output_root_variable_relocates_relative_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("rel.toml");
    fs::write(
        &path,
        "[particle]\ncrack = \"none\"\n[protocol]\nc_rate = 0.0\n[mesh]\ncoarsening = 4.0\nbulk = 0.8e-6\n[output]\ndir = \"nested/run\"\n",
    )
    .unwrap();
    let out = bin()
        .env("CORESHELL_OUTPUT_ROOT", tmp.path())
        .args(["run", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(tmp.path().join("nested/run/pattern.json").exists());
}

#[test]
fn verification_suite_passes() {
    let out = bin().args(["check", "--json"]).output().unwrap();
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
    let checks: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["passed"] == true));
}
