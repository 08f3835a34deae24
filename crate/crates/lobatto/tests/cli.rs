use std::path::Path;
use std::process::{Command, Output};

fn lobatto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lobatto")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn nodes_prints_rule() {
    let o = lobatto(&["nodes", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][1], 0.0);
    assert!((rows[1][2] - 4.0 / 3.0).abs() < 1e-15);
    assert!(text.contains("D_00 = -1.5"));
}

#[test]
fn exit_codes() {
    assert_eq!(lobatto(&["nodes", "0"]).status.code(), Some(2));
    assert_eq!(lobatto(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lobatto(&["hhg"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml").display().to_string();
    assert_eq!(lobatto(&["bound-states", "--config", &missing]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "[potential]\nkind = \"box\"\n[grid]\norder = 4\nr_min = 1.0\nr_max = 0.0\n");
    assert_eq!(lobatto(&["bound-states", "--config", &bad]).status.code(), Some(2));
    let typo = write(dir.path(), "typo.toml", "[potential]\nkind = \"box\"\n[grid]\nordre = 4\n");
    assert_eq!(lobatto(&["bound-states", "--config", &typo]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exit_code() {
    // The tabulated potential covers less than the grid.
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "v.csv", "# r, V\n0.0, 0.0\n1.0, 1.0\n2.0, 4.0\n");
    let cfg = write(
        dir.path(),
        "tab.toml",
        "[potential]\nkind = \"tabulated\"\npath = \"v.csv\"\n[grid]\norder = 4\nr_min = 0.0\nr_max = 5.0\nelements = 5\nuniform = 1.0\n",
    );
    let out = dir.path().join("run").display().to_string();
    let o = lobatto(&["bound-states", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bound_states_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "box.toml",
        "[potential]\nkind = \"box\"\n[grid]\norder = 8\nr_min = 0.0\nr_max = 3.141592653589793\nelements = 10\nuniform = 0.3141592653589793\n[eigen]\nstates = 2\n",
    );
    let out = dir.path().join("run");
    let o = lobatto(&["bound-states", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("0.500000000000"));
    let man: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(man["command"], "bound-states");
    assert_eq!(man["outputs"][0]["path"], "eigenvalues.csv");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            lobatto::config::RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 7);
}
