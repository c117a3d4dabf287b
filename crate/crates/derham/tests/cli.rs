//! End-to-end checks of the `derham` binary: mesh round trips, report
//! formats, exit codes, and rerun determinism.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_derham"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("derham-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn mesh_gen_and_info_roundtrip() {
    let dir = tmpdir("mesh");
    let path = dir.join("m.txt");
    let st = bin()
        .args(["mesh", "gen", "--shape", "cube", "--n", "1", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(st.success());

    let out = bin().args(["mesh", "info"]).arg(&path).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tets: 6"));
    assert!(text.contains("euler: 1"));
    assert!(text.contains("boundary_faces: 12"));

    // Round trip: regenerating from the written file preserves connectivity.
    let mesh_text = std::fs::read_to_string(&path).unwrap();
    let reread = derham::mesh::Mesh::read_text(&mesh_text).unwrap();
    let direct = derham::mesh::generate(derham::mesh::Shape::CubeFreudenthal(1)).unwrap();
    assert_eq!(reread.tets, direct.tets);
    assert_eq!(reread.edges, direct.edges);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn mesh_info_rejects_degenerate_input() {
    let dir = tmpdir("degenerate");
    let path = dir.join("bad.txt");
    std::fs::write(&path, "4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 2\n").unwrap();
    let out = bin().args(["mesh", "info"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("degenerate element"), "stderr: {err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn constants_json_schema() {
    let out = bin()
        .args([
            "constants", "--shape", "cube", "--n", "1", "--l", "2", "--p", "0", "--seed", "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["version"].is_string());
    assert!(doc["input_hash"].is_string());
    let rep = &doc["reports"][0];
    for key in [
        "l",
        "p",
        "bc",
        "h_omega",
        "lambda_min_pos",
        "constant",
        "kernel_dim",
        "dim",
        "infsup",
        "potential_norm",
        "seed",
    ] {
        assert!(!rep[key].is_null(), "missing key {key}");
    }
    assert_eq!(rep["seed"], 5);
    assert_eq!(rep["dim"], 18);
}

#[test]
fn equivalence_passes_on_cube() {
    let out = bin()
        .args(["equivalence", "--shape", "cube", "--n", "1", "--l", "2", "--p", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS"), "{text}");
    // The three matched values are printed.
    assert_eq!(text.matches("constant").count(), 4);
}

#[test]
fn usage_and_cap_exit_codes() {
    let st = bin()
        .args(["constants", "--l", "5", "--shape", "cube", "--n", "1"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin()
        .args(["constants", "--l", "0", "--shape", "cube", "--n", "3", "--cap", "20"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["mesh", "info", "/nonexistent/mesh.txt"]).status().unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn study_is_sorted_and_bounded() {
    let out = bin()
        .args([
            "study", "--shape", "cube", "--n", "1..3", "--l", "0", "--p", "0", "--bc", "none",
            "--format", "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# derham "));
    assert!(meta.contains("seed=0"));
    assert!(meta.contains("input="));
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "shape,n,tets,rho,l,p,bc,dim,constant,infsup,potential_norm,kernel_dim"
    );
    let mut prev = 0.0f64;
    let mut count = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], "cube");
        let n: usize = cols[1].parse().unwrap();
        assert_eq!(n, count + 1, "rows sorted by n");
        let c: f64 = cols[8].parse().unwrap();
        assert!(c <= 1.0 / std::f64::consts::PI + 1e-9);
        assert!(c >= prev - 1e-10, "constants nondecreasing");
        prev = c;
        count += 1;
    }
    assert_eq!(count, 3);
}

#[test]
fn project_and_piola_pass() {
    let st = bin()
        .args([
            "project", "--shape", "cube", "--n", "1", "--kind", "equilibration", "--p", "0",
            "--samples", "2", "--seed", "9",
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let st = bin()
        .args([
            "project", "--shape", "cube", "--n", "1", "--kind", "minimizing", "--l", "2", "--p",
            "0", "--samples", "2",
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let st = bin()
        .args(["piola", "--shape", "stretched", "--n", "1", "--aspect", "4", "--p", "0"])
        .status()
        .unwrap();
    assert!(st.success());
}
