use std::path::Path;
use std::process::{Command, Output};

fn hjnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjnet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn probe_reports_value_and_branch() {
    let o = hjnet(&["probe", "--dx", "0.01", "--dt", "0.005"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1.0175\nbranch=stay\n");
    let o = hjnet(&["probe", "--dx", "0.01", "--dt", "0.01"]);
    assert!(stdout(&o).ends_with("branch=cross\n"));
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn solve_writes_snapshots_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = hjnet(&["solve", "--scenario", "test2", "--T", "2", "--dx", "0.01", "--dt", "0.025", "--witness", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = read_dir_sorted(&a);
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["test2_t0.0000.csv", "test2_t0.4000.csv", "test2_t0.8000.csv", "test2_t1.2500.csv", "test2_t2.0000.csv", "witness.csv"]);
    let header = String::from_utf8_lossy(&files[0].1).lines().next().unwrap().to_string();
    assert_eq!(header, "arc_id,s,x_pos,y_pos,value");
    assert_eq!(files, read_dir_sorted(&b));
}

#[test]
fn traffic_writes_densities() {
    let dir = tempfile::tempdir().unwrap();
    let o = hjnet(&["traffic", "--scenario", "rouen", "--snapshots", "0,1.5", "--svg", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = read_dir_sorted(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"rouen_rho_nodes_t1.5000.csv".to_string()), "{names:?}");
    assert!(names.contains(&"rouen_rho_t1.5000.svg".to_string()), "{names:?}");
}

#[test]
fn validation_errors_exit_one() {
    let o = hjnet(&["solve", "--scenario", "no/such/file.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[scenario]"));
    let o = hjnet(&["solve", "--scenario", "test1", "--dx", "0.3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn violated_threshold_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["converge", "--scenario", "test1", "--T", "0.2", "--resolutions", "0.02,0.01,0.005", "--reference", "0.0025", "--out", out];
    let ok = hjnet(&[&args[..], &["--assert-order", "1", "--tol", "0.3"]].concat());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = hjnet(&[&args[..], &["--assert-order", "3", "--tol", "0.1"]].concat());
    assert_eq!(bad.status.code(), Some(2));
    let report = std::fs::read_to_string(dir.path().join("test1_convergence.csv")).unwrap();
    assert!(report.starts_with("dx,dt,E_inf\n"));
}
