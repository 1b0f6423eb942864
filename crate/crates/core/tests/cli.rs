use std::path::Path;
use std::process::{Command, Output};

use rough_plaplace::io::{read_field, write_vector, FieldFile};
use rough_plaplace::Grid;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rough-plaplace"))
        .args(args)
        .current_dir(dir)
        .env_remove("ROUGH_PLAPLACE_THREADS")
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn solve_writes_summary_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "solve",
            "--p",
            "3",
            "--n",
            "8",
            "--rough",
            "point-singularity:beta=0.5",
            "--out",
            "s.csv",
            "--u",
            "u.txt",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("s.csv"));
    assert_eq!(header, ["iterations", "residual", "energy"]);
    let residual: f64 = rows[0][1].parse().unwrap();
    assert!(residual < 1e-8);
    match read_field(dir.path().join("u.txt")).unwrap() {
        FieldFile::Scalar(u) => {
            assert_eq!(u.n(), 8);
            assert!(u.max_abs() > 0.0);
        }
        other => panic!("expected a scalar field, got {other:?}"),
    }
}

#[test]
fn norms_of_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(4).unwrap();
    let f = grid.vector_from_fn(|_, _| [3.0, 4.0]);
    write_vector(dir.path().join("f.txt"), &f).unwrap();
    let out = run(
        dir.path(),
        &[
            "norms", "--field", "f.txt", "--which", "lebesgue", "--q", "1.5", "--alpha", "1", "--out", "n.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("n.csv")).unwrap();
    let (name, value) = text.trim().split_once(',').unwrap();
    assert_eq!(name, "lebesgue");
    assert!((value.parse::<f64>().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn hodge_reports_residual() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(6).unwrap();
    let f = grid.vector_from_fn(|x, y| [x * y, (3.0 * x).sin()]);
    write_vector(dir.path().join("f.txt"), &f).unwrap();
    let out = run(
        dir.path(),
        &["hodge", "--field", "f.txt", "--phi-out", "phi.txt", "--out", "h.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("h.csv"));
    assert_eq!(header, ["residual", "r1", "r2"]);
    assert!(rows[0][0].parse::<f64>().unwrap() < 1e-10);
    assert_eq!(rows[0][1], "");
    assert!(dir.path().join("phi.txt").exists());
}

#[test]
fn verify_energy_passes_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "energy", "--n", "8", "--out", "e.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("e.csv"));
    assert_eq!(header.join(","), "id,p,q,alpha,n,lhs,rhs,ratio");
    assert!(rows[0][0].starts_with("energy/"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn failed_check_exits_3_and_config_can_relax_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "comparison", "--n", "8", "--out", "c.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL comparison ratio band"));
    // the table is still written
    let (header, _) = csv_rows(&dir.path().join("c.csv"));
    assert!(header.contains(&"k_a".to_string()));

    std::fs::write(dir.path().join("th.conf"), "# wider band\ncomparison_band = 1000\n").unwrap();
    let out = run(dir.path(), &["verify", "comparison", "--n", "8", "--config", "th.conf"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_field_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "scalar 2\n1\n2\nx\n").unwrap();
    let out = run(
        dir.path(),
        &["norms", "--field", "bad.txt", "--q", "1.5", "--alpha", "1"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn bad_parameters_and_usage_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["solve", "--p", "1.5", "--n", "4", "--rough", "smooth-random"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
    std::fs::write(dir.path().join("th.conf"), "no_such_key = 1\n").unwrap();
    let out = run(dir.path(), &["verify", "energy", "--n", "4", "--config", "th.conf"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_comes_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_rough-plaplace"))
        .args(["verify", "energy", "--n", "4"])
        .current_dir(dir.path())
        .env("ROUGH_PLAPLACE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("ROUGH_PLAPLACE_THREADS"));
    let ok = Command::new(env!("CARGO_BIN_EXE_rough-plaplace"))
        .args(["verify", "energy", "--n", "4"])
        .current_dir(dir.path())
        .env("ROUGH_PLAPLACE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
}
