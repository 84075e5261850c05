//! End-to-end tests of the `csnn` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SHORT_ROBIN: &str = "[problem]\nproblem = robin1d\nN = 8\n\n[train]\niterations = 200\n";

fn csnn(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_csnn"));
    cmd.args(args).env_remove("CSNN_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("CSNN_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_problems_prints_catalog() {
    let out = csnn(&["list-problems"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "robin1d",
            "poisson2d_rect",
            "poisson2d_annulus",
            "helmholtz2d_annulus",
            "poisson2d_disk",
            "elliptic3d_cyl",
            "poisson4d"
        ]
    );
}

#[test]
fn run_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "robin.conf", SHORT_ROBIN);
    let out_dir = dir.path().join("out");
    let out = csnn(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert!(lines.next().unwrap().starts_with("problem,N,iterations,final_loss,linf"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["robin1d", "8", "200"]);
    assert_eq!(row[7], "501");

    let loss = fs::read_to_string(out_dir.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().next(), Some("iter,loss,lr,u0"));
    assert_eq!(loss.lines().count(), 201);
    let lrs: Vec<f64> = loss.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(lrs.windows(2).all(|w| w[1] <= w[0]));

    let grid = fs::read_to_string(out_dir.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 502);
    assert!(out_dir.join("model.ckpt").exists());
}

#[test]
fn verify_reproduces_run_errors() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "robin.conf", SHORT_ROBIN);
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    assert!(csnn(&["run", "--config", &config, "--out", out_str], None).status.success());
    let out = csnn(&["verify", "--config", &config, "--out", out_str], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let field = |file: &str, col: &str| -> String {
        let text = fs::read_to_string(out_dir.join(file)).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        row[header.iter().position(|h| *h == col).unwrap()].to_string()
    };
    assert_eq!(field("report.csv", "linf"), field("verify.csv", "linf"));
    assert_eq!(field("report.csv", "l2"), field("verify.csv", "l2"));
}

#[test]
fn verify_rejects_checkpoint_of_another_problem() {
    let dir = TempDir::new().unwrap();
    let robin = write_config(&dir, "robin.conf", SHORT_ROBIN);
    let rect = write_config(&dir, "rect.conf", "problem = poisson2d_rect\nN = 6\niterations = 5\n");
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    assert!(csnn(&["run", "--config", &robin, "--out", out_str], None).status.success());
    let out = csnn(&["verify", "--config", &rect, "--out", out_str], None);
    assert!(!out.status.success());
    assert!(!out_dir.join("verify.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "disk.conf",
        "problem = poisson2d_disk\nN = 6\nuniform_samples = 32\niterations = 1300\n",
    );
    let mut logs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = csnn(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()], None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        logs.push(fs::read(out_dir.join("loss.csv")).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn invalid_config_leaves_no_outputs() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "bad.conf", "problem = robin1d\nfactor = 1.5\n");
    let out_dir = dir.path().join("out");
    let out = csnn(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("factor"));
    assert!(!out_dir.exists());
}

#[test]
fn diverged_training_leaves_no_outputs() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "hot.conf", "problem = poisson2d_rect\nN = 6\niterations = 50\nlr = 1e300\n");
    let out_dir = dir.path().join("out");
    let out = csnn(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(!out_dir.exists());
}

#[test]
fn environment_selects_output_directory() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "robin.conf", SHORT_ROBIN);
    let env_dir = dir.path().join("from_env");
    let out = csnn(&["run", "--config", &config], Some(&env_dir));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.join("report.csv").exists());

    let flag_dir = dir.path().join("from_flag");
    let other_env = dir.path().join("unused");
    let out = csnn(&["run", "--config", &config, "--out", flag_dir.to_str().unwrap()], Some(&other_env));
    assert!(out.status.success());
    assert!(flag_dir.join("report.csv").exists());
    assert!(!other_env.exists());
}

#[test]
fn oracle_writes_solution() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "robin.conf", SHORT_ROBIN);
    let out_dir = dir.path().join("out");
    let out = csnn(&["oracle", "--config", &config, "--out", out_dir.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("oracle.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "robin1d");
    let loss: f64 = row[2].parse().unwrap();
    assert!(loss < 1e-12, "oracle loss {loss}");
    assert!(out_dir.join("oracle.ckpt").exists());
}

#[test]
fn sweep_writes_one_row_per_n() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "sweep.conf",
        "[problem]\nproblem = robin1d\nN = 8\n[train]\niterations = 100\n[output]\nN_list = 6, 8\n",
    );
    let out_dir = dir.path().join("out");
    let out = csnn(&["sweep", "--config", &config, "--out", out_dir.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let ns: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["6", "8"]);
}

#[test]
fn missing_config_fails_cleanly() {
    let out = csnn(&["run", "--config", "/nonexistent/csnn.conf"], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
