//! Command-line experiment runner.
//!
//! Every subcommand computes its outputs in memory first and writes them
//! at the end, so a failed run leaves no partial files behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, TrainConfig};
use crate::error::{CsnnError, Result};
use crate::model::TensorModel;
use crate::problems::{self, ProblemSpec};
use crate::trainer::train;
use crate::verify::{convergence_study, error_norms, evaluate_grid, oracle_for_config, test_grid, ErrorReport};

/// Overrides the output directory of every subcommand except `--out`.
pub const OUT_DIR_ENV: &str = "CSNN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "csnn", version, about = "Chebyshev spectral network solver for elliptic benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write report.csv, loss.csv, grid.csv and model.ckpt.
    Run(RunArgs),
    /// Train over the configured N list and write sweep.csv.
    Sweep(RunArgs),
    /// Solve the collocation system directly and write oracle.csv and oracle.ckpt.
    Oracle(RunArgs),
    /// Re-evaluate a saved checkpoint and write verify.csv.
    Verify {
        #[command(flatten)]
        args: RunArgs,
        /// Checkpoint to load; defaults to model.ckpt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Print the benchmark catalog.
    ListProblems,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_config(args: &RunArgs) -> Result<TrainConfig> {
    let text = fs::read_to_string(&args.config)?;
    parse_config(&text)
}

/// Output directory: `--out`, then the environment, then the config.
pub fn resolve_out_dir(cli_out: Option<&Path>, cfg: &TrainConfig) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.out_dir_or_default(),
    }
}

/// Writes every file or none of them.
fn commit(dir: &Path, files: Vec<(&str, String)>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

const REPORT_HEADER: &str = "problem,N,iterations,final_loss,linf,l2,rel_l2,points,grid,u0,u0_exact,seconds";

fn report_row(spec: &ProblemSpec, n: usize, iterations: usize, loss: f64, r: &ErrorReport, u0: Option<f64>, seconds: f64) -> String {
    let (u0, u0_exact) = match u0 {
        Some(v) => (fmt(v), fmt(spec.exact_solution(&[0.0, 0.0]))),
        None => (String::new(), String::new()),
    };
    format!(
        "{},{n},{iterations},{},{},{},{},{},{},{u0},{u0_exact},{seconds:.2}",
        spec.name(),
        fmt(loss),
        fmt(r.linf),
        fmt(r.l2),
        fmt(r.rel_l2),
        r.count,
        r.grid
    )
}

fn grid_csv(spec: &ProblemSpec, model: &TensorModel, cells: usize) -> Result<(String, ErrorReport)> {
    let grid = test_grid(spec, cells)?;
    let eval = evaluate_grid(spec, model, &grid)?;
    let d = spec.dims();
    let mut s = String::new();
    let header: Vec<String> = (0..d)
        .map(|i| format!("p{i}"))
        .chain((0..spec.map().dims()).map(|i| format!("x{i}")))
        .chain(["predicted", "exact", "error"].map(String::from))
        .collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for ((p, pred), exact) in grid.points().zip(&eval.predicted).zip(&eval.exact) {
        let q = spec.map().map_point(&p);
        let cols: Vec<String> = p
            .iter()
            .chain(&q)
            .copied()
            .chain([*pred, *exact, (pred - exact).abs()])
            .map(fmt)
            .collect();
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    Ok((s, eval.report()))
}

fn run(args: &RunArgs) -> Result<String> {
    let cfg = load_config(args)?;
    let spec = cfg.spec()?;
    let (model, report) = train(&spec, &cfg)?;
    let (grid, errors) = grid_csv(&spec, &model, cfg.grid_cells)?;
    let row = report_row(
        &spec,
        cfg.n,
        cfg.total_iterations(),
        report.final_loss,
        &errors,
        model.u0(),
        report.seconds,
    );
    let dir = resolve_out_dir(args.out.as_deref(), &cfg);
    commit(
        &dir,
        vec![
            ("report.csv", format!("{REPORT_HEADER}\n{row}\n")),
            ("loss.csv", report.loss_csv()),
            ("grid.csv", grid),
            ("model.ckpt", model.to_checkpoint()),
        ],
    )?;
    Ok(format!(
        "{} N={} linf={:.3e} l2={:.3e} rel_l2={:.3e} -> {}",
        spec.name(),
        cfg.n,
        errors.linf,
        errors.l2,
        errors.rel_l2,
        dir.display()
    ))
}

fn sweep(args: &RunArgs) -> Result<String> {
    let cfg = load_config(args)?;
    let spec = cfg.spec()?;
    let rows = convergence_study(&spec, &cfg.n_list, &cfg)?;
    let mut csv = String::from("N,iterations,linf,l2,rel_l2,final_loss,seconds\n");
    let mut summary = String::new();
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{:.2}",
            r.n,
            cfg.iterations_at(r.n),
            fmt(r.report.linf),
            fmt(r.report.l2),
            fmt(r.report.rel_l2),
            fmt(r.final_loss),
            r.seconds
        );
        let _ = writeln!(summary, "N={:<3} linf={:.3e} l2={:.3e} {:.2}s", r.n, r.report.linf, r.report.l2, r.seconds);
    }
    let dir = resolve_out_dir(args.out.as_deref(), &cfg);
    commit(&dir, vec![("sweep.csv", csv)])?;
    Ok(summary.trim_end().to_string())
}

fn oracle(args: &RunArgs) -> Result<String> {
    let cfg = load_config(args)?;
    let spec = cfg.spec()?;
    let start = std::time::Instant::now();
    let sol = oracle_for_config(&spec, &cfg)?;
    let errors = error_norms(&spec, &sol.model, &test_grid(&spec, cfg.grid_cells)?)?;
    let u0 = sol.model.u0().map(fmt).unwrap_or_default();
    let csv = format!(
        "problem,N,oracle_loss,rank,columns,linf,l2,rel_l2,points,u0,seconds\n{},{},{},{},{},{},{},{},{},{u0},{:.2}\n",
        spec.name(),
        cfg.n,
        fmt(sol.loss),
        sol.rank,
        sol.columns,
        fmt(errors.linf),
        fmt(errors.l2),
        fmt(errors.rel_l2),
        errors.count,
        start.elapsed().as_secs_f64()
    );
    let dir = resolve_out_dir(args.out.as_deref(), &cfg);
    commit(&dir, vec![("oracle.csv", csv), ("oracle.ckpt", sol.model.to_checkpoint())])?;
    let mut msg = format!(
        "{} N={} oracle loss={:.3e} linf={:.3e} l2={:.3e}",
        spec.name(),
        cfg.n,
        sol.loss,
        errors.linf,
        errors.l2
    );
    if let Some(w) = sol.warning {
        msg.push_str(&format!("\nwarning: {w}"));
    }
    Ok(msg)
}

fn verify(args: &RunArgs, checkpoint: Option<&Path>) -> Result<String> {
    let cfg = load_config(args)?;
    let spec = cfg.spec()?;
    let dir = resolve_out_dir(args.out.as_deref(), &cfg);
    let path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| dir.join("model.ckpt"));
    let model = TensorModel::load(&path)?;
    let compatible = model.dims() == spec.dims()
        && model.u0().is_some() == spec.has_u0()
        && model.families().iter().zip(spec.axes()).all(|(f, a)| f.kind() == a.kind);
    if !compatible {
        return Err(CsnnError::Checkpoint(format!(
            "{} does not hold a {} model",
            path.display(),
            spec.name()
        )));
    }
    let errors = error_norms(&spec, &model, &test_grid(&spec, cfg.grid_cells)?)?;
    let u0 = model.u0().map(fmt).unwrap_or_default();
    let csv = format!(
        "problem,checkpoint,linf,l2,rel_l2,points,grid,u0\n{},{},{},{},{},{},{},{u0}\n",
        spec.name(),
        path.display(),
        fmt(errors.linf),
        fmt(errors.l2),
        fmt(errors.rel_l2),
        errors.count,
        errors.grid
    );
    commit(&dir, vec![("verify.csv", csv)])?;
    Ok(format!(
        "{} linf={:.3e} l2={:.3e} rel_l2={:.3e}",
        spec.name(),
        errors.linf,
        errors.l2,
        errors.rel_l2
    ))
}

pub fn list_problems() -> String {
    problems::all()
        .iter()
        .map(|s| format!("{:<20} {}", s.name(), s.description()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Executes a parsed command and returns the text to print.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Oracle(args) => oracle(args),
        Command::Verify { args, checkpoint } => verify(args, checkpoint.as_deref()),
        Command::ListProblems => Ok(list_problems()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_listing_has_seven_entries() {
        let text = list_problems();
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().any(|l| l.starts_with("poisson4d")));
    }

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["csnn", "run", "--config", "a.conf", "--out", "o"]).unwrap();
        assert!(matches!(cli.command, Command::Run(RunArgs { ref out, .. }) if out.as_deref() == Some(Path::new("o"))));
        let cli = Cli::try_parse_from(["csnn", "list-problems"]).unwrap();
        assert!(matches!(cli.command, Command::ListProblems));
        assert!(Cli::try_parse_from(["csnn", "run"]).is_err());
        assert!(Cli::try_parse_from(["csnn", "train", "--config", "a"]).is_err());
    }

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("nested");
        let written = commit(&target, vec![("a.csv", "x\n".into()), ("b.csv", "y\n".into())]).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(target.join("b.csv")).unwrap(), "y\n");
    }
}
