//! The `pim` command line: weights, solve, eigen, convergence, compare-fem.

pub mod experiment;
pub mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{io, mesh_to_cloud};
use crate::kernel::KernelFamily;
use crate::reference::loglog_slope;
use crate::solve::{AlmOptions, EigenOptions, SolveOptions, SolverChoice};
use crate::weights::{average_neighbor_distance, estimate_weights, WeightEstimateConfig};
use experiment::{
    convergence_study, is_cloud_file, run_level, ConvergenceRow, DomainKind, ExperimentConfig, Problem, Run,
    SCHEMA_VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "pim", version, about = "Point integral method solvers on point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute volume/boundary weights of a mesh or point cloud.
    Weights(WeightsArgs),
    /// Solve a Poisson problem on one refinement level.
    Solve(SolveArgs),
    /// Compute the smallest eigenpairs on one refinement level.
    Eigen(EigenArgs),
    /// Run a problem over a refinement hierarchy and fit the error slope.
    Convergence(ConvergenceArgs),
    /// Compare PIM with P1 finite elements over a refinement hierarchy.
    CompareFem(CompareArgs),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// OFF/TET mesh or PTS cloud.
    #[arg(long)]
    pub input: PathBuf,
    /// Augmented PTS output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Weights report (JSON).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Estimate weights from the points instead of using the mesh.
    #[arg(long)]
    pub estimate: bool,
    /// Intrinsic dimension (defaults to the file's).
    #[arg(long)]
    pub k: Option<usize>,
    /// Nearest neighbours for δ and the estimate.
    #[arg(long, default_value_t = 10)]
    pub nn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Iterative,
    Direct,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "disk")]
    pub domain: DomainKind,
    /// Mesh or cloud for `--domain file`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Kernel family: gaussian or compact.
    #[arg(long, default_value = "gaussian")]
    pub kernel: KernelFamily,
    /// `√t / δ` (default 0.5 planar Neumann, 0.375 volumetric Neumann, 0.75 Dirichlet).
    #[arg(long)]
    pub t_factor: Option<f64>,
    /// Explicit bandwidth `t`, overriding `--t-factor`.
    #[arg(long)]
    pub t: Option<f64>,
    /// Use the heat-kernel normalization `(4πt)^{-k/2}`.
    #[arg(long)]
    pub heat_normalized: bool,
    /// Robin parameter of the Dirichlet penalty.
    #[arg(long, default_value_t = 1e-4)]
    pub beta: f64,
    /// Disable snapping of refined boundary points to the analytic boundary.
    #[arg(long)]
    pub no_snap: bool,
    /// Estimate weights from the points.
    #[arg(long)]
    pub estimate: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub nn: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Linear solver tolerance (relative residual).
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Exit non-zero unless every tolerance is met.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "neumann")]
    pub problem: Problem,
    /// Refinement level (0 is the coarsest).
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// ALM iteration cap.
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// ALM boundary tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub alm_tol: f64,
    /// With `--check`, also require the error against the exact solution to be at most this.
    #[arg(long)]
    pub max_error: Option<f64>,
    /// Write L, I, B in MatrixMarket format to this directory.
    #[arg(long)]
    pub dump_matrices: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EigenProblemArg {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "neumann")]
    pub problem: EigenProblemArg,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long)]
    pub dump_matrices: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "neumann")]
    pub problem: Problem,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Also solve with P1 finite elements on each mesh.
    #[arg(long)]
    pub fem_compare: bool,
    /// Tracked eigenvalue (0-based; the Neumann zero eigenvalue is index 0).
    #[arg(long, default_value_t = 6)]
    pub index: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// With `--check`, the smallest acceptable fitted slope of `err_pim`.
    #[arg(long)]
    pub min_slope: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "neumann")]
    pub problem: EigenProblemArg,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
}

impl CommonArgs {
    fn config(&self, problem: Problem) -> ExperimentConfig {
        ExperimentConfig {
            domain: self.domain,
            input: self.input.clone(),
            problem,
            kernel: self.kernel,
            t_factor: self.t_factor,
            t: self.t,
            heat_normalized: self.heat_normalized,
            beta: self.beta,
            count: 10,
            seed: self.seed,
            snap: !self.no_snap,
            estimate: self.estimate,
            k: self.k,
            nn: self.nn,
            alm: AlmOptions::default(),
            solve: SolveOptions {
                tol: self.tol,
                choice: match self.solver {
                    SolverArg::Auto => SolverChoice::Auto,
                    SolverArg::Iterative => SolverChoice::Iterative,
                    SolverArg::Direct => SolverChoice::Direct,
                },
                ..SolveOptions::default()
            },
            eigen: EigenOptions::default(),
        }
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }
}

/// Outcome of a command: `Ok(true)` when every check passed.
type Outcome = Result<bool>;

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Weights(a) => cmd_weights(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Eigen(a) => cmd_eigen(&a),
        Command::Convergence(a) => cmd_convergence(&a),
        Command::CompareFem(a) => cmd_compare_fem(&a),
    }
}

/// Caps rayon and faer parallelism by `PIM_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("PIM_THREADS must be a positive integer (got `{raw}`)")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot configure threads: {e}")))?;
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("pim: check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("pim: {e}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Serialize)]
struct WeightsReport<'a> {
    schema_version: u32,
    input: &'a Path,
    method: &'static str,
    n: usize,
    m: usize,
    intrinsic_dim: usize,
    nn: usize,
    delta: f64,
    total_volume: f64,
    total_boundary: f64,
    volume: &'a [f64],
    boundary: &'a [f64],
}

fn cmd_weights(a: &WeightsArgs) -> Outcome {
    let (mut cloud, from_mesh) = if is_cloud_file(&a.input) {
        (io::load_cloud(&a.input)?, false)
    } else {
        (mesh_to_cloud(&io::load_mesh(&a.input)?)?, true)
    };
    let k = a.k.unwrap_or(cloud.intrinsic_dim());
    let (delta, method) = if a.estimate {
        let mut cfg = WeightEstimateConfig::for_dim(k);
        cfg.nn_count = a.nn;
        let est = estimate_weights(cloud.points(), cloud.boundary(), k, &cfg)?;
        cloud.set_weights(est.volume, est.boundary)?;
        (est.delta, "estimated")
    } else if cloud.has_weights() {
        let method = if from_mesh { "mesh" } else { "file" };
        (average_neighbor_distance(cloud.points(), k, a.nn)?, method)
    } else {
        return Err(Error::WeightsRequired(format!(
            "{} carries no weights; pass --estimate",
            a.input.display()
        )));
    };
    let volume = cloud.volume_weights().expect("weights set");
    let boundary = cloud.boundary_weights().expect("weights set");
    println!("delta = {delta}");
    if let Some(out) = &a.out {
        io::save_cloud(&cloud, out)?;
    }
    if let Some(json) = &a.json {
        output::write_json(
            json,
            &WeightsReport {
                schema_version: SCHEMA_VERSION,
                input: &a.input,
                method,
                n: cloud.len(),
                m: cloud.boundary_len(),
                intrinsic_dim: k,
                nn: a.nn,
                delta,
                total_volume: volume.iter().sum(),
                total_boundary: boundary.iter().sum(),
                volume,
                boundary,
            },
        )?;
    }
    Ok(true)
}

fn dump(run: &Run, dir: &Option<PathBuf>) -> Result<()> {
    if let Some(dir) = dir {
        run.system.dump_matrix_market(dir)?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    if a.problem.is_eigen() {
        return Err(Error::Config("use `pim eigen` for eigenproblems".into()));
    }
    let mut cfg = a.common.config(a.problem);
    cfg.alm = AlmOptions {
        max_iter: a.max_iter,
        tol: a.alm_tol,
    };
    let run = run_level(&cfg, a.level)?;
    dump(&run, &a.dump_matrices)?;
    let u = run.u.as_ref().expect("poisson run");
    output::solution_csv(&a.common.out("solution.csv")?, &run.sample.cloud, u)?;
    if let Some(h) = &run.alm_history {
        output::history_csv(&a.common.out("alm_history.csv")?, h)?;
    }
    output::write_json(&a.common.out("report.json")?, &run.report)?;
    let s = run.report.solve.as_ref().expect("poisson run");
    println!(
        "n = {}, t = {:.6e}, iterations = {}, residual = {:.3e}{}",
        run.report.params.n,
        run.report.params.t,
        s.iterations,
        s.relative_residual,
        s.error.map_or_else(String::new, |e| format!(", error = {e:.6e}"))
    );
    let mut ok = s.relative_residual <= cfg.solve.tol;
    if let (Some(limit), Some(err)) = (a.max_error, s.error) {
        ok &= err <= limit;
    }
    if a.problem == Problem::DirichletAlm {
        ok &= s.alm_boundary_residual.is_some_and(|r| r <= a.alm_tol);
    }
    Ok(!a.common.check || ok)
}

fn cmd_eigen(a: &EigenArgs) -> Outcome {
    let problem = match a.problem {
        EigenProblemArg::Neumann => Problem::EigenNeumann,
        EigenProblemArg::Dirichlet => Problem::EigenDirichlet,
    };
    let mut cfg = a.common.config(problem);
    cfg.count = a.count;
    let run = run_level(&cfg, a.level)?;
    dump(&run, &a.dump_matrices)?;
    let e = run.eigen.as_ref().expect("eigen run");
    output::spectrum_csv(&a.common.out("spectrum.csv")?, &e.eigenvalues)?;
    output::write_json(&a.common.out("report.json")?, &run.report)?;
    for (i, g) in e.eigenvalues.iter().enumerate() {
        println!("{i} {g}");
    }
    let ok = match problem {
        Problem::EigenNeumann => e.eigenvalues.len() < 2 || e.eigenvalues[0].abs() < 1e-8 * e.eigenvalues[1],
        _ => e.eigenvalues.iter().all(|&g| g > 0.0),
    };
    Ok(!a.common.check || ok)
}

type Column = fn(&ConvergenceRow) -> Option<f64>;

fn slopes(rows: &[ConvergenceRow]) -> Vec<(String, f64)> {
    let cols: [(&str, Column); 3] = [
        ("err_pim", |r| r.err_pim),
        ("err_fem", |r| r.err_fem),
        ("pim_vs_fem", |r| r.pim_vs_fem),
    ];
    cols.iter()
        .filter_map(|(name, get)| {
            let pts: Option<Vec<(f64, f64)>> = rows.iter().map(|r| get(r).map(|e| (r.h, e))).collect();
            let (h, e): (Vec<f64>, Vec<f64>) = pts?.into_iter().unzip();
            loglog_slope(&h, &e).ok().map(|s| (name.to_string(), s))
        })
        .collect()
}

fn strictly_decreasing(v: impl Iterator<Item = Option<f64>>) -> bool {
    let v: Vec<f64> = v.flatten().collect();
    v.windows(2).all(|w| w[1] < w[0])
}

fn write_study(
    common: &CommonArgs,
    name: &str,
    cfg: &ExperimentConfig,
    rows: &[ConvergenceRow],
) -> Result<Vec<(String, f64)>> {
    let s = slopes(rows);
    let mut text = Vec::new();
    output::convergence_csv(&mut text, rows)?;
    fs::write(common.out(&format!("{name}.csv"))?, &text)?;
    output::write_json(
        &common.out(&format!("{name}.json"))?,
        &output::ConvergenceReport::new(cfg, rows, s.clone()),
    )?;
    std::io::stdout().write_all(&text)?;
    for (col, slope) in &s {
        println!("slope({col}) = {slope:.4}");
    }
    Ok(s)
}

fn cmd_convergence(a: &ConvergenceArgs) -> Outcome {
    let mut cfg = a.common.config(a.problem);
    cfg.alm.max_iter = a.max_iter;
    let rows = convergence_study(&cfg, a.levels, a.fem_compare, a.index)?;
    let s = write_study(&a.common, "convergence", &cfg, &rows)?;
    let mut ok = strictly_decreasing(rows.iter().map(|r| r.err_pim));
    if let Some(min) = a.min_slope {
        ok &= s.iter().any(|(c, v)| c == "err_pim" && *v >= min);
    }
    Ok(!a.common.check || ok)
}

fn cmd_compare_fem(a: &CompareArgs) -> Outcome {
    let problem = match a.problem {
        EigenProblemArg::Neumann => Problem::Neumann,
        EigenProblemArg::Dirichlet => Problem::Dirichlet,
    };
    let cfg = a.common.config(problem);
    let rows = convergence_study(&cfg, a.levels, true, 0)?;
    write_study(&a.common, "compare_fem", &cfg, &rows)?;
    Ok(!a.common.check || strictly_decreasing(rows.iter().map(|r| r.pim_vs_fem)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "pim",
            "solve",
            "--domain",
            "disk",
            "--problem",
            "dirichlet-alm",
            "--beta",
            "1",
            "--max-iter",
            "100",
            "--kernel",
            "compact",
            "--t-factor",
            "0.75",
            "--no-snap",
        ])
        .unwrap();
        let Command::Solve(s) = cli.command else { panic!() };
        assert_eq!(s.problem, Problem::DirichletAlm);
        assert_eq!(s.common.kernel, KernelFamily::CompactPoly);
        let cfg = s.common.config(s.problem);
        assert!(!cfg.snap);
        assert_eq!(cfg.beta, 1.0);
        assert!(Cli::try_parse_from(["pim", "solve", "--kernel", "cubic"]).is_err());
    }
}
