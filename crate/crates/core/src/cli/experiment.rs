//! The experiment pipeline behind the CLI: sample a domain at a refinement
//! level, obtain weights, choose the bandwidth, assemble, solve, and measure.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, PimSystem};
use crate::error::{Error, Result};
use crate::geometry::{
    generate_ball_mesh_divisions, generate_circle_cloud, generate_disk_mesh, generate_two_hole_mesh, io, mesh_to_cloud,
    subdivide_midpoint, DomainSpec, Point, PointCloud, SimplicialMesh, TwoHoleSpec,
};
use crate::kernel::{default_t_factor, select_bandwidth, BoundaryKind, KernelFamily, KernelSpec};
use crate::reference::{
    fem_eigen, fem_solve, weighted_l2_error, DiskSpectrum, FemProblem, RadialDomain, RadialTruth, FEM_EIGEN_DENSE_LIMIT,
};
use crate::solve::{
    alm_dirichlet, eigen_dirichlet, eigen_neumann, neumann_residual, poisson_dirichlet, poisson_neumann, AlmOptions,
    EigenOptions, EigenResult, LinearMethod, SolveOptions,
};
use crate::weights::{average_neighbor_distance, estimate_weights, WeightEstimateConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Rings of the coarsest disk mesh (721 vertices).
pub const DISK_BASE_RINGS: usize = 15;
/// Edge divisions of the coarsest ball mesh (2625 vertices).
pub const BALL_BASE_DIVISIONS: usize = 12;
/// Divisions added per ball level: 12, 16, 20, 24 give 2625 … 19649 vertices,
/// evenly spaced in `1/h`.
pub const BALL_DIVISION_STEP: usize = 4;
/// Target spacing of the coarsest two-hole mesh.
pub const TWO_HOLE_BASE_H: f64 = 0.1;
/// Points on the coarsest circle; doubled per level.
pub const CIRCLE_BASE_POINTS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Unit disk, polar mesh refined by midpoint subdivision.
    Disk,
    /// Unit ball, structured tetrahedral mesh.
    Ball,
    /// Unit disk with two circular holes.
    TwoHole,
    /// Unit circle as a closed curve.
    Circle,
    /// OFF/TET mesh or PTS cloud given by `--input`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Neumann,
    Dirichlet,
    DirichletAlm,
    EigenNeumann,
    EigenDirichlet,
}

impl Problem {
    pub fn boundary_kind(self) -> BoundaryKind {
        match self {
            Problem::Neumann | Problem::EigenNeumann => BoundaryKind::Neumann,
            _ => BoundaryKind::Dirichlet,
        }
    }

    pub fn is_eigen(self) -> bool {
        matches!(self, Problem::EigenNeumann | Problem::EigenDirichlet)
    }

    fn fem(self) -> FemProblem {
        match self.boundary_kind() {
            BoundaryKind::Neumann => FemProblem::Neumann,
            BoundaryKind::Dirichlet => FemProblem::Dirichlet,
        }
    }
}

/// Everything that determines a run. Serialized into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    pub input: Option<PathBuf>,
    pub problem: Problem,
    pub kernel: KernelFamily,
    /// `√t / δ`; `None` picks the per-problem default.
    pub t_factor: Option<f64>,
    /// Explicit `t`, overriding `t_factor`.
    pub t: Option<f64>,
    /// Use `C_t = (4πt)^{-k/2}` instead of `C_t = 1`.
    pub heat_normalized: bool,
    pub beta: f64,
    pub count: usize,
    /// Recorded for reproducibility; the built-in samplers are deterministic.
    pub seed: u64,
    pub snap: bool,
    pub estimate: bool,
    /// Intrinsic dimension override for clouds.
    pub k: Option<usize>,
    pub nn: usize,
    pub alm: AlmOptions,
    pub solve: SolveOptions,
    pub eigen: EigenOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainKind::Disk,
            input: None,
            problem: Problem::Neumann,
            kernel: KernelFamily::Gaussian,
            t_factor: None,
            t: None,
            heat_normalized: false,
            beta: 1e-4,
            count: 10,
            seed: 0,
            snap: true,
            estimate: false,
            k: None,
            nn: 10,
            alm: AlmOptions::default(),
            solve: SolveOptions::default(),
            eigen: EigenOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive (got {v})")))
            }
        };
        positive("beta", self.beta)?;
        positive("solver tolerance", self.solve.tol)?;
        if let Some(f) = self.t_factor {
            positive("t-factor", f)?;
        }
        if let Some(t) = self.t {
            positive("t", t)?;
        }
        if self.nn == 0 || self.count == 0 {
            return Err(Error::Config("nn and count must be at least 1".into()));
        }
        if self.domain == DomainKind::File && self.input.is_none() {
            return Err(Error::Config("--domain file needs --input".into()));
        }
        Ok(())
    }

    fn spec(&self) -> DomainSpec {
        let file = || DomainSpec::File(self.input.clone().unwrap_or_default());
        if !self.snap {
            return file();
        }
        match self.domain {
            DomainKind::Disk => DomainSpec::UnitDisk,
            DomainKind::Ball => DomainSpec::UnitBall,
            DomainKind::TwoHole => DomainSpec::TwoHolePlanar(TwoHoleSpec::default()),
            DomainKind::Circle => DomainSpec::UnitCircleCurve,
            DomainKind::File => file(),
        }
    }
}

/// A sampled domain at one refinement level.
#[derive(Debug, Clone)]
pub struct Sample {
    pub level: usize,
    pub mesh: Option<SimplicialMesh>,
    pub cloud: PointCloud,
    /// Longest mesh edge (δ for mesh-free inputs).
    pub h: f64,
    pub delta: f64,
}

fn refine(mut mesh: SimplicialMesh, spec: &DomainSpec, level: usize) -> Result<SimplicialMesh> {
    for _ in 0..level {
        mesh = subdivide_midpoint(&mesh, spec)?;
    }
    Ok(mesh)
}

/// Samples the configured domain at `level` and fills in weights and δ.
pub fn build_sample(cfg: &ExperimentConfig, level: usize) -> Result<Sample> {
    let spec = cfg.spec();
    let mesh = match cfg.domain {
        DomainKind::Disk => Some(refine(generate_disk_mesh(DISK_BASE_RINGS)?, &spec, level)?),
        DomainKind::Ball => Some(generate_ball_mesh_divisions(
            BALL_BASE_DIVISIONS + BALL_DIVISION_STEP * level,
        )?),
        DomainKind::TwoHole => {
            let shape = DomainSpec::TwoHolePlanar(TwoHoleSpec::default());
            Some(refine(generate_two_hole_mesh(&shape, TWO_HOLE_BASE_H)?, &spec, level)?)
        }
        DomainKind::Circle => None,
        DomainKind::File => {
            let path = cfg.input.as_ref().expect("validated");
            if is_cloud_file(path) {
                if level > 0 {
                    return Err(Error::Unsupported("point-cloud inputs cannot be refined".into()));
                }
                None
            } else {
                Some(refine(io::load_mesh(path)?, &spec, level)?)
            }
        }
    };
    let mut cloud = match (&mesh, cfg.domain) {
        (Some(m), _) => mesh_to_cloud(m)?,
        (None, DomainKind::Circle) => {
            // Equal spacing: every point owns an arc of length 2π/n.
            let n = CIRCLE_BASE_POINTS << level;
            generate_circle_cloud(n)?.with_weights(vec![2.0 * PI / n as f64; n], vec![])?
        }
        (None, _) => io::load_cloud(cfg.input.as_ref().expect("validated"))?,
    };
    let k = cfg.k.unwrap_or(cloud.intrinsic_dim());
    let delta = if cfg.estimate {
        let mut wc = WeightEstimateConfig::for_dim(k);
        wc.nn_count = cfg.nn;
        let est = estimate_weights(cloud.points(), cloud.boundary(), k, &wc)?;
        cloud.set_weights(est.volume, est.boundary)?;
        est.delta
    } else {
        if !cloud.has_weights() {
            return Err(Error::WeightsRequired(
                "the cloud has no V/A weights; pass --estimate to estimate them from the points".into(),
            ));
        }
        average_neighbor_distance(cloud.points(), k, cfg.nn)?
    };
    let h = mesh.as_ref().map_or(delta, SimplicialMesh::max_edge_length);
    Ok(Sample {
        level,
        mesh,
        cloud,
        h,
        delta,
    })
}

pub fn is_cloud_file(path: &std::path::Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pts"))
}

/// The kernel for a sample: `t = (factor · δ)²` unless `t` is given.
pub fn resolve_kernel(cfg: &ExperimentConfig, sample: &Sample) -> Result<(KernelSpec, Option<f64>)> {
    let k = sample.cloud.intrinsic_dim();
    let (t, factor) = match cfg.t {
        Some(t) => (t, None),
        None => {
            let f = cfg
                .t_factor
                .unwrap_or_else(|| default_t_factor(k, cfg.problem.boundary_kind()));
            (select_bandwidth(sample.delta, f)?, Some(f))
        }
    };
    let mut spec = KernelSpec::new(cfg.kernel, t)?;
    if cfg.heat_normalized {
        spec = spec.heat_normalized(k)?;
    }
    Ok((spec, factor))
}

/// Manufactured data for a domain: right-hand side, boundary data for both
/// problem types, and the exact solution when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manufactured {
    /// `u = cos 2πr` on the unit disk or ball.
    Radial(RadialTruth),
    /// `u = sin πx · cos πy` on planar domains with analytic normals.
    Wave,
    /// `u = x` on the unit circle, an eigenfunction with `-Δu = u`.
    CircleMode,
    /// `f = 1`, `g = 0`; no exact solution.
    Constant,
}

impl Manufactured {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        match cfg.domain {
            DomainKind::Disk => Manufactured::Radial(RadialTruth::new(RadialDomain::Disk)),
            DomainKind::Ball => Manufactured::Radial(RadialTruth::new(RadialDomain::Ball)),
            DomainKind::TwoHole => Manufactured::Wave,
            DomainKind::Circle => Manufactured::CircleMode,
            DomainKind::File => Manufactured::Constant,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Manufactured::Radial(_) => "cos(2 pi r)",
            Manufactured::Wave => "sin(pi x) cos(pi y)",
            Manufactured::CircleMode => "x",
            Manufactured::Constant => "f = 1, g = 0",
        }
    }

    pub fn u(self, p: &Point) -> Option<f64> {
        match self {
            Manufactured::Radial(t) => Some(t.u_at(p)),
            Manufactured::Wave => Some((PI * p[0]).sin() * (PI * p[1]).cos()),
            Manufactured::CircleMode => Some(p[0]),
            Manufactured::Constant => None,
        }
    }

    pub fn f(self, p: &Point) -> f64 {
        match self {
            Manufactured::Radial(t) => t.f_at(p),
            Manufactured::Wave => 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
            Manufactured::CircleMode => p[0],
            Manufactured::Constant => 1.0,
        }
    }

    fn neumann_g(self, p: &Point, spec: &DomainSpec) -> f64 {
        match self {
            Manufactured::Radial(t) => t.du_dr(crate::geometry::norm(p)),
            Manufactured::Wave => match spec.outward_normal(p) {
                Some(n) => {
                    let gx = PI * (PI * p[0]).cos() * (PI * p[1]).cos();
                    let gy = -PI * (PI * p[0]).sin() * (PI * p[1]).sin();
                    gx * n[0] + gy * n[1]
                }
                None => 0.0,
            },
            Manufactured::CircleMode | Manufactured::Constant => 0.0,
        }
    }

    fn dirichlet_g(self, p: &Point) -> f64 {
        self.u(p).unwrap_or(0.0)
    }
}

/// `(f, g)` sampled on a cloud for the given boundary type.
pub fn problem_data(m: Manufactured, cloud: &PointCloud, kind: BoundaryKind) -> (Vec<f64>, Vec<f64>) {
    let f = cloud.points().iter().map(|p| m.f(p)).collect();
    // Normals always come from the unit disk/ball or the default two-hole shape.
    let spec = DomainSpec::TwoHolePlanar(TwoHoleSpec::default());
    let g = cloud
        .boundary_points()
        .iter()
        .map(|p| match kind {
            BoundaryKind::Neumann => m.neumann_g(p, &spec),
            BoundaryKind::Dirichlet => m.dirichlet_g(p),
        })
        .collect();
    (f, g)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sample_s: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
}

/// The resolved parameter set of a run: enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub config: ExperimentConfig,
    pub level: usize,
    pub n: usize,
    pub m: usize,
    pub intrinsic_dim: usize,
    pub h: f64,
    pub delta: f64,
    pub t: f64,
    pub sqrt_t: f64,
    pub t_factor: Option<f64>,
    pub kernel: KernelSpec,
    pub support_radius: f64,
    pub data: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub relative_residual: f64,
    pub method: Option<LinearMethod>,
    pub multiplier: Option<f64>,
    /// Relative weighted L2 error against the exact solution (constant-adjusted
    /// for Neumann problems).
    pub error: Option<f64>,
    /// V-weighted residual of the exact solution in the discrete Neumann equation.
    pub exact_solution_residual: Option<f64>,
    pub alm_iterations: Option<usize>,
    pub alm_boundary_residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub eigenvalues: Vec<f64>,
    pub max_imag_part: f64,
    /// Exact eigenvalues of the same problem, when known.
    pub exact: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub params: ResolvedParams,
    pub solve: Option<SolveSummary>,
    pub eigen: Option<EigenSummary>,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

/// A finished run with its vectors.
#[derive(Debug, Clone)]
pub struct Run {
    pub sample: Sample,
    pub system: PimSystem,
    pub report: RunReport,
    pub u: Option<Vec<f64>>,
    pub eigen: Option<EigenResult>,
    pub alm_history: Option<Vec<f64>>,
}

/// Samples, assembles and solves one level.
pub fn run_level(cfg: &ExperimentConfig, level: usize) -> Result<Run> {
    cfg.validate()?;
    let clock = Instant::now();
    let sample = build_sample(cfg, level)?;
    let sample_s = clock.elapsed().as_secs_f64();
    run_on_sample(cfg, sample, sample_s)
}

pub fn run_on_sample(cfg: &ExperimentConfig, sample: Sample, sample_s: f64) -> Result<Run> {
    let (kernel, t_factor) = resolve_kernel(cfg, &sample)?;
    let clock = Instant::now();
    let system = assemble(&sample.cloud, &kernel)?;
    let assembly_s = clock.elapsed().as_secs_f64();
    let data = Manufactured::for_config(cfg);
    let params = ResolvedParams {
        config: cfg.clone(),
        level: sample.level,
        n: sample.cloud.len(),
        m: sample.cloud.boundary_len(),
        intrinsic_dim: sample.cloud.intrinsic_dim(),
        h: sample.h,
        delta: sample.delta,
        t: kernel.t,
        sqrt_t: kernel.t.sqrt(),
        t_factor,
        kernel,
        support_radius: system.support_radius(),
        data: data.name().into(),
    };
    let clock = Instant::now();
    let mut run = Run {
        report: RunReport {
            schema_version: SCHEMA_VERSION,
            params,
            solve: None,
            eigen: None,
            timings: Timings {
                sample_s,
                assembly_s,
                solve_s: 0.0,
            },
            warnings: system.warnings().to_vec(),
        },
        sample,
        system,
        u: None,
        eigen: None,
        alm_history: None,
    };
    if cfg.problem.is_eigen() {
        solve_eigen(cfg, &mut run)?;
    } else {
        solve_poisson(cfg, data, &mut run)?;
    }
    run.report.timings.solve_s = clock.elapsed().as_secs_f64();
    Ok(run)
}

fn exact_on(data: Manufactured, cloud: &PointCloud) -> Option<Vec<f64>> {
    cloud.points().iter().map(|p| data.u(p)).collect()
}

fn solve_poisson(cfg: &ExperimentConfig, data: Manufactured, run: &mut Run) -> Result<()> {
    let kind = cfg.problem.boundary_kind();
    let cloud = &run.sample.cloud;
    let sys = &run.system;
    let (f, g) = problem_data(data, cloud, kind);
    let exact = exact_on(data, cloud);
    let mut summary = SolveSummary::default();
    let report = match cfg.problem {
        Problem::Neumann => {
            if let Some(ex) = &exact {
                summary.exact_solution_residual = Some(neumann_residual(sys, ex, &f, &g)?);
            }
            poisson_neumann(sys, &f, &g, &cfg.solve)?
        }
        Problem::Dirichlet => poisson_dirichlet(sys, &f, &g, cfg.beta, &cfg.solve)?,
        Problem::DirichletAlm => {
            let (report, state) = alm_dirichlet(sys, &f, &g, cfg.beta, &cfg.alm, &cfg.solve)?;
            summary.alm_iterations = Some(state.boundary_residual_history.len());
            summary.alm_boundary_residual = state.boundary_residual_history.last().copied();
            run.alm_history = Some(state.boundary_residual_history);
            report
        }
        _ => unreachable!("eigen problems handled separately"),
    };
    summary.iterations = report.iterations;
    summary.relative_residual = report.relative_residual;
    summary.method = Some(report.method);
    summary.multiplier = report.multiplier;
    if let Some(ex) = &exact {
        summary.error = Some(weighted_l2_error(
            &report.u,
            ex,
            sys.volume(),
            kind == BoundaryKind::Neumann,
        )?);
    }
    run.u = Some(report.u);
    run.report.solve = Some(summary);
    Ok(())
}

fn solve_eigen(cfg: &ExperimentConfig, run: &mut Run) -> Result<()> {
    let sys = &run.system;
    let result = match cfg.problem {
        Problem::EigenNeumann => eigen_neumann(sys, cfg.count, &cfg.eigen)?,
        _ => eigen_dirichlet(sys, cfg.count, cfg.beta, &cfg.eigen)?,
    };
    let exact = if cfg.domain == DomainKind::Disk && cfg.snap && cfg.count <= DiskSpectrum::MAX_COUNT {
        let s = DiskSpectrum::new(cfg.count)?;
        Some(if cfg.problem == Problem::EigenNeumann {
            s.neumann
        } else {
            s.dirichlet
        })
    } else {
        None
    };
    run.report.eigen = Some(EigenSummary {
        eigenvalues: result.eigenvalues.clone(),
        max_imag_part: result.max_imag_part,
        exact,
    });
    run.eigen = Some(result);
    Ok(())
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    /// PIM error against the exact solution (or exact eigenvalue).
    pub err_pim: Option<f64>,
    /// FEM error against the same reference.
    pub err_fem: Option<f64>,
    /// `‖u_PIM - u_FEM‖ / ‖u_FEM‖` (or eigenvalue difference).
    pub pim_vs_fem: Option<f64>,
    /// Tracked eigenvalue for eigen studies.
    pub eigenvalue: Option<f64>,
    pub fem_eigenvalue: Option<f64>,
    pub exact_eigenvalue: Option<f64>,
}

/// Runs `levels` refinement levels and compares each with the exact solution
/// and, when `fem` is set, with P1 finite elements on the same mesh.
/// For eigen problems `index` selects the tracked eigenvalue (0-based, the
/// Neumann zero eigenvalue included).
pub fn convergence_study(
    cfg: &ExperimentConfig,
    levels: usize,
    fem: bool,
    index: usize,
) -> Result<Vec<ConvergenceRow>> {
    if levels == 0 {
        return Err(Error::Config("levels must be at least 1".into()));
    }
    let mut cfg = cfg.clone();
    if cfg.problem.is_eigen() {
        cfg.count = cfg.count.max(index + 1);
    }
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let run = run_level(&cfg, level)?;
        log::info!("level {level}: n = {}", run.sample.cloud.len());
        rows.push(convergence_row(&cfg, &run, fem, index)?);
    }
    Ok(rows)
}

fn convergence_row(cfg: &ExperimentConfig, run: &Run, fem: bool, index: usize) -> Result<ConvergenceRow> {
    let mut row = ConvergenceRow {
        level: run.sample.level,
        n: run.sample.cloud.len(),
        h: run.sample.h,
        err_pim: None,
        err_fem: None,
        pim_vs_fem: None,
        eigenvalue: None,
        fem_eigenvalue: None,
        exact_eigenvalue: None,
    };
    let mesh = match (fem, &run.sample.mesh) {
        (false, _) => None,
        (true, Some(m)) => Some(m),
        (true, None) => return Err(Error::Unsupported("FEM comparison needs a mesh".into())),
    };
    if cfg.problem.is_eigen() {
        let gamma = run.eigen.as_ref().expect("eigen run").eigenvalues[index];
        row.eigenvalue = Some(gamma);
        if let Some(exact) = run.report.eigen.as_ref().and_then(|e| e.exact.as_ref()) {
            row.exact_eigenvalue = Some(exact[index]);
            row.err_pim = Some((gamma - exact[index]).abs());
        }
        if let Some(mesh) = mesh {
            if mesh.vertices.len() > FEM_EIGEN_DENSE_LIMIT {
                log::warn!("skipping FEM eigenvalues at level {}: mesh too large", row.level);
            } else {
                let fe = fem_eigen(mesh, cfg.problem.fem(), index + 1)?.eigenvalues[index];
                row.fem_eigenvalue = Some(fe);
                row.pim_vs_fem = Some((gamma - fe).abs() / fe.abs().max(f64::MIN_POSITIVE));
                row.err_fem = row.exact_eigenvalue.map(|x| (fe - x).abs());
            }
        }
        return Ok(row);
    }
    let data = Manufactured::for_config(cfg);
    row.err_pim = run.report.solve.as_ref().and_then(|s| s.error);
    if let Some(mesh) = mesh {
        let kind = cfg.problem.boundary_kind();
        let cloud = &run.sample.cloud;
        let (f, g) = problem_data(data, cloud, kind);
        let u_fem = fem_solve(mesh, cfg.problem.fem(), &f, &g)?.u;
        let v = run.system.volume();
        let adjust = kind == BoundaryKind::Neumann;
        row.pim_vs_fem = Some(weighted_l2_error(
            run.u.as_ref().expect("poisson run"),
            &u_fem,
            v,
            adjust,
        )?);
        if let Some(ex) = exact_on(data, cloud) {
            row.err_fem = Some(weighted_l2_error(&u_fem, &ex, v, adjust)?);
        }
    }
    Ok(row)
}
