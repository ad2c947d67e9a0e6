//! C interface to the point integral method.
//!
//! Clouds and assembled systems are opaque handles created by `pim_*` calls
//! and released with the matching `*_free`. Every fallible call returns a
//! [`PimStatus`]; on failure `pim_last_error_message` describes the error on
//! the calling thread.
//!
//! Pointer contract for every function: handles come from this library and
//! are not yet freed; array arguments point to at least the stated number of
//! elements (they may be null when that number is zero); output pointers are
//! valid for writes. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pim::assembly::assemble;
use pim::geometry::{generate_disk_mesh, io, mesh_to_cloud, Point, PointCloud};
use pim::kernel::{KernelFamily, KernelSpec};
use pim::solve::{
    alm_dirichlet, eigen_dirichlet, eigen_neumann, poisson_dirichlet, poisson_neumann, AlmOptions, EigenOptions,
    SolveOptions, SolveReport,
};
use pim::weights::{average_neighbor_distance, estimate_weights, WeightEstimateConfig};
use pim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Unsupported = 5,
    WeightsRequired = 6,
    NotConverged = 7,
    Numerical = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PimKernel {
    Gaussian = 0,
    Compact = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PimBoundary {
    Neumann = 0,
    Dirichlet = 1,
}

/// Diagnostics of a linear solve. `multiplier` is NaN unless the mean-zero
/// constraint was imposed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PimSolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
    pub multiplier: f64,
}

/// A point cloud with optional quadrature weights.
pub struct PimCloud(PointCloud);

/// Assembled `L`, `I` and `B` for one cloud and kernel.
pub struct PimSystem(pim::assembly::PimSystem);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => PimStatus::Parse,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => PimStatus::Io,
            Error::Unsupported(_) | Error::DenseLimit { .. } => PimStatus::Unsupported,
            Error::WeightsRequired(_) => PimStatus::WeightsRequired,
            Error::NotConverged { .. } | Error::AlmDiverged { .. } => PimStatus::NotConverged,
            Error::NotPositiveDefinite(_) | Error::SpuriousImaginary { .. } | Error::Linalg(_) => PimStatus::Numerical,
            _ => PimStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PimStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PimStatus::InvalidArgument, msg.into())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording any error or panic for `pim_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            PimStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn publish<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_info(info: *mut PimSolveInfo, report: &SolveReport) {
    if let Some(info) = info.as_mut() {
        *info = PimSolveInfo {
            iterations: report.iterations,
            relative_residual: report.relative_residual,
            multiplier: report.multiplier.unwrap_or(f64::NAN),
        };
    }
}

fn check_len(name: &str, expected: usize, found: usize) -> Result<(), Failure> {
    if expected == found {
        Ok(())
    } else {
        Err(invalid(format!("{name} has length {found}, expected {expected}")))
    }
}

fn solve_options(tol: f64) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if tol > 0.0 {
        opts.tol = tol;
    }
    opts
}

/// Library version, e.g. `"0.1.0"`. The string is static.
#[no_mangle]
pub extern "C" fn pim_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains a nul byte"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null after a success.
/// Valid until the next `pim_*` call on the same thread.
#[no_mangle]
pub extern "C" fn pim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a `.pts` cloud or an `.off`/`.tet` mesh (whose vertices become the
/// cloud, with mesh weights).
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_load(path: *const c_char, out: *mut *mut PimCloud) -> PimStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not valid UTF-8"))?;
        let cloud = if path.to_ascii_lowercase().ends_with(".pts") {
            io::load_cloud(path)?
        } else {
            mesh_to_cloud(&io::load_mesh(path)?)?
        };
        publish(out, PimCloud(cloud))
    })
}

/// Builds a cloud from `n` points of `ambient_dim` coordinates each
/// (row-major) and `m` boundary point indices. The cloud has no weights.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_from_points(
    ambient_dim: usize,
    intrinsic_dim: usize,
    coords: *const f64,
    n: usize,
    boundary: *const usize,
    m: usize,
    out: *mut *mut PimCloud,
) -> PimStatus {
    guard(|| {
        if !(1..=3).contains(&ambient_dim) {
            return Err(invalid(format!("ambient_dim must be 1, 2 or 3 (got {ambient_dim})")));
        }
        let len = n
            .checked_mul(ambient_dim)
            .ok_or_else(|| invalid("point count overflows"))?;
        let coords = input(coords, len, "coords")?;
        let points: Vec<Point> = coords
            .chunks_exact(ambient_dim)
            .map(|c| {
                let mut p = [0.0; 3];
                p[..ambient_dim].copy_from_slice(c);
                p
            })
            .collect();
        let boundary = input(boundary, m, "boundary")?.to_vec();
        let cloud = PointCloud::new(ambient_dim, intrinsic_dim, points, boundary)?;
        publish(out, PimCloud(cloud))
    })
}

/// The vertices of the structured unit-disk mesh with `rings` rings, with
/// mesh weights.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_unit_disk(rings: usize, out: *mut *mut PimCloud) -> PimStatus {
    guard(|| publish(out, PimCloud(mesh_to_cloud(&generate_disk_mesh(rings)?)?)))
}

/// Number of points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_len(cloud: *const PimCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Number of boundary points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_boundary_len(cloud: *const PimCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.boundary_len())
}

/// Ambient dimension; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_ambient_dim(cloud: *const PimCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.ambient_dim())
}

/// Copies the coordinates (row-major, `len = n · ambient_dim`) into `out`.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_coordinates(cloud: *const PimCloud, out: *mut f64, len: usize) -> PimStatus {
    guard(|| {
        let c = &handle(cloud, "cloud")?.0;
        let d = c.ambient_dim();
        check_len("coordinate buffer", c.len() * d, len)?;
        let out = output(out, len, "out")?;
        for (dst, p) in out.chunks_exact_mut(d).zip(c.points()) {
            dst.copy_from_slice(&p[..d]);
        }
        Ok(())
    })
}

/// Copies the boundary point indices (`len = m`) into `out`.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_boundary_indices(cloud: *const PimCloud, out: *mut usize, len: usize) -> PimStatus {
    guard(|| {
        let c = &handle(cloud, "cloud")?.0;
        check_len("index buffer", c.boundary_len(), len)?;
        output(out, len, "out")?.copy_from_slice(c.boundary());
        Ok(())
    })
}

/// Copies the volume weights `V` (`n`) and boundary weights `A` (`m`).
/// Either output may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_weights(
    cloud: *const PimCloud,
    volume: *mut f64,
    n: usize,
    area: *mut f64,
    m: usize,
) -> PimStatus {
    guard(|| {
        let c = &handle(cloud, "cloud")?.0;
        let (v, a) = match (c.volume_weights(), c.boundary_weights()) {
            (Some(v), Some(a)) => (v, a),
            _ => return Err(Error::WeightsRequired("the cloud has no weights".into()).into()),
        };
        if !volume.is_null() {
            check_len("volume buffer", c.len(), n)?;
            output(volume, n, "volume")?.copy_from_slice(v);
        }
        if !area.is_null() {
            check_len("area buffer", c.boundary_len(), m)?;
            output(area, m, "area")?.copy_from_slice(a);
        }
        Ok(())
    })
}

/// Sets `V` (`n` values) and `A` (`m` values).
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_set_weights(
    cloud: *mut PimCloud,
    volume: *const f64,
    n: usize,
    area: *const f64,
    m: usize,
) -> PimStatus {
    guard(|| {
        let c = &mut cloud.as_mut().ok_or_else(|| null("cloud"))?.0;
        check_len("volume", c.len(), n)?;
        check_len("area", c.boundary_len(), m)?;
        let v = input(volume, n, "volume")?.to_vec();
        let a = input(area, m, "area")?.to_vec();
        c.set_weights(v, a)?;
        Ok(())
    })
}

/// Estimates `V` and `A` from the points using `nn` neighbours and stores
/// them on the cloud. Writes δ to `delta` when it is not null.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_estimate_weights(cloud: *mut PimCloud, nn: usize, delta: *mut f64) -> PimStatus {
    guard(|| {
        let c = &mut cloud.as_mut().ok_or_else(|| null("cloud"))?.0;
        let k = c.intrinsic_dim();
        let mut cfg = WeightEstimateConfig::for_dim(k);
        if nn > 0 {
            cfg.nn_count = nn;
        }
        let est = estimate_weights(c.points(), c.boundary(), k, &cfg)?;
        c.set_weights(est.volume, est.boundary)?;
        if let Some(d) = delta.as_mut() {
            *d = est.delta;
        }
        Ok(())
    })
}

/// δ: mean over points of the mean distance to the `nn` nearest neighbours.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_delta(cloud: *const PimCloud, nn: usize, out: *mut f64) -> PimStatus {
    guard(|| {
        let c = &handle(cloud, "cloud")?.0;
        let d = average_neighbor_distance(c.points(), c.intrinsic_dim(), nn)?;
        *out.as_mut().ok_or_else(|| null("out"))? = d;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pim_cloud_free(cloud: *mut PimCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Assembles the operators of a weighted cloud for kernel bandwidth `t` and
/// normalizer `c_t` (pass 0 for `(4πt)^{-k/2}`).
#[no_mangle]
pub unsafe extern "C" fn pim_system_assemble(
    cloud: *const PimCloud,
    kernel: PimKernel,
    t: f64,
    c_t: f64,
    out: *mut *mut PimSystem,
) -> PimStatus {
    guard(|| {
        let c = &handle(cloud, "cloud")?.0;
        let family = match kernel {
            PimKernel::Gaussian => KernelFamily::Gaussian,
            PimKernel::Compact => KernelFamily::CompactPoly,
        };
        let spec = KernelSpec::new(family, t)?;
        let spec = if c_t == 0.0 {
            spec.heat_normalized(c.intrinsic_dim())?
        } else {
            spec.with_normalizer(c_t)?
        };
        publish(out, PimSystem(assemble(c, &spec)?))
    })
}

/// Number of points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pim_system_n(system: *const PimSystem) -> usize {
    system.as_ref().map_or(0, |s| s.0.n())
}

/// Number of boundary points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pim_system_m(system: *const PimSystem) -> usize {
    system.as_ref().map_or(0, |s| s.0.m())
}

#[no_mangle]
pub unsafe extern "C" fn pim_system_free(system: *mut PimSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

struct Problem<'a> {
    sys: &'a pim::assembly::PimSystem,
    f: &'a [f64],
    g: &'a [f64],
    u: &'a mut [f64],
}

unsafe fn problem<'a>(
    system: *const PimSystem,
    f: *const f64,
    n: usize,
    g: *const f64,
    m: usize,
    u: *mut f64,
) -> Result<Problem<'a>, Failure> {
    let sys = &handle(system, "system")?.0;
    check_len("f", sys.n(), n)?;
    check_len("g", sys.m(), m)?;
    Ok(Problem {
        sys,
        f: input(f, n, "f")?,
        g: input(g, m, "g")?,
        u: output(u, n, "u")?,
    })
}

/// Solves the Neumann problem `-Δu = f`, `∂u/∂n = g` with `Σ V u = 0`.
/// `f` and `u` have `n` entries, `g` has `m`. `tol <= 0` uses the default.
/// `info` may be null.
#[no_mangle]
pub unsafe extern "C" fn pim_solve_neumann(
    system: *const PimSystem,
    f: *const f64,
    n: usize,
    g: *const f64,
    m: usize,
    tol: f64,
    u: *mut f64,
    info: *mut PimSolveInfo,
) -> PimStatus {
    guard(|| {
        let p = problem(system, f, n, g, m, u)?;
        let report = poisson_neumann(p.sys, p.f, p.g, &solve_options(tol))?;
        p.u.copy_from_slice(&report.u);
        write_info(info, &report);
        Ok(())
    })
}

/// Solves the Dirichlet problem `u = g` on the boundary through the Robin
/// penalty with parameter `beta`.
#[no_mangle]
pub unsafe extern "C" fn pim_solve_dirichlet(
    system: *const PimSystem,
    f: *const f64,
    n: usize,
    g: *const f64,
    m: usize,
    beta: f64,
    tol: f64,
    u: *mut f64,
    info: *mut PimSolveInfo,
) -> PimStatus {
    guard(|| {
        let p = problem(system, f, n, g, m, u)?;
        let report = poisson_dirichlet(p.sys, p.f, p.g, beta, &solve_options(tol))?;
        p.u.copy_from_slice(&report.u);
        write_info(info, &report);
        Ok(())
    })
}

/// Dirichlet problem by the augmented Lagrangian iteration: at most
/// `max_iter` penalty solves, stopping once the relative boundary residual
/// falls below `alm_tol`. Writes the iteration count to `alm_iterations`
/// when it is not null.
#[no_mangle]
pub unsafe extern "C" fn pim_solve_dirichlet_alm(
    system: *const PimSystem,
    f: *const f64,
    n: usize,
    g: *const f64,
    m: usize,
    beta: f64,
    max_iter: usize,
    alm_tol: f64,
    tol: f64,
    u: *mut f64,
    alm_iterations: *mut usize,
    info: *mut PimSolveInfo,
) -> PimStatus {
    guard(|| {
        let p = problem(system, f, n, g, m, u)?;
        let alm = AlmOptions { max_iter, tol: alm_tol };
        let (report, state) = alm_dirichlet(p.sys, p.f, p.g, beta, &alm, &solve_options(tol))?;
        p.u.copy_from_slice(&report.u);
        if let Some(k) = alm_iterations.as_mut() {
            *k = state.boundary_residual_history.len();
        }
        write_info(info, &report);
        Ok(())
    })
}

/// The `count` smallest eigenvalues of `-Δ` with the given boundary condition
/// (`beta` is used for Dirichlet only), ascending. When `vectors` is not null
/// it receives `count · n` values: eigenvector `k` occupies
/// `vectors[k·n .. (k+1)·n]`, normalized to `Σ v² V = 1`.
#[no_mangle]
pub unsafe extern "C" fn pim_eigen(
    system: *const PimSystem,
    boundary: PimBoundary,
    count: usize,
    beta: f64,
    values: *mut f64,
    vectors: *mut f64,
) -> PimStatus {
    guard(|| {
        let sys = &handle(system, "system")?.0;
        let values = output(values, count, "values")?;
        let opts = EigenOptions::default();
        let result = match boundary {
            PimBoundary::Neumann => eigen_neumann(sys, count, &opts)?,
            PimBoundary::Dirichlet => eigen_dirichlet(sys, count, beta, &opts)?,
        };
        values.copy_from_slice(&result.eigenvalues);
        if !vectors.is_null() {
            let n = sys.n();
            let len = count.checked_mul(n).ok_or_else(|| invalid("count · n overflows"))?;
            let out = output(vectors, len, "vectors")?;
            for (dst, v) in out.chunks_exact_mut(n).zip(&result.eigenvectors) {
                dst.copy_from_slice(v);
            }
        }
        Ok(())
    })
}
