use std::ffi::{CStr, CString};
use std::ptr;

use pim_ffi::*;

fn last_error() -> String {
    let p = pim_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Disk {
    cloud: *mut PimCloud,
    system: *mut PimSystem,
    points: Vec<f64>,
    boundary: Vec<usize>,
}

impl Disk {
    fn new(rings: usize, kernel: PimKernel) -> Self {
        unsafe {
            let mut cloud = ptr::null_mut();
            assert_eq!(pim_cloud_unit_disk(rings, &mut cloud), PimStatus::Ok);
            let n = pim_cloud_len(cloud);
            let m = pim_cloud_boundary_len(cloud);
            let d = pim_cloud_ambient_dim(cloud);
            let mut points = vec![0.0; n * d];
            assert_eq!(
                pim_cloud_coordinates(cloud, points.as_mut_ptr(), points.len()),
                PimStatus::Ok
            );
            let mut boundary = vec![0; m];
            assert_eq!(
                pim_cloud_boundary_indices(cloud, boundary.as_mut_ptr(), m),
                PimStatus::Ok
            );
            let mut delta = 0.0;
            assert_eq!(pim_cloud_delta(cloud, 10, &mut delta), PimStatus::Ok);
            let t = (0.5 * delta).powi(2);
            let mut system = ptr::null_mut();
            assert_eq!(pim_system_assemble(cloud, kernel, t, 1.0, &mut system), PimStatus::Ok);
            Disk {
                cloud,
                system,
                points,
                boundary,
            }
        }
    }

    fn xy(&self, i: usize) -> (f64, f64) {
        (self.points[2 * i], self.points[2 * i + 1])
    }
}

impl Drop for Disk {
    fn drop(&mut self) {
        unsafe {
            pim_system_free(self.system);
            pim_cloud_free(self.cloud);
        }
    }
}

fn wave(x: f64, y: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (pi * x).sin() * (pi * y).cos()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(pim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn dirichlet_solve_recovers_a_smooth_solution() {
    let disk = Disk::new(12, PimKernel::Gaussian);
    let n = unsafe { pim_system_n(disk.system) };
    let m = unsafe { pim_system_m(disk.system) };
    let pi2 = std::f64::consts::PI.powi(2);
    let f: Vec<f64> = (0..n).map(|i| 2.0 * pi2 * wave(disk.xy(i).0, disk.xy(i).1)).collect();
    let g: Vec<f64> = disk
        .boundary
        .iter()
        .map(|&i| wave(disk.xy(i).0, disk.xy(i).1))
        .collect();
    let mut u = vec![0.0; n];
    let mut info = PimSolveInfo {
        iterations: 0,
        relative_residual: f64::NAN,
        multiplier: 0.0,
    };
    let status = unsafe {
        pim_solve_dirichlet(
            disk.system,
            f.as_ptr(),
            n,
            g.as_ptr(),
            m,
            1e-4,
            0.0,
            u.as_mut_ptr(),
            &mut info,
        )
    };
    assert_eq!(status, PimStatus::Ok);
    assert!(pim_last_error_message().is_null());
    assert!(info.relative_residual <= 1e-8);
    assert!(info.multiplier.is_nan());
    let mut v = vec![0.0; n];
    assert_eq!(
        unsafe { pim_cloud_weights(disk.cloud, v.as_mut_ptr(), n, ptr::null_mut(), 0) },
        PimStatus::Ok
    );
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let exact = wave(disk.xy(i).0, disk.xy(i).1);
        num += (u[i] - exact).powi(2) * v[i];
        den += exact * exact * v[i];
    }
    let err = (num / den).sqrt();
    assert!(err < 0.1, "relative error {err}");
}

#[test]
fn neumann_and_alm_solutions_are_consistent() {
    let disk = Disk::new(10, PimKernel::Compact);
    let n = unsafe { pim_system_n(disk.system) };
    let m = unsafe { pim_system_m(disk.system) };
    let f = vec![1.0; n];
    let g = vec![0.0; m];
    let mut u = vec![0.0; n];
    let mut info = PimSolveInfo {
        iterations: 0,
        relative_residual: 0.0,
        multiplier: f64::NAN,
    };
    let status = unsafe {
        pim_solve_neumann(
            disk.system,
            f.as_ptr(),
            n,
            g.as_ptr(),
            m,
            0.0,
            u.as_mut_ptr(),
            &mut info,
        )
    };
    assert_eq!(status, PimStatus::Ok);
    // Constant data with zero flux is incompatible; the multiplier absorbs it.
    assert!(info.multiplier > 0.0);
    let mut v = vec![0.0; n];
    unsafe { pim_cloud_weights(disk.cloud, v.as_mut_ptr(), n, ptr::null_mut(), 0) };
    let mean: f64 = u.iter().zip(&v).map(|(a, w)| a * w).sum();
    assert!(mean.abs() < 1e-12, "Σ V u = {mean}");

    let zero_g = vec![0.0; m];
    let mut penalty = vec![0.0; n];
    let mut alm = vec![0.0; n];
    let mut iterations = 0;
    unsafe {
        assert_eq!(
            pim_solve_dirichlet(
                disk.system,
                f.as_ptr(),
                n,
                zero_g.as_ptr(),
                m,
                1e-6,
                1e-12,
                penalty.as_mut_ptr(),
                ptr::null_mut()
            ),
            PimStatus::Ok
        );
        assert_eq!(
            pim_solve_dirichlet_alm(
                disk.system,
                f.as_ptr(),
                n,
                zero_g.as_ptr(),
                m,
                0.1,
                200,
                1e-10,
                1e-12,
                alm.as_mut_ptr(),
                &mut iterations,
                ptr::null_mut(),
            ),
            PimStatus::Ok
        );
    }
    assert!(iterations > 1 && iterations <= 200);
    let scale = penalty.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let diff = penalty.iter().zip(&alm).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(diff < 1e-3 * scale, "diff {diff} scale {scale}");
}

#[test]
fn eigenpairs_are_returned_in_order() {
    let disk = Disk::new(8, PimKernel::Gaussian);
    let n = unsafe { pim_system_n(disk.system) };
    let count = 4;
    let mut values = vec![0.0; count];
    let mut vectors = vec![0.0; count * n];
    let status = unsafe {
        pim_eigen(
            disk.system,
            PimBoundary::Neumann,
            count,
            0.0,
            values.as_mut_ptr(),
            vectors.as_mut_ptr(),
        )
    };
    assert_eq!(status, PimStatus::Ok);
    assert!(values[0].abs() < 1e-8 * values[1]);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    // j'_{1,1}² ≈ 3.39 for the first nonzero pair.
    assert!((values[1] - 3.39).abs() < 0.5, "{values:?}");
    let mut v = vec![0.0; n];
    unsafe { pim_cloud_weights(disk.cloud, v.as_mut_ptr(), n, ptr::null_mut(), 0) };
    for k in 0..count {
        let norm: f64 = vectors[k * n..(k + 1) * n].iter().zip(&v).map(|(x, w)| x * x * w).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    let mut dirichlet = vec![0.0; 2];
    let status = unsafe {
        pim_eigen(
            disk.system,
            PimBoundary::Dirichlet,
            2,
            1e-4,
            dirichlet.as_mut_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(status, PimStatus::Ok);
    assert!(dirichlet[0] > 0.0 && (dirichlet[0] - 5.78).abs() < 1.0, "{dirichlet:?}");
}

#[test]
fn clouds_from_points_need_weights_before_assembly() {
    let h = 0.1;
    let side = 11;
    let coords: Vec<f64> = (0..side * side)
        .flat_map(|k| [(k / side) as f64 * h, (k % side) as f64 * h])
        .collect();
    let boundary: Vec<usize> = (0..side * side)
        .filter(|&k| k / side == 0 || k / side == side - 1 || k % side == 0 || k % side == side - 1)
        .collect();
    unsafe {
        let mut cloud = ptr::null_mut();
        let status = pim_cloud_from_points(
            2,
            2,
            coords.as_ptr(),
            side * side,
            boundary.as_ptr(),
            boundary.len(),
            &mut cloud,
        );
        assert_eq!(status, PimStatus::Ok);
        let mut system = ptr::null_mut();
        assert_eq!(
            pim_system_assemble(cloud, PimKernel::Gaussian, 0.01, 1.0, &mut system),
            PimStatus::WeightsRequired
        );
        assert!(system.is_null());
        assert!(last_error().contains("weights"));

        let mut delta = 0.0;
        assert_eq!(pim_cloud_estimate_weights(cloud, 0, &mut delta), PimStatus::Ok);
        assert!(delta > 0.0);
        let mut v = vec![0.0; side * side];
        assert_eq!(
            pim_cloud_weights(cloud, v.as_mut_ptr(), v.len(), ptr::null_mut(), 0),
            PimStatus::Ok
        );
        let center = (side / 2) * side + side / 2;
        assert!((v[center] - h * h).abs() < 1e-9);
        assert_eq!(
            pim_system_assemble(cloud, PimKernel::Gaussian, 0.01, 0.0, &mut system),
            PimStatus::Ok
        );
        assert_eq!(pim_system_n(system), side * side);
        pim_system_free(system);
        pim_cloud_free(cloud);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut cloud = ptr::null_mut();
        assert_eq!(pim_cloud_unit_disk(4, ptr::null_mut()), PimStatus::NullPointer);
        assert!(last_error().contains("null"));

        let missing = CString::new("/nonexistent/cloud.pts").unwrap();
        assert_eq!(pim_cloud_load(missing.as_ptr(), &mut cloud), PimStatus::Io);
        assert!(cloud.is_null());

        let dir = std::env::temp_dir().join(format!("pim-ffi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let bad = dir.join("bad.pts");
        std::fs::write(&bad, "PTS 2 2 3 0\n0 0\n1 nan\n").unwrap();
        let bad = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(pim_cloud_load(bad.as_ptr(), &mut cloud), PimStatus::Parse);
        assert!(last_error().contains("line"));
        std::fs::remove_dir_all(&dir).ok();

        let disk = Disk::new(4, PimKernel::Gaussian);
        let n = pim_system_n(disk.system);
        let m = pim_system_m(disk.system);
        let f = vec![0.0; n];
        let g = vec![0.0; m];
        let mut u = vec![0.0; n];
        let status = pim_solve_neumann(
            disk.system,
            f.as_ptr(),
            n - 1,
            g.as_ptr(),
            m,
            0.0,
            u.as_mut_ptr(),
            ptr::null_mut(),
        );
        assert_eq!(status, PimStatus::InvalidArgument);
        assert!(last_error().contains("expected"));

        let mut sys = ptr::null_mut();
        assert_eq!(
            pim_system_assemble(disk.cloud, PimKernel::Compact, -1.0, 1.0, &mut sys),
            PimStatus::InvalidArgument
        );
        assert_eq!(pim_cloud_len(ptr::null()), 0);
        pim_cloud_free(ptr::null_mut());
        pim_system_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pim.h")).unwrap();
    for name in [
        "pim_version",
        "pim_last_error_message",
        "pim_cloud_load",
        "pim_cloud_from_points",
        "pim_cloud_unit_disk",
        "pim_cloud_set_weights",
        "pim_cloud_estimate_weights",
        "pim_cloud_free",
        "pim_system_assemble",
        "pim_system_free",
        "pim_solve_neumann",
        "pim_solve_dirichlet",
        "pim_solve_dirichlet_alm",
        "pim_eigen",
        "typedef struct PimCloud PimCloud",
        "PIM_STATUS_WEIGHTS_REQUIRED",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
