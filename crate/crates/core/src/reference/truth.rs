//! Analytic ground truths on the unit disk and ball.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_zero, BesselKind};
use crate::error::{Error, Result};
use crate::geometry::{norm, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialDomain {
    Disk,
    Ball,
}

/// `u = cos 2πr` on the unit disk or ball, with `f = -Δu` and its boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadialTruth {
    pub domain: RadialDomain,
}

impl RadialTruth {
    pub fn new(domain: RadialDomain) -> Self {
        Self { domain }
    }

    pub fn dim(&self) -> usize {
        match self.domain {
            RadialDomain::Disk => 2,
            RadialDomain::Ball => 3,
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        (2.0 * PI * r).cos()
    }

    /// `4π² cos 2πr + 2π (k-1) sin(2πr)/r`; the quotient uses its Taylor
    /// series near the origin, where `f(0) = 4π² k`.
    pub fn f(&self, r: f64) -> f64 {
        let k = self.dim() as f64;
        let x = 2.0 * PI * r;
        4.0 * PI * PI * x.cos() + 2.0 * PI * (k - 1.0) * 2.0 * PI * sinc(x)
    }

    /// `∂u/∂r`, the outward normal derivative on spheres about the origin.
    pub fn du_dr(&self, r: f64) -> f64 {
        -2.0 * PI * (2.0 * PI * r).sin()
    }

    /// Neumann data on the unit sphere: `-2π sin 2π = 0`.
    pub fn neumann_g(&self) -> f64 {
        0.0
    }

    /// Dirichlet data on the unit sphere: `cos 2π = 1`.
    pub fn dirichlet_g(&self) -> f64 {
        1.0
    }

    pub fn u_at(&self, p: &Point) -> f64 {
        self.u(norm(p))
    }

    pub fn f_at(&self, p: &Point) -> f64 {
        self.f(norm(p))
    }

    pub fn sample_u(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|p| self.u_at(p)).collect()
    }

    pub fn sample_f(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|p| self.f_at(p)).collect()
    }
}

/// `sin(x)/x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x.sin() / x
    }
}

/// Laplacian eigenvalues of the unit disk, ascending, with multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskSpectrum {
    /// `j_{n,m}²`, doubled for `n ≥ 1`.
    pub dirichlet: Vec<f64>,
    /// `0` followed by `j'_{n,m}²`, doubled for `n ≥ 1`.
    pub neumann: Vec<f64>,
}

impl DiskSpectrum {
    /// Largest supported `count`: every eigenvalue below `j_{21,1}²` is
    /// enumerated, which covers well over this many.
    pub const MAX_COUNT: usize = 120;

    /// The first `count` eigenvalues of each problem.
    pub fn new(count: usize) -> Result<Self> {
        if count > Self::MAX_COUNT {
            return Err(Error::InvalidInput(format!(
                "disk spectrum limited to {} eigenvalues (asked for {count})",
                Self::MAX_COUNT
            )));
        }
        let collect = |kind: BesselKind| -> Result<Vec<f64>> {
            let mut v = Vec::new();
            for n in 0..=20 {
                for m in 1..=20 {
                    let z = bessel_zero(n, m, kind)?;
                    let mult = if n == 0 { 1 } else { 2 };
                    v.extend(std::iter::repeat_n(z * z, mult));
                }
            }
            v.sort_by(f64::total_cmp);
            Ok(v)
        };
        let mut dirichlet = collect(BesselKind::J)?;
        let mut neumann = collect(BesselKind::Jprime)?;
        neumann.insert(0, 0.0);
        dirichlet.truncate(count);
        neumann.truncate(count);
        Ok(Self { dirichlet, neumann })
    }
}
